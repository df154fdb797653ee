#pragma once

#include "diracbvp/conditions.hpp"
#include "diracbvp/geometry.hpp"
#include "diracbvp/grid.hpp"

namespace diracbvp {

struct SolveOptions {
  int grid_n = 64;
  double rank_tol = 1e-8;
  double eig_conv_tol = 1e-6;
};

/// Which subsystem a discrete assembly represents. Full is the 2x2 system
/// (formally selfadjoint geometries); Primal/Adjoint are the single-block
/// problems of an E != F operator (disk) and its formal adjoint.
enum class AssemblySide { Full, Primal, Adjoint };

struct AssembledMode {
  ModeProblem mode;
  Grid grid;
  AssemblySide side = AssemblySide::Full;
  Mat op;           // operator in weighted (W^{1/2}) coordinates
  Mat constraints;  // trace + apex/periodic rows, weighted coordinates
  int num_trace_rows = 0;   // leading rows of `constraints` from the condition
  int block_dim = 0;        // dim of the condition's block on the trace space
  int trace_dim = 0;
  bool block_selfadjoint = false;
  Eigen::VectorXd wdiag;    // quadrature-times-measure weights per unknown

  std::vector<int> boundary_rows;  // op rows the constraints substitute

  /// Row-equilibrated stack [op; constraints] for null space extraction.
  Mat stacked() const;
  /// Square pencil (A, B) with the boundary rows substituted; eigenvalues of
  /// the constrained operator solve A u = lambda B u.
  std::pair<Mat, Mat> pencil() const;
};

/// Discretize a mode problem and impose the condition's block on this mode's
/// trace coordinates as constraint rows. `condition` may be null for the
/// periodic circle. Throws if the grid is too coarse or a referenced line is
/// missing from the condition's spectrum.
AssembledMode assemble(const ModeProblem& mode, const Grid& grid,
                       const BoundaryCondition* condition,
                       AssemblySide side = AssemblySide::Full);

struct KernelResult {
  int dim = 0;
  bool flagged = false;     // accepted/rejected singular value gap < 10x
  double sigma_accept = 0;  // smallest kept singular value
  double sigma_reject = 0;  // largest discarded singular value
};
KernelResult kernel_dim(const AssembledMode& am, double tol = 1e-8);

struct EigenResult {
  Eigen::VectorXd eigenvalues;  // ascending, real parts
  double hermiticity_residual = 0.0;  // largest imaginary part kept
};
/// Eigenvalues of the constrained operator (boundary rows substituted).
/// Requires a selfadjoint block (checked at assembly); throws otherwise.
EigenResult eigenvalues(const AssembledMode& am);

/// |∫<D phi, psi> - ∫<phi, D psi> + boundary sigma pairing| by quadrature.
/// phi, psi are nodal 2-component sections (grid.size() x 2).
double greens_residual(const ModeProblem& mode, const Grid& grid,
                       const Mat& phi, const Mat& psi);

/// Relative residual of D^2 - (nabla*nabla + K) applied to a smooth nodal
/// section, certifying the separated coefficients.
double weitzenbock_residual(const ModeProblem& mode, const Grid& grid,
                            const Mat& phi);

struct KillingReport {
  double alpha = 0.0;
  double eigenvalue = 0.0;  // n * alpha
  double eigen_residual = 0.0;
  double norm_deviation = 0.0;
  double membership_residual = 0.0;
  bool trace_in_condition = false;
};
/// Integrate the radial Killing equation on the cap's lowest modes and test
/// the eigenvalue identity, length constancy, and trace membership.
KillingReport killing_check(const Geometry& geom, double alpha,
                            const BoundaryCondition& b,
                            const SolveOptions& opt = {});

/// Dim of the condition's block on the mode's trace coordinates (used by the
/// index engine to certify that the condition splits along modes).
int mode_block_dim(const ModeProblem& mode, const BoundaryCondition& b,
                   AssemblySide side);

nlohmann::json mode_result_json(const AssembledMode& am,
                                const KernelResult& kr,
                                const EigenResult* er);

}  // namespace diracbvp
