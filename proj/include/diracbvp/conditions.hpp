#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "diracbvp/spectrum.hpp"

namespace diracbvp {

/// The four-block decomposition of Def. of elliptic conditions: orthonormal
/// basis matrices over the truncated eigenbasis plus the graph map g given in
/// the (v_minus, v_plus) bases. cut is the reference a with
/// v_minus ⊕ w_minus ⊆ span{lambda <= cut}, v_plus ⊕ w_plus ⊆ span{lambda >= -cut}.
struct EllipticDecomposition {
  Mat v_minus, w_minus, v_plus, w_plus;
  Mat g;  // dim v_plus x dim v_minus
  double cut = 0.0;
};

struct BoundaryCondition {
  SpectrumPtr spec;
  EllipticDecomposition decomp;
  Mat subspace;  // orthonormal basis of B = w_plus ⊕ {v + g v}
  std::string tag;

  Eigen::Index dim() const { return subspace.cols(); }
};

// Constructor recipes.
struct GapsRecipe {
  double a = 0.0;
};
struct ApsRecipe {};
struct MapsRecipe {};
struct ChiralityRecipe {
  std::vector<int> signs;
};
struct TransmissionRecipe {};
struct CustomRecipe {
  EllipticDecomposition decomp;
  std::string label = "custom";
};
using BCRecipe = std::variant<GapsRecipe, ApsRecipe, MapsRecipe,
                              ChiralityRecipe, TransmissionRecipe,
                              CustomRecipe>;

/// Parse a CLI recipe string: "gaps:a=0.0" | "aps" | "maps"
/// | "chirality:+1,-1" | "transmission" | "custom:file=path.json".
BCRecipe parse_recipe(const std::string& text);

BoundaryCondition build_condition(SpectrumPtr spec, const BCRecipe& recipe);

/// Condition of a boundary chirality: B = {kernel part fixed by chi} ⊕
/// {phi + chi phi : phi in the negative block}. chi must be a hermitian
/// involution anticommuting with A (validated).
BoundaryCondition boundary_chirality_condition(SpectrumPtr spec, const Mat& chi,
                                               std::string tag);

/// chi = sigma * (sign grading of A, with the kernel graded along a split
/// L ⊕ sigma L): a boundary chirality that anticommutes with sigma, hence
/// selfadjoint. Needs a kernel split when ker A is nontrivial.
BoundaryCondition anticommuting_chirality_condition(SpectrumPtr spec,
                                                    double sign = 1.0);

/// B^ad = sigma(W_- ⊕ {v - g^* v : v in V_+}), assembled from the blocks.
BoundaryCondition adjoint_condition(const BoundaryCondition& b);

bool is_selfadjoint(const BoundaryCondition& b, double tol = 1e-10);

/// Normal form of a selfadjoint condition: lambda<0 block = V ⊕ W,
/// ker A = L ⊕ sigma L, selfadjoint g on V ⊕ L with
/// B = sigma W ⊕ {v + sigma g v : v in V ⊕ L}.
struct NormalForm {
  Mat V, W, L;
  Mat g;  // hermitian, on the [V | L] basis
  Mat reconstruct(const BoundarySpectrum& spec) const;
};
NormalForm normal_form(const BoundaryCondition& b, double tol = 1e-10);

struct EllipticityClause {
  std::string name;
  bool pass = false;
  double value = 0.0;
};
struct EllipticityReport {
  std::vector<EllipticityClause> clauses;
  double g_norm = 0.0, g_adjoint_norm = 0.0;
  int dim_w_minus = 0, dim_w_plus = 0;
  bool pass() const;
};
EllipticityReport ellipticity_check(const BoundaryCondition& b,
                                    double tol = 1e-10);

/// dim W_+ - dim W_- and the reference cut a, so that
/// ind D_B = ind D_{B(a)} + delta.
struct IndexOffset {
  long delta = 0;
  double reference_cut = 0.0;
};
IndexOffset index_offset(const BoundaryCondition& b);

/// dim(b2 / b1) for nested conditions b1 ⊆ b2; throws on containment failure.
long quotient_dim(const BoundaryCondition& b1, const BoundaryCondition& b2,
                  double tol = 1e-10);

/// Replace g by s*g (the deformation used in the index-offset theorem's
/// proof); s = 0 removes the graph coupling entirely.
BoundaryCondition scale_graph(const BoundaryCondition& b, double s);

enum class SymmetryClass { Selfadjoint, SymmetricNotSelfadjoint, NotSymmetric };
SymmetryClass classify_symmetry(const BoundaryCondition& b,
                                double tol = 1e-10);
std::string to_string(SymmetryClass c);

nlohmann::json condition_to_json(const BoundaryCondition& b);
BoundaryCondition condition_from_json(SpectrumPtr spec,
                                      const nlohmann::json& j);

}  // namespace diracbvp
