#pragma once

#include <limits>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "diracbvp/linalg.hpp"

namespace diracbvp {

/// Half-open interval [lo, hi); infinite endpoints allowed.
struct Interval {
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();

  bool contains(double x) const { return x >= lo && x < hi; }
  Interval intersect(const Interval& o) const {
    return {std::max(lo, o.lo), std::min(hi, o.hi)};
  }
  static Interval all() { return {}; }
  static Interval below(double a) {
    return {-std::numeric_limits<double>::infinity(), a};
  }
  static Interval at_least(double a) {
    return {a, std::numeric_limits<double>::infinity()};
  }
};

/// One eigenvalue of the adapted boundary operator A, with multiplicity and
/// the boundary connected component it lives on.
struct EigenLine {
  int id = 0;
  double lambda = 0.0;
  int mult = 1;
  int component = 0;
};

/// Unitary block mapping the +lambda eigencoefficients to the -lambda ones.
struct SigmaPair {
  double lambda = 0.0;  // > 0
  Mat block;            // size mult(-lambda-block) x mult(+lambda-block)
};

/// Coefficient action of sigma_D(nu^flat): pairs the ±lambda blocks and acts
/// on ker A by a unitary with square -1. The induced map on the -lambda block
/// is -block^H, so the composite satisfies sigma^2 = -1, sigma^* = -sigma.
struct SigmaAction {
  std::vector<SigmaPair> pairs;  // keyed by positive lambda, ascending
  Mat kernel;                    // on the lambda = 0 coefficients; may be 0x0
};

/// Coefficient vector of a boundary section in the truncated eigenbasis,
/// keyed by eigenline id; each entry has length mult.
using BoundaryCoeffs = std::map<int, Vec>;

enum class HybridKind { Check, Hat };

/// Truncated eigendecomposition of the adapted boundary operator A together
/// with the sigma_D(nu^flat) action. Immutable after construction; all
/// structural identities (±lambda symmetry, sigma^2 = -1, sigma A = -A sigma,
/// unitarity) are validated to 1e-12 at construction time.
class BoundarySpectrum {
 public:
  BoundarySpectrum(std::vector<EigenLine> lines, SigmaAction sigma);

  const std::vector<EigenLine>& lines() const { return lines_; }
  const EigenLine& line(int id) const;
  bool has_line(int id) const { return offsets_.count(id) != 0; }
  int total_dim() const { return total_dim_; }
  /// Offset of a line's coefficient block in the flat ordering (lines sorted
  /// by (lambda, id), slots consecutive).
  int offset(int id) const;

  /// Per-slot eigenvalue of A in flat ordering.
  const RVec& lambdas_flat() const { return lambdas_flat_; }
  /// Per-slot component label in flat ordering.
  const std::vector<int>& components_flat() const { return components_flat_; }
  /// Full sigma action as a total_dim x total_dim matrix.
  const Mat& sigma_flat() const { return sigma_flat_; }
  const SigmaAction& sigma() const { return sigma_; }

  int num_components() const { return num_components_; }
  std::vector<int> component_labels() const;

  double kernel_dim() const;  // mult-weighted count of lambda == 0 slots
  /// Mult-weighted number of eigenvalues in the half-open interval.
  int count_in(const Interval& I) const;
  /// Smallest positive eigenvalue; throws if none exists.
  double smallest_positive_lambda() const;

  Vec to_flat(const BoundaryCoeffs& phi) const;  // validates line ids
  BoundaryCoeffs from_flat(const Vec& v) const;

  /// Flat orthonormal basis columns for the slots with lambda in I.
  Mat slot_basis(const Interval& I) const;

  nlohmann::json to_json() const;
  static BoundarySpectrum from_json(const nlohmann::json& j);

 private:
  void validate() const;

  std::vector<EigenLine> lines_;
  SigmaAction sigma_;
  std::map<int, int> offsets_;
  int total_dim_ = 0;
  int num_components_ = 1;
  RVec lambdas_flat_;
  std::vector<int> components_flat_;
  Mat sigma_flat_;
};

using SpectrumPtr = std::shared_ptr<const BoundarySpectrum>;

/// Q_I: zero all coefficients on lines with lambda outside I.
BoundaryCoeffs spectral_projection(const BoundarySpectrum& spec,
                                   const Interval& I,
                                   const BoundaryCoeffs& phi);

/// Mixed-weight Sobolev norm with cut a. Check: weight (1+lambda^2)^{+1/2}
/// below the cut and (1+lambda^2)^{-1/2} from it on; Hat swaps the exponents.
double hybrid_norm(const BoundarySpectrum& spec, const BoundaryCoeffs& phi,
                   HybridKind kind, double a);

/// Apply sigma_D(nu^flat) to the coefficients.
BoundaryCoeffs sigma_apply(const BoundarySpectrum& spec,
                           const BoundaryCoeffs& phi);

/// Projectors onto the ±1 eigenspaces of the boundary chirality
/// chi = sum_j i eps_j sigma, one sign per boundary component. Requires sigma
/// to be block diagonal over components.
std::pair<Mat, Mat> chirality_split(const BoundarySpectrum& spec,
                                    const std::vector<int>& signs);

/// chi as a flat matrix (shared helper for the split and for conditions).
Mat chirality_matrix(const BoundarySpectrum& spec,
                     const std::vector<int>& signs);

/// Orthonormal flat basis L with ker A = L ⊕ sigma L; throws when no split
/// exists (odd kernel or unbalanced ±i multiplicities of sigma on ker A).
Mat kernel_split(const BoundarySpectrum& spec);

}  // namespace diracbvp
