#pragma once

#include "diracbvp/solver.hpp"

namespace diracbvp {

struct PerModeIndex {
  int mode_id = 0;
  std::string label;
  int ker_dim = 0;
  int coker_dim = 0;
  bool flagged = false;
};

struct CheckEntry {
  std::string name;
  std::string geometry;
  std::vector<std::string> condition_tags;
  long lhs = 0;
  long rhs = 0;
  bool pass = false;
  nlohmann::json details;
};

struct IndexReport {
  std::string geometry;
  std::string condition_tag;
  std::vector<PerModeIndex> per_mode;
  long index = 0;
  double tail_bound = 0.0;  // decay witness for modes beyond the truncation
  bool flagged = false;     // borderline numerical rank somewhere
  std::vector<CheckEntry> checks;
};

/// Kernel dims from the condition, cokernel dims from the adjoint condition
/// on the formal-adjoint subsystems; modes beyond the truncation are covered
/// by the tail certificate (throws when the condition is not spectral on the
/// outermost lines).
IndexReport numeric_index(const Geometry& geom, const BoundaryCondition& b,
                          const SolveOptions& opt = {});

/// Index of the closed (periodic) problem, kernel and cokernel computed from
/// the periodic assemblies directly.
IndexReport periodic_index(const Geometry& circle, const SolveOptions& opt = {});

CheckEntry check_gaps_shift(const Geometry& geom, double a, double b,
                            const SolveOptions& opt = {});

CheckEntry check_agranovich_dynin(const Geometry& geom,
                                  const BoundaryCondition& b1,
                                  const BoundaryCondition& b2,
                                  const SolveOptions& opt = {});

/// ind D_B - ind D_{B(a)} == dim W_+ - dim W_- at the condition's own
/// reference cut.
CheckEntry check_thmad_offset(const Geometry& geom, const BoundaryCondition& b,
                              const SolveOptions& opt = {});

/// Periodic circle vs the cut interval under (ii) transmission and (iii)
/// B(a) on one copy plus its orthocomplement on the other.
CheckEntry check_splitting(const Geometry& circle, double cut_a,
                           const SolveOptions& opt = {});

/// Chirality block counts on ker A vs the solved index: ind A+ (cobordism),
/// ind A++ (Freed) and the half identity.
CheckEntry check_cobordism(const Geometry& geom, const std::vector<int>& signs,
                           const SolveOptions& opt = {});

/// Indices along the deformation g -> s g.
std::vector<long> homotopy_indices(const Geometry& geom,
                                   const BoundaryCondition& b,
                                   const std::vector<double>& svals,
                                   const SolveOptions& opt = {});

/// Union of full eigenline slots given by a mask over flat slots; stored in
/// the special decomposition at cut 0.
BoundaryCondition spectral_condition(SpectrumPtr spec,
                                     const std::vector<bool>& slot_mask,
                                     std::string tag);

bool same_spectrum(const BoundarySpectrum& a, const BoundarySpectrum& b,
                   double tol = 1e-12);

nlohmann::json index_report_json(const IndexReport& r);
nlohmann::json check_entry_json(const CheckEntry& c);

}  // namespace diracbvp
