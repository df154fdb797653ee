#pragma once

#include <functional>
#include <optional>
#include <variant>

#include "diracbvp/spectrum.hpp"

namespace diracbvp {

// Model geometries. The disk carries the complex derivative operator
// (E != F); cap, cylinder, horn and circle carry formally selfadjoint
// spinor-type operators.
struct DiskGeometry {};
struct CylinderGeometry {
  double length = 1.0;
  SpectrumPtr fiber;  // adapted operator of the t = 0 boundary component
};
struct CapGeometry {
  int n = 2;        // dimension of the cap (geodesic ball in S^n)
  double r = M_PI / 2;
};
struct HornGeometry {
  int n = 2;               // fiber S^n, metric e^{-2t} g_0 + dt^2
  double truncation = 3.0; // interval used for residual checks only
};
struct CircleGeometry {
  double length = 1.0;
  SpectrumPtr fiber;  // periodic model, no boundary
};

struct Geometry {
  std::variant<DiskGeometry, CylinderGeometry, CapGeometry, HornGeometry,
               CircleGeometry>
      shape;
  double cutoff = 8.0;  // truncation on |lambda|
};

Geometry disk_geometry(double cutoff = 8.0);
Geometry cylinder_geometry(double length, SpectrumPtr fiber,
                           double cutoff = 8.0);
Geometry cap_geometry(int n, double r, double cutoff = 8.0);
Geometry horn_geometry(int n, double truncation = 3.0, double cutoff = 8.0);
Geometry circle_geometry(double length, SpectrumPtr fiber,
                         double cutoff = 8.0);

std::string geometry_label(const Geometry& g);

/// Where a component of a mode's endpoint value lands in the boundary
/// eigenbasis. block 0 is the u1 component, block 1 the u2 component.
struct TraceTarget {
  int end = 1;      // 0: t = 0 endpoint, 1: t = T endpoint
  int block = 0;    // 0: u1, 1: u2
  int line_id = 0;
  Vec slot;         // unit vector in the line's coefficient space
  bool adjoint_side = false;  // disk only: u2 traces feed the adjoint problem
};

/// One separated radial problem: the first-order system pairing
/// (d/dt + p + b) on u2 with (-d/dt + p - b) on u1, formally selfadjoint for
/// the measure weight(t) dt. p = m/f is the symbol part, b = (dim-1) f'/(2f)
/// the measure part.
struct ModeProblem {
  int mode_id = 0;
  std::string label;
  double fiber_eigenvalue = 0.0;  // m
  double lambda = 0.0;            // boundary eigenvalue tied to this mode
  double T = 1.0;
  bool apex = false;       // coordinate singularity at t = 0
  bool two_ended = false;  // boundary conditions at both endpoints
  bool periodic = false;   // circle closure, no boundary condition

  std::function<double(double)> p, bterm, weight;
  // Regularity rows at the apex (regular Frobenius branch selection).
  bool apex_row_u1 = false, apex_row_u2 = false;

  std::vector<TraceTarget> traces;

  // Mode potentials of the connection Laplacian (multiplication part; the
  // solver adds -(d/dt)^2 - (w'/w) d/dt) and the Weitzenboeck endomorphism.
  std::function<double(double)> lap1, lap2, curv;
};

struct ModeFamily {
  SpectrumPtr spectrum;  // empty for the circle (no boundary)
  std::vector<ModeProblem> modes;
  bool formally_selfadjoint = true;  // false for the disk
};

struct CanonicalBoundaryData {
  double mean_curvature = 0.0;  // constant per component here
  int kernel_dim = 0;
  double mu1 = 0.0;  // magnitude of the largest negative eigenvalue of A
};

struct WeitzenbockData {
  double kappa_lower = 0.0;  // lower bound of the endomorphism K
  std::optional<std::function<double(double)>> scalar_profile;  // R(t)
  std::string note;
};

struct CoercivityBound {
  bool coercive_for_all_kappa = false;
  std::optional<double> sqrt_kappa;   // coercivity-at-infinity constant
  std::optional<double> gap_radius;   // sqrt(n kappa / (n-1)) when K >= kappa > 0
  std::string note;
};

BoundarySpectrum boundary_spectrum(const Geometry& g);
ModeFamily reduce_to_modes(const Geometry& g);
CanonicalBoundaryData canonical_boundary_data(const Geometry& g);
WeitzenbockData weitzenbock_data(const Geometry& g);
CoercivityBound coercivity_bound(const Geometry& g);

/// A ⊕ -A over two components, slot aligned, as induced on the two copies of
/// a cutting hypersurface. Component 0 keeps the fiber eigenvalues, component
/// 1 flips them.
BoundarySpectrum doubled_spectrum(const BoundarySpectrum& fiber);

/// Symmetric test spectrum from (lambda, mult) data; sigma pair blocks are
/// identities, the kernel carries the standard split form. Intended for
/// cylinder fibers and tests.
BoundarySpectrum symmetric_spectrum(const std::vector<EigenLine>& half_lines,
                                    int kernel_mult);

}  // namespace diracbvp
