#include "diracbvp/geometry.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace diracbvp {

namespace {

long binom(int a, int b) {
  if (b < 0 || b > a) return 0;
  long r = 1;
  for (int i = 0; i < b; ++i) r = r * (a - i) / (i + 1);
  return r;
}

// Dirac eigenvalue multiplicity on the unit round S^d at ±(d/2 + j).
long sphere_dirac_mult(int d, int j) {
  return (1L << (d / 2)) * binom(j + d - 1, j);
}

Vec unit_vec(int dim, int k) {
  Vec v = Vec::Zero(dim);
  v(k) = 1.0;
  return v;
}

const CylinderGeometry& as_cylinder(const Geometry& g) {
  return std::get<CylinderGeometry>(g.shape);
}

// Fiber truncated to |lambda| <= cutoff, single kernel line enforced.
std::vector<EigenLine> truncated_fiber_lines(const BoundarySpectrum& fiber,
                                             double cutoff) {
  std::vector<EigenLine> lines;
  int kernel_lines = 0;
  for (const auto& l : fiber.lines()) {
    if (std::abs(l.lambda) > cutoff) continue;
    if (l.lambda == 0.0) ++kernel_lines;
    lines.push_back(l);
  }
  if (kernel_lines > 1)
    throw std::invalid_argument("fiber must carry at most one kernel line");
  return lines;
}

}  // namespace

Geometry disk_geometry(double cutoff) { return {DiskGeometry{}, cutoff}; }
Geometry cylinder_geometry(double length, SpectrumPtr fiber, double cutoff) {
  if (!fiber) throw std::invalid_argument("cylinder needs a fiber spectrum");
  if (!(length > 0)) throw std::invalid_argument("cylinder length must be > 0");
  return {CylinderGeometry{length, std::move(fiber)}, cutoff};
}
Geometry cap_geometry(int n, double r, double cutoff) {
  if (n < 2) throw std::invalid_argument("cap dimension must be >= 2");
  if (!(r > 0.0 && r < M_PI))
    throw std::invalid_argument("cap radius must lie in (0, pi)");
  return {CapGeometry{n, r}, cutoff};
}
Geometry horn_geometry(int n, double truncation, double cutoff) {
  if (n < 2) throw std::invalid_argument("horn fiber dimension must be >= 2");
  return {HornGeometry{n, truncation}, cutoff};
}
Geometry circle_geometry(double length, SpectrumPtr fiber, double cutoff) {
  if (!fiber) throw std::invalid_argument("circle needs a fiber spectrum");
  if (!(length > 0)) throw std::invalid_argument("circle length must be > 0");
  return {CircleGeometry{length, std::move(fiber)}, cutoff};
}

std::string geometry_label(const Geometry& g) {
  return std::visit(
      [&](const auto& s) -> std::string {
        using T = std::decay_t<decltype(s)>;
        std::ostringstream os;
        if constexpr (std::is_same_v<T, DiskGeometry>)
          os << "disk";
        else if constexpr (std::is_same_v<T, CylinderGeometry>)
          os << "cylinder:L=" << s.length;
        else if constexpr (std::is_same_v<T, CapGeometry>)
          os << "cap:n=" << s.n << ",r=" << s.r;
        else if constexpr (std::is_same_v<T, HornGeometry>)
          os << "horn:n=" << s.n;
        else
          os << "circle:L=" << s.length;
        return os.str();
      },
      g.shape);
}

BoundarySpectrum symmetric_spectrum(const std::vector<EigenLine>& half_lines,
                                    int kernel_mult) {
  std::vector<EigenLine> lines;
  SigmaAction sig;
  int id = 0;
  if (kernel_mult > 0) {
    lines.push_back({id++, 0.0, kernel_mult, 0});
    Mat K = Mat::Zero(kernel_mult, kernel_mult);
    int i = 0;
    for (; i + 1 < kernel_mult; i += 2) {
      K(i, i + 1) = -1.0;
      K(i + 1, i) = 1.0;
    }
    if (i < kernel_mult) K(i, i) = cxd(0, 1);
    sig.kernel = K;
  } else {
    sig.kernel = Mat(0, 0);
  }
  for (const auto& h : half_lines) {
    if (!(h.lambda > 0))
      throw std::invalid_argument("half_lines must have positive lambda");
    lines.push_back({id++, h.lambda, h.mult, 0});
    lines.push_back({id++, -h.lambda, h.mult, 0});
    sig.pairs.push_back({h.lambda, Mat::Identity(h.mult, h.mult)});
  }
  return BoundarySpectrum(std::move(lines), std::move(sig));
}

BoundarySpectrum doubled_spectrum(const BoundarySpectrum& fiber) {
  if (fiber.num_components() != 1)
    throw std::invalid_argument("doubled_spectrum expects a single component");
  std::vector<EigenLine> lines;
  for (const auto& l : fiber.lines()) {
    lines.push_back({2 * l.id, l.lambda, l.mult, 0});
    lines.push_back({2 * l.id + 1, -l.lambda, l.mult, 1});
  }
  std::sort(lines.begin(), lines.end(), [](const auto& a, const auto& b) {
    return a.lambda != b.lambda ? a.lambda < b.lambda : a.id < b.id;
  });
  auto group = [&](double lam) {
    std::vector<const EigenLine*> g;
    for (const auto& l : lines)
      if (l.lambda == lam) g.push_back(&l);
    return g;
  };
  auto slot_in_group = [&](const std::vector<const EigenLine*>& g, int id,
                           int slot) {
    int off = 0;
    for (const auto* l : g) {
      if (l->id == id) return off + slot;
      off += l->mult;
    }
    throw std::logic_error("line not in group");
  };

  SigmaAction sig;
  std::set<double> positives;
  for (const auto& l : lines)
    if (l.lambda > 0) positives.insert(l.lambda);
  // sigma maps (c, +lam, s) to -(c, -lam, s); the reverse carries +1. This is
  // the end rotation of the separated mode pairs on both copies.
  for (double lam : positives) {
    auto plus = group(lam), minus = group(-lam);
    int dim = 0;
    for (const auto* l : plus) dim += l->mult;
    Mat block = Mat::Zero(dim, dim);
    for (const auto* l : plus) {
      // Same component, negated lambda, same slot index.
      const int comp = l->component;
      const EigenLine* dest = nullptr;
      for (const auto* m : minus)
        if (m->component == comp) dest = m;
      if (!dest || dest->mult != l->mult)
        throw std::invalid_argument("doubled spectrum is not slot-aligned");
      for (int s = 0; s < l->mult; ++s)
        block(slot_in_group(minus, dest->id, s),
              slot_in_group(plus, l->id, s)) = -1.0;
    }
    sig.pairs.push_back({lam, block});
  }

  // Kernel: component 0 carries -K0, component 1 carries +K0, where K0 maps
  // the split basis a_s to b_s (the geometric end rotations on kernel pairs).
  const Mat Kb = fiber.slot_basis({0.0, std::nextafter(0.0, 1.0)});
  const int kdim = static_cast<int>(Kb.cols());
  if (kdim == 0) {
    sig.kernel = Mat(0, 0);
  } else {
    const Mat L = kernel_split(fiber);
    const Mat A = Kb.adjoint() * L;
    const Mat B = Kb.adjoint() * (fiber.sigma_flat() * L);
    const Mat K0 = B * A.adjoint() - A * B.adjoint();  // a_s -> b_s -> -a_s
    // Doubled kernel slot order: the c0 kernel line (even id) precedes c1.
    Mat K = Mat::Zero(2 * kdim, 2 * kdim);
    K.topLeftCorner(kdim, kdim) = -K0;
    K.bottomRightCorner(kdim, kdim) = K0;
    sig.kernel = K;
  }
  return BoundarySpectrum(std::move(lines), std::move(sig));
}

namespace {

// Shared warped-product mode assembly. For fiber eigenvalue m on the warp f
// over [0, T]: p = m/f, b = (dim-1) f'/(2f), weight = f^{dim-1}, and the
// connection-Laplacian mode potentials lap_j = ±p' - b' + p^2 - b^2 - K.
struct WarpData {
  std::function<double(double)> f, df, ddf;
  int dim = 2;
  std::function<double(double)> curv;
};

void fill_warp_functions(ModeProblem& mp, double m, const WarpData& w) {
  const int d = w.dim;
  auto f = w.f, df = w.df, ddf = w.ddf;
  mp.fiber_eigenvalue = m;
  mp.p = [m, f](double t) { return m / f(t); };
  mp.bterm = [d, f, df](double t) { return (d - 1) * df(t) / (2 * f(t)); };
  mp.weight = [d, f](double t) { return std::pow(f(t), d - 1); };
  auto dp = [m, f, df](double t) { return -m * df(t) / (f(t) * f(t)); };
  auto db = [d, f, df, ddf](double t) {
    return (d - 1) * (ddf(t) * f(t) - df(t) * df(t)) / (2 * f(t) * f(t));
  };
  auto p = mp.p, b = mp.bterm;
  auto curv = w.curv;
  mp.curv = curv;
  mp.lap1 = [p, b, dp, db, curv](double t) {
    return dp(t) - db(t) + p(t) * p(t) - b(t) * b(t) - curv(t);
  };
  mp.lap2 = [p, b, dp, db, curv](double t) {
    return -dp(t) - db(t) + p(t) * p(t) - b(t) * b(t) - curv(t);
  };
}

ModeFamily disk_modes(const Geometry& g) {
  ModeFamily fam;
  fam.formally_selfadjoint = false;
  fam.spectrum = std::make_shared<BoundarySpectrum>(boundary_spectrum(g));
  const int cut = static_cast<int>(std::floor(g.cutoff));
  WarpData w{[](double t) { return t; }, [](double) { return 1.0; },
             [](double) { return 0.0; }, 2, [](double) { return 0.0; }};
  int mode_id = 0;
  for (int k = -cut; k <= cut; ++k) {
    ModeProblem mp;
    mp.mode_id = mode_id++;
    std::ostringstream lbl;
    lbl << "disk:k=" << k;
    mp.label = lbl.str();
    mp.lambda = k;
    mp.T = 1.0;
    mp.apex = true;
    fill_warp_functions(mp, k + 0.5, w);
    const double s1 = k, s2 = -(k + 1);
    mp.apex_row_u1 = (k >= 0) ? (s1 >= 1.0) : true;
    mp.apex_row_u2 = (k >= 0) ? true : (s2 >= 1.0);
    mp.traces.push_back({1, 0, k, unit_vec(1, 0), false});
    mp.traces.push_back({1, 1, -k, unit_vec(1, 0), true});
    fam.modes.push_back(std::move(mp));
  }
  return fam;
}

ModeFamily cap_modes(const Geometry& g) {
  const auto& cap = std::get<CapGeometry>(g.shape);
  ModeFamily fam;
  fam.spectrum = std::make_shared<BoundarySpectrum>(boundary_spectrum(g));
  const double s = std::sin(cap.r);
  WarpData w{[](double t) { return std::sin(t); },
             [](double t) { return std::cos(t); },
             [](double t) { return -std::sin(t); }, cap.n,
             [n = cap.n](double) { return n * (n - 1) / 4.0; }};
  int mode_id = 0;
  for (int j = 0;; ++j) {
    const double m = 0.5 * (cap.n - 1) + j;
    if (m / s > g.cutoff) break;
    const int mult = static_cast<int>(sphere_dirac_mult(cap.n - 1, j));
    const int line_plus = 2 * j, line_minus = 2 * j + 1;
    for (int sign : {+1, -1}) {
      for (int slot = 0; slot < mult; ++slot) {
        ModeProblem mp;
        mp.mode_id = mode_id++;
        std::ostringstream lbl;
        lbl << "cap:m=" << sign * m << ",s=" << slot;
        mp.label = lbl.str();
        mp.lambda = sign * m / s;
        mp.T = cap.r;
        mp.apex = true;
        fill_warp_functions(mp, sign * m, w);
        const double sreg = m - 0.5 * (cap.n - 1);
        if (sign > 0) {
          mp.apex_row_u1 = sreg >= 1.0;
          mp.apex_row_u2 = true;
          mp.traces.push_back({1, 0, line_plus, unit_vec(2 * mult, slot), false});
          mp.traces.push_back({1, 1, line_minus, unit_vec(2 * mult, slot), false});
        } else {
          mp.apex_row_u1 = true;
          mp.apex_row_u2 = sreg >= 1.0;
          mp.traces.push_back(
              {1, 0, line_minus, unit_vec(2 * mult, mult + slot), false});
          mp.traces.push_back(
              {1, 1, line_plus, unit_vec(2 * mult, mult + slot), false});
        }
        fam.modes.push_back(std::move(mp));
      }
    }
  }
  return fam;
}

ModeFamily cylinder_like_modes(SpectrumPtr doubled,
                               const BoundarySpectrum& fiber, double length,
                               double cutoff, bool periodic) {
  ModeFamily fam;
  fam.spectrum = periodic ? nullptr : doubled;
  WarpData w{[](double) { return 1.0; }, [](double) { return 0.0; },
             [](double) { return 0.0; }, 2, [](double) { return 0.0; }};
  int mode_id = 0;
  auto add_mode = [&](double k, const std::string& lbl) {
    ModeProblem mp;
    mp.mode_id = mode_id++;
    mp.label = lbl;
    mp.lambda = -k;  // A-eigenvalue of the u1 trace at the t = 0 end
    mp.T = length;
    mp.two_ended = !periodic;
    mp.periodic = periodic;
    fill_warp_functions(mp, k, w);
    return mp;
  };
  for (const auto& l : truncated_fiber_lines(fiber, cutoff)) {
    if (l.lambda <= 0.0) continue;  // one mode family per ± pair
    const double mu = l.lambda;
    for (int slot = 0; slot < l.mult; ++slot) {
      std::ostringstream lbl;
      lbl << (periodic ? "circle" : "cyl") << ":mu=" << mu << ",s=" << slot;
      ModeProblem mp = add_mode(-mu, lbl.str());
      if (!periodic) {
        // Line ids in the doubled spectrum: c0 keeps 2*fiber_id, c1 flips.
        int id_pos_c0 = -1, id_neg_c0 = -1, id_pos_c1 = -1, id_neg_c1 = -1;
        for (const auto& dl : doubled->lines()) {
          if (dl.lambda == mu) (dl.component == 0 ? id_pos_c0 : id_pos_c1) = dl.id;
          if (dl.lambda == -mu) (dl.component == 0 ? id_neg_c0 : id_neg_c1) = dl.id;
        }
        mp.traces.push_back({0, 0, id_pos_c0, unit_vec(l.mult, slot), false});
        mp.traces.push_back({0, 1, id_neg_c0, unit_vec(l.mult, slot), false});
        mp.traces.push_back({1, 0, id_neg_c1, unit_vec(l.mult, slot), false});
        mp.traces.push_back({1, 1, id_pos_c1, unit_vec(l.mult, slot), false});
      }
      fam.modes.push_back(std::move(mp));
    }
  }
  // Kernel pairs: one mode per split direction (a_s, b_s = partner).
  const Mat L = kernel_split(fiber);
  const Mat Kb = fiber.slot_basis({0.0, std::nextafter(0.0, 1.0)});
  for (Eigen::Index sidx = 0; sidx < L.cols(); ++sidx) {
    std::ostringstream lbl;
    lbl << (periodic ? "circle" : "cyl") << ":mu=0,s=" << sidx;
    ModeProblem mp = add_mode(0.0, lbl.str());
    if (!periodic) {
      const Vec a = Kb.adjoint() * L.col(sidx);
    const Vec b = Kb.adjoint() * (fiber.sigma_flat() * L.col(sidx));
      int id_k_c0 = -1, id_k_c1 = -1;
      for (const auto& dl : doubled->lines())
        if (dl.lambda == 0.0) (dl.component == 0 ? id_k_c0 : id_k_c1) = dl.id;
      mp.traces.push_back({0, 0, id_k_c0, a, false});
      mp.traces.push_back({0, 1, id_k_c0, b, false});
      mp.traces.push_back({1, 0, id_k_c1, a, false});
      mp.traces.push_back({1, 1, id_k_c1, b, false});
    }
    fam.modes.push_back(std::move(mp));
  }
  return fam;
}

ModeFamily horn_modes(const Geometry& g) {
  const auto& horn = std::get<HornGeometry>(g.shape);
  ModeFamily fam;
  fam.spectrum = std::make_shared<BoundarySpectrum>(boundary_spectrum(g));
  WarpData w{[](double t) { return std::exp(-t); },
             [](double t) { return -std::exp(-t); },
             [](double t) { return std::exp(-t); }, horn.n + 1,
             [n = horn.n](double t) {
               return (n * (n + 1) / 2.0 * std::exp(2 * t) -
                       n * (n + 3) / 2.0) /
                      4.0;
             }};
  int mode_id = 0;
  for (int j = 0;; ++j) {
    const double m = 0.5 * horn.n + j;
    if (m > g.cutoff) break;
    for (int sign : {+1, -1}) {
      ModeProblem mp;
      mp.mode_id = mode_id++;
      std::ostringstream lbl;
      lbl << "horn:m=" << sign * m;
      mp.label = lbl.str();
      mp.lambda = sign * m;
      mp.T = horn.truncation;
      fill_warp_functions(mp, sign * m, w);
      fam.modes.push_back(std::move(mp));  // residual checks only; no traces
    }
  }
  return fam;
}

}  // namespace

BoundarySpectrum boundary_spectrum(const Geometry& g) {
  return std::visit(
      [&](const auto& s) -> BoundarySpectrum {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DiskGeometry>) {
          const int cut = static_cast<int>(std::floor(g.cutoff));
          std::vector<EigenLine> lines;
          SigmaAction sig;
          for (int k = -cut; k <= cut; ++k) lines.push_back({k, double(k), 1, 0});
          for (int k = 1; k <= cut; ++k)
            sig.pairs.push_back({double(k), Mat::Identity(1, 1)});
          sig.kernel = Mat::Constant(1, 1, cxd(0, 1));
          return BoundarySpectrum(std::move(lines), std::move(sig));
        } else if constexpr (std::is_same_v<T, CylinderGeometry>) {
          BoundarySpectrum fiber(truncated_fiber_lines(*s.fiber, g.cutoff),
                                 [&] {
                                   SigmaAction sa = s.fiber->sigma();
                                   // drop pairs beyond the cutoff
                                   std::erase_if(sa.pairs, [&](const auto& p) {
                                     return p.lambda > g.cutoff;
                                   });
                                   return sa;
                                 }());
          return doubled_spectrum(fiber);
        } else if constexpr (std::is_same_v<T, CapGeometry>) {
          std::vector<EigenLine> lines;
          SigmaAction sig;
          const double sr = std::sin(s.r);
          for (int j = 0;; ++j) {
            const double m = 0.5 * (s.n - 1) + j;
            const double lam = m / sr;
            if (lam > g.cutoff) break;
            const int mult = static_cast<int>(sphere_dirac_mult(s.n - 1, j));
            lines.push_back({2 * j, lam, 2 * mult, 0});
            lines.push_back({2 * j + 1, -lam, 2 * mult, 0});
            Mat blk = Mat::Zero(2 * mult, 2 * mult);
            blk.topLeftCorner(mult, mult) = Mat::Identity(mult, mult);
            blk.bottomRightCorner(mult, mult) = -Mat::Identity(mult, mult);
            sig.pairs.push_back({lam, blk});
          }
          if (lines.empty())
            throw std::invalid_argument("cap cutoff excludes every mode");
          sig.kernel = Mat(0, 0);
          return BoundarySpectrum(std::move(lines), std::move(sig));
        } else if constexpr (std::is_same_v<T, HornGeometry>) {
          std::vector<EigenLine> lines;
          SigmaAction sig;
          for (int j = 0;; ++j) {
            const double m = 0.5 * s.n + j;
            if (m > g.cutoff) break;
            const int mult = static_cast<int>(sphere_dirac_mult(s.n, j));
            lines.push_back({2 * j, m, 2 * mult, 0});
            lines.push_back({2 * j + 1, -m, 2 * mult, 0});
            Mat blk = Mat::Zero(2 * mult, 2 * mult);
            blk.topLeftCorner(mult, mult) = Mat::Identity(mult, mult);
            blk.bottomRightCorner(mult, mult) = -Mat::Identity(mult, mult);
            sig.pairs.push_back({m, blk});
          }
          sig.kernel = Mat(0, 0);
          return BoundarySpectrum(std::move(lines), std::move(sig));
        } else {
          throw std::invalid_argument(
              "periodic circle has no boundary spectrum");
        }
      },
      g.shape);
}

ModeFamily reduce_to_modes(const Geometry& g) {
  return std::visit(
      [&](const auto& s) -> ModeFamily {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DiskGeometry>) {
          return disk_modes(g);
        } else if constexpr (std::is_same_v<T, CapGeometry>) {
          return cap_modes(g);
        } else if constexpr (std::is_same_v<T, CylinderGeometry>) {
          auto doubled =
              std::make_shared<BoundarySpectrum>(boundary_spectrum(g));
          return cylinder_like_modes(doubled, *s.fiber, s.length, g.cutoff,
                                     false);
        } else if constexpr (std::is_same_v<T, CircleGeometry>) {
          return cylinder_like_modes(nullptr, *s.fiber, s.length, g.cutoff,
                                     true);
        } else {
          return horn_modes(g);
        }
      },
      g.shape);
}

CanonicalBoundaryData canonical_boundary_data(const Geometry& g) {
  return std::visit(
      [&](const auto& s) -> CanonicalBoundaryData {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DiskGeometry>) {
          return {1.0, 1, 1.0};
        } else if constexpr (std::is_same_v<T, CylinderGeometry>) {
          CanonicalBoundaryData d;
          d.mean_curvature = 0.0;  // totally geodesic product boundary
          d.kernel_dim = 2 * static_cast<int>(s.fiber->kernel_dim());
          double mu1 = std::numeric_limits<double>::infinity();
          for (const auto& l : s.fiber->lines())
            if (l.lambda > 0) mu1 = std::min(mu1, l.lambda);
          d.mu1 = std::isfinite(mu1) ? mu1 : 0.0;
          return d;
        } else if constexpr (std::is_same_v<T, CapGeometry>) {
          return {1.0 / std::tan(s.r), 0, (s.n - 1) / (2.0 * std::sin(s.r))};
        } else if constexpr (std::is_same_v<T, HornGeometry>) {
          // boundary at t = 0 with interior normal +d/dt; f = e^{-t}
          return {1.0, 0, s.n / 2.0};
        } else {
          throw std::invalid_argument("periodic circle has no boundary");
        }
      },
      g.shape);
}

WeitzenbockData weitzenbock_data(const Geometry& g) {
  return std::visit(
      [&](const auto& s) -> WeitzenbockData {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, DiskGeometry>) {
          return {0.0, std::nullopt, "flat disk: K = 0"};
        } else if constexpr (std::is_same_v<T, CapGeometry>) {
          std::ostringstream note;
          note << "round cap: scalar curvature n(n-1) = " << s.n * (s.n - 1)
               << ", K = R/4";
          return {s.n * (s.n - 1) / 4.0, std::nullopt, note.str()};
        } else if constexpr (std::is_same_v<T, HornGeometry>) {
          const int n = s.n;
          auto profile = [n](double t) {
            return n * (n + 1) / 2.0 * std::exp(2 * t) - n * (n + 3) / 2.0;
          };
          return {-n / 4.0, profile,
                  "warped horn: R(t) = n(n+1)/2 e^{2t} - n(n+3)/2, K = R/4"};
        } else if constexpr (std::is_same_v<T, CylinderGeometry>) {
          return {0.0, std::nullopt, "abstract fiber: no curvature data"};
        } else {
          return {0.0, std::nullopt, "abstract fiber: no curvature data"};
        }
      },
      g.shape);
}

CoercivityBound coercivity_bound(const Geometry& g) {
  return std::visit(
      [&](const auto& s) -> CoercivityBound {
        using T = std::decay_t<decltype(s)>;
        CoercivityBound b;
        if constexpr (std::is_same_v<T, CapGeometry>) {
          b.coercive_for_all_kappa = true;  // compact
          const double kappa = s.n * (s.n - 1) / 4.0;
          b.gap_radius = std::sqrt(s.n * kappa / (s.n - 1));  // = n/2
          b.note = "compact cap; K = n(n-1)/4 gives gap radius n/2";
        } else if constexpr (std::is_same_v<T, HornGeometry>) {
          b.coercive_for_all_kappa = true;  // R(t) -> infinity
          b.note =
              "warped horn: R(t) -> infinity, kappa-coercive at infinity for "
              "every kappa; K(0) < 0 so no boundary gap radius";
        } else if constexpr (std::is_same_v<T, DiskGeometry>) {
          b.coercive_for_all_kappa = true;  // compact
          b.note = "compact disk; K = 0 yields no spectral gap radius";
        } else {
          b.coercive_for_all_kappa = true;  // compact
          b.note = "compact; abstract fiber carries no curvature bound";
        }
        return b;
      },
      g.shape);
}

}  // namespace diracbvp
