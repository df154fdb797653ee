#include <cmath>
#include <random>

#include "diracbvp/index.hpp"
#include "diracbvp/solver.hpp"
#include "doctest.h"

using namespace diracbvp;

namespace {

SpectrumPtr simple_fiber(int kernel_mult = 0) {
  return std::make_shared<BoundarySpectrum>(
      symmetric_spectrum({{0, 1.0, 1, 0}, {1, 2.0, 1, 0}}, kernel_mult));
}

const ModeProblem& find_mode(const ModeFamily& fam, double m) {
  for (const auto& mp : fam.modes)
    if (std::abs(mp.fiber_eigenvalue - m) < 1e-12) return mp;
  throw std::runtime_error("mode not found");
}

}  // namespace

TEST_CASE("disk mode kernels against the holomorphic monomials") {
  Geometry g = disk_geometry(4);
  ModeFamily fam = reduce_to_modes(g);
  auto spec = fam.spectrum;
  auto aps = std::make_shared<BoundaryCondition>(
      build_condition(spec, ApsRecipe{}));
  auto wide = std::make_shared<BoundaryCondition>(
      build_condition(spec, GapsRecipe{3.5}));

  for (const auto& m : fam.modes) {
    Grid grid = make_grid(48, m.T, true);
    const int k = static_cast<int>(m.lambda);
    // APS kills every nonnegative trace: kernel 0 in all modes
    auto kr = kernel_dim(assemble(m, grid, aps.get(), AssemblySide::Primal));
    CHECK(kr.dim == 0);
    // a cut above k frees the trace: the regular branch z^k survives iff k >= 0
    auto kw = kernel_dim(assemble(m, grid, wide.get(), AssemblySide::Primal));
    CHECK(kw.dim == (k >= 0 && k < 3.5 ? 1 : 0));
  }
}

TEST_CASE("first order kernel dims with and without constraints") {
  // cylinder pair mode mu = 1: u1 branch e^{-t}, u2 branch e^{+t}
  auto fiber = simple_fiber(0);
  Geometry g = cylinder_geometry(1.0, fiber, 8.0);
  ModeFamily fam = reduce_to_modes(g);
  const ModeProblem& m = find_mode(fam, -1.0);
  auto spec = fam.spectrum;
  Grid grid = make_grid(40, 1.0, false);

  // free everywhere: both exponential branches survive
  std::vector<bool> all(spec->total_dim(), true);
  auto free_cond = spectral_condition(spec, all, "free");
  auto kr_free = kernel_dim(assemble(m, grid, &free_cond, AssemblySide::Full));
  CHECK(kr_free.dim == 2);

  // full constraint at t = 0 (component-0 lines excluded), free at t = L
  std::vector<bool> mask(spec->total_dim(), false);
  for (const auto& l : spec->lines())
    if (l.component == 1)
      for (int s = 0; s < l.mult; ++s) mask[spec->offset(l.id) + s] = true;
  auto dirichlet0 = spectral_condition(spec, mask, "kill-left");
  auto am = assemble(m, grid, &dirichlet0, AssemblySide::Full);
  CHECK(am.num_trace_rows == 2);  // one row per component of the trace pair
  CHECK(kernel_dim(am).dim == 0);
}

TEST_CASE("eigenvalues of the flat interval against analytic roots") {
  // mu = 0 pair mode on [0, 1] under the transmission condition: periodic
  // matching, eigenvalues 2 pi k
  auto fiber = simple_fiber(2);
  Geometry g = cylinder_geometry(1.0, fiber, 8.0);
  ModeFamily fam = reduce_to_modes(g);
  const ModeProblem& m0 = find_mode(fam, 0.0);
  auto spec = fam.spectrum;
  auto trans = build_condition(spec, TransmissionRecipe{});
  Grid grid = make_grid(64, 1.0, false);
  auto am = assemble(m0, grid, &trans, AssemblySide::Full);
  CHECK(am.block_selfadjoint);
  auto er = eigenvalues(am);
  CHECK(er.hermiticity_residual < 1e-8);
  // compare the smallest magnitudes with 2 pi k
  std::vector<double> got;
  for (Eigen::Index i = 0; i < er.eigenvalues.size(); ++i)
    got.push_back(er.eigenvalues(i));
  std::sort(got.begin(), got.end(), [](double a, double b) {
    return std::abs(a) < std::abs(b);
  });
  CHECK(std::abs(got[0]) < 1e-8);  // two zero modes (constants)
  CHECK(std::abs(got[1]) < 1e-8);
  CHECK(std::abs(got[2]) == doctest::Approx(2 * M_PI).epsilon(1e-9));
  CHECK(std::abs(got[5]) == doctest::Approx(2 * M_PI).epsilon(1e-9));
}

TEST_CASE("eigenvalues refuse a non-selfadjoint block") {
  auto fiber = simple_fiber(2);
  Geometry g = cylinder_geometry(1.0, fiber, 8.0);
  ModeFamily fam = reduce_to_modes(g);
  const ModeProblem& m0 = find_mode(fam, 0.0);
  auto spec = fam.spectrum;
  // everything on component 0 free, everything on component 1 killed
  std::vector<bool> mask(spec->total_dim(), false);
  for (const auto& l : spec->lines())
    if (l.component == 0)
      for (int s = 0; s < l.mult; ++s) mask[spec->offset(l.id) + s] = true;
  auto lop = spectral_condition(spec, mask, "one-sided");
  Grid grid = make_grid(32, 1.0, false);
  auto am = assemble(m0, grid, &lop, AssemblySide::Full);
  CHECK_FALSE(am.block_selfadjoint);
  CHECK_THROWS(eigenvalues(am));

  // mAPS on a kernel mode constrains the whole trace: symmetric, not
  // selfadjoint, so the eigenvalue contract refuses it as well
  auto maps = build_condition(spec, MapsRecipe{});
  auto am2 = assemble(m0, grid, &maps, AssemblySide::Full);
  CHECK_FALSE(am2.block_selfadjoint);
  CHECK_THROWS(eigenvalues(am2));

  // chi = i sigma commutes with sigma: B_chi is adjoint to B_{-chi}, not
  // selfadjoint, and the eigenvalue contract refuses it
  auto bchi = build_condition(spec, ChiralityRecipe{{+1, +1}});
  auto am3 = assemble(m0, grid, &bchi, AssemblySide::Full);
  CHECK_FALSE(am3.block_selfadjoint);
}

TEST_CASE("staggered finite difference oracle for a chirality condition") {
  // kernel pair mode mu = 0 with the boundary chirality chi = i sigma at both
  // ends is selfadjoint; compare the low spectrum against a staggered
  // second-order finite difference discretization with Richardson
  // extrapolation.
  auto fiber = simple_fiber(2);
  Geometry g = cylinder_geometry(1.0, fiber, 8.0);
  ModeFamily fam = reduce_to_modes(g);
  const ModeProblem& m0 = find_mode(fam, 0.0);
  auto spec = fam.spectrum;
  auto chi = anticommuting_chirality_condition(spec, +1.0);
  Grid grid = make_grid(64, 1.0, false);
  auto am = assemble(m0, grid, &chi, AssemblySide::Full);
  REQUIRE(am.block_selfadjoint);
  auto er = eigenvalues(am);

  auto fd_eigs = [&](int M) {
    const double h = 1.0 / M;
    const int nu1 = M + 1, nu2 = M;
    const int N = nu1 + nu2;
    Eigen::MatrixXcd A = Eigen::MatrixXcd::Zero(N, N);
    Eigen::MatrixXcd B = Eigen::MatrixXcd::Zero(N, N);
    auto u1 = [&](int i) { return i; };
    auto u2 = [&](int i) { return nu1 + i; };
    int row = 0;
    for (int i = 1; i < M; ++i, ++row) {  // u2' = L u1 at interior nodes
      A(row, u2(i)) = 1.0 / h;
      A(row, u2(i - 1)) = -1.0 / h;
      B(row, u1(i)) = 1.0;
    }
    for (int i = 0; i < M; ++i, ++row) {  // -u1' = L u2 at midpoints
      A(row, u1(i + 1)) = -1.0 / h;
      A(row, u1(i)) = 1.0 / h;
      B(row, u2(i)) = 1.0;
    }
    // boundary relations c1 u1(end) + c2 u2(end) = 0, derived per end from
    // the condition's block on this mode's trace coordinates
    struct Rel {
      cxd c1, c2;
      int end;
    };
    std::vector<Rel> rels;
    for (int e = 0; e < 2; ++e) {
      Mat T = Mat::Zero(spec->total_dim(), 2);
      for (const auto& t : m0.traces) {
        if (t.end != e) continue;
        T.block(spec->offset(t.line_id), t.block,
                spec->line(t.line_id).mult, 1) = t.slot;
      }
      const Mat Y = T - projector(chi.subspace) * T;
      const Mat blk = nullspace(Y, 1e-10);
      REQUIRE(blk.cols() == 1);
      const Mat comp = nullspace(Mat(blk.adjoint()), 1e-10);
      REQUIRE(comp.cols() == 1);
      rels.push_back({std::conj(comp(0, 0)), std::conj(comp(1, 0)), e});
    }
    for (const auto& rel : rels) {
      // third-order one-sided extrapolation of the midpoint unknown to the
      // endpoint keeps the eigenvalue error a clean h^2 + h^4 series
      if (rel.end == 0) {
        A(row, u1(0)) = rel.c1;
        A(row, u2(0)) = rel.c2 * 1.875;
        A(row, u2(1)) = rel.c2 * -1.25;
        A(row, u2(2)) = rel.c2 * 0.375;
      } else {
        A(row, u1(M)) = rel.c1;
        A(row, u2(M - 1)) = rel.c2 * 1.875;
        A(row, u2(M - 2)) = rel.c2 * -1.25;
        A(row, u2(M - 3)) = rel.c2 * 0.375;
      }
      ++row;
    }
    REQUIRE(row == N);
    const cxd tau(0.0, 0.37);
    Eigen::MatrixXcd S = (A - tau * B).partialPivLu().solve(B);
    Eigen::ComplexEigenSolver<Eigen::MatrixXcd> es(S);
    std::vector<double> eigs;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
      const cxd mu = es.eigenvalues()(i);
      if (std::abs(mu) < 1e-8) continue;  // infinite pencil eigenvalues
      const cxd lam = tau + 1.0 / mu;
      if (std::abs(lam.imag()) < 1e-4) eigs.push_back(lam.real());
    }
    std::sort(eigs.begin(), eigs.end(), [](double a, double b) {
      return std::abs(a) < std::abs(b);
    });
    return eigs;
  };

  auto e0 = fd_eigs(80), e1 = fd_eigs(160), e2 = fd_eigs(320);
  auto window = [](std::vector<double> v) {
    std::vector<double> out;
    for (double x : v)
      if (std::abs(x) < 5.0) out.push_back(x);
    std::sort(out.begin(), out.end());
    return out;
  };
  std::vector<double> sp;
  for (Eigen::Index i = 0; i < er.eigenvalues.size(); ++i)
    sp.push_back(er.eigenvalues(i));
  sp = window(sp);
  auto w0 = window(e0), w1 = window(e1), w2 = window(e2);
  REQUIRE(sp.size() == 4);
  REQUIRE(w0.size() == 4);
  REQUIRE(w1.size() == 4);
  REQUIRE(w2.size() == 4);
  for (int i = 0; i < 4; ++i) {
    // two-stage Richardson removes the h^2 and h^4 terms of the second-order
    // staggered scheme
    const double r1 = (4.0 * w1[i] - w0[i]) / 3.0;
    const double r2 = (4.0 * w2[i] - w1[i]) / 3.0;
    const double richardson = (16.0 * r2 - r1) / 15.0;
    CHECK(std::abs(sp[i] - richardson) < 1e-6);
  }
}

TEST_CASE("chirality pair spectra are negatives of each other") {
  Geometry g = cap_geometry(2, M_PI / 3, 5.0);
  ModeFamily fam = reduce_to_modes(g);
  auto spec = fam.spectrum;
  auto bplus = anticommuting_chirality_condition(spec, +1.0);
  auto bminus = anticommuting_chirality_condition(spec, -1.0);
  CHECK(is_selfadjoint(bplus));
  CHECK(is_selfadjoint(bminus));
  for (const auto& m : fam.modes) {
    Grid grid = make_grid(48, m.T, true);
    auto ep = eigenvalues(assemble(m, grid, &bplus, AssemblySide::Full));
    auto em = eigenvalues(assemble(m, grid, &bminus, AssemblySide::Full));
    REQUIRE(ep.eigenvalues.size() == em.eigenvalues.size());
    const Eigen::Index n = ep.eigenvalues.size();
    for (Eigen::Index i = 0; i < n; ++i)
      CHECK(ep.eigenvalues(i) ==
            doctest::Approx(-em.eigenvalues(n - 1 - i)).epsilon(1e-8));
  }
}

TEST_CASE("greens identity residuals") {
  std::mt19937 rng(42);
  std::normal_distribution<double> gauss;
  auto random_poly = [&](const Grid& grid, bool vanish_at_zero) {
    Mat f(grid.size(), 2);
    std::vector<double> c(6);
    for (int b = 0; b < 2; ++b) {
      for (auto& x : c) x = gauss(rng);
      for (int i = 0; i < grid.size(); ++i) {
        const double t = grid.nodes(i);
        double v = 0, tp = 1;
        for (double x : c) {
          v += x * tp;
          tp *= t;
        }
        if (vanish_at_zero) v *= t * t;
        f(i, b) = v;
      }
    }
    return f;
  };

  SUBCASE("cylinder: smooth pairs at spectral accuracy") {
    auto fiber = simple_fiber(2);
    ModeFamily fam = reduce_to_modes(cylinder_geometry(1.0, fiber, 8.0));
    Grid grid = make_grid(48, 1.0, false);
    for (const auto& m : fam.modes)
      for (int trial = 0; trial < 10; ++trial) {
        const Mat phi = random_poly(grid, false);
        const Mat psi = random_poly(grid, false);
        CHECK(greens_residual(m, grid, phi, psi) < 1e-8);
      }
  }
  SUBCASE("constants with zero potential vanish identically") {
    auto fiber = simple_fiber(2);
    ModeFamily fam = reduce_to_modes(cylinder_geometry(1.0, fiber, 8.0));
    const ModeProblem& m0 = find_mode(fam, 0.0);
    Grid grid = make_grid(32, 1.0, false);
    Mat phi = Mat::Constant(grid.size(), 2, 1.0);
    Mat psi = Mat::Constant(grid.size(), 2, 0.5);
    CHECK(greens_residual(m0, grid, phi, psi) < 1e-12);
  }
  SUBCASE("disk and cap: apex-vanishing pairs") {
    for (auto geom : {disk_geometry(3), cap_geometry(2, M_PI / 3, 4.0)}) {
      ModeFamily fam = reduce_to_modes(geom);
      for (const auto& m : fam.modes) {
        Grid grid = make_grid(48, m.T, true);
        for (int trial = 0; trial < 5; ++trial) {
          const Mat phi = random_poly(grid, true);
          const Mat psi = random_poly(grid, true);
          CHECK(greens_residual(m, grid, phi, psi) < 1e-8);
        }
      }
    }
  }
  SUBCASE("compact bumps kill the boundary term") {
    auto fiber = simple_fiber(0);
    ModeFamily fam = reduce_to_modes(cylinder_geometry(1.0, fiber, 8.0));
    const ModeProblem& m = fam.modes.front();
    Grid grid = make_grid(64, 1.0, false);
    Mat phi(grid.size(), 2), psi(grid.size(), 2);
    for (int i = 0; i < grid.size(); ++i) {
      const double t = grid.nodes(i);
      const double bump = std::exp(-1.0 / std::max(1e-12, t * (1 - t)));
      phi(i, 0) = bump;
      phi(i, 1) = 0.3 * bump;
      psi(i, 0) = -0.2 * bump;
      psi(i, 1) = bump;
    }
    CHECK(greens_residual(m, grid, phi, psi) < 1e-8);
  }
}

TEST_CASE("weitzenbock residuals certify the separation") {
  std::mt19937 rng(9);
  std::normal_distribution<double> gauss;
  auto smooth = [&](const Grid& grid, bool vanish) {
    Mat f(grid.size(), 2);
    for (int b = 0; b < 2; ++b) {
      const double a0 = gauss(rng), a1 = gauss(rng), a2 = gauss(rng);
      for (int i = 0; i < grid.size(); ++i) {
        const double t = grid.nodes(i);
        double v = a0 * std::sin(1.5 * t + 0.3) + a1 * t * t + a2;
        if (vanish) v *= t * t * t;
        f(i, b) = v;
      }
    }
    return f;
  };
  auto run = [&](const Geometry& geom, bool vanish, double tol) {
    ModeFamily fam = reduce_to_modes(geom);
    for (const auto& m : fam.modes) {
      Grid grid = make_grid(64, m.T, m.apex);
      for (int trial = 0; trial < 5; ++trial)
        CHECK(weitzenbock_residual(m, grid, smooth(grid, vanish)) < tol);
    }
  };
  run(disk_geometry(3), true, 1e-6);
  run(cap_geometry(2, M_PI / 3, 4.0), true, 1e-6);
  run(cap_geometry(3, M_PI / 2, 3.0), true, 1e-6);
  run(cylinder_geometry(1.0, simple_fiber(2), 8.0), false, 1e-6);
  run(horn_geometry(2, 2.0, 3.0), false, 1e-6);
}

TEST_CASE("killing profiles on the cap") {
  SolveOptions opt;
  opt.grid_n = 64;
  SUBCASE("equator: eigenvalue 1 and mAPS membership") {
    Geometry g = cap_geometry(2, M_PI / 2, 6.0);
    auto spec = std::make_shared<BoundarySpectrum>(boundary_spectrum(g));
    auto maps = build_condition(spec, MapsRecipe{});
    auto rep = killing_check(g, 0.5, maps, opt);
    CHECK(rep.eigenvalue == doctest::Approx(1.0));
    CHECK(rep.eigen_residual < 1e-6);
    CHECK(rep.norm_deviation < 1e-8);
    CHECK(rep.membership_residual < 1e-8);
    CHECK(rep.trace_in_condition);
  }
  SUBCASE("APS never admits the Killing trace") {
    for (double r : {M_PI / 3, M_PI / 2, 2.0}) {
      Geometry g = cap_geometry(2, r, 6.0);
      auto spec = std::make_shared<BoundarySpectrum>(boundary_spectrum(g));
      auto aps = build_condition(spec, ApsRecipe{});
      auto rep = killing_check(g, 0.5, aps, opt);
      CHECK(rep.eigen_residual < 1e-6);
      CHECK(rep.membership_residual > 1e-2);
      CHECK_FALSE(rep.trace_in_condition);
    }
  }
  SUBCASE("away from the equator mAPS loses the Killing trace") {
    Geometry g = cap_geometry(2, M_PI / 3, 6.0);
    auto spec = std::make_shared<BoundarySpectrum>(boundary_spectrum(g));
    auto maps = build_condition(spec, MapsRecipe{});
    auto rep = killing_check(g, 0.5, maps, opt);
    CHECK(rep.membership_residual > 1e-2);
  }
  SUBCASE("negative killing constant pairs with eigenvalue -1") {
    Geometry g = cap_geometry(2, M_PI / 2, 6.0);
    auto spec = std::make_shared<BoundarySpectrum>(boundary_spectrum(g));
    auto maps = build_condition(spec, MapsRecipe{});
    auto rep = killing_check(g, -0.5, maps, opt);
    CHECK(rep.eigenvalue == doctest::Approx(-1.0));
    CHECK(rep.eigen_residual < 1e-6);
  }
}

TEST_CASE("cap spectral gap under APS") {
  for (double r : {M_PI / 4, M_PI / 3, M_PI / 2}) {
    Geometry g = cap_geometry(2, r, 8.0);
    ModeFamily fam = reduce_to_modes(g);
    auto spec = fam.spectrum;
    auto aps = build_condition(spec, ApsRecipe{});
    double min_abs = 1e9;
    for (const auto& m : fam.modes) {
      Grid grid = make_grid(64, m.T, true);
      auto er = eigenvalues(assemble(m, grid, &aps, AssemblySide::Full));
      for (Eigen::Index i = 0; i < er.eigenvalues.size(); ++i)
        min_abs = std::min(min_abs, std::abs(er.eigenvalues(i)));
    }
    CHECK(min_abs > 1.0);  // gap radius n/2 = 1
  }
}

TEST_CASE("mesh refinement stability") {
  Geometry g = disk_geometry(3);
  ModeFamily fam = reduce_to_modes(g);
  auto spec = fam.spectrum;
  auto cond = build_condition(spec, GapsRecipe{2.5});
  for (const auto& m : fam.modes) {
    Grid g1 = make_grid(32, m.T, true), g2 = make_grid(64, m.T, true);
    CHECK(kernel_dim(assemble(m, g1, &cond, AssemblySide::Primal)).dim ==
          kernel_dim(assemble(m, g2, &cond, AssemblySide::Primal)).dim);
  }

  // eigenvalue convergence gate on the cap
  Geometry cap = cap_geometry(2, M_PI / 3, 6.0);
  ModeFamily cfam = reduce_to_modes(cap);
  auto caps = build_condition(cfam.spectrum, ApsRecipe{});
  const double window = 2 * cap.cutoff;
  for (const auto& m : cfam.modes) {
    auto e1 = eigenvalues(
        assemble(m, make_grid(64, m.T, true), &caps, AssemblySide::Full));
    auto e2 = eigenvalues(
        assemble(m, make_grid(128, m.T, true), &caps, AssemblySide::Full));
    std::vector<double> a, b;
    for (Eigen::Index i = 0; i < e1.eigenvalues.size(); ++i)
      if (std::abs(e1.eigenvalues(i)) <= window) a.push_back(e1.eigenvalues(i));
    for (Eigen::Index i = 0; i < e2.eigenvalues.size(); ++i)
      if (std::abs(e2.eigenvalues(i)) <= window) b.push_back(e2.eigenvalues(i));
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i)
      CHECK(std::abs(a[i] - b[i]) < 1e-6);
  }
}

TEST_CASE("assembly contract errors") {
  Geometry g = disk_geometry(3);
  ModeFamily fam = reduce_to_modes(g);
  auto spec = fam.spectrum;
  auto aps = build_condition(spec, ApsRecipe{});
  CHECK_THROWS(assemble(fam.modes.front(), make_grid(8, 1.0, true), &aps,
                        AssemblySide::Primal));
  // condition over a mismatched spectrum: the referenced line is missing
  auto other = std::make_shared<BoundarySpectrum>(
      boundary_spectrum(cap_geometry(2, 1.0, 3.0)));
  auto wrong = build_condition(other, ApsRecipe{});
  CHECK_THROWS(assemble(fam.modes.front(), make_grid(32, 1.0, true), &wrong,
                        AssemblySide::Primal));
}
