#include <random>

#include "diracbvp/conditions.hpp"
#include "diracbvp/geometry.hpp"
#include "doctest.h"

using namespace diracbvp;

namespace {

SpectrumPtr disk_spec(int cutoff) {
  return std::make_shared<BoundarySpectrum>(
      boundary_spectrum(disk_geometry(cutoff)));
}

SpectrumPtr kernel_spec(int kernel_mult) {
  return std::make_shared<BoundarySpectrum>(symmetric_spectrum(
      {{0, 1.0, 1, 0}, {1, 2.0, 2, 0}, {2, 3.5, 1, 0}}, kernel_mult));
}

}  // namespace

TEST_CASE("gaps condition spans the lines below the cut") {
  auto s = disk_spec(4);
  auto b = build_condition(s, GapsRecipe{0.0});
  CHECK(b.dim() == 4);  // k = -4..-1
  const Mat neg = s->slot_basis(Interval::below(0.0));
  CHECK(projector_distance(b.subspace, neg) < 1e-12);
  CHECK(ellipticity_check(b).pass());
  auto off = index_offset(b);
  CHECK(off.delta == 0);
  CHECK(off.reference_cut == 0.0);
}

TEST_CASE("maps condition blocks") {
  auto s = kernel_spec(2);
  auto b = build_condition(s, MapsRecipe{});
  CHECK(b.decomp.w_minus.cols() == 2);       // W_- = ker A
  CHECK(b.decomp.w_plus.cols() == 0);
  CHECK(b.dim() == 4);                       // graph over the negative block
  CHECK(ellipticity_check(b).pass());
  auto off = index_offset(b);
  CHECK(off.delta == -2);
  CHECK(off.reference_cut == doctest::Approx(0.5));  // half the first gap
  // g = -sigma restricted to the negative block is unitary
  Eigen::JacobiSVD<Mat> svd(b.decomp.g);
  CHECK(svd.singularValues().minCoeff() == doctest::Approx(1.0));
  CHECK(svd.singularValues().maxCoeff() == doctest::Approx(1.0));
}

TEST_CASE("adjoint formulas for APS and mAPS") {
  auto s = kernel_spec(2);
  const Mat K = s->slot_basis({0.0, std::nextafter(0.0, 1.0)});

  SUBCASE("APS adjoint gains the kernel") {
    auto aps = build_condition(s, ApsRecipe{});
    auto ad = adjoint_condition(aps);
    Mat expected(s->total_dim(), aps.subspace.cols() + K.cols());
    expected << aps.subspace, K;
    CHECK(projector_distance(ad.subspace, orthonormal_columns(expected)) <
          1e-10);
    CHECK_FALSE(is_selfadjoint(aps));
    CHECK(classify_symmetry(aps) == SymmetryClass::SymmetricNotSelfadjoint);
  }
  SUBCASE("mAPS adjoint gains the kernel") {
    auto maps = build_condition(s, MapsRecipe{});
    auto ad = adjoint_condition(maps);
    Mat expected(s->total_dim(), maps.subspace.cols() + K.cols());
    expected << maps.subspace, K;
    CHECK(projector_distance(ad.subspace, orthonormal_columns(expected)) <
          1e-10);
    CHECK(to_string(classify_symmetry(maps)) == "symmetric, not selfadjoint");
  }
  SUBCASE("adjoint is an involution") {
    for (auto recipe : std::vector<BCRecipe>{ApsRecipe{}, MapsRecipe{},
                                             GapsRecipe{1.7}}) {
      auto b = build_condition(s, recipe);
      auto back = adjoint_condition(adjoint_condition(b));
      CHECK(projector_distance(b.subspace, back.subspace) < 1e-10);
    }
  }
  SUBCASE("adjoint equals sigma of the orthocomplement") {
    auto maps = build_condition(s, MapsRecipe{});
    auto ad = adjoint_condition(maps);
    const Mat comp = nullspace(Mat(maps.subspace.adjoint()));
    CHECK(projector_distance(ad.subspace, Mat(s->sigma_flat() * comp)) <
          1e-10);
  }
}

TEST_CASE("selfadjoint conditions") {
  auto s = kernel_spec(2);
  SUBCASE("gaps(0) plus a kernel split half is selfadjoint") {
    auto base = build_condition(s, GapsRecipe{0.0});
    const Mat L = kernel_split(*s);
    Mat cols(s->total_dim(), base.subspace.cols() + L.cols());
    cols << base.subspace, L;
    EllipticDecomposition d = base.decomp;
    // move the kernel split half into W_+
    d.w_plus = L;
    d.v_plus = complement_within(s->slot_basis(Interval::at_least(0.0)), L);
    auto b = build_condition(s, CustomRecipe{d, "gaps0-plus-L"});
    CHECK(is_selfadjoint(b));
    CHECK(classify_symmetry(b) == SymmetryClass::Selfadjoint);
  }
  SUBCASE("APS with trivial kernel is selfadjoint") {
    auto s0 = kernel_spec(0);
    CHECK(is_selfadjoint(build_condition(s0, ApsRecipe{})));
  }
  SUBCASE("mAPS with trivial kernel is selfadjoint") {
    auto s0 = kernel_spec(0);
    CHECK(is_selfadjoint(build_condition(s0, MapsRecipe{})));
  }
}

TEST_CASE("normal form") {
  SUBCASE("gaps(0) ⊕ L returns V = negative block, W = 0, g = 0") {
    auto s = kernel_spec(2);
    auto base = build_condition(s, GapsRecipe{0.0});
    EllipticDecomposition d = base.decomp;
    const Mat L = kernel_split(*s);
    d.w_plus = L;
    d.v_plus = complement_within(s->slot_basis(Interval::at_least(0.0)), L);
    auto b = build_condition(s, CustomRecipe{d, "gaps0-plus-L"});
    auto nf = normal_form(b);
    CHECK(nf.V.cols() == s->slot_basis(Interval::below(0.0)).cols());
    CHECK(nf.W.cols() == 0);
    CHECK(nf.L.cols() == 1);
    CHECK(nf.g.norm() < 1e-9);
    CHECK(projector_distance(nf.reconstruct(*s), b.subspace) < 1e-9);
  }
  SUBCASE("anticommuting boundary chirality has a normal form") {
    // kernel-free spectrum; chi' per mode with entries forced by
    // anticommutation with sigma
    auto s = kernel_spec(0);
    const int n = s->total_dim();
    Mat chi = Mat::Zero(n, n);
    // sigma pair blocks are identities here, so chi = [[0, a],[a, 0]] with
    // a = ±1 per pair anticommutes with sigma
    for (const auto& l : s->lines()) {
      if (l.lambda <= 0) continue;
      const int op = s->offset(l.id);
      // find the -lambda line
      for (const auto& m : s->lines())
        if (m.lambda == -l.lambda) {
          const int om = s->offset(m.id);
          for (int k = 0; k < l.mult; ++k) {
            chi(op + k, om + k) = 1.0;
            chi(om + k, op + k) = 1.0;
          }
        }
    }
    CHECK((chi * s->sigma_flat() + s->sigma_flat() * chi).norm() < 1e-12);
    // B = {phi + chi phi : phi in negative block}
    const Mat neg = s->slot_basis(Interval::below(0.0));
    const Mat basis = orthonormal_columns(Mat(neg + chi * neg));
    EllipticDecomposition d;
    d.v_minus = neg;
    d.v_plus = s->slot_basis({std::nextafter(0.0, 1.0),
                              std::numeric_limits<double>::infinity()});
    d.w_minus = Mat(n, 0);
    d.w_plus = Mat(n, 0);
    d.g = d.v_plus.adjoint() * chi * d.v_minus;
    d.cut = 0.0;
    auto b = build_condition(s, CustomRecipe{d, "local-chirality"});
    CHECK(is_selfadjoint(b));
    auto nf = normal_form(b);
    CHECK(nf.W.cols() == 0);
    CHECK((nf.g - nf.g.adjoint()).norm() < 1e-10);
    CHECK(projector_distance(nf.reconstruct(*s), b.subspace) < 1e-9);
    CHECK(projector_distance(basis, b.subspace) < 1e-10);
  }
  SUBCASE("non-selfadjoint input is rejected") {
    auto s = kernel_spec(2);
    CHECK_THROWS(normal_form(build_condition(s, MapsRecipe{})));
  }
}

TEST_CASE("ellipticity report flags broken decompositions") {
  auto s = disk_spec(3);
  auto good = build_condition(s, GapsRecipe{0.5});
  CHECK(ellipticity_check(good).pass());

  SUBCASE("interval violation") {
    EllipticDecomposition d = good.decomp;
    // sneak a lambda = 2 line into v_minus (cut is 0.5)
    Mat vm(s->total_dim(), d.v_minus.cols() + 1);
    vm << d.v_minus, s->slot_basis({2.0, 2.5});
    d.v_minus = vm;
    d.v_plus = complement_within(
        s->slot_basis(Interval::at_least(0.5)), s->slot_basis({2.0, 2.5}));
    auto b = build_condition(s, CustomRecipe{d, "broken-interval"});
    auto rep = ellipticity_check(b);
    CHECK_FALSE(rep.pass());
    bool interval_failed = false;
    for (const auto& c : rep.clauses)
      if (c.name == "interval-containment" && !c.pass) interval_failed = true;
    CHECK(interval_failed);
  }
  SUBCASE("orthogonality violation") {
    EllipticDecomposition d = good.decomp;
    Mat wp(s->total_dim(), 1);
    wp.col(0) = d.v_plus.col(0);  // duplicate a v_plus vector into w_plus
    d.w_plus = wp;
    auto b = build_condition(s, CustomRecipe{d, "broken-orthogonality"});
    auto rep = ellipticity_check(b);
    CHECK_FALSE(rep.pass());
  }
}

TEST_CASE("index offsets") {
  auto s = kernel_spec(2);
  CHECK(index_offset(build_condition(s, GapsRecipe{-1.3})).delta == 0);
  CHECK(index_offset(build_condition(s, MapsRecipe{})).delta == -2);
  auto chako = build_condition(s, ChiralityRecipe{{+1}});
  // chi = i sigma splits the kernel evenly here
  CHECK(index_offset(chako).delta == 1);
  CHECK(chako.decomp.w_plus.cols() == 1);
}

TEST_CASE("transmission condition on a doubled spectrum") {
  auto fiber = std::make_shared<BoundarySpectrum>(
      symmetric_spectrum({{0, 1.0, 1, 0}, {1, 2.0, 1, 0}}, 2));
  auto dbl = std::make_shared<BoundarySpectrum>(doubled_spectrum(*fiber));
  auto b = build_condition(dbl, TransmissionRecipe{});
  CHECK(b.decomp.w_plus.cols() == 2);   // (phi, phi) over ker A0
  CHECK(b.decomp.w_minus.cols() == 2);  // (phi, -phi)
  CHECK(index_offset(b).delta == 0);
  CHECK(ellipticity_check(b).pass());
  // B is the diagonal: dim = dim of one copy
  CHECK(b.dim() == fiber->total_dim());
  // single-component spectra cannot carry it
  CHECK_THROWS(build_condition(fiber, TransmissionRecipe{}));
}

TEST_CASE("quotient dims") {
  auto s = disk_spec(5);
  auto b1 = build_condition(s, GapsRecipe{-0.5});
  auto b2 = build_condition(s, GapsRecipe{2.5});
  CHECK(quotient_dim(b1, b2) == 3);  // k = 0, 1, 2
  CHECK(quotient_dim(b1, b1) == 0);
  CHECK_THROWS(quotient_dim(b2, b1));

  auto sk = kernel_spec(2);
  auto aps = build_condition(sk, ApsRecipe{});
  CHECK(quotient_dim(aps, adjoint_condition(aps)) == 2);  // gains ker A
}

TEST_CASE("rank identity dim B + dim B_ad = total") {
  auto s = kernel_spec(2);
  for (auto recipe : std::vector<BCRecipe>{ApsRecipe{}, MapsRecipe{},
                                           GapsRecipe{2.2}, GapsRecipe{-0.7},
                                           ChiralityRecipe{{+1}}}) {
    auto b = build_condition(s, recipe);
    auto ad = adjoint_condition(b);
    CHECK(b.dim() + ad.dim() == s->total_dim());
  }
}

TEST_CASE("offset and quotient are consistent on random nested pairs") {
  auto s = kernel_spec(4);
  std::mt19937 rng(5);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 10; ++trial) {
    // b1 = gaps(0); b2 = b1 ⊕ random slice of the [0, inf) block
    auto b1 = build_condition(s, GapsRecipe{0.0});
    const Mat pos = s->slot_basis(Interval::at_least(0.0));
    Mat rnd(pos.rows(), 2);
    for (int c = 0; c < 2; ++c) {
      Vec v(pos.cols());
      for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = cxd(g(rng), g(rng));
      rnd.col(c) = pos * v;
    }
    const Mat extra = orthonormal_columns(rnd);
    EllipticDecomposition d = b1.decomp;
    d.w_plus = extra;
    d.v_plus = complement_within(pos, extra);
    auto b2 = build_condition(s, CustomRecipe{d, "gaps0-plus-random"});
    CHECK(quotient_dim(b1, b2) == extra.cols());
    CHECK(index_offset(b2).delta - index_offset(b1).delta == extra.cols());
  }
}

TEST_CASE("recipe strings parse") {
  auto s = kernel_spec(2);
  CHECK(build_condition(s, parse_recipe("gaps:a=1.25")).decomp.cut ==
        doctest::Approx(1.25));
  CHECK(build_condition(s, parse_recipe("aps")).tag == "aps");
  CHECK(build_condition(s, parse_recipe("maps")).tag == "maps");
  CHECK(build_condition(s, parse_recipe("chirality:+1")).tag ==
        "chirality:+1");
  CHECK_THROWS(parse_recipe("nonsense"));
}

TEST_CASE("condition json round trip") {
  auto s = kernel_spec(2);
  auto b = build_condition(s, MapsRecipe{});
  auto j = condition_to_json(b);
  auto back = condition_from_json(s, j);
  CHECK(projector_distance(b.subspace, back.subspace) < 1e-12);
  CHECK(back.decomp.cut == b.decomp.cut);
}
