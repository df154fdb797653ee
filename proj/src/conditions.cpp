#include "diracbvp/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace diracbvp {

namespace {

Mat hcat(const Mat& a, const Mat& b) {
  if (a.cols() == 0) return b;
  if (b.cols() == 0) return a;
  Mat m(a.rows(), a.cols() + b.cols());
  m << a, b;
  return m;
}

double op_norm(const Mat& m) {
  if (m.rows() == 0 || m.cols() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

Mat graph_columns(const EllipticDecomposition& d) {
  Mat graph = d.v_minus;
  if (d.v_plus.cols() > 0 && d.v_minus.cols() > 0)
    graph += d.v_plus * d.g;
  return graph;
}

Mat subspace_of(const EllipticDecomposition& d) {
  return orthonormal_columns(hcat(d.w_plus, graph_columns(d)));
}

}  // namespace

BCRecipe parse_recipe(const std::string& text) {
  auto starts = [&](const char* p) { return text.rfind(p, 0) == 0; };
  if (text == "aps") return ApsRecipe{};
  if (text == "maps") return MapsRecipe{};
  if (text == "transmission") return TransmissionRecipe{};
  if (starts("gaps")) {
    double a = 0.0;
    auto pos = text.find("a=");
    if (pos != std::string::npos) a = std::stod(text.substr(pos + 2));
    return GapsRecipe{a};
  }
  if (starts("chirality:")) {
    std::vector<int> signs;
    std::stringstream ss(text.substr(10));
    std::string item;
    while (std::getline(ss, item, ','))
      signs.push_back(std::stoi(item));
    return ChiralityRecipe{signs};
  }
  if (starts("custom:file=")) {
    std::ifstream in(text.substr(12));
    if (!in) throw std::invalid_argument("cannot open " + text.substr(12));
    nlohmann::json j;
    in >> j;
    EllipticDecomposition d;
    d.v_minus = matrix_from_json(j.at("blocks").at("v_minus"));
    d.w_minus = matrix_from_json(j.at("blocks").at("w_minus"));
    d.v_plus = matrix_from_json(j.at("blocks").at("v_plus"));
    d.w_plus = matrix_from_json(j.at("blocks").at("w_plus"));
    d.g = matrix_from_json(j.at("g"));
    d.cut = j.at("cut").get<double>();
    return CustomRecipe{d, j.value("tag", std::string("custom"))};
  }
  throw std::invalid_argument("unknown condition recipe: " + text);
}

namespace {

BoundaryCondition make_gaps(SpectrumPtr spec, double a, std::string tag) {
  const auto& s = *spec;
  EllipticDecomposition d;
  d.v_minus = s.slot_basis(Interval::below(a));
  d.v_plus = s.slot_basis(Interval::at_least(a));
  d.w_minus = Mat(s.total_dim(), 0);
  d.w_plus = Mat(s.total_dim(), 0);
  d.g = Mat::Zero(d.v_plus.cols(), d.v_minus.cols());
  d.cut = a;
  BoundaryCondition b{spec, d, subspace_of(d), std::move(tag)};
  return b;
}

BoundaryCondition make_maps(SpectrumPtr spec) {
  const auto& s = *spec;
  EllipticDecomposition d;
  d.v_minus = s.slot_basis(Interval::below(0.0));
  d.v_plus = s.slot_basis({std::nextafter(0.0, 1.0),
                           std::numeric_limits<double>::infinity()});
  d.w_minus = s.slot_basis({0.0, std::nextafter(0.0, 1.0)});
  d.w_plus = Mat(s.total_dim(), 0);
  d.g = -(d.v_plus.adjoint() * s.sigma_flat() * d.v_minus);
  // Reference cut strictly between 0 and the first positive eigenvalue, so
  // that v_minus ⊕ w_minus spans every line below it.
  double a_star = 0.5;
  try {
    a_star = 0.5 * s.smallest_positive_lambda();
  } catch (const std::exception&) {
  }
  d.cut = a_star;
  return {spec, d, subspace_of(d), "maps"};
}

}  // namespace

BoundaryCondition boundary_chirality_condition(SpectrumPtr spec, const Mat& chi,
                                               std::string tag) {
  const auto& s = *spec;
  const int n = s.total_dim();
  if (chi.rows() != n || chi.cols() != n)
    throw std::invalid_argument("chirality has wrong size");
  const Mat id = Mat::Identity(n, n);
  if ((chi * chi - id).norm() > 1e-10 * n ||
      (chi - chi.adjoint()).norm() > 1e-10 * n)
    throw std::invalid_argument("chirality must be a hermitian involution");
  const Mat a = s.lambdas_flat().asDiagonal().toDenseMatrix().cast<cxd>();
  if ((chi * a + a * chi).norm() >
      1e-10 * n * std::max(1.0, s.lambdas_flat().cwiseAbs().maxCoeff()))
    throw std::invalid_argument("chirality must anticommute with A");

  const Mat K = s.slot_basis({0.0, std::nextafter(0.0, 1.0)});
  Mat w_plus(n, 0), w_minus_like(n, 0);
  if (K.cols() > 0) {
    const Mat chi_k = K.adjoint() * chi * K;
    Eigen::SelfAdjointEigenSolver<Mat> es(chi_k);
    std::vector<Eigen::Index> plus, minus;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      (es.eigenvalues()(i) > 0 ? plus : minus).push_back(i);
    Mat vp(K.cols(), plus.size()), vm(K.cols(), minus.size());
    for (size_t i = 0; i < plus.size(); ++i)
      vp.col(i) = es.eigenvectors().col(plus[i]);
    for (size_t i = 0; i < minus.size(); ++i)
      vm.col(i) = es.eigenvectors().col(minus[i]);
    w_plus = K * vp;
    w_minus_like = K * vm;
  }
  EllipticDecomposition d;
  d.v_minus = s.slot_basis(Interval::below(0.0));
  // Special decomposition at a = 0: the positive block together with the
  // chi = -1 half of the kernel.
  d.v_plus = hcat(s.slot_basis({std::nextafter(0.0, 1.0),
                                std::numeric_limits<double>::infinity()}),
                  w_minus_like);
  d.w_minus = Mat(n, 0);
  d.w_plus = w_plus;
  d.g = d.v_plus.adjoint() * chi * d.v_minus;
  d.cut = 0.0;
  return {spec, d, subspace_of(d), std::move(tag)};
}

namespace {

BoundaryCondition make_chirality(SpectrumPtr spec,
                                 const std::vector<int>& signs) {
  const Mat chi = chirality_matrix(*spec, signs);
  std::ostringstream tag;
  tag << "chirality:";
  for (size_t i = 0; i < signs.size(); ++i)
    tag << (i ? "," : "") << (signs[i] > 0 ? "+1" : "-1");
  return boundary_chirality_condition(spec, chi, tag.str());
}

BoundaryCondition make_transmission(SpectrumPtr spec) {
  const auto& s = *spec;
  auto comps = s.component_labels();
  if (comps.size() != 2)
    throw std::invalid_argument(
        "transmission requires a doubled spectrum with two components");
  const int c0 = comps[0], c1 = comps[1];
  // Pair each copy-1 line of A0-eigenvalue mu with the copy-2 line of
  // A-eigenvalue -mu (same A0-line on the other side of the cut).
  auto partner = [&](const EigenLine& l) -> const EigenLine& {
    for (const auto& m : s.lines())
      if (m.component == c1 && m.lambda == -l.lambda) return m;
    throw std::invalid_argument("transmission: unmatched doubled spectrum");
  };
  std::vector<Vec> wp, wm;
  Mat g = Mat::Zero(s.slot_basis({std::nextafter(0.0, 1.0),
                                  std::numeric_limits<double>::infinity()})
                        .cols(),
                    s.slot_basis(Interval::below(0.0)).cols());
  const Mat v_minus = s.slot_basis(Interval::below(0.0));
  const Mat v_plus = s.slot_basis(
      {std::nextafter(0.0, 1.0), std::numeric_limits<double>::infinity()});
  auto flat_col_index = [&](const Mat& basis, int flat) {
    for (Eigen::Index j = 0; j < basis.cols(); ++j)
      if (std::abs(basis(flat, j) - 1.0) < 0.5) return j;
    throw std::logic_error("slot not in basis");
  };
  for (const auto& l : s.lines()) {
    if (l.component != c0) continue;
    const auto& p = partner(l);
    if (p.mult != l.mult)
      throw std::invalid_argument("transmission: multiplicity mismatch");
    for (int slot = 0; slot < l.mult; ++slot) {
      const int i0 = s.offset(l.id) + slot;
      const int i1 = s.offset(p.id) + slot;
      if (l.lambda == 0.0) {
        Vec a = Vec::Zero(s.total_dim()), b = Vec::Zero(s.total_dim());
        a(i0) = a(i1) = 1.0 / std::sqrt(2.0);
        b(i0) = 1.0 / std::sqrt(2.0);
        b(i1) = -1.0 / std::sqrt(2.0);
        wp.push_back(a);
        wm.push_back(b);
      } else if (l.lambda < 0.0) {
        g(flat_col_index(v_plus, i1), flat_col_index(v_minus, i0)) = 1.0;
      } else {
        g(flat_col_index(v_plus, i0), flat_col_index(v_minus, i1)) = 1.0;
      }
    }
  }
  EllipticDecomposition d;
  d.v_minus = v_minus;
  d.v_plus = v_plus;
  d.w_plus = Mat(s.total_dim(), wp.size());
  d.w_minus = Mat(s.total_dim(), wm.size());
  for (size_t i = 0; i < wp.size(); ++i) d.w_plus.col(i) = wp[i];
  for (size_t i = 0; i < wm.size(); ++i) d.w_minus.col(i) = wm[i];
  d.g = g;
  d.cut = 0.0;
  return {spec, d, subspace_of(d), "transmission"};
}

}  // namespace

BoundaryCondition anticommuting_chirality_condition(SpectrumPtr spec,
                                                    double sign) {
  const auto& s = *spec;
  const int n = s.total_dim();
  Vec grading = Vec::Zero(n);
  for (int i = 0; i < n; ++i)
    grading(i) = s.lambdas_flat()(i) > 0 ? 1.0 : (s.lambdas_flat()(i) < 0 ? -1.0 : 0.0);
  Mat gamma = grading.asDiagonal();
  const Mat L = kernel_split(s);
  if (L.cols() > 0)
    gamma += projector(L) - projector(Mat(s.sigma_flat() * L));
  const Mat chi = sign * s.sigma_flat() * gamma;
  return boundary_chirality_condition(
      spec, chi, sign > 0 ? "chirality-local:+" : "chirality-local:-");
}

BoundaryCondition build_condition(SpectrumPtr spec, const BCRecipe& recipe) {
  if (!spec) throw std::invalid_argument("null spectrum");
  return std::visit(
      [&](const auto& r) -> BoundaryCondition {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, GapsRecipe>) {
          std::ostringstream tag;
          tag << "gaps:a=" << r.a;
          return make_gaps(spec, r.a, tag.str());
        } else if constexpr (std::is_same_v<T, ApsRecipe>) {
          return make_gaps(spec, 0.0, "aps");
        } else if constexpr (std::is_same_v<T, MapsRecipe>) {
          return make_maps(spec);
        } else if constexpr (std::is_same_v<T, ChiralityRecipe>) {
          return make_chirality(spec, r.signs);
        } else if constexpr (std::is_same_v<T, TransmissionRecipe>) {
          return make_transmission(spec);
        } else {
          BoundaryCondition b{spec, r.decomp, subspace_of(r.decomp), r.label};
          if (b.decomp.v_minus.rows() != spec->total_dim())
            throw std::invalid_argument("custom blocks have wrong row count");
          return b;
        }
      },
      recipe);
}

BoundaryCondition adjoint_condition(const BoundaryCondition& b) {
  const Mat& sig = b.spec->sigma_flat();
  EllipticDecomposition d;
  d.v_minus = sig * b.decomp.v_plus;
  d.w_minus = sig * b.decomp.w_plus;
  d.v_plus = sig * b.decomp.v_minus;
  d.w_plus = sig * b.decomp.w_minus;
  d.g = -b.decomp.g.adjoint();
  d.cut = b.decomp.cut;
  return {b.spec, d, subspace_of(d), "adjoint(" + b.tag + ")"};
}

bool is_selfadjoint(const BoundaryCondition& b, double tol) {
  return projector_distance(b.subspace, adjoint_condition(b).subspace) <= tol;
}

SymmetryClass classify_symmetry(const BoundaryCondition& b, double tol) {
  const BoundaryCondition ad = adjoint_condition(b);
  if (projector_distance(b.subspace, ad.subspace) <= tol)
    return SymmetryClass::Selfadjoint;
  const Mat res = b.subspace - projector(ad.subspace) * b.subspace;
  if (res.norm() <= tol) return SymmetryClass::SymmetricNotSelfadjoint;
  return SymmetryClass::NotSymmetric;
}

std::string to_string(SymmetryClass c) {
  switch (c) {
    case SymmetryClass::Selfadjoint:
      return "selfadjoint";
    case SymmetryClass::SymmetricNotSelfadjoint:
      return "symmetric, not selfadjoint";
    default:
      return "not symmetric";
  }
}

Mat NormalForm::reconstruct(const BoundarySpectrum& spec) const {
  const Mat& sig = spec.sigma_flat();
  Mat U = Mat(spec.total_dim(), V.cols() + L.cols());
  if (U.cols() > 0) U << V, L;
  Mat graph = U + sig * U * g;
  Mat sw = sig * W;
  Mat all(spec.total_dim(), sw.cols() + graph.cols());
  if (all.cols() == 0) return all;
  all << sw, graph;
  return orthonormal_columns(all);
}

NormalForm normal_form(const BoundaryCondition& b, double tol) {
  const auto& s = *b.spec;
  if (!is_selfadjoint(b, tol))
    throw std::runtime_error("normal_form: condition is not selfadjoint");
  const Mat& sig = s.sigma_flat();
  const Mat Nb = s.slot_basis(Interval::below(0.0));
  const Mat Kb = s.slot_basis({0.0, std::nextafter(0.0, 1.0)});
  const Mat& B = b.subspace;

  NormalForm nf;
  nf.V = orthonormal_columns(projector(Nb) * B, 1e-8);
  nf.W = complement_within(Nb, nf.V, 1e-8);

  // The kernel half L is the lambda = 0 shadow of the part of B with no
  // negative component (and orthogonal to sigma W); it is automatically
  // Lagrangian for the sigma form when B is selfadjoint.
  const int kdim = static_cast<int>(Kb.cols());
  if (kdim % 2 != 0)
    throw std::runtime_error(
        "normal_form: odd-dimensional ker A admits no kernel split");
  Mat constraints(Nb.cols() + nf.W.cols(), B.cols());
  if (constraints.rows() > 0)
    constraints << Nb.adjoint() * B, (sig * nf.W).adjoint() * B;
  Mat X = nullspace(constraints, 1e-8);
  Mat B0 = orthonormal_columns(B * X, 1e-8);
  nf.L = orthonormal_columns(projector(Kb) * B0, 1e-8);
  if (nf.L.cols() * 2 != kdim)
    throw std::runtime_error("normal_form: no valid kernel split exists");
  if (kdim > 0) {
    if ((nf.L.adjoint() * sig * nf.L).norm() > 1e-8)
      throw std::runtime_error("normal_form: kernel part is not Lagrangian");
  }

  Mat U(s.total_dim(), nf.V.cols() + nf.L.cols());
  if (U.cols() > 0) U << nf.V, nf.L;

  // Graph extraction over V ⊕ L within B ∩ (sigma W)^perp.
  Mat Xp = nullspace(Mat((sig * nf.W).adjoint() * B), 1e-8);
  Mat Bp = B * Xp;  // columns stay independent
  if (Bp.cols() != U.cols())
    throw std::runtime_error("normal_form: unexpected graph dimension");
  nf.g = Mat::Zero(U.cols(), U.cols());
  if (U.cols() > 0) {
    Mat C = U.adjoint() * Bp;
    Eigen::FullPivLU<Mat> lu(C);
    if (!lu.isInvertible())
      throw std::runtime_error("normal_form: graph projection is singular");
    Mat Gb = Bp * lu.inverse();
    Mat R = Gb - U;
    nf.g = U.adjoint() * (-(sig * R));
    if ((R - sig * U * nf.g).norm() > 1e-7)
      throw std::runtime_error("normal_form: graph residual too large");
    if ((nf.g - nf.g.adjoint()).norm() > 1e-7)
      throw std::runtime_error("normal_form: extracted g is not selfadjoint");
    nf.g = 0.5 * (nf.g + nf.g.adjoint());
  }
  if (projector_distance(nf.reconstruct(s), B) > 1e-8)
    throw std::runtime_error("normal_form: reconstruction mismatch");
  return nf;
}

bool EllipticityReport::pass() const {
  return std::all_of(clauses.begin(), clauses.end(),
                     [](const auto& c) { return c.pass; });
}

EllipticityReport ellipticity_check(const BoundaryCondition& b, double tol) {
  const auto& s = *b.spec;
  const auto& d = b.decomp;
  EllipticityReport rep;
  rep.dim_w_minus = static_cast<int>(d.w_minus.cols());
  rep.dim_w_plus = static_cast<int>(d.w_plus.cols());
  rep.g_norm = op_norm(d.g);
  rep.g_adjoint_norm = op_norm(Mat(d.g.adjoint()));

  const Mat all = hcat(hcat(d.v_minus, d.w_minus), hcat(d.v_plus, d.w_plus));
  const Mat gram = all.adjoint() * all;
  const double ortho =
      (gram - Mat::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
  rep.clauses.push_back({"blocks-orthonormal", ortho <= tol, ortho});

  const bool complete = all.cols() == s.total_dim();
  double completeness = complete
                            ? (projector(all) -
                               Mat::Identity(s.total_dim(), s.total_dim()))
                                  .norm()
                            : std::numeric_limits<double>::infinity();
  rep.clauses.push_back(
      {"blocks-complete", complete && completeness <= tol, completeness});

  const Mat low = s.slot_basis(
      {-std::numeric_limits<double>::infinity(),
       std::nextafter(d.cut, std::numeric_limits<double>::infinity())});
  const Mat high = s.slot_basis(
      {-d.cut, std::numeric_limits<double>::infinity()});
  const Mat minus_part = hcat(d.v_minus, d.w_minus);
  const Mat plus_part = hcat(d.v_plus, d.w_plus);
  double leak = 0.0;
  if (minus_part.cols() > 0)
    leak = (minus_part - projector(low) * minus_part).norm();
  if (plus_part.cols() > 0)
    leak = std::max(leak, (plus_part - projector(high) * plus_part).norm());
  rep.clauses.push_back({"interval-containment", leak <= tol, leak});

  rep.clauses.push_back(
      {"w-finite-dimensional", true,
       static_cast<double>(rep.dim_w_minus + rep.dim_w_plus)});
  rep.clauses.push_back({"g-order-zero-norms-recorded",
                         std::isfinite(rep.g_norm) &&
                             std::isfinite(rep.g_adjoint_norm),
                         rep.g_norm});

  const double sub = projector_distance(b.subspace, subspace_of(d));
  rep.clauses.push_back({"subspace-matches-decomposition", sub <= tol, sub});
  return rep;
}

IndexOffset index_offset(const BoundaryCondition& b) {
  return {static_cast<long>(b.decomp.w_plus.cols()) -
              static_cast<long>(b.decomp.w_minus.cols()),
          b.decomp.cut};
}

long quotient_dim(const BoundaryCondition& b1, const BoundaryCondition& b2,
                  double tol) {
  if (b1.spec->total_dim() != b2.spec->total_dim())
    throw std::invalid_argument("conditions live over different spectra");
  const Mat res = b1.subspace - projector(b2.subspace) * b1.subspace;
  if (res.norm() > tol)
    throw std::invalid_argument("quotient_dim: b1 is not contained in b2");
  return static_cast<long>(b2.dim() - b1.dim());
}

BoundaryCondition scale_graph(const BoundaryCondition& b, double s) {
  EllipticDecomposition d = b.decomp;
  d.g *= s;
  std::ostringstream tag;
  tag << b.tag << "@s=" << s;
  return {b.spec, d, subspace_of(d), tag.str()};
}

nlohmann::json condition_to_json(const BoundaryCondition& b) {
  return {{"tag", b.tag},
          {"cut", b.decomp.cut},
          {"blocks",
           {{"v_minus", matrix_to_json(b.decomp.v_minus)},
            {"w_minus", matrix_to_json(b.decomp.w_minus)},
            {"v_plus", matrix_to_json(b.decomp.v_plus)},
            {"w_plus", matrix_to_json(b.decomp.w_plus)}}},
          {"g", matrix_to_json(b.decomp.g)}};
}

BoundaryCondition condition_from_json(SpectrumPtr spec,
                                      const nlohmann::json& j) {
  EllipticDecomposition d;
  d.v_minus = matrix_from_json(j.at("blocks").at("v_minus"));
  d.w_minus = matrix_from_json(j.at("blocks").at("w_minus"));
  d.v_plus = matrix_from_json(j.at("blocks").at("v_plus"));
  d.w_plus = matrix_from_json(j.at("blocks").at("w_plus"));
  d.g = matrix_from_json(j.at("g"));
  d.cut = j.at("cut").get<double>();
  return build_condition(spec,
                         CustomRecipe{d, j.value("tag", std::string("custom"))});
}

}  // namespace diracbvp
