#include "diracbvp/index.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <thread>

namespace diracbvp {

namespace {

int worker_count(size_t jobs) {
  unsigned hw = std::thread::hardware_concurrency();
  if (const char* env = std::getenv("THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) hw = std::min<unsigned>(hw, cap);
  }
  if (hw == 0) hw = 1;
  return static_cast<int>(std::min<size_t>(hw, jobs ? jobs : 1));
}

template <typename F>
void parallel_for(size_t jobs, F&& body) {
  const int workers = worker_count(jobs);
  if (workers <= 1) {
    for (size_t i = 0; i < jobs; ++i) body(i);
    return;
  }
  std::atomic<size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w)
    pool.emplace_back([&] {
      for (;;) {
        const size_t i = next.fetch_add(1);
        if (i >= jobs) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

bool geometry_is_selfadjoint(const ModeFamily& fam) {
  return fam.formally_selfadjoint;
}

// Tail certificate: a mode beyond the truncation has a one-dimensional
// regular solution family whose trace points along a single positive
// eigenline slot. Its contribution is exactly zero iff that direction does
// not lie in the condition. The outermost positive lines stand in for the
// continued pattern; a condition containing one of them would keep admitting
// far kernel elements and needs a larger cutoff.
double certify_tail(const ModeFamily& fam, const BoundaryCondition& b) {
  const auto& spec = *b.spec;
  double edge = 0.0;
  for (const auto& l : spec.lines()) edge = std::max(edge, std::abs(l.lambda));
  const Mat P = projector(b.subspace);
  for (const auto& l : spec.lines()) {
    if (l.lambda < edge - 1e-9) continue;
    for (int s = 0; s < l.mult; ++s) {
      Vec e = Vec::Zero(spec.total_dim());
      e(spec.offset(l.id) + s) = 1.0;
      if ((e - P * e).norm() <= 1e-6) {
        std::ostringstream os;
        os << "tail policy inapplicable: condition '" << b.tag
           << "' admits the outermost line lambda = " << l.lambda
           << "; far modes would keep contributing - increase the cutoff";
        throw std::runtime_error(os.str());
      }
    }
  }
  double tmin = std::numeric_limits<double>::infinity();
  for (const auto& m : fam.modes) tmin = std::min(tmin, m.T);
  return std::exp(-edge * (std::isfinite(tmin) ? tmin : 1.0));
}

void require_same_spectrum(const ModeFamily& fam, const BoundaryCondition& b) {
  if (!fam.spectrum || !same_spectrum(*fam.spectrum, *b.spec))
    throw std::invalid_argument(
        "condition lives over a different spectrum than the geometry");
}

}  // namespace

bool same_spectrum(const BoundarySpectrum& a, const BoundarySpectrum& b,
                   double tol) {
  if (a.total_dim() != b.total_dim() || a.lines().size() != b.lines().size())
    return false;
  for (size_t i = 0; i < a.lines().size(); ++i) {
    const auto &la = a.lines()[i], &lb = b.lines()[i];
    if (la.id != lb.id || la.mult != lb.mult || la.component != lb.component ||
        std::abs(la.lambda - lb.lambda) > tol)
      return false;
  }
  return (a.sigma_flat() - b.sigma_flat()).norm() <= tol * a.total_dim();
}

IndexReport numeric_index(const Geometry& geom, const BoundaryCondition& b,
                          const SolveOptions& opt) {
  if (std::holds_alternative<HornGeometry>(geom.shape))
    throw std::invalid_argument(
        "numeric_index: the horn end is reported through closed-form "
        "coercivity constants, not discretized");
  if (std::holds_alternative<CircleGeometry>(geom.shape))
    throw std::invalid_argument("numeric_index: use periodic_index for the circle");

  ModeFamily fam = reduce_to_modes(geom);
  require_same_spectrum(fam, b);
  const BoundaryCondition b_ad = adjoint_condition(b);
  const bool selfadj_geom = geometry_is_selfadjoint(fam);
  const AssemblySide ker_side =
      selfadj_geom ? AssemblySide::Full : AssemblySide::Primal;
  const AssemblySide coker_side =
      selfadj_geom ? AssemblySide::Full : AssemblySide::Adjoint;

  // The condition (and its adjoint) must decompose along the mode blocks.
  long ker_blocks = 0, coker_blocks = 0;
  for (const auto& m : fam.modes) {
    ker_blocks += mode_block_dim(m, b, ker_side);
    coker_blocks += mode_block_dim(m, b_ad, coker_side);
  }
  if (ker_blocks != b.dim() || coker_blocks != b_ad.dim()) {
    std::ostringstream os;
    os << "condition '" << b.tag
       << "' does not decompose along the geometry's mode blocks ("
       << ker_blocks << " of " << b.dim() << " dims covered)";
    throw std::invalid_argument(os.str());
  }

  IndexReport rep;
  rep.geometry = geometry_label(geom);
  rep.condition_tag = b.tag;
  rep.tail_bound = std::max(certify_tail(fam, b), certify_tail(fam, b_ad));
  rep.per_mode.resize(fam.modes.size());

  parallel_for(fam.modes.size(), [&](size_t i) {
    const ModeProblem& m = fam.modes[i];
    Grid grid = make_grid(opt.grid_n, m.T, m.apex);
    const auto ker =
        kernel_dim(assemble(m, grid, &b, ker_side), opt.rank_tol);
    const auto coker =
        kernel_dim(assemble(m, grid, &b_ad, coker_side), opt.rank_tol);
    rep.per_mode[i] = {m.mode_id, m.label, ker.dim, coker.dim,
                       ker.flagged || coker.flagged};
  });

  for (const auto& pm : rep.per_mode) {
    rep.index += pm.ker_dim - pm.coker_dim;
    rep.flagged = rep.flagged || pm.flagged;
  }
  return rep;
}

IndexReport periodic_index(const Geometry& circle, const SolveOptions& opt) {
  if (!std::holds_alternative<CircleGeometry>(circle.shape))
    throw std::invalid_argument("periodic_index expects the circle geometry");
  ModeFamily fam = reduce_to_modes(circle);
  IndexReport rep;
  rep.geometry = geometry_label(circle);
  rep.condition_tag = "periodic";
  rep.tail_bound = 0.0;
  rep.per_mode.resize(fam.modes.size());
  parallel_for(fam.modes.size(), [&](size_t i) {
    const ModeProblem& m = fam.modes[i];
    Grid grid = make_grid(opt.grid_n, m.T, false);
    AssembledMode am = assemble(m, grid, nullptr, AssemblySide::Full);
    const auto ker = kernel_dim(am, opt.rank_tol);
    // the closed problem is formally selfadjoint and the matching condition
    // is its own adjoint, so the cokernel problem coincides with the kernel
    // problem
    const auto coker = kernel_dim(am, opt.rank_tol);
    rep.per_mode[i] = {m.mode_id, m.label, ker.dim, coker.dim,
                       ker.flagged || coker.flagged};
  });
  for (const auto& pm : rep.per_mode) {
    rep.index += pm.ker_dim - pm.coker_dim;
    rep.flagged = rep.flagged || pm.flagged;
  }
  return rep;
}

CheckEntry check_gaps_shift(const Geometry& geom, double a, double b,
                            const SolveOptions& opt) {
  if (!(a <= b)) std::swap(a, b);
  auto spec = std::make_shared<BoundarySpectrum>(boundary_spectrum(geom));
  const auto ba = build_condition(spec, GapsRecipe{a});
  const auto bb = build_condition(spec, GapsRecipe{b});
  const IndexReport ra = numeric_index(geom, ba, opt);
  const IndexReport rb = numeric_index(geom, bb, opt);
  CheckEntry e;
  e.name = "gaps-shift";
  e.geometry = geometry_label(geom);
  e.condition_tags = {ba.tag, bb.tag};
  e.lhs = rb.index - ra.index;
  e.rhs = spec->count_in({a, b});
  e.pass = (e.lhs == e.rhs) && !ra.flagged && !rb.flagged;
  e.details = {{"ind_a", ra.index}, {"ind_b", rb.index},
               {"flagged", ra.flagged || rb.flagged}};
  return e;
}

CheckEntry check_agranovich_dynin(const Geometry& geom,
                                  const BoundaryCondition& b1,
                                  const BoundaryCondition& b2,
                                  const SolveOptions& opt) {
  const long q = quotient_dim(b1, b2);
  const IndexReport r1 = numeric_index(geom, b1, opt);
  const IndexReport r2 = numeric_index(geom, b2, opt);
  CheckEntry e;
  e.name = "agranovich-dynin";
  e.geometry = geometry_label(geom);
  e.condition_tags = {b1.tag, b2.tag};
  e.lhs = r2.index - r1.index;
  e.rhs = q;
  e.pass = (e.lhs == e.rhs) && !r1.flagged && !r2.flagged;
  e.details = {{"ind_b1", r1.index}, {"ind_b2", r2.index}};
  return e;
}

CheckEntry check_thmad_offset(const Geometry& geom, const BoundaryCondition& b,
                              const SolveOptions& opt) {
  const IndexOffset off = index_offset(b);
  auto spec = std::make_shared<BoundarySpectrum>(boundary_spectrum(geom));
  const auto ref = build_condition(spec, GapsRecipe{off.reference_cut});
  const IndexReport rb = numeric_index(geom, b, opt);
  const IndexReport rr = numeric_index(geom, ref, opt);
  CheckEntry e;
  e.name = "index-offset";
  e.geometry = geometry_label(geom);
  e.condition_tags = {b.tag, ref.tag};
  e.lhs = rb.index - rr.index;
  e.rhs = off.delta;
  e.pass = (e.lhs == e.rhs) && !rb.flagged && !rr.flagged;
  e.details = {{"reference_cut", off.reference_cut},
               {"ind_b", rb.index},
               {"ind_ref", rr.index}};
  return e;
}

CheckEntry check_splitting(const Geometry& circle, double cut_a,
                           const SolveOptions& opt) {
  const auto* c = std::get_if<CircleGeometry>(&circle.shape);
  if (!c) throw std::invalid_argument("check_splitting expects a circle");
  const IndexReport closed = periodic_index(circle, opt);

  Geometry cut = cylinder_geometry(c->length, c->fiber, circle.cutoff);
  auto spec = std::make_shared<BoundarySpectrum>(boundary_spectrum(cut));
  const auto trans = build_condition(spec, TransmissionRecipe{});
  const IndexReport rt = numeric_index(cut, trans, opt);

  // B(a) along the first copy, its orthocomplement along the second.
  std::vector<bool> mask(spec->total_dim(), false);
  for (const auto& l : spec->lines()) {
    const double a0_eig = l.component == 0 ? l.lambda : -l.lambda;
    const bool in = (l.component == 0) ? (a0_eig < cut_a) : (a0_eig >= cut_a);
    if (in)
      for (int s = 0; s < l.mult; ++s) mask[spec->offset(l.id) + s] = true;
  }
  std::ostringstream tag;
  tag << "split-pair:a=" << cut_a;
  const auto pair = spectral_condition(spec, mask, tag.str());
  const IndexReport rp = numeric_index(cut, pair, opt);

  CheckEntry e;
  e.name = "splitting";
  e.geometry = geometry_label(circle);
  e.condition_tags = {"periodic", trans.tag, pair.tag};
  e.lhs = closed.index;
  e.rhs = rt.index;
  e.pass = (closed.index == rt.index) && (rt.index == rp.index) &&
           !closed.flagged && !rt.flagged && !rp.flagged;
  e.details = {{"ind_closed", closed.index},
               {"ind_transmission", rt.index},
               {"ind_split_pair", rp.index}};
  return e;
}

CheckEntry check_cobordism(const Geometry& geom, const std::vector<int>& signs,
                           const SolveOptions& opt) {
  auto spec = std::make_shared<BoundarySpectrum>(boundary_spectrum(geom));
  const Mat chi = chirality_matrix(*spec, signs);
  const Mat isig = cxd(0, 1) * spec->sigma_flat();
  const Mat K = spec->slot_basis({0.0, std::nextafter(0.0, 1.0)});
  auto kernel_rank = [&](const Mat& proj) {
    if (K.cols() == 0) return 0L;
    const Mat m = K.adjoint() * proj * K;
    long r = 0;
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(0.5 * (m + m.adjoint())));
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i)
      if (es.eigenvalues()(i) > 0.5) ++r;
    return r;
  };
  const int n = spec->total_dim();
  const Mat id = Mat::Identity(n, n);
  const long ind_a_plus =
      kernel_rank(0.5 * (id + chi)) - kernel_rank(0.5 * (id - chi));
  const Mat ppp = 0.25 * (id + chi) * (id + isig);
  const Mat pmm = 0.25 * (id - chi) * (id - isig);
  const long ind_a_pp = kernel_rank(ppp) - kernel_rank(pmm);

  const auto bchi = build_condition(spec, ChiralityRecipe{signs});
  const IndexReport rd = numeric_index(geom, bchi, opt);

  bool uniform = true;
  for (int s : signs) uniform = uniform && (s == signs.front());

  CheckEntry e;
  e.name = "cobordism-freed";
  e.geometry = geometry_label(geom);
  e.condition_tags = {bchi.tag};
  e.lhs = rd.index;
  e.rhs = ind_a_pp;
  e.pass = (rd.index == ind_a_pp) && (2 * rd.index == ind_a_plus) &&
           !rd.flagged && (!uniform || ind_a_plus == 0);
  e.details = {{"ind_A_plus", ind_a_plus},
               {"ind_A_pp", ind_a_pp},
               {"ind_D_chi", rd.index},
               {"uniform_signs", uniform}};
  return e;
}

std::vector<long> homotopy_indices(const Geometry& geom,
                                   const BoundaryCondition& b,
                                   const std::vector<double>& svals,
                                   const SolveOptions& opt) {
  std::vector<long> out;
  for (double s : svals)
    out.push_back(numeric_index(geom, scale_graph(b, s), opt).index);
  return out;
}

BoundaryCondition spectral_condition(SpectrumPtr spec,
                                     const std::vector<bool>& slot_mask,
                                     std::string tag) {
  const auto& s = *spec;
  if (static_cast<int>(slot_mask.size()) != s.total_dim())
    throw std::invalid_argument("mask size mismatch");
  // Every line must be fully in or fully out.
  for (const auto& l : s.lines()) {
    const int off = s.offset(l.id);
    for (int k = 1; k < l.mult; ++k)
      if (slot_mask[off + k] != slot_mask[off])
        throw std::invalid_argument(
            "spectral_condition mask must align with whole lines");
  }
  auto pick = [&](bool in, bool negative) {
    std::vector<int> idx;
    for (int i = 0; i < s.total_dim(); ++i)
      if (slot_mask[i] == in && ((s.lambdas_flat()(i) < 0.0) == negative))
        idx.push_back(i);
    Mat m = Mat::Zero(s.total_dim(), idx.size());
    for (size_t j = 0; j < idx.size(); ++j) m(idx[j], j) = 1.0;
    return m;
  };
  EllipticDecomposition d;
  d.v_minus = pick(true, true);
  d.w_minus = pick(false, true);
  d.v_plus = pick(false, false);
  d.w_plus = pick(true, false);
  d.g = Mat::Zero(d.v_plus.cols(), d.v_minus.cols());
  d.cut = 0.0;
  return build_condition(spec, CustomRecipe{d, std::move(tag)});
}

nlohmann::json check_entry_json(const CheckEntry& c) {
  return {{"check", c.name},        {"geometry", c.geometry},
          {"condition_tags", c.condition_tags},
          {"lhs", c.lhs},           {"rhs", c.rhs},
          {"pass", c.pass},         {"details", c.details}};
}

nlohmann::json index_report_json(const IndexReport& r) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& m : r.per_mode)
    per.push_back({{"mode_id", m.mode_id},
                   {"label", m.label},
                   {"ker_dim", m.ker_dim},
                   {"coker_dim", m.coker_dim},
                   {"flagged", m.flagged}});
  nlohmann::json checks = nlohmann::json::array();
  for (const auto& c : r.checks) checks.push_back(check_entry_json(c));
  return {{"geometry", r.geometry}, {"condition", r.condition_tag},
          {"per_mode", per},        {"index", r.index},
          {"tail_bound", r.tail_bound}, {"flagged", r.flagged},
          {"checks", checks}};
}

}  // namespace diracbvp
