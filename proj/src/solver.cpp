#include "diracbvp/solver.hpp"

#include <cmath>

namespace diracbvp {

namespace {

struct TraceCoordinates {
  Mat embedding;               // total_dim x d, columns are flat slot vectors
  std::vector<int> unknowns;   // unknown index per trace coordinate
  std::vector<double> scales;  // coefficient = scale * u_hat[unknown]
};

bool side_uses(const TraceTarget& t, AssemblySide side) {
  switch (side) {
    case AssemblySide::Full:
      return true;
    case AssemblySide::Primal:
      return !t.adjoint_side;
    case AssemblySide::Adjoint:
      return t.adjoint_side;
  }
  return true;
}

int end_node(const Grid& g, int end) { return end == 0 ? 0 : g.size() - 1; }

// Unknown layout: Full = [u1 nodes | u2 nodes]; Primal = u1 only;
// Adjoint = u2 only.
int unknown_index(const Grid& g, AssemblySide side, int block, int node) {
  const int n = g.size();
  if (side == AssemblySide::Full) return block * n + node;
  return node;
}

TraceCoordinates trace_coordinates(const ModeProblem& mode, const Grid& grid,
                                   const BoundarySpectrum& spec,
                                   AssemblySide side) {
  TraceCoordinates tc;
  std::vector<const TraceTarget*> used;
  for (const auto& t : mode.traces)
    if (side_uses(t, side)) used.push_back(&t);
  tc.embedding = Mat::Zero(spec.total_dim(), used.size());
  for (size_t j = 0; j < used.size(); ++j) {
    const auto& t = *used[j];
    const EigenLine& l = spec.line(t.line_id);
    if (t.slot.size() != l.mult)
      throw std::invalid_argument("trace slot length mismatch");
    tc.embedding.block(spec.offset(t.line_id), j, l.mult, 1) = t.slot;
    const int node = end_node(grid, t.end);
    const int blk = (side == AssemblySide::Full) ? t.block : 0;
    tc.unknowns.push_back(unknown_index(grid, side, blk, node));
    // boundary coefficient = sqrt(area factor) * nodal value
    tc.scales.push_back(std::sqrt(mode.weight(grid.nodes(node))));
  }
  return tc;
}

Eigen::MatrixXd sample_diag(const Grid& g,
                            const std::function<double(double)>& f) {
  Eigen::VectorXd v(g.size());
  for (int i = 0; i < g.size(); ++i) v(i) = f(g.nodes(i));
  return v.asDiagonal();
}

// sigma action on the mode's trace coordinates; defined only when the span of
// the trace embedding is sigma invariant.
bool restricted_sigma(const BoundarySpectrum& spec, const Mat& T, Mat* out) {
  const Mat st = spec.sigma_flat() * T;
  if ((st - projector(T) * st).norm() > 1e-10) return false;
  *out = T.adjoint() * st;
  return true;
}

}  // namespace

Mat AssembledMode::stacked() const {
  // residual rows measured in L2(w dt): left scaling by sqrt(q w) bounds the
  // apex-singular coefficients, so the relative rank threshold separates
  // interpolants of genuine solutions from everything else
  Mat m(op.rows() + constraints.rows(), op.cols());
  m.topRows(op.rows()) = wdiag.cwiseSqrt().asDiagonal() * op;
  m.bottomRows(constraints.rows()) = constraints;
  return m;
}

std::pair<Mat, Mat> AssembledMode::pencil() const {
  Mat A = op;
  Mat B = Mat::Identity(op.rows(), op.cols());
  if (static_cast<Eigen::Index>(boundary_rows.size()) < constraints.rows())
    throw std::runtime_error("not enough boundary rows to substitute");
  for (Eigen::Index r = 0; r < constraints.rows(); ++r) {
    const int row = boundary_rows[r];
    A.row(row) = constraints.row(r);
    B.row(row).setZero();
  }
  return {A, B};
}

AssembledMode assemble(const ModeProblem& mode, const Grid& grid,
                       const BoundaryCondition* condition, AssemblySide side) {
  if (grid.size() < 16) throw std::invalid_argument("grid too coarse (< 16)");
  if (mode.periodic && condition)
    throw std::invalid_argument("periodic modes take no boundary condition");

  AssembledMode am;
  am.mode = mode;
  am.grid = grid;
  am.side = side;

  const int n = grid.size();
  Eigen::MatrixXd P = sample_diag(grid, mode.p);
  Eigen::MatrixXd B = sample_diag(grid, mode.bterm);
  Eigen::MatrixXd Wm = sample_diag(grid, mode.weight);
  // L_F = d/dt + p + b acts on u2; L_E = -d/dt + p - b acts on u1. The two
  // are mutual adjoints for the measure weight(t) dt.
  Eigen::MatrixXd LF = grid.diff + P + B;
  Eigen::MatrixXd LE = -grid.diff + P - B;

  Eigen::VectorXd wdiag(n);
  for (int i = 0; i < n; ++i) wdiag(i) = grid.weights(i) * Wm(i, i);

  int unknowns = 0;
  if (side == AssemblySide::Full) {
    unknowns = 2 * n;
    am.op = Mat::Zero(unknowns, unknowns);
    am.op.topRightCorner(n, n) = LF.cast<cxd>();
    am.op.bottomLeftCorner(n, n) = LE.cast<cxd>();
    am.wdiag.resize(2 * n);
    am.wdiag << wdiag, wdiag;
  } else {
    unknowns = n;
    am.op = (side == AssemblySide::Primal ? LE : LF).cast<cxd>();
    am.wdiag = wdiag;
  }

  std::vector<Eigen::RowVectorXcd> rows;
  std::vector<int> end_hint;  // 0 or 1: which endpoint a row belongs to
  if (condition) {
    const auto& spec = *condition->spec;
    TraceCoordinates tc = trace_coordinates(mode, grid, spec, side);
    am.trace_dim = static_cast<int>(tc.unknowns.size());
    if (am.trace_dim > 0) {
      const Mat& T = tc.embedding;
      const Mat Y = T - projector(condition->subspace) * T;
      const Mat block = nullspace(Y, 1e-10);
      am.block_dim = static_cast<int>(block.cols());
      const Mat comp = nullspace(Mat(block.adjoint()), 1e-10);
      std::vector<int> target_end;
      for (const auto& t : mode.traces)
        if (side_uses(t, side)) target_end.push_back(t.end);
      for (Eigen::Index r = 0; r < comp.cols(); ++r) {
        Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(unknowns);
        int dominant = 0;
        double best = -1.0;
        for (int j = 0; j < am.trace_dim; ++j) {
          row(tc.unknowns[j]) += std::conj(comp(j, r)) * tc.scales[j];
          if (std::abs(comp(j, r)) > best) {
            best = std::abs(comp(j, r));
            dominant = target_end[j];
          }
        }
        rows.push_back(row / row.norm());
        end_hint.push_back(dominant);
      }
      Mat sig_m;
      if (restricted_sigma(spec, T, &sig_m)) {
        const Mat ortho = nullspace(Mat(block.adjoint()), 1e-10);
        am.block_selfadjoint =
            projector_distance(block, Mat(sig_m * ortho)) <= 1e-9;
      } else {
        am.block_selfadjoint = false;
      }
    } else {
      am.block_selfadjoint = true;  // nothing to constrain on this mode
    }
  }
  am.num_trace_rows = static_cast<int>(rows.size());

  if (mode.periodic) {
    for (int blk = 0; blk < 2; ++blk) {
      Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(unknowns);
      row(unknown_index(grid, side, blk, 0)) = 1.0;
      row(unknown_index(grid, side, blk, n - 1)) = -1.0;
      rows.push_back(row / row.norm());
      end_hint.push_back(blk);  // spread over the two ends
    }
  }

  if (mode.apex) {
    Eigen::RowVectorXd at0 = interpolation_row(grid, 0.0);
    auto apex_row = [&](int blk) {
      Eigen::RowVectorXcd row = Eigen::RowVectorXcd::Zero(unknowns);
      for (int i = 0; i < n; ++i)
        row(unknown_index(grid, side, blk, i)) = at0(i);
      rows.push_back(row / row.norm());
      end_hint.push_back(0);
    };
    const bool want_u1 = mode.apex_row_u1 &&
                         (side == AssemblySide::Full || side == AssemblySide::Primal);
    const bool want_u2 = mode.apex_row_u2 &&
                         (side == AssemblySide::Full || side == AssemblySide::Adjoint);
    if (want_u1) apex_row(0);
    if (want_u2) apex_row(side == AssemblySide::Full ? 1 : 0);
  }

  am.constraints = Mat::Zero(rows.size(), unknowns);
  for (size_t r = 0; r < rows.size(); ++r) am.constraints.row(r) = rows[r];

  // Designate the collocation rows the constraints substitute. Each row
  // replaces the endpoint collocation row of the equation block that
  // propagates its dominant unknown (u1 lives in the L_E rows, u2 in the L_F
  // rows), so every first-order scalar equation keeps its full interior
  // collocation.
  const bool full = side == AssemblySide::Full;
  auto row_of = [&](int end, int block) {
    const int node = end == 0 ? 0 : n - 1;
    if (!full) return node;
    return block == 0 ? n + node : node;  // u1 -> L_E rows, u2 -> L_F rows
  };
  std::vector<bool> used(2 * n, false);
  int used_in_block[2] = {0, 0};
  am.boundary_rows.assign(rows.size(), -1);
  std::vector<double> strength0(rows.size()), strength1(rows.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    double s[2] = {0.0, 0.0};
    for (int j = 0; j < unknowns; ++j) {
      const int b = (full && j >= n) ? 1 : 0;
      s[b] = std::max(s[b], std::abs(am.constraints(r, j)));
    }
    strength0[r] = s[0];
    strength1[r] = s[1];
  }
  auto place = [&](size_t r, int bstar) {
    int chosen = -1;
    for (auto [e, bl] : {std::pair{end_hint[r], bstar},
                         std::pair{end_hint[r], 1 - bstar},
                         std::pair{1 - end_hint[r], bstar},
                         std::pair{1 - end_hint[r], 1 - bstar}}) {
      const int cand = row_of(e, full ? bl : 0);
      if (!used[cand]) {
        chosen = cand;
        break;
      }
    }
    if (chosen < 0)
      throw std::runtime_error("more constraints than substitutable rows");
    used[chosen] = true;
    used_in_block[(full && chosen < n) ? 1 : 0]++;
    am.boundary_rows[r] = chosen;
  };
  // forced single-block rows first, then ambiguous ones balanced across the
  // blocks so every scalar equation keeps determined dynamics
  for (size_t r = 0; r < rows.size(); ++r) {
    const bool only0 = !full || strength1[r] < 1e-12 * (strength0[r] + 1e-300);
    const bool only1 = full && strength0[r] < 1e-12 * (strength1[r] + 1e-300);
    if (only0) place(r, 0);
    else if (only1) place(r, 1);
  }
  for (size_t r = 0; r < rows.size(); ++r) {
    if (am.boundary_rows[r] >= 0) continue;
    int bstar;
    if (used_in_block[0] != used_in_block[1])
      bstar = used_in_block[0] < used_in_block[1] ? 0 : 1;
    else
      bstar = strength0[r] >= strength1[r] ? 0 : 1;
    place(r, bstar);
  }
  return am;
}

KernelResult kernel_dim(const AssembledMode& am, double tol) {
  const Mat m = am.stacked();
  Eigen::JacobiSVD<Mat> svd(m);
  const auto& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  KernelResult kr;
  if (smax == 0.0) {
    kr.dim = static_cast<int>(m.cols());
    return kr;
  }
  int r = 0;
  while (r < s.size() && s(r) > tol * smax) ++r;
  kr.dim = static_cast<int>(s.size()) - r;
  kr.sigma_reject = r > 0 ? s(r - 1) : 0.0;  // smallest value kept as nonzero
  kr.sigma_accept = kr.dim > 0 ? s(r) : 0.0; // largest value counted as zero
  if (kr.dim > 0 && kr.sigma_accept > 0 &&
      kr.sigma_reject / kr.sigma_accept < 10.0)
    kr.flagged = true;
  return kr;
}

EigenResult eigenvalues(const AssembledMode& am) {
  if (am.side != AssemblySide::Full)
    throw std::runtime_error("eigenvalues need the full mode system");
  if (!am.mode.periodic && !am.block_selfadjoint)
    throw std::runtime_error(
        "eigenvalues: boundary condition is not selfadjoint on this mode");
  // Generalized pencil with the boundary rows substituted, solved through a
  // complex shift off the real axis (the constrained operator is selfadjoint,
  // so its spectrum is real and the shift is safe).
  auto [A, B] = am.pencil();
  const cxd tau(0.219, 0.83);
  Eigen::PartialPivLU<Mat> lu(A - tau * B);
  const Mat S = lu.solve(B);
  Eigen::ComplexEigenSolver<Mat> es(S);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigenvalue iteration failed");
  EigenResult er;
  std::vector<double> vals;
  double max_imag = 0.0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
    const cxd mu = es.eigenvalues()(i);
    if (std::abs(mu) < 1e-13) continue;  // infinite pencil branch
    const cxd lam = tau + 1.0 / mu;
    // spurious discretization eigenvalues come with O(1) imaginary parts;
    // resolved ones are real to solver precision
    if (std::abs(lam.imag()) <= 1e-8 * std::max(1.0, std::abs(lam))) {
      vals.push_back(lam.real());
      max_imag = std::max(max_imag,
                          std::abs(lam.imag()) / std::max(1.0, std::abs(lam)));
    }
  }
  std::sort(vals.begin(), vals.end());
  er.eigenvalues = Eigen::Map<Eigen::VectorXd>(vals.data(), vals.size());
  er.hermiticity_residual = max_imag;
  return er;
}

double greens_residual(const ModeProblem& mode, const Grid& grid,
                       const Mat& phi, const Mat& psi) {
  const int n = grid.size();
  if (phi.rows() != n || phi.cols() != 2 || psi.rows() != n || psi.cols() != 2)
    throw std::invalid_argument("sections must be grid.size() x 2");
  Eigen::MatrixXd P = sample_diag(grid, mode.p);
  Eigen::MatrixXd B = sample_diag(grid, mode.bterm);
  Eigen::MatrixXd LF = grid.diff + P + B;
  Eigen::MatrixXd LE = -grid.diff + P - B;
  auto apply = [&](const Mat& f) {
    Mat out(n, 2);
    out.col(0) = LF.cast<cxd>() * f.col(1);
    out.col(1) = LE.cast<cxd>() * f.col(0);
    return out;
  };
  const Mat dphi = apply(phi), dpsi = apply(psi);
  Eigen::VectorXd w(n);
  for (int i = 0; i < n; ++i) w(i) = grid.weights(i) * mode.weight(grid.nodes(i));
  cxd i1 = 0, i2 = 0;
  for (int i = 0; i < n; ++i)
    for (int b = 0; b < 2; ++b) {
      i1 += w(i) * std::conj(psi(i, b)) * dphi(i, b);
      i2 += w(i) * std::conj(dpsi(i, b)) * phi(i, b);
    }
  // sigma pairing: top end rotation (u1,u2) -> (-u2,u1); bottom end the
  // opposite rotation. The apex carries no boundary.
  cxd bdry = 0;
  auto pair_at = [&](int node, double sgn) {
    const double wt = mode.weight(grid.nodes(node));
    bdry += sgn * wt *
            (std::conj(psi(node, 0)) * (-phi(node, 1)) +
             std::conj(psi(node, 1)) * phi(node, 0));
  };
  pair_at(n - 1, +1.0);
  if (!mode.apex && grid.nodes(0) == 0.0) pair_at(0, -1.0);
  return std::abs(i1 - i2 + bdry);
}

double weitzenbock_residual(const ModeProblem& mode, const Grid& grid,
                            const Mat& phi) {
  const int n = grid.size();
  if (phi.rows() != n || phi.cols() != 2)
    throw std::invalid_argument("section must be grid.size() x 2");
  Eigen::MatrixXd P = sample_diag(grid, mode.p);
  Eigen::MatrixXd B = sample_diag(grid, mode.bterm);
  Eigen::MatrixXd LF = grid.diff + P + B;
  Eigen::MatrixXd LE = -grid.diff + P - B;
  // D^2 block diagonal: LF LE on u1, LE LF on u2.
  Mat d2(n, 2);
  d2.col(0) = (LF * LE).cast<cxd>() * phi.col(0);
  d2.col(1) = (LE * LF).cast<cxd>() * phi.col(1);
  // nabla*nabla + K: -(d/dt)^2 - (w'/w) d/dt + lap_j + K per component.
  Eigen::MatrixXd div = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) div(i, i) = 2.0 * mode.bterm(grid.nodes(i));
  Eigen::MatrixXd radial = -(grid.diff * grid.diff) - div * grid.diff;
  Mat lap(n, 2);
  lap.col(0) =
      (radial + sample_diag(grid, mode.lap1) + sample_diag(grid, mode.curv))
          .cast<cxd>() *
      phi.col(0);
  lap.col(1) =
      (radial + sample_diag(grid, mode.lap2) + sample_diag(grid, mode.curv))
          .cast<cxd>() *
      phi.col(1);
  // compare on interior collocation points only (second derivatives lose
  // accuracy in the outermost rows)
  const int lo = n / 8 + 1, hi = n - n / 8 - 1;
  double num = 0, den = 0;
  for (int i = lo; i < hi; ++i)
    for (int b = 0; b < 2; ++b) {
      num += std::norm(d2(i, b) - lap(i, b));
      den += std::norm(phi(i, b));
    }
  return std::sqrt(num / std::max(den, 1e-300));
}

KillingReport killing_check(const Geometry& geom, double alpha,
                            const BoundaryCondition& b,
                            const SolveOptions& opt) {
  const auto* cap = std::get_if<CapGeometry>(&geom.shape);
  if (!cap) throw std::invalid_argument("killing_check needs a warped cap");
  ModeFamily fam = reduce_to_modes(geom);

  KillingReport rep;
  rep.alpha = alpha;
  rep.eigenvalue = cap->n * alpha;
  rep.trace_in_condition = true;

  const double mlow = 0.5 * (cap->n - 1);
  for (double msign : {+1.0, -1.0}) {
    const ModeProblem* mode = nullptr;
    for (const auto& mp : fam.modes)
      if (mp.fiber_eigenvalue == msign * mlow) {
        mode = &mp;
        break;
      }
    if (!mode) throw std::runtime_error("cutoff excludes the lowest cap mode");
    Grid grid = make_grid(opt.grid_n, mode->T, true);
    const int n = grid.size();

    // radial Killing system u1' = -alpha u2, u2' = alpha u1 on unscaled
    // components, with the branch regular for this mode at the apex.
    Mat K = Mat::Zero(2 * n, 2 * n);
    K.topLeftCorner(n, n) = grid.diff.cast<cxd>();
    K.topRightCorner(n, n) = alpha * Mat::Identity(n, n);
    K.bottomLeftCorner(n, n) = -alpha * Mat::Identity(n, n);
    K.bottomRightCorner(n, n) = grid.diff.cast<cxd>();
    Eigen::RowVectorXd at0 = interpolation_row(grid, 0.0);
    Mat sel = Mat::Zero(1, 2 * n);
    if (msign > 0)
      sel.block(0, n, 1, n) = at0.cast<cxd>();  // u2 vanishes at the apex
    else
      sel.block(0, 0, 1, n) = at0.cast<cxd>();
    Mat stacked(2 * n + 1, 2 * n);
    stacked.topRows(2 * n) = K;
    stacked.bottomRows(1) = sel * K.cwiseAbs().maxCoeff();
    Mat null = nullspace(stacked, 1e-7);
    if (null.cols() != 1)
      throw std::runtime_error("killing profile extraction failed");
    Vec u = null.col(0);
    // fix the global phase so u1 is real positive at the outer end
    const cxd ph = u(n - 1) / std::abs(u(n - 1));
    u /= ph;

    // (a) eigen residual against the mode operator
    Eigen::MatrixXd P = sample_diag(grid, mode->p);
    Eigen::MatrixXd Bm = sample_diag(grid, mode->bterm);
    Eigen::MatrixXd LF = grid.diff + P + Bm;
    Eigen::MatrixXd LE = -grid.diff + P - Bm;
    Vec du(2 * n);
    du.head(n) = LF.cast<cxd>() * u.tail(n);
    du.tail(n) = LE.cast<cxd>() * u.head(n);
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i)
      w(i) = grid.weights(i) * mode->weight(grid.nodes(i));
    double num = 0, den = 0, nmin = 1e300, nmax = 0;
    for (int i = 0; i < n; ++i) {
      const cxd r1 = du(i) - rep.eigenvalue * u(i);
      const cxd r2 = du(n + i) - rep.eigenvalue * u(n + i);
      num += w(i) * (std::norm(r1) + std::norm(r2));
      const double pointwise = std::norm(u(i)) + std::norm(u(n + i));
      den += w(i) * pointwise;
      nmin = std::min(nmin, pointwise);
      nmax = std::max(nmax, pointwise);
    }
    rep.eigen_residual = std::max(rep.eigen_residual, std::sqrt(num / den));
    rep.norm_deviation =
        std::max(rep.norm_deviation, (nmax - nmin) / std::max(nmax, 1e-300));

    // (c) trace membership in the condition's block on this mode
    const auto& spec = *b.spec;
    Vec trace = Vec::Zero(spec.total_dim());
    const double scale = std::sqrt(mode->weight(mode->T));
    for (const auto& t : mode->traces) {
      const cxd cval = (t.block == 0) ? u(n - 1) : u(2 * n - 1);
      trace.segment(spec.offset(t.line_id), spec.line(t.line_id).mult) +=
          cval * scale * t.slot;
    }
    const Vec res = trace - projector(b.subspace) * trace;
    const double mem = res.norm() / trace.norm();
    rep.membership_residual = std::max(rep.membership_residual, mem);
    if (mem > 1e-8) rep.trace_in_condition = false;
  }
  return rep;
}

int mode_block_dim(const ModeProblem& mode, const BoundaryCondition& b,
                   AssemblySide side) {
  Grid g = make_grid(16, mode.T, mode.apex);
  TraceCoordinates tc = trace_coordinates(mode, g, *b.spec, side);
  if (tc.unknowns.empty()) return 0;
  const Mat Y = tc.embedding - projector(b.subspace) * tc.embedding;
  return static_cast<int>(nullspace(Y, 1e-10).cols());
}

nlohmann::json mode_result_json(const AssembledMode& am,
                                const KernelResult& kr, const EigenResult* er) {
  nlohmann::json j{{"mode_id", am.mode.mode_id},
                   {"label", am.mode.label},
                   {"lambda", am.mode.lambda},
                   {"kernel_dim", kr.dim},
                   {"residuals",
                    {{"rank_gap_flagged", kr.flagged},
                     {"sigma_accept", kr.sigma_accept},
                     {"sigma_reject", kr.sigma_reject}}}};
  j["eigenvalues"] = nlohmann::json::array();
  if (er) {
    for (Eigen::Index i = 0; i < er->eigenvalues.size(); ++i)
      j["eigenvalues"].push_back(er->eigenvalues(i));
    j["residuals"]["hermiticity"] = er->hermiticity_residual;
  }
  return j;
}

}  // namespace diracbvp
