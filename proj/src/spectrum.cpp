#include "diracbvp/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace diracbvp {

namespace {

constexpr double kStructTol = 1e-12;

std::string describe(const EigenLine& l) {
  std::ostringstream os;
  os << "line id=" << l.id << " lambda=" << l.lambda << " mult=" << l.mult
     << " component=" << l.component;
  return os.str();
}

}  // namespace

BoundarySpectrum::BoundarySpectrum(std::vector<EigenLine> lines,
                                   SigmaAction sigma)
    : lines_(std::move(lines)), sigma_(std::move(sigma)) {
  std::sort(lines_.begin(), lines_.end(), [](const auto& a, const auto& b) {
    return a.lambda != b.lambda ? a.lambda < b.lambda : a.id < b.id;
  });
  std::set<int> seen;
  total_dim_ = 0;
  for (const auto& l : lines_) {
    if (l.mult < 1) throw std::invalid_argument("mult < 1: " + describe(l));
    if (!seen.insert(l.id).second)
      throw std::invalid_argument("duplicate line id: " + describe(l));
    offsets_[l.id] = total_dim_;
    total_dim_ += l.mult;
  }
  lambdas_flat_.resize(total_dim_);
  components_flat_.resize(total_dim_);
  std::set<int> comps;
  for (const auto& l : lines_) {
    for (int s = 0; s < l.mult; ++s) {
      lambdas_flat_(offsets_[l.id] + s) = l.lambda;
      components_flat_[offsets_[l.id] + s] = l.component;
    }
    comps.insert(l.component);
  }
  num_components_ = static_cast<int>(comps.size());

  std::sort(sigma_.pairs.begin(), sigma_.pairs.end(),
            [](const auto& a, const auto& b) { return a.lambda < b.lambda; });

  // Assemble the flat sigma matrix. Pair blocks map +lambda slots to -lambda
  // slots; the reverse map is -block^H; the kernel unitary sits on lambda = 0.
  sigma_flat_ = Mat::Zero(total_dim_, total_dim_);
  auto slots_of = [&](double lam) {
    std::vector<int> idx;
    for (const auto& l : lines_)
      if (l.lambda == lam)
        for (int s = 0; s < l.mult; ++s) idx.push_back(offsets_[l.id] + s);
    return idx;
  };
  std::set<double> positive;
  for (const auto& l : lines_)
    if (l.lambda > 0) positive.insert(l.lambda);
  std::set<double> covered;
  for (const auto& p : sigma_.pairs) {
    if (!(p.lambda > 0))
      throw std::invalid_argument("sigma pair lambda must be positive");
    if (!covered.insert(p.lambda).second)
      throw std::invalid_argument("duplicate sigma pair");
    auto plus = slots_of(p.lambda);
    auto minus = slots_of(-p.lambda);
    if (plus.empty() || minus.size() != plus.size())
      throw std::invalid_argument(
          "sigma pair does not match a symmetric ±lambda block");
    if (p.block.rows() != static_cast<Eigen::Index>(minus.size()) ||
        p.block.cols() != static_cast<Eigen::Index>(plus.size()))
      throw std::invalid_argument("sigma pair block has wrong size");
    for (size_t i = 0; i < minus.size(); ++i)
      for (size_t j = 0; j < plus.size(); ++j) {
        sigma_flat_(minus[i], plus[j]) = p.block(i, j);
        sigma_flat_(plus[j], minus[i]) = -std::conj(p.block(i, j));
      }
  }
  if (covered != positive)
    throw std::invalid_argument("sigma pairs must cover every positive line");
  auto ker = slots_of(0.0);
  if (static_cast<Eigen::Index>(ker.size()) != sigma_.kernel.rows() ||
      sigma_.kernel.rows() != sigma_.kernel.cols())
    throw std::invalid_argument("sigma kernel block has wrong size");
  for (size_t i = 0; i < ker.size(); ++i)
    for (size_t j = 0; j < ker.size(); ++j)
      sigma_flat_(ker[i], ker[j]) = sigma_.kernel(i, j);

  validate();
}

void BoundarySpectrum::validate() const {
  // ±lambda symmetry with equal multiplicity per component.
  std::map<std::pair<int, double>, int> mult_at;
  for (const auto& l : lines_) mult_at[{l.component, l.lambda}] += l.mult;
  for (const auto& [key, m] : mult_at) {
    auto it = mult_at.find({key.first, -key.second});
    if (it == mult_at.end() || it->second != m) {
      std::ostringstream os;
      os << "spectrum not symmetric: component " << key.first << " lambda "
         << key.second << " has no matching -lambda block of equal mult";
      throw std::invalid_argument(os.str());
    }
  }
  const Mat id = Mat::Identity(total_dim_, total_dim_);
  if ((sigma_flat_ * sigma_flat_ + id).norm() > kStructTol * total_dim_)
    throw std::invalid_argument("sigma^2 != -1");
  if ((sigma_flat_.adjoint() + sigma_flat_).norm() > kStructTol * total_dim_)
    throw std::invalid_argument("sigma not skewhermitian");
  if ((sigma_flat_.adjoint() * sigma_flat_ - id).norm() >
      kStructTol * total_dim_)
    throw std::invalid_argument("sigma not unitary");
  const Mat a = lambdas_flat_.asDiagonal().toDenseMatrix().cast<cxd>();
  if ((sigma_flat_ * a + a * sigma_flat_).norm() >
      kStructTol * std::max(1.0, lambdas_flat_.cwiseAbs().maxCoeff()) *
          total_dim_)
    throw std::invalid_argument("sigma does not anticommute with A");
  // sigma is pointwise along the boundary: it must not mix components.
  for (int i = 0; i < total_dim_; ++i)
    for (int j = 0; j < total_dim_; ++j)
      if (components_flat_[i] != components_flat_[j] &&
          std::abs(sigma_flat_(i, j)) > kStructTol)
        throw std::invalid_argument("sigma mixes boundary components");
}

const EigenLine& BoundarySpectrum::line(int id) const {
  for (const auto& l : lines_)
    if (l.id == id) return l;
  throw std::invalid_argument("unknown line id " + std::to_string(id));
}

int BoundarySpectrum::offset(int id) const {
  auto it = offsets_.find(id);
  if (it == offsets_.end())
    throw std::invalid_argument("unknown line id " + std::to_string(id));
  return it->second;
}

std::vector<int> BoundarySpectrum::component_labels() const {
  std::set<int> comps;
  for (const auto& l : lines_) comps.insert(l.component);
  return {comps.begin(), comps.end()};
}

double BoundarySpectrum::kernel_dim() const {
  int k = 0;
  for (const auto& l : lines_)
    if (l.lambda == 0.0) k += l.mult;
  return k;
}

int BoundarySpectrum::count_in(const Interval& I) const {
  int n = 0;
  for (const auto& l : lines_)
    if (I.contains(l.lambda)) n += l.mult;
  return n;
}

double BoundarySpectrum::smallest_positive_lambda() const {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& l : lines_)
    if (l.lambda > 0) best = std::min(best, l.lambda);
  if (!std::isfinite(best))
    throw std::runtime_error("spectrum has no positive eigenvalue");
  return best;
}

Vec BoundarySpectrum::to_flat(const BoundaryCoeffs& phi) const {
  Vec v = Vec::Zero(total_dim_);
  for (const auto& [id, c] : phi) {
    const EigenLine& l = line(id);
    if (c.size() != l.mult)
      throw std::invalid_argument("coefficient length mismatch on " +
                                  describe(l));
    v.segment(offset(id), l.mult) = c;
  }
  return v;
}

BoundaryCoeffs BoundarySpectrum::from_flat(const Vec& v) const {
  if (v.size() != total_dim_)
    throw std::invalid_argument("flat coefficient length mismatch");
  BoundaryCoeffs phi;
  for (const auto& l : lines_)
    phi[l.id] = v.segment(offset(l.id), l.mult);
  return phi;
}

Mat BoundarySpectrum::slot_basis(const Interval& I) const {
  std::vector<int> idx;
  for (int i = 0; i < total_dim_; ++i)
    if (I.contains(lambdas_flat_(i))) idx.push_back(i);
  Mat b = Mat::Zero(total_dim_, idx.size());
  for (size_t j = 0; j < idx.size(); ++j) b(idx[j], j) = 1.0;
  return b;
}

nlohmann::json BoundarySpectrum::to_json() const {
  nlohmann::json jl = nlohmann::json::array();
  for (const auto& l : lines_)
    jl.push_back({{"id", l.id},
                  {"lambda", l.lambda},
                  {"mult", l.mult},
                  {"component", l.component}});
  nlohmann::json jp = nlohmann::json::array();
  for (const auto& p : sigma_.pairs)
    jp.push_back({{"lambda", p.lambda}, {"matrix", matrix_to_json(p.block)}});
  return {{"lines", jl},
          {"sigma",
           {{"pairs", jp}, {"kernel", matrix_to_json(sigma_.kernel)}}}};
}

BoundarySpectrum BoundarySpectrum::from_json(const nlohmann::json& j) {
  std::vector<EigenLine> lines;
  for (const auto& e : j.at("lines"))
    lines.push_back({e.at("id").get<int>(), e.at("lambda").get<double>(),
                     e.at("mult").get<int>(), e.at("component").get<int>()});
  SigmaAction sig;
  for (const auto& e : j.at("sigma").at("pairs"))
    sig.pairs.push_back(
        {e.at("lambda").get<double>(), matrix_from_json(e.at("matrix"))});
  sig.kernel = matrix_from_json(j.at("sigma").at("kernel"));
  return BoundarySpectrum(std::move(lines), std::move(sig));
}

BoundaryCoeffs spectral_projection(const BoundarySpectrum& spec,
                                   const Interval& I,
                                   const BoundaryCoeffs& phi) {
  BoundaryCoeffs out;
  for (const auto& [id, c] : phi) {
    const EigenLine& l = spec.line(id);
    if (c.size() != l.mult)
      throw std::invalid_argument("coefficient length mismatch");
    out[id] = I.contains(l.lambda) ? c : Vec::Zero(l.mult).eval();
  }
  return out;
}

double hybrid_norm(const BoundarySpectrum& spec, const BoundaryCoeffs& phi,
                   HybridKind kind, double a) {
  double sum = 0.0;
  for (const auto& [id, c] : phi) {
    const EigenLine& l = spec.line(id);
    if (c.size() != l.mult)
      throw std::invalid_argument("coefficient length mismatch");
    const double w = std::sqrt(1.0 + l.lambda * l.lambda);
    const bool low = l.lambda < a;
    double weight;
    if (kind == HybridKind::Check)
      weight = low ? w : 1.0 / w;
    else
      weight = low ? 1.0 / w : w;
    sum += weight * c.squaredNorm();
  }
  return std::sqrt(sum);
}

BoundaryCoeffs sigma_apply(const BoundarySpectrum& spec,
                           const BoundaryCoeffs& phi) {
  return spec.from_flat(spec.sigma_flat() * spec.to_flat(phi));
}

Mat chirality_matrix(const BoundarySpectrum& spec,
                     const std::vector<int>& signs) {
  const auto comps = spec.component_labels();
  if (signs.size() != comps.size())
    throw std::invalid_argument("one chirality sign per boundary component");
  std::map<int, double> eps;
  for (size_t i = 0; i < comps.size(); ++i) {
    if (signs[i] != 1 && signs[i] != -1)
      throw std::invalid_argument("chirality signs must be ±1");
    eps[comps[i]] = signs[i];
  }
  const int n = spec.total_dim();
  Mat chi = Mat::Zero(n, n);
  const auto& cf = spec.components_flat();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      chi(i, j) = cxd(0, 1) * eps.at(cf[i]) * spec.sigma_flat()(i, j);
  return chi;
}

Mat kernel_split(const BoundarySpectrum& spec) {
  // sigma is pointwise along the boundary, so the split is taken per
  // component; this keeps derived chiralities local to their component.
  std::vector<Vec> cols;
  for (int comp : spec.component_labels()) {
    std::vector<int> idx;
    for (const auto& l : spec.lines())
      if (l.lambda == 0.0 && l.component == comp)
        for (int s = 0; s < l.mult; ++s) idx.push_back(spec.offset(l.id) + s);
    const int k = static_cast<int>(idx.size());
    if (k == 0) continue;
    if (k % 2 != 0)
      throw std::runtime_error(
          "odd-dimensional ker A admits no splitting L + sigma L");
    Mat K = Mat::Zero(spec.total_dim(), k);
    for (int j = 0; j < k; ++j) K(idx[j], j) = 1.0;
    const Mat sig_k = K.adjoint() * spec.sigma_flat() * K;
    Eigen::SelfAdjointEigenSolver<Mat> es(Mat(cxd(0, 1) * sig_k));
    std::vector<int> plus, minus;
    for (int i = 0; i < k; ++i)
      (es.eigenvalues()(i) > 0 ? plus : minus).push_back(i);
    if (plus.size() != minus.size())
      throw std::runtime_error(
          "sigma has unbalanced ±i multiplicities on ker A; no splitting");
    for (size_t s = 0; s < plus.size(); ++s) {
      const Vec x = K * es.eigenvectors().col(plus[s]);
      const Vec y = K * es.eigenvectors().col(minus[s]);
      cols.push_back((x + y) / std::sqrt(2.0));
    }
  }
  Mat L(spec.total_dim(), cols.size());
  for (size_t s = 0; s < cols.size(); ++s) L.col(s) = cols[s];
  return L;
}

std::pair<Mat, Mat> chirality_split(const BoundarySpectrum& spec,
                                    const std::vector<int>& signs) {
  const Mat chi = chirality_matrix(spec, signs);
  const int n = spec.total_dim();
  const Mat id = Mat::Identity(n, n);
  if ((chi * chi - id).norm() > 1e-10 * n)
    throw std::runtime_error("chirality is not an involution");
  return {0.5 * (id + chi), 0.5 * (id - chi)};
}

}  // namespace diracbvp
