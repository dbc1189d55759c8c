#include "qerg/statespace.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "qerg/errors.hpp"

namespace qerg {

namespace {

Matrix euclidean_distances(const Matrix& coords) {
  const Index n = coords.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = (coords.row(i) - coords.row(j)).norm();
  return d;
}

}  // namespace

StateSpace::StateSpace(std::vector<std::string> ids, Matrix coords, Vector mu)
    : ids_(std::move(ids)), coords_(std::move(coords)), mu_(std::move(mu)) {
  if (coords_.rows() != mu_.size())
    throw ModelError("StateSpace: coords has " + std::to_string(coords_.rows()) + " rows for " +
                     std::to_string(mu_.size()) + " weights");
  if (coords_.cols() == 0 && mu_.size() > 1)
    throw ModelError("StateSpace: no coordinates and no explicit metric");
  dist_ = euclidean_distances(coords_);
  validate();
}

StateSpace::StateSpace(std::vector<std::string> ids, Matrix coords, Vector mu, Matrix distances)
    : ids_(std::move(ids)), coords_(std::move(coords)), mu_(std::move(mu)), dist_(std::move(distances)) {
  if (coords_.rows() != mu_.size() && coords_.size() != 0)
    throw ModelError("StateSpace: coords/mu size mismatch");
  if (coords_.size() == 0) coords_.resize(mu_.size(), 0);
  validate();
}

void StateSpace::validate() const {
  const Index n = mu_.size();
  if (n == 0) throw ModelError("StateSpace: empty");
  if (static_cast<Index>(ids_.size()) != n) throw ModelError("StateSpace: ids/mu size mismatch");
  std::unordered_set<std::string> seen;
  for (const auto& id : ids_)
    if (!seen.insert(id).second) throw ModelError("StateSpace: duplicate point id '" + id + "'");
  for (Index i = 0; i < n; ++i)
    if (!(mu_(i) > 0.0) || !std::isfinite(mu_(i)))
      throw ModelError("StateSpace: mu must be strictly positive (point '" + ids_[i] + "')");
  if (dist_.rows() != n || dist_.cols() != n) throw ModelError("StateSpace: metric has wrong shape");
  for (Index i = 0; i < n; ++i) {
    if (dist_(i, i) != 0.0) throw ModelError("StateSpace: metric(x,x) != 0");
    for (Index j = i + 1; j < n; ++j) {
      if (!(dist_(i, j) >= 0.0) || dist_(i, j) != dist_(j, i))
        throw ModelError("StateSpace: metric must be symmetric and nonnegative");
    }
  }
}

StateSpace StateSpace::lattice_1d(double h, Index half_count) {
  if (!(h > 0.0)) throw DomainError("lattice_1d: spacing must be positive");
  const Index n = 2 * half_count + 1;
  std::vector<std::string> ids;
  ids.reserve(static_cast<std::size_t>(n));
  Matrix coords(n, 1);
  for (Index k = 0; k < n; ++k) {
    coords(k, 0) = static_cast<double>(k - half_count) * h;
    ids.push_back(std::to_string(k - half_count));
  }
  return StateSpace(std::move(ids), std::move(coords), Vector::Constant(n, h));
}

StateSpace StateSpace::path(Index n) {
  std::vector<std::string> ids;
  Matrix coords(n, 1);
  for (Index k = 0; k < n; ++k) {
    coords(k, 0) = static_cast<double>(k);
    ids.push_back(std::to_string(k));
  }
  return StateSpace(std::move(ids), std::move(coords), Vector::Ones(n));
}

double StateSpace::min_separation() const {
  double best = std::numeric_limits<double>::infinity();
  for (Index i = 0; i < size(); ++i)
    for (Index j = i + 1; j < size(); ++j)
      if (dist_(i, j) > 0.0) best = std::min(best, dist_(i, j));
  return std::isfinite(best) ? best : 1.0;
}

Index StateSpace::index_of(const std::string& id) const {
  auto it = std::find(ids_.begin(), ids_.end(), id);
  if (it == ids_.end()) throw std::out_of_range("StateSpace: unknown point id '" + id + "'");
  return static_cast<Index>(it - ids_.begin());
}

StateSpace StateSpace::with_scaled_mu(double c) const {
  StateSpace copy = *this;
  copy.mu_ *= c;
  copy.validate();
  return copy;
}

StateSpace StateSpace::load_table(std::istream& in) {
  std::vector<std::string> ids;
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream ss(line);
    std::string id;
    ss >> id;
    std::vector<double> values;
    double v;
    while (ss >> v) values.push_back(v);
    if (!ss.eof()) throw ConfigError("state table: non-numeric column", line_no);
    if (values.empty()) throw ConfigError("state table: missing mu column", line_no);
    if (width == 0) width = values.size();
    if (values.size() != width) throw ConfigError("state table: inconsistent column count", line_no);
    ids.push_back(id);
    rows.push_back(std::move(values));
  }
  if (rows.empty()) throw ConfigError("state table: no rows");
  const Index n = static_cast<Index>(rows.size());
  const Index d = static_cast<Index>(width) - 1;
  Matrix coords(n, d);
  Vector mu(n);
  for (Index i = 0; i < n; ++i) {
    for (Index k = 0; k < d; ++k) coords(i, k) = rows[i][k];
    mu(i) = rows[i][d];
  }
  if (d == 0) {
    // No coordinates: discrete metric.
    Matrix dist = Matrix::Ones(n, n) - Matrix::Identity(n, n);
    return StateSpace(std::move(ids), Matrix(n, 0), std::move(mu), std::move(dist));
  }
  return StateSpace(std::move(ids), std::move(coords), std::move(mu));
}

void StateSpace::save_table(std::ostream& out) const {
  out << std::setprecision(17);
  for (Index i = 0; i < size(); ++i) {
    out << ids_[i];
    for (Index k = 0; k < dim(); ++k) out << ' ' << coords_(i, k);
    out << ' ' << mu_(i) << '\n';
  }
}

ExhaustingFamily ExhaustingFamily::linear(Index base, double slope, double t_min) {
  return ExhaustingFamily{base, [slope](double t) { return slope * t; }, t_min};
}

std::vector<bool> ball_mask(const StateSpace& space, const ExhaustingFamily& fam, double t) {
  if (t < fam.t_min) throw DomainError("ball_indicator: t below t_min of the exhausting family");
  const double r = fam.radius(t);
  std::vector<bool> mask(static_cast<std::size_t>(space.size()));
  for (Index x = 0; x < space.size(); ++x) mask[x] = space.distance(x, fam.base) <= r;
  return mask;
}

std::vector<Index> ball_indicator(const StateSpace& space, const ExhaustingFamily& fam, double t) {
  const auto mask = ball_mask(space, fam, t);
  std::vector<Index> out;
  for (Index x = 0; x < space.size(); ++x)
    if (mask[x]) out.push_back(x);
  return out;
}

double exhaustion_time(const StateSpace& space, const ExhaustingFamily& fam, double dt) {
  const double reach = space.distances().row(fam.base).maxCoeff();
  auto covers = [&](double t) { return fam.radius(t) >= reach; };
  if (covers(fam.t_min)) return fam.t_min;
  double lo = fam.t_min;
  double hi = std::max(fam.t_min, 0.0) + 1.0;
  while (!covers(hi)) {
    lo = hi;
    hi = 2.0 * hi;
    if (hi > 1e12) throw DomainError("exhaustion_time: family does not exhaust the space");
  }
  while (hi - lo > dt) {
    const double mid = 0.5 * (lo + hi);
    (covers(mid) ? hi : lo) = mid;
  }
  return hi;
}

double frostman_constant(const StateSpace& space, double d_M) {
  if (!(d_M > 0.0)) throw DomainError("frostman_constant: exponent must be positive");
  const Index n = space.size();
  if (n == 1) return space.mu()(0);
  double best = 0.0;
  for (Index x = 0; x < n; ++x) {
    // Sort other points by distance; mu(B_r(x)) is a running sum.
    std::vector<std::pair<double, double>> by_dist;
    by_dist.reserve(static_cast<std::size_t>(n));
    for (Index y = 0; y < n; ++y) by_dist.emplace_back(space.distance(x, y), space.mu()(y));
    std::sort(by_dist.begin(), by_dist.end());
    double mass = 0.0;
    for (std::size_t k = 0; k < by_dist.size(); ++k) {
      mass += by_dist[k].second;
      const double r = by_dist[k].first;
      const bool last_at_radius = k + 1 == by_dist.size() || by_dist[k + 1].first > r;
      if (r > 0.0 && last_at_radius) best = std::max(best, mass / std::pow(r, d_M));
    }
  }
  return best;
}

}  // namespace qerg
