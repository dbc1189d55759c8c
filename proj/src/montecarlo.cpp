#include "qerg/montecarlo.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <numeric>
#include <numbers>
#include <thread>

#include "qerg/quadrature.hpp"

namespace qerg {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::atomic<unsigned> g_threads{1};
constexpr std::size_t kChunk = 4096;

// Running bivariate moments, merged with the pairwise update of Chan et al.
struct Moments {
  double n = 0, ma = 0, mb = 0, caa = 0, cbb = 0, cab = 0;

  void add(double a, double b) {
    n += 1;
    const double da = a - ma;
    ma += da / n;
    const double db = b - mb;
    mb += db / n;
    caa += da * (a - ma);
    cbb += db * (b - mb);
    cab += da * (b - mb);
  }

  static Moments merge(const Moments& x, const Moments& y) {
    if (x.n == 0) return y;
    if (y.n == 0) return x;
    Moments out;
    out.n = x.n + y.n;
    const double da = y.ma - x.ma;
    const double db = y.mb - x.mb;
    const double w = x.n * y.n / out.n;
    out.ma = x.ma + da * y.n / out.n;
    out.mb = x.mb + db * y.n / out.n;
    out.caa = x.caa + y.caa + da * da * w;
    out.cbb = x.cbb + y.cbb + db * db * w;
    out.cab = x.cab + y.cab + da * db * w;
    return out;
  }
};

Moments pairwise(const std::vector<Moments>& parts, std::size_t lo, std::size_t hi) {
  if (hi - lo == 1) return parts[lo];
  const std::size_t mid = lo + (hi - lo) / 2;
  return Moments::merge(pairwise(parts, lo, mid), pairwise(parts, mid, hi));
}

using Sampler = std::function<std::pair<double, double>(RngStream&)>;

Moments run_chunks(std::size_t n, const RngStream& rng, const Sampler& sample) {
  const std::size_t chunks = (n + kChunk - 1) / kChunk;
  std::vector<Moments> parts(chunks);
  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t k = first; k < chunks; k += stride) {
      RngStream child = rng.split(k);
      const std::size_t count = std::min(kChunk, n - k * kChunk);
      for (std::size_t i = 0; i < count; ++i) {
        const auto [a, b] = sample(child);
        parts[k].add(a, b);
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(std::max(1u, g_threads.load()), chunks);
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t k = 0; k < threads; ++k) pool.emplace_back(work, k, threads);
    for (auto& th : pool) th.join();
  }
  return pairwise(parts, 0, chunks);
}

// Cumulative jump tables for one model.
class Walker {
 public:
  explicit Walker(const MarkovModel& model) : model_(model), V_(model.V()), vmin_(model.V().minCoeff()) {
    const Index n = model.size();
    cumulative_.resize(n);
    for (Index x = 0; x < n; ++x) {
      double acc = 0.0;
      for (Index y = 0; y < n; ++y) {
        if (model.Q()(x, y) <= 0.0) continue;
        acc += model.Q()(x, y);
        cumulative_[x].push_back({acc, y});
      }
    }
  }

  Index next(Index x, double u) const {
    const auto& row = cumulative_[x];
    const double target = u * row.back().first;
    auto it = std::upper_bound(row.begin(), row.end(), target,
                               [](double v, const std::pair<double, Index>& e) { return v < e.first; });
    if (it == row.end()) --it;
    return it->second;
  }

  // Runs to time t; returns the final state and the weight. `visit` sees every state entered.
  template <typename Visit>
  std::pair<Index, double> run(Index x0, double t, RngStream& rng, Visit&& visit) const {
    Index s = x0;
    double clock = 0.0, excess = 0.0;
    for (;;) {
      const double hold = rng.exponential();
      if (clock + hold >= t) {
        excess += (V_(s) - vmin_) * (t - clock);
        break;
      }
      excess += (V_(s) - vmin_) * hold;
      clock += hold;
      s = next(s, rng.uniform());
      if (!visit(clock, s)) break;
    }
    return {s, std::exp(-(excess + vmin_ * t))};
  }

  const MarkovModel& model() const { return model_; }

 private:
  const MarkovModel& model_;
  const Vector& V_;
  double vmin_;
  std::vector<std::vector<std::pair<double, Index>>> cumulative_;
};

void check_start(const MarkovModel& model, Index x0, double t) {
  if (x0 < 0 || x0 >= model.size()) throw DomainError("Monte Carlo: start state out of range");
  if (!(t > 0.0)) throw DomainError("Monte Carlo: t must be positive");
}

EstimateWithError single(const Moments& m, std::uint64_t seed) {
  EstimateWithError e;
  e.mean = m.ma;
  e.n = static_cast<std::size_t>(m.n);
  e.std_error = m.n > 1 ? std::sqrt(std::max(0.0, m.caa) / (m.n - 1) / m.n) : 0.0;
  e.seed = seed;
  return e;
}

}  // namespace

RngStream RngStream::split(std::uint64_t index) const {
  return RngStream(splitmix64(seed_ ^ splitmix64(index + 1)));
}

void set_monte_carlo_threads(unsigned threads) { g_threads = std::max(1u, threads); }
unsigned monte_carlo_threads() { return g_threads; }

PathSample sample_ctmc_path(const MarkovModel& model, Index x0, double t, RngStream& rng) {
  check_start(model, x0, t);
  Walker walker(model);
  PathSample path;
  path.states.push_back(x0);
  path.weight = walker
                    .run(x0, t, rng,
                         [&](double time, Index s) {
                           path.jump_times.push_back(time);
                           path.states.push_back(s);
                           return true;
                         })
                    .second;
  return path;
}

EstimateWithError fk_estimate(const MarkovModel& model, Index x0, double t, const Vector& f, std::size_t n,
                              const RngStream& rng) {
  check_start(model, x0, t);
  if (n < 2) throw DomainError("fk_estimate: need n >= 2");
  if (f.size() != model.size()) throw DomainError("fk_estimate: f has the wrong length");
  Walker walker(model);
  const auto m = run_chunks(n, rng, [&](RngStream& r) {
    const auto [s, w] = walker.run(x0, t, r, [](double, Index) { return true; });
    return std::pair{w * f(s), 0.0};
  });
  return single(m, rng.seed());
}

EstimateWithError fk_ratio_estimate(const MarkovModel& model, const Vector& sigma, double t, const Vector& f,
                                    std::size_t n, const RngStream& rng) {
  if (n < 2) throw DomainError("fk_ratio_estimate: need n >= 2");
  if (sigma.size() != model.size() || f.size() != model.size())
    throw DomainError("fk_ratio_estimate: sigma and f must match the state count");
  if ((sigma.array() < 0.0).any() || std::abs(sigma.sum() - 1.0) > 1e-12)
    throw DomainError("fk_ratio_estimate: sigma must be a probability vector");
  Walker walker(model);
  std::vector<double> cdf(static_cast<std::size_t>(sigma.size()));
  std::partial_sum(sigma.data(), sigma.data() + sigma.size(), cdf.begin());
  const auto m = run_chunks(n, rng, [&](RngStream& r) {
    const auto pos = std::upper_bound(cdf.begin(), cdf.end(), r.uniform() * cdf.back()) - cdf.begin();
    const Index x0 = std::min<Index>(pos, sigma.size() - 1);
    const auto [s, w] = walker.run(x0, t, r, [](double, Index) { return true; });
    return std::pair{w * f(s), w};
  });
  if (!(m.mb > 0.0)) throw DegenerateSupportError("fk_ratio_estimate: no surviving weight");
  EstimateWithError e;
  e.mean = m.ma / m.mb;
  e.n = n;
  e.seed = rng.seed();
  const double var = (m.caa - 2.0 * e.mean * m.cab + e.mean * e.mean * m.cbb) / (m.n - 1);
  e.std_error = std::sqrt(std::max(0.0, var) / m.n) / m.mb;
  return e;
}

EstimateWithError exit_probability(const MarkovModel& model, Index x0, double t, double radius, std::size_t n,
                                   const RngStream& rng) {
  check_start(model, x0, t);
  if (n < 2) throw DomainError("exit_probability: need n >= 2");
  Walker walker(model);
  const auto& space = model.space();
  const auto m = run_chunks(n, rng, [&](RngStream& r) {
    bool inside = true;
    walker.run(x0, t, r, [&](double, Index s) {
      inside = space.distance(x0, s) <= radius;
      return inside;
    });
    return std::pair{inside ? 1.0 : 0.0, 0.0};
  });
  return single(m, rng.seed());
}

MassSandwich mass_sandwich(const MarkovModel& model, Index x0, double t, double radius, std::size_t n,
                           const RngStream& rng) {
  MassSandwich out;
  double vmax = 0.0;
  for (Index y = 0; y < model.size(); ++y)
    if (model.space().distance(x0, y) <= radius) vmax = std::max(vmax, model.V()(y));
  out.lower = exit_probability(model, x0, t, radius, n, rng);
  const double factor = std::exp(-t * vmax);
  out.lower.mean *= factor;
  out.lower.std_error *= factor;
  out.mass = feynman_kac_operator(model, t).mass()(x0);
  const Vector g = (-t * model.V().array()).exp();
  out.upper = integrate<double>([&](double s) { return uniformized_apply(model, s, g)(x0); }, 0.0, t, 1e-12) / t;
  return out;
}

double sample_stable_increment(double alpha, double dt, RngStream& rng) {
  if (!(alpha > 0.0 && alpha <= 2.0)) throw DomainError("sample_stable_increment: alpha must lie in (0, 2]");
  if (!(dt > 0.0)) throw DomainError("sample_stable_increment: dt must be positive");
  double u = 0.0, w = 0.0;
  do u = rng.uniform(); while (u == 0.0);
  do w = rng.exponential(); while (w == 0.0);
  const double U = std::numbers::pi * (u - 0.5);
  const double x = std::sin(alpha * U) / std::pow(std::cos(U), 1.0 / alpha) *
                   std::pow(std::cos((1.0 - alpha) * U) / w, (1.0 - alpha) / alpha);
  return std::pow(dt, 1.0 / alpha) * x;
}

EstimateWithError fk_estimate_levy(double alpha, const PotentialSpec& V, double x0, double t, int n_steps,
                                   std::size_t n, const RngStream& rng) {
  if (n_steps < 4) throw DomainError("fk_estimate_levy: need n_steps >= 4");
  if (!(t > 0.0)) throw DomainError("fk_estimate_levy: t must be positive");
  if (n < 2) throw DomainError("fk_estimate_levy: need n >= 2");
  if (V.kind == PotentialSpec::Kind::custom_table) throw DomainError("fk_estimate_levy: needs a radial potential");
  V.validate();
  const double dt = t / n_steps;
  const double vmin = V(0.0);
  const auto m = run_chunks(n, rng, [&](RngStream& r) {
    double x = x0, excess = 0.0;
    for (int k = 0; k < n_steps; ++k) {
      excess += (V(std::abs(x)) - vmin) * dt;
      x += sample_stable_increment(alpha, dt, r);
    }
    return std::pair{std::exp(-(excess + vmin * t)), 0.0};
  });
  return single(m, rng.seed());
}

}  // namespace qerg
