#pragma once

// Discrete power-law tail calibration: maximum-likelihood exponent, KS
// distance, KS-minimising lower bound and a semi-parametric bootstrap p-value.
// A continuous-variant estimator and a least-squares log-CCDF fitter are kept
// alongside for cross-checks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include <boost/math/tools/roots.hpp>

#include "tradenet/error.hpp"
#include "tradenet/rng.hpp"
#include "tradenet/zeta.hpp"

namespace tradenet::powerlaw {

struct TailFit {
  std::uint64_t x_min = 1;
  double alpha = 0.0;          // PDF exponent
  double ccdf_exponent = 0.0;  // alpha - 1
  double ks_distance = 0.0;
  std::optional<double> p_value;
  std::size_t n_tail = 0;
  bool levy_stable = false;

  friend bool operator==(const TailFit&, const TailFit&) = default;
};

inline bool is_levy_stable(double ccdf_exponent) {
  return ccdf_exponent > 0.0 && ccdf_exponent < 2.0;
}

struct GofConfig {
  std::size_t bootstrap_replicas = 1000;
  double significance = 0.01;
  std::uint64_t rng_seed = 0;
  std::size_t min_tail_size = 50;
  // Above this many usable x_min candidates the scan uses log-spaced
  // candidates instead of every distinct value. Zero disables thinning.
  std::size_t max_candidates = 100;
  unsigned threads = 1;

  void validate() const {
    if (bootstrap_replicas < 1) throw ConfigError("bootstrap_replicas must be >= 1");
    if (!(significance > 0.0 && significance < 1.0))
      throw ConfigError("significance must lie in (0, 1)");
    if (min_tail_size < 2) throw ConfigError("min_tail_size must be >= 2");
    if (threads < 1) throw ConfigError("threads must be >= 1");
  }
};

namespace detail {

inline constexpr double kAlphaLow = 1.0 + 1e-9;
inline constexpr double kAlphaHigh = 200.0;
// Gaps up to this width are walked term by term when stepping the model CCDF.
inline constexpr std::uint64_t kWalkLimit = 32;
// Longest run of walked terms before the CCDF is recomputed from ζ.
inline constexpr std::uint64_t kReanchor = 1024;

// Sorted positive sample collapsed to distinct values with tail statistics.
struct DistinctSample {
  std::vector<std::uint64_t> values;
  std::vector<std::size_t> counts;
  std::vector<std::size_t> tail_count;  // samples >= values[i]
  std::vector<double> tail_log_sum;     // Σ ln x over samples >= values[i]

  std::size_t total() const { return tail_count.empty() ? 0 : tail_count.front(); }
};

inline DistinctSample make_distinct(std::span<const std::uint64_t> samples) {
  std::vector<std::uint64_t> sorted;
  sorted.reserve(samples.size());
  for (auto x : samples)
    if (x > 0) sorted.push_back(x);
  std::sort(sorted.begin(), sorted.end());

  DistinctSample out;
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    out.values.push_back(sorted[i]);
    out.counts.push_back(j - i);
    i = j;
  }
  const std::size_t d = out.values.size();
  out.tail_count.assign(d, 0);
  out.tail_log_sum.assign(d, 0.0);
  std::size_t c = 0;
  double s = 0.0;
  for (std::size_t k = d; k-- > 0;) {
    c += out.counts[k];
    s += static_cast<double>(out.counts[k]) * std::log(static_cast<double>(out.values[k]));
    out.tail_count[k] = c;
    out.tail_log_sum[k] = s;
  }
  return out;
}

// Solves E[ln X] = mean_log for the discrete power law on [x_min, ∞).
inline double solve_alpha(double mean_log, std::uint64_t x_min) {
  const double q = static_cast<double>(x_min);
  if (!(mean_log > std::log(q)))
    throw DegenerateSampleError("degenerate sample: all tail values equal x_min");
  auto score = [&](double a) {
    const auto z = hurwitz_zeta_with_derivative(a, q);
    return -z.d_ds / z.value - mean_log;
  };
  double hi = 2.0;
  while (score(hi) > 0.0) {
    hi *= 2.0;
    if (hi > kAlphaHigh)
      throw DegenerateSampleError("degenerate sample: exponent diverges (tail nearly constant)");
  }
  double lo = kAlphaLow;
  if (score(lo) <= 0.0) return lo;
  std::uintmax_t iters = 200;
  auto r = boost::math::tools::toms748_solve(score, lo, hi, boost::math::tools::eps_tolerance<double>(48), iters);
  return 0.5 * (r.first + r.second);
}

// KS distance between the tail of `d` starting at index `begin` and the
// discrete power law (alpha, values[begin]); evaluated at observed values.
inline double ks_tail(const DistinctSample& d, std::size_t begin, double alpha) {
  const std::uint64_t x_min = d.values[begin];
  const double norm = hurwitz_zeta(alpha, static_cast<double>(x_min));
  const double n = static_cast<double>(d.tail_count[begin]);
  double z = norm;  // ζ(alpha, cursor)
  std::uint64_t cursor = x_min;
  std::size_t cum = 0;
  std::uint64_t walked = 0;  // terms subtracted since z was last recomputed
  double dist = 0.0;
  for (std::size_t i = begin; i < d.values.size(); ++i) {
    const std::uint64_t v = d.values[i];
    const std::uint64_t next = v + 1;
    if (next - cursor <= kWalkLimit && walked + (next - cursor) <= kReanchor) {
      for (std::uint64_t k = cursor; k < next; ++k) z -= std::pow(static_cast<double>(k), -alpha);
      walked += next - cursor;
    } else {
      z = hurwitz_zeta(alpha, static_cast<double>(next));
      walked = 0;
    }
    cursor = next;
    cum += d.counts[i];
    const double model = 1.0 - std::max(z, 0.0) / norm;
    dist = std::max(dist, std::abs(static_cast<double>(cum) / n - model));
  }
  return dist;
}

inline std::size_t index_of(const DistinctSample& d, std::uint64_t x_min) {
  auto it = std::lower_bound(d.values.begin(), d.values.end(), x_min);
  if (it == d.values.end())
    throw DegenerateSampleError("x_min " + std::to_string(x_min) + " exceeds the sample maximum");
  return static_cast<std::size_t>(it - d.values.begin());
}

}  // namespace detail

// Discrete power-law log-likelihood for n tail samples with Σ ln x = sum_log.
inline double log_likelihood(double alpha, std::size_t n, double sum_log, std::uint64_t x_min) {
  return -static_cast<double>(n) * std::log(hurwitz_zeta(alpha, static_cast<double>(x_min))) -
         alpha * sum_log;
}

// Closed-form approximation α ≈ 1 + n / Σ ln(x / (x_min - 1/2)).
inline double approx_alpha(std::span<const std::uint64_t> samples, std::uint64_t x_min) {
  std::size_t n = 0;
  double s = 0.0;
  for (auto x : samples) {
    if (x < x_min) continue;
    ++n;
    s += std::log(static_cast<double>(x) / (static_cast<double>(x_min) - 0.5));
  }
  if (n == 0) throw DegenerateSampleError("no samples at or above x_min");
  return 1.0 + static_cast<double>(n) / s;
}

// MLE of the PDF exponent over samples >= x_min.
inline double mle_alpha(std::span<const std::uint64_t> samples, std::uint64_t x_min) {
  if (x_min < 1) throw DegenerateSampleError("x_min must be >= 1");
  std::size_t n = 0;
  double sum_log = 0.0;
  std::uint64_t lo = std::numeric_limits<std::uint64_t>::max();
  std::uint64_t hi = 0;
  for (auto x : samples) {
    if (x < x_min) continue;
    ++n;
    sum_log += std::log(static_cast<double>(x));
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  if (n == 0) throw DegenerateSampleError("x_min " + std::to_string(x_min) + " exceeds the sample maximum");
  if (n < 2) throw InsufficientDataError("power-law fit needs at least 2 tail samples");
  if (lo == hi) throw DegenerateSampleError("degenerate sample: all values equal");
  return detail::solve_alpha(sum_log / static_cast<double>(n), x_min);
}

// sup |F_emp - F_model| over observed values >= x_min.
inline double ks_distance(std::span<const std::uint64_t> samples, std::uint64_t x_min, double alpha) {
  if (!(alpha > 1.0)) throw DegenerateSampleError("alpha must exceed 1");
  if (x_min < 1) throw DegenerateSampleError("x_min must be >= 1");
  const auto d = detail::make_distinct(samples);
  if (d.values.empty()) throw DegenerateSampleError("empty sample");
  return detail::ks_tail(d, detail::index_of(d, x_min), alpha);
}

// One point of the x_min scan.
struct CandidateFit {
  std::uint64_t x_min;
  double alpha;
  double ks_distance;
  std::size_t n_tail;
};

// Candidate lower bounds: distinct values leaving >= min_tail_size samples
// and at least two distinct values in the tail.
inline std::vector<std::size_t> candidate_indices(const detail::DistinctSample& d, const GofConfig& cfg) {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i + 1 < d.values.size(); ++i)
    if (d.tail_count[i] >= cfg.min_tail_size) idx.push_back(i);
  if (cfg.max_candidates == 0 || idx.size() <= cfg.max_candidates) return idx;

  // Log-spaced thinning over candidate values.
  const double lo = std::log(static_cast<double>(d.values[idx.front()]));
  const double hi = std::log(static_cast<double>(d.values[idx.back()]));
  std::vector<std::size_t> thinned;
  std::size_t pos = 0;
  const std::size_t bins = cfg.max_candidates;
  for (std::size_t b = 0; b < bins; ++b) {
    const double target = lo + (hi - lo) * static_cast<double>(b) / static_cast<double>(bins - 1);
    while (pos < idx.size() && std::log(static_cast<double>(d.values[idx[pos]])) < target - 1e-12) ++pos;
    if (pos >= idx.size()) break;
    if (thinned.empty() || thinned.back() != idx[pos]) thinned.push_back(idx[pos]);
  }
  return thinned;
}

inline std::vector<CandidateFit> scan_xmin(const detail::DistinctSample& d, const GofConfig& cfg) {
  std::vector<CandidateFit> out;
  for (std::size_t i : candidate_indices(d, cfg)) {
    const double n = static_cast<double>(d.tail_count[i]);
    const double alpha = detail::solve_alpha(d.tail_log_sum[i] / n, d.values[i]);
    out.push_back({d.values[i], alpha, detail::ks_tail(d, i, alpha), d.tail_count[i]});
  }
  return out;
}

inline std::vector<CandidateFit> scan_xmin(std::span<const std::uint64_t> samples, const GofConfig& cfg) {
  return scan_xmin(detail::make_distinct(samples), cfg);
}

inline TailFit make_fit(const CandidateFit& c) {
  TailFit f;
  f.x_min = c.x_min;
  f.alpha = c.alpha;
  f.ccdf_exponent = c.alpha - 1.0;
  f.ks_distance = c.ks_distance;
  f.n_tail = c.n_tail;
  f.levy_stable = is_levy_stable(f.ccdf_exponent);
  return f;
}

namespace detail {

inline TailFit select_xmin(const DistinctSample& d, const GofConfig& cfg) {
  if (d.values.empty()) throw InsufficientDataError("empty sample");
  if (d.values.size() == 1) throw DegenerateSampleError("degenerate sample: all values equal");
  if (d.total() < cfg.min_tail_size)
    throw InsufficientDataError("sample has " + std::to_string(d.total()) + " positive values, need at least " +
                                std::to_string(cfg.min_tail_size));
  const auto scan = scan_xmin(d, cfg);
  if (scan.empty())
    throw InsufficientDataError("no x_min candidate leaves " + std::to_string(cfg.min_tail_size) + " tail samples");
  const CandidateFit* best = &scan.front();
  for (const auto& c : scan)
    if (c.ks_distance < best->ks_distance) best = &c;
  return make_fit(*best);
}

}  // namespace detail

// KS-minimising lower bound over the candidate scan; ties go to the smaller
// x_min. Zeros are ignored. The returned fit carries no p-value.
inline TailFit select_xmin(std::span<const std::uint64_t> samples, const GofConfig& cfg) {
  return detail::select_xmin(detail::make_distinct(samples), cfg);
}

// Exact inverse-CDF sampler for the discrete power law on [x_min, ∞).
class DiscretePowerLawSampler {
 public:
  DiscretePowerLawSampler(double alpha, std::uint64_t x_min) : alpha_(alpha), x_min_(x_min) {
    if (!(alpha > 1.0)) throw DegenerateSampleError("alpha must exceed 1");
    if (x_min < 1) throw DegenerateSampleError("x_min must be >= 1");
    norm_ = hurwitz_zeta(alpha, static_cast<double>(x_min));
    // table_[k] = P(X > x_min + k)
    double z = norm_;
    for (std::size_t k = 0; k < kTableSize; ++k) {
      const double x = static_cast<double>(x_min + k);
      if (k % 1024 == 1023) {
        z = hurwitz_zeta(alpha, x + 1.0);
      } else {
        z -= std::pow(x, -alpha);
      }
      const double p = std::max(z, 0.0) / norm_;
      table_.push_back(p);
      if (p < 1e-15) break;
    }
  }

  std::uint64_t operator()(Rng& rng) const {
    const double u = uniform_open_closed(rng);
    // smallest k with table_[k] < u
    auto it = std::partition_point(table_.begin(), table_.end(), [u](double p) { return p >= u; });
    if (it != table_.end()) return x_min_ + static_cast<std::uint64_t>(it - table_.begin());
    return search_beyond(u);
  }

  double alpha() const { return alpha_; }
  std::uint64_t x_min() const { return x_min_; }

 private:
  static constexpr std::size_t kTableSize = 1 << 16;
  static constexpr std::uint64_t kCap = std::uint64_t{1} << 62;

  double ccdf_gt(std::uint64_t x) const {
    return hurwitz_zeta(alpha_, static_cast<double>(x) + 1.0) / norm_;
  }

  std::uint64_t search_beyond(double u) const {
    std::uint64_t lo = x_min_ + table_.size() - 1;  // ccdf_gt(lo) >= u
    std::uint64_t hi = lo * 2;
    while (ccdf_gt(hi) >= u) {
      lo = hi;
      if (hi >= kCap / 2) return kCap;
      hi *= 2;
    }
    while (hi - lo > 1) {
      const std::uint64_t mid = lo + (hi - lo) / 2;
      if (ccdf_gt(mid) >= u) lo = mid; else hi = mid;
    }
    return hi;
  }

  double alpha_;
  std::uint64_t x_min_;
  double norm_;
  std::vector<double> table_;
};

// Semi-parametric bootstrap: each replica draws the body (< x_min) from the
// empirical body and the tail from the fitted model, refits via select_xmin
// and is counted when its KS distance is >= the observed one.
inline double gof_pvalue(std::span<const std::uint64_t> samples, const TailFit& fit, const GofConfig& cfg) {
  cfg.validate();
  std::vector<std::uint64_t> body;
  std::size_t n = 0;
  for (auto x : samples) {
    if (x == 0) continue;
    ++n;
    if (x < fit.x_min) body.push_back(x);
  }
  if (n == 0) throw InsufficientDataError("empty sample");
  std::sort(body.begin(), body.end());
  const double p_tail = static_cast<double>(n - body.size()) / static_cast<double>(n);
  const DiscretePowerLawSampler tail(fit.alpha, fit.x_min);

  struct Tally {
    std::size_t exceed = 0;
    std::size_t valid = 0;
  };
  auto run = [&](std::size_t first, std::size_t last, Tally& t) {
    std::vector<std::uint64_t> synth(n);
    for (std::size_t r = first; r < last; ++r) {
      Rng rng(derive_seed(cfg.rng_seed, r));
      for (auto& x : synth) {
        if (body.empty() || uniform_open_closed(rng) <= p_tail) {
          x = tail(rng);
        } else {
          x = body[std::uniform_int_distribution<std::size_t>(0, body.size() - 1)(rng)];
        }
      }
      try {
        const TailFit f = select_xmin(synth, cfg);
        ++t.valid;
        if (f.ks_distance >= fit.ks_distance) ++t.exceed;
      } catch (const Error&) {
        // replica unusable (e.g. too few tail points); excluded
      }
    }
  };

  const std::size_t replicas = cfg.bootstrap_replicas;
  const std::size_t workers = std::min<std::size_t>(cfg.threads, replicas);
  std::vector<Tally> tallies(workers);
  if (workers <= 1) {
    run(0, replicas, tallies[0]);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      const std::size_t first = replicas * w / workers;
      const std::size_t last = replicas * (w + 1) / workers;
      pool.emplace_back([&, first, last, w] { run(first, last, tallies[w]); });
    }
  }
  Tally total;
  for (const auto& t : tallies) {
    total.exceed += t.exceed;
    total.valid += t.valid;
  }
  if (total.valid == 0) throw InsufficientDataError("no bootstrap replica produced a usable fit");
  return static_cast<double>(total.exceed) / static_cast<double>(total.valid);
}

// select_xmin followed by the bootstrap p-value.
inline TailFit fit_tail(std::span<const std::uint64_t> samples, const GofConfig& cfg) {
  cfg.validate();
  const auto d = detail::make_distinct(samples);
  TailFit fit = detail::select_xmin(d, cfg);
  fit.p_value = gof_pvalue(samples, fit, cfg);
  return fit;
}

// Continuous-variant estimators, used for cross-checks and scale arguments.
namespace continuous {

inline double mle_alpha(std::span<const double> samples, double x_min) {
  std::size_t n = 0;
  double s = 0.0;
  for (double x : samples) {
    if (x < x_min) continue;
    ++n;
    s += std::log(x / x_min);
  }
  if (n == 0) throw DegenerateSampleError("no samples at or above x_min");
  if (!(s > 0.0)) throw DegenerateSampleError("degenerate sample: all values equal x_min");
  return 1.0 + static_cast<double>(n) / s;
}

inline double ks_distance(std::span<const double> samples, double x_min, double alpha) {
  std::vector<double> tail;
  for (double x : samples)
    if (x >= x_min) tail.push_back(x);
  if (tail.empty()) throw DegenerateSampleError("no samples at or above x_min");
  std::sort(tail.begin(), tail.end());
  const double n = static_cast<double>(tail.size());
  double dist = 0.0;
  for (std::size_t i = 0; i < tail.size(); ++i) {
    if (i + 1 < tail.size() && tail[i + 1] == tail[i]) continue;
    const double model = 1.0 - std::pow(tail[i] / x_min, 1.0 - alpha);
    dist = std::max(dist, std::abs(static_cast<double>(i + 1) / n - model));
  }
  return dist;
}

struct Fit {
  double x_min;
  double alpha;
  double ks_distance;
  std::size_t n_tail;
};

inline Fit select_xmin(std::span<const double> samples, std::size_t min_tail_size) {
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  std::optional<Fit> best;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i > 0 && sorted[i] == sorted[i - 1]) continue;
    const std::size_t n_tail = sorted.size() - i;
    if (n_tail < min_tail_size || sorted.back() == sorted[i]) break;
    const std::span<const double> tail(sorted.data() + i, n_tail);
    const double a = mle_alpha(tail, sorted[i]);
    const double d = ks_distance(tail, sorted[i], a);
    if (!best || d < best->ks_distance) best = Fit{sorted[i], a, d, n_tail};
  }
  if (!best) throw InsufficientDataError("no x_min candidate leaves enough tail samples");
  return *best;
}

}  // namespace continuous

// Least-squares slope of ln P(X >= x) against ln x over distinct x >= x_min.
// A secondary, visual-style estimator; the MLE route is the default.
namespace least_squares {

struct Fit {
  double ccdf_exponent;
  double alpha;
  double r_squared;
};

inline Fit fit_ccdf(std::span<const std::uint64_t> samples, std::uint64_t x_min) {
  const auto d = detail::make_distinct(samples);
  if (d.values.empty()) throw DegenerateSampleError("empty sample");
  const std::size_t begin = detail::index_of(d, x_min);
  const double n = static_cast<double>(d.tail_count[begin]);
  std::vector<double> xs, ys;
  for (std::size_t i = begin; i < d.values.size(); ++i) {
    xs.push_back(std::log(static_cast<double>(d.values[i])));
    ys.push_back(std::log(static_cast<double>(d.tail_count[i]) / n));
  }
  if (xs.size() < 2) throw DegenerateSampleError("degenerate sample: fewer than two distinct tail values");
  const double m = static_cast<double>(xs.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  const double r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return {-slope, 1.0 - slope, r2};
}

}  // namespace least_squares

}  // namespace tradenet::powerlaw
