#pragma once

// Independent reference implementations used as test oracles, plus small
// generators for property tests. Nothing here calls the code under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

// Σ_{k<N} (q+k)^-s by direct summation plus the integral tail with the first
// two end corrections.
inline long double zeta(long double s, long double q, std::size_t terms = 20000) {
  long double sum = 0;
  for (std::size_t k = terms; k-- > 0;) sum += std::pow(q + static_cast<long double>(k), -s);
  const long double a = q + static_cast<long double>(terms);
  return sum + std::pow(a, 1 - s) / (s - 1) + std::pow(a, -s) / 2 + s * std::pow(a, -s - 1) / 12;
}

inline long double log_likelihood(long double alpha, const std::vector<std::uint64_t>& tail, std::uint64_t x_min) {
  long double sum_log = 0;
  for (auto x : tail) sum_log += std::log(static_cast<long double>(x));
  return -static_cast<long double>(tail.size()) * std::log(zeta(alpha, static_cast<long double>(x_min), 4000)) -
         alpha * sum_log;
}

// Golden-section maximisation of the discrete log-likelihood.
inline double mle_alpha(const std::vector<std::uint64_t>& sample, std::uint64_t x_min) {
  std::vector<std::uint64_t> tail;
  for (auto x : sample)
    if (x >= x_min) tail.push_back(x);
  long double lo = 1.0001L, hi = 12.0L;
  const long double g = (std::sqrt(5.0L) - 1) / 2;
  long double a = hi - g * (hi - lo), b = lo + g * (hi - lo);
  long double fa = log_likelihood(a, tail, x_min), fb = log_likelihood(b, tail, x_min);
  while (hi - lo > 1e-11L) {
    if (fa < fb) {
      lo = a;
      a = b;
      fa = fb;
      b = lo + g * (hi - lo);
      fb = log_likelihood(b, tail, x_min);
    } else {
      hi = b;
      b = a;
      fb = fa;
      a = hi - g * (hi - lo);
      fa = log_likelihood(a, tail, x_min);
    }
  }
  return static_cast<double>((lo + hi) / 2);
}

// KS distance at every observed value >= x_min with the model CDF built by
// summing the pmf term by term.
inline double ks_distance(const std::vector<std::uint64_t>& sample, std::uint64_t x_min, double alpha) {
  std::vector<std::uint64_t> tail;
  for (auto x : sample)
    if (x >= x_min) tail.push_back(x);
  std::sort(tail.begin(), tail.end());
  const long double norm = zeta(alpha, static_cast<long double>(x_min));
  const long double n = static_cast<long double>(tail.size());
  long double cdf = 0;
  std::uint64_t k = x_min;
  long double worst = 0;
  for (std::size_t i = 0; i < tail.size(); ++i) {
    if (i + 1 < tail.size() && tail[i + 1] == tail[i]) continue;
    for (; k <= tail[i]; ++k) cdf += std::pow(static_cast<long double>(k), -static_cast<long double>(alpha)) / norm;
    worst = std::max(worst, std::fabs(static_cast<long double>(i + 1) / n - cdf));
  }
  return static_cast<double>(worst);
}

// Candidate scan over every distinct value with at least `min_tail` samples
// at or above it and two distinct tail values; smallest KS wins, ties to the
// smaller x_min.
struct ScanResult {
  std::uint64_t x_min;
  double alpha;
  double ks;
};

inline ScanResult select_xmin(const std::vector<std::uint64_t>& sample, std::size_t min_tail) {
  std::set<std::uint64_t> distinct(sample.begin(), sample.end());
  distinct.erase(0);
  const std::uint64_t top = *distinct.rbegin();
  ScanResult best{0, 0, 2.0};
  for (auto c : distinct) {
    const auto n_tail = static_cast<std::size_t>(std::count_if(sample.begin(), sample.end(), [&](auto x) { return x >= c; }));
    if (n_tail < min_tail || c == top) continue;
    const double a = mle_alpha(sample, c);
    const double ks = ks_distance(sample, c, a);
    if (ks < best.ks) best = {c, a, ks};
  }
  return best;
}

// Inverse-CDF draw: smallest x >= x_min with P(X > x) < u, accumulating the
// pmf term by term in long double.
class PowerLawInverse {
 public:
  PowerLawInverse(double alpha, std::uint64_t x_min) : alpha_(alpha), x_min_(x_min) {
    norm_ = zeta(alpha, static_cast<long double>(x_min), 200000);
  }
  std::uint64_t operator()(double u) const {
    long double above = 1;  // P(X > x - 1)
    for (std::uint64_t x = x_min_;; ++x) {
      above -= std::pow(static_cast<long double>(x), -static_cast<long double>(alpha_)) / norm_;
      if (above < u) return x;
      if (x - x_min_ > 50'000'000) return x;
    }
  }

 private:
  double alpha_;
  std::uint64_t x_min_;
  long double norm_;
};

inline double pearson_two_pass(const std::vector<double>& x, const std::vector<double>& y) {
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<long double>(x.size());
  my /= static_cast<long double>(y.size());
  long double sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

}  // namespace oracle

namespace testing_support {

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("tradenet-" + tag + "-" + std::to_string(rd()));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
