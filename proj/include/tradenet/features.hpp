#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "tradenet/error.hpp"
#include "tradenet/network.hpp"
#include "tradenet/powerlaw.hpp"
#include "tradenet/transaction.hpp"

namespace tradenet {

// Daily price and participant counts over trading days only.
struct DailySeries {
  std::vector<Date> days;
  std::vector<double> avg_price;         // P(t)
  std::vector<std::uint32_t> n_sellers;  // N_s(t)
  std::vector<std::uint32_t> n_buyers;   // N_b(t)

  std::size_t size() const { return days.size(); }
};

enum class PriceAveraging { volume_weighted, unweighted };
enum class RatioTransform { raw, log };

inline DailySeries daily_series(const TransactionLog& log, PriceAveraging mode = PriceAveraging::volume_weighted) {
  if (log.empty()) throw InsufficientDataError("daily series needs a non-empty log");
  DailySeries s;
  std::unordered_set<AccountIndex> sellers, buyers;
  double weighted = 0.0, weight = 0.0;
  auto flush = [&](Date d) {
    s.days.push_back(d);
    s.avg_price.push_back(weighted / weight);
    s.n_sellers.push_back(static_cast<std::uint32_t>(sellers.size()));
    s.n_buyers.push_back(static_cast<std::uint32_t>(buyers.size()));
    sellers.clear();
    buyers.clear();
    weighted = weight = 0.0;
  };
  const auto records = log.records();
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (i > 0 && r.date != records[i - 1].date) flush(records[i - 1].date);
    sellers.insert(r.seller);
    buyers.insert(r.buyer);
    const double w = mode == PriceAveraging::volume_weighted ? static_cast<double>(r.volume) : 1.0;
    weighted += w * r.price;
    weight += w;
  }
  flush(records.back().date);
  return s;
}

// pr(t) = ln P(t) - ln P(t-1), t = 2..n.
inline std::vector<double> log_returns(const DailySeries& s) {
  if (s.size() < 2) throw InsufficientDataError("log returns need at least 2 days");
  std::vector<double> out;
  out.reserve(s.size() - 1);
  for (std::size_t t = 1; t < s.size(); ++t) {
    if (!(s.avg_price[t] > 0.0) || !(s.avg_price[t - 1] > 0.0)) throw Error("log returns need positive prices");
    out.push_back(std::log(s.avg_price[t]) - std::log(s.avg_price[t - 1]));
  }
  return out;
}

// r(t) = N_s(t) / N_b(t), optionally log-transformed.
inline std::vector<double> seller_buyer_ratio(const DailySeries& s, RatioTransform transform = RatioTransform::raw) {
  std::vector<double> out;
  out.reserve(s.size());
  for (std::size_t t = 0; t < s.size(); ++t) {
    if (s.n_buyers[t] == 0 || s.n_sellers[t] == 0) throw Error("daily series has a day without buyers or sellers");
    const double r = static_cast<double>(s.n_sellers[t]) / static_cast<double>(s.n_buyers[t]);
    out.push_back(transform == RatioTransform::log ? std::log(r) : r);
  }
  return out;
}

// Pearson product-moment coefficient (single pass, co-moment updates).
inline double pearson_corr(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error("pearson_corr: length mismatch");
  if (x.size() < 3) throw InsufficientDataError("pearson_corr: need at least 3 pairs");
  double mx = 0, my = 0, cxx = 0, cyy = 0, cxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double n = static_cast<double>(i + 1);
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    mx += dx / n;
    my += dy / n;
    cxx += dx * (x[i] - mx);
    cyy += dy * (y[i] - my);
    cxy += dx * (y[i] - my);
  }
  if (!(cxx > 0.0) || !(cyy > 0.0)) throw DegenerateSampleError("pearson_corr: undefined for a constant series");
  const double r = cxy / std::sqrt(cxx * cyy);
  return std::clamp(r, -1.0, 1.0);
}

struct CorrelationOptions {
  RatioTransform ratio = RatioTransform::raw;
  // pr(t) is paired with r(t - lag); 0 pairs same-day values.
  int lag = 0;
};

inline double return_ratio_correlation(const DailySeries& s, const CorrelationOptions& opt = {}) {
  const auto pr = log_returns(s);  // pr[i] belongs to day i+1
  const auto r = seller_buyer_ratio(s, opt.ratio);
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < pr.size(); ++i) {
    const long day = static_cast<long>(i) + 1 - opt.lag;
    if (day < 0 || day >= static_cast<long>(r.size())) continue;
    xs.push_back(pr[i]);
    ys.push_back(r[static_cast<std::size_t>(day)]);
  }
  return pearson_corr(xs, ys);
}

// ---------------------------------------------------------------------------

enum class TailStatistic : std::size_t { in_degree, out_degree, in_strength, out_strength, total_strength };

inline constexpr std::array<TailStatistic, 5> kTailStatistics = {
    TailStatistic::in_degree, TailStatistic::out_degree, TailStatistic::in_strength,
    TailStatistic::out_strength, TailStatistic::total_strength};

inline constexpr std::string_view name(TailStatistic s) {
  constexpr std::array<std::string_view, 5> names = {"in_degree", "out_degree", "in_strength", "out_strength",
                                                     "total_strength"};
  return names[static_cast<std::size_t>(s)];
}

inline std::optional<TailStatistic> parse_tail_statistic(std::string_view s) {
  for (auto t : kTailStatistics)
    if (name(t) == s) return t;
  return std::nullopt;
}

struct NetworkSamples {
  DegreeSequences degrees;
  StrengthSequences strengths;

  const std::vector<std::uint64_t>& of(TailStatistic s) const {
    switch (s) {
      case TailStatistic::in_degree: return degrees.in_deg;
      case TailStatistic::out_degree: return degrees.out_deg;
      case TailStatistic::in_strength: return strengths.s_in;
      case TailStatistic::out_strength: return strengths.s_out;
      case TailStatistic::total_strength: return strengths.s_tot;
    }
    return degrees.tot_deg;
  }
};

inline NetworkSamples network_samples(const TradingNetwork& net) {
  return {degree_sequences(net), strength_sequences(net)};
}

// Per-stock detection features. Missing entries carry the reason in the
// matching *_error field.
struct StockFeatures {
  std::string symbol;
  std::array<std::optional<powerlaw::TailFit>, 5> fits;
  std::array<std::string, 5> fit_errors;
  std::optional<double> avg_degree;
  std::optional<double> return_ratio_corr;
  std::string network_error;
  std::string corr_error;
  std::size_t n_days = 0;
  std::size_t n_nodes = 0;
  std::size_t n_edges = 0;
  std::size_t n_transactions = 0;

  const std::optional<powerlaw::TailFit>& fit(TailStatistic s) const { return fits[static_cast<std::size_t>(s)]; }
  std::optional<double> x_min(TailStatistic s) const {
    const auto& f = fit(s);
    return f ? std::optional<double>(static_cast<double>(f->x_min)) : std::nullopt;
  }
};

struct FeatureConfig {
  powerlaw::GofConfig gof;
  // When false the tail fits skip the bootstrap and carry no p-value.
  bool with_pvalue = true;
  PriceAveraging price = PriceAveraging::volume_weighted;
  CorrelationOptions correlation;
};

inline StockFeatures compute_features(const TransactionLog& log, const FeatureConfig& cfg) {
  StockFeatures f;
  f.symbol = log.meta().symbol;
  f.n_transactions = log.size();
  if (log.empty()) {
    f.network_error = f.corr_error = "empty log";
    f.fit_errors.fill("empty log");
    return f;
  }

  const TradingNetwork net = build_network(log);
  f.n_nodes = net.node_count();
  f.n_edges = net.edge_count();
  f.avg_degree = average_degree(net);
  const NetworkSamples samples = network_samples(net);
  for (auto stat : kTailStatistics) {
    const auto i = static_cast<std::size_t>(stat);
    powerlaw::GofConfig g = cfg.gof;
    g.rng_seed = derive_seed(cfg.gof.rng_seed, i);
    try {
      f.fits[i] = cfg.with_pvalue ? powerlaw::fit_tail(samples.of(stat), g)
                                  : powerlaw::select_xmin(samples.of(stat), g);
    } catch (const Error& e) {
      f.fit_errors[i] = e.what();
    }
  }

  const DailySeries series = daily_series(log, cfg.price);
  f.n_days = series.size();
  if (f.n_days < 3) {
    f.corr_error = "fewer than 3 trading days";
  } else {
    try {
      f.return_ratio_corr = return_ratio_correlation(series, cfg.correlation);
    } catch (const Error& e) {
      f.corr_error = e.what();
    }
  }
  return f;
}

}  // namespace tradenet
