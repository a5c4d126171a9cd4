#pragma once

// Reference-group comparison and flag voting.
//
// A target is compared with the mean features of the non-manipulated stocks
// sharing its capitalization bucket and sector. Seven flags: return/ratio
// correlation below a threshold, each of the five tail x_min above the
// reference mean, and average degree above the reference mean. The verdict is
// a vote over the flags that could be evaluated.

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tradenet/error.hpp"
#include "tradenet/features.hpp"
#include "tradenet/transaction.hpp"

namespace tradenet::detect {

struct ReferenceGroup {
  std::string target;
  std::vector<std::string> members;  // ascending symbols
};

// Members: labeled-honest stocks with the target's bucket and sector, the
// target itself excluded.
inline ReferenceGroup select_reference(const StockMeta& target, std::span<const StockMeta> universe) {
  if (universe.empty()) throw NoReferenceError("reference selection needs a non-empty universe");
  ReferenceGroup g{target.symbol, {}};
  for (const auto& m : universe) {
    if (m.symbol == target.symbol || m.manipulated) continue;
    if (m.capitalization_bucket == target.capitalization_bucket && m.sector == target.sector)
      g.members.push_back(m.symbol);
  }
  if (g.members.empty())
    throw NoReferenceError("no reference stock for " + target.symbol + " (bucket " +
                           std::to_string(target.capitalization_bucket) + ", sector " + target.sector +
                           "); use a coarser capitalization bucketing");
  std::sort(g.members.begin(), g.members.end());
  g.members.erase(std::unique(g.members.begin(), g.members.end()), g.members.end());
  return g;
}

// A per-feature mean together with the number of members that had the feature.
struct MeanValue {
  std::optional<double> mean;
  std::size_t count = 0;
};

struct ReferenceValues {
  std::array<MeanValue, 5> x_min;
  MeanValue avg_degree;
  MeanValue return_ratio_corr;

  const MeanValue& of(TailStatistic s) const { return x_min[static_cast<std::size_t>(s)]; }
};

inline ReferenceValues reference_values(const ReferenceGroup& group,
                                        const std::map<std::string, StockFeatures>& features) {
  if (group.members.empty()) throw NoReferenceError("reference group of " + group.target + " is empty");
  struct Sum {
    double total = 0.0;
    std::size_t count = 0;
    void add(std::optional<double> v) {
      if (!v) return;
      total += *v;
      ++count;
    }
    MeanValue mean() const {
      return count == 0 ? MeanValue{} : MeanValue{total / static_cast<double>(count), count};
    }
  };
  std::array<Sum, 5> xs;
  Sum deg, corr;
  for (const auto& sym : group.members) {
    const auto it = features.find(sym);
    if (it == features.end()) throw Error("no features for reference member " + sym);
    for (auto s : kTailStatistics) xs[static_cast<std::size_t>(s)].add(it->second.x_min(s));
    deg.add(it->second.avg_degree);
    corr.add(it->second.return_ratio_corr);
  }
  ReferenceValues r;
  for (std::size_t i = 0; i < 5; ++i) r.x_min[i] = xs[i].mean();
  r.avg_degree = deg.mean();
  r.return_ratio_corr = corr.mean();

  std::vector<std::string> missing;
  for (auto s : kTailStatistics)
    if (!r.of(s).mean) missing.push_back("x_min of " + std::string(name(s)));
  if (!r.avg_degree.mean) missing.push_back("avg_degree");
  if (!r.return_ratio_corr.mean) missing.push_back("return_ratio_corr");
  if (!missing.empty()) {
    std::string msg = "reference group of " + group.target + " has no value for";
    for (std::size_t i = 0; i < missing.size(); ++i) msg += (i ? ", " : " ") + missing[i];
    throw InsufficientDataError(msg);
  }
  return r;
}

struct DetectorConfig {
  double corr_threshold = 0.2;
  double elevation_factor = 1.5;
  double decision_threshold = 0.5;

  void validate() const {
    if (!(corr_threshold >= -1.0 && corr_threshold <= 1.0)) throw ConfigError("corr_threshold must lie in [-1, 1]");
    if (!(elevation_factor > 0.0)) throw ConfigError("elevation_factor must be positive");
    if (!(decision_threshold > 0.0 && decision_threshold <= 1.0))
      throw ConfigError("decision_threshold must lie in (0, 1]");
  }
};

struct ManipulationReport {
  std::string symbol;
  std::optional<bool> corr_below_threshold;
  std::array<std::optional<bool>, 5> xmin_elevated;
  std::optional<bool> avg_degree_elevated;
  std::size_t flagged = 0;
  std::size_t evaluated = 0;
  double score = 0.0;
  bool verdict = false;
  DetectorConfig thresholds;
  // Features that could not be compared, e.g. "x_min of in_degree".
  std::vector<std::string> missing;

  std::size_t xmin_flag_count() const {
    std::size_t n = 0;
    for (const auto& f : xmin_elevated) n += f.value_or(false) ? 1 : 0;
    return n;
  }
};

inline ManipulationReport evaluate(const StockFeatures& target, const ReferenceValues& ref,
                                   const DetectorConfig& cfg = {}) {
  cfg.validate();
  ManipulationReport rep;
  rep.symbol = target.symbol;
  rep.thresholds = cfg;
  auto record = [&](std::optional<bool>& slot, bool flag) {
    slot = flag;
    ++rep.evaluated;
    if (flag) ++rep.flagged;
  };

  if (target.return_ratio_corr)
    record(rep.corr_below_threshold, *target.return_ratio_corr < cfg.corr_threshold);
  else
    rep.missing.emplace_back("return_ratio_corr");

  for (auto s : kTailStatistics) {
    const auto i = static_cast<std::size_t>(s);
    const auto x = target.x_min(s);
    if (x && ref.x_min[i].mean)
      record(rep.xmin_elevated[i], *x > cfg.elevation_factor * *ref.x_min[i].mean);
    else
      rep.missing.push_back("x_min of " + std::string(name(s)));
  }

  if (target.avg_degree && ref.avg_degree.mean)
    record(rep.avg_degree_elevated, *target.avg_degree > cfg.elevation_factor * *ref.avg_degree.mean);
  else
    rep.missing.emplace_back("avg_degree");

  rep.score = rep.evaluated == 0 ? 0.0 : static_cast<double>(rep.flagged) / static_cast<double>(rep.evaluated);
  rep.verdict = rep.evaluated > 0 && rep.score >= cfg.decision_threshold;
  return rep;
}

}  // namespace tradenet::detect
