#pragma once

// Corpus-level feature extraction and detection.
//
// A labeled-manipulated stock is analysed over its manipulation period only,
// and its reference stocks over the same period; every other stock over its
// whole log.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tradenet/detector.hpp"
#include "tradenet/error.hpp"
#include "tradenet/features.hpp"
#include "tradenet/parallel.hpp"
#include "tradenet/rng.hpp"
#include "tradenet/transaction.hpp"

namespace tradenet {

inline std::optional<DateInterval> analysis_window(const StockMeta& m) {
  return m.manipulated ? m.manipulation_period : std::nullopt;
}

inline std::string window_key(const std::optional<DateInterval>& w) {
  return w ? format_date(w->start) + ".." + format_date(w->end) : std::string();
}

// FNV-1a; keeps per-stock bootstrap seeds independent of corpus order.
inline std::uint64_t key_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline StockFeatures features_over(const TransactionLog& log, const std::optional<DateInterval>& window,
                                   const FeatureConfig& cfg) {
  FeatureConfig c = cfg;
  c.gof.rng_seed = derive_seed(cfg.gof.rng_seed, key_hash(log.meta().symbol + "|" + window_key(window)));
  return compute_features(window ? filter_period(log, *window) : log, c);
}

struct PipelineConfig {
  FeatureConfig features;
  detect::DetectorConfig detector;
  unsigned jobs = 1;
};

struct Detection {
  std::string symbol;
  std::optional<DateInterval> window;
  detect::ReferenceGroup reference;
  std::optional<detect::ReferenceValues> reference_values;
  std::optional<detect::ManipulationReport> report;
  std::string error;  // set when no report could be produced
};

struct CorpusResult {
  // Both in input order; features cover each stock's analysis window.
  std::vector<StockFeatures> features;
  std::vector<Detection> detections;
};

inline std::vector<StockMeta> metas_of(std::span<const TransactionLog> logs) {
  std::vector<StockMeta> metas;
  std::set<std::string> seen;
  for (const auto& l : logs) {
    if (!seen.insert(l.meta().symbol).second) throw Error("duplicate symbol " + l.meta().symbol + " in corpus");
    metas.push_back(l.meta());
  }
  return metas;
}

inline CorpusResult detect_corpus(std::span<const TransactionLog> logs, const PipelineConfig& cfg) {
  cfg.detector.validate();
  if (cfg.features.with_pvalue) cfg.features.gof.validate();
  const auto metas = metas_of(logs);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < metas.size(); ++i) index[metas[i].symbol] = i;

  // Every (stock, window) pair the detection needs, computed once.
  struct Job {
    std::size_t stock;
    std::optional<DateInterval> window;
  };
  std::vector<Job> jobs;
  std::map<std::pair<std::size_t, std::string>, std::size_t> job_of;
  auto need = [&](std::size_t stock, const std::optional<DateInterval>& w) {
    const auto [it, fresh] = job_of.try_emplace({stock, window_key(w)}, jobs.size());
    if (fresh) jobs.push_back({stock, w});
    return it->second;
  };

  CorpusResult result;
  result.detections.resize(metas.size());
  std::vector<std::size_t> own_job(metas.size());
  for (std::size_t i = 0; i < metas.size(); ++i) {
    auto& d = result.detections[i];
    d.symbol = metas[i].symbol;
    d.window = analysis_window(metas[i]);
    own_job[i] = need(i, d.window);
    try {
      d.reference = detect::select_reference(metas[i], metas);
      for (const auto& m : d.reference.members) need(index.at(m), d.window);
    } catch (const Error& e) {
      d.error = e.what();
    }
  }

  FeatureConfig fc = cfg.features;
  if (cfg.jobs > 1) fc.gof.threads = 1;
  std::vector<StockFeatures> computed(jobs.size());
  parallel_for(jobs.size(), cfg.jobs,
               [&](std::size_t j) { computed[j] = features_over(logs[jobs[j].stock], jobs[j].window, fc); });

  for (std::size_t i = 0; i < metas.size(); ++i) {
    result.features.push_back(computed[own_job[i]]);
    auto& d = result.detections[i];
    if (!d.error.empty()) continue;
    std::map<std::string, StockFeatures> members;
    for (const auto& m : d.reference.members)
      members.emplace(m, computed[job_of.at({index.at(m), window_key(d.window)})]);
    try {
      d.reference_values = detect::reference_values(d.reference, members);
      d.report = detect::evaluate(result.features.back(), *d.reference_values, cfg.detector);
    } catch (const Error& e) {
      d.error = e.what();
    }
  }
  return result;
}

}  // namespace tradenet
