#pragma once

// File formats: metadata sidecars, fit/report JSON, the feature table,
// plot-data dumps and edge lists. Everything written here is a pure function
// of its inputs so reruns are byte-identical.

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "tradenet/detector.hpp"
#include "tradenet/error.hpp"
#include "tradenet/features.hpp"
#include "tradenet/network.hpp"
#include "tradenet/pipeline.hpp"
#include "tradenet/transaction.hpp"

namespace tradenet::io {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

// Writes to a sibling temporary file, then renames over the target.
inline void write_file_atomic(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

inline std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Shortest round-trip decimal.
inline std::string format_number(double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, p);
}

inline std::string dump(const Json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Metadata sidecar

inline Json interval_to_json(const std::optional<DateInterval>& w) {
  if (!w) return nullptr;
  return Json{{"start", format_date(w->start)}, {"end", format_date(w->end)}};
}

inline Json meta_to_json(const StockMeta& m) {
  return Json{{"symbol", m.symbol},
              {"capitalization_bucket", m.capitalization_bucket},
              {"sector", m.sector},
              {"manipulated", m.manipulated},
              {"manipulation_period", interval_to_json(m.manipulation_period)}};
}

inline StockMeta meta_from_json(const Json& j) {
  auto fail = [](const std::string& what) { throw ConfigError("metadata: " + what); };
  if (!j.is_object()) fail("expected a JSON object");
  StockMeta m;
  if (!j.contains("symbol") || !j["symbol"].is_string()) fail("symbol must be a string");
  m.symbol = j["symbol"].get<std::string>();
  if (j.contains("capitalization_bucket")) {
    if (!j["capitalization_bucket"].is_number_integer()) fail("capitalization_bucket must be an integer");
    m.capitalization_bucket = j["capitalization_bucket"].get<int>();
  }
  if (j.contains("sector")) {
    if (!j["sector"].is_string()) fail("sector must be a string");
    m.sector = j["sector"].get<std::string>();
  }
  if (j.contains("manipulated")) {
    if (!j["manipulated"].is_boolean()) fail("manipulated must be a boolean");
    m.manipulated = j["manipulated"].get<bool>();
  }
  if (j.contains("manipulation_period") && !j["manipulation_period"].is_null()) {
    const auto& p = j["manipulation_period"];
    if (!p.is_object() || !p.contains("start") || !p.contains("end") || !p["start"].is_string() ||
        !p["end"].is_string())
      fail("manipulation_period must be {\"start\": date, \"end\": date}");
    const auto start = parse_date(p["start"].get<std::string>());
    const auto end = parse_date(p["end"].get<std::string>());
    if (!start || !end) fail("manipulation_period dates must be YYYY-MM-DD");
    m.manipulation_period = DateInterval{*start, *end};
  }
  m.validate();
  return m;
}

inline fs::path sidecar_path(const fs::path& csv) {
  fs::path p = csv;
  p.replace_extension(".json");
  return p;
}

// Reads a stock CSV and its sidecar; without a sidecar the symbol is the file
// stem and the stock counts as honest.
inline TransactionLog read_stock(const fs::path& csv) {
  StockMeta meta;
  const fs::path side = sidecar_path(csv);
  if (fs::exists(side)) {
    Json j;
    try {
      j = Json::parse(read_file(side));
    } catch (const Json::parse_error& e) {
      throw ConfigError(side.string() + ": " + e.what());
    }
    try {
      meta = meta_from_json(j);
    } catch (const ConfigError& e) {
      throw ConfigError(side.string() + ": " + e.what());
    }
  } else {
    meta.symbol = csv.stem().string();
  }
  std::ifstream in(csv, std::ios::binary);
  if (!in) throw Error("cannot open " + csv.string());
  try {
    return parse_transactions(in, std::move(meta));
  } catch (const Error& e) {
    throw Error(csv.string() + ": " + e.what());
  }
}

inline void write_stock(const fs::path& dir, const TransactionLog& log) {
  write_file_atomic(dir / (log.meta().symbol + ".csv"), to_csv(log));
  write_file_atomic(dir / (log.meta().symbol + ".json"), dump(meta_to_json(log.meta())));
}

// Regular files named *.csv directly inside `dir`, sorted.
inline std::vector<fs::path> csv_files(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".csv") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

// ---------------------------------------------------------------------------
// Fits, features, reports

inline Json fit_to_json(const powerlaw::TailFit& f) {
  return Json{{"x_min", f.x_min},
              {"alpha", f.alpha},
              {"ccdf_exponent", f.ccdf_exponent},
              {"ks_distance", f.ks_distance},
              {"p_value", f.p_value ? Json(*f.p_value) : Json(nullptr)},
              {"n_tail", f.n_tail},
              {"levy_stable", f.levy_stable}};
}

inline Json fit_report(const StockFeatures& f, const std::optional<DateInterval>& window) {
  Json fits = Json::object();
  for (auto s : kTailStatistics) {
    const auto i = static_cast<std::size_t>(s);
    fits[std::string(name(s))] = f.fits[i] ? fit_to_json(*f.fits[i]) : Json{{"error", f.fit_errors[i]}};
  }
  return Json{{"symbol", f.symbol}, {"window", interval_to_json(window)}, {"fits", fits}};
}

inline std::string optional_number(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

inline std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

inline std::string features_csv(std::span<const StockFeatures> rows) {
  std::string out = "symbol,n_transactions,n_nodes,n_edges,n_days,avg_degree,return_ratio_corr";
  for (auto s : kTailStatistics) {
    const std::string n(name(s));
    for (const char* col : {"x_min", "alpha", "ccdf_exponent", "ks_distance", "p_value", "n_tail", "levy_stable"})
      out += "," + n + "_" + col;
  }
  out += '\n';
  for (const auto& f : rows) {
    out += csv_field(f.symbol) + ',' + std::to_string(f.n_transactions) + ',' + std::to_string(f.n_nodes) + ',' +
           std::to_string(f.n_edges) + ',' + std::to_string(f.n_days) + ',' + optional_number(f.avg_degree) + ',' +
           optional_number(f.return_ratio_corr);
    for (const auto& fit : f.fits) {
      if (!fit) {
        out += ",,,,,,,";
        continue;
      }
      out += ',' + std::to_string(fit->x_min) + ',' + format_number(fit->alpha) + ',' +
             format_number(fit->ccdf_exponent) + ',' + format_number(fit->ks_distance) + ',' +
             optional_number(fit->p_value) + ',' + std::to_string(fit->n_tail) + ',' +
             (fit->levy_stable ? "true" : "false");
    }
    out += '\n';
  }
  return out;
}

inline Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }
inline Json optional_json(const std::optional<bool>& v) { return v ? Json(*v) : Json(nullptr); }

inline Json thresholds_to_json(const detect::DetectorConfig& c) {
  return Json{{"corr_threshold", c.corr_threshold},
              {"elevation_factor", c.elevation_factor},
              {"decision_threshold", c.decision_threshold}};
}

inline Json mean_to_json(const detect::MeanValue& m) {
  return Json{{"mean", optional_json(m.mean)}, {"count", m.count}};
}

inline Json detection_to_json(const Detection& d, const StockFeatures& target) {
  Json j{{"symbol", d.symbol}, {"window", interval_to_json(d.window)}};
  if (!d.report) {
    j["verdict"] = nullptr;
    j["error"] = d.error;
    return j;
  }
  const auto& r = *d.report;
  j["verdict"] = r.verdict;
  j["score"] = r.score;
  j["flagged"] = r.flagged;
  j["evaluated"] = r.evaluated;

  Json xmin = Json::object();
  for (auto s : kTailStatistics) xmin[std::string(name(s))] = optional_json(r.xmin_elevated[static_cast<std::size_t>(s)]);
  j["flags"] = Json{{"corr_below_threshold", optional_json(r.corr_below_threshold)},
                    {"xmin_elevated", xmin},
                    {"avg_degree_elevated", optional_json(r.avg_degree_elevated)}};
  j["thresholds"] = thresholds_to_json(r.thresholds);

  Json target_xmin = Json::object();
  for (auto s : kTailStatistics) target_xmin[std::string(name(s))] = optional_json(target.x_min(s));
  j["target"] = Json{{"return_ratio_corr", optional_json(target.return_ratio_corr)},
                     {"avg_degree", optional_json(target.avg_degree)},
                     {"x_min", target_xmin}};

  Json ref_xmin = Json::object();
  const auto& rv = *d.reference_values;
  for (auto s : kTailStatistics) ref_xmin[std::string(name(s))] = mean_to_json(rv.of(s));
  j["reference"] = Json{{"members", d.reference.members},
                        {"return_ratio_corr", mean_to_json(rv.return_ratio_corr)},
                        {"avg_degree", mean_to_json(rv.avg_degree)},
                        {"x_min", ref_xmin}};
  j["missing"] = r.missing;
  return j;
}

inline Json reports_json(const CorpusResult& res) {
  Json arr = Json::array();
  for (std::size_t i = 0; i < res.detections.size(); ++i)
    arr.push_back(detection_to_json(res.detections[i], res.features[i]));
  return arr;
}

// ---------------------------------------------------------------------------
// Plot data and edge lists

// Distinct values x >= 1 with P(X >= x).
inline std::string ccdf_csv(std::span<const std::uint64_t> sample) {
  std::vector<std::uint64_t> v;
  for (auto x : sample)
    if (x > 0) v.push_back(x);
  std::sort(v.begin(), v.end());
  std::string out = "x,ccdf\n";
  const double n = static_cast<double>(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0 && v[i] == v[i - 1]) continue;
    out += std::to_string(v[i]) + ',' + format_number(static_cast<double>(v.size() - i) / n) + '\n';
  }
  return out;
}

inline std::string daily_csv(const DailySeries& s) {
  std::string out = "date,avg_price,n_sellers,n_buyers,log_return,seller_buyer_ratio\n";
  for (std::size_t t = 0; t < s.size(); ++t) {
    out += format_date(s.days[t]) + ',' + format_number(s.avg_price[t]) + ',' + std::to_string(s.n_sellers[t]) +
           ',' + std::to_string(s.n_buyers[t]) + ',';
    if (t > 0) out += format_number(std::log(s.avg_price[t]) - std::log(s.avg_price[t - 1]));
    out += ',' + format_number(static_cast<double>(s.n_sellers[t]) / static_cast<double>(s.n_buyers[t])) + '\n';
  }
  return out;
}

inline std::string edges_csv(const TradingNetwork& net) {
  std::string out = "seller_idx,buyer_idx,weight\n";
  for (const auto& e : net.edges())
    out += std::to_string(e.seller) + ',' + std::to_string(e.buyer) + ',' + std::to_string(e.weight) + '\n';
  return out;
}

inline std::string nodes_csv(const TradingNetwork& net, const AccountTable& accounts) {
  std::string out = "node_idx,account_id\n";
  const auto nodes = net.nodes();
  for (std::size_t i = 0; i < nodes.size(); ++i) out += std::to_string(i) + ',' + csv_field(accounts[nodes[i]]) + '\n';
  return out;
}

}  // namespace tradenet::io
