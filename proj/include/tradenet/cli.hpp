#pragma once

// Command-line front end. run() is the whole program; tools/tradenet.cpp only
// forwards argv.
//
// Exit codes: 0 success, 1 `detect` found at least one manipulated stock,
// 2 any error (bad flags, unreadable or invalid input, degenerate sample).

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tradenet/corpus.hpp"
#include "tradenet/detector.hpp"
#include "tradenet/error.hpp"
#include "tradenet/features.hpp"
#include "tradenet/io.hpp"
#include "tradenet/network.hpp"
#include "tradenet/parallel.hpp"
#include "tradenet/pipeline.hpp"
#include "tradenet/powerlaw.hpp"
#include "tradenet/simulator.hpp"
#include "tradenet/transaction.hpp"

namespace tradenet::cli {

inline constexpr const char* kVersion = "0.1.0";

namespace fs = std::filesystem;
using io::Json;

struct Options {
  // shared
  std::uint64_t seed = 1;
  std::size_t bootstrap = powerlaw::GofConfig{}.bootstrap_replicas;
  double significance = powerlaw::GofConfig{}.significance;
  std::size_t min_tail = powerlaw::GofConfig{}.min_tail_size;
  std::size_t max_candidates = powerlaw::GofConfig{}.max_candidates;
  double corr_threshold = detect::DetectorConfig{}.corr_threshold;
  double elevation_factor = detect::DetectorConfig{}.elevation_factor;
  double decision_threshold = detect::DetectorConfig{}.decision_threshold;
  std::string price = "volume_weighted";
  std::string ratio = "raw";
  int lag = 0;
  unsigned jobs = 1;
  std::string out = "out";
  int verbose = 0;
  bool quiet = false;
  bool dump_config = false;
  std::vector<std::string> inputs;

  // simulate
  std::size_t honest = 10;
  std::size_t manipulated = 2;
  std::size_t partial = 0;
  int buckets = 2;
  int sectors = 2;
  std::size_t days = sim::SimConfig{}.n_days;
  std::size_t traders = sim::SimConfig{}.n_traders;
  std::size_t manipulated_traders = sim::CorpusSpec{}.manipulated_traders;
  std::size_t colluders = sim::SimConfig{}.n_colluders;
  double wash_fraction = sim::SimConfig{}.wash_volume_fraction;
  std::string start_date = format_date(sim::default_start_date());

  // fit
  std::string samples;

  // detect
  bool with_pvalues = false;
};

inline std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline Json options_json(const Options& o) {
  return Json{{"seed", o.seed},
              {"bootstrap", o.bootstrap},
              {"significance", o.significance},
              {"min_tail", o.min_tail},
              {"max_candidates", o.max_candidates},
              {"corr_threshold", o.corr_threshold},
              {"elevation_factor", o.elevation_factor},
              {"decision_threshold", o.decision_threshold},
              {"price", o.price},
              {"ratio", o.ratio},
              {"lag", o.lag},
              {"jobs", o.jobs},
              {"out", o.out}};
}

class Command {
 public:
  Command(const Options& o, std::string name, std::ostream& out, std::ostream& err)
      : o_(o), name_(std::move(name)), out_(out), err_(err), started_(utc_now()) {}

  const Options& opt() const { return o_; }
  std::ostream& out() { return out_; }
  std::ostream& err() { return err_; }

  void progress(const std::string& msg) {
    if (o_.verbose > 0) err_ << msg << '\n';
  }
  void say(const std::string& msg) {
    if (!o_.quiet) out_ << msg << '\n';
  }

  fs::path out_dir() const { return fs::path(o_.out); }

  void write(const fs::path& rel, std::string_view content) {
    io::write_file_atomic(out_dir() / rel, content);
    outputs_.push_back(rel.generic_string());
  }

  void add_input(const fs::path& p, const std::string& symbol, std::size_t records) {
    inputs_.push_back(Json{{"path", p.generic_string()}, {"symbol", symbol}, {"records", records}});
  }

  Json& extra() { return extra_; }

  void write_manifest(const Json& config) {
    Json m{{"tool", "tradenet"},
           {"version", kVersion},
           {"command", name_},
           {"config", config},
           {"inputs", inputs_},
           {"outputs", outputs_}};
    for (auto& [k, v] : extra_.items()) m[k] = v;
    m["started_at"] = started_;
    m["finished_at"] = utc_now();
    io::write_file_atomic(out_dir() / "manifest.json", io::dump(m));
  }

 private:
  const Options& o_;
  std::string name_;
  std::ostream& out_;
  std::ostream& err_;
  std::string started_;
  Json inputs_ = Json::array();
  std::vector<std::string> outputs_;
  Json extra_ = Json::object();
};

inline std::vector<fs::path> expand_inputs(const std::vector<std::string>& inputs) {
  std::vector<fs::path> out;
  for (const auto& s : inputs) {
    const fs::path p(s);
    if (fs::is_directory(p)) {
      const auto files = io::csv_files(p);
      if (files.empty()) throw Error(s + ": directory holds no .csv files");
      out.insert(out.end(), files.begin(), files.end());
    } else if (fs::exists(p)) {
      out.push_back(p);
    } else {
      throw Error(s + ": no such file or directory");
    }
  }
  if (out.empty()) throw Error("no input files");
  return out;
}

inline std::vector<TransactionLog> load_logs(Command& cmd) {
  std::vector<TransactionLog> logs;
  for (const auto& p : expand_inputs(cmd.opt().inputs)) {
    cmd.progress("reading " + p.string());
    logs.push_back(io::read_stock(p));
    cmd.add_input(p, logs.back().meta().symbol, logs.back().size());
  }
  metas_of(logs);  // rejects duplicate symbols
  return logs;
}

inline FeatureConfig feature_config(const Options& o, bool with_pvalue) {
  FeatureConfig fc;
  fc.gof.bootstrap_replicas = o.bootstrap;
  fc.gof.significance = o.significance;
  fc.gof.rng_seed = o.seed;
  fc.gof.min_tail_size = o.min_tail;
  fc.gof.max_candidates = o.max_candidates;
  fc.gof.threads = o.jobs;
  fc.with_pvalue = with_pvalue && o.bootstrap > 0;
  if (fc.with_pvalue) fc.gof.validate();
  fc.price = o.price == "unweighted" ? PriceAveraging::unweighted : PriceAveraging::volume_weighted;
  fc.correlation.ratio = o.ratio == "log" ? RatioTransform::log : RatioTransform::raw;
  fc.correlation.lag = o.lag;
  return fc;
}

// ---------------------------------------------------------------------------

inline int cmd_simulate(Command& cmd) {
  const Options& o = cmd.opt();
  sim::CorpusSpec spec;
  spec.master_seed = o.seed;
  spec.cells = sim::grid_cells(o.honest, o.manipulated, o.partial, o.buckets, o.sectors);
  spec.manipulated_traders = o.manipulated_traders;
  spec.base.n_days = o.days;
  spec.base.n_traders = o.traders;
  spec.base.n_colluders = o.colluders;
  spec.base.wash_volume_fraction = o.wash_fraction;
  const auto start = parse_date(o.start_date);
  if (!start) throw ConfigError("--start-date must be YYYY-MM-DD");
  spec.base.start_date = *start;
  spec.base.validate();

  const auto configs = sim::corpus_configs(spec);
  std::vector<sim::SimResult> corpus(configs.size());
  parallel_for(configs.size(), o.jobs, [&](std::size_t i) { corpus[i] = sim::simulate(configs[i]); });

  Json stocks = Json::array();
  Json truth = Json::object();
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& r = corpus[i];
    const std::string sym = r.log.meta().symbol;
    cmd.write(fs::path("corpus") / (sym + ".csv"), to_csv(r.log));
    cmd.write(fs::path("corpus") / (sym + ".json"), io::dump(io::meta_to_json(r.log.meta())));
    stocks.push_back(Json{{"symbol", sym},
                          {"file", "corpus/" + sym + ".csv"},
                          {"seed", configs[i].rng_seed},
                          {"n_traders", configs[i].n_traders},
                          {"records", r.log.size()},
                          {"metadata", io::meta_to_json(r.log.meta())}});
    truth[sym] = r.colluders;
  }
  cmd.write("truth.json", io::dump(truth));
  cmd.extra()["master_seed"] = o.seed;
  cmd.extra()["stocks"] = stocks;
  cmd.say("simulated " + std::to_string(corpus.size()) + " stocks into " + (cmd.out_dir() / "corpus").string());
  return 0;
}

inline int cmd_validate(Command& cmd) {
  int failures = 0;
  for (const auto& p : expand_inputs(cmd.opt().inputs)) {
    try {
      const auto log = io::read_stock(p);
      cmd.add_input(p, log.meta().symbol, log.size());
      cmd.out() << p.string() << ": " << log.size() << " records\n";
    } catch (const Error& e) {
      cmd.err() << "error: " << e.what() << '\n';
      ++failures;
    }
  }
  return failures == 0 ? 0 : 2;
}

inline int cmd_build(Command& cmd) {
  const auto logs = load_logs(cmd);
  for (const auto& log : logs) {
    const auto net = build_network(log);
    const std::string sym = log.meta().symbol;
    cmd.write(fs::path("networks") / (sym + ".edges.csv"), io::edges_csv(net));
    cmd.write(fs::path("networks") / (sym + ".nodes.csv"), io::nodes_csv(net, log.accounts()));
    cmd.say(sym + ": " + std::to_string(net.node_count()) + " nodes, " + std::to_string(net.edge_count()) +
            " edges, average degree " + io::format_number(average_degree(net)));
  }
  return 0;
}

inline std::vector<std::uint64_t> read_samples(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot open " + p.string());
  std::vector<std::uint64_t> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) {
      std::uint64_t v = 0;
      if (!detail::parse_int(tok, v)) throw ParseError(line_no, "'" + tok + "' is not a non-negative integer");
      out.push_back(v);
    }
  }
  return out;
}

inline int cmd_fit(Command& cmd) {
  const Options& o = cmd.opt();
  const FeatureConfig fc = feature_config(o, true);
  if (!o.samples.empty()) {
    const fs::path p(o.samples);
    const auto sample = read_samples(p);
    cmd.add_input(p, p.stem().string(), sample.size());
    powerlaw::TailFit fit;
    try {
      fit = fc.with_pvalue ? powerlaw::fit_tail(sample, fc.gof) : powerlaw::select_xmin(sample, fc.gof);
    } catch (const DegenerateSampleError& e) {
      cmd.err() << "error: degenerate sample: " << e.what() << '\n';
      return 2;
    } catch (const InsufficientDataError& e) {
      cmd.err() << "error: insufficient data: " << e.what() << '\n';
      return 2;
    }
    cmd.write(fs::path("fits") / (p.stem().string() + ".json"),
              io::dump(Json{{"symbol", p.stem().string()}, {"fits", Json{{"sample", io::fit_to_json(fit)}}}}));
    cmd.say(p.stem().string() + ": x_min " + std::to_string(fit.x_min) + ", alpha " + io::format_number(fit.alpha) +
            (fit.p_value ? ", p " + io::format_number(*fit.p_value) : std::string()));
    return 0;
  }
  const auto logs = load_logs(cmd);
  std::vector<StockFeatures> feats(logs.size());
  parallel_for(logs.size(), o.jobs, [&](std::size_t i) {
    FeatureConfig c = fc;
    if (o.jobs > 1) c.gof.threads = 1;
    feats[i] = features_over(logs[i], analysis_window(logs[i].meta()), c);
  });
  for (std::size_t i = 0; i < logs.size(); ++i) {
    cmd.write(fs::path("fits") / (feats[i].symbol + ".json"),
              io::dump(io::fit_report(feats[i], analysis_window(logs[i].meta()))));
    std::string line = feats[i].symbol + ":";
    for (auto s : kTailStatistics) {
      const auto x = feats[i].x_min(s);
      line += " " + std::string(name(s)) + "=" + (x ? std::to_string(static_cast<std::uint64_t>(*x)) : "n/a");
    }
    cmd.say(line);
  }
  return 0;
}

inline int cmd_features(Command& cmd) {
  const Options& o = cmd.opt();
  const FeatureConfig fc = feature_config(o, true);
  const auto logs = load_logs(cmd);
  std::vector<StockFeatures> feats(logs.size());
  parallel_for(logs.size(), o.jobs, [&](std::size_t i) {
    FeatureConfig c = fc;
    if (o.jobs > 1) c.gof.threads = 1;
    feats[i] = features_over(logs[i], analysis_window(logs[i].meta()), c);
  });
  cmd.write("features.csv", io::features_csv(feats));
  for (std::size_t i = 0; i < logs.size(); ++i) {
    const auto window = analysis_window(logs[i].meta());
    const std::string sym = feats[i].symbol;
    cmd.write(fs::path("fits") / (sym + ".json"), io::dump(io::fit_report(feats[i], window)));
    const TransactionLog view = window ? filter_period(logs[i], *window) : logs[i];
    if (view.empty()) continue;
    const auto samples = network_samples(build_network(view));
    for (auto s : kTailStatistics)
      cmd.write(fs::path("plots") / (sym + "." + std::string(name(s)) + ".ccdf.csv"), io::ccdf_csv(samples.of(s)));
    cmd.write(fs::path("plots") / (sym + ".daily.csv"), io::daily_csv(daily_series(view, fc.price)));
  }
  cmd.say("wrote features for " + std::to_string(feats.size()) + " stocks to " + (cmd.out_dir() / "features.csv").string());
  return 0;
}

inline int cmd_detect(Command& cmd) {
  const Options& o = cmd.opt();
  PipelineConfig pc;
  pc.features = feature_config(o, o.with_pvalues);
  pc.detector.corr_threshold = o.corr_threshold;
  pc.detector.elevation_factor = o.elevation_factor;
  pc.detector.decision_threshold = o.decision_threshold;
  pc.detector.validate();
  pc.jobs = o.jobs;
  const auto logs = load_logs(cmd);
  const CorpusResult res = detect_corpus(logs, pc);

  for (std::size_t i = 0; i < logs.size(); ++i)
    cmd.write(fs::path("fits") / (res.features[i].symbol + ".json"),
              io::dump(io::fit_report(res.features[i], res.detections[i].window)));
  cmd.write("features.csv", io::features_csv(res.features));
  cmd.write("reports.json", io::dump(io::reports_json(res)));

  bool any = false;
  for (const auto& d : res.detections) {
    if (!d.report) {
      cmd.err() << "warning: " << d.symbol << ": " << d.error << '\n';
      continue;
    }
    any = any || d.report->verdict;
    cmd.say(d.symbol + (d.report->verdict ? " MANIPULATED" : " ok") + " score " +
            io::format_number(d.report->score) + " (" + std::to_string(d.report->flagged) + "/" +
            std::to_string(d.report->evaluated) + ")");
  }
  return any ? 1 : 0;
}

// ---------------------------------------------------------------------------

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Options o;
  CLI::App app{"Trading-network tail statistics and wash-trading detection.", "tradenet"};
  app.set_version_flag("--version", std::string(kVersion));
  app.set_config("--config", "", "Read options from a TOML file (flags take precedence)");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);

  app.add_option("--seed", o.seed, "Master seed for simulation and bootstrap")->capture_default_str();
  app.add_option("--bootstrap", o.bootstrap, "Bootstrap replicas for p-values (0 skips them)")->capture_default_str();
  app.add_option("--significance", o.significance, "Significance level of the goodness-of-fit test")
      ->capture_default_str();
  app.add_option("--min-tail", o.min_tail, "Smallest tail size considered when choosing x_min")->capture_default_str();
  app.add_option("--max-candidates", o.max_candidates, "Log-spaced x_min candidates above this count (0: all)")
      ->capture_default_str();
  app.add_option("--corr-threshold", o.corr_threshold, "Correlation below this is flagged")->capture_default_str();
  app.add_option("--elevation-factor", o.elevation_factor, "Flag x_min / degree above factor x reference mean")
      ->capture_default_str();
  app.add_option("--decision-threshold", o.decision_threshold, "Flag fraction at which the verdict is positive")
      ->capture_default_str();
  app.add_option("--price", o.price, "Daily price averaging")
      ->check(CLI::IsMember({"volume_weighted", "unweighted"}))
      ->capture_default_str();
  app.add_option("--ratio", o.ratio, "Seller/buyer ratio transform")->check(CLI::IsMember({"raw", "log"}))
      ->capture_default_str();
  app.add_option("--lag", o.lag, "Pair returns with the ratio this many days earlier")->capture_default_str();
  app.add_option("--jobs", o.jobs, "Worker threads")->check(CLI::Range(1u, 1024u))->capture_default_str();
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_flag("-v,--verbose", o.verbose, "Progress messages on stderr");
  app.add_flag("-q,--quiet", o.quiet, "No summary on stdout");
  app.add_flag("--dump-config", o.dump_config, "Print the effective configuration as TOML and exit");

  auto inputs = [&](CLI::App* sub) {
    return sub->add_option("inputs", o.inputs, "Transaction CSV files or directories of them");
  };

  auto* simulate = app.add_subcommand("simulate", "Generate a labeled synthetic corpus under OUT/corpus");
  simulate->add_option("--honest", o.honest, "Honest stocks")->capture_default_str();
  simulate->add_option("--manipulated", o.manipulated, "Stocks manipulated over the whole period")
      ->capture_default_str();
  simulate->add_option("--partial", o.partial, "Stocks manipulated over the leading part of the period")
      ->capture_default_str();
  simulate->add_option("--buckets", o.buckets, "Capitalization buckets")->check(CLI::PositiveNumber)
      ->capture_default_str();
  simulate->add_option("--sectors", o.sectors, "Sectors")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--days", o.days, "Trading days per stock")->capture_default_str();
  simulate->add_option("--traders", o.traders, "Traders per honest stock")->capture_default_str();
  simulate->add_option("--manipulated-traders", o.manipulated_traders, "Traders per manipulated stock")
      ->capture_default_str();
  simulate->add_option("--colluders", o.colluders, "Colluder accounts per manipulated stock")->capture_default_str();
  simulate->add_option("--wash-fraction", o.wash_fraction, "Colluder share of trades and volume")
      ->capture_default_str();
  simulate->add_option("--start-date", o.start_date, "First calendar day (YYYY-MM-DD)")->capture_default_str();

  auto* validate = app.add_subcommand("validate", "Parse and check transaction files");
  inputs(validate)->required();

  auto* build = app.add_subcommand("build", "Export trading networks as edge lists under OUT/networks");
  inputs(build)->required();

  auto* fit = app.add_subcommand("fit", "Power-law tail fits under OUT/fits");
  auto* fit_inputs = inputs(fit);
  auto* samples = fit->add_option("--samples", o.samples, "Fit one sample file (integers, whitespace separated)");
  samples->excludes(fit_inputs);
  fit_inputs->excludes(samples);

  auto* features = app.add_subcommand("features", "Feature table, fits and plot data");
  inputs(features)->required();

  auto* detect = app.add_subcommand("detect", "Reference comparison and verdicts (exit 1 if any stock is flagged)");
  inputs(detect)->required();
  detect->add_flag("--with-pvalues", o.with_pvalues, "Also bootstrap p-values for the written fits");

  for (auto* sub : {simulate, validate, build, fit, features, detect}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  if (fit->parsed() && o.inputs.empty() && o.samples.empty()) {
    err << "error: fit needs input files or --samples\n";
    return 2;
  }
  if (o.dump_config) {
    out << app.config_to_str(true, true);
    return 0;
  }

  CLI::App* chosen = app.get_subcommands().front();
  Command cmd(o, chosen->get_name(), out, err);
  try {
    int code = 0;
    if (chosen == simulate) code = cmd_simulate(cmd);
    else if (chosen == validate) code = cmd_validate(cmd);
    else if (chosen == build) code = cmd_build(cmd);
    else if (chosen == fit) code = cmd_fit(cmd);
    else if (chosen == features) code = cmd_features(cmd);
    else code = cmd_detect(cmd);
    cmd.write_manifest(options_json(o));
    return code;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace tradenet::cli
