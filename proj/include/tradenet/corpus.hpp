#pragma once

// A universe of simulated stocks laid out on a (capitalization bucket, sector)
// grid, each stock seeded from the master seed and its position.

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "tradenet/error.hpp"
#include "tradenet/parallel.hpp"
#include "tradenet/rng.hpp"
#include "tradenet/simulator.hpp"

namespace tradenet::sim {

struct CorpusCell {
  int capitalization_bucket = 0;
  std::string sector = "S0";
  std::size_t honest = 0;
  std::size_t manipulated = 0;  // manipulated over the whole period
  std::size_t partial = 0;      // manipulated over the leading part of the period
};

struct CorpusSpec {
  std::uint64_t master_seed = 1;
  std::vector<CorpusCell> cells;
  // Template for every stock; symbol, bucket, sector, seed and the
  // manipulation fields are overwritten per stock.
  SimConfig base;
  // Manipulated stocks have fewer traders than honest ones.
  std::size_t manipulated_traders = 3500;
  // Share of trading days, from the start, covered by a partial manipulation.
  double partial_fraction = 0.7;

  void validate() const {
    if (!(partial_fraction > 0.0 && partial_fraction <= 1.0)) throw ConfigError("partial_fraction must lie in (0, 1]");
    std::size_t manipulated = 0;
    for (const auto& c : cells) manipulated += c.manipulated + c.partial;
    if (manipulated > 0 && base.n_colluders >= manipulated_traders)
      throw ConfigError("manipulated_traders must exceed n_colluders");
  }
};

// Spreads the counts round-robin over a buckets x sectors grid, shrunk so that
// every cell receives at least one honest stock whenever there is one.
inline std::vector<CorpusCell> grid_cells(std::size_t honest, std::size_t manipulated, std::size_t partial,
                                          int buckets = 2, int sectors = 2) {
  if (buckets < 1 || sectors < 1) throw ConfigError("grid needs at least one bucket and one sector");
  std::size_t n = static_cast<std::size_t>(buckets) * static_cast<std::size_t>(sectors);
  if (honest > 0) n = std::min(n, honest);
  std::vector<CorpusCell> cells(n);
  for (std::size_t i = 0; i < n; ++i) {
    cells[i].capitalization_bucket = static_cast<int>(i) / sectors;
    cells[i].sector = "S" + std::to_string(i % static_cast<std::size_t>(sectors));
  }
  for (std::size_t k = 0; k < honest; ++k) ++cells[k % n].honest;
  for (std::size_t k = 0; k < manipulated; ++k) ++cells[k % n].manipulated;
  for (std::size_t k = 0; k < partial; ++k) ++cells[(manipulated + k) % n].partial;
  return cells;
}

inline std::string corpus_symbol(std::size_t i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "SIM%04zu", i);
  return buf;
}

// Per-stock configurations in corpus order (cells in order; honest, then
// manipulated, then partial within a cell).
inline std::vector<SimConfig> corpus_configs(const CorpusSpec& spec) {
  spec.validate();
  const auto days = trading_days(spec.base.start_date, spec.base.n_days);
  const std::size_t partial_days =
      std::max<std::size_t>(1, static_cast<std::size_t>(spec.partial_fraction * static_cast<double>(days.size())));
  std::vector<SimConfig> out;
  for (const auto& cell : spec.cells) {
    auto add = [&](bool manipulated, bool partial) {
      SimConfig c = spec.base;
      c.symbol = corpus_symbol(out.size());
      c.rng_seed = derive_seed(spec.master_seed, out.size());
      c.capitalization_bucket = cell.capitalization_bucket;
      c.sector = cell.sector;
      c.manipulated = manipulated;
      c.manipulation_period.reset();
      if (manipulated) {
        c.n_traders = spec.manipulated_traders;
        c.manipulation_period = partial ? DateInterval{days.front(), days[partial_days - 1]}
                                        : DateInterval{days.front(), days.back()};
      }
      out.push_back(std::move(c));
    };
    for (std::size_t k = 0; k < cell.honest; ++k) add(false, false);
    for (std::size_t k = 0; k < cell.manipulated; ++k) add(true, false);
    for (std::size_t k = 0; k < cell.partial; ++k) add(true, true);
  }
  return out;
}

inline std::vector<SimResult> generate_corpus(const CorpusSpec& spec, unsigned jobs = 1) {
  const auto configs = corpus_configs(spec);
  std::vector<SimResult> out(configs.size());
  parallel_for(configs.size(), jobs, [&](std::size_t i) { out[i] = simulate(configs[i]); });
  return out;
}

}  // namespace tradenet::sim
