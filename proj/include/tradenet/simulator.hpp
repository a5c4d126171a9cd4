#pragma once

// Seeded synthetic transaction logs for honest and manipulated stocks.
//
// Honest trading: every trader draws annual sell and buy counts from a
// discrete power law, split into bursts (orders). Orders are shuffled into one
// sell and one buy stream, consumed day by day and paired into trades. A
// trade is buyer-initiated when its buy side belongs to a multi-trade burst
// and its sell side does not (seller-initiated symmetrically); the daily log
// price change is volatility·ε + impact·imbalance.
//
// Manipulation (inside the manipulation window): satellite colluders sell to a
// central account, and the colluder group trades in random directed cycles
// (A→B→C→A, same volume along the cycle) until the colluder share of the day's
// trades and of its volume both reach wash_volume_fraction. Price follows volatility·ε + pump and
// ignores the honest imbalance.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <unordered_set>
#include <vector>

#include "tradenet/error.hpp"
#include "tradenet/powerlaw.hpp"
#include "tradenet/rng.hpp"
#include "tradenet/transaction.hpp"

namespace tradenet::sim {

inline Date default_start_date() {
  return Date{std::chrono::year{2004} / std::chrono::January / 2};
}

struct SimConfig {
  std::uint64_t rng_seed = 1;
  std::string symbol = "SIM0000";
  int capitalization_bucket = 0;
  std::string sector = "S0";
  Date start_date = default_start_date();
  std::size_t n_days = 250;
  std::size_t n_traders = 10000;

  // PDF exponent of the per-trader annual trade count (per side).
  double activity_exponent = 2.6;
  // Fraction of traders active on one side only (half buy-only, half sell-only).
  double one_sided_fraction = 0.3;
  // Mean burst (order) length for multi-trade traders.
  double mean_burst = 4.0;
  // Trade volume: discrete power law with this PDF exponent above min_volume.
  double volume_exponent = 2.2;
  std::uint64_t min_volume = 100;

  double base_price = 10.0;
  double volatility = 0.02;
  double imbalance_impact = 0.08;

  bool manipulated = false;
  // Defaults to the whole simulated period when manipulated.
  std::optional<DateInterval> manipulation_period;
  std::size_t n_colluders = 800;
  double wash_volume_fraction = 0.8;
  // Colluder activity weights: Pareto with this PDF exponent.
  double colluder_activity_exponent = 2.5;
  std::size_t max_cycle_length = 8;
  // Satellites selling to the central colluder account each day.
  std::size_t satellites_per_day = 30;
  // Daily log-price drift during manipulation; cycled if shorter than the window.
  std::vector<double> pump_profile;

  void validate() const {
    if (n_days < 1) throw ConfigError("n_days must be >= 1");
    if (n_traders < 2) throw ConfigError("n_traders must be >= 2");
    if (!(activity_exponent > 1.0)) throw ConfigError("activity_exponent must exceed 1");
    if (!(volume_exponent > 1.0)) throw ConfigError("volume_exponent must exceed 1");
    if (!(one_sided_fraction >= 0.0 && one_sided_fraction < 1.0))
      throw ConfigError("one_sided_fraction must lie in [0, 1)");
    if (!(mean_burst >= 1.0)) throw ConfigError("mean_burst must be >= 1");
    if (min_volume < 1) throw ConfigError("min_volume must be >= 1");
    if (!(base_price > 0.0)) throw ConfigError("base_price must be positive");
    if (!(volatility >= 0.0)) throw ConfigError("volatility must be non-negative");
    if (manipulated) {
      if (n_colluders >= n_traders) throw ConfigError("n_colluders must be below n_traders");
      if (n_colluders < 3) throw ConfigError("wash cycles need at least 3 colluders");
      if (!(wash_volume_fraction >= 0.0 && wash_volume_fraction < 1.0))
        throw ConfigError("wash_volume_fraction must lie in [0, 1)");
      if (!(colluder_activity_exponent > 1.0)) throw ConfigError("colluder_activity_exponent must exceed 1");
      if (max_cycle_length < 3) throw ConfigError("max_cycle_length must be >= 3");
      if (satellites_per_day >= n_colluders) throw ConfigError("satellites_per_day must be below n_colluders");
      if (manipulation_period && !manipulation_period->well_formed())
        throw ConfigError("manipulation_period start after end");
    } else if (manipulation_period) {
      throw ConfigError("manipulation_period given for an honest stock");
    }
  }
};

struct SimResult {
  TransactionLog log;
  StockMeta truth;
  std::vector<std::string> colluders;  // empty for honest stocks
};

// Weekdays starting at `start`.
inline std::vector<Date> trading_days(Date start, std::size_t n) {
  std::vector<Date> days;
  for (Date d = start; days.size() < n; d += std::chrono::days{1}) {
    const std::chrono::weekday wd{d};
    if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) days.push_back(d);
  }
  return days;
}

inline std::string account_id(std::size_t i) {
  std::string digits = std::to_string(i);
  return "ACC" + std::string(digits.size() < 7 ? 7 - digits.size() : 0, '0') + digits;
}

namespace detail {

// Seconds since midnight of the k-th of n trades in a 09:30-11:30, 13:00-15:00 session.
inline TimeOfDay session_time(std::size_t k, std::size_t n) {
  constexpr std::int32_t kSession = 4 * 3600;
  const auto offset = static_cast<std::int32_t>((static_cast<std::uint64_t>(k) * kSession) / std::max<std::size_t>(n, 1));
  if (offset < 2 * 3600) return {9 * 3600 + 1800 + offset};
  return {13 * 3600 + offset - 2 * 3600};
}

struct Order {
  AccountIndex trader;
  std::uint32_t size;
};

struct Stub {
  AccountIndex trader;
  bool burst;  // part of a multi-trade order
};

inline std::vector<Stub> expand(std::vector<Order>& orders, Rng& rng) {
  std::shuffle(orders.begin(), orders.end(), rng);
  std::vector<Stub> out;
  for (const auto& o : orders)
    for (std::uint32_t k = 0; k < o.size; ++k) out.push_back({o.trader, o.size > 1});
  return out;
}

inline double round_price(double p) {
  return std::max(0.01, std::round(p * 100.0) / 100.0);
}

}  // namespace detail

inline SimResult simulate(const SimConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.rng_seed);
  const auto days = trading_days(cfg.start_date, cfg.n_days);

  std::optional<DateInterval> window;
  if (cfg.manipulated)
    window = cfg.manipulation_period.value_or(DateInterval{days.front(), days.back()});
  if (window && std::none_of(days.begin(), days.end(), [&](Date d) { return window->contains(d); }))
    throw ConfigError("manipulation_period contains no simulated trading day");

  const std::size_t n_colluders = cfg.manipulated ? cfg.n_colluders : 0;
  const std::size_t n_honest = cfg.n_traders - n_colluders;

  // Honest orders.
  const powerlaw::DiscretePowerLawSampler activity(cfg.activity_exponent, 1);
  const powerlaw::DiscretePowerLawSampler volume(cfg.volume_exponent, cfg.min_volume);
  std::vector<detail::Order> sell_orders, buy_orders;
  std::geometric_distribution<std::uint32_t> burst_extra(1.0 / cfg.mean_burst);
  auto add_orders = [&](std::vector<detail::Order>& orders, AccountIndex trader, std::uint64_t count) {
    while (count > 0) {
      const auto size = static_cast<std::uint32_t>(std::min<std::uint64_t>(count, 1 + burst_extra(rng)));
      orders.push_back({trader, size});
      count -= size;
    }
  };
  for (std::size_t i = 0; i < n_honest; ++i) {
    const double u = uniform_open_closed(rng);
    const bool sells = !(u <= cfg.one_sided_fraction / 2);
    const bool buys = !(u > cfg.one_sided_fraction / 2 && u <= cfg.one_sided_fraction);
    const auto trader = static_cast<AccountIndex>(i);
    if (sells) add_orders(sell_orders, trader, activity(rng));
    if (buys) add_orders(buy_orders, trader, activity(rng));
  }
  auto sells = detail::expand(sell_orders, rng);
  auto buys = detail::expand(buy_orders, rng);
  const std::size_t total = std::min(sells.size(), buys.size());
  sells.resize(total);
  buys.resize(total);

  // Daily trade counts with mild day-to-day variation.
  std::vector<double> day_weight(days.size());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (auto& w : day_weight) w = std::exp(0.3 * normal(rng));
  const double weight_sum = std::accumulate(day_weight.begin(), day_weight.end(), 0.0);
  std::vector<std::size_t> day_count(days.size());
  {
    double acc = 0.0;
    std::size_t assigned = 0;
    for (std::size_t t = 0; t < days.size(); ++t) {
      acc += day_weight[t];
      const auto upto = static_cast<std::size_t>(std::llround(acc / weight_sum * static_cast<double>(total)));
      day_count[t] = upto - assigned;
      assigned = upto;
    }
  }

  // Colluder weights.
  std::vector<double> colluder_weight(n_colluders);
  for (auto& w : colluder_weight)
    w = std::pow(uniform_open_closed(rng), -1.0 / (cfg.colluder_activity_exponent - 1.0));
  std::discrete_distribution<std::size_t> pick_colluder(colluder_weight.begin(), colluder_weight.end());
  const std::size_t central =
      n_colluders == 0 ? 0
                       : static_cast<std::size_t>(std::max_element(colluder_weight.begin(), colluder_weight.end()) -
                                                  colluder_weight.begin());
  auto colluder_account = [&](std::size_t c) { return static_cast<AccountIndex>(n_honest + c); };

  std::vector<TransactionRecord> records;
  records.reserve(total + total / 2);
  double log_price = std::log(cfg.base_price);
  std::size_t cursor = 0;
  std::size_t window_day = 0;

  struct Pending {
    AccountIndex seller, buyer;
    std::uint64_t volume;
  };
  std::vector<Pending> day_trades;

  for (std::size_t t = 0; t < days.size(); ++t) {
    day_trades.clear();
    const std::size_t m = day_count[t];
    std::span<detail::Stub> day_sells(sells.data() + cursor, m);
    std::span<detail::Stub> day_buys(buys.data() + cursor, m);
    cursor += m;
    std::shuffle(day_buys.begin(), day_buys.end(), rng);
    // Avoid honest self-trades by swapping with another buy stub of the day.
    for (std::size_t k = 0; k < m; ++k) {
      if (day_sells[k].trader != day_buys[k].trader) continue;
      for (std::size_t tries = 0; tries < 16 && m > 1; ++tries) {
        const std::size_t j = std::uniform_int_distribution<std::size_t>(0, m - 1)(rng);
        if (day_buys[j].trader != day_sells[k].trader && day_sells[j].trader != day_buys[k].trader) {
          std::swap(day_buys[j], day_buys[k]);
          break;
        }
      }
    }
    long initiated = 0;
    std::size_t honest_trades = 0;
    std::uint64_t honest_volume = 0;
    for (std::size_t k = 0; k < m; ++k) {
      if (day_sells[k].trader == day_buys[k].trader) continue;
      if (day_buys[k].burst && !day_sells[k].burst) ++initiated;
      if (day_sells[k].burst && !day_buys[k].burst) --initiated;
      const std::uint64_t v = volume(rng);
      day_trades.push_back({day_sells[k].trader, day_buys[k].trader, v});
      ++honest_trades;
      honest_volume += v;
    }
    const double imbalance = m > 0 ? static_cast<double>(initiated) / static_cast<double>(m) : 0.0;

    const bool manipulating = window && window->contains(days[t]);
    double drift = cfg.imbalance_impact * imbalance;
    if (manipulating) {
      drift = cfg.pump_profile.empty() ? 0.0 : cfg.pump_profile[window_day % cfg.pump_profile.size()];
      ++window_day;

      // Satellites sell to the central account.
      std::size_t wash_trades = 0;
      std::uint64_t wash_volume = 0;
      std::unordered_set<std::size_t> chosen;
      while (chosen.size() < cfg.satellites_per_day) {
        const std::size_t c = pick_colluder(rng);
        if (c != central) chosen.insert(c);
      }
      std::vector<std::size_t> satellites(chosen.begin(), chosen.end());
      std::sort(satellites.begin(), satellites.end());
      for (std::size_t c : satellites) {
        const std::uint64_t v = volume(rng);
        day_trades.push_back({colluder_account(c), colluder_account(central), v});
        ++wash_trades;
        wash_volume += v;
      }
      // Cycles until the colluder share of the day's trades reaches the target;
      // if the volume share still falls short, every wash volume of the day is
      // scaled up by the same factor.
      const double ratio = cfg.wash_volume_fraction / (1.0 - cfg.wash_volume_fraction);
      const double target_trades = ratio * static_cast<double>(honest_trades);
      const double target_volume = ratio * static_cast<double>(honest_volume);
      std::uniform_int_distribution<std::size_t> cycle_len(3, std::min(cfg.max_cycle_length, n_colluders));
      std::vector<std::size_t> cycle;
      while (static_cast<double>(wash_trades) < target_trades) {
        const std::size_t len = cycle_len(rng);
        cycle.clear();
        while (cycle.size() < len) {
          const std::size_t c = pick_colluder(rng);
          if (std::find(cycle.begin(), cycle.end(), c) == cycle.end()) cycle.push_back(c);
        }
        const std::uint64_t v = volume(rng);
        for (std::size_t k = 0; k < len; ++k) {
          day_trades.push_back({colluder_account(cycle[k]), colluder_account(cycle[(k + 1) % len]), v});
          ++wash_trades;
          wash_volume += v;
        }
      }
      if (static_cast<double>(wash_volume) < target_volume) {
        const double scale = target_volume / static_cast<double>(wash_volume);
        for (std::size_t k = honest_trades; k < day_trades.size(); ++k)
          day_trades[k].volume = static_cast<std::uint64_t>(std::ceil(static_cast<double>(day_trades[k].volume) * scale));
      }
      std::shuffle(day_trades.begin(), day_trades.end(), rng);
    }

    log_price += cfg.volatility * normal(rng) + drift;
    const double day_price = std::exp(log_price);
    for (std::size_t k = 0; k < day_trades.size(); ++k) {
      TransactionRecord r;
      r.date = days[t];
      r.time = detail::session_time(k, day_trades.size());
      r.txn_id = k + 1;
      r.seller = day_trades[k].seller;
      r.buyer = day_trades[k].buyer;
      r.volume = day_trades[k].volume;
      r.price = detail::round_price(day_price * std::exp(0.002 * normal(rng)));
      records.push_back(r);
    }
  }

  AccountTable accounts(cfg.n_traders);
  for (std::size_t i = 0; i < cfg.n_traders; ++i) accounts[i] = account_id(i);

  StockMeta meta{cfg.symbol, cfg.capitalization_bucket, cfg.sector, cfg.manipulated, window};
  SimResult result{canonical(TransactionLog(meta, std::move(accounts), std::move(records))), meta, {}};
  for (std::size_t c = 0; c < n_colluders; ++c) result.colluders.push_back(account_id(n_honest + c));
  return result;
}

}  // namespace tradenet::sim
