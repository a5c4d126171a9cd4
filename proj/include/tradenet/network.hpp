#pragma once

// Directed weighted trading network: one node per trader, one merged edge
// seller -> buyer per distinct pair, weighted by the total volume exchanged.

#include <algorithm>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "tradenet/error.hpp"
#include "tradenet/transaction.hpp"

namespace tradenet {

using NodeIndex = std::uint32_t;

struct Edge {
  NodeIndex seller;
  NodeIndex buyer;
  std::uint64_t weight;

  bool self_loop() const { return seller == buyer; }
  friend bool operator==(const Edge&, const Edge&) = default;
};

class TradingNetwork {
 public:
  // Node i corresponds to account nodes()[i]; accounts ascend.
  std::span<const AccountIndex> nodes() const { return nodes_; }
  // Sorted by (seller, buyer); self-loops included.
  std::span<const Edge> edges() const { return edges_; }

  std::size_t node_count() const { return nodes_.size(); }
  // Merged edges between distinct traders.
  std::size_t edge_count() const { return edges_.size() - self_loops_; }
  std::size_t self_loop_count() const { return self_loops_; }
  std::size_t transaction_count() const { return transactions_; }
  std::uint64_t total_volume() const { return volume_; }

  friend bool operator==(const TradingNetwork&, const TradingNetwork&) = default;

 private:
  friend TradingNetwork build_network(std::span<const TransactionRecord>, std::size_t);

  std::vector<AccountIndex> nodes_;
  std::vector<Edge> edges_;
  std::size_t self_loops_ = 0;
  std::size_t transactions_ = 0;
  std::uint64_t volume_ = 0;
};

// Records may be in any order; the result does not depend on it.
inline TradingNetwork build_network(std::span<const TransactionRecord> records, std::size_t account_count) {
  if (records.empty()) throw InsufficientDataError("trading network needs at least one transaction");
  constexpr NodeIndex kUnset = std::numeric_limits<NodeIndex>::max();

  std::vector<NodeIndex> node_of(account_count, kUnset);
  for (const auto& r : records) {
    if (r.buyer >= account_count || r.seller >= account_count)
      throw Error("account index out of range while building network");
    node_of[r.buyer] = 0;
    node_of[r.seller] = 0;
  }
  TradingNetwork net;
  for (std::size_t a = 0; a < account_count; ++a) {
    if (node_of[a] == kUnset) continue;
    node_of[a] = static_cast<NodeIndex>(net.nodes_.size());
    net.nodes_.push_back(static_cast<AccountIndex>(a));
  }

  std::vector<Edge> raw;
  raw.reserve(records.size());
  for (const auto& r : records) {
    raw.push_back({node_of[r.seller], node_of[r.buyer], r.volume});
    net.volume_ += r.volume;
  }
  std::sort(raw.begin(), raw.end(), [](const Edge& a, const Edge& b) {
    return a.seller != b.seller ? a.seller < b.seller : a.buyer < b.buyer;
  });
  for (const auto& e : raw) {
    if (!net.edges_.empty() && net.edges_.back().seller == e.seller && net.edges_.back().buyer == e.buyer) {
      net.edges_.back().weight += e.weight;
    } else {
      net.edges_.push_back(e);
      if (e.self_loop()) ++net.self_loops_;
    }
  }
  net.transactions_ = records.size();
  return net;
}

inline TradingNetwork build_network(const TransactionLog& log) {
  return build_network(log.records(), log.accounts().size());
}

// Distinct out-/in-neighbours per node on the merged graph; self-loops are
// not counted as connections.
struct DegreeSequences {
  std::vector<std::uint64_t> out_deg;
  std::vector<std::uint64_t> in_deg;
  std::vector<std::uint64_t> tot_deg;
};

// Volume sold (out), bought (in) and their sum, self-loops included.
struct StrengthSequences {
  std::vector<std::uint64_t> s_in;
  std::vector<std::uint64_t> s_out;
  std::vector<std::uint64_t> s_tot;
};

inline DegreeSequences degree_sequences(const TradingNetwork& net) {
  const std::size_t n = net.node_count();
  DegreeSequences d{std::vector<std::uint64_t>(n, 0), std::vector<std::uint64_t>(n, 0), {}};
  for (const auto& e : net.edges()) {
    if (e.self_loop()) continue;
    ++d.out_deg[e.seller];
    ++d.in_deg[e.buyer];
  }
  d.tot_deg.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.tot_deg[i] = d.out_deg[i] + d.in_deg[i];
  return d;
}

inline StrengthSequences strength_sequences(const TradingNetwork& net) {
  const std::size_t n = net.node_count();
  StrengthSequences s{std::vector<std::uint64_t>(n, 0), std::vector<std::uint64_t>(n, 0), {}};
  for (const auto& e : net.edges()) {
    s.s_out[e.seller] += e.weight;
    s.s_in[e.buyer] += e.weight;
  }
  s.s_tot.resize(n);
  for (std::size_t i = 0; i < n; ++i) s.s_tot[i] = s.s_in[i] + s.s_out[i];
  return s;
}

// Σ tot_deg / n = 2m / n.
inline double average_degree(const TradingNetwork& net) {
  return 2.0 * static_cast<double>(net.edge_count()) / static_cast<double>(net.node_count());
}

}  // namespace tradenet
