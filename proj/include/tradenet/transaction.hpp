#pragma once

// Transaction records, stock metadata and the seven-column CSV format:
//   date,time,txn_id,buyer_id,seller_id,volume,price
//   2004-01-08,09:30:01,1,B1,S1,500,7.25

#include <algorithm>
#include <charconv>
#include <cmath>
#include <chrono>
#include <cstdint>
#include <istream>
#include <memory>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "tradenet/error.hpp"

namespace tradenet {

using Date = std::chrono::sys_days;
using AccountIndex = std::uint32_t;

// Seconds since midnight.
struct TimeOfDay {
  std::int32_t seconds = 0;
  friend auto operator<=>(const TimeOfDay&, const TimeOfDay&) = default;
};

struct DateInterval {
  Date start;
  Date end;  // inclusive

  bool contains(Date d) const { return start <= d && d <= end; }
  bool well_formed() const { return start <= end; }
  friend bool operator==(const DateInterval&, const DateInterval&) = default;
};

struct TransactionRecord {
  Date date;
  TimeOfDay time;
  std::uint64_t txn_id = 0;
  AccountIndex buyer = 0;
  AccountIndex seller = 0;
  std::uint64_t volume = 0;
  double price = 0.0;

  friend bool operator==(const TransactionRecord&, const TransactionRecord&) = default;
};

inline bool record_order(const TransactionRecord& a, const TransactionRecord& b) {
  return std::tie(a.date, a.time, a.txn_id) < std::tie(b.date, b.time, b.txn_id);
}

struct StockMeta {
  std::string symbol;
  int capitalization_bucket = 0;
  std::string sector;
  bool manipulated = false;
  std::optional<DateInterval> manipulation_period;

  void validate() const {
    if (symbol.empty()) throw ConfigError("stock metadata: empty symbol");
    if (manipulated != manipulation_period.has_value())
      throw ConfigError("stock " + symbol + ": manipulation_period must be present iff manipulated");
    if (manipulation_period && !manipulation_period->well_formed())
      throw ConfigError("stock " + symbol + ": manipulation_period start after end");
  }
  friend bool operator==(const StockMeta&, const StockMeta&) = default;
};

// Opaque account identifiers mapped to dense indices.
using AccountTable = std::vector<std::string>;

// Immutable, sorted transaction sequence of one stock.
class TransactionLog {
 public:
  TransactionLog() : accounts_(std::make_shared<const AccountTable>()) {}

  // Sorts records by (date, time, txn_id); rejects duplicate (date, txn_id)
  // and bounds violations.
  TransactionLog(StockMeta meta, AccountTable accounts, std::vector<TransactionRecord> records)
      : TransactionLog(std::move(meta), std::make_shared<const AccountTable>(std::move(accounts)),
                       std::move(records)) {}

  TransactionLog(StockMeta meta, std::shared_ptr<const AccountTable> accounts,
                 std::vector<TransactionRecord> records)
      : meta_(std::move(meta)), accounts_(std::move(accounts)), records_(std::move(records)) {
    std::stable_sort(records_.begin(), records_.end(), record_order);
    check();
  }

  const StockMeta& meta() const { return meta_; }
  const AccountTable& accounts() const { return *accounts_; }
  const std::shared_ptr<const AccountTable>& shared_accounts() const { return accounts_; }
  std::span<const TransactionRecord> records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  std::uint64_t total_volume() const {
    std::uint64_t v = 0;
    for (const auto& r : records_) v += r.volume;
    return v;
  }

  const std::string& account(AccountIndex i) const { return (*accounts_)[i]; }

  friend bool operator==(const TransactionLog& a, const TransactionLog& b) {
    return a.meta_ == b.meta_ && *a.accounts_ == *b.accounts_ && a.records_ == b.records_;
  }

 private:
  struct SortedTag {};
  TransactionLog(SortedTag, StockMeta meta, std::shared_ptr<const AccountTable> accounts,
                 std::vector<TransactionRecord> records)
      : meta_(std::move(meta)), accounts_(std::move(accounts)), records_(std::move(records)) {}

  friend TransactionLog filter_period(const TransactionLog& log, const DateInterval& interval);

  void check() const {
    for (std::size_t i = 0; i < records_.size(); ++i) {
      const auto& r = records_[i];
      if (r.volume < 1) throw Error("record " + std::to_string(r.txn_id) + ": volume must be >= 1");
      if (!(r.price > 0.0)) throw Error("record " + std::to_string(r.txn_id) + ": price must be > 0");
      if (r.buyer >= accounts_->size() || r.seller >= accounts_->size())
        throw Error("record " + std::to_string(r.txn_id) + ": account index out of range");
    }
    std::unordered_set<std::uint64_t> seen;
    for (std::size_t i = 0; i < records_.size(); ++i) {
      if (i > 0 && records_[i].date != records_[i - 1].date) seen.clear();
      if (!seen.insert(records_[i].txn_id).second)
        throw Error("duplicate txn_id " + std::to_string(records_[i].txn_id) + " on one date");
    }
  }

  StockMeta meta_;
  std::shared_ptr<const AccountTable> accounts_;
  std::vector<TransactionRecord> records_;
};

// Records with date in [start, end], order preserved, meta unchanged.
inline TransactionLog filter_period(const TransactionLog& log, const DateInterval& interval) {
  if (!interval.well_formed()) throw ConfigError("filter_period: interval start after end");
  std::vector<TransactionRecord> kept;
  for (const auto& r : log.records())
    if (interval.contains(r.date)) kept.push_back(r);
  return TransactionLog(TransactionLog::SortedTag{}, log.meta(), log.shared_accounts(), std::move(kept));
}

// ---------------------------------------------------------------------------
// Text formats

namespace detail {

template <typename Int>
bool parse_int(std::string_view s, Int& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

inline bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && p == s.data() + s.size();
}

inline void append_padded(std::string& out, unsigned v, int width) {
  std::string digits = std::to_string(v);
  if (static_cast<int>(digits.size()) < width) out.append(width - digits.size(), '0');
  out += digits;
}

}  // namespace detail

inline std::optional<Date> parse_date(std::string_view s) {
  // YYYY-MM-DD
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
  int y = 0;
  unsigned m = 0, d = 0;
  if (!detail::parse_int(s.substr(0, 4), y) || !detail::parse_int(s.substr(5, 2), m) ||
      !detail::parse_int(s.substr(8, 2), d))
    return std::nullopt;
  const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) return std::nullopt;
  return Date{ymd};
}

inline std::optional<TimeOfDay> parse_time(std::string_view s) {
  // HH:MM:SS
  if (s.size() != 8 || s[2] != ':' || s[5] != ':') return std::nullopt;
  int h = 0, m = 0, sec = 0;
  if (!detail::parse_int(s.substr(0, 2), h) || !detail::parse_int(s.substr(3, 2), m) ||
      !detail::parse_int(s.substr(6, 2), sec))
    return std::nullopt;
  if (h < 0 || h > 23 || m < 0 || m > 59 || sec < 0 || sec > 59) return std::nullopt;
  return TimeOfDay{h * 3600 + m * 60 + sec};
}

inline std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  std::string out;
  detail::append_padded(out, static_cast<unsigned>(static_cast<int>(ymd.year())), 4);
  out += '-';
  detail::append_padded(out, static_cast<unsigned>(ymd.month()), 2);
  out += '-';
  detail::append_padded(out, static_cast<unsigned>(ymd.day()), 2);
  return out;
}

inline std::string format_time(TimeOfDay t) {
  std::string out;
  detail::append_padded(out, static_cast<unsigned>(t.seconds / 3600), 2);
  out += ':';
  detail::append_padded(out, static_cast<unsigned>(t.seconds / 60 % 60), 2);
  out += ':';
  detail::append_padded(out, static_cast<unsigned>(t.seconds % 60), 2);
  return out;
}

// Shortest decimal that round-trips.
inline std::string format_price(double p) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, p);
  return std::string(buf, end);
}

inline constexpr std::string_view kCsvHeader = "date,time,txn_id,buyer_id,seller_id,volume,price";

// Parses the transaction CSV. Account indices are assigned in order of first
// appearance (buyer before seller) over the sorted record sequence, so the
// mapping depends only on the record set.
inline TransactionLog parse_transactions(std::istream& in, StockMeta meta) {
  struct Raw {
    TransactionRecord rec;
    std::string buyer;
    std::string seller;
    std::size_t line;
  };
  std::vector<Raw> raws;
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  std::string_view fields[7];

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!header_seen) {
      std::string_view h = line;
      if (h.size() >= 3 && h.substr(0, 3) == "\xEF\xBB\xBF") h.remove_prefix(3);
      if (h != kCsvHeader) throw ParseError(line_no, "expected header '" + std::string(kCsvHeader) + "'");
      header_seen = true;
      continue;
    }
    if (line.empty()) throw ParseError(line_no, "empty line");

    std::size_t nf = 0;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      if (nf == 7) throw ParseError(line_no, "expected 7 fields, found more");
      fields[nf++] = rest.substr(0, comma);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (nf != 7) throw ParseError(line_no, "expected 7 fields, found " + std::to_string(nf));

    Raw raw;
    raw.line = line_no;
    auto date = parse_date(fields[0]);
    if (!date) throw ParseError(line_no, "unparseable date '" + std::string(fields[0]) + "'");
    auto time = parse_time(fields[1]);
    if (!time) throw ParseError(line_no, "unparseable time '" + std::string(fields[1]) + "'");
    raw.rec.date = *date;
    raw.rec.time = *time;
    if (!detail::parse_int(fields[2], raw.rec.txn_id))
      throw ParseError(line_no, "txn_id is not a non-negative integer: '" + std::string(fields[2]) + "'");
    if (fields[3].empty()) throw ParseError(line_no, "empty buyer_id");
    if (fields[4].empty()) throw ParseError(line_no, "empty seller_id");
    raw.buyer = std::string(fields[3]);
    raw.seller = std::string(fields[4]);
    std::int64_t volume = 0;
    if (!detail::parse_int(fields[5], volume))
      throw ParseError(line_no, "volume is not an integer: '" + std::string(fields[5]) + "'");
    if (volume < 1) throw ParseError(line_no, "volume " + std::to_string(volume) + " violates volume >= 1");
    raw.rec.volume = static_cast<std::uint64_t>(volume);
    if (!detail::parse_double(fields[6], raw.rec.price))
      throw ParseError(line_no, "price is not a number: '" + std::string(fields[6]) + "'");
    if (!(raw.rec.price > 0.0) || !std::isfinite(raw.rec.price))
      throw ParseError(line_no, "price " + std::string(fields[6]) + " violates price > 0");
    raws.push_back(std::move(raw));
  }
  if (!header_seen) throw ParseError(1, "missing header");

  std::stable_sort(raws.begin(), raws.end(),
                   [](const Raw& a, const Raw& b) { return record_order(a.rec, b.rec); });
  {
    std::unordered_map<std::uint64_t, std::size_t> seen;
    for (std::size_t i = 0; i < raws.size(); ++i) {
      if (i > 0 && raws[i].rec.date != raws[i - 1].rec.date) seen.clear();
      auto [it, fresh] = seen.emplace(raws[i].rec.txn_id, raws[i].line);
      if (!fresh)
        throw ParseError(raws[i].line, "duplicate (date, txn_id) " + format_date(raws[i].rec.date) + "," +
                                           std::to_string(raws[i].rec.txn_id) + " (first at line " +
                                           std::to_string(it->second) + ")");
    }
  }

  AccountTable accounts;
  std::unordered_map<std::string, AccountIndex> index;
  auto intern = [&](std::string& id) {
    auto [it, fresh] = index.emplace(id, static_cast<AccountIndex>(accounts.size()));
    if (fresh) accounts.push_back(std::move(id));
    return it->second;
  };
  std::vector<TransactionRecord> records;
  records.reserve(raws.size());
  for (auto& raw : raws) {
    raw.rec.buyer = intern(raw.buyer);
    raw.rec.seller = intern(raw.seller);
    records.push_back(raw.rec);
  }
  return TransactionLog(std::move(meta), std::move(accounts), std::move(records));
}

inline TransactionLog parse_transactions(std::string_view text, StockMeta meta) {
  std::istringstream in{std::string(text)};
  return parse_transactions(in, std::move(meta));
}

inline void write_transactions(std::ostream& out, const TransactionLog& log) {
  out << kCsvHeader << '\n';
  std::string line;
  for (const auto& r : log.records()) {
    line.clear();
    line += format_date(r.date);
    line += ',';
    line += format_time(r.time);
    line += ',';
    line += std::to_string(r.txn_id);
    line += ',';
    line += log.account(r.buyer);
    line += ',';
    line += log.account(r.seller);
    line += ',';
    line += std::to_string(r.volume);
    line += ',';
    line += format_price(r.price);
    line += '\n';
    out << line;
  }
}

inline std::string to_csv(const TransactionLog& log) {
  std::ostringstream out;
  write_transactions(out, log);
  return out.str();
}

// Records are re-indexed so that the account table holds exactly the accounts
// that occur, in first-appearance order (buyer before seller). Parsing yields
// this form, so canonical(log) == parse(to_csv(log)).
inline TransactionLog canonical(const TransactionLog& log) {
  std::vector<AccountIndex> remap(log.accounts().size(), static_cast<AccountIndex>(-1));
  AccountTable accounts;
  std::vector<TransactionRecord> records(log.records().begin(), log.records().end());
  auto intern = [&](AccountIndex i) {
    if (remap[i] == static_cast<AccountIndex>(-1)) {
      remap[i] = static_cast<AccountIndex>(accounts.size());
      accounts.push_back(log.account(i));
    }
    return remap[i];
  };
  for (auto& r : records) {
    r.buyer = intern(r.buyer);
    r.seller = intern(r.seller);
  }
  return TransactionLog(log.meta(), std::move(accounts), std::move(records));
}

}  // namespace tradenet
