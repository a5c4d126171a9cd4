#include <gtest/gtest.h>

#include <map>
#include <random>
#include <string>

#include "tradenet/simulator.hpp"
#include "tradenet/transaction.hpp"

using namespace tradenet;
using namespace std::chrono;

namespace {

StockMeta meta(const std::string& sym = "TST") { return StockMeta{sym, 0, "S0", false, std::nullopt}; }

std::string csv(std::initializer_list<std::string> lines) {
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& l : lines) out += l + "\n";
  return out;
}

Date ymd(int y, unsigned m, unsigned d) { return Date{year{y} / month{m} / day{d}}; }

std::string parse_error(const std::string& text) {
  try {
    parse_transactions(text, meta());
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

// Random log with small account and id pools so that collisions and
// self-trades occur.
TransactionLog random_log(std::uint64_t seed, std::size_t n) {
  std::mt19937_64 rng(seed);
  AccountTable accounts;
  for (int i = 0; i < 12; ++i) accounts.push_back("acct-" + std::to_string(i * 7 % 12));
  accounts[3] = "X";
  std::vector<TransactionRecord> recs;
  std::map<std::pair<int, std::uint64_t>, bool> used;
  while (recs.size() < n) {
    TransactionRecord r;
    const int d = static_cast<int>(rng() % 30);
    r.date = ymd(2004, 1, 1) + days{d};
    r.time = TimeOfDay{static_cast<std::int32_t>(rng() % 86400)};
    r.txn_id = rng() % 200;
    if (!used.emplace(std::pair{d, r.txn_id}, true).second) continue;
    r.buyer = static_cast<AccountIndex>(rng() % 12);
    r.seller = static_cast<AccountIndex>(rng() % 12);
    r.volume = 1 + rng() % 100000;
    r.price = std::uniform_real_distribution<double>(0.001, 500.0)(rng);
    recs.push_back(r);
  }
  return TransactionLog(meta(), accounts, recs);
}

}  // namespace

TEST(Parse, SingleLine) {
  const auto log = parse_transactions(csv({"2004-01-08,09:30:01,1,B1,S1,500,7.25"}), meta());
  ASSERT_EQ(log.size(), 1u);
  const auto& r = log.records()[0];
  EXPECT_EQ(r.date, ymd(2004, 1, 8));
  EXPECT_EQ(r.time.seconds, 9 * 3600 + 30 * 60 + 1);
  EXPECT_EQ(r.txn_id, 1u);
  EXPECT_EQ(log.account(r.buyer), "B1");
  EXPECT_EQ(log.account(r.seller), "S1");
  EXPECT_EQ(r.volume, 500u);
  EXPECT_DOUBLE_EQ(r.price, 7.25);
}

TEST(Parse, ResortsOutOfOrderLines) {
  const auto log = parse_transactions(csv({"2004-01-08,10:00:00,2,B1,S1,5,1",
                                           "2004-01-08,09:00:00,9,B2,S1,5,1",
                                           "2004-01-07,15:00:00,3,B1,S2,5,1",
                                           "2004-01-08,09:00:00,4,B1,S1,5,1"}),
                                      meta());
  std::vector<std::uint64_t> ids;
  for (const auto& r : log.records()) ids.push_back(r.txn_id);
  EXPECT_EQ(ids, (std::vector<std::uint64_t>{3, 4, 9, 2}));
}

TEST(Parse, ZeroVolumeNamesLineAndBound) {
  const auto msg = parse_error(csv({"2004-01-08,09:30:01,1,B1,S1,500,7.25", "2004-01-08,09:30:02,2,B1,S1,0,7.25"}));
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("volume >= 1"), std::string::npos) << msg;
}

TEST(Parse, MalformedLines) {
  struct Case {
    std::string line;
    std::string fragment;
  };
  const std::vector<Case> cases = {
      {"2004-01-08,09:30:01,1,B1,S1,500", "expected 7 fields, found 6"},
      {"2004-01-08,09:30:01,1,B1,S1,500,7,9", "found more"},
      {"2004-02-30,09:30:01,1,B1,S1,500,7", "unparseable date"},
      {"2004-01-08,25:30:01,1,B1,S1,500,7", "unparseable time"},
      {"2004-01-08,09:30:01,-1,B1,S1,500,7", "txn_id"},
      {"2004-01-08,09:30:01,1,,S1,500,7", "empty buyer_id"},
      {"2004-01-08,09:30:01,1,B1,,500,7", "empty seller_id"},
      {"2004-01-08,09:30:01,1,B1,S1,5x,7", "volume is not an integer"},
      {"2004-01-08,09:30:01,1,B1,S1,-4,7", "volume -4 violates"},
      {"2004-01-08,09:30:01,1,B1,S1,5,abc", "price is not a number"},
      {"2004-01-08,09:30:01,1,B1,S1,5,0", "price 0 violates price > 0"},
      {"2004-01-08,09:30:01,1,B1,S1,5,-2.5", "violates price > 0"},
      {"", "empty line"},
  };
  for (const auto& c : cases) {
    const auto msg = parse_error(csv({"2004-01-08,09:00:00,7,B,S,1,1", c.line}));
    EXPECT_NE(msg.find("line 3: "), std::string::npos) << c.line << " -> " << msg;
    EXPECT_NE(msg.find(c.fragment), std::string::npos) << c.line << " -> " << msg;
  }
}

TEST(Parse, DuplicateDateAndId) {
  const auto msg = parse_error(csv({"2004-01-08,09:00:00,7,B,S,1,1", "2004-01-09,09:00:00,7,B,S,1,1",
                                    "2004-01-08,11:00:00,7,B,S,1,1"}));
  EXPECT_NE(msg.find("line 4"), std::string::npos) << msg;
  EXPECT_NE(msg.find("first at line 2"), std::string::npos) << msg;
}

TEST(Parse, HeaderHandling) {
  EXPECT_NE(parse_error("").find("missing header"), std::string::npos);
  EXPECT_NE(parse_error("date,time\n").find("expected header"), std::string::npos);
  const std::string bom_crlf = "\xEF\xBB\xBF" + std::string(kCsvHeader) + "\r\n2004-01-08,09:30:01,1,B1,S1,500,7.25\r\n";
  const auto log = parse_transactions(bom_crlf, meta());
  ASSERT_EQ(log.size(), 1u);
  EXPECT_EQ(log.account(log.records()[0].seller), "S1");
  EXPECT_EQ(parse_transactions(csv({}), meta()).size(), 0u);
}

TEST(Parse, SelfTradesAndInterning) {
  const auto log = parse_transactions(csv({"2004-01-08,09:00:00,1,A,A,10,1", "2004-01-08,09:00:01,2,B,A,10,1",
                                           "2004-01-08,09:00:02,3,A,C,10,1"}),
                                      meta());
  EXPECT_EQ(log.accounts(), (AccountTable{"A", "B", "C"}));
  EXPECT_EQ(log.records()[0].buyer, log.records()[0].seller);
}

TEST(Parse, CountMatchesDataLines) {
  const auto log = random_log(5, 500);
  EXPECT_EQ(parse_transactions(to_csv(log), meta()).size(), 500u);
}

TEST(Log, ConstructorRejectsBadRecords) {
  TransactionRecord r{ymd(2004, 1, 2), {}, 1, 0, 1, 10, 1.0};
  EXPECT_NO_THROW(TransactionLog(meta(), AccountTable{"a", "b"}, {r}));
  auto bad = r;
  bad.volume = 0;
  EXPECT_THROW(TransactionLog(meta(), AccountTable{"a", "b"}, {bad}), Error);
  bad = r;
  bad.price = 0.0;
  EXPECT_THROW(TransactionLog(meta(), AccountTable{"a", "b"}, {bad}), Error);
  bad = r;
  bad.buyer = 5;
  EXPECT_THROW(TransactionLog(meta(), AccountTable{"a", "b"}, {bad}), Error);
  EXPECT_THROW(TransactionLog(meta(), AccountTable{"a", "b"}, {r, r}), Error);
}

TEST(Log, MetaValidation) {
  StockMeta m = meta();
  EXPECT_NO_THROW(m.validate());
  m.manipulated = true;
  EXPECT_THROW(m.validate(), ConfigError);
  m.manipulation_period = DateInterval{ymd(2004, 2, 1), ymd(2004, 1, 1)};
  EXPECT_THROW(m.validate(), ConfigError);
  m.manipulation_period = DateInterval{ymd(2004, 1, 1), ymd(2004, 2, 1)};
  EXPECT_NO_THROW(m.validate());
  m.symbol.clear();
  EXPECT_THROW(m.validate(), ConfigError);
}

TEST(RoundTrip, RandomLogs) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto log = random_log(seed, 300);
    const auto back = parse_transactions(to_csv(log), log.meta());
    EXPECT_EQ(back, canonical(log)) << "seed " << seed;
    EXPECT_EQ(to_csv(back), to_csv(log));
  }
}

TEST(RoundTrip, SimulatedLog) {
  sim::SimConfig cfg;
  cfg.n_traders = 500;
  cfg.n_days = 20;
  cfg.rng_seed = 4;
  const auto log = sim::simulate(cfg).log;
  const auto back = parse_transactions(to_csv(log), log.meta());
  EXPECT_EQ(back, canonical(log));
  EXPECT_EQ(parse_transactions(to_csv(back), log.meta()), back);
}

TEST(Format, PriceRoundTrips) {
  std::mt19937_64 rng(8);
  for (int i = 0; i < 2000; ++i) {
    const double p = std::exp(std::uniform_real_distribution<double>(-10, 10)(rng));
    double back = 0;
    ASSERT_TRUE(detail::parse_double(format_price(p), back));
    EXPECT_EQ(back, p);
  }
  EXPECT_EQ(format_price(7.25), "7.25");
  EXPECT_EQ(format_price(10.0), "10");
}

TEST(Format, DatesAndTimes) {
  EXPECT_EQ(format_date(ymd(2004, 1, 8)), "2004-01-08");
  EXPECT_EQ(format_time(TimeOfDay{9 * 3600 + 5}), "09:00:05");
  EXPECT_FALSE(parse_date("2004-1-8"));
  EXPECT_FALSE(parse_time("09:60:00"));
  EXPECT_TRUE(parse_date("2004-02-29"));
  EXPECT_FALSE(parse_date("2003-02-29"));
}

TEST(FilterPeriod, IdentityAndEmpty) {
  const auto log = random_log(3, 400);
  EXPECT_EQ(filter_period(log, {ymd(2004, 1, 1), ymd(2004, 1, 30)}), log);
  const auto none = filter_period(log, {ymd(2005, 1, 1), ymd(2005, 2, 1)});
  EXPECT_TRUE(none.empty());
  EXPECT_EQ(none.meta(), log.meta());
  EXPECT_THROW(filter_period(log, {ymd(2004, 2, 1), ymd(2004, 1, 1)}), ConfigError);
}

TEST(FilterPeriod, WindowCountMatchesLinearScan) {
  sim::SimConfig cfg;
  cfg.n_traders = 600;
  cfg.n_days = 250;
  cfg.rng_seed = 9;
  const auto log = sim::simulate(cfg).log;
  const DateInterval jan_sep{ymd(2004, 1, 1), ymd(2004, 9, 30)};
  std::size_t want = 0;
  for (const auto& r : log.records()) {
    const year_month_day d{r.date};
    if (d.year() == year{2004} && d.month() <= September) ++want;
  }
  const auto got = filter_period(log, jan_sep);
  EXPECT_EQ(got.size(), want);
  EXPECT_GT(want, 0u);
  EXPECT_LT(want, log.size());
}

TEST(FilterPeriod, ComplementaryWindowsPartition) {
  const auto log = random_log(11, 600);
  for (int split = 0; split < 31; split += 5) {
    const Date cut = ymd(2004, 1, 1) + days{split};
    const auto a = filter_period(log, {ymd(2003, 12, 1), cut});
    const auto b = filter_period(log, {cut + days{1}, ymd(2004, 3, 1)});
    EXPECT_EQ(a.size() + b.size(), log.size());
    std::vector<TransactionRecord> joined(a.records().begin(), a.records().end());
    joined.insert(joined.end(), b.records().begin(), b.records().end());
    EXPECT_TRUE(std::equal(joined.begin(), joined.end(), log.records().begin(), log.records().end()));
  }
}
