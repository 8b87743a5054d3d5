#include <gtest/gtest.h>

#include <atomic>
#include <random>
#include <set>
#include <sstream>

#include "tridiff/csv.hpp"
#include "tridiff/error.hpp"
#include "tridiff/parallel.hpp"
#include "tridiff/rng.hpp"

using namespace tridiff;

// Known-answer vectors of the Philox4x32-10 reference implementation.
TEST(Philox, KnownAnswers) {
  using rng::Counter;
  using rng::Key;
  EXPECT_EQ(rng::philox4x32_10(Counter{0, 0, 0, 0}, Key{0, 0}),
            (Counter{0x6627e8d5U, 0xe169c58dU, 0xbc57ac4cU, 0x9b00dbd8U}));
  EXPECT_EQ(rng::philox4x32_10(Counter{0xffffffffU, 0xffffffffU, 0xffffffffU, 0xffffffffU},
                               Key{0xffffffffU, 0xffffffffU}),
            (Counter{0x408f276dU, 0x41c83b0eU, 0xa20bc7c6U, 0x6d5451fdU}));
  EXPECT_EQ(rng::philox4x32_10(Counter{0x243f6a88U, 0x85a308d3U, 0x13198a2eU, 0x03707344U},
                               Key{0xa4093822U, 0x299f31d0U}),
            (Counter{0xd16cfe09U, 0x94fdccebU, 0x5001e420U, 0x24126ea1U}));
}

TEST(Philox, StreamsAreReproducibleAndDistinct) {
  rng::Philox a(42, "noise"), b(42, "noise"), c(42, "noise", 1), d(42, "other"), e(43, "noise");
  std::vector<std::uint64_t> va, vb, vc, vd, ve;
  for (int k = 0; k < 16; ++k) {
    va.push_back(a());
    vb.push_back(b());
    vc.push_back(c());
    vd.push_back(d());
    ve.push_back(e());
  }
  EXPECT_EQ(va, vb);
  EXPECT_NE(va, vc);
  EXPECT_NE(va, vd);
  EXPECT_NE(va, ve);
}

TEST(Philox, UniformMoments) {
  rng::Philox gen(7, "moments");
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const double u = gen.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sq += u * u;
  }
  const double mean = sum / n;
  EXPECT_NEAR(mean, 0.5, 4 * std::sqrt(1.0 / 12.0 / n));
  EXPECT_NEAR(sq / n - mean * mean, 1.0 / 12.0, 0.002);
}

TEST(Philox, WorksWithStdDistributions) {
  rng::Philox gen(1, "normal");
  std::normal_distribution<double> z;
  double sum = 0.0;
  for (int k = 0; k < 100000; ++k) sum += z(gen);
  EXPECT_NEAR(sum / 100000, 0.0, 0.02);
}

TEST(DeriveSeed, PathDependent) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t g = 0; g < 10; ++g)
    for (std::uint64_t k = 0; k < 100; ++k) seen.insert(rng::derive_seed(rng::derive_seed(1, "grid", g), "iteration", k));
  EXPECT_EQ(seen.size(), 1000U);
  EXPECT_EQ(rng::derive_seed(5, "x", 3), rng::derive_seed(5, "x", 3));
}

TEST(Csv, SplitsQuotedFields) {
  EXPECT_EQ(csv::split_record("a,b,c"), (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(csv::split_record("\"x,y\",2,\"he said \"\"hi\"\"\""),
            (std::vector<std::string>{"x,y", "2", "he said \"hi\""}));
  EXPECT_EQ(csv::split_record("a,,"), (std::vector<std::string>{"a", "", ""}));
}

TEST(Csv, ParsesNumbers) {
  EXPECT_EQ(csv::parse_real(" 1.5e3 "), 1500.0);
  EXPECT_EQ(csv::parse_real("-0.25"), -0.25);
  EXPECT_FALSE(csv::parse_real("abc"));
  EXPECT_FALSE(csv::parse_real("1.5x"));
  EXPECT_EQ(csv::parse_int("2013"), 2013);
  EXPECT_FALSE(csv::parse_int("2013.5"));
}

TEST(Csv, FormatRoundTrips) {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> z;
  for (int k = 0; k < 1000; ++k) {
    const double v = z(gen) * std::pow(10.0, k % 20 - 10);
    EXPECT_EQ(*csv::parse_real(csv::format_real(v)), v);
  }
}

TEST(Csv, ReadTableChecksFieldCounts) {
  std::istringstream ok("\xEF\xBB\xBFu,v\n1,2\r\n3,4\n\n");
  const auto t = csv::read_table(ok);
  EXPECT_EQ(t.header, (std::vector<std::string>{"u", "v"}));
  ASSERT_EQ(t.rows.size(), 2U);
  EXPECT_EQ(t.rows[1][1], "4");
  std::istringstream bad("u,v\n1,2,3\n");
  EXPECT_THROW(csv::read_table(bad), InputError);
}

TEST(ParallelFor, CoversEveryIndexOnce) {
  for (unsigned threads : {1U, 2U, 4U, 0U}) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), threads, [&](std::size_t i) { ++hits[i]; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
}

TEST(ParallelFor, RethrowsLowestFailingIndex) {
  for (unsigned threads : {1U, 3U}) {
    try {
      parallel_for(100, threads, [](std::size_t i) {
        if (i == 17 || i == 60) throw std::runtime_error(std::to_string(i));
      });
      FAIL() << "expected an exception";
    } catch (const std::runtime_error& e) {
      EXPECT_STREQ(e.what(), "17");
    }
  }
}
