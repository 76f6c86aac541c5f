#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <sstream>

#include "hlf/dataset.hpp"
#include "test_support.hpp"

using namespace hlf;
using Catch::Approx;

namespace {

struct Counts {
  std::size_t train, val, test;
};

Counts counts_for(std::size_t rows, SplitMode mode, std::size_t L, std::size_t H) {
  const auto r = split(rows, SplitSpec{mode, {0.7, 0.1, 0.2}, L, H});
  return {window_count(r.train.size(), L, H), window_count(r.val.size(), L, H),
          window_count(r.test.size(), L, H)};
}

}  // namespace

TEST_CASE("parse a small numeric CSV", "[dataset][csv]") {
  std::istringstream in("a,b\n1,2\n3,4.5\n-1,1e-3\n");
  const auto s = parse_csv(in);
  REQUIRE(s.length() == 3);
  REQUIRE(s.channels() == 2);
  CHECK(s.channel_names == std::vector<std::string>{"a", "b"});
  CHECK(s.values(1, 1) == 4.5);
  CHECK(s.values(2, 1) == 1e-3);
  CHECK(s.timestamps.empty());
}

TEST_CASE("leading date column is excluded from the channels", "[dataset][csv]") {
  std::istringstream in("date,HUFL,OT\n2016-07-01 00:00:00,5.8,30.5\n2016-07-01 01:00:00,5.6,27.7\n");
  const auto s = parse_csv(in);
  CHECK(s.channels() == 2);
  CHECK(s.channel_names.front() == "HUFL");
  CHECK(s.timestamps.at(1) == "2016-07-01 01:00:00");

  std::istringstream named("x,when,y\n1,mon,2\n3,tue,5\n");
  const auto t = parse_csv(named, CsvOptions{"when", true});
  CHECK(t.channel_names == std::vector<std::string>{"x", "y"});
  CHECK(t.values(1, 1) == 5.0);
}

TEST_CASE("CSV errors", "[dataset][csv][errors]") {
  SECTION("unparseable cell names row and column") {
    std::istringstream in("a,b\n1,2\n3,abc\n");
    try {
      parse_csv(in);
      FAIL("expected InvalidData");
    } catch (const InvalidData& e) {
      const std::string msg = e.what();
      CHECK(msg.find("abc") != std::string::npos);
      CHECK(msg.find("row 2") != std::string::npos);
      CHECK(msg.find("'b'") != std::string::npos);
    }
  }
  SECTION("missing file") { CHECK_THROWS_AS(load_csv("/nonexistent/x.csv"), LoadError); }
  SECTION("zero-variance channel") {
    std::istringstream in("a,b\n1,2\n1,3\n");
    CHECK_THROWS_WITH(parse_csv(in), Catch::Matchers::ContainsSubstring("'a'"));
  }
  SECTION("constant channels allowed when asked") {
    std::istringstream in("a\n1\n1\n");
    CHECK(parse_csv(in, CsvOptions{{}, false}).length() == 2);
  }
  SECTION("too few rows") {
    std::istringstream in("a\n1\n");
    CHECK_THROWS_AS(parse_csv(in), InvalidData);
  }
  SECTION("ragged row") {
    std::istringstream in("a,b\n1,2\n3\n");
    CHECK_THROWS_AS(parse_csv(in), InvalidData);
  }
}

TEST_CASE("write_csv output reads back exactly", "[dataset][csv]") {
  std::mt19937_64 rng(5);
  auto s = make_series(testing::random_matrix(20, 3, rng));
  std::stringstream buf;
  write_csv(buf, s);
  const auto back = parse_csv(buf);
  CHECK(back.values == s.values);
  CHECK(back.channel_names == s.channel_names);
}

TEST_CASE("benchmark split window counts", "[dataset][split]") {
  // Row counts of the public ETTh*, ETTm*, weather, electricity, exchange_rate
  // and national_illness files; expected counts are the published
  // (train, validation, test) window counts.
  struct Row {
    std::size_t rows;
    SplitMode mode;
    std::size_t L, H;
    Counts expect;
  };
  const Row rows[] = {
      {17420, SplitMode::ett_hourly, 96, 96, {8449, 2785, 2785}},
      {17420, SplitMode::ett_hourly, 96, 192, {8353, 2689, 2689}},
      {17420, SplitMode::ett_hourly, 96, 336, {8209, 2545, 2545}},
      {17420, SplitMode::ett_hourly, 96, 720, {7825, 2161, 2161}},
      {69680, SplitMode::ett_minute, 96, 96, {34369, 11425, 11425}},
      {69680, SplitMode::ett_minute, 96, 192, {34273, 11329, 11329}},
      {69680, SplitMode::ett_minute, 96, 336, {34129, 11185, 11185}},
      {69680, SplitMode::ett_minute, 96, 720, {33745, 10801, 10801}},
      {52696, SplitMode::ratio, 96, 96, {36696, 5175, 10444}},
      {52696, SplitMode::ratio, 96, 192, {36600, 5079, 10348}},
      {52696, SplitMode::ratio, 96, 336, {36456, 4935, 10204}},
      {52696, SplitMode::ratio, 96, 720, {36072, 4551, 9820}},
      {26304, SplitMode::ratio, 96, 96, {18221, 2537, 5165}},
      {26304, SplitMode::ratio, 96, 720, {17597, 1913, 4541}},
      {7588, SplitMode::ratio, 96, 96, {5120, 665, 1422}},
      {7588, SplitMode::ratio, 96, 720, {4496, 41, 798}},
      {966, SplitMode::ratio, 104, 24, {549, 74, 170}},
      {966, SplitMode::ratio, 104, 60, {513, 38, 134}},
  };
  for (const auto& r : rows) {
    CAPTURE(r.rows, r.H);
    const auto c = counts_for(r.rows, r.mode, r.L, r.H);
    CHECK(c.train == r.expect.train);
    CHECK(c.val == r.expect.val);
    CHECK(c.test == r.expect.test);
  }
}

TEST_CASE("split boundaries", "[dataset][split]") {
  const auto r = split(17420, SplitSpec{SplitMode::ett_hourly, {}, 96, 96});
  CHECK(r.train == RowRange{0, 8640});
  CHECK(r.val == RowRange{8640 - 96, 11520});
  CHECK(r.test == RowRange{11520 - 96, 14400});
  const auto m = split(69680, SplitSpec{SplitMode::ett_minute, {}, 96, 96});
  CHECK(m.train.end == 34560);
  CHECK(m.test.end == 57600);
}

TEST_CASE("split errors", "[dataset][split][errors]") {
  CHECK_THROWS_AS(split(10000, SplitSpec{SplitMode::ett_hourly, {}, 96, 96}), ConfigError);
  CHECK_THROWS_AS(split(300, SplitSpec{SplitMode::ratio, {0.7, 0.1, 0.2}, 96, 96}), ConfigError);
  CHECK_THROWS_AS(split(3000, SplitSpec{SplitMode::ratio, {0.7, 0.2, 0.2}, 96, 96}), ConfigError);
  CHECK_THROWS_AS(split(3000, SplitSpec{SplitMode::ratio, {0.7, 0.1, 0.2}, 0, 96}), ConfigError);
}

TEST_CASE("window count formula holds for every segment", "[dataset][split][property]") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<std::size_t> len(1300, 5000), lh(1, 60);
  for (int trial = 0; trial < 200; ++trial) {
    const auto T = len(rng), L = lh(rng), H = lh(rng);
    const auto r = split(T, SplitSpec{SplitMode::ratio, {0.7, 0.1, 0.2}, L, H});
    for (const auto& seg : {r.train, r.val, r.test}) {
      CHECK(window_count(seg.size(), L, H) == seg.size() - L - H + 1);
    }
  }
}

TEST_CASE("standardizer statistics", "[dataset][standardize]") {
  SECTION("population std by hand") {
    const auto s = make_series(Matrix(3, 1, {1, 2, 3}));
    const auto st = fit_standardizer(s, {0, 3});
    CHECK(st.mean[0] == Approx(2.0).margin(1e-15));
    CHECK(st.std_dev[0] == Approx(std::sqrt(2.0 / 3.0)).margin(1e-15));
  }
  SECTION("alternating +-1 channel") {
    Matrix m(6, 2);
    for (std::size_t t = 0; t < 6; ++t) {
      m(t, 0) = static_cast<double>(t);
      m(t, 1) = t % 2 ? -1.0 : 1.0;
    }
    const auto st = fit_standardizer(make_series(std::move(m)), {0, 6});
    CHECK(st.mean[1] == 0.0);
    CHECK(st.std_dev[1] == 1.0);
  }
  SECTION("standardized training rows have mean 0, std 1") {
    std::mt19937_64 rng(2);
    auto raw = make_series(testing::random_matrix(500, 4, rng, 7.0));
    for (double& v : raw.values.data()) v += 3.0;
    const auto st = fit_standardizer(raw, {0, 350});
    const auto z = standardize(raw, st);
    const auto again = fit_standardizer(z, {0, 350});
    for (std::size_t c = 0; c < 4; ++c) {
      CHECK(std::abs(again.mean[c]) < 1e-9);
      CHECK(std::abs(again.std_dev[c] - 1.0) < 1e-9);
    }
  }
  SECTION("zero variance names the channel") {
    TimeSeries s = make_series(Matrix(4, 2, {1, 5, 2, 5, 3, 5, 4, 6}), {"x", "flat"});
    CHECK_THROWS_WITH(fit_standardizer(s, {0, 3}), Catch::Matchers::ContainsSubstring("flat"));
  }
  SECTION("only training rows influence the statistics") {
    std::mt19937_64 rng(4);
    auto raw = make_series(testing::random_matrix(100, 2, rng));
    const auto before = fit_standardizer(raw, {0, 70});
    for (std::size_t t = 70; t < 100; ++t) raw.values(t, 0) = 1e6;
    const auto after = fit_standardizer(raw, {0, 70});
    CHECK(before.mean == after.mean);
    CHECK(before.std_dev == after.std_dev);
  }
}

TEST_CASE("window extraction", "[dataset][windows]") {
  std::mt19937_64 rng(21);
  const auto series = make_series(testing::random_matrix(120, 3, rng));

  SECTION("segment of exactly L + H rows gives one window") {
    const auto b = make_windows(series, {10, 10 + 24 + 12}, 24, 12, 5);
    CHECK(b.size() == 1);
    CHECK(b.inputs(0, 0, 2) == series.values(10, 2));
    CHECK(b.targets(0, 0, 1) == series.values(34, 1));
    CHECK(b.targets(0, 11, 0) == series.values(45, 0));
  }
  SECTION("window alignment and target decomposition") {
    const WindowSet set(series, {0, 120}, 16, 8, 5);
    CHECK(set.size() == 120 - 16 - 8 + 1);
    const auto b = set.all();
    Tensor3 s, t;
    testing::brute_force_decompose(b.targets, 5, s, t);
    for (std::size_t i = 0; i < b.size(); ++i) {
      for (std::size_t h = 0; h < 8; ++h) {
        for (std::size_t c = 0; c < 3; ++c) {
          REQUIRE(b.targets(i, h, c) == series.values(i + 16 + h, c));
          REQUIRE(std::abs(b.targets_seasonal(i, h, c) + b.targets_trend(i, h, c) -
                           b.targets(i, h, c)) < 1e-9);
          REQUIRE(std::abs(b.targets_trend(i, h, c) - t(i, h, c)) < 1e-12);
        }
      }
    }
  }
  SECTION("full-series target decomposition slices one decomposition") {
    const WindowSet set(series, {0, 120}, 16, 8, 5, TargetDecomposition::full_series);
    const auto full = moving_average_decompose(series, 5);
    const auto b = set.range(3, 2);
    CHECK(b.targets_trend(1, 2, 1) == full.trend(4 + 16 + 2, 1));
    CHECK(std::abs(b.targets_seasonal(0, 0, 0) + b.targets_trend(0, 0, 0) - b.targets(0, 0, 0)) <
          1e-9);
  }
  SECTION("shuffled index batches pick the right windows") {
    const WindowSet set(series, {0, 120}, 16, 8, 5);
    const std::vector<std::size_t> idx{7, 0, 42};
    const auto b = set.batch(idx);
    CHECK(b.inputs(2, 3, 1) == series.values(45, 1));
    CHECK_THROWS_AS(set.batch(std::vector<std::size_t>{1000}), InvalidArgument);
  }
  SECTION("segment shorter than L + H") {
    CHECK_THROWS_AS(make_windows(series, {0, 30}, 24, 12, 5), ConfigError);
  }
}
