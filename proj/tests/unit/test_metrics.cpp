#include <doctest.h>

#include <sstream>

#include "checks.hpp"
#include "protvec/error.hpp"
#include "protvec/metrics.hpp"

using namespace protvec;

TEST_SUITE("metrics") {

TEST_CASE("worked per-sample examples") {
  auto s = score_sample({"a", "b"}, {"a", "c"});
  CHECK(s.precision == 0.5);
  CHECK(s.recall == 0.5);
  CHECK(s.f1 == 0.5);

  s = score_sample({"a"}, {});
  CHECK(s.precision == 0.0);
  CHECK(s.recall == 0.0);
  CHECK(s.f1 == 0.0);

  s = score_sample({"a", "b", "c"}, {"a"});
  CHECK(s.precision == 1.0);
  CHECK(s.recall == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(s.f1 == 0.5);

  s = score_sample({"x", "y"}, {"x", "y"});
  CHECK(s.f1 == 1.0);
  CHECK_THROWS_AS(score_sample({}, {"a"}), InvalidArgument);
}

TEST_CASE("averages over samples") {
  const std::vector<LabelPair> pairs{{{"a", "b"}, {"a", "c"}}, {{"a"}, {}}, {{"a", "b", "c"}, {"a"}}};
  const auto m = compute_metrics(pairs);
  CHECK(m.count == 3);
  CHECK(m.precision == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m.recall == doctest::Approx((0.5 + 0.0 + 1.0 / 3.0) / 3.0).epsilon(1e-15));
  CHECK(m.f1 == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(compute_metrics(std::vector<LabelPair>{}), InvalidArgument);
}

TEST_CASE("random pairs agree with the set-arithmetic oracle") {
  Rng rng(7);
  for (int trial = 0; trial < 5; ++trial) {
    std::vector<std::set<std::string>> truth, predicted;
    checks::random_pairs(rng, 200, truth, predicted);
    std::vector<LabelPair> pairs;
    for (std::size_t i = 0; i < truth.size(); ++i) pairs.push_back({truth[i], predicted[i]});
    const auto m = compute_metrics(pairs);
    const auto o = oracle::example_based(truth, predicted);
    CHECK(std::abs(m.precision - o.p) <= 1e-12);
    CHECK(std::abs(m.recall - o.r) <= 1e-12);
    CHECK(std::abs(m.f1 - o.f) <= 1e-12);

    std::vector<LabelPair> reversed(pairs.rbegin(), pairs.rend());
    const auto r = compute_metrics(reversed);
    CHECK(std::abs(r.f1 - m.f1) <= 1e-12);
  }
}

TEST_CASE("per-sample F1 is the harmonic mean and never exceeds the arithmetic mean") {
  Rng rng(8);
  std::vector<std::set<std::string>> truth, predicted;
  checks::random_pairs(rng, 300, truth, predicted);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const auto s = score_sample(truth[i], predicted[i]);
    if (s.precision + s.recall > 0.0) {
      CHECK(s.f1 == doctest::Approx(2.0 * s.precision * s.recall / (s.precision + s.recall)).epsilon(1e-12));
    } else {
      CHECK(s.f1 == 0.0);
    }
    CHECK(s.f1 <= (s.precision + s.recall) / 2.0 + 1e-15);
    CHECK(s.f1 >= 0.0);
    CHECK(s.f1 <= 1.0);
  }
}

TEST_CASE("length buckets") {
  const std::vector<LabelPair> pairs(6, LabelPair{{"a"}, {"a"}});
  const std::vector<std::size_t> lengths{100, 101, 1600, 1601, 5000, 50};
  const auto b = bucketize(pairs, lengths);
  REQUIRE(b.size() == 9);
  CHECK(b[0].label() == "(0,100]");
  CHECK(b[0].metrics.count == 2);
  CHECK(b[1].label() == "(100,200]");
  CHECK(b[1].metrics.count == 1);
  CHECK(b[7].label() == "(1300,1600]");
  CHECK(b[7].metrics.count == 1);
  CHECK(b[8].label() == "(1600,inf)");
  CHECK_FALSE(b[8].upper.has_value());
  CHECK(b[8].metrics.count == 2);
  CHECK(b[3].metrics.count == 0);
  CHECK(b[3].metrics.f1 == 0.0);

  std::size_t total = 0;
  for (const auto& r : b) total += r.metrics.count;
  CHECK(total == pairs.size());

  const std::vector<std::size_t> bad_edges{200, 100};
  CHECK_THROWS_AS(bucketize(pairs, lengths, bad_edges), InvalidArgument);
  CHECK_THROWS_AS(bucketize(pairs, std::vector<std::size_t>{1, 2}), ShapeError);
}

TEST_CASE("bucket counts always partition the samples") {
  Rng rng(9);
  std::vector<std::set<std::string>> truth, predicted;
  checks::random_pairs(rng, 250, truth, predicted);
  std::vector<LabelPair> pairs;
  std::vector<std::size_t> lengths;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    pairs.push_back({truth[i], predicted[i]});
    lengths.push_back(1 + rng.below(2500));
  }
  const auto r = make_report("x", pairs, lengths);
  std::size_t total = 0;
  double weighted = 0.0;
  for (const auto& b : r.buckets) {
    total += b.metrics.count;
    weighted += static_cast<double>(b.metrics.count) * b.metrics.f1;
  }
  CHECK(total == pairs.size());
  CHECK(weighted / static_cast<double>(total) == doctest::Approx(r.overall.f1).epsilon(1e-12));
}

TEST_CASE("report serializations") {
  const std::vector<LabelPair> pairs{{{"a", "b"}, {"a"}}, {{"c"}, {"c"}}};
  const std::vector<std::size_t> lengths{90, 2000};
  const auto r = make_report("demo", pairs, lengths);
  const Json j = report_to_json(r);
  CHECK(j["name"] == "demo");
  CHECK(j["overall"]["count"] == 2);
  CHECK(j["buckets"].size() == 9);
  CHECK(j["buckets"][8]["upper"].is_null());
  CHECK(j["buckets"][0]["range"] == "(0,100]");

  std::ostringstream table;
  write_report_table(table, r);
  CHECK(table.str().find("demo\n") == 0);
  CHECK(table.str().find("(1600,inf)") != std::string::npos);
  CHECK(table.str().find("0.8333") != std::string::npos);

  std::ostringstream csv;
  write_report_csv(csv, r);
  std::istringstream lines(csv.str());
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) ++n;
  CHECK(n == 11);
  CHECK(csv.str().find("demo,\"all\",0,,2,1.000000,0.750000,0.833333") != std::string::npos);
}

}  // TEST_SUITE
