#include <doctest.h>

#include <cmath>

#include "checks.hpp"
#include "models.hpp"
#include "protvec/error.hpp"
#include "protvec/heads.hpp"

using namespace protvec;

namespace {

std::vector<double> scores(std::initializer_list<double> v) { return v; }

}  // namespace

TEST_SUITE("heads") {

TEST_CASE("separable scores cut at the widest gap") {
  const auto x = scores({0.8, 0.9, 0.1, 0.2});
  const std::vector<bool> y{true, true, false, false};
  const auto r = train_threshold(x, y);
  CHECK(r.direction == Direction::kAbove);
  CHECK(r.threshold == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(r.margin == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(hinge_loss(r, x, y) <= 1e-12);

  const auto below = train_threshold(x, {false, false, true, true});
  CHECK(below.direction == Direction::kBelow);
  CHECK(below.threshold == doctest::Approx(0.5));
  CHECK_FALSE(below(0.5));
  CHECK(below(0.2));
}

TEST_CASE("degenerate inputs") {
  const auto same = scores({0.4, 0.4, 0.4});
  const auto maj = train_threshold(same, {true, true, false});
  CHECK(maj.threshold == 0.4);
  CHECK(maj.direction == Direction::kAbove);
  CHECK(maj(0.4));
  const auto minority = train_threshold(same, {true, false, false});
  CHECK(minority.direction == Direction::kBelow);
  CHECK_FALSE(minority(0.4));

  const auto all_pos = train_threshold(scores({0.2, 0.7}), {true, true});
  CHECK(all_pos(0.2));
  CHECK(all_pos(0.0));
  CHECK_THROWS_AS(train_threshold(scores({0.2, 0.7}), {false, false}), InvalidArgument);
  CHECK_THROWS_AS(train_threshold(scores({0.2}), {true, false}), ShapeError);
}

TEST_CASE("interleaved scores match the exhaustive scan and ties go low") {
  const auto x = scores({0.1, 0.2, 0.3, 0.4, 0.5, 0.6});
  const std::vector<bool> y{false, true, false, true, false, true};
  const auto r = train_threshold(x, y);
  const auto best = oracle::threshold_scan(x, y, kDefaultHingeScale);
  CHECK(hinge_loss(r, x, y) == doctest::Approx(best.loss).epsilon(1e-12));
  CHECK(r.threshold <= best.threshold + 1e-15);
}

TEST_CASE("candidate thresholds") {
  const auto c = candidate_thresholds(scores({0.5, 0.2, 0.5, 0.9}));
  const std::vector<double> want{0.0, 0.35, 0.7, 1.0};
  REQUIRE(c.size() == want.size());
  for (std::size_t k = 0; k < c.size(); ++k) CHECK(c[k] == doctest::Approx(want[k]).epsilon(1e-15));
  const auto wide = candidate_thresholds(scores({-0.5, 1.5}));
  CHECK(wide.front() == -0.5);
  CHECK(wide.back() == 1.5);
}

TEST_CASE("learned thresholds are optimal against the exhaustive scan") {
  Rng rng(1);
  int separable = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto t = checks::random_threshold_instance(rng);
    const auto d = checks::compare_threshold(t);
    if (d.separable) {
      ++separable;
      CHECK(d.perfect);
      CHECK(d.learned <= 1e-9);
    } else {
      CHECK(std::abs(d.learned - d.oracle) <= 1e-9 * (1.0 + d.oracle));
    }
  }
  CHECK(separable > 5);
  CHECK(separable < 195);
}

TEST_CASE("threshold bank runs per term and names the failing term") {
  nn::Matrix s(2, 4), y(2, 4);
  s << 0.9, 0.8, 0.1, 0.2, 0.3, 0.6, 0.4, 0.7;
  y << 1, 1, 0, 0, 0, 1, 0, 1;
  const auto bank = train_go_thresholds(s, y, kDefaultHingeScale, 2);
  REQUIRE(bank.rules.size() == 2);
  const auto decided = bank.apply(s.col(1));
  CHECK(decided == std::vector<bool>{true, true});
  nn::Matrix none = y;
  none.row(1).setZero();
  const std::vector<std::string> names{"GO:0000001", "GO:0000042"};
  CHECK_THROWS_WITH_AS(train_go_thresholds(s, none, kDefaultHingeScale, 1, names), doctest::Contains("GO:0000042"),
                       DataError);
  CHECK_THROWS_AS(bank.apply(nn::Vector::Zero(3)), ShapeError);
}

TEST_CASE("alpha arithmetic") {
  CHECK(compute_alpha(54.65, 49.27) == doctest::Approx(54.65 / 103.92).epsilon(1e-15));
  CHECK(std::abs(compute_alpha(54.65, 49.27) - 0.5259) <= 5e-4);
  CHECK(compute_alpha(0.3, 0.3) == 0.5);
  CHECK(compute_alpha(0.4, 0.0) == 1.0);
  CHECK(compute_alpha(0.5465, 0.4927) == doctest::Approx(compute_alpha(54.65, 49.27)).epsilon(1e-14));
  CHECK_THROWS_WITH_AS(compute_alpha(0.0, 0.0), doctest::Contains("undefined trade-off"), InvalidArgument);
}

TEST_CASE("hybrid combination") {
  nn::Vector z1(2), z2(2);
  z1 << 0.9, 0.1;
  z2 << 0.5, 0.5;
  const nn::Vector z = hybrid_combine(z1, z2, 0.5259);
  CHECK(z(0) == doctest::Approx(0.7104).epsilon(1e-4));
  CHECK(z(1) == doctest::Approx(0.2896).epsilon(1e-4));
  CHECK(hybrid_combine(z1, z2, 1.0) == z1);
  CHECK(hybrid_combine(z1, z2, 0.5) == (z1 + z2) / 2.0);
  CHECK_THROWS_AS(hybrid_combine(z1, nn::Vector::Zero(3), 0.5), ShapeError);

  Rng rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    nn::Vector a(4), b(4);
    for (int k = 0; k < 4; ++k) {
      a(k) = rng.uniform();
      b(k) = rng.uniform();
    }
    const double alpha = rng.uniform();
    const nn::Vector c = hybrid_combine(a, b, alpha);
    CHECK((c.array() >= a.cwiseMin(b).array() - 1e-15).all());
    CHECK((c.array() <= a.cwiseMax(b).array() + 1e-15).all());
  }
}

TEST_CASE("nn head learns a separable toy set deterministically") {
  Rng rng(3);
  nn::Matrix X = oracle::random_matrix(rng, 2, 80), Y(1, 80);
  for (nn::Index i = 0; i < 80; ++i) {
    X(0, i) += X(0, i) > 0 ? 0.2 : -0.2;
    Y(0, i) = X(0, i) > 0 ? 1.0 : 0.0;
  }
  HeadConfig cfg;
  cfg.epochs = 500;
  cfg.batch_size = 80;  // one Adam step per epoch
  cfg.learning_rate = 5e-2;
  const NnHead a = train_nn_head(X, Y, nn::Matrix(2, 0), nn::Matrix(1, 0), cfg);
  const NnHead b = train_nn_head(X, Y, nn::Matrix(2, 0), nn::Matrix(1, 0), cfg);
  CHECK(a.history.back().train_loss < 0.05);
  CHECK(a.predict(X) == b.predict(X));
  const nn::Matrix p = a.predict(X);
  CHECK(p.rows() == 1);
  CHECK((p.array() > 0.0).all());
  CHECK((p.array() < 1.0).all());
  CHECK(a.net.hidden_weights.rows() == 2);  // default width 2K
}

TEST_CASE("prediction decodes thresholds and memorized examples") {
  const GoVocabulary go = fixture::go_terms(3);
  GoThresholdBank bank;
  bank.rules.assign(3, ThresholdRule{Direction::kAbove, 0.5, 0.05});
  CHECK(decode_terms(bank, go, nn::Vector::Zero(3)).empty());
  nn::Vector p(3);
  p << 0.9, 0.2, 0.6;
  CHECK(decode_terms(bank, go, p) == LabelSet{go.term(0), go.term(2)});

  Rng rng(4);
  nn::Matrix X = oracle::random_matrix(rng, 4, 12), Y(3, 12);
  for (nn::Index i = 0; i < 12; ++i) {
    for (nn::Index k = 0; k < 3; ++k) Y(k, i) = rng.bernoulli(0.5) ? 1.0 : 0.0;
    Y(i % 3, i) = 1.0;
  }
  HeadConfig cfg;
  cfg.hidden = 32;
  cfg.epochs = 1500;
  cfg.batch_size = 12;
  cfg.learning_rate = 3e-2;
  NnHead head = train_nn_head(X, Y, nn::Matrix(4, 0), nn::Matrix(3, 0), cfg);
  const GoThresholdBank learned = train_go_thresholds(head.predict(X), Y);
  for (nn::Index i = 0; i < 12; ++i) {
    LabelSet want;
    for (nn::Index k = 0; k < 3; ++k) {
      if (Y(k, i) == 1.0) want.insert(go.term(static_cast<std::size_t>(k)));
    }
    const nn::Vector xi = X.col(i);
    CHECK(predict_terms(head, learned, go, xi) == want);
    CHECK(predict_terms(head, learned, go, xi) == predict_terms(head, learned, go, xi));
  }
}

TEST_CASE("head and hybrid files round trip") {
  fixture::TempDir dir("head");
  Rng rng(5);
  HeadModel m;
  m.go_terms = fixture::go_terms(2);
  nn::Matrix X = oracle::random_matrix(rng, 3, 20), Y = nn::Matrix::Zero(2, 20);
  for (nn::Index i = 0; i < 20; ++i) Y(i % 2, i) = 1.0;
  HeadConfig cfg;
  cfg.epochs = 5;
  m.head = train_nn_head(X, Y, X, Y, cfg);
  m.bank = train_go_thresholds(m.head.predict(X), Y);
  m.config = cfg;
  m.feature_source = "mlda";
  save_head(m, dir / "a.head");
  const HeadModel back = load_head(dir / "a.head");
  CHECK(encode_head(back) == read_file(dir / "a.head"));
  CHECK(back.head.predict(X) == m.head.predict(X));
  CHECK(head_file_kind(dir / "a.head") == "head");

  HybridModel h{m.go_terms, m, m, 0.6, 0.5, 0.4 / 1.2, m.bank};
  save_hybrid(h, dir / "h.head");
  CHECK(head_file_kind(dir / "h.head") == "hybrid");
  const HybridModel hb = load_hybrid(dir / "h.head");
  CHECK(encode_hybrid(hb) == read_file(dir / "h.head"));
  CHECK(hb.alpha == 0.6);
  CHECK_THROWS_AS(load_head(dir / "h.head"), DataError);
}

}  // TEST_SUITE
