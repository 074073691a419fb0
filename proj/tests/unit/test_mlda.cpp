#include <doctest.h>

#include <cmath>

#include "checks.hpp"
#include "models.hpp"
#include "protvec/error.hpp"
#include "protvec/mlda.hpp"

using namespace protvec;

TEST_SUITE("mlda") {

TEST_CASE("tf-idf hand computation") {
  const std::vector<ProteinRecord> recs{{"a", "AAAB", {}}, {"b", "BBBB", {}}};
  const std::vector<const ProteinRecord*> ptrs{&recs[0], &recs[1]};
  const TfidfModel m = tfidf_fit(ptrs, 3, 0);
  CHECK(m.doc_count == 2);
  for (auto df : m.doc_freq) CHECK(df >= 1);
  const nn::Vector v = tfidf_transform(m, "AAAB");
  const double w = 1.0 / std::sqrt(2.0);
  CHECK(v(static_cast<nn::Index>(m.index.at("AAA"))) == doctest::Approx(w).epsilon(1e-15));
  CHECK(v(static_cast<nn::Index>(m.index.at("AAB"))) == doctest::Approx(w).epsilon(1e-15));
  CHECK(v(static_cast<nn::Index>(m.index.at("BBB"))) == 0.0);
  CHECK(tfidf_transform(m, "CCCCC").isZero(0.0));
}

TEST_CASE("a term in every document weighs zero and the cap keeps the most frequent terms") {
  const std::vector<ProteinRecord> recs{{"a", "MKVAAA", {}}, {"b", "MKVCCC", {}}, {"c", "MKVDDD", {}}};
  std::vector<const ProteinRecord*> ptrs;
  for (const auto& r : recs) ptrs.push_back(&r);
  const TfidfModel full = tfidf_fit(ptrs, 3, 0);
  CHECK(tfidf_transform(full, "MKV").isZero(0.0));
  const TfidfModel capped = tfidf_fit(ptrs, 3, 1);
  REQUIRE(capped.terms.size() == 1);
  CHECK(capped.terms[0] == "MKV");
  CHECK_THROWS_AS(tfidf_fit(std::vector<const ProteinRecord*>{}, 3), InvalidArgument);
}

TEST_CASE("four-point scatter example") {
  nn::Matrix X(4, 2), Y(4, 2);
  X << 1, 0, -1, 0, 0, 1, 0, -1;
  Y << 1, 0, 1, 0, 0, 1, 0, 1;
  const auto s = mlda_scatter(X, Y);
  CHECK(s.class_means.isZero(0.0));
  CHECK(s.global_mean.isZero(0.0));
  CHECK(s.between.isZero(0.0));
  CHECK(s.within.isApprox(nn::Matrix::Identity(2, 2) * 2.0));
}

TEST_CASE("single-label data gives the classical scatter matrices") {
  Rng rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto in = checks::random_mlda_instance(rng, true);
    std::vector<int> cls(static_cast<std::size_t>(in.Y.rows()));
    for (nn::Index i = 0; i < in.Y.rows(); ++i) {
      for (nn::Index k = 0; k < in.Y.cols(); ++k) {
        if (in.Y(i, k) == 1.0) cls[static_cast<std::size_t>(i)] = static_cast<int>(k);
      }
    }
    const auto ref = checks::classical_lda(in.X, cls, static_cast<int>(in.Y.cols()));
    const auto s = mlda_scatter(in.X, in.Y);
    CHECK((s.between - ref.between).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((s.within - ref.within).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("projection agrees with the brute-force generalized eigensolver") {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    const auto in = checks::random_mlda_instance(rng);
    const auto d = checks::compare_mlda(in);
    CHECK(d.angle <= 1e-6);
    CHECK(d.residual <= 1e-6);
    CHECK(d.scatter <= 1e-12);
    CHECK(d.ordered);
  }
}

TEST_CASE("scatter symmetry, PSD and the weighted-mean identity") {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const auto in = checks::random_mlda_instance(rng);
    const auto s = mlda_scatter(in.X, in.Y);
    CHECK((s.between - s.between.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((s.within - s.within.transpose()).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(Eigen::LLT<nn::Matrix>(regularized_within(s.within)).info() == Eigen::Success);
    const nn::Matrix b_reg = s.between + 1e-9 * nn::Matrix::Identity(s.between.rows(), s.between.cols());
    CHECK(Eigen::LLT<nn::Matrix>(b_reg).info() == Eigen::Success);
    nn::Vector acc = nn::Vector::Zero(in.X.cols());
    for (nn::Index k = 0; k < in.Y.cols(); ++k) acc += s.class_counts(k) * (s.class_means.col(k) - s.global_mean);
    CHECK(acc.cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("separable toy data stays separable under projection") {
  Rng rng(4);
  const int K = 3;
  const nn::Index d = 4, per = 10;
  nn::Matrix X(K * per, d), Y = nn::Matrix::Zero(K * per, K);
  for (int k = 0; k < K; ++k) {
    for (nn::Index i = 0; i < per; ++i) {
      const nn::Index row = k * per + i;
      X.row(row) = oracle::random_vector(rng, d, 0.3).transpose();
      X(row, k) += 3.0;
      Y(row, k) = 1.0;
    }
  }
  const MldaModel m = mlda_fit(X, Y);
  const nn::Matrix Z = mlda_transform(m, nn::Matrix(X.transpose()));
  const nn::Matrix centres = mlda_transform(m, m.class_means);
  for (nn::Index i = 0; i < Z.cols(); ++i) {
    nn::Index best = 0;
    (centres.colwise() - Z.col(i)).colwise().squaredNorm().minCoeff(&best);
    CHECK(best == i / per);
  }
}

TEST_CASE("transform is linear and checks dimensions") {
  Rng rng(5);
  nn::Matrix X = oracle::random_matrix(rng, 30, 6), Y = nn::Matrix::Zero(30, 3);
  for (nn::Index i = 0; i < 30; ++i) Y(i, i % 3) = 1.0;
  const MldaModel m = mlda_fit(X, Y);
  CHECK(m.output_dims() == 2);
  CHECK(mlda_transform(m, nn::Vector(nn::Vector::Zero(6))).isZero(0.0));
  const nn::Vector a = oracle::random_vector(rng, 6), b = oracle::random_vector(rng, 6);
  const nn::Vector lhs = mlda_transform(m, nn::Vector(2.5 * a - 0.7 * b));
  const nn::Vector rhs = 2.5 * mlda_transform(m, a) - 0.7 * mlda_transform(m, b);
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK_THROWS_AS(mlda_transform(m, nn::Vector(nn::Vector::Zero(5))), ShapeError);
}

TEST_CASE("fit errors") {
  nn::Matrix X = nn::Matrix::Ones(4, 3), Y = nn::Matrix::Zero(4, 2);
  Y(0, 0) = Y(1, 0) = 1.0;
  const std::vector<std::string> names{"GO:0000001", "GO:0000777"};
  CHECK_THROWS_WITH_AS(mlda_fit(X, Y, 1e-6, names), doctest::Contains("GO:0000777"), DataError);
  CHECK_THROWS_AS(mlda_fit(X, nn::Matrix::Ones(4, 1)), InvalidArgument);
  CHECK_THROWS_AS(mlda_fit(nn::Matrix::Ones(4, 1), nn::Matrix::Identity(4, 4)), InvalidArgument);
}

TEST_CASE("pipeline persistence round trip") {
  fixture::TempDir dir("mlda");
  const Corpus c = fixture::small_corpus(40, 3, 6);
  const auto p = fit_mlda_pipeline(c.subset(Split::kTrain), c.vocabulary, 3, 300);
  const auto all = c.subset(Split::kTest);
  const nn::Matrix f = p.features(all);
  CHECK(f.rows() == 2);
  CHECK(f.cols() == static_cast<nn::Index>(all.size()));
  save_mlda(p, dir / "m.mlda");
  const auto back = load_mlda(dir / "m.mlda");
  CHECK(back.features(all) == f);
  CHECK(encode_mlda(back) == read_file(dir / "m.mlda"));
  CHECK(back.tfidf.terms == p.tfidf.terms);
}

}  // TEST_SUITE
