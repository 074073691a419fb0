#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "protvec/error.hpp"
#include "protvec/nn.hpp"
#include "protvec/training.hpp"

using namespace protvec;
using namespace protvec::nn;

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

LstmParams random_lstm(Rng& rng, Index H, Index E, double scale = 1.0) {
  LstmParams p(H, E);
  p.weights = oracle::random_matrix(rng, 4 * H, H + E, scale);
  p.bias = oracle::random_vector(rng, 4 * H, scale);
  return p;
}

std::vector<std::vector<TokenId>> random_batch(Rng& rng, std::size_t B, std::size_t T, Index V) {
  std::vector<std::vector<TokenId>> batch(B, std::vector<TokenId>(T));
  for (auto& seq : batch) {
    for (auto& t : seq) t = static_cast<TokenId>(rng.below(static_cast<std::uint64_t>(V)));
  }
  return batch;
}

Matrix random_targets(Rng& rng, Index K, Index B) {
  Matrix y(K, B);
  for (Index b = 0; b < B; ++b) {
    for (Index k = 0; k < K; ++k) y(k, b) = rng.bernoulli(0.5) ? 1.0 : 0.0;
  }
  return y;
}

}  // namespace

TEST_SUITE("nn-kernel") {

TEST_CASE("zero parameters give half-open gates") {
  const LstmParams p(3, 2);
  Vector c_prev(3);
  c_prev << 0.4, -1.0, 2.0;
  const auto s = lstm_cell_step(p, Vector::Zero(3), c_prev, Vector::Constant(2, 0.7));
  for (Index k = 0; k < 3; ++k) {
    CHECK(s.forget(k) == 0.5);
    CHECK(s.input(k) == 0.5);
    CHECK(s.output(k) == 0.5);
    CHECK(s.candidate(k) == 0.0);
    CHECK(s.cell(k) == doctest::Approx(0.5 * c_prev(k)).epsilon(1e-15));
    CHECK(s.hidden(k) == doctest::Approx(0.5 * std::tanh(0.5 * c_prev(k))).epsilon(1e-15));
  }
}

TEST_CASE("saturated forget and input gates carry the cell") {
  LstmParams p(2, 2);
  p.gate_bias(Gate::kForget).setConstant(50.0);
  p.gate_bias(Gate::kInput).setConstant(-50.0);
  Vector c_prev(2);
  c_prev << 0.3, -0.8;
  Rng rng(1);
  const auto s = lstm_cell_step(p, oracle::random_vector(rng, 2), c_prev, oracle::random_vector(rng, 2));
  CHECK((s.cell - c_prev).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("cell step matches the straight-line oracle") {
  Rng rng(2);
  for (int trial = 0; trial < 100; ++trial) {
    const Index H = 1 + static_cast<Index>(rng.below(5)), E = 1 + static_cast<Index>(rng.below(5));
    const LstmParams p = random_lstm(rng, H, E, 2.0);
    const Vector h = oracle::random_vector(rng, H), c = oracle::random_vector(rng, H, 3.0);
    const Vector x = oracle::random_vector(rng, E, 2.0);
    const auto got = lstm_cell_step(p, h, c, x);
    const auto want = oracle::lstm_step(p.weights, p.bias, to_std(h), to_std(c), to_std(x));
    for (Index k = 0; k < H; ++k) {
      const auto u = static_cast<std::size_t>(k);
      CHECK(std::abs(got.forget(k) - want.f[u]) <= 1e-12);
      CHECK(std::abs(got.input(k) - want.i[u]) <= 1e-12);
      CHECK(std::abs(got.candidate(k) - want.cbar[u]) <= 1e-12);
      CHECK(std::abs(got.output(k) - want.o[u]) <= 1e-12);
      CHECK(std::abs(got.cell(k) - want.c[u]) <= 1e-12);
      CHECK(std::abs(got.hidden(k) - want.h[u]) <= 1e-12);
      CHECK(got.forget(k) >= 0.0);
      CHECK(got.forget(k) <= 1.0);
      CHECK(std::abs(got.hidden(k)) <= 1.0);
    }
  }
}

TEST_CASE("cell step rejects bad shapes and non-finite input") {
  const LstmParams p(3, 2);
  CHECK_THROWS_AS(lstm_cell_step(p, Vector::Zero(2), Vector::Zero(3), Vector::Zero(2)), ShapeError);
  Vector x = Vector::Zero(2);
  x(0) = std::nan("");
  CHECK_THROWS_AS(lstm_cell_step(p, Vector::Zero(3), Vector::Zero(3), x), NumericError);
}

TEST_CASE("bi-lstm matches unrolled oracle and symmetry properties") {
  Rng rng(3);
  const Index H = 3, E = 2;
  const LstmParams f = random_lstm(rng, H, E), b = random_lstm(rng, H, E);
  std::vector<Vector> xs;
  std::vector<std::vector<double>> raw;
  for (int t = 0; t < 6; ++t) {
    xs.push_back(oracle::random_vector(rng, E));
    raw.push_back(to_std(xs.back()));
  }
  const Vector out = bilstm_forward(f, b, xs);
  REQUIRE(out.size() == 2 * H);
  const auto hf = oracle::lstm_final(f.weights, f.bias, raw);
  std::vector<std::vector<double>> reversed(raw.rbegin(), raw.rend());
  const auto hb = oracle::lstm_final(b.weights, b.bias, reversed);
  for (Index k = 0; k < H; ++k) {
    CHECK(std::abs(out(k) - hf[static_cast<std::size_t>(k)]) <= 1e-12);
    CHECK(std::abs(out(H + k) - hb[static_cast<std::size_t>(k)]) <= 1e-12);
  }

  std::vector<Vector> pal{xs[0], xs[1], xs[2], xs[1], xs[0]};
  const Vector sym = bilstm_forward(f, f, pal);
  CHECK((sym.head(H) - sym.tail(H)).cwiseAbs().maxCoeff() == 0.0);

  const std::vector<Vector> one{xs[0]};
  const Vector single = bilstm_forward(f, f, one);
  CHECK((single.head(H) - single.tail(H)).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(bilstm_forward(f, b, std::vector<Vector>{}), InvalidArgument);
}

TEST_CASE("dense layer") {
  const Vector x = Vector::Constant(4, 1.3);
  const Vector s = dense_forward(Matrix::Zero(3, 4), Vector::Zero(3), x, Activation::kSigmoid);
  for (Index k = 0; k < 3; ++k) CHECK(s(k) == 0.5);
  const Vector r = dense_forward(Matrix::Identity(4, 4), Vector::Zero(4), -x, Activation::kRelu);
  CHECK(r.isZero(0.0));
  Rng rng(4);
  const Matrix W = oracle::random_matrix(rng, 3, 5);
  const Vector b = oracle::random_vector(rng, 3), v = oracle::random_vector(rng, 5);
  const Vector got = dense_forward(W, b, v, Activation::kSigmoid);
  for (Index i = 0; i < 3; ++i) {
    double z = b(i);
    for (Index j = 0; j < 5; ++j) z += W(i, j) * v(j);
    CHECK(std::abs(got(i) - oracle::logistic(z)) <= 1e-12);
  }
  CHECK_THROWS_AS(dense_forward(W, b, x, Activation::kIdentity), ShapeError);
}

TEST_CASE("binary cross-entropy") {
  Vector y(3);
  y << 1, 0, 1;
  CHECK(bce_loss(y, y) <= -std::log(1 - 1e-7) + 1e-15);
  CHECK(bce_loss(Vector::Constant(3, 0.5), y) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  Vector p(3);
  p << 0.2, 0.7, 0.9;
  const double want = -(std::log(0.2) + std::log(0.3) + std::log(0.9)) / 3.0;
  CHECK(std::abs(bce_loss(p, y) - want) <= 1e-14);
  CHECK_THROWS_AS(bce_loss(p, Vector::Zero(2)), ShapeError);
}

TEST_CASE("adam three-step hand trace") {
  const double lr = 0.1, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  const double grads[3] = {1.0, -0.5, 0.25};
  double theta = 1.0, m = 0, v = 0;
  std::vector<double> p{1.0}, mm{0.0}, vv{0.0};
  for (int t = 1; t <= 3; ++t) {
    const double g = grads[t - 1];
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    theta -= lr * (m / (1 - std::pow(b1, t))) / (std::sqrt(v / (1 - std::pow(b2, t))) + eps);
    const std::vector<double> gv{g};
    adam_step(p, gv, mm, vv, t, {lr, b1, b2, eps});
    CHECK(std::abs(p[0] - theta) <= 1e-15);
  }
}

TEST_CASE("adam edge cases") {
  std::vector<double> p{0.3, -0.2}, m(2), v(2);
  const std::vector<double> zero(2, 0.0);
  adam_step(p, zero, m, v, 1, {});
  CHECK(p == std::vector<double>{0.3, -0.2});

  std::vector<double> q{0.0}, qm{0.0}, qv{0.0};
  double last = 0.0;
  for (long t = 1; t <= 5000; ++t) {
    const double before = q[0];
    adam_step(q, std::vector<double>{2.0}, qm, qv, t, {});
    last = before - q[0];
  }
  CHECK(last == doctest::Approx(1e-3).epsilon(1e-4));

  const std::vector<double> bad{std::nan("")};
  std::vector<double> r{0.0}, rm{0.0}, rv{0.0};
  CHECK_THROWS_AS(adam_step(r, bad, rm, rv, 1, {}), NumericError);
  CHECK_THROWS_AS(adam_step(r, std::vector<double>{0.0}, rm, rv, 0, {}), InvalidArgument);
}

TEST_CASE("dropout mask") {
  Rng rng(5);
  CHECK(dropout_mask(10, 0.0, rng).isApproxToConstant(1.0));
  const Vector m = dropout_mask(100000, 0.3, rng);
  const double zeros = static_cast<double>((m.array() == 0.0).count()) / 1e5;
  CHECK(std::abs(zeros - 0.3) <= 0.01);
  CHECK(std::abs(m.mean() - 1.0) <= 0.02);
  for (Index k = 0; k < m.size(); ++k) {
    if (m(k) != 0.0) CHECK(m(k) == doctest::Approx(1.0 / 0.7));
  }
  CHECK_THROWS_AS(dropout_mask(3, 1.0, rng), InvalidArgument);
}

TEST_CASE("full stack gradients match central differences") {
  for (int trial = 0; trial < 3; ++trial) {
    Rng rng(100 + static_cast<std::uint64_t>(trial));
    const ClassifierShape shape{7, 3, 4, 3};
    auto model = SequenceClassifier::initialized(shape, rng);
    model.readout = trial == 2 ? Readout::kMeanPool : Readout::kFinalState;
    const auto batch = random_batch(rng, 2, 5, shape.vocab);
    const Matrix targets = random_targets(rng, shape.outputs, 2);
    const double dropout = trial == 1 ? 0.3 : 0.0;
    const auto loss = [&]() {
      Rng r(77);
      return forward_train(model, batch, targets, dropout, r).loss();
    };
    Rng r(77);
    Tape tape = forward_train(model, batch, targets, dropout, r);
    const SequenceClassifier grads = backward(model, tape);
    const auto report = check_gradients(loss, model.params(), grads.params(), 1e-5);
    CHECK(report.checked > 100);
    CHECK(report.max_relative_error <= 1e-4);
  }
}

TEST_CASE("tape is single use and gradients are linear in the loss scale") {
  Rng rng(6);
  const ClassifierShape shape{5, 3, 4, 2};
  const auto model = SequenceClassifier::initialized(shape, rng);
  const auto batch = random_batch(rng, 3, 4, shape.vocab);
  const Matrix y = random_targets(rng, 2, 3);
  Rng r1(1), r2(1);
  Tape t1 = forward_train(model, batch, y, 0.0, r1, 1.0);
  Tape t2 = forward_train(model, batch, y, 0.0, r2, 2.0);
  const auto g1 = backward(model, t1);
  const auto g2 = backward(model, t2);
  CHECK_THROWS_AS(backward(model, t1), InvalidArgument);
  const auto p1 = g1.params();
  const auto p2 = g2.params();
  for (std::size_t t = 0; t < p1.size(); ++t) {
    for (std::size_t k = 0; k < p1[t].size(); ++k) {
      CHECK(std::abs(p2[t][k] - 2.0 * p1[t][k]) <= 1e-14 * (1.0 + std::abs(p1[t][k])));
    }
  }
}

TEST_CASE("saturated correct predictions have vanishing gradients") {
  const ClassifierShape shape{4, 3, 2, 2};
  auto model = SequenceClassifier::zeros(shape);
  model.out_bias << 40.0, -40.0;
  Matrix y(2, 1);
  y << 1.0, 0.0;
  Rng rng(1);
  const std::vector<std::vector<TokenId>> batch{{1, 2, 3}};
  Tape tape = forward_train(model, batch, y, 0.0, rng);
  const auto g = backward(model, tape);
  double norm2 = 0.0;
  for (const auto& p : g.params()) {
    for (double v : p) norm2 += v * v;
  }
  CHECK(std::sqrt(norm2) <= 1e-6);
}

TEST_CASE("zero classifier predicts one half") {
  const auto model = SequenceClassifier::zeros({6, 3, 2, 4});
  const std::vector<TokenId> tokens{1, 0, 5};
  CHECK(model.predict(tokens).isApproxToConstant(0.5, 0.0));
}

TEST_CASE("perceptron gradients and loss decrease") {
  Rng rng(7);
  auto net = Perceptron::initialized(3, 5, 2, rng);
  const Matrix x = oracle::random_matrix(rng, 3, 40);
  Matrix y(2, 40);
  for (Index b = 0; b < 40; ++b) {
    y(0, b) = x(0, b) + x(1, b) > 0 ? 1.0 : 0.0;
    y(1, b) = x(2, b) > 0.2 ? 1.0 : 0.0;
  }
  Perceptron grads = Perceptron::zeros(3, 5, 2);
  net.loss_and_grad(x, y, &grads);
  const auto report = check_gradients([&]() { return net.loss_and_grad(x, y, nullptr); }, net.params(),
                                      static_cast<const Perceptron&>(grads).params());
  CHECK(report.max_relative_error <= 1e-4);

  const double initial = net.loss_and_grad(x, y, nullptr);
  Adam adam(AdamConfig{0.05});
  for (int step = 0; step < 200; ++step) {
    Perceptron g = Perceptron::zeros(3, 5, 2);
    net.loss_and_grad(x, y, &g);
    adam.step(net.params(), static_cast<const Perceptron&>(g).params());
  }
  CHECK(net.loss_and_grad(x, y, nullptr) < 0.5 * initial);
}

TEST_CASE("sequence training is bit-reproducible") {
  const auto run = []() {
    Rng rng(8);
    auto net = SequenceClassifier::initialized({6, 3, 3, 2}, rng);
    std::vector<SequenceExample> train;
    Rng data(9);
    for (int i = 0; i < 12; ++i) {
      SequenceExample ex;
      ex.tokens = random_batch(data, 1, 3 + data.below(3), 6)[0];
      ex.target = Vector::Zero(2);
      ex.target(static_cast<Index>(data.below(2))) = 1.0;
      train.push_back(ex);
    }
    TrainSchedule schedule;
    schedule.epochs = 3;
    schedule.batch_size = 4;
    return train_sequence_classifier(std::move(net), train, train, schedule);
  };
  const auto a = run();
  const auto b = run();
  const auto pa = a.network.params();
  const auto pb = b.network.params();
  for (std::size_t t = 0; t < pa.size(); ++t) {
    CHECK(std::equal(pa[t].begin(), pa[t].end(), pb[t].begin()));
  }
  CHECK(a.best_epoch == b.best_epoch);
}

TEST_CASE("initialization follows the fan-in rule") {
  Rng rng(10);
  const LstmParams p = init_lstm(4, 3, rng);
  const double k = 1.0 / std::sqrt(7.0);
  CHECK(p.weights.cwiseAbs().maxCoeff() < k);
  CHECK(p.gate_bias(Gate::kForget).isApproxToConstant(1.0));
  CHECK(p.gate_bias(Gate::kInput).isZero(0.0));
}

}  // TEST_SUITE
