#include "protvec/nn.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "protvec/error.hpp"

namespace protvec::nn {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

void apply_activation(Matrix& z, Activation act) {
  switch (act) {
    case Activation::kSigmoid:
      z = z.unaryExpr([](double v) { return sigmoid(v); });
      break;
    case Activation::kRelu:
      z = z.cwiseMax(0.0);
      break;
    case Activation::kIdentity:
      break;
  }
}

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) throw NumericError(std::string("non-finite values in ") + what);
}

void require_finite(const Vector& v, const char* what) {
  if (!v.allFinite()) throw NumericError(std::string("non-finite values in ") + what);
}

void uniform_fill(Matrix& m, double bound, Rng& rng) {
  // Row-major traversal so the fill order matches the serialized layout.
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) m(r, c) = rng.uniform(-bound, bound);
  }
}

double glorot_bound(Index fan_in, Index fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

// Gradient of the clamped BCE w.r.t. the sigmoid pre-activation.
Matrix bce_logit_grad(const Matrix& probs, const Matrix& targets, double scale) {
  Matrix d(probs.rows(), probs.cols());
  for (Index c = 0; c < probs.cols(); ++c) {
    for (Index r = 0; r < probs.rows(); ++r) {
      const double p = probs(r, c);
      const bool clamped = p < kProbabilityClamp || p > 1.0 - kProbabilityClamp;
      d(r, c) = clamped ? 0.0 : scale * (p - targets(r, c));
    }
  }
  return d;
}

double bce_sum(const Matrix& probs, const Matrix& targets) {
  double total = 0.0;
  for (Index c = 0; c < probs.cols(); ++c) {
    for (Index r = 0; r < probs.rows(); ++r) {
      const double p = std::clamp(probs(r, c), kProbabilityClamp, 1.0 - kProbabilityClamp);
      const double y = targets(r, c);
      total -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
  }
  return total;
}

}  // namespace

// ---- LSTM -----------------------------------------------------------------

LstmParams::LstmParams(Index hidden, Index input)
    : weights(Matrix::Zero(4 * hidden, hidden + input)), bias(Vector::Zero(4 * hidden)) {}

void LstmParams::validate() const {
  if (bias.size() == 0 || bias.size() % 4 != 0 || weights.rows() != bias.size() || weights.cols() <= hidden()) {
    throw ShapeError("inconsistent LSTM parameter shapes");
  }
  require_finite(weights, "LSTM weights");
  require_finite(bias, "LSTM bias");
}

LstmParams init_lstm(Index hidden, Index input, Rng& rng) {
  LstmParams p(hidden, input);
  uniform_fill(p.weights, 1.0 / std::sqrt(static_cast<double>(hidden + input)), rng);
  p.gate_bias(Gate::kForget).setOnes();
  return p;
}

LstmStepState lstm_cell_step(const LstmParams& params, const Vector& h_prev, const Vector& c_prev,
                             const Vector& x) {
  params.validate();
  const Index H = params.hidden();
  if (h_prev.size() != H || c_prev.size() != H || x.size() != params.input()) {
    throw ShapeError("LSTM step input shapes do not match the parameters");
  }
  require_finite(h_prev, "h_prev");
  require_finite(c_prev, "C_prev");
  require_finite(x, "x_t");

  LstmStepState s;
  s.concat.resize(H + x.size());
  s.concat << h_prev, x;
  const auto gate = [&](Gate g) -> Vector {
    return params.gate_weights(g) * s.concat + params.gate_bias(g);
  };
  s.forget = gate(Gate::kForget).unaryExpr([](double v) { return sigmoid(v); });
  s.input = gate(Gate::kInput).unaryExpr([](double v) { return sigmoid(v); });
  s.candidate = gate(Gate::kCandidate).array().tanh();
  s.cell = s.forget.cwiseProduct(c_prev) + s.input.cwiseProduct(s.candidate);
  s.output = gate(Gate::kOutput).unaryExpr([](double v) { return sigmoid(v); });
  s.hidden = s.output.cwiseProduct(Vector(s.cell.array().tanh()));
  return s;
}

Matrix lstm_sequence_forward(const LstmParams& params, std::span<const Matrix> inputs, Readout readout,
                             LstmTrace* trace) {
  if (inputs.empty()) throw InvalidArgument("LSTM input sequence is empty");
  const Index H = params.hidden();
  const Index E = params.input();
  const Index B = inputs.front().cols();
  const auto T = inputs.size();

  Matrix h = Matrix::Zero(H, B);
  Matrix c = Matrix::Zero(H, B);
  Matrix pooled = Matrix::Zero(H, B);
  Matrix concat(H + E, B);
  Matrix gates(4 * H, B);
  if (trace != nullptr) {
    *trace = LstmTrace{};
    trace->concat.reserve(T);
    trace->gates.reserve(T);
    trace->cell.reserve(T);
    trace->tanh_cell.reserve(T);
  }
  for (std::size_t t = 0; t < T; ++t) {
    if (inputs[t].rows() != E || inputs[t].cols() != B) throw ShapeError("LSTM step input has the wrong shape");
    concat.topRows(H) = h;
    concat.bottomRows(E) = inputs[t];
    gates.noalias() = params.weights * concat;
    gates.colwise() += params.bias;
    auto f = gates.middleRows(0, H);
    auto i = gates.middleRows(H, H);
    auto g = gates.middleRows(2 * H, H);
    auto o = gates.middleRows(3 * H, H);
    f = f.unaryExpr([](double v) { return sigmoid(v); });
    i = i.unaryExpr([](double v) { return sigmoid(v); });
    g = g.array().tanh().matrix();
    o = o.unaryExpr([](double v) { return sigmoid(v); });
    c = f.cwiseProduct(c) + i.cwiseProduct(g);
    Matrix tc = c.array().tanh();
    h = o.cwiseProduct(tc);
    if (readout == Readout::kMeanPool) pooled += h;
    if (trace != nullptr) {
      trace->concat.push_back(concat);
      trace->gates.push_back(gates);
      trace->cell.push_back(c);
      trace->tanh_cell.push_back(std::move(tc));
    }
  }
  if (readout == Readout::kMeanPool) return pooled / static_cast<double>(T);
  return h;
}

void lstm_sequence_backward(const LstmParams& params, const LstmTrace& trace, const Matrix& d_readout,
                            Readout readout, LstmParams& grads, std::vector<Matrix>& d_inputs) {
  const Index H = params.hidden();
  const Index E = params.input();
  const std::size_t T = trace.gates.size();
  const Index B = d_readout.cols();
  d_inputs.assign(T, Matrix());

  Matrix dh = Matrix::Zero(H, B);
  Matrix dc = Matrix::Zero(H, B);
  Matrix d_gates(4 * H, B);
  Matrix d_concat(H + E, B);
  const Matrix pooled_grad = readout == Readout::kMeanPool ? Matrix(d_readout / static_cast<double>(T)) : Matrix();

  for (std::size_t step = T; step-- > 0;) {
    if (readout == Readout::kMeanPool) {
      dh += pooled_grad;
    } else if (step == T - 1) {
      dh += d_readout;
    }
    const Matrix& gates = trace.gates[step];
    const auto f = gates.middleRows(0, H).array();
    const auto i = gates.middleRows(H, H).array();
    const auto g = gates.middleRows(2 * H, H).array();
    const auto o = gates.middleRows(3 * H, H).array();
    const auto tc = trace.tanh_cell[step].array();

    dc.array() += dh.array() * o * (1.0 - tc.square());
    d_gates.middleRows(3 * H, H).array() = dh.array() * tc * o * (1.0 - o);
    if (step > 0) {
      d_gates.middleRows(0, H).array() = dc.array() * trace.cell[step - 1].array() * f * (1.0 - f);
    } else {
      d_gates.middleRows(0, H).setZero();
    }
    d_gates.middleRows(H, H).array() = dc.array() * g * i * (1.0 - i);
    d_gates.middleRows(2 * H, H).array() = dc.array() * i * (1.0 - g.square());

    grads.weights.noalias() += d_gates * trace.concat[step].transpose();
    grads.bias.noalias() += d_gates.rowwise().sum();
    d_concat.noalias() = params.weights.transpose() * d_gates;
    d_inputs[step] = d_concat.bottomRows(E);
    dh = d_concat.topRows(H);
    dc.array() *= f;
  }
}

Vector bilstm_forward(const LstmParams& fwd, const LstmParams& bwd, std::span<const Vector> embeddings,
                      Readout readout) {
  if (embeddings.empty()) throw InvalidArgument("Bi-LSTM input sequence is empty");
  fwd.validate();
  bwd.validate();
  if (fwd.hidden() != bwd.hidden() || fwd.input() != bwd.input()) {
    throw ShapeError("forward and backward LSTM shapes differ");
  }
  const std::size_t T = embeddings.size();
  std::vector<Matrix> forward_in(T), backward_in(T);
  for (std::size_t t = 0; t < T; ++t) {
    if (embeddings[t].size() != fwd.input()) throw ShapeError("embedding width does not match the LSTM input size");
    forward_in[t] = embeddings[t];
    backward_in[T - 1 - t] = embeddings[t];
  }
  const Index H = fwd.hidden();
  Vector out(2 * H);
  out.head(H) = lstm_sequence_forward(fwd, forward_in, readout, nullptr).col(0);
  out.tail(H) = lstm_sequence_forward(bwd, backward_in, readout, nullptr).col(0);
  return out;
}

// ---- dense, loss, dropout -------------------------------------------------

Vector dense_forward(const Matrix& weights, const Vector& bias, const Vector& x, Activation act) {
  if (weights.cols() != x.size() || weights.rows() != bias.size()) {
    throw ShapeError("dense layer shapes do not match");
  }
  Matrix z = weights * x + bias;
  apply_activation(z, act);
  return z.col(0);
}

double bce_loss(const Vector& predictions, const Vector& targets) {
  if (predictions.size() != targets.size() || predictions.size() == 0) {
    throw ShapeError("prediction and target lengths differ");
  }
  return bce_sum(predictions, targets) / static_cast<double>(predictions.size());
}

Vector dropout_mask(Index size, double rate, Rng& rng) { return dropout_mask(size, 1, rate, rng).col(0); }

Matrix dropout_mask(Index rows, Index cols, double rate, Rng& rng) {
  if (!(rate >= 0.0 && rate < 1.0)) throw InvalidArgument("dropout rate must lie in [0, 1)");
  Matrix mask = Matrix::Ones(rows, cols);
  if (rate == 0.0) return mask;
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Index c = 0; c < cols; ++c) {
    for (Index r = 0; r < rows; ++r) mask(r, c) = rng.uniform() < rate ? 0.0 : keep_scale;
  }
  return mask;
}

// ---- parameter lists and Adam ---------------------------------------------

std::span<double> view(Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<const double> view(const Matrix& m) { return {m.data(), static_cast<std::size_t>(m.size())}; }
std::span<double> view(Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> view(const Vector& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> first_moment,
               std::span<double> second_moment, long t, const AdamConfig& config) {
  if (t < 1) throw InvalidArgument("Adam step counter must start at 1");
  if (grads.size() != params.size() || first_moment.size() != params.size() ||
      second_moment.size() != params.size()) {
    throw ShapeError("Adam buffers do not match the parameter size");
  }
  for (double g : grads) {
    if (!std::isfinite(g)) throw NumericError("non-finite gradient; training aborted");
  }
  const double b1 = config.beta1;
  const double b2 = config.beta2;
  const double correction1 = 1.0 - std::pow(b1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(b2, static_cast<double>(t));
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double g = grads[k];
    first_moment[k] = b1 * first_moment[k] + (1.0 - b1) * g;
    second_moment[k] = b2 * second_moment[k] + (1.0 - b2) * g * g;
    const double m_hat = first_moment[k] / correction1;
    const double v_hat = second_moment[k] / correction2;
    params[k] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
  }
}

void Adam::step(const ParamList& params, const ConstParamList& grads) {
  if (params.size() != grads.size()) throw ShapeError("parameter and gradient lists differ in length");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw ShapeError("parameter list changed between Adam steps");
  ++t_;
  for (std::size_t k = 0; k < params.size(); ++k) adam_step(params[k], grads[k], m_[k], v_[k], t_, config_);
}

// ---- gradient checking ----------------------------------------------------

double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

GradCheckReport check_gradients(const std::function<double()>& loss, const ParamList& params,
                                const ConstParamList& analytic, double step) {
  if (params.size() != analytic.size()) throw ShapeError("parameter and gradient lists differ in length");
  GradCheckReport report;
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (params[t].size() != analytic[t].size()) throw ShapeError("gradient tensor size mismatch");
    for (std::size_t k = 0; k < params[t].size(); ++k) {
      const double saved = params[t][k];
      params[t][k] = saved + step;
      const double up = loss();
      params[t][k] = saved - step;
      const double down = loss();
      params[t][k] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err = relative_error(analytic[t][k], numeric);
      ++report.checked;
      if (err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_tensor = t;
        report.worst_index = k;
      }
    }
  }
  return report;
}

// ---- SequenceClassifier ---------------------------------------------------

SequenceClassifier SequenceClassifier::zeros(const ClassifierShape& s) {
  SequenceClassifier m;
  m.embedding = Matrix::Zero(s.embed, s.vocab);
  m.forward = LstmParams(s.hidden, s.embed);
  m.backward = LstmParams(s.hidden, s.embed);
  m.out_weights = Matrix::Zero(s.outputs, 2 * s.hidden);
  m.out_bias = Vector::Zero(s.outputs);
  return m;
}

SequenceClassifier SequenceClassifier::initialized(const ClassifierShape& s, Rng& rng) {
  if (s.vocab < 1 || s.embed < 1 || s.hidden < 1 || s.outputs < 1) {
    throw InvalidArgument("classifier dimensions must all be >= 1");
  }
  SequenceClassifier m = zeros(s);
  for (Index v = 0; v < s.vocab; ++v) {
    for (Index e = 0; e < s.embed; ++e) m.embedding(e, v) = rng.uniform(-0.05, 0.05);
  }
  m.forward = init_lstm(s.hidden, s.embed, rng);
  m.backward = init_lstm(s.hidden, s.embed, rng);
  uniform_fill(m.out_weights, glorot_bound(2 * s.hidden, s.outputs), rng);
  return m;
}

ClassifierShape SequenceClassifier::shape() const {
  return {embedding.cols(), embedding.rows(), forward.hidden(), out_bias.size()};
}

ParamList SequenceClassifier::params() {
  return {view(embedding),        view(forward.weights), view(forward.bias), view(backward.weights),
          view(backward.bias),    view(out_weights),     view(out_bias)};
}

ConstParamList SequenceClassifier::params() const {
  return {view(embedding),     view(forward.weights), view(forward.bias), view(backward.weights),
          view(backward.bias), view(out_weights),     view(out_bias)};
}

namespace {

// Embeds an equal-length batch: one E x B matrix per step, plus the reversed order.
void embed_batch(const Matrix& embedding, std::span<const std::vector<TokenId>> batch, std::vector<Matrix>& fwd,
                 std::vector<Matrix>& bwd) {
  const std::size_t T = batch.front().size();
  const Index B = static_cast<Index>(batch.size());
  const Index V = embedding.cols();
  fwd.assign(T, Matrix(embedding.rows(), B));
  for (Index b = 0; b < B; ++b) {
    const auto& seq = batch[static_cast<std::size_t>(b)];
    if (seq.size() != T) throw ShapeError("batch sequences must share one length");
    for (std::size_t t = 0; t < T; ++t) {
      const TokenId id = seq[t];
      if (id < 0 || id >= V) throw ShapeError("token id outside the embedding table");
      fwd[t].col(b) = embedding.col(id);
    }
  }
  bwd.assign(fwd.rbegin(), fwd.rend());
}

Matrix predict_equal_length(const SequenceClassifier& m, std::span<const std::vector<TokenId>> batch) {
  std::vector<Matrix> fwd_in, bwd_in;
  embed_batch(m.embedding, batch, fwd_in, bwd_in);
  const Index H = m.forward.hidden();
  Matrix readout(2 * H, static_cast<Index>(batch.size()));
  readout.topRows(H) = lstm_sequence_forward(m.forward, fwd_in, m.readout, nullptr);
  readout.bottomRows(H) = lstm_sequence_forward(m.backward, bwd_in, m.readout, nullptr);
  Matrix z = m.out_weights * readout;
  z.colwise() += m.out_bias;
  apply_activation(z, Activation::kSigmoid);
  return z;
}

}  // namespace

Matrix SequenceClassifier::predict(std::span<const std::vector<TokenId>> batch) const {
  Matrix out(out_bias.size(), static_cast<Index>(batch.size()));
  std::map<std::size_t, std::vector<std::size_t>> by_length;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch[b].empty()) throw InvalidArgument("cannot classify an empty token sequence");
    by_length[batch[b].size()].push_back(b);
  }
  constexpr std::size_t kChunk = 256;
  for (const auto& [len, members] : by_length) {
    for (std::size_t lo = 0; lo < members.size(); lo += kChunk) {
      const std::size_t hi = std::min(members.size(), lo + kChunk);
      std::vector<std::vector<TokenId>> group;
      group.reserve(hi - lo);
      for (std::size_t k = lo; k < hi; ++k) group.push_back(batch[members[k]]);
      const Matrix probs = predict_equal_length(*this, group);
      for (std::size_t k = lo; k < hi; ++k) out.col(static_cast<Index>(members[k])) = probs.col(static_cast<Index>(k - lo));
    }
  }
  return out;
}

Vector SequenceClassifier::predict(std::span<const TokenId> tokens) const {
  std::vector<std::vector<TokenId>> batch{std::vector<TokenId>(tokens.begin(), tokens.end())};
  return predict(batch).col(0);
}

Tape forward_train(const SequenceClassifier& model, std::span<const std::vector<TokenId>> batch,
                   const Matrix& targets, double dropout, Rng& rng, double loss_scale) {
  if (batch.empty() || batch.front().empty()) throw InvalidArgument("training batch is empty");
  const Index B = static_cast<Index>(batch.size());
  const Index K = model.out_bias.size();
  if (targets.rows() != K || targets.cols() != B) throw ShapeError("target matrix must be K x batch");

  Tape tape;
  tape.tokens_.assign(batch.begin(), batch.end());
  std::vector<Matrix> fwd_in, bwd_in;
  embed_batch(model.embedding, batch, fwd_in, bwd_in);
  const Index H = model.forward.hidden();
  tape.readout_.resize(2 * H, B);
  tape.readout_.topRows(H) = lstm_sequence_forward(model.forward, fwd_in, model.readout, &tape.fwd_trace_);
  tape.readout_.bottomRows(H) = lstm_sequence_forward(model.backward, bwd_in, model.readout, &tape.bwd_trace_);
  tape.mask_ = dropout_mask(2 * H, B, dropout, rng);

  Matrix z = model.out_weights * tape.readout_.cwiseProduct(tape.mask_);
  z.colwise() += model.out_bias;
  apply_activation(z, Activation::kSigmoid);
  tape.probs_ = std::move(z);
  tape.targets_ = targets;
  tape.loss_scale_ = loss_scale;
  tape.loss_ = loss_scale * bce_sum(tape.probs_, targets) / static_cast<double>(B * K);
  if (!std::isfinite(tape.loss_)) throw NumericError("non-finite training loss");
  return tape;
}

SequenceClassifier backward(const SequenceClassifier& model, Tape& tape) {
  SequenceClassifier grads = SequenceClassifier::zeros(model.shape());
  grads.readout = model.readout;
  backward_accumulate(model, tape, grads);
  return grads;
}

void set_zero(SequenceClassifier& grads) {
  for (auto t : grads.params()) std::fill(t.begin(), t.end(), 0.0);
}

void backward_accumulate(const SequenceClassifier& model, Tape& tape, SequenceClassifier& grads) {
  if (tape.consumed_) throw InvalidArgument("tape already consumed by a backward pass");
  if (grads.embedding.rows() != model.embedding.rows() || grads.embedding.cols() != model.embedding.cols() ||
      grads.out_weights.rows() != model.out_weights.rows() || grads.forward.hidden() != model.forward.hidden()) {
    throw ShapeError("gradient buffer does not match the model");
  }
  tape.consumed_ = true;
  const Index B = tape.probs_.cols();
  const Index K = tape.probs_.rows();
  const Index H = model.forward.hidden();

  const Matrix d_logits = bce_logit_grad(tape.probs_, tape.targets_, tape.loss_scale_ / static_cast<double>(B * K));
  const Matrix dropped = tape.readout_.cwiseProduct(tape.mask_);
  grads.out_weights.noalias() += d_logits * dropped.transpose();
  grads.out_bias += d_logits.rowwise().sum();
  const Matrix d_readout = (model.out_weights.transpose() * d_logits).cwiseProduct(tape.mask_);

  std::vector<Matrix> d_fwd_in, d_bwd_in;
  lstm_sequence_backward(model.forward, tape.fwd_trace_, d_readout.topRows(H), model.readout, grads.forward, d_fwd_in);
  lstm_sequence_backward(model.backward, tape.bwd_trace_, d_readout.bottomRows(H), model.readout, grads.backward,
                         d_bwd_in);

  const std::size_t T = d_fwd_in.size();
  for (Index b = 0; b < B; ++b) {
    const auto& seq = tape.tokens_[static_cast<std::size_t>(b)];
    for (std::size_t t = 0; t < T; ++t) {
      grads.embedding.col(seq[t]) += d_fwd_in[t].col(b) + d_bwd_in[T - 1 - t].col(b);
    }
  }
}

void accumulate(SequenceClassifier& total, const SequenceClassifier& grads) {
  auto dst = total.params();
  const auto src = grads.params();
  for (std::size_t t = 0; t < dst.size(); ++t) {
    for (std::size_t k = 0; k < dst[t].size(); ++k) dst[t][k] += src[t][k];
  }
}

// ---- Perceptron -----------------------------------------------------------

Perceptron Perceptron::zeros(Index inputs, Index hidden, Index outputs) {
  return {Matrix::Zero(hidden, inputs), Vector::Zero(hidden), Matrix::Zero(outputs, hidden), Vector::Zero(outputs)};
}

Perceptron Perceptron::initialized(Index inputs, Index hidden, Index outputs, Rng& rng) {
  if (inputs < 1 || hidden < 1 || outputs < 1) throw InvalidArgument("perceptron dimensions must all be >= 1");
  Perceptron p = zeros(inputs, hidden, outputs);
  uniform_fill(p.hidden_weights, glorot_bound(inputs, hidden), rng);
  uniform_fill(p.out_weights, glorot_bound(hidden, outputs), rng);
  return p;
}

ParamList Perceptron::params() {
  return {view(hidden_weights), view(hidden_bias), view(out_weights), view(out_bias)};
}

ConstParamList Perceptron::params() const {
  return {view(hidden_weights), view(hidden_bias), view(out_weights), view(out_bias)};
}

Matrix Perceptron::predict(const Matrix& x) const {
  if (x.rows() != inputs()) throw ShapeError("perceptron input width mismatch");
  Matrix hidden = hidden_weights * x;
  hidden.colwise() += hidden_bias;
  apply_activation(hidden, Activation::kRelu);
  Matrix z = out_weights * hidden;
  z.colwise() += out_bias;
  apply_activation(z, Activation::kSigmoid);
  return z;
}

double Perceptron::loss_and_grad(const Matrix& x, const Matrix& targets, Perceptron* grads) const {
  if (x.rows() != inputs() || targets.rows() != outputs() || targets.cols() != x.cols()) {
    throw ShapeError("perceptron batch shapes mismatch");
  }
  const Index B = x.cols();
  const Index K = outputs();
  Matrix pre_hidden = hidden_weights * x;
  pre_hidden.colwise() += hidden_bias;
  const Matrix hidden = pre_hidden.cwiseMax(0.0);
  Matrix probs = out_weights * hidden;
  probs.colwise() += out_bias;
  apply_activation(probs, Activation::kSigmoid);
  const double loss = bce_sum(probs, targets) / static_cast<double>(B * K);
  if (grads != nullptr) {
    const Matrix d_logits = bce_logit_grad(probs, targets, 1.0 / static_cast<double>(B * K));
    grads->out_weights.noalias() = d_logits * hidden.transpose();
    grads->out_bias = d_logits.rowwise().sum();
    Matrix d_hidden = out_weights.transpose() * d_logits;
    d_hidden = d_hidden.cwiseProduct((pre_hidden.array() > 0.0).cast<double>().matrix());
    grads->hidden_weights.noalias() = d_hidden * x.transpose();
    grads->hidden_bias = d_hidden.rowwise().sum();
  }
  return loss;
}

}  // namespace protvec::nn
