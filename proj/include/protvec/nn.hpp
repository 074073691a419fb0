#pragma once

// Minimal differentiable kernel: embedding lookup, bi-directional LSTM,
// dense layers, dropout, binary cross-entropy, Adam and a central-difference
// gradient checker. Everything is 64-bit and deterministic given a seed.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "protvec/rng.hpp"
#include "protvec/tokenizer.hpp"

namespace protvec::nn {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kProbabilityClamp = 1e-7;

enum class Activation { kSigmoid, kRelu, kIdentity };

double sigmoid(double z);
void apply_activation(Matrix& z, Activation act);

// ---- LSTM -----------------------------------------------------------------

enum class Gate : Index { kForget = 0, kInput = 1, kCandidate = 2, kOutput = 3 };

/// Gate weights stacked as rows [forget; input; candidate; output], each block
/// H x (H + E) acting on the concatenation [h_{t-1}; x_t].
struct LstmParams {
  Matrix weights;
  Vector bias;

  LstmParams() = default;
  LstmParams(Index hidden, Index input);  // zero-filled

  Index hidden() const noexcept { return bias.size() / 4; }
  Index input() const noexcept { return weights.cols() - hidden(); }

  auto gate_weights(Gate g) { return weights.middleRows(static_cast<Index>(g) * hidden(), hidden()); }
  auto gate_weights(Gate g) const { return weights.middleRows(static_cast<Index>(g) * hidden(), hidden()); }
  auto gate_bias(Gate g) { return bias.segment(static_cast<Index>(g) * hidden(), hidden()); }
  auto gate_bias(Gate g) const { return bias.segment(static_cast<Index>(g) * hidden(), hidden()); }

  /// Throws ShapeError / NumericError on inconsistent shapes or non-finite entries.
  void validate() const;
};

/// Weights uniform in (-k, k) with k = 1/sqrt(H + E); biases zero except the
/// forget gate, which starts at +1.
LstmParams init_lstm(Index hidden, Index input, Rng& rng);

struct LstmStepState {
  Vector concat;     // [h_{t-1}; x_t]
  Vector forget;     // f_t
  Vector input;      // i_t
  Vector candidate;  // C-bar_t
  Vector output;     // o_t
  Vector cell;       // C_t
  Vector hidden;     // h_t
};

LstmStepState lstm_cell_step(const LstmParams& params, const Vector& h_prev, const Vector& c_prev,
                             const Vector& x);

/// Forward intermediates of one direction over a batch of equal-length
/// sequences; column b of every matrix belongs to sequence b.
struct LstmTrace {
  std::vector<Matrix> concat;     // (H+E) x B per step
  std::vector<Matrix> gates;      // 4H x B post-activation per step
  std::vector<Matrix> cell;       // H x B per step
  std::vector<Matrix> tanh_cell;  // H x B per step
};

enum class Readout { kFinalState, kMeanPool };

/// Runs one direction over `inputs` (one E x B matrix per step) from zero
/// state. Returns the readout (H x B). `trace` may be null for inference.
Matrix lstm_sequence_forward(const LstmParams& params, std::span<const Matrix> inputs, Readout readout,
                             LstmTrace* trace);

/// Back-propagates `d_readout` through time, accumulating into `grads` and
/// writing the gradient w.r.t. each step's input into `d_inputs`.
void lstm_sequence_backward(const LstmParams& params, const LstmTrace& trace, const Matrix& d_readout,
                            Readout readout, LstmParams& grads, std::vector<Matrix>& d_inputs);

/// [forward readout ; backward readout] of a single sequence, the backward
/// direction reading the reversed sequence.
Vector bilstm_forward(const LstmParams& fwd, const LstmParams& bwd, std::span<const Vector> embeddings,
                      Readout readout = Readout::kFinalState);

// ---- dense, loss, dropout -------------------------------------------------

/// act(W x + b) with W of shape out x in.
Vector dense_forward(const Matrix& weights, const Vector& bias, const Vector& x, Activation act);

/// Mean over entries of -[y ln p + (1-y) ln(1-p)], p clamped to [1e-7, 1-1e-7].
double bce_loss(const Vector& predictions, const Vector& targets);

/// Inverted dropout: zero with probability `rate`, survivors scaled by 1/(1-rate).
Vector dropout_mask(Index size, double rate, Rng& rng);
Matrix dropout_mask(Index rows, Index cols, double rate, Rng& rng);

// ---- parameter lists and Adam ---------------------------------------------

using ParamList = std::vector<std::span<double>>;
using ConstParamList = std::vector<std::span<const double>>;

std::span<double> view(Matrix& m);
std::span<const double> view(const Matrix& m);
std::span<double> view(Vector& v);
std::span<const double> view(const Vector& v);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam update of one tensor at step `t` (t >= 1).
void adam_step(std::span<double> params, std::span<const double> grads, std::span<double> first_moment,
               std::span<double> second_moment, long t, const AdamConfig& config);

/// Moment buffers for a whole parameter list.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}
  void step(const ParamList& params, const ConstParamList& grads);
  long steps() const noexcept { return t_; }

 private:
  AdamConfig config_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

// ---- gradient checking ----------------------------------------------------

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t worst_tensor = 0;
  std::size_t worst_index = 0;
};

/// Relative error |a - n| / max(|a|, |n|, floor).
double relative_error(double analytic, double numeric, double floor = 1e-6);

/// Compares `analytic` with central differences of `loss` over every entry
/// of `params`; params are restored afterwards.
GradCheckReport check_gradients(const std::function<double()>& loss, const ParamList& params,
                                const ConstParamList& analytic, double step = 1e-5);

// ---- embedding -> Bi-LSTM -> dense sigmoid --------------------------------

struct ClassifierShape {
  Index vocab = 1;
  Index embed = 32;
  Index hidden = 70;
  Index outputs = 1;
};

/// The segment-vector network: token ids are embedded, read by a Bi-LSTM,
/// and the 2H readout is mapped to K sigmoid posteriors.
struct SequenceClassifier {
  Matrix embedding;  // E x V, column v is the vector of token v
  LstmParams forward;
  LstmParams backward;
  Matrix out_weights;  // K x 2H
  Vector out_bias;     // K
  Readout readout = Readout::kFinalState;

  static SequenceClassifier zeros(const ClassifierShape& shape);
  static SequenceClassifier initialized(const ClassifierShape& shape, Rng& rng);

  ClassifierShape shape() const;
  ParamList params();
  ConstParamList params() const;

  /// Posteriors for each sequence of a batch (K x B); sequences may differ in length.
  Matrix predict(std::span<const std::vector<TokenId>> batch) const;
  Vector predict(std::span<const TokenId> tokens) const;
};

/// Recorded forward pass of one equal-length batch.
class Tape {
 public:
  double loss() const noexcept { return loss_; }
  const Matrix& probabilities() const noexcept { return probs_; }
  bool consumed() const noexcept { return consumed_; }

 private:
  friend Tape forward_train(const SequenceClassifier&, std::span<const std::vector<TokenId>>, const Matrix&,
                            double, Rng&, double);
  friend void backward_accumulate(const SequenceClassifier&, Tape&, SequenceClassifier&);

  std::vector<std::vector<TokenId>> tokens_;  // per sample
  LstmTrace fwd_trace_, bwd_trace_;
  Matrix readout_;  // 2H x B before dropout
  Matrix mask_;     // 2H x B
  Matrix probs_;    // K x B
  Matrix targets_;  // K x B
  double loss_scale_ = 1.0;
  double loss_ = 0.0;
  bool consumed_ = false;
};

/// Forward pass in training mode over sequences of equal length. The loss is
/// loss_scale times the batch mean of per-sample BCE.
Tape forward_train(const SequenceClassifier& model, std::span<const std::vector<TokenId>> batch,
                   const Matrix& targets, double dropout, Rng& rng, double loss_scale = 1.0);

/// Exact reverse-mode gradients of the tape's loss; a tape is single-use.
SequenceClassifier backward(const SequenceClassifier& model, Tape& tape);
/// As backward(), adding into an existing gradient buffer shaped like `model`.
void backward_accumulate(const SequenceClassifier& model, Tape& tape, SequenceClassifier& grads);
void set_zero(SequenceClassifier& grads);

void accumulate(SequenceClassifier& total, const SequenceClassifier& grads);

// ---- two-layer perceptron -------------------------------------------------

/// relu hidden layer followed by a sigmoid output layer.
struct Perceptron {
  Matrix hidden_weights;  // D_h x D_in
  Vector hidden_bias;
  Matrix out_weights;  // K x D_h
  Vector out_bias;

  static Perceptron zeros(Index inputs, Index hidden, Index outputs);
  static Perceptron initialized(Index inputs, Index hidden, Index outputs, Rng& rng);

  Index inputs() const noexcept { return hidden_weights.cols(); }
  Index outputs() const noexcept { return out_bias.size(); }
  ParamList params();
  ConstParamList params() const;

  /// Posteriors for each column of `x` (D_in x B).
  Matrix predict(const Matrix& x) const;
  /// Batch-mean BCE of (x, targets); fills `grads` when non-null.
  double loss_and_grad(const Matrix& x, const Matrix& targets, Perceptron* grads) const;
};

}  // namespace protvec::nn
