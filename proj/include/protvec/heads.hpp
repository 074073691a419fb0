#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "protvec/container.hpp"
#include "protvec/corpus.hpp"
#include "protvec/nn.hpp"

namespace protvec {

inline constexpr std::string_view kHeadMagic = "HEAD0001";

// ---- NN head --------------------------------------------------------------

struct HeadConfig {
  std::size_t hidden = 0;  // 0 selects 2K
  std::size_t epochs = 200;
  std::size_t batch_size = 32;
  double learning_rate = 1e-2;
  std::uint64_t seed = 1;

  void validate() const;
  Json to_json() const;
  static HeadConfig from_json(const Json& j);
};

struct HeadEpoch {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double validation_loss = 0.0;  // NaN without validation data
};

/// Standardizes each input feature with train-set statistics, then applies a
/// relu / sigmoid perceptron.
struct NnHead {
  nn::Vector input_mean;
  nn::Vector input_scale;  // 1 / std, 1 for constant features
  nn::Perceptron net;
  std::vector<HeadEpoch> history;
  std::size_t best_epoch = 0;

  std::size_t inputs() const noexcept { return static_cast<std::size_t>(input_mean.size()); }
  std::size_t outputs() const noexcept { return static_cast<std::size_t>(net.outputs()); }

  /// Posteriors (K x n) for feature columns (D x n).
  nn::Matrix predict(const nn::Matrix& features) const;
  nn::Vector predict(const nn::Vector& feature) const;
};

/// Mini-batch Adam on mean BCE; keeps the epoch with the lowest validation
/// loss (the last one without validation data). Features are D x n, targets
/// K x n with 0/1 entries.
NnHead train_nn_head(const nn::Matrix& features, const nn::Matrix& targets, const nn::Matrix& validation_features,
                     const nn::Matrix& validation_targets, const HeadConfig& config);

// ---- per-term threshold rules ---------------------------------------------

enum class Direction : std::uint8_t {
  kAbove,  // positive iff score >= threshold
  kBelow,  // positive iff score < threshold
};

struct ThresholdRule {
  Direction direction = Direction::kAbove;
  double threshold = 0.5;
  double margin = 0.05;

  bool operator()(double score) const noexcept {
    return direction == Direction::kAbove ? score >= threshold : score < threshold;
  }
};

inline constexpr double kDefaultHingeScale = 0.05;

/// sum_i max(0, 1 - y_i * d * (x_i - threshold) / margin) with y_i = +-1 and
/// d = +1 for kAbove, -1 for kBelow.
double hinge_loss(const ThresholdRule& rule, std::span<const double> scores, const std::vector<bool>& labels);

/// Candidate cuts scanned on inseparable data: midpoints between consecutive
/// distinct scores plus min(0, lowest) and max(1, highest), ascending.
std::vector<double> candidate_thresholds(std::span<const double> scores);

/// Separable data: midpoint of the gap between the classes, margin half the
/// gap. Otherwise the candidate cut and direction minimizing the hinge loss
/// at margin `hinge_scale`; ties go to the lower cut, then to kAbove. All
/// scores equal: cut at that value, direction by majority label (ties
/// positive). No negatives: everything positive. Throws InvalidArgument when
/// there is no positive sample.
ThresholdRule train_threshold(std::span<const double> scores, const std::vector<bool>& labels,
                              double hinge_scale = kDefaultHingeScale);

struct GoThresholdBank {
  std::vector<ThresholdRule> rules;  // one per GO term

  std::vector<bool> apply(const nn::Vector& posteriors) const;
};

/// `scores` and `labels` are K x n; rule k is fitted on row k. Terms are
/// independent, so they are fitted in parallel.
GoThresholdBank train_go_thresholds(const nn::Matrix& scores, const nn::Matrix& labels,
                                    double hinge_scale = kDefaultHingeScale, std::size_t threads = 1,
                                    std::span<const std::string> term_names = {});

/// Predicted GO set for one protein.
LabelSet predict_terms(const NnHead& head, const GoThresholdBank& bank, const GoVocabulary& go_terms,
                       const nn::Vector& feature);
LabelSet decode_terms(const GoThresholdBank& bank, const GoVocabulary& go_terms, const nn::Vector& posteriors);

// ---- hybrid ---------------------------------------------------------------

/// f1_m1 / (f1_m1 + f1_m2). Scale-invariant in its inputs.
double compute_alpha(double f1_m1, double f1_m2);

/// alpha * z1 + (1 - alpha) * z2, elementwise.
nn::Vector hybrid_combine(const nn::Vector& z1, const nn::Vector& z2, double alpha);
nn::Matrix hybrid_combine(const nn::Matrix& z1, const nn::Matrix& z2, double alpha);

// ---- persisted predictors -------------------------------------------------

/// Head and threshold bank over one feature source.
struct HeadModel {
  GoVocabulary go_terms;
  NnHead head;
  GoThresholdBank bank;
  HeadConfig config;
  std::string feature_source;  // e.g. "protvecgen:100,120,140" or "mlda"
};

/// Two heads combined through alpha, with a bank fitted on the combined
/// validation scores.
struct HybridModel {
  GoVocabulary go_terms;
  HeadModel m1;  // ProtVecGen-Plus
  HeadModel m2;  // MLDA
  double alpha = 0.5;
  double f1_m1 = 0.0;
  double f1_m2 = 0.0;
  GoThresholdBank bank;
};

std::string encode_head(const HeadModel& m, const Json& meta = Json::object());
HeadModel decode_head(std::string_view bytes);
void save_head(const HeadModel& m, const std::filesystem::path& path, const Json& meta = Json::object());
HeadModel load_head(const std::filesystem::path& path);

std::string encode_hybrid(const HybridModel& m, const Json& meta = Json::object());
HybridModel decode_hybrid(std::string_view bytes);
void save_hybrid(const HybridModel& m, const std::filesystem::path& path, const Json& meta = Json::object());
HybridModel load_hybrid(const std::filesystem::path& path);

/// "head" or "hybrid" for a HEAD0001 file.
std::string head_file_kind(const std::filesystem::path& path);

}  // namespace protvec
