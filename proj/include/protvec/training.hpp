#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "protvec/nn.hpp"

namespace protvec {

struct SequenceExample {
  std::vector<TokenId> tokens;
  nn::Vector target;  // one-hot K-vector
};

struct TrainSchedule {
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  double dropout = 0.3;
  std::uint64_t seed = 1;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double validation_loss = 0.0;  // NaN without validation data
};

struct TrainedClassifier {
  nn::SequenceClassifier network;
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Mini-batch Adam on mean BCE. Examples in a batch are grouped by token
/// length so unequal sequences share one update. Returns the parameters of
/// the epoch with the lowest validation loss (the last epoch when no
/// validation examples are given).
TrainedClassifier train_sequence_classifier(nn::SequenceClassifier network, std::span<const SequenceExample> train,
                                            std::span<const SequenceExample> validation,
                                            const TrainSchedule& schedule, const EpochCallback& on_epoch = {});

/// Mean per-example BCE without dropout.
double mean_bce(const nn::SequenceClassifier& network, std::span<const SequenceExample> examples);

}  // namespace protvec
