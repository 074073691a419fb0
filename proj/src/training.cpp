#include "protvec/training.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "protvec/error.hpp"

namespace protvec {

double mean_bce(const nn::SequenceClassifier& network, std::span<const SequenceExample> examples) {
  if (examples.empty()) return std::numeric_limits<double>::quiet_NaN();
  constexpr std::size_t kChunk = 512;
  double total = 0.0;
  std::vector<std::vector<TokenId>> batch;
  for (std::size_t lo = 0; lo < examples.size(); lo += kChunk) {
    const std::size_t hi = std::min(examples.size(), lo + kChunk);
    batch.clear();
    for (std::size_t k = lo; k < hi; ++k) batch.push_back(examples[k].tokens);
    const nn::Matrix probs = network.predict(batch);
    for (std::size_t k = lo; k < hi; ++k) {
      total += nn::bce_loss(probs.col(static_cast<nn::Index>(k - lo)), examples[k].target);
    }
  }
  return total / static_cast<double>(examples.size());
}

TrainedClassifier train_sequence_classifier(nn::SequenceClassifier network, std::span<const SequenceExample> train,
                                            std::span<const SequenceExample> validation,
                                            const TrainSchedule& schedule, const EpochCallback& on_epoch) {
  if (train.empty()) throw InvalidArgument("no training examples");
  if (schedule.epochs == 0 || schedule.batch_size == 0) throw InvalidArgument("epochs and batch size must be >= 1");
  const auto K = network.out_bias.size();
  for (const auto& ex : train) {
    if (ex.target.size() != K) throw ShapeError("training target length differs from the output size");
  }

  Rng rng(schedule.seed);
  nn::Adam adam({schedule.learning_rate});
  nn::SequenceClassifier grads = nn::SequenceClassifier::zeros(network.shape());
  grads.readout = network.readout;

  TrainedClassifier result;
  result.network = network;
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= schedule.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double epoch_loss = 0.0;
    for (std::size_t lo = 0; lo < order.size(); lo += schedule.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + schedule.batch_size);
      const double batch = static_cast<double>(hi - lo);
      std::map<std::size_t, std::vector<std::size_t>> groups;
      for (std::size_t k = lo; k < hi; ++k) groups[train[order[k]].tokens.size()].push_back(order[k]);

      nn::set_zero(grads);
      double batch_loss = 0.0;
      for (const auto& [len, members] : groups) {
        std::vector<std::vector<TokenId>> tokens;
        nn::Matrix targets(K, static_cast<nn::Index>(members.size()));
        for (std::size_t m = 0; m < members.size(); ++m) {
          tokens.push_back(train[members[m]].tokens);
          targets.col(static_cast<nn::Index>(m)) = train[members[m]].target;
        }
        nn::Tape tape = nn::forward_train(network, tokens, targets, schedule.dropout, rng,
                                          static_cast<double>(members.size()) / batch);
        batch_loss += tape.loss();
        nn::backward_accumulate(network, tape, grads);
      }
      adam.step(network.params(), std::as_const(grads).params());
      epoch_loss += batch_loss * batch;
    }

    EpochStats stats{epoch, epoch_loss / static_cast<double>(train.size()), mean_bce(network, validation)};
    if (!std::isfinite(stats.train_loss)) throw NumericError("training diverged (non-finite loss)");
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);

    const bool has_validation = !validation.empty();
    if (!has_validation || stats.validation_loss < best) {
      best = has_validation ? stats.validation_loss : best;
      result.network = network;
      result.best_epoch = epoch;
    }
  }
  return result;
}

}  // namespace protvec
