#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "protvec/container.hpp"
#include "protvec/corpus.hpp"
#include "protvec/nn.hpp"
#include "protvec/segmenter.hpp"
#include "protvec/tokenizer.hpp"
#include "protvec/training.hpp"

namespace protvec {

inline constexpr std::string_view kSvgMagic = "PSVG0001";

struct SvgHyperparams {
  std::size_t segment_size = 120;
  std::size_t stride = kDefaultStride;
  std::size_t nmer = 4;
  std::size_t min_count = 1;
  std::size_t embed = 32;
  std::size_t hidden = 70;
  double dropout = 0.3;
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  nn::Readout readout = nn::Readout::kFinalState;

  void validate() const;
  Json to_json() const;
  static SvgHyperparams from_json(const Json& j);
};

/// Trained segment-vector generator.
struct SvgModel {
  SvgHyperparams hyperparams;
  NmerVocabulary vocab;
  GoVocabulary go_terms;
  nn::SequenceClassifier network;
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;

  std::size_t segment_size() const noexcept { return hyperparams.segment_size; }
  std::size_t label_count() const noexcept { return go_terms.size(); }
  /// Hash of every parameter bit; changes iff the network changes.
  std::uint64_t parameter_fingerprint() const;
};

/// Builds the n-mer vocabulary from `train` and fits the network on
/// (segment, inherited label set) pairs. `validation` segments come from
/// held-out proteins and drive best-epoch selection.
SvgModel train_svg(std::span<const Segment> train, std::span<const Segment> validation, const GoVocabulary& go_terms,
                   const SvgHyperparams& hyperparams, const EpochCallback& on_epoch = {});

/// Segments every record of a split at the configured size.
std::vector<Segment> segment_records(std::span<const ProteinRecord* const> records, std::size_t size,
                                     std::size_t stride = kDefaultStride);

/// Posterior K-vector of one segment (no dropout).
nn::Vector segment_vector(const SvgModel& model, const Segment& segment);
/// Posteriors for many segments; column j belongs to segments[j].
nn::Matrix segment_vectors(const SvgModel& model, std::span<const Segment> segments);

/// `meta` is stored verbatim under the header key "meta".
void save_model(const SvgModel& model, const std::filesystem::path& path, const Json& meta = Json::object());
SvgModel load_model(const std::filesystem::path& path);
std::string encode_model(const SvgModel& model, const Json& meta = Json::object());
SvgModel decode_model(std::string_view bytes);

// Shared with the full-sequence baseline.
Json history_to_json(const std::vector<EpochStats>& history);
std::vector<EpochStats> history_from_json(const Json& j);
void write_network(TensorWriter& w, const nn::SequenceClassifier& network);
nn::SequenceClassifier read_network(TensorReader& r, const nn::ClassifierShape& shape);

}  // namespace protvec
