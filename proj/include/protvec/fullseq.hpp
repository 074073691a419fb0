#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "protvec/featurize.hpp"
#include "protvec/protsvg.hpp"

namespace protvec {

inline constexpr std::string_view kFullSeqMagic = "FSEQ0001";

/// Whole-sequence classifier settings. `network.segment_size` and
/// `network.stride` are unused.
struct FullSeqConfig {
  SvgHyperparams network;
  std::size_t max_length = 1500;  // longer sequences lose their tail

  void validate() const;
  Json to_json() const;
  static FullSeqConfig from_json(const Json& j);
};

struct FullSeqModel {
  FullSeqConfig config;
  NmerVocabulary vocab;
  GoVocabulary go_terms;
  nn::SequenceClassifier network;
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;
};

/// Residues fed to the network: the first max_length residues, right-padded
/// with '-' up to the n-mer size.
std::string fullseq_input(std::string_view sequence, const FullSeqConfig& config);

FullSeqModel train_fullseq(std::span<const ProteinRecord* const> train, std::span<const ProteinRecord* const> validation,
                           const GoVocabulary& go_terms, const FullSeqConfig& config, const EpochCallback& on_epoch = {});

nn::Vector predict_fullseq(const FullSeqModel& model, const ProteinRecord& protein);

/// K posteriors per record as a feature table (source "fullseq").
FeatureMatrix fullseq_features(const FullSeqModel& model, const Corpus& corpus, std::optional<Split> split = std::nullopt,
                               std::size_t threads = 1);

std::string encode_fullseq(const FullSeqModel& model, const Json& meta = Json::object());
FullSeqModel decode_fullseq(std::string_view bytes);
void save_fullseq(const FullSeqModel& model, const std::filesystem::path& path, const Json& meta = Json::object());
FullSeqModel load_fullseq(const std::filesystem::path& path);

}  // namespace protvec
