#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "protvec/corpus.hpp"
#include "protvec/featurize.hpp"
#include "protvec/fullseq.hpp"
#include "protvec/heads.hpp"
#include "protvec/metrics.hpp"
#include "protvec/mlda.hpp"
#include "protvec/protsvg.hpp"

namespace protvec {

// ---- run configuration ----------------------------------------------------

struct MldaSettings {
  std::size_t nmer = 3;
  std::size_t max_terms = 4000;
  double epsilon = 1e-6;
};

/// Every tunable of a run. Loaded from flat "key = value" text; see
/// config_keys() for the accepted keys.
struct RunConfig {
  std::uint64_t seed = 1;
  std::size_t threads = 0;  // 0 defers to PVG_THREADS
  std::filesystem::path work_dir = "run";

  SynthSpec synth;
  SplitFractions fractions;
  std::size_t min_annotations = 200;

  std::vector<std::size_t> segment_sizes{100, 120, 140};
  SvgHyperparams svg;  // segment_size and seed are set per stage
  std::size_t fullseq_max_length = 1500;
  HeadConfig head;
  MldaSettings mlda;
  double hinge_scale = kDefaultHingeScale;
  std::vector<std::size_t> bucket_edges{kDefaultBucketEdges.begin(), kDefaultBucketEdges.end()};

  /// Sets one key; throws InvalidArgument for unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  void validate() const;
};

/// Recognized configuration keys, in documentation order.
const std::vector<std::string>& config_keys();

/// Parses "key = value" lines; '#' starts a comment, blank lines are ignored.
std::map<std::string, std::string> parse_config_text(std::string_view text);
RunConfig load_config(const std::filesystem::path& path, RunConfig base = {});

/// Per-stage seeds derived from the run seed and a stage name.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage);

SvgHyperparams svg_hyperparams(const RunConfig& cfg, std::size_t segment_size);
FullSeqConfig fullseq_config(const RunConfig& cfg);
HeadConfig head_config(const RunConfig& cfg, std::string_view stage);

/// Non-fatal configuration diagnostics (e.g. segments shorter than the stride).
std::vector<std::string> config_warnings(const RunConfig& cfg);

// ---- shared fitting helpers -----------------------------------------------

/// One-hot targets (K x n) for records, in order.
nn::Matrix label_matrix(std::span<const ProteinRecord* const> records, const GoVocabulary& go_terms);
std::vector<std::string> record_ids(std::span<const ProteinRecord* const> records);

/// Trains a head on the train-split rows of `features` (validation rows drive
/// epoch selection) and fits the threshold bank on train-split posteriors.
HeadModel fit_head_model(const FeatureMatrix& features, const Corpus& corpus, const HeadConfig& config,
                         double hinge_scale, std::size_t threads, std::string feature_source);

/// Predicted GO sets for the given records.
std::vector<LabelSet> predict_sets(const HeadModel& model, const FeatureMatrix& features,
                                   std::span<const ProteinRecord* const> records);
std::vector<LabelSet> predict_sets(const HybridModel& model, const FeatureMatrix& features_m1,
                                   const FeatureMatrix& features_m2, std::span<const ProteinRecord* const> records);

std::vector<LabelPair> label_pairs(std::span<const ProteinRecord* const> records, const std::vector<LabelSet>& predicted);

/// Validation avg-F1 of both heads, alpha, and a threshold bank on combined
/// validation posteriors.
HybridModel fit_hybrid(HeadModel m1, HeadModel m2, const FeatureMatrix& features_m1, const FeatureMatrix& features_m2,
                       const Corpus& corpus, double hinge_scale, std::size_t threads);

/// tf-idf + MLDA fitted on the train split; projected features for every record.
FeatureMatrix mlda_features(const MldaPipeline& pipeline, const Corpus& corpus);

// ---- in-memory benchmark --------------------------------------------------

struct MethodResult {
  std::string name;
  MetricsSummary test;
  MetricsSummary long_bucket;  // test samples above the long-length edge
  MetricsSummary validation;
};

struct BenchmarkConfig {
  RunConfig run;
  std::size_t single_size = 120;
  std::size_t long_edge = 600;
};

struct BenchmarkResult {
  std::vector<MethodResult> methods;
  double alpha = 0.0;
  double cpu_seconds = 0.0;

  const MethodResult& method(const std::string& name) const;
};

using LogFn = std::function<void(const std::string&)>;

/// Full synthetic comparison for one seed: ProtVecGen heads at each segment
/// size, ProtVecGen-Plus, the whole-sequence baseline, MLDA and the hybrid.
BenchmarkResult run_benchmark(const BenchmarkConfig& config, const LogFn& log = {});

}  // namespace protvec
