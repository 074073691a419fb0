#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "protvec/container.hpp"
#include "protvec/corpus.hpp"
#include "protvec/protsvg.hpp"

namespace protvec {

inline constexpr std::string_view kFeatureMagic = "PVGF0001";

inline constexpr std::size_t kDefaultPlusSizesArray[] = {100, 120, 140};
inline constexpr std::span<const std::size_t> kDefaultPlusSizes{kDefaultPlusSizesArray};

struct ProteinFeature {
  std::string protein_id;
  std::size_t segment_size = 0;
  nn::Vector values;  // K mean posteriors
};

struct MultiFeature {
  std::string protein_id;
  std::vector<std::size_t> segment_sizes;  // ascending, one K-block each
  nn::Vector values;
};

/// Mean of the segment vectors of `protein` at the model's segment size.
ProteinFeature protvecgen(const SvgModel& model, const ProteinRecord& protein);

/// Per-size features concatenated in ascending size order. Every model must
/// share one GO vocabulary. When `required_sizes` is non-empty the model
/// sizes must match it exactly.
MultiFeature protvecgen_plus(std::span<const SvgModel* const> models, const ProteinRecord& protein,
                             std::span<const std::size_t> required_sizes = kDefaultPlusSizes);


/// Row-per-protein feature table.
struct FeatureMatrix {
  std::vector<std::string> ids;
  std::size_t label_count = 0;             // K of the label space
  std::vector<std::size_t> block_sizes;    // segment size per K-block; empty when not segment-based
  std::string source;                      // "protvecgen", "fullseq", "mlda", ...
  nn::Matrix values;                       // ids.size() x dims

  std::size_t dims() const noexcept { return static_cast<std::size_t>(values.cols()); }
  std::optional<std::size_t> row(const std::string& id) const;
};

/// Features for the records of `corpus` (optionally one split), in corpus order.
FeatureMatrix featurize_corpus(std::span<const SvgModel* const> models, const Corpus& corpus,
                               std::optional<Split> split = std::nullopt, std::size_t threads = 1,
                               std::span<const std::size_t> required_sizes = {});

void save_features(const FeatureMatrix& features, const std::filesystem::path& path, const Json& meta = Json::object());
FeatureMatrix load_features(const std::filesystem::path& path);
std::string encode_features(const FeatureMatrix& features, const Json& meta = Json::object());
FeatureMatrix decode_features(std::string_view bytes);

/// Rows of `features` for the given record ids, in that order (D x n, one column per id).
nn::Matrix gather_columns(const FeatureMatrix& features, std::span<const std::string> ids);

}  // namespace protvec
