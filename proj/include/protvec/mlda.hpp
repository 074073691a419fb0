#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "protvec/container.hpp"
#include "protvec/corpus.hpp"
#include "protvec/nn.hpp"

namespace protvec {

inline constexpr std::string_view kMldaMagic = "MLDA0001";

// ---- tf-idf over n-mers ---------------------------------------------------

struct TfidfModel {
  std::size_t n = 3;
  std::vector<std::string> terms;        // feature order
  std::vector<std::size_t> doc_freq;     // parallel to terms
  std::size_t doc_count = 0;
  std::unordered_map<std::string, std::size_t> index;  // term -> position; see reindex()

  std::size_t dims() const noexcept { return terms.size(); }
  /// Rebuilds `index` from `terms`.
  void reindex();
};

/// Document frequencies over `train`. When more than `max_terms` distinct
/// n-mers occur, the most frequent (by document frequency, ties
/// lexicographic) are kept. max_terms = 0 keeps everything.
TfidfModel tfidf_fit(std::span<const ProteinRecord* const> train, std::size_t n = 3, std::size_t max_terms = 4000);

/// count(t) * ln(N / df(t)) per stored term, then L2-normalized. Unknown
/// n-mers are ignored; an all-zero vector stays zero.
nn::Vector tfidf_transform(const TfidfModel& model, std::string_view sequence);
/// One column per record.
nn::Matrix tfidf_transform(const TfidfModel& model, std::span<const ProteinRecord* const> records);

// ---- multi-label LDA ------------------------------------------------------

/// Class statistics of a multi-label sample: a sample contributes to the
/// mean and scatter of every class it carries.
struct MldaScatter {
  nn::Matrix class_means;  // d x K
  nn::Vector global_mean;  // d
  nn::Vector class_counts; // K, sum_i y_ik
  nn::Matrix between;      // d x d
  nn::Matrix within;       // d x d
};

/// `features` is n x d (row per sample), `labels` n x K with 0/1 entries.
MldaScatter mlda_scatter(const nn::Matrix& features, const nn::Matrix& labels);

/// S_w + epsilon * (tr(S_w) / d) * I.
nn::Matrix regularized_within(const nn::Matrix& within, double epsilon = 1e-6);

struct MldaModel {
  nn::Matrix projection;   // d x (K-1), unit columns
  nn::Matrix class_means;  // d x K
  nn::Vector global_mean;
  nn::Vector eigenvalues;  // descending
  double epsilon = 1e-6;

  std::size_t input_dims() const noexcept { return static_cast<std::size_t>(projection.rows()); }
  std::size_t output_dims() const noexcept { return static_cast<std::size_t>(projection.cols()); }
};

/// Top K-1 solutions of S_b u = lambda S_w^reg u. Throws DataError naming the
/// term when a class has no positive sample (`term_names` may be empty).
MldaModel mlda_fit(const nn::Matrix& features, const nn::Matrix& labels, double epsilon = 1e-6,
                   std::span<const std::string> term_names = {});

/// y = U^T x.
nn::Vector mlda_transform(const MldaModel& model, const nn::Vector& x);
/// Columns of `x` (d x n) projected to (K-1) x n.
nn::Matrix mlda_transform(const MldaModel& model, const nn::Matrix& x);

/// tf-idf model plus projection, with the label space they were fitted on.
struct MldaPipeline {
  TfidfModel tfidf;
  MldaModel mlda;
  GoVocabulary go_terms;

  /// (K-1) x n projected features of `records`.
  nn::Matrix features(std::span<const ProteinRecord* const> records) const;
};

MldaPipeline fit_mlda_pipeline(std::span<const ProteinRecord* const> train, const GoVocabulary& go_terms,
                               std::size_t n = 3, std::size_t max_terms = 4000, double epsilon = 1e-6);

std::string encode_mlda(const MldaPipeline& p, const Json& meta = Json::object());
MldaPipeline decode_mlda(std::string_view bytes);
void save_mlda(const MldaPipeline& p, const std::filesystem::path& path, const Json& meta = Json::object());
MldaPipeline load_mlda(const std::filesystem::path& path);

}  // namespace protvec
