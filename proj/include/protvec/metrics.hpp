#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "protvec/container.hpp"
#include "protvec/corpus.hpp"

namespace protvec {

struct LabelPair {
  LabelSet truth;      // Y_i, non-empty
  LabelSet predicted;  // Z_i
};

struct SampleScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Per-sample example-based scores; precision is 0 for an empty prediction.
SampleScores score_sample(const LabelSet& truth, const LabelSet& predicted);

struct MetricsSummary {
  std::size_t count = 0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

/// Means of the per-sample scores. Throws InvalidArgument on an empty list or
/// an empty truth set.
MetricsSummary compute_metrics(std::span<const LabelPair> pairs);

inline constexpr std::size_t kDefaultBucketEdgesArray[] = {100, 200, 300, 500, 700, 1000, 1300, 1600};
inline constexpr std::span<const std::size_t> kDefaultBucketEdges{kDefaultBucketEdgesArray};

struct BucketReport {
  std::size_t lower = 0;                // exclusive
  std::optional<std::size_t> upper;     // inclusive; none for the open tail
  MetricsSummary metrics;               // zero count when the bucket is empty

  std::string label() const;  // "(0,100]" or "(1600,inf)"
};

/// Buckets (0, e_0], (e_0, e_1], ..., (e_last, inf). Every sample lands in
/// exactly one bucket; empty buckets are reported with count 0.
std::vector<BucketReport> bucketize(std::span<const LabelPair> pairs, std::span<const std::size_t> lengths,
                                    std::span<const std::size_t> edges = kDefaultBucketEdges);

struct MetricsReport {
  std::string name;
  MetricsSummary overall;
  std::vector<BucketReport> buckets;
};

MetricsReport make_report(std::string name, std::span<const LabelPair> pairs, std::span<const std::size_t> lengths,
                          std::span<const std::size_t> edges = kDefaultBucketEdges);

Json report_to_json(const MetricsReport& report);
/// Aligned columns: bucket, n, precision, recall, F1.
void write_report_table(std::ostream& out, const MetricsReport& report);
void write_report_csv(std::ostream& out, const MetricsReport& report);

}  // namespace protvec
