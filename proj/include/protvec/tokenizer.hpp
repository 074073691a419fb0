#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "protvec/segmenter.hpp"

namespace protvec {

using TokenId = std::int32_t;

/// Id reserved for padding-contaminated and out-of-vocabulary n-mers.
inline constexpr TokenId kPadToken = 0;

/// n-mer inventory. Ids are contiguous in [0, size()), id 0 being reserved.
class NmerVocabulary {
 public:
  NmerVocabulary() = default;
  /// `words` are assigned ids 1..words.size() in the given order.
  NmerVocabulary(std::size_t n, std::vector<std::string> words);

  std::size_t n() const noexcept { return n_; }
  /// Number of ids including the reserved id 0.
  std::size_t size() const noexcept { return words_.size() + 1; }
  TokenId id(std::string_view word) const;
  /// Words in id order, starting at id 1.
  const std::vector<std::string>& words() const noexcept { return words_; }

  bool operator==(const NmerVocabulary& other) const { return n_ == other.n_ && words_ == other.words_; }

 private:
  std::size_t n_ = 4;
  std::vector<std::string> words_;
  std::unordered_map<std::string, TokenId> index_;
};

/// Counts every pad-free n-mer window of the given strings and keeps those
/// seen at least `min_count` times, ordered by descending frequency then
/// lexicographically.
NmerVocabulary build_vocab(std::span<const std::string> sequences, std::size_t n = 4, std::size_t min_count = 1);
NmerVocabulary build_vocab(std::span<const Segment> segments, std::size_t n = 4, std::size_t min_count = 1);

/// Sliding window with step 1: exactly residues.size() - n + 1 ids.
std::vector<TokenId> tokenize(std::string_view residues, const NmerVocabulary& vocab);
std::vector<TokenId> tokenize_segment(const Segment& segment, const NmerVocabulary& vocab);

}  // namespace protvec
