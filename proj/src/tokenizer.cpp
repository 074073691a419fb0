#include "protvec/tokenizer.hpp"

#include <algorithm>
#include <map>

#include "protvec/error.hpp"

namespace protvec {

NmerVocabulary::NmerVocabulary(std::size_t n, std::vector<std::string> words) : n_(n), words_(std::move(words)) {
  if (n_ == 0) throw InvalidArgument("n-mer size must be >= 1");
  index_.reserve(words_.size());
  for (std::size_t i = 0; i < words_.size(); ++i) {
    if (words_[i].size() != n_ || words_[i].find(kPadSymbol) != std::string::npos) {
      throw InvalidArgument("vocabulary word '" + words_[i] + "' is not a pad-free " + std::to_string(n_) + "-mer");
    }
    if (!index_.emplace(words_[i], static_cast<TokenId>(i + 1)).second) {
      throw InvalidArgument("duplicate vocabulary word '" + words_[i] + "'");
    }
  }
}

TokenId NmerVocabulary::id(std::string_view word) const {
  auto it = index_.find(std::string(word));
  return it == index_.end() ? kPadToken : it->second;
}

namespace {

NmerVocabulary from_counts(const std::unordered_map<std::string, std::size_t>& counts, std::size_t n,
                           std::size_t min_count) {
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (const auto& [word, c] : counts) {
    if (c >= min_count) kept.emplace_back(word, c);
  }
  std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  std::vector<std::string> words;
  words.reserve(kept.size());
  for (auto& [w, c] : kept) words.push_back(std::move(w));
  return NmerVocabulary(n, std::move(words));
}

void count_windows(std::string_view s, std::size_t n, std::unordered_map<std::string, std::size_t>& counts) {
  if (s.size() < n) return;
  for (std::size_t p = 0; p + n <= s.size(); ++p) {
    const auto w = s.substr(p, n);
    if (w.find(kPadSymbol) == std::string_view::npos) ++counts[std::string(w)];
  }
}

}  // namespace

NmerVocabulary build_vocab(std::span<const std::string> sequences, std::size_t n, std::size_t min_count) {
  if (sequences.empty()) throw InvalidArgument("cannot build a vocabulary from no sequences");
  if (n == 0) throw InvalidArgument("n-mer size must be >= 1");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& s : sequences) count_windows(s, n, counts);
  return from_counts(counts, n, std::max<std::size_t>(min_count, 1));
}

NmerVocabulary build_vocab(std::span<const Segment> segments, std::size_t n, std::size_t min_count) {
  if (segments.empty()) throw InvalidArgument("cannot build a vocabulary from no segments");
  if (n == 0) throw InvalidArgument("n-mer size must be >= 1");
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& s : segments) count_windows(s.residues, n, counts);
  return from_counts(counts, n, std::max<std::size_t>(min_count, 1));
}

std::vector<TokenId> tokenize(std::string_view residues, const NmerVocabulary& vocab) {
  const std::size_t n = vocab.n();
  if (residues.size() < n) {
    throw InvalidArgument("sequence of length " + std::to_string(residues.size()) + " is shorter than n = " +
                          std::to_string(n));
  }
  std::vector<TokenId> ids(residues.size() - n + 1);
  for (std::size_t p = 0; p < ids.size(); ++p) {
    const auto w = residues.substr(p, n);
    ids[p] = w.find(kPadSymbol) == std::string_view::npos ? vocab.id(w) : kPadToken;
  }
  return ids;
}

std::vector<TokenId> tokenize_segment(const Segment& segment, const NmerVocabulary& vocab) {
  return tokenize(segment.residues, vocab);
}

}  // namespace protvec
