#pragma once

#include "fixtures.hpp"
#include "protvec/protsvg.hpp"

namespace fixture {

/// Untrained but randomly initialized segment model with a small vocabulary.
inline protvec::SvgModel random_svg_model(std::size_t size, const protvec::GoVocabulary& go, std::uint64_t seed,
                                          std::size_t embed = 4, std::size_t hidden = 3) {
  protvec::Rng rng(seed);
  std::vector<std::string> text;
  for (int i = 0; i < 20; ++i) text.push_back(random_protein(rng, 200));
  protvec::SvgModel m;
  m.hyperparams.segment_size = size;
  m.hyperparams.embed = embed;
  m.hyperparams.hidden = hidden;
  m.hyperparams.seed = seed;
  m.go_terms = go;
  m.vocab = protvec::build_vocab(std::span<const std::string>(text), 4, 2);
  m.network = protvec::nn::SequenceClassifier::initialized(
      {static_cast<protvec::nn::Index>(m.vocab.size()), static_cast<protvec::nn::Index>(embed),
       static_cast<protvec::nn::Index>(hidden), static_cast<protvec::nn::Index>(go.size())},
      rng);
  // Larger output weights spread the posteriors away from 0.5.
  m.network.out_weights *= 8.0;
  return m;
}

inline protvec::GoVocabulary go_terms(std::size_t K) {
  std::vector<std::string> t;
  for (std::size_t k = 0; k < K; ++k) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "GO:%07zu", k + 1);
    t.emplace_back(buf);
  }
  return protvec::GoVocabulary(t);
}

/// Small synthetic corpus with a default split.
inline protvec::Corpus small_corpus(std::size_t records, std::size_t K, std::uint64_t seed, std::size_t max_length = 300) {
  protvec::SynthSpec s;
  s.record_count = records;
  s.label_count = K;
  s.max_length = max_length;
  s.min_length = 40;
  s.seed = seed;
  auto syn = protvec::generate_synthetic(s);
  return protvec::split_corpus(std::move(syn.corpus), {}, seed);
}

}  // namespace fixture
