#include <doctest.h>

#include "models.hpp"
#include "protvec/container.hpp"
#include "protvec/error.hpp"
#include "protvec/fullseq.hpp"

using namespace protvec;

namespace {

FullSeqConfig tiny_config() {
  FullSeqConfig cfg;
  cfg.network.embed = 3;
  cfg.network.hidden = 3;
  cfg.network.epochs = 2;
  cfg.network.batch_size = 8;
  return cfg;
}

}  // namespace

TEST_SUITE("baseline-fullseq") {

TEST_CASE("input keeps short proteins and truncates the tail beyond the cap") {
  FullSeqConfig cfg;
  Rng rng(1);
  const std::string s = fixture::random_protein(rng, 700);
  CHECK(fullseq_input(s, cfg) == s);
  const std::string longer = fixture::random_protein(rng, 2000);
  CHECK(fullseq_input(longer, cfg) == longer.substr(0, 1500));
  const std::vector<std::string> text{s};
  const auto vocab = build_vocab(std::span<const std::string>(text), 4);
  CHECK(tokenize(fullseq_input(s, cfg), vocab).size() == s.size() - 3);
}

TEST_CASE("config validation") {
  FullSeqConfig cfg;
  cfg.max_length = 3;
  CHECK_THROWS_AS(cfg.validate(), InvalidArgument);
  cfg = {};
  CHECK(FullSeqConfig::from_json(cfg.to_json()).to_json() == cfg.to_json());
}

TEST_CASE("training is deterministic and files round trip") {
  fixture::TempDir dir("fseq");
  const Corpus c = fixture::small_corpus(30, 3, 2, 200);
  const auto cfg = tiny_config();
  const auto a = train_fullseq(c.subset(Split::kTrain), c.subset(Split::kValidation), c.vocabulary, cfg);
  const auto b = train_fullseq(c.subset(Split::kTrain), c.subset(Split::kValidation), c.vocabulary, cfg);
  CHECK(encode_fullseq(a) == encode_fullseq(b));
  save_fullseq(a, dir / "m.fseq");
  const auto back = load_fullseq(dir / "m.fseq");
  CHECK(encode_fullseq(back) == read_file(dir / "m.fseq"));
  for (const auto& r : c.records) {
    const nn::Vector p = predict_fullseq(back, r);
    CHECK(p == predict_fullseq(a, r));
    CHECK(p.size() == 3);
  }
  const auto f = fullseq_features(a, c, std::nullopt, 3);
  CHECK(f.source == "fullseq");
  CHECK(f.dims() == 3);
  CHECK(f.values.row(0).transpose() == predict_fullseq(a, c.records[0]));
  CHECK_THROWS_AS(train_fullseq(c.subset(Split::kTrain), c.subset(Split::kValidation), GoVocabulary{}, cfg),
                  InvalidArgument);
}

}  // TEST_SUITE
