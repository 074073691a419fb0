#include "protvec/fullseq.hpp"

#include <algorithm>

#include "protvec/error.hpp"
#include "protvec/hash.hpp"
#include "protvec/parallel.hpp"

namespace protvec {

void FullSeqConfig::validate() const {
  if (max_length < kMinSegmentSize) throw InvalidArgument("full-sequence length cap must be >= 4");
  SvgHyperparams h = network;
  h.segment_size = std::max(h.nmer, kMinSegmentSize);
  h.validate();
}

Json FullSeqConfig::to_json() const { return {{"network", network.to_json()}, {"max_length", max_length}}; }

FullSeqConfig FullSeqConfig::from_json(const Json& j) {
  FullSeqConfig c;
  c.network = SvgHyperparams::from_json(j.at("network"));
  c.max_length = j.at("max_length");
  return c;
}

std::string fullseq_input(std::string_view sequence, const FullSeqConfig& config) {
  if (sequence.empty()) throw InvalidArgument("empty sequence");
  std::string s(sequence.substr(0, config.max_length));
  if (s.size() < config.network.nmer) s.resize(config.network.nmer, kPadSymbol);
  return s;
}

FullSeqModel train_fullseq(std::span<const ProteinRecord* const> train, std::span<const ProteinRecord* const> validation,
                           const GoVocabulary& go_terms, const FullSeqConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (go_terms.empty()) throw InvalidArgument("cannot train with K = 0 GO terms");
  if (train.empty()) throw InvalidArgument("no training sequences");
  const SvgHyperparams& hp = config.network;

  FullSeqModel model;
  model.config = config;
  model.go_terms = go_terms;
  std::vector<std::string> inputs;
  inputs.reserve(train.size());
  for (const ProteinRecord* r : train) inputs.push_back(fullseq_input(r->sequence, config));
  model.vocab = build_vocab(inputs, hp.nmer, hp.min_count);

  const auto to_examples = [&](std::span<const ProteinRecord* const> records) {
    std::vector<SequenceExample> out;
    out.reserve(records.size());
    for (const ProteinRecord* r : records) {
      const auto y = go_terms.one_hot(r->labels);
      out.push_back({tokenize(fullseq_input(r->sequence, config), model.vocab),
                     Eigen::Map<const nn::Vector>(y.data(), static_cast<nn::Index>(y.size()))});
    }
    return out;
  };
  const auto train_examples = to_examples(train);
  const auto validation_examples = to_examples(validation);

  Rng init_rng(hp.seed);
  const nn::ClassifierShape shape{static_cast<nn::Index>(model.vocab.size()), static_cast<nn::Index>(hp.embed),
                                  static_cast<nn::Index>(hp.hidden), static_cast<nn::Index>(go_terms.size())};
  auto network = nn::SequenceClassifier::initialized(shape, init_rng);
  network.readout = hp.readout;
  const TrainSchedule schedule{hp.epochs, hp.batch_size, hp.learning_rate, hp.dropout, init_rng.next_u64()};
  auto trained = train_sequence_classifier(std::move(network), train_examples, validation_examples, schedule, on_epoch);
  model.network = std::move(trained.network);
  model.history = std::move(trained.history);
  model.best_epoch = trained.best_epoch;
  return model;
}

nn::Vector predict_fullseq(const FullSeqModel& model, const ProteinRecord& protein) {
  return model.network.predict(tokenize(fullseq_input(protein.sequence, model.config), model.vocab));
}

FeatureMatrix fullseq_features(const FullSeqModel& model, const Corpus& corpus, std::optional<Split> split,
                               std::size_t threads) {
  std::vector<const ProteinRecord*> records;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!split || corpus.splits.at(i) == *split) records.push_back(&corpus.records[i]);
  }
  FeatureMatrix out;
  out.label_count = model.go_terms.size();
  out.source = "fullseq";
  out.values.resize(static_cast<nn::Index>(records.size()), static_cast<nn::Index>(out.label_count));
  for (const auto* r : records) out.ids.push_back(r->id);
  parallel_for(records.size(), resolve_threads(threads), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      out.values.row(static_cast<nn::Index>(i)) = predict_fullseq(model, *records[i]).transpose();
    }
  });
  return out;
}

std::string encode_fullseq(const FullSeqModel& model, const Json& meta) {
  TensorWriter w;
  write_network(w, model.network);
  const auto shape = model.network.shape();
  Json header;
  header["kind"] = "full-sequence-classifier";
  header["config"] = model.config.to_json();
  header["nmer_vocab"] = model.vocab.words();
  header["go_terms"] = model.go_terms.terms();
  header["go_fingerprint"] = hex64(model.go_terms.fingerprint());
  header["shape"] = {{"vocab", shape.vocab}, {"embed", shape.embed}, {"hidden", shape.hidden}, {"outputs", shape.outputs}};
  header["history"] = history_to_json(model.history);
  header["best_epoch"] = model.best_epoch;
  header["meta"] = meta;
  header["tensors"] = w.shapes();
  return encode_container(kFullSeqMagic, std::move(header), w.payload());
}

FullSeqModel decode_fullseq(std::string_view bytes) {
  const Container c = decode_container(bytes, kFullSeqMagic);
  const Json& h = c.header;
  FullSeqModel m;
  nn::ClassifierShape shape;
  try {
    m.config = FullSeqConfig::from_json(h.at("config"));
    m.vocab = NmerVocabulary(m.config.network.nmer, h.at("nmer_vocab").get<std::vector<std::string>>());
    m.go_terms = GoVocabulary(h.at("go_terms").get<std::vector<std::string>>());
    m.history = history_from_json(h.at("history"));
    m.best_epoch = h.at("best_epoch");
    shape = {h.at("shape").at("vocab"), h.at("shape").at("embed"), h.at("shape").at("hidden"), h.at("shape").at("outputs")};
  } catch (const Json::exception& e) {
    throw ShapeError(std::string("malformed model header: ") + e.what());
  }
  if (h.at("go_fingerprint") != hex64(m.go_terms.fingerprint())) throw ShapeError("GO vocabulary fingerprint mismatch");
  if (shape.vocab != static_cast<nn::Index>(m.vocab.size()) || shape.outputs != static_cast<nn::Index>(m.go_terms.size())) {
    throw ShapeError("declared shapes disagree with the vocabularies");
  }
  TensorReader r(c);
  m.network = read_network(r, shape);
  m.network.readout = m.config.network.readout;
  return m;
}

void save_fullseq(const FullSeqModel& model, const std::filesystem::path& path, const Json& meta) {
  write_file(path, encode_fullseq(model, meta));
}

FullSeqModel load_fullseq(const std::filesystem::path& path) { return decode_fullseq(read_file(path)); }

}  // namespace protvec
