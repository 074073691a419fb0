#include "protvec/protsvg.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "protvec/error.hpp"
#include "protvec/hash.hpp"

namespace protvec {

namespace {

std::string readout_name(nn::Readout r) { return r == nn::Readout::kMeanPool ? "mean" : "final"; }

nn::Readout parse_readout(const std::string& s) {
  if (s == "final") return nn::Readout::kFinalState;
  if (s == "mean") return nn::Readout::kMeanPool;
  throw DataError("unknown readout '" + s + "'");
}

nn::Vector to_vector(const std::vector<double>& v) {
  return Eigen::Map<const nn::Vector>(v.data(), static_cast<nn::Index>(v.size()));
}

}  // namespace

void SvgHyperparams::validate() const {
  if (nmer < 1) throw InvalidArgument("n-mer size must be >= 1");
  if (segment_size < nmer || segment_size < kMinSegmentSize) {
    throw InvalidArgument("segment size " + std::to_string(segment_size) + " is below the n-mer size " +
                          std::to_string(std::max(nmer, kMinSegmentSize)));
  }
  if (stride < 1) throw InvalidArgument("stride must be >= 1");
  if (embed < 1 || hidden < 1) throw InvalidArgument("embedding and hidden sizes must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("dropout must lie in [0, 1)");
  if (epochs < 1 || batch_size < 1) throw InvalidArgument("epochs and batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning rate must be positive");
}

Json SvgHyperparams::to_json() const {
  return {{"segment_size", segment_size}, {"stride", stride},       {"nmer", nmer},
          {"min_count", min_count},       {"embed", embed},         {"hidden", hidden},
          {"dropout", dropout},           {"epochs", epochs},       {"batch_size", batch_size},
          {"learning_rate", learning_rate}, {"seed", seed},         {"readout", readout_name(readout)}};
}

SvgHyperparams SvgHyperparams::from_json(const Json& j) {
  SvgHyperparams h;
  h.segment_size = j.at("segment_size");
  h.stride = j.at("stride");
  h.nmer = j.at("nmer");
  h.min_count = j.at("min_count");
  h.embed = j.at("embed");
  h.hidden = j.at("hidden");
  h.dropout = j.at("dropout");
  h.epochs = j.at("epochs");
  h.batch_size = j.at("batch_size");
  h.learning_rate = j.at("learning_rate");
  h.seed = j.at("seed");
  h.readout = parse_readout(j.at("readout"));
  return h;
}

std::uint64_t SvgModel::parameter_fingerprint() const {
  std::uint64_t h = kFnvOffset;
  for (auto t : network.params()) {
    h = fnv1a64({reinterpret_cast<const char*>(t.data()), t.size_bytes()}, h);
  }
  return h;
}

std::vector<Segment> segment_records(std::span<const ProteinRecord* const> records, std::size_t size,
                                     std::size_t stride) {
  std::vector<Segment> out;
  for (const ProteinRecord* r : records) {
    auto segs = segment_record(*r, size, stride);
    out.insert(out.end(), std::make_move_iterator(segs.begin()), std::make_move_iterator(segs.end()));
  }
  return out;
}

SvgModel train_svg(std::span<const Segment> train, std::span<const Segment> validation, const GoVocabulary& go_terms,
                   const SvgHyperparams& hyperparams, const EpochCallback& on_epoch) {
  hyperparams.validate();
  if (go_terms.empty()) throw InvalidArgument("cannot train with K = 0 GO terms");
  if (train.empty()) throw InvalidArgument("no training segments");
  for (const auto* set : {&train, &validation}) {
    for (const auto& s : *set) {
      if (s.residues.size() != hyperparams.segment_size) throw ShapeError("segment length differs from segment size");
    }
  }

  SvgModel model;
  model.hyperparams = hyperparams;
  model.go_terms = go_terms;
  model.vocab = build_vocab(train, hyperparams.nmer, hyperparams.min_count);

  const auto to_examples = [&](std::span<const Segment> segs) {
    std::vector<SequenceExample> out;
    out.reserve(segs.size());
    for (const auto& s : segs) out.push_back({tokenize_segment(s, model.vocab), to_vector(go_terms.one_hot(s.labels))});
    return out;
  };
  const auto train_examples = to_examples(train);
  const auto validation_examples = to_examples(validation);

  Rng init_rng(hyperparams.seed);
  const nn::ClassifierShape shape{static_cast<nn::Index>(model.vocab.size()), static_cast<nn::Index>(hyperparams.embed),
                                  static_cast<nn::Index>(hyperparams.hidden), static_cast<nn::Index>(go_terms.size())};
  auto network = nn::SequenceClassifier::initialized(shape, init_rng);
  network.readout = hyperparams.readout;

  TrainSchedule schedule{hyperparams.epochs, hyperparams.batch_size, hyperparams.learning_rate, hyperparams.dropout,
                         init_rng.next_u64()};
  auto trained = train_sequence_classifier(std::move(network), train_examples, validation_examples, schedule, on_epoch);
  model.network = std::move(trained.network);
  model.history = std::move(trained.history);
  model.best_epoch = trained.best_epoch;
  return model;
}

nn::Vector segment_vector(const SvgModel& model, const Segment& segment) {
  if (segment.residues.size() != model.segment_size()) {
    throw ShapeError("segment of length " + std::to_string(segment.residues.size()) + " given to a model of size " +
                     std::to_string(model.segment_size()));
  }
  return model.network.predict(tokenize_segment(segment, model.vocab));
}

nn::Matrix segment_vectors(const SvgModel& model, std::span<const Segment> segments) {
  std::vector<std::vector<TokenId>> batch;
  batch.reserve(segments.size());
  for (const auto& s : segments) {
    if (s.residues.size() != model.segment_size()) throw ShapeError("segment length differs from the model size");
    batch.push_back(tokenize_segment(s, model.vocab));
  }
  return model.network.predict(batch);
}

// ---- persistence ----------------------------------------------------------

Json history_to_json(const std::vector<EpochStats>& history) {
  Json out = Json::array();
  for (const auto& e : history) {
    Json v = std::isfinite(e.validation_loss) ? Json(e.validation_loss) : Json(nullptr);
    out.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"validation_loss", v}});
  }
  return out;
}

std::vector<EpochStats> history_from_json(const Json& j) {
  std::vector<EpochStats> out;
  for (const auto& e : j) {
    const double v = e.at("validation_loss").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                       : e.at("validation_loss").get<double>();
    out.push_back({e.at("epoch"), e.at("train_loss"), v});
  }
  return out;
}

void write_network(TensorWriter& w, const nn::SequenceClassifier& n) {
  w.add_transposed("embedding", n.embedding);
  w.add("forward.weights", n.forward.weights);
  w.add("forward.bias", n.forward.bias);
  w.add("backward.weights", n.backward.weights);
  w.add("backward.bias", n.backward.bias);
  w.add("output.weights", n.out_weights);
  w.add("output.bias", n.out_bias);
}

nn::SequenceClassifier read_network(TensorReader& r, const nn::ClassifierShape& s) {
  nn::SequenceClassifier n;
  const auto H = s.hidden, E = s.embed;
  n.embedding = r.matrix_transposed("embedding", E, s.vocab);
  n.forward.weights = r.matrix("forward.weights", 4 * H, H + E);
  n.forward.bias = r.vector("forward.bias", 4 * H);
  n.backward.weights = r.matrix("backward.weights", 4 * H, H + E);
  n.backward.bias = r.vector("backward.bias", 4 * H);
  n.out_weights = r.matrix("output.weights", s.outputs, 2 * H);
  n.out_bias = r.vector("output.bias", s.outputs);
  r.finish();
  return n;
}

std::string encode_model(const SvgModel& model, const Json& meta) {
  TensorWriter w;
  write_network(w, model.network);
  const auto shape = model.network.shape();
  Json header;
  header["kind"] = "segment-vector-generator";
  header["hyperparams"] = model.hyperparams.to_json();
  header["nmer_vocab"] = model.vocab.words();
  header["go_terms"] = model.go_terms.terms();
  header["go_fingerprint"] = hex64(model.go_terms.fingerprint());
  header["shape"] = {{"vocab", shape.vocab}, {"embed", shape.embed}, {"hidden", shape.hidden}, {"outputs", shape.outputs}};
  header["history"] = history_to_json(model.history);
  header["best_epoch"] = model.best_epoch;
  header["meta"] = meta;
  header["tensors"] = w.shapes();
  return encode_container(kSvgMagic, std::move(header), w.payload());
}

namespace {

SvgModel model_from_container(const Container& c) {
  const Json& h = c.header;
  SvgModel m;
  try {
    m.hyperparams = SvgHyperparams::from_json(h.at("hyperparams"));
    m.vocab = NmerVocabulary(m.hyperparams.nmer, h.at("nmer_vocab").get<std::vector<std::string>>());
    m.go_terms = GoVocabulary(h.at("go_terms").get<std::vector<std::string>>());
    m.history = history_from_json(h.at("history"));
    m.best_epoch = h.at("best_epoch");
  } catch (const Json::exception& e) {
    throw ShapeError(std::string("malformed model header: ") + e.what());
  }
  if (h.at("go_fingerprint") != hex64(m.go_terms.fingerprint())) throw ShapeError("GO vocabulary fingerprint mismatch");
  const nn::ClassifierShape shape{h.at("shape").at("vocab"), h.at("shape").at("embed"), h.at("shape").at("hidden"),
                                  h.at("shape").at("outputs")};
  if (shape.vocab != static_cast<nn::Index>(m.vocab.size()) || shape.outputs != static_cast<nn::Index>(m.go_terms.size()) ||
      shape.embed != static_cast<nn::Index>(m.hyperparams.embed) ||
      shape.hidden != static_cast<nn::Index>(m.hyperparams.hidden)) {
    throw ShapeError("declared shapes disagree with the vocabularies or hyperparameters");
  }
  TensorReader r(c);
  m.network = read_network(r, shape);
  m.network.readout = m.hyperparams.readout;
  return m;
}

}  // namespace

SvgModel decode_model(std::string_view bytes) { return model_from_container(decode_container(bytes, kSvgMagic)); }

void save_model(const SvgModel& model, const std::filesystem::path& path, const Json& meta) {
  write_file(path, encode_model(model, meta));
}

SvgModel load_model(const std::filesystem::path& path) { return model_from_container(read_container(path, kSvgMagic)); }

}  // namespace protvec
