#include "protvec/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <ctime>
#include <sstream>

#include "protvec/error.hpp"
#include "protvec/hash.hpp"
#include "protvec/parallel.hpp"

namespace protvec {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw InvalidArgument("config key '" + key + "' expects a non-negative integer, got '" + v + "'");
  }
  return out;
}

std::size_t parse_size(const std::string& key, const std::string& v) { return static_cast<std::size_t>(parse_u64(key, v)); }

double parse_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw InvalidArgument("config key '" + key + "' expects a number, got '" + v + "'");
}

std::vector<std::size_t> parse_sizes(const std::string& key, const std::string& v) {
  std::vector<std::size_t> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_size(key, trim(item)));
  if (out.empty()) throw InvalidArgument("config key '" + key + "' expects a comma-separated list");
  return out;
}

using Setter = void (*)(RunConfig&, const std::string&, const std::string&);

const std::vector<std::pair<std::string, Setter>>& setters() {
  static const std::vector<std::pair<std::string, Setter>> table = {
      {"seed", [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = parse_u64(k, v); }},
      {"threads", [](RunConfig& c, const std::string& k, const std::string& v) { c.threads = parse_size(k, v); }},
      {"work_dir", [](RunConfig& c, const std::string&, const std::string& v) { c.work_dir = v; }},
      {"synth.labels", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.label_count = parse_size(k, v); }},
      {"synth.records", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.record_count = parse_size(k, v); }},
      {"synth.motif_length", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.motif_length = parse_size(k, v); }},
      {"synth.motifs_per_label", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.motifs_per_label = parse_size(k, v); }},
      {"synth.min_labels", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.min_labels_per_protein = parse_size(k, v); }},
      {"synth.max_labels", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.max_labels_per_protein = parse_size(k, v); }},
      {"synth.min_length", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.min_length = parse_size(k, v); }},
      {"synth.max_length", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.max_length = parse_size(k, v); }},
      {"synth.noise", [](RunConfig& c, const std::string& k, const std::string& v) { c.synth.noise_rate = parse_real(k, v); }},
      {"split.train", [](RunConfig& c, const std::string& k, const std::string& v) { c.fractions.train = parse_real(k, v); }},
      {"split.validation", [](RunConfig& c, const std::string& k, const std::string& v) { c.fractions.validation = parse_real(k, v); }},
      {"split.test", [](RunConfig& c, const std::string& k, const std::string& v) { c.fractions.test = parse_real(k, v); }},
      {"prepare.min_annotations", [](RunConfig& c, const std::string& k, const std::string& v) { c.min_annotations = parse_size(k, v); }},
      {"svg.segment_sizes", [](RunConfig& c, const std::string& k, const std::string& v) { c.segment_sizes = parse_sizes(k, v); }},
      {"svg.stride", [](RunConfig& c, const std::string& k, const std::string& v) { c.svg.stride = parse_size(k, v); }},
      {"svg.nmer", [](RunConfig& c, const std::string& k, const std::string& v) { c.svg.nmer = parse_size(k, v); }},
      {"svg.min_count", [](RunConfig& c, const std::string& k, const std::string& v) { c.svg.min_count = parse_size(k, v); }},
      {"svg.embed", [](RunConfig& c, const std::string& k, const std::string& v) { c.svg.embed = parse_size(k, v); }},
      {"svg.hidden", [](RunConfig& c, const std::string& k, const std::string& v) { c.svg.hidden = parse_size(k, v); }},
      {"svg.dropout", [](RunConfig& c, const std::string& k, const std::string& v) { c.svg.dropout = parse_real(k, v); }},
      {"svg.epochs", [](RunConfig& c, const std::string& k, const std::string& v) { c.svg.epochs = parse_size(k, v); }},
      {"svg.batch_size", [](RunConfig& c, const std::string& k, const std::string& v) { c.svg.batch_size = parse_size(k, v); }},
      {"svg.learning_rate", [](RunConfig& c, const std::string& k, const std::string& v) { c.svg.learning_rate = parse_real(k, v); }},
      {"svg.readout",
       [](RunConfig& c, const std::string& k, const std::string& v) {
         if (v == "final") c.svg.readout = nn::Readout::kFinalState;
         else if (v == "mean") c.svg.readout = nn::Readout::kMeanPool;
         else throw InvalidArgument("config key '" + k + "' expects 'final' or 'mean'");
       }},
      {"fullseq.max_length", [](RunConfig& c, const std::string& k, const std::string& v) { c.fullseq_max_length = parse_size(k, v); }},
      {"head.hidden", [](RunConfig& c, const std::string& k, const std::string& v) { c.head.hidden = parse_size(k, v); }},
      {"head.epochs", [](RunConfig& c, const std::string& k, const std::string& v) { c.head.epochs = parse_size(k, v); }},
      {"head.batch_size", [](RunConfig& c, const std::string& k, const std::string& v) { c.head.batch_size = parse_size(k, v); }},
      {"head.learning_rate", [](RunConfig& c, const std::string& k, const std::string& v) { c.head.learning_rate = parse_real(k, v); }},
      {"mlda.nmer", [](RunConfig& c, const std::string& k, const std::string& v) { c.mlda.nmer = parse_size(k, v); }},
      {"mlda.max_terms", [](RunConfig& c, const std::string& k, const std::string& v) { c.mlda.max_terms = parse_size(k, v); }},
      {"mlda.epsilon", [](RunConfig& c, const std::string& k, const std::string& v) { c.mlda.epsilon = parse_real(k, v); }},
      {"thresholds.hinge_scale", [](RunConfig& c, const std::string& k, const std::string& v) { c.hinge_scale = parse_real(k, v); }},
      {"eval.edges", [](RunConfig& c, const std::string& k, const std::string& v) { c.bucket_edges = parse_sizes(k, v); }},
  };
  return table;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  for (const auto& [name, fn] : setters()) {
    if (name == key) {
      fn(*this, key, trim(value));
      return;
    }
  }
  throw InvalidArgument("unknown config key '" + key + "'");
}

void RunConfig::validate() const {
  synth.validate();
  if (segment_sizes.empty()) throw InvalidArgument("at least one segment size is required");
  for (std::size_t s : segment_sizes) svg_hyperparams(*this, s).validate();
  fullseq_config(*this).validate();
  head.validate();
  if (mlda.nmer < 1) throw InvalidArgument("mlda.nmer must be >= 1");
  if (!(mlda.epsilon > 0.0)) throw InvalidArgument("mlda.epsilon must be positive");
  if (!(hinge_scale > 0.0)) throw InvalidArgument("thresholds.hinge_scale must be positive");
  for (std::size_t k = 1; k < bucket_edges.size(); ++k) {
    if (bucket_edges[k] <= bucket_edges[k - 1]) throw InvalidArgument("eval.edges must be strictly ascending");
  }
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [name, fn] : setters()) out.push_back(name);
    return out;
  }();
  return keys;
}

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> out;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    const std::string content = trim(line);
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos) throw ParseError("expected 'key = value'", line_no);
    const std::string key = trim(std::string_view(content).substr(0, eq));
    if (key.empty()) throw ParseError("missing key before '='", line_no);
    out[key] = trim(std::string_view(content).substr(eq + 1));
  }
  return out;
}

RunConfig load_config(const std::filesystem::path& path, RunConfig base) {
  for (const auto& [k, v] : parse_config_text(read_file(path))) base.set(k, v);
  return base;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage) {
  std::uint64_t z = fnv1a64(stage, kFnvOffset ^ (seed * 0x9E3779B97F4A7C15ULL));
  z = (z ^ (z >> 33)) * 0xFF51AFD7ED558CCDULL;
  return z ^ (z >> 33);
}

SvgHyperparams svg_hyperparams(const RunConfig& cfg, std::size_t segment_size) {
  SvgHyperparams h = cfg.svg;
  h.segment_size = segment_size;
  h.seed = derive_seed(cfg.seed, "svg:" + std::to_string(segment_size));
  return h;
}

FullSeqConfig fullseq_config(const RunConfig& cfg) {
  FullSeqConfig c;
  c.network = cfg.svg;
  c.network.segment_size = std::max(cfg.svg.nmer, kMinSegmentSize);
  c.network.seed = derive_seed(cfg.seed, "fullseq");
  c.max_length = cfg.fullseq_max_length;
  return c;
}

HeadConfig head_config(const RunConfig& cfg, std::string_view stage) {
  HeadConfig h = cfg.head;
  h.seed = derive_seed(cfg.seed, "head:" + std::string(stage));
  return h;
}

std::vector<std::string> config_warnings(const RunConfig& cfg) {
  std::vector<std::string> out;
  for (std::size_t s : cfg.segment_sizes) {
    if (s < cfg.svg.stride) {
      out.push_back("segment size " + std::to_string(s) + " is below the stride " + std::to_string(cfg.svg.stride) +
                    "; residues between segments are never seen");
    }
  }
  return out;
}

// ---- fitting helpers ------------------------------------------------------

nn::Matrix label_matrix(std::span<const ProteinRecord* const> records, const GoVocabulary& go_terms) {
  nn::Matrix y(static_cast<nn::Index>(go_terms.size()), static_cast<nn::Index>(records.size()));
  for (std::size_t j = 0; j < records.size(); ++j) {
    const auto row = go_terms.one_hot(records[j]->labels);
    for (std::size_t k = 0; k < row.size(); ++k) y(static_cast<nn::Index>(k), static_cast<nn::Index>(j)) = row[k];
  }
  return y;
}

std::vector<std::string> record_ids(std::span<const ProteinRecord* const> records) {
  std::vector<std::string> out;
  out.reserve(records.size());
  for (const auto* r : records) out.push_back(r->id);
  return out;
}

HeadModel fit_head_model(const FeatureMatrix& features, const Corpus& corpus, const HeadConfig& config,
                         double hinge_scale, std::size_t threads, std::string feature_source) {
  const auto train = corpus.subset(Split::kTrain);
  const auto validation = corpus.subset(Split::kValidation);
  if (train.empty()) throw DataError("corpus has no train split");
  const nn::Matrix x = gather_columns(features, record_ids(train));
  const nn::Matrix y = label_matrix(train, corpus.vocabulary);
  const nn::Matrix xv = gather_columns(features, record_ids(validation));
  const nn::Matrix yv = label_matrix(validation, corpus.vocabulary);

  HeadModel m;
  m.go_terms = corpus.vocabulary;
  m.config = config;
  m.feature_source = std::move(feature_source);
  m.head = train_nn_head(x, y, xv, yv, config);
  m.bank = train_go_thresholds(m.head.predict(x), y, hinge_scale, threads, corpus.vocabulary.terms());
  return m;
}

namespace {

std::vector<LabelSet> decode_all(const GoThresholdBank& bank, const GoVocabulary& terms, const nn::Matrix& posteriors) {
  std::vector<LabelSet> out;
  out.reserve(static_cast<std::size_t>(posteriors.cols()));
  for (nn::Index j = 0; j < posteriors.cols(); ++j) out.push_back(decode_terms(bank, terms, posteriors.col(j)));
  return out;
}

double average_f1(std::span<const ProteinRecord* const> records, const std::vector<LabelSet>& predicted) {
  return compute_metrics(label_pairs(records, predicted)).f1;
}

}  // namespace

std::vector<LabelSet> predict_sets(const HeadModel& model, const FeatureMatrix& features,
                                   std::span<const ProteinRecord* const> records) {
  if (records.empty()) return {};
  return decode_all(model.bank, model.go_terms, model.head.predict(gather_columns(features, record_ids(records))));
}

std::vector<LabelSet> predict_sets(const HybridModel& model, const FeatureMatrix& features_m1,
                                   const FeatureMatrix& features_m2, std::span<const ProteinRecord* const> records) {
  if (records.empty()) return {};
  const auto ids = record_ids(records);
  const nn::Matrix z1 = model.m1.head.predict(gather_columns(features_m1, ids));
  const nn::Matrix z2 = model.m2.head.predict(gather_columns(features_m2, ids));
  return decode_all(model.bank, model.go_terms, hybrid_combine(z1, z2, model.alpha));
}

std::vector<LabelPair> label_pairs(std::span<const ProteinRecord* const> records, const std::vector<LabelSet>& predicted) {
  if (records.size() != predicted.size()) throw ShapeError("record and prediction counts differ");
  std::vector<LabelPair> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) out.push_back({records[i]->labels, predicted[i]});
  return out;
}

HybridModel fit_hybrid(HeadModel m1, HeadModel m2, const FeatureMatrix& features_m1, const FeatureMatrix& features_m2,
                       const Corpus& corpus, double hinge_scale, std::size_t threads) {
  if (!(m1.go_terms == m2.go_terms) || !(m1.go_terms == corpus.vocabulary)) {
    throw DataError("hybrid components were trained on different GO vocabularies");
  }
  const auto validation = corpus.subset(Split::kValidation);
  if (validation.empty()) throw DataError("the hybrid weight needs a validation split");
  HybridModel h;
  h.go_terms = corpus.vocabulary;
  h.f1_m1 = average_f1(validation, predict_sets(m1, features_m1, validation));
  h.f1_m2 = average_f1(validation, predict_sets(m2, features_m2, validation));
  h.alpha = compute_alpha(h.f1_m1, h.f1_m2);
  const auto ids = record_ids(validation);
  const nn::Matrix z = hybrid_combine(m1.head.predict(gather_columns(features_m1, ids)),
                                      m2.head.predict(gather_columns(features_m2, ids)), h.alpha);
  h.bank = train_go_thresholds(z, label_matrix(validation, corpus.vocabulary), hinge_scale, threads,
                               corpus.vocabulary.terms());
  h.m1 = std::move(m1);
  h.m2 = std::move(m2);
  return h;
}

FeatureMatrix mlda_features(const MldaPipeline& pipeline, const Corpus& corpus) {
  std::vector<const ProteinRecord*> all;
  for (const auto& r : corpus.records) all.push_back(&r);
  FeatureMatrix f;
  f.ids = record_ids(all);
  f.label_count = pipeline.go_terms.size();
  f.source = "mlda";
  f.values = pipeline.features(all).transpose();
  return f;
}

// ---- benchmark ------------------------------------------------------------

const MethodResult& BenchmarkResult::method(const std::string& name) const {
  for (const auto& m : methods) {
    if (m.name == name) return m;
  }
  throw InvalidArgument("benchmark has no method '" + name + "'");
}

namespace {

FeatureMatrix concat_features(const std::vector<const FeatureMatrix*>& parts) {
  FeatureMatrix out = *parts.front();
  out.block_sizes.clear();
  nn::Index cols = 0;
  for (const auto* p : parts) {
    if (p->ids != out.ids) throw ShapeError("feature tables list different proteins");
    cols += p->values.cols();
    out.block_sizes.insert(out.block_sizes.end(), p->block_sizes.begin(), p->block_sizes.end());
  }
  out.values.resize(out.values.rows(), cols);
  nn::Index at = 0;
  for (const auto* p : parts) {
    out.values.middleCols(at, p->values.cols()) = p->values;
    at += p->values.cols();
  }
  return out;
}

}  // namespace

BenchmarkResult run_benchmark(const BenchmarkConfig& config, const LogFn& log) {
  const std::clock_t start = std::clock();
  const RunConfig& cfg = config.run;
  cfg.validate();
  const auto say = [&](const std::string& s) {
    if (log) log(s);
  };
  const std::size_t threads = resolve_threads(cfg.threads);

  SynthSpec spec = cfg.synth;
  spec.seed = cfg.seed;
  const Corpus corpus = split_corpus(generate_synthetic(spec).corpus, cfg.fractions, derive_seed(cfg.seed, "split"));
  const auto train = corpus.subset(Split::kTrain);
  const auto validation = corpus.subset(Split::kValidation);
  const auto test = corpus.subset(Split::kTest);
  std::vector<std::size_t> test_lengths;
  for (const auto* r : test) test_lengths.push_back(r->sequence.size());
  const std::size_t long_edge[] = {config.long_edge};

  BenchmarkResult result;
  const auto evaluate = [&](const std::string& name, const std::vector<LabelSet>& val_pred,
                            const std::vector<LabelSet>& test_pred) {
    MethodResult m;
    m.name = name;
    const auto pairs = label_pairs(test, test_pred);
    m.test = compute_metrics(pairs);
    m.long_bucket = bucketize(pairs, test_lengths, long_edge).back().metrics;
    m.validation = compute_metrics(label_pairs(validation, val_pred));
    say(name + ": test avg-F1 " + std::to_string(m.test.f1) + ", long-bucket avg-F1 " + std::to_string(m.long_bucket.f1) +
        " (n=" + std::to_string(m.long_bucket.count) + ")");
    result.methods.push_back(m);
  };
  const auto run_head = [&](const std::string& name, const FeatureMatrix& f) {
    HeadModel h = fit_head_model(f, corpus, head_config(cfg, name), cfg.hinge_scale, threads, name);
    evaluate(name, predict_sets(h, f, validation), predict_sets(h, f, test));
    return h;
  };

  std::vector<std::size_t> sizes = cfg.segment_sizes;
  if (std::find(sizes.begin(), sizes.end(), config.single_size) == sizes.end()) sizes.push_back(config.single_size);
  std::sort(sizes.begin(), sizes.end());
  std::map<std::size_t, FeatureMatrix> per_size;
  for (std::size_t s : sizes) {
    const auto hp = svg_hyperparams(cfg, s);
    const auto seg_train = segment_records(train, s, hp.stride);
    const auto seg_val = segment_records(validation, s, hp.stride);
    say("training segment model s=" + std::to_string(s) + " on " + std::to_string(seg_train.size()) + " segments");
    const SvgModel model = train_svg(seg_train, seg_val, corpus.vocabulary, hp, [&](const EpochStats& e) {
      say("  epoch " + std::to_string(e.epoch) + " train " + std::to_string(e.train_loss) + " validation " +
          std::to_string(e.validation_loss));
    });
    const SvgModel* one[] = {&model};
    per_size.emplace(s, featurize_corpus(one, corpus, std::nullopt, threads));
    run_head("pvg-" + std::to_string(s), per_size.at(s));
  }

  std::vector<const FeatureMatrix*> plus_parts;
  for (std::size_t s : cfg.segment_sizes) plus_parts.push_back(&per_size.at(s));
  std::sort(plus_parts.begin(), plus_parts.end(),
            [](const FeatureMatrix* a, const FeatureMatrix* b) { return a->block_sizes < b->block_sizes; });
  const FeatureMatrix plus = concat_features(plus_parts);
  HeadModel plus_head = run_head("pvg-plus", plus);

  say("training whole-sequence baseline");
  const FullSeqModel full = train_fullseq(train, validation, corpus.vocabulary, fullseq_config(cfg));
  run_head("fullseq", fullseq_features(full, corpus, std::nullopt, threads));

  say("fitting tf-idf + MLDA");
  const MldaPipeline mp = fit_mlda_pipeline(train, corpus.vocabulary, cfg.mlda.nmer, cfg.mlda.max_terms, cfg.mlda.epsilon);
  const FeatureMatrix mf = mlda_features(mp, corpus);
  HeadModel mlda_head = run_head("mlda", mf);

  const HybridModel hybrid = fit_hybrid(plus_head, mlda_head, plus, mf, corpus, cfg.hinge_scale, threads);
  result.alpha = hybrid.alpha;
  say("hybrid alpha " + std::to_string(hybrid.alpha));
  evaluate("hybrid", predict_sets(hybrid, plus, mf, validation), predict_sets(hybrid, plus, mf, test));

  result.cpu_seconds = static_cast<double>(std::clock() - start) / CLOCKS_PER_SEC;
  return result;
}

}  // namespace protvec
