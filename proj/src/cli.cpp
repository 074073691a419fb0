#include "protvec/cli.hpp"

#include <deque>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "protvec/error.hpp"
#include "protvec/hash.hpp"
#include "protvec/parallel.hpp"
#include "protvec/pipeline.hpp"

namespace fs = std::filesystem;

namespace protvec {

namespace {

// ---- small file helpers ---------------------------------------------------

std::string digest_bytes(std::string_view bytes) {
  const auto crc = crc32({reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()});
  char buf[32];
  std::snprintf(buf, sizeof buf, "%08x:%zu", static_cast<unsigned>(crc), bytes.size());
  return buf;
}

std::string file_digest(const fs::path& path) { return digest_bytes(read_file(path)); }

std::string corpus_digest(const fs::path& dir) {
  std::string all;
  for (const char* name : {"records.fasta", "labels.tsv", "splits.tsv"}) {
    const fs::path p = dir / name;
    if (!fs::exists(p)) throw DataError("corpus directory " + dir.string() + " lacks " + name);
    all += file_digest(p) + ";";
  }
  return all;
}

std::string config_hash(const Json& stage) { return hex64(fnv1a64(stage.dump())); }

bool container_current(const fs::path& path, std::string_view magic, const std::string& hash) {
  const Json h = peek_header(path, magic);
  return h.is_object() && h.contains("meta") && h["meta"].value("config_hash", "") == hash;
}

void write_text(const fs::path& path, const std::string& text) { write_file(path, text); }

std::string read_stamp(const fs::path& path) {
  std::error_code ec;
  if (!fs::exists(path, ec)) return {};
  try {
    const Json j = Json::parse(read_file(path));
    return j.value("config_hash", "");
  } catch (const std::exception&) {
    return {};
  }
}

std::string first_line(const fs::path& path) {
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  return line;
}

std::string join_sizes(std::span<const std::size_t> v, char sep) {
  std::string out;
  for (std::size_t k = 0; k < v.size(); ++k) out += (k ? std::string(1, sep) : "") + std::to_string(v[k]);
  return out;
}

std::optional<Split> parse_split_arg(const std::string& s) {
  if (s == "all") return std::nullopt;
  try {
    return parse_split(s);
  } catch (const Error&) {
    throw InvalidArgument("unknown split '" + s + "' (expected train, validation, test or all)");
  }
}

std::vector<const ProteinRecord*> select(const Corpus& c, std::optional<Split> split) {
  if (split) return c.subset(*split);
  std::vector<const ProteinRecord*> all;
  for (const auto& r : c.records) all.push_back(&r);
  return all;
}

// ---- stages ---------------------------------------------------------------

struct Context {
  RunConfig cfg;
  std::ostream& out;
  std::ostream& err;

  fs::path work(const fs::path& rel) const { return cfg.work_dir / rel; }
  std::size_t threads() const { return resolve_threads(cfg.threads); }
  void note(const std::string& s) const { err << s << '\n'; }
  void skip(const fs::path& p) const { note("up to date: " + p.string()); }
};

Json synth_json(const SynthSpec& s) {
  return {{"labels", s.label_count},          {"motif_length", s.motif_length},
          {"motifs_per_label", s.motifs_per_label}, {"min_labels", s.min_labels_per_protein},
          {"max_labels", s.max_labels_per_protein}, {"min_length", s.min_length},
          {"max_length", s.max_length},       {"noise", s.noise_rate},
          {"records", s.record_count},        {"seed", s.seed}};
}

Json fractions_json(const SplitFractions& f) {
  return {{"train", f.train}, {"validation", f.validation}, {"test", f.test}};
}

void write_corpus_stamp(const fs::path& dir, const std::string& hash) {
  write_text(dir / "stage.json", Json{{"config_hash", hash}}.dump(2) + "\n");
}

fs::path stage_synth(const Context& ctx, fs::path dir) {
  SynthSpec spec = ctx.cfg.synth;
  spec.seed = ctx.cfg.seed;
  spec.validate();
  const std::string hash = config_hash(
      {{"stage", "synth"}, {"spec", synth_json(spec)}, {"fractions", fractions_json(ctx.cfg.fractions)}, {"seed", ctx.cfg.seed}});
  if (read_stamp(dir / "stage.json") == hash) {
    ctx.skip(dir);
    return dir;
  }
  SyntheticCorpus syn = generate_synthetic(spec);
  const Corpus corpus = split_corpus(std::move(syn.corpus), ctx.cfg.fractions, derive_seed(ctx.cfg.seed, "split"));
  write_corpus(dir, corpus, &syn.truth);
  write_corpus_stamp(dir, hash);
  ctx.note("wrote synthetic corpus of " + std::to_string(corpus.size()) + " records to " + dir.string());
  return dir;
}

fs::path stage_prepare(const Context& ctx, const fs::path& fasta, const fs::path& annotations, fs::path dir) {
  const std::string hash = config_hash({{"stage", "prepare"},
                                        {"fasta", file_digest(fasta)},
                                        {"annotations", file_digest(annotations)},
                                        {"min_annotations", ctx.cfg.min_annotations},
                                        {"fractions", fractions_json(ctx.cfg.fractions)},
                                        {"seed", ctx.cfg.seed}});
  if (read_stamp(dir / "stage.json") == hash) {
    ctx.skip(dir);
    return dir;
  }
  std::ifstream fa(fasta), an(annotations);
  if (!fa) throw DataError("cannot read " + fasta.string());
  if (!an) throw DataError("cannot read " + annotations.string());
  const auto entries = parse_fasta(fa);
  const auto labels = parse_annotations(an);
  Corpus corpus = filter_corpus(attach_labels(entries, labels), ctx.cfg.min_annotations);
  corpus = split_corpus(std::move(corpus), ctx.cfg.fractions, derive_seed(ctx.cfg.seed, "split"));
  write_corpus(dir, corpus);
  write_corpus_stamp(dir, hash);
  ctx.note("kept " + std::to_string(corpus.size()) + " of " + std::to_string(entries.size()) + " records and " +
           std::to_string(corpus.vocabulary.size()) + " GO terms");
  return dir;
}

EpochCallback epoch_logger(const Context& ctx, std::string tag) {
  return [&ctx, tag](const EpochStats& e) {
    std::ostringstream s;
    s << tag << " epoch " << e.epoch << ": train BCE " << e.train_loss << ", validation BCE " << e.validation_loss;
    ctx.note(s.str());
  };
}

fs::path stage_train_svg(const Context& ctx, const fs::path& corpus_dir, std::size_t size, fs::path out) {
  const SvgHyperparams hp = svg_hyperparams(ctx.cfg, size);
  hp.validate();
  for (const auto& w : config_warnings(ctx.cfg)) ctx.note("warning: " + w);
  if (size < hp.stride) ctx.note("warning: segment size " + std::to_string(size) + " is below the stride");
  const std::string hash =
      config_hash({{"stage", "train-svg"}, {"hyperparams", hp.to_json()}, {"corpus", corpus_digest(corpus_dir)}});
  if (container_current(out, kSvgMagic, hash)) {
    ctx.skip(out);
    return out;
  }
  const Corpus corpus = read_corpus(corpus_dir);
  const auto train = segment_records(corpus.subset(Split::kTrain), size, hp.stride);
  const auto validation = segment_records(corpus.subset(Split::kValidation), size, hp.stride);
  ctx.note("training segment model s=" + std::to_string(size) + " on " + std::to_string(train.size()) + " segments");
  const SvgModel model = train_svg(train, validation, corpus.vocabulary, hp, epoch_logger(ctx, "svg-" + std::to_string(size)));
  save_model(model, out, {{"config_hash", hash}});
  return out;
}

fs::path stage_train_fullseq(const Context& ctx, const fs::path& corpus_dir, fs::path out) {
  const FullSeqConfig fc = fullseq_config(ctx.cfg);
  fc.validate();
  const std::string hash =
      config_hash({{"stage", "train-fullseq"}, {"config", fc.to_json()}, {"corpus", corpus_digest(corpus_dir)}});
  if (container_current(out, kFullSeqMagic, hash)) {
    ctx.skip(out);
    return out;
  }
  const Corpus corpus = read_corpus(corpus_dir);
  ctx.note("training whole-sequence model");
  const FullSeqModel model = train_fullseq(corpus.subset(Split::kTrain), corpus.subset(Split::kValidation),
                                           corpus.vocabulary, fc, epoch_logger(ctx, "fullseq"));
  save_fullseq(model, out, {{"config_hash", hash}});
  return out;
}

std::string magic_of(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  char buf[8] = {};
  in.read(buf, 8);
  return std::string(buf, static_cast<std::size_t>(in.gcount()));
}

fs::path stage_featurize(const Context& ctx, const fs::path& corpus_dir, const std::vector<fs::path>& models, bool plus,
                         fs::path out) {
  if (models.empty()) throw InvalidArgument("featurize needs at least one --model");
  Json inputs = Json::array();
  for (const auto& m : models) inputs.push_back(file_digest(m));
  const std::string hash =
      config_hash({{"stage", "featurize"}, {"models", inputs}, {"plus", plus}, {"corpus", corpus_digest(corpus_dir)}});
  if (container_current(out, kFeatureMagic, hash)) {
    ctx.skip(out);
    return out;
  }
  const Corpus corpus = read_corpus(corpus_dir);
  FeatureMatrix features;
  if (magic_of(models.front()) == kFullSeqMagic) {
    if (models.size() != 1) throw InvalidArgument("a whole-sequence model cannot be combined with other models");
    features = fullseq_features(load_fullseq(models.front()), corpus, std::nullopt, ctx.threads());
  } else {
    std::vector<SvgModel> loaded;
    for (const auto& m : models) loaded.push_back(load_model(m));
    std::vector<const SvgModel*> ptrs;
    for (const auto& m : loaded) {
      if (!(m.go_terms == corpus.vocabulary)) throw DataError("model GO vocabulary differs from the corpus");
      ptrs.push_back(&m);
    }
    const std::span<const std::size_t> required = plus ? kDefaultPlusSizes : std::span<const std::size_t>{};
    features = featurize_corpus(ptrs, corpus, std::nullopt, ctx.threads(), required);
  }
  save_features(features, out, {{"config_hash", hash}});
  ctx.note("wrote " + std::to_string(features.ids.size()) + " x " + std::to_string(features.dims()) + " features to " +
           out.string());
  return out;
}

std::string feature_name(const FeatureMatrix& f) {
  if (f.source == "protvecgen") return "pvg-" + join_sizes(f.block_sizes, '-');
  return f.source;
}

fs::path stage_train_head(const Context& ctx, const fs::path& corpus_dir, const fs::path& features_path,
                          std::optional<fs::path> out) {
  const FeatureMatrix features = load_features(features_path);
  const std::string name = feature_name(features);
  const fs::path target = out.value_or(ctx.work("heads/" + name + ".head"));
  const HeadConfig hc = head_config(ctx.cfg, name);
  hc.validate();
  const std::string hash = config_hash({{"stage", "train-head"},
                                        {"head", hc.to_json()},
                                        {"hinge_scale", ctx.cfg.hinge_scale},
                                        {"features", file_digest(features_path)},
                                        {"corpus", corpus_digest(corpus_dir)}});
  if (container_current(target, kHeadMagic, hash)) {
    ctx.skip(target);
    return target;
  }
  const Corpus corpus = read_corpus(corpus_dir);
  if (features.label_count != corpus.vocabulary.size()) throw DataError("feature label space differs from the corpus");
  const HeadModel head = fit_head_model(features, corpus, hc, ctx.cfg.hinge_scale, ctx.threads(), name);
  save_head(head, target, {{"config_hash", hash}});
  ctx.note("head '" + name + "' best epoch " + std::to_string(head.head.best_epoch) + ", wrote " + target.string());
  return target;
}

fs::path stage_train_mlda(const Context& ctx, const fs::path& corpus_dir, fs::path model_out, fs::path features_out) {
  const MldaSettings& s = ctx.cfg.mlda;
  const std::string hash = config_hash({{"stage", "train-mlda"},
                                        {"nmer", s.nmer},
                                        {"max_terms", s.max_terms},
                                        {"epsilon", s.epsilon},
                                        {"corpus", corpus_digest(corpus_dir)}});
  if (container_current(model_out, kMldaMagic, hash) && container_current(features_out, kFeatureMagic, hash)) {
    ctx.skip(model_out);
    return features_out;
  }
  const Corpus corpus = read_corpus(corpus_dir);
  const MldaPipeline p = fit_mlda_pipeline(corpus.subset(Split::kTrain), corpus.vocabulary, s.nmer, s.max_terms, s.epsilon);
  save_mlda(p, model_out, {{"config_hash", hash}});
  save_features(mlda_features(p, corpus), features_out, {{"config_hash", hash}});
  ctx.note("MLDA over " + std::to_string(p.tfidf.dims()) + " tf-idf terms, wrote " + model_out.string() + " and " +
           features_out.string());
  return features_out;
}

fs::path stage_train_hybrid(const Context& ctx, const fs::path& corpus_dir, const fs::path& m1, const fs::path& m2,
                            const fs::path& f1, const fs::path& f2, fs::path out) {
  const std::string hash = config_hash({{"stage", "train-hybrid"},
                                        {"m1", file_digest(m1)},
                                        {"m2", file_digest(m2)},
                                        {"f1", file_digest(f1)},
                                        {"f2", file_digest(f2)},
                                        {"hinge_scale", ctx.cfg.hinge_scale},
                                        {"corpus", corpus_digest(corpus_dir)}});
  if (container_current(out, kHeadMagic, hash)) {
    ctx.skip(out);
    return out;
  }
  const Corpus corpus = read_corpus(corpus_dir);
  const HybridModel h = fit_hybrid(load_head(m1), load_head(m2), load_features(f1), load_features(f2), corpus,
                                   ctx.cfg.hinge_scale, ctx.threads());
  save_hybrid(h, out, {{"config_hash", hash}});
  std::ostringstream s;
  s << "hybrid: validation avg-F1 M1 " << h.f1_m1 << ", M2 " << h.f1_m2 << ", alpha " << h.alpha;
  ctx.note(s.str());
  return out;
}

fs::path stage_predict(const Context& ctx, const fs::path& corpus_dir, const fs::path& head_path,
                       const std::vector<fs::path>& feature_paths, const std::string& split_arg, fs::path out) {
  const auto split = parse_split_arg(split_arg);
  Json inputs = Json::array();
  for (const auto& f : feature_paths) inputs.push_back(file_digest(f));
  const std::string hash = config_hash({{"stage", "predict"},
                                        {"head", file_digest(head_path)},
                                        {"features", inputs},
                                        {"split", split_arg},
                                        {"corpus", corpus_digest(corpus_dir)}});
  const std::string stamp = "# config_hash " + hash;
  if (fs::exists(out) && first_line(out) == stamp) {
    ctx.skip(out);
    return out;
  }
  const Corpus corpus = read_corpus(corpus_dir);
  const auto records = select(corpus, split);
  std::vector<LabelSet> predicted;
  const std::string kind = head_file_kind(head_path);
  if (kind == "hybrid") {
    if (feature_paths.size() != 2) throw InvalidArgument("a hybrid head needs two --features files (M1 then M2)");
    predicted = predict_sets(load_hybrid(head_path), load_features(feature_paths[0]), load_features(feature_paths[1]), records);
  } else {
    if (feature_paths.size() != 1) throw InvalidArgument("a head needs exactly one --features file");
    predicted = predict_sets(load_head(head_path), load_features(feature_paths[0]), records);
  }
  std::ostringstream text;
  text << stamp << '\n';
  std::vector<std::pair<std::string, LabelSet>> rows;
  for (std::size_t i = 0; i < records.size(); ++i) rows.emplace_back(records[i]->id, predicted[i]);
  write_annotations(text, rows);
  write_text(out, text.str());
  ctx.note("wrote predictions for " + std::to_string(records.size()) + " proteins to " + out.string());
  return out;
}

struct EvalOutcome {
  fs::path json;
  MetricsSummary overall;
};

EvalOutcome stage_eval(const Context& ctx, const fs::path& corpus_dir, const fs::path& predictions,
                       const std::string& split_arg, fs::path json_out, std::optional<fs::path> csv_out) {
  const auto split = split_arg.empty() ? std::nullopt : parse_split_arg(split_arg);
  const std::string name = predictions.stem().string();
  const std::string hash = config_hash({{"stage", "eval"},
                                        {"predictions", file_digest(predictions)},
                                        {"split", split_arg},
                                        {"edges", ctx.cfg.bucket_edges},
                                        {"corpus", corpus_digest(corpus_dir)}});
  fs::path table_out = json_out;
  table_out.replace_extension(".txt");
  if (read_stamp(json_out) == hash && fs::exists(table_out) && (!csv_out || fs::exists(*csv_out))) {
    ctx.skip(json_out);
    const Json j = Json::parse(read_file(json_out));
    ctx.out << read_file(table_out);
    const auto& o = j.at("report").at("overall");
    return {json_out, {o.at("count"), o.at("precision"), o.at("recall"), o.at("f1")}};
  }
  const Corpus corpus = read_corpus(corpus_dir);
  std::ifstream in(predictions);
  if (!in) throw DataError("cannot read " + predictions.string());
  const auto predicted = parse_annotations(in);
  std::map<std::string, const ProteinRecord*> by_id;
  for (const auto& r : corpus.records) by_id.emplace(r.id, &r);
  for (const auto& [id, labels] : predicted) {
    if (!by_id.count(id)) throw DataError("prediction for unknown protein '" + id + "'");
  }
  std::vector<const ProteinRecord*> records;
  if (split) {
    records = corpus.subset(*split);
  } else {
    for (const auto& [id, labels] : predicted) records.push_back(by_id.at(id));
  }
  std::vector<LabelPair> pairs;
  std::vector<std::size_t> lengths;
  for (const auto* r : records) {
    const auto it = predicted.find(r->id);
    pairs.push_back({r->labels, it == predicted.end() ? LabelSet{} : it->second});
    lengths.push_back(r->sequence.size());
  }
  const MetricsReport report = make_report(name, pairs, lengths, ctx.cfg.bucket_edges);
  std::ostringstream table;
  write_report_table(table, report);
  write_text(table_out, table.str());
  if (csv_out) {
    std::ostringstream csv;
    write_report_csv(csv, report);
    write_text(*csv_out, csv.str());
  }
  write_text(json_out, Json{{"config_hash", hash}, {"report", report_to_json(report)}}.dump(2) + "\n");
  ctx.out << table.str();
  return {json_out, report.overall};
}

void stage_sweep(const Context& ctx, const fs::path& corpus_dir, const std::vector<std::size_t>& sizes, fs::path out) {
  if (sizes.empty()) throw InvalidArgument("sweep needs at least one size");
  // Validate every size up front so a bad value fails before any training.
  for (std::size_t s : sizes) svg_hyperparams(ctx.cfg, s).validate();
  std::ostringstream table;
  table << "segment_size\tavg_precision\tavg_recall\tavg_f1\n";
  for (std::size_t s : sizes) {
    const std::string tag = "pvg-" + std::to_string(s);
    const fs::path model = stage_train_svg(ctx, corpus_dir, s, ctx.work("models/svg-" + std::to_string(s) + ".psvg"));
    const fs::path feats = stage_featurize(ctx, corpus_dir, {model}, false, ctx.work("features/" + tag + ".pvgf"));
    const fs::path head = stage_train_head(ctx, corpus_dir, feats, std::nullopt);
    const fs::path pred = stage_predict(ctx, corpus_dir, head, {feats}, "test", ctx.work("predictions/" + tag + ".test.tsv"));
    const auto outcome = stage_eval(ctx, corpus_dir, pred, "test", ctx.work("reports/" + tag + ".test.json"), std::nullopt);
    char line[128];
    std::snprintf(line, sizeof line, "%zu\t%.4f\t%.4f\t%.4f\n", s, outcome.overall.precision, outcome.overall.recall,
                  outcome.overall.f1);
    table << line;
  }
  write_text(out, table.str());
  ctx.out << table.str();
}

// ---- argument wiring ------------------------------------------------------

/// A flag whose value, when given, overrides a configuration key.
struct Override {
  CLI::Option* option;
  std::string key;
  std::string value;
};

class Overrides {
 public:
  void bind(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    items_.push_back({nullptr, key, {}});
    items_.back().option = app->add_option(flag, items_.back().value, help + " [" + key + "]");
  }
  void apply(RunConfig& cfg) const {
    for (const auto& o : items_) {
      if (o.option->count() > 0) cfg.set(o.key, o.value);
    }
  }

 private:
  std::deque<Override> items_;
};

void bind_svg_flags(CLI::App* sub, Overrides& o) {
  o.bind(sub, "--epochs", "svg.epochs", "training epochs");
  o.bind(sub, "--batch-size", "svg.batch_size", "mini-batch size");
  o.bind(sub, "--learning-rate", "svg.learning_rate", "Adam learning rate");
  o.bind(sub, "--embed", "svg.embed", "embedding size E");
  o.bind(sub, "--hidden", "svg.hidden", "LSTM hidden size H");
  o.bind(sub, "--dropout", "svg.dropout", "dropout rate on the Bi-LSTM output");
  o.bind(sub, "--nmer", "svg.nmer", "n-mer size");
  o.bind(sub, "--min-count", "svg.min_count", "minimum n-mer count kept in the vocabulary");
  o.bind(sub, "--stride", "svg.stride", "segment stride");
  o.bind(sub, "--readout", "svg.readout", "Bi-LSTM readout: final or mean");
}

void bind_head_flags(CLI::App* sub, Overrides& o) {
  o.bind(sub, "--head-epochs", "head.epochs", "head training epochs");
  o.bind(sub, "--head-hidden", "head.hidden", "head hidden width (0 = 2K)");
  o.bind(sub, "--head-batch-size", "head.batch_size", "head mini-batch size");
  o.bind(sub, "--head-learning-rate", "head.learning_rate", "head Adam learning rate");
  o.bind(sub, "--hinge-scale", "thresholds.hinge_scale", "hinge margin scale of the threshold stage");
}

std::vector<std::size_t> parse_size_list(const std::string& v) {
  RunConfig scratch;
  scratch.set("svg.segment_sizes", v);
  return scratch.segment_sizes;
}

}  // namespace

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Segment-based protein function prediction toolkit", "protvec"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, work_dir, seed, threads;
  std::vector<std::string> sets;
  app.add_option("--config", config_path, "flat key = value configuration file");
  app.add_option("--seed", seed, "run seed (overrides the config)");
  app.add_option("--threads", threads, "worker cap (0 = PVG_THREADS or 1)");
  app.add_option("--work-dir", work_dir, "directory holding all stage outputs");
  app.add_option("--set", sets, "extra key=value configuration override (repeatable)");

  Overrides overrides;
  std::string corpus_arg;
  const auto add_corpus = [&](CLI::App* sub) { sub->add_option("--corpus", corpus_arg, "corpus directory"); };

  // synth
  auto* synth = app.add_subcommand("synth", "generate a planted-motif synthetic corpus");
  std::string synth_out;
  synth->add_option("--out", synth_out, "output corpus directory");
  overrides.bind(synth, "--records", "synth.records", "number of proteins");
  overrides.bind(synth, "--labels", "synth.labels", "number of GO labels K");
  overrides.bind(synth, "--motif-length", "synth.motif_length", "motif length");
  overrides.bind(synth, "--min-length", "synth.min_length", "minimum sequence length");
  overrides.bind(synth, "--max-length", "synth.max_length", "maximum sequence length");
  overrides.bind(synth, "--noise", "synth.noise", "substitution noise rate per motif residue");

  // prepare
  auto* prepare = app.add_subcommand("prepare", "filter and split a FASTA + annotation dataset");
  std::string fasta, annotations, prepare_out;
  prepare->add_option("--fasta", fasta, "FASTA file")->required();
  prepare->add_option("--annotations", annotations, "id<TAB>GO list file")->required();
  prepare->add_option("--out", prepare_out, "output corpus directory");
  overrides.bind(prepare, "--min-annotations", "prepare.min_annotations", "drop GO terms on fewer records");
  for (auto* sub : {synth, prepare}) {
    overrides.bind(sub, "--train", "split.train", "train fraction");
    overrides.bind(sub, "--validation", "split.validation", "validation fraction");
    overrides.bind(sub, "--test", "split.test", "test fraction");
  }

  // train-svg
  auto* train_svg_cmd = app.add_subcommand("train-svg", "train a segment-vector model or the whole-sequence baseline");
  std::size_t segment_size = 120;
  std::string mode = "segment", svg_out;
  add_corpus(train_svg_cmd);
  train_svg_cmd->add_option("--segment-size", segment_size, "segment size s");
  train_svg_cmd->add_option("--mode", mode, "segment or fullseq")->check(CLI::IsMember({"segment", "fullseq"}));
  train_svg_cmd->add_option("--out", svg_out, "output model file");
  bind_svg_flags(train_svg_cmd, overrides);
  overrides.bind(train_svg_cmd, "--max-length", "fullseq.max_length", "whole-sequence length cap");

  // featurize
  auto* featurize = app.add_subcommand("featurize", "compute protein features from trained models");
  std::vector<std::string> feat_models;
  std::string feat_out;
  bool plus = false;
  add_corpus(featurize);
  featurize->add_option("--model", feat_models, "model file (repeat for a multi-size feature)")->required();
  featurize->add_flag("--plus", plus, "require the 100/120/140 model set");
  featurize->add_option("--out", feat_out, "output feature file");

  // train-head
  auto* train_head = app.add_subcommand("train-head", "train the NN head and threshold bank on a feature file");
  std::string head_features, head_out;
  add_corpus(train_head);
  train_head->add_option("--features", head_features, "feature file")->required();
  train_head->add_option("--out", head_out, "output head file");
  bind_head_flags(train_head, overrides);

  // train-mlda
  auto* train_mlda = app.add_subcommand("train-mlda", "fit tf-idf + MLDA and write projected features");
  std::string mlda_out, mlda_features_out;
  add_corpus(train_mlda);
  train_mlda->add_option("--out", mlda_out, "output MLDA model file");
  train_mlda->add_option("--features-out", mlda_features_out, "output projected feature file");
  overrides.bind(train_mlda, "--nmer", "mlda.nmer", "tf-idf n-mer size");
  overrides.bind(train_mlda, "--max-terms", "mlda.max_terms", "keep the most frequent terms (0 = all)");
  overrides.bind(train_mlda, "--epsilon", "mlda.epsilon", "within-class ridge factor");

  // train-hybrid
  auto* train_hybrid = app.add_subcommand("train-hybrid", "combine two heads with validation-F1 weighting");
  std::string m1, m2, f1, f2, hybrid_out;
  add_corpus(train_hybrid);
  train_hybrid->add_option("--m1", m1, "head file of the ProtVecGen-Plus model")->required();
  train_hybrid->add_option("--m2", m2, "head file of the MLDA model")->required();
  train_hybrid->add_option("--features1", f1, "feature file of M1")->required();
  train_hybrid->add_option("--features2", f2, "feature file of M2")->required();
  train_hybrid->add_option("--out", hybrid_out, "output hybrid file");
  overrides.bind(train_hybrid, "--hinge-scale", "thresholds.hinge_scale", "hinge margin scale");

  // predict
  auto* predict = app.add_subcommand("predict", "write predicted GO sets");
  std::string predict_head, predict_split = "test", predict_out;
  std::vector<std::string> predict_features;
  add_corpus(predict);
  predict->add_option("--head", predict_head, "head or hybrid file")->required();
  predict->add_option("--features", predict_features, "feature file(s); M1 then M2 for a hybrid")->required();
  predict->add_option("--split", predict_split, "train, validation, test or all");
  predict->add_option("--out", predict_out, "output TSV");

  // eval
  auto* eval = app.add_subcommand("eval", "example-based metrics with length buckets");
  std::string eval_predictions, eval_split, eval_out, eval_csv;
  add_corpus(eval);
  eval->add_option("--predictions", eval_predictions, "prediction TSV")->required();
  eval->add_option("--split", eval_split, "evaluate every record of this split (missing predictions count as empty)");
  eval->add_option("--out", eval_out, "report JSON (a .txt table is written next to it)");
  eval->add_option("--csv", eval_csv, "optional CSV output");
  overrides.bind(eval, "--edges", "eval.edges", "ascending length bucket edges");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "train-svg + featurize + train-head + eval for several segment sizes");
  std::string sweep_sizes, sweep_out;
  add_corpus(sweep);
  sweep->add_option("--sizes", sweep_sizes, "comma-separated segment sizes")->required();
  sweep->add_option("--out", sweep_out, "output table");
  bind_svg_flags(sweep, overrides);
  bind_head_flags(sweep, overrides);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path, cfg);
    if (!seed.empty()) cfg.set("seed", seed);
    if (!threads.empty()) cfg.set("threads", threads);
    if (!work_dir.empty()) cfg.set("work_dir", work_dir);
    for (const auto& kv : sets) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw InvalidArgument("--set expects key=value, got '" + kv + "'");
      cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    overrides.apply(cfg);
    const Context ctx{cfg, out, err};
    const fs::path corpus_dir = corpus_arg.empty() ? ctx.work("corpus") : fs::path(corpus_arg);
    const auto or_default = [](const std::string& v, const fs::path& d) { return v.empty() ? d : fs::path(v); };

    if (synth->parsed()) {
      stage_synth(ctx, or_default(synth_out, corpus_dir));
    } else if (prepare->parsed()) {
      stage_prepare(ctx, fasta, annotations, or_default(prepare_out, corpus_dir));
    } else if (train_svg_cmd->parsed()) {
      if (mode == "fullseq") {
        stage_train_fullseq(ctx, corpus_dir, or_default(svg_out, ctx.work("models/fullseq.fseq")));
      } else {
        stage_train_svg(ctx, corpus_dir, segment_size,
                        or_default(svg_out, ctx.work("models/svg-" + std::to_string(segment_size) + ".psvg")));
      }
    } else if (featurize->parsed()) {
      std::vector<fs::path> models(feat_models.begin(), feat_models.end());
      fs::path target;
      if (feat_out.empty()) {
        if (magic_of(models.front()) == kFullSeqMagic) {
          target = ctx.work("features/fullseq.pvgf");
        } else {
          std::vector<std::size_t> sizes;
          for (const auto& m : models) {
            const Json h = read_container(m, kSvgMagic).header;
            sizes.push_back(h.at("hyperparams").at("segment_size"));
          }
          std::sort(sizes.begin(), sizes.end());
          target = ctx.work("features/pvg-" + join_sizes(sizes, '-') + ".pvgf");
        }
      } else {
        target = feat_out;
      }
      stage_featurize(ctx, corpus_dir, models, plus, target);
    } else if (train_head->parsed()) {
      stage_train_head(ctx, corpus_dir, head_features,
                       head_out.empty() ? std::nullopt : std::optional<fs::path>(head_out));
    } else if (train_mlda->parsed()) {
      stage_train_mlda(ctx, corpus_dir, or_default(mlda_out, ctx.work("models/mlda.mlda")),
                       or_default(mlda_features_out, ctx.work("features/mlda.pvgf")));
    } else if (train_hybrid->parsed()) {
      stage_train_hybrid(ctx, corpus_dir, m1, m2, f1, f2, or_default(hybrid_out, ctx.work("heads/hybrid.head")));
    } else if (predict->parsed()) {
      std::vector<fs::path> feats(predict_features.begin(), predict_features.end());
      const std::string stem = fs::path(predict_head).stem().string();
      stage_predict(ctx, corpus_dir, predict_head, feats, predict_split,
                    or_default(predict_out, ctx.work("predictions/" + stem + "." + predict_split + ".tsv")));
    } else if (eval->parsed()) {
      const std::string stem = fs::path(eval_predictions).stem().string();
      stage_eval(ctx, corpus_dir, eval_predictions, eval_split, or_default(eval_out, ctx.work("reports/" + stem + ".json")),
                 eval_csv.empty() ? std::nullopt : std::optional<fs::path>(eval_csv));
    } else if (sweep->parsed()) {
      stage_sweep(ctx, corpus_dir, parse_size_list(sweep_sizes), or_default(sweep_out, ctx.work("reports/sweep.tsv")));
    }
    return kExitOk;
  } catch (const InvalidArgument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const Json::exception& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
}

}  // namespace protvec
