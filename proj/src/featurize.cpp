#include "protvec/featurize.hpp"

#include <algorithm>
#include <unordered_map>

#include "protvec/error.hpp"
#include "protvec/parallel.hpp"

namespace protvec {

ProteinFeature protvecgen(const SvgModel& model, const ProteinRecord& protein) {
  if (protein.sequence.empty()) throw InvalidArgument("protein '" + protein.id + "' has an empty sequence");
  const auto segments = segment_record(protein, model.segment_size(), model.hyperparams.stride);
  const nn::Matrix vectors = segment_vectors(model, segments);
  nn::Vector sum = nn::Vector::Zero(vectors.rows());
  for (nn::Index j = 0; j < vectors.cols(); ++j) sum += vectors.col(j);
  return {protein.id, model.segment_size(), sum / static_cast<double>(vectors.cols())};
}

namespace {

std::vector<const SvgModel*> sorted_by_size(std::span<const SvgModel* const> models,
                                            std::span<const std::size_t> required_sizes) {
  if (models.empty()) throw InvalidArgument("no segment-vector models given");
  std::vector<const SvgModel*> sorted(models.begin(), models.end());
  std::stable_sort(sorted.begin(), sorted.end(),
                   [](const SvgModel* a, const SvgModel* b) { return a->segment_size() < b->segment_size(); });
  const std::uint64_t fp = sorted.front()->go_terms.fingerprint();
  for (std::size_t k = 0; k < sorted.size(); ++k) {
    if (sorted[k]->go_terms.fingerprint() != fp) {
      throw DataError("GO vocabulary fingerprint mismatch between segment-vector models");
    }
    if (k > 0 && sorted[k]->segment_size() == sorted[k - 1]->segment_size()) {
      throw InvalidArgument("two models share segment size " + std::to_string(sorted[k]->segment_size()));
    }
  }
  if (!required_sizes.empty()) {
    std::vector<std::size_t> want(required_sizes.begin(), required_sizes.end());
    std::sort(want.begin(), want.end());
    for (std::size_t size : want) {
      const bool found = std::any_of(sorted.begin(), sorted.end(),
                                     [&](const SvgModel* m) { return m->segment_size() == size; });
      if (!found) throw InvalidArgument("missing a model for segment size " + std::to_string(size));
    }
    if (want.size() != sorted.size()) throw InvalidArgument("unexpected extra segment-vector model");
  }
  return sorted;
}

}  // namespace

MultiFeature protvecgen_plus(std::span<const SvgModel* const> models, const ProteinRecord& protein,
                             std::span<const std::size_t> required_sizes) {
  const auto sorted = sorted_by_size(models, required_sizes);
  const auto K = static_cast<nn::Index>(sorted.front()->label_count());
  MultiFeature out;
  out.protein_id = protein.id;
  out.values.resize(K * static_cast<nn::Index>(sorted.size()));
  for (std::size_t b = 0; b < sorted.size(); ++b) {
    out.segment_sizes.push_back(sorted[b]->segment_size());
    out.values.segment(static_cast<nn::Index>(b) * K, K) = protvecgen(*sorted[b], protein).values;
  }
  return out;
}

std::optional<std::size_t> FeatureMatrix::row(const std::string& id) const {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) return std::nullopt;
  return static_cast<std::size_t>(it - ids.begin());
}

FeatureMatrix featurize_corpus(std::span<const SvgModel* const> models, const Corpus& corpus,
                               std::optional<Split> split, std::size_t threads,
                               std::span<const std::size_t> required_sizes) {
  const auto sorted = sorted_by_size(models, required_sizes);
  std::vector<const ProteinRecord*> records;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (!split || corpus.splits.at(i) == *split) records.push_back(&corpus.records[i]);
  }
  FeatureMatrix out;
  out.label_count = sorted.front()->label_count();
  out.source = "protvecgen";
  for (const auto* m : sorted) out.block_sizes.push_back(m->segment_size());
  const auto K = static_cast<nn::Index>(out.label_count);
  out.values.resize(static_cast<nn::Index>(records.size()), K * static_cast<nn::Index>(sorted.size()));
  for (const auto* r : records) out.ids.push_back(r->id);

  // Each row is computed from its own protein alone, so the result does not
  // depend on the worker count.
  parallel_for(records.size(), resolve_threads(threads), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      for (std::size_t b = 0; b < sorted.size(); ++b) {
        out.values.row(static_cast<nn::Index>(i)).segment(static_cast<nn::Index>(b) * K, K) =
            protvecgen(*sorted[b], *records[i]).values.transpose();
      }
    }
  });
  return out;
}

std::string encode_features(const FeatureMatrix& f, const Json& meta) {
  if (static_cast<std::size_t>(f.values.rows()) != f.ids.size()) throw ShapeError("feature rows do not match ids");
  TensorWriter w;
  w.add("values", f.values);
  Json header;
  header["kind"] = "protein-features";
  header["source"] = f.source;
  header["ids"] = f.ids;
  header["label_count"] = f.label_count;
  header["block_sizes"] = f.block_sizes;
  header["meta"] = meta;
  header["tensors"] = w.shapes();
  return encode_container(kFeatureMagic, std::move(header), w.payload());
}

FeatureMatrix decode_features(std::string_view bytes) {
  const Container c = decode_container(bytes, kFeatureMagic);
  FeatureMatrix f;
  nn::Index cols = 0;
  try {
    f.source = c.header.at("source");
    f.ids = c.header.at("ids").get<std::vector<std::string>>();
    f.label_count = c.header.at("label_count");
    f.block_sizes = c.header.at("block_sizes").get<std::vector<std::size_t>>();
    cols = c.header.at("tensors").at(0).at("cols");
  } catch (const Json::exception& e) {
    throw ShapeError(std::string("malformed feature header: ") + e.what());
  }
  TensorReader r(c);
  f.values = r.matrix("values", static_cast<nn::Index>(f.ids.size()), cols);
  r.finish();
  return f;
}

void save_features(const FeatureMatrix& features, const std::filesystem::path& path, const Json& meta) {
  write_file(path, encode_features(features, meta));
}

FeatureMatrix load_features(const std::filesystem::path& path) { return decode_features(read_file(path)); }

nn::Matrix gather_columns(const FeatureMatrix& features, std::span<const std::string> ids) {
  std::unordered_map<std::string, nn::Index> where;
  for (std::size_t i = 0; i < features.ids.size(); ++i) where.emplace(features.ids[i], static_cast<nn::Index>(i));
  nn::Matrix out(features.values.cols(), static_cast<nn::Index>(ids.size()));
  for (std::size_t j = 0; j < ids.size(); ++j) {
    const auto it = where.find(ids[j]);
    if (it == where.end()) throw DataError("no feature row for protein '" + ids[j] + "'");
    out.col(static_cast<nn::Index>(j)) = features.values.row(it->second).transpose();
  }
  return out;
}

}  // namespace protvec
