#include "protvec/mlda.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "protvec/error.hpp"
#include "protvec/hash.hpp"

namespace protvec {

void TfidfModel::reindex() {
  index.clear();
  for (std::size_t k = 0; k < terms.size(); ++k) index.emplace(terms[k], k);
}

TfidfModel tfidf_fit(std::span<const ProteinRecord* const> train, std::size_t n, std::size_t max_terms) {
  if (train.empty()) throw InvalidArgument("tf-idf needs at least one training record");
  if (n < 1) throw InvalidArgument("n-mer size must be >= 1");
  std::unordered_map<std::string, std::size_t> df;
  for (const ProteinRecord* r : train) {
    std::unordered_set<std::string_view> seen;
    const std::string_view seq = r->sequence;
    for (std::size_t i = 0; i + n <= seq.size(); ++i) seen.insert(seq.substr(i, n));
    for (auto term : seen) ++df[std::string(term)];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(df.begin(), df.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (max_terms > 0 && ranked.size() > max_terms) ranked.resize(max_terms);
  std::sort(ranked.begin(), ranked.end());

  TfidfModel m;
  m.n = n;
  m.doc_count = train.size();
  for (auto& [term, count] : ranked) {
    m.terms.push_back(term);
    m.doc_freq.push_back(count);
  }
  m.reindex();
  return m;
}

nn::Vector tfidf_transform(const TfidfModel& model, std::string_view sequence) {
  if (model.index.size() != model.terms.size()) throw InvalidArgument("tf-idf index is stale; call reindex()");
  nn::Vector v = nn::Vector::Zero(static_cast<nn::Index>(model.dims()));
  const std::size_t n = model.n;
  std::string key;
  for (std::size_t i = 0; i + n <= sequence.size(); ++i) {
    key.assign(sequence.substr(i, n));
    const auto it = model.index.find(key);
    if (it != model.index.end()) v(static_cast<nn::Index>(it->second)) += 1.0;
  }
  const double N = static_cast<double>(model.doc_count);
  for (std::size_t k = 0; k < model.dims(); ++k) {
    v(static_cast<nn::Index>(k)) *= std::log(N / static_cast<double>(model.doc_freq[k]));
  }
  const double norm = v.norm();
  if (norm > 0.0) v /= norm;
  return v;
}

nn::Matrix tfidf_transform(const TfidfModel& model, std::span<const ProteinRecord* const> records) {
  nn::Matrix out(static_cast<nn::Index>(model.dims()), static_cast<nn::Index>(records.size()));
  for (std::size_t j = 0; j < records.size(); ++j) out.col(static_cast<nn::Index>(j)) = tfidf_transform(model, records[j]->sequence);
  return out;
}

// ---- scatter matrices -------------------------------------------------------

namespace {

void check_labels(const nn::Matrix& features, const nn::Matrix& labels) {
  if (features.rows() != labels.rows()) throw ShapeError("features and labels disagree on the sample count");
  if (features.rows() == 0) throw InvalidArgument("MLDA needs at least one sample");
  for (nn::Index i = 0; i < labels.size(); ++i) {
    const double y = labels.data()[i];
    if (y != 0.0 && y != 1.0) throw InvalidArgument("label matrix must hold 0/1 indicators");
  }
  if (!features.allFinite()) throw NumericError("non-finite feature value");
}

std::string term_name(std::span<const std::string> names, nn::Index k) {
  return k < static_cast<nn::Index>(names.size()) ? names[static_cast<std::size_t>(k)] : "class " + std::to_string(k);
}

MldaScatter scatter_impl(const nn::Matrix& X, const nn::Matrix& Y, std::span<const std::string> names) {
  check_labels(X, Y);
  const nn::Index d = X.cols(), K = Y.cols();
  MldaScatter s;
  s.class_counts = Y.colwise().sum().transpose();
  for (nn::Index k = 0; k < K; ++k) {
    if (s.class_counts(k) == 0.0) throw DataError("GO term " + term_name(names, k) + " has no positive sample");
  }
  const nn::Matrix weighted_sums = X.transpose() * Y;  // d x K
  s.class_means = weighted_sums.array().rowwise() / s.class_counts.transpose().array();
  s.global_mean = weighted_sums.rowwise().sum() / s.class_counts.sum();

  s.between = nn::Matrix::Zero(d, d);
  s.within = nn::Matrix::Zero(d, d);
  for (nn::Index k = 0; k < K; ++k) {
    const nn::Vector delta = s.class_means.col(k) - s.global_mean;
    s.between.noalias() += s.class_counts(k) * delta * delta.transpose();

    nn::Matrix centred(d, static_cast<nn::Index>(s.class_counts(k)));
    nn::Index c = 0;
    for (nn::Index i = 0; i < X.rows(); ++i) {
      if (Y(i, k) == 1.0) centred.col(c++) = X.row(i).transpose() - s.class_means.col(k);
    }
    s.within.noalias() += centred * centred.transpose();
  }
  if (!s.between.allFinite() || !s.within.allFinite()) throw NumericError("non-finite scatter matrix");
  return s;
}

// Unit length, first clearly nonzero entry positive.
void normalize_column(Eigen::Ref<nn::Vector> u) {
  const double norm = u.norm();
  if (!(norm > 0.0)) throw NumericError("degenerate MLDA eigenvector");
  u /= norm;
  const double tol = 1e-12 * u.cwiseAbs().maxCoeff();
  for (nn::Index r = 0; r < u.size(); ++r) {
    if (std::abs(u(r)) > tol) {
      if (u(r) < 0.0) u = -u;
      break;
    }
  }
}

}  // namespace

MldaScatter mlda_scatter(const nn::Matrix& features, const nn::Matrix& labels) {
  return scatter_impl(features, labels, {});
}

nn::Matrix regularized_within(const nn::Matrix& within, double epsilon) {
  const double d = static_cast<double>(within.rows());
  double scale = within.trace() / d;
  // A zero trace means every sample sits on its class mean; fall back to a
  // unit ridge so the Cholesky factor exists.
  if (!(scale > 0.0)) scale = 1.0;
  nn::Matrix out = within;
  out.diagonal().array() += epsilon * scale;
  return out;
}

MldaModel mlda_fit(const nn::Matrix& features, const nn::Matrix& labels, double epsilon,
                   std::span<const std::string> term_names) {
  const nn::Index d = features.cols(), K = labels.cols();
  if (K < 2) throw InvalidArgument("MLDA needs at least two classes");
  if (d < K - 1) throw InvalidArgument("feature dimension is below K - 1");
  if (!(epsilon > 0.0)) throw InvalidArgument("regularizer must be positive");
  const MldaScatter s = scatter_impl(features, labels, term_names);

  // S_w^reg = L L^T and S_b = B B^T with B = [sqrt(n_k) (m_k - m)]; the
  // symmetric problem L^-1 S_b L^-T v = lambda v equals G G^T with G = L^-1 B,
  // whose nonzero spectrum is that of the K x K matrix G^T G.
  const Eigen::LLT<nn::Matrix> llt(regularized_within(s.within, epsilon));
  if (llt.info() != Eigen::Success) throw NumericError("regularized within-class scatter is not positive definite");
  nn::Matrix B(d, K);
  for (nn::Index k = 0; k < K; ++k) B.col(k) = std::sqrt(s.class_counts(k)) * (s.class_means.col(k) - s.global_mean);
  const nn::Matrix G = llt.matrixL().solve(B);

  const Eigen::SelfAdjointEigenSolver<nn::Matrix> small(G.transpose() * G);
  if (small.info() != Eigen::Success) throw NumericError("eigensolver failed");
  const nn::Index keep = K - 1;
  const double top = small.eigenvalues()(K - 1);
  bool degenerate = !(top > 0.0);
  for (nn::Index j = 0; j < keep && !degenerate; ++j) {
    const double lambda = small.eigenvalues()(K - 1 - j);
    if (!(lambda > 1e-12 * top)) degenerate = true;
  }

  nn::Matrix V(d, keep);
  nn::Vector eigenvalues(keep);
  if (!degenerate) {
    for (nn::Index j = 0; j < keep; ++j) {
      const nn::Index col = K - 1 - j;
      eigenvalues(j) = small.eigenvalues()(col);
      V.col(j) = G * small.eigenvectors().col(col);
      V.col(j).normalize();
    }
  } else {
    // S_b has rank below K - 1: the trailing directions live in its null
    // space, so take them from the full d x d problem.
    const Eigen::SelfAdjointEigenSolver<nn::Matrix> full(G * G.transpose());
    if (full.info() != Eigen::Success) throw NumericError("eigensolver failed");
    for (nn::Index j = 0; j < keep; ++j) {
      eigenvalues(j) = std::max(0.0, full.eigenvalues()(d - 1 - j));
      V.col(j) = full.eigenvectors().col(d - 1 - j);
    }
  }

  MldaModel m;
  m.epsilon = epsilon;
  m.projection = llt.matrixU().solve(V);
  for (nn::Index j = 0; j < keep; ++j) normalize_column(m.projection.col(j));
  m.eigenvalues = eigenvalues;
  m.class_means = s.class_means;
  m.global_mean = s.global_mean;
  return m;
}

nn::Vector mlda_transform(const MldaModel& model, const nn::Vector& x) {
  if (x.size() != model.projection.rows()) {
    throw ShapeError("MLDA input has " + std::to_string(x.size()) + " dimensions, model expects " +
                     std::to_string(model.projection.rows()));
  }
  return model.projection.transpose() * x;
}

nn::Matrix mlda_transform(const MldaModel& model, const nn::Matrix& x) {
  if (x.rows() != model.projection.rows()) throw ShapeError("MLDA input dimension mismatch");
  return model.projection.transpose() * x;
}

// ---- pipeline -------------------------------------------------------------

nn::Matrix MldaPipeline::features(std::span<const ProteinRecord* const> records) const {
  return mlda_transform(mlda, tfidf_transform(tfidf, records));
}

MldaPipeline fit_mlda_pipeline(std::span<const ProteinRecord* const> train, const GoVocabulary& go_terms,
                               std::size_t n, std::size_t max_terms, double epsilon) {
  MldaPipeline p;
  p.go_terms = go_terms;
  p.tfidf = tfidf_fit(train, n, max_terms);
  const nn::Matrix X = tfidf_transform(p.tfidf, train).transpose();
  nn::Matrix Y(static_cast<nn::Index>(train.size()), static_cast<nn::Index>(go_terms.size()));
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto row = go_terms.one_hot(train[i]->labels);
    for (std::size_t k = 0; k < row.size(); ++k) Y(static_cast<nn::Index>(i), static_cast<nn::Index>(k)) = row[k];
  }
  p.mlda = mlda_fit(X, Y, epsilon, go_terms.terms());
  return p;
}

std::string encode_mlda(const MldaPipeline& p, const Json& meta) {
  TensorWriter w;
  w.add("projection", p.mlda.projection);
  w.add("class_means", p.mlda.class_means);
  w.add("global_mean", p.mlda.global_mean);
  w.add("eigenvalues", p.mlda.eigenvalues);
  Json header;
  header["kind"] = "mlda";
  header["tfidf"] = {{"n", p.tfidf.n}, {"terms", p.tfidf.terms}, {"doc_freq", p.tfidf.doc_freq},
                     {"doc_count", p.tfidf.doc_count}};
  header["epsilon"] = p.mlda.epsilon;
  header["go_terms"] = p.go_terms.terms();
  header["go_fingerprint"] = hex64(p.go_terms.fingerprint());
  header["meta"] = meta;
  header["tensors"] = w.shapes();
  return encode_container(kMldaMagic, std::move(header), w.payload());
}

MldaPipeline decode_mlda(std::string_view bytes) {
  const Container c = decode_container(bytes, kMldaMagic);
  MldaPipeline p;
  try {
    const Json& t = c.header.at("tfidf");
    p.tfidf.n = t.at("n");
    p.tfidf.terms = t.at("terms").get<std::vector<std::string>>();
    p.tfidf.doc_freq = t.at("doc_freq").get<std::vector<std::size_t>>();
    p.tfidf.doc_count = t.at("doc_count");
    p.mlda.epsilon = c.header.at("epsilon");
    p.go_terms = GoVocabulary(c.header.at("go_terms").get<std::vector<std::string>>());
  } catch (const Json::exception& e) {
    throw ShapeError(std::string("malformed MLDA header: ") + e.what());
  }
  if (p.tfidf.doc_freq.size() != p.tfidf.terms.size()) throw ShapeError("tf-idf term and frequency lists differ");
  if (c.header.at("go_fingerprint") != hex64(p.go_terms.fingerprint())) throw ShapeError("GO vocabulary fingerprint mismatch");
  p.tfidf.reindex();
  const auto d = static_cast<nn::Index>(p.tfidf.dims());
  const auto K = static_cast<nn::Index>(p.go_terms.size());
  TensorReader r(c);
  p.mlda.projection = r.matrix("projection", d, K - 1);
  p.mlda.class_means = r.matrix("class_means", d, K);
  p.mlda.global_mean = r.vector("global_mean", d);
  p.mlda.eigenvalues = r.vector("eigenvalues", K - 1);
  r.finish();
  return p;
}

void save_mlda(const MldaPipeline& p, const std::filesystem::path& path, const Json& meta) {
  write_file(path, encode_mlda(p, meta));
}

MldaPipeline load_mlda(const std::filesystem::path& path) { return decode_mlda(read_file(path)); }

}  // namespace protvec
