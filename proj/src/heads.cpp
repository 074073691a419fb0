#include "protvec/heads.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "protvec/error.hpp"
#include "protvec/hash.hpp"
#include "protvec/parallel.hpp"
#include "protvec/rng.hpp"

namespace protvec {

// ---- NN head --------------------------------------------------------------

void HeadConfig::validate() const {
  if (epochs < 1 || batch_size < 1) throw InvalidArgument("head epochs and batch size must be >= 1");
  if (!(learning_rate > 0.0)) throw InvalidArgument("head learning rate must be positive");
}

Json HeadConfig::to_json() const {
  return {{"hidden", hidden}, {"epochs", epochs}, {"batch_size", batch_size},
          {"learning_rate", learning_rate}, {"seed", seed}};
}

HeadConfig HeadConfig::from_json(const Json& j) {
  HeadConfig c;
  c.hidden = j.at("hidden");
  c.epochs = j.at("epochs");
  c.batch_size = j.at("batch_size");
  c.learning_rate = j.at("learning_rate");
  c.seed = j.at("seed");
  return c;
}

namespace {

nn::Matrix standardize(const NnHead& head, const nn::Matrix& x) {
  if (static_cast<std::size_t>(x.rows()) != head.inputs()) {
    throw ShapeError("head expects " + std::to_string(head.inputs()) + " input features, got " +
                     std::to_string(x.rows()));
  }
  return ((x.colwise() - head.input_mean).array().colwise() * head.input_scale.array()).matrix();
}

void check_targets(const nn::Matrix& x, const nn::Matrix& y, const char* what) {
  if (x.cols() != y.cols()) throw ShapeError(std::string(what) + " features and targets disagree on the sample count");
  if (!x.allFinite()) throw NumericError(std::string(what) + " features contain non-finite values");
}

}  // namespace

nn::Matrix NnHead::predict(const nn::Matrix& features) const { return net.predict(standardize(*this, features)); }

nn::Vector NnHead::predict(const nn::Vector& feature) const {
  return net.predict(standardize(*this, nn::Matrix(feature))).col(0);
}

NnHead train_nn_head(const nn::Matrix& features, const nn::Matrix& targets, const nn::Matrix& validation_features,
                     const nn::Matrix& validation_targets, const HeadConfig& config) {
  config.validate();
  check_targets(features, targets, "training");
  if (features.cols() == 0) throw InvalidArgument("no training samples for the head");
  const bool has_validation = validation_features.cols() > 0;
  if (has_validation) {
    check_targets(validation_features, validation_targets, "validation");
    if (validation_features.rows() != features.rows() || validation_targets.rows() != targets.rows()) {
      throw ShapeError("validation shapes differ from training shapes");
    }
  }
  const nn::Index D = features.rows(), K = targets.rows(), n = features.cols();

  NnHead head;
  head.input_mean = features.rowwise().mean();
  head.input_scale.resize(D);
  for (nn::Index r = 0; r < D; ++r) {
    const double var = (features.row(r).array() - head.input_mean(r)).square().mean();
    head.input_scale(r) = var > 1e-24 ? 1.0 / std::sqrt(var) : 1.0;
  }
  const nn::Matrix x = standardize(head, features);
  const nn::Matrix xv = has_validation ? standardize(head, validation_features) : nn::Matrix();

  Rng rng(config.seed);
  const nn::Index hidden = config.hidden > 0 ? static_cast<nn::Index>(config.hidden) : 2 * K;
  nn::Perceptron net = nn::Perceptron::initialized(D, hidden, K, rng);
  nn::Perceptron grads = nn::Perceptron::zeros(D, hidden, K);
  nn::Adam adam({config.learning_rate});

  std::vector<nn::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), nn::Index{0});
  double best = std::numeric_limits<double>::infinity();
  head.net = net;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    rng.shuffle(std::span<nn::Index>(order));
    double total = 0.0;
    for (std::size_t lo = 0; lo < order.size(); lo += config.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + config.batch_size);
      const auto B = static_cast<nn::Index>(hi - lo);
      nn::Matrix xb(D, B), yb(K, B);
      for (nn::Index b = 0; b < B; ++b) {
        xb.col(b) = x.col(order[lo + static_cast<std::size_t>(b)]);
        yb.col(b) = targets.col(order[lo + static_cast<std::size_t>(b)]);
      }
      total += net.loss_and_grad(xb, yb, &grads) * static_cast<double>(B);
      adam.step(net.params(), std::as_const(grads).params());
    }
    HeadEpoch stats{epoch, total / static_cast<double>(n), std::numeric_limits<double>::quiet_NaN()};
    if (!std::isfinite(stats.train_loss)) throw NumericError("head training diverged (non-finite loss)");
    if (has_validation) stats.validation_loss = net.loss_and_grad(xv, validation_targets, nullptr);
    head.history.push_back(stats);
    if (!has_validation || stats.validation_loss < best) {
      if (has_validation) best = stats.validation_loss;
      head.net = net;
      head.best_epoch = epoch;
    }
  }
  return head;
}

// ---- thresholds -----------------------------------------------------------

double hinge_loss(const ThresholdRule& rule, std::span<const double> scores, const std::vector<bool>& labels) {
  if (scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
  if (!(rule.margin > 0.0)) throw InvalidArgument("hinge margin must be positive");
  const double d = rule.direction == Direction::kAbove ? 1.0 : -1.0;
  double total = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const double y = labels[i] ? 1.0 : -1.0;
    total += std::max(0.0, 1.0 - y * d * (scores[i] - rule.threshold) / rule.margin);
  }
  return total;
}

std::vector<double> candidate_thresholds(std::span<const double> scores) {
  std::vector<double> v(scores.begin(), scores.end());
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  std::vector<double> out;
  if (v.empty()) return out;
  out.push_back(std::min(0.0, v.front()));
  for (std::size_t k = 0; k + 1 < v.size(); ++k) out.push_back(0.5 * (v[k] + v[k + 1]));
  out.push_back(std::max(1.0, v.back()));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace {

// Sum of max(0, 1 - s (x - t) / g) over one sign group, via sorted prefix sums.
// s = +1 terms are active for x < t + g, s = -1 terms for x > t - g.
struct SignGroup {
  std::vector<double> sorted;
  std::vector<double> prefix;  // prefix[k] = sum of sorted[0..k)

  explicit SignGroup(std::vector<double> values) : sorted(std::move(values)) {
    std::sort(sorted.begin(), sorted.end());
    prefix.assign(sorted.size() + 1, 0.0);
    for (std::size_t k = 0; k < sorted.size(); ++k) prefix[k + 1] = prefix[k] + sorted[k];
  }

  double loss_plus(double t, double g) const {
    const auto c = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), t + g) - sorted.begin());
    return static_cast<double>(c) * (1.0 + t / g) - prefix[c] / g;
  }

  double loss_minus(double t, double g) const {
    const auto first =
        static_cast<std::size_t>(std::upper_bound(sorted.begin(), sorted.end(), t - g) - sorted.begin());
    const double c = static_cast<double>(sorted.size() - first);
    return c * (1.0 - t / g) + (prefix.back() - prefix[first]) / g;
  }
};

}  // namespace

ThresholdRule train_threshold(std::span<const double> scores, const std::vector<bool>& labels, double hinge_scale) {
  if (scores.size() != labels.size()) throw ShapeError("scores and labels differ in length");
  if (!(hinge_scale > 0.0)) throw InvalidArgument("hinge scale must be positive");
  std::vector<double> pos, neg;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) throw NumericError("non-finite score");
    (labels[i] ? pos : neg).push_back(scores[i]);
  }
  if (pos.empty()) throw InvalidArgument("no positive sample");

  ThresholdRule rule;
  rule.margin = hinge_scale;
  const auto [lo_it, hi_it] = std::minmax_element(scores.begin(), scores.end());
  if (neg.empty()) {
    rule.direction = Direction::kAbove;
    rule.threshold = std::min(0.0, *lo_it);
    return rule;
  }
  if (*lo_it == *hi_it) {
    rule.threshold = *lo_it;
    rule.direction = pos.size() >= neg.size() ? Direction::kAbove : Direction::kBelow;
    return rule;
  }
  const double min_pos = *std::min_element(pos.begin(), pos.end());
  const double max_pos = *std::max_element(pos.begin(), pos.end());
  const double min_neg = *std::min_element(neg.begin(), neg.end());
  const double max_neg = *std::max_element(neg.begin(), neg.end());
  if (max_neg < min_pos) {
    return {Direction::kAbove, 0.5 * (max_neg + min_pos), 0.5 * (min_pos - max_neg)};
  }
  if (max_pos < min_neg) {
    return {Direction::kBelow, 0.5 * (max_pos + min_neg), 0.5 * (min_neg - max_pos)};
  }

  // kAbove: positives carry s = +1 and negatives s = -1; kBelow swaps them.
  const SignGroup P(pos), N(neg);
  const double g = hinge_scale;
  double best = std::numeric_limits<double>::infinity();
  for (double t : candidate_thresholds(scores)) {
    const double above = P.loss_plus(t, g) + N.loss_minus(t, g);
    const double below = N.loss_plus(t, g) + P.loss_minus(t, g);
    const double tol = std::isfinite(best) ? 1e-12 * (1.0 + best) : 0.0;
    if (above < best - tol) {
      best = above;
      rule = {Direction::kAbove, t, g};
    }
    if (below < best - tol) {
      best = below;
      rule = {Direction::kBelow, t, g};
    }
  }
  return rule;
}

std::vector<bool> GoThresholdBank::apply(const nn::Vector& posteriors) const {
  if (static_cast<std::size_t>(posteriors.size()) != rules.size()) {
    throw ShapeError("posterior length differs from the number of threshold rules");
  }
  std::vector<bool> out(rules.size());
  for (std::size_t k = 0; k < rules.size(); ++k) out[k] = rules[k](posteriors(static_cast<nn::Index>(k)));
  return out;
}

GoThresholdBank train_go_thresholds(const nn::Matrix& scores, const nn::Matrix& labels, double hinge_scale,
                                    std::size_t threads, std::span<const std::string> term_names) {
  if (scores.rows() != labels.rows() || scores.cols() != labels.cols()) {
    throw ShapeError("score and label matrices differ in shape");
  }
  GoThresholdBank bank;
  bank.rules.resize(static_cast<std::size_t>(scores.rows()));
  parallel_for(bank.rules.size(), resolve_threads(threads), [&](std::size_t lo, std::size_t hi) {
    for (std::size_t k = lo; k < hi; ++k) {
      const auto row = static_cast<nn::Index>(k);
      std::vector<double> s(static_cast<std::size_t>(scores.cols()));
      std::vector<bool> y(s.size());
      for (nn::Index i = 0; i < scores.cols(); ++i) {
        s[static_cast<std::size_t>(i)] = scores(row, i);
        y[static_cast<std::size_t>(i)] = labels(row, i) > 0.5;
      }
      try {
        bank.rules[k] = train_threshold(s, y, hinge_scale);
      } catch (const InvalidArgument&) {
        const std::string name = k < term_names.size() ? term_names[k] : "term " + std::to_string(k);
        throw DataError("GO term " + name + " has no positive training sample");
      }
    }
  });
  return bank;
}

LabelSet decode_terms(const GoThresholdBank& bank, const GoVocabulary& go_terms, const nn::Vector& posteriors) {
  if (go_terms.size() != bank.rules.size()) throw ShapeError("threshold bank and GO vocabulary differ in size");
  return go_terms.decode(bank.apply(posteriors));
}

LabelSet predict_terms(const NnHead& head, const GoThresholdBank& bank, const GoVocabulary& go_terms,
                       const nn::Vector& feature) {
  return decode_terms(bank, go_terms, head.predict(feature));
}

// ---- hybrid ---------------------------------------------------------------

double compute_alpha(double f1_m1, double f1_m2) {
  if (!(f1_m1 >= 0.0) || !(f1_m2 >= 0.0)) throw InvalidArgument("F1 scores must be non-negative");
  if (f1_m1 + f1_m2 == 0.0) throw InvalidArgument("undefined trade-off: both F1 scores are zero");
  return f1_m1 / (f1_m1 + f1_m2);
}

nn::Vector hybrid_combine(const nn::Vector& z1, const nn::Vector& z2, double alpha) {
  if (z1.size() != z2.size()) throw ShapeError("hybrid inputs differ in length");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in [0, 1]");
  return alpha * z1 + (1.0 - alpha) * z2;
}

nn::Matrix hybrid_combine(const nn::Matrix& z1, const nn::Matrix& z2, double alpha) {
  if (z1.rows() != z2.rows() || z1.cols() != z2.cols()) throw ShapeError("hybrid inputs differ in shape");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in [0, 1]");
  return alpha * z1 + (1.0 - alpha) * z2;
}

// ---- persistence ----------------------------------------------------------

namespace {

const char* direction_name(Direction d) { return d == Direction::kAbove ? "above" : "below"; }

Direction parse_direction(const std::string& s) {
  if (s == "above") return Direction::kAbove;
  if (s == "below") return Direction::kBelow;
  throw ShapeError("unknown threshold direction '" + s + "'");
}

Json bank_to_json(const GoThresholdBank& bank) {
  Json out = Json::array();
  for (const auto& r : bank.rules) {
    out.push_back({{"direction", direction_name(r.direction)}, {"threshold", r.threshold}, {"margin", r.margin}});
  }
  return out;
}

GoThresholdBank bank_from_json(const Json& j) {
  GoThresholdBank bank;
  for (const auto& r : j) bank.rules.push_back({parse_direction(r.at("direction")), r.at("threshold"), r.at("margin")});
  return bank;
}

Json head_json(const HeadModel& m, TensorWriter& w, const std::string& prefix) {
  w.add(prefix + "input_mean", m.head.input_mean);
  w.add(prefix + "input_scale", m.head.input_scale);
  w.add(prefix + "hidden.weights", m.head.net.hidden_weights);
  w.add(prefix + "hidden.bias", m.head.net.hidden_bias);
  w.add(prefix + "output.weights", m.head.net.out_weights);
  w.add(prefix + "output.bias", m.head.net.out_bias);
  Json history = Json::array();
  for (const auto& e : m.head.history) {
    history.push_back({{"epoch", e.epoch},
                       {"train_loss", e.train_loss},
                       {"validation_loss", std::isfinite(e.validation_loss) ? Json(e.validation_loss) : Json(nullptr)}});
  }
  return {{"config", m.config.to_json()},
          {"feature_source", m.feature_source},
          {"inputs", m.head.inputs()},
          {"hidden", m.head.net.hidden_bias.size()},
          {"history", history},
          {"best_epoch", m.head.best_epoch},
          {"thresholds", bank_to_json(m.bank)}};
}

HeadModel head_from_json(const Json& j, const GoVocabulary& go_terms, TensorReader& r, const std::string& prefix) {
  HeadModel m;
  m.go_terms = go_terms;
  const auto K = static_cast<nn::Index>(go_terms.size());
  nn::Index D = 0, Dh = 0;
  try {
    m.config = HeadConfig::from_json(j.at("config"));
    m.feature_source = j.at("feature_source");
    D = j.at("inputs");
    Dh = j.at("hidden");
    for (const auto& e : j.at("history")) {
      const double v = e.at("validation_loss").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                         : e.at("validation_loss").get<double>();
      m.head.history.push_back({e.at("epoch"), e.at("train_loss"), v});
    }
    m.head.best_epoch = j.at("best_epoch");
    m.bank = bank_from_json(j.at("thresholds"));
  } catch (const Json::exception& e) {
    throw ShapeError(std::string("malformed head header: ") + e.what());
  }
  if (m.bank.rules.size() != go_terms.size()) throw ShapeError("threshold count differs from the GO vocabulary size");
  m.head.input_mean = r.vector(prefix + "input_mean", D);
  m.head.input_scale = r.vector(prefix + "input_scale", D);
  m.head.net.hidden_weights = r.matrix(prefix + "hidden.weights", Dh, D);
  m.head.net.hidden_bias = r.vector(prefix + "hidden.bias", Dh);
  m.head.net.out_weights = r.matrix(prefix + "output.weights", K, Dh);
  m.head.net.out_bias = r.vector(prefix + "output.bias", K);
  return m;
}

Json base_header(const char* kind, const GoVocabulary& go_terms, const Json& meta) {
  Json h;
  h["kind"] = kind;
  h["go_terms"] = go_terms.terms();
  h["go_fingerprint"] = hex64(go_terms.fingerprint());
  h["meta"] = meta;
  return h;
}

GoVocabulary header_terms(const Json& h) {
  GoVocabulary v;
  try {
    v = GoVocabulary(h.at("go_terms").get<std::vector<std::string>>());
  } catch (const Json::exception& e) {
    throw ShapeError(std::string("malformed head header: ") + e.what());
  }
  if (h.at("go_fingerprint") != hex64(v.fingerprint())) throw ShapeError("GO vocabulary fingerprint mismatch");
  return v;
}

void expect_kind(const Json& h, const char* kind) {
  if (!h.contains("kind") || h["kind"] != kind) {
    throw DataError(std::string("HEAD0001 file is not a '") + kind + "' predictor");
  }
}

}  // namespace

std::string encode_head(const HeadModel& m, const Json& meta) {
  TensorWriter w;
  Json h = base_header("head", m.go_terms, meta);
  h["head"] = head_json(m, w, "");
  h["tensors"] = w.shapes();
  return encode_container(kHeadMagic, std::move(h), w.payload());
}

HeadModel decode_head(std::string_view bytes) {
  const Container c = decode_container(bytes, kHeadMagic);
  expect_kind(c.header, "head");
  const GoVocabulary terms = header_terms(c.header);
  TensorReader r(c);
  HeadModel m = head_from_json(c.header.at("head"), terms, r, "");
  r.finish();
  return m;
}

void save_head(const HeadModel& m, const std::filesystem::path& path, const Json& meta) {
  write_file(path, encode_head(m, meta));
}

HeadModel load_head(const std::filesystem::path& path) { return decode_head(read_file(path)); }

std::string encode_hybrid(const HybridModel& m, const Json& meta) {
  TensorWriter w;
  Json h = base_header("hybrid", m.go_terms, meta);
  h["m1"] = head_json(m.m1, w, "m1.");
  h["m2"] = head_json(m.m2, w, "m2.");
  h["alpha"] = m.alpha;
  h["f1_m1"] = m.f1_m1;
  h["f1_m2"] = m.f1_m2;
  h["thresholds"] = bank_to_json(m.bank);
  h["tensors"] = w.shapes();
  return encode_container(kHeadMagic, std::move(h), w.payload());
}

HybridModel decode_hybrid(std::string_view bytes) {
  const Container c = decode_container(bytes, kHeadMagic);
  expect_kind(c.header, "hybrid");
  HybridModel m;
  m.go_terms = header_terms(c.header);
  TensorReader r(c);
  m.m1 = head_from_json(c.header.at("m1"), m.go_terms, r, "m1.");
  m.m2 = head_from_json(c.header.at("m2"), m.go_terms, r, "m2.");
  r.finish();
  try {
    m.alpha = c.header.at("alpha");
    m.f1_m1 = c.header.at("f1_m1");
    m.f1_m2 = c.header.at("f1_m2");
    m.bank = bank_from_json(c.header.at("thresholds"));
  } catch (const Json::exception& e) {
    throw ShapeError(std::string("malformed hybrid header: ") + e.what());
  }
  if (m.bank.rules.size() != m.go_terms.size()) throw ShapeError("threshold count differs from the GO vocabulary size");
  return m;
}

void save_hybrid(const HybridModel& m, const std::filesystem::path& path, const Json& meta) {
  write_file(path, encode_hybrid(m, meta));
}

HybridModel load_hybrid(const std::filesystem::path& path) { return decode_hybrid(read_file(path)); }

std::string head_file_kind(const std::filesystem::path& path) {
  const Container c = read_container(path, kHeadMagic);
  return c.header.value("kind", std::string());
}

}  // namespace protvec
