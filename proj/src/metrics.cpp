#include "protvec/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <ostream>

#include "protvec/error.hpp"

namespace protvec {

SampleScores score_sample(const LabelSet& truth, const LabelSet& predicted) {
  if (truth.empty()) throw InvalidArgument("a sample has an empty true label set");
  std::size_t hits = 0;
  for (const auto& t : predicted) hits += truth.count(t);
  const double h = static_cast<double>(hits);
  SampleScores s;
  s.precision = predicted.empty() ? 0.0 : h / static_cast<double>(predicted.size());
  s.recall = h / static_cast<double>(truth.size());
  s.f1 = 2.0 * h / static_cast<double>(truth.size() + predicted.size());
  return s;
}

MetricsSummary compute_metrics(std::span<const LabelPair> pairs) {
  if (pairs.empty()) throw InvalidArgument("no samples to evaluate");
  MetricsSummary m;
  m.count = pairs.size();
  for (const auto& p : pairs) {
    const SampleScores s = score_sample(p.truth, p.predicted);
    m.precision += s.precision;
    m.recall += s.recall;
    m.f1 += s.f1;
  }
  const double n = static_cast<double>(pairs.size());
  m.precision /= n;
  m.recall /= n;
  m.f1 /= n;
  return m;
}

std::string BucketReport::label() const {
  return "(" + std::to_string(lower) + "," + (upper ? std::to_string(*upper) + "]" : std::string("inf)"));
}

std::vector<BucketReport> bucketize(std::span<const LabelPair> pairs, std::span<const std::size_t> lengths,
                                    std::span<const std::size_t> edges) {
  if (pairs.size() != lengths.size()) throw ShapeError("pairs and lengths differ in count");
  for (std::size_t k = 1; k < edges.size(); ++k) {
    if (edges[k] <= edges[k - 1]) throw InvalidArgument("bucket edges must be strictly ascending");
  }
  std::vector<BucketReport> out(edges.size() + 1);
  std::vector<std::vector<LabelPair>> members(out.size());
  for (std::size_t b = 0; b < out.size(); ++b) {
    out[b].lower = b == 0 ? 0 : edges[b - 1];
    if (b < edges.size()) out[b].upper = edges[b];
  }
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto b = static_cast<std::size_t>(std::lower_bound(edges.begin(), edges.end(), lengths[i]) - edges.begin());
    members[b].push_back(pairs[i]);
  }
  for (std::size_t b = 0; b < out.size(); ++b) {
    if (!members[b].empty()) out[b].metrics = compute_metrics(members[b]);
  }
  return out;
}

MetricsReport make_report(std::string name, std::span<const LabelPair> pairs, std::span<const std::size_t> lengths,
                          std::span<const std::size_t> edges) {
  return {std::move(name), compute_metrics(pairs), bucketize(pairs, lengths, edges)};
}

namespace {

Json summary_json(const MetricsSummary& m) {
  return {{"count", m.count}, {"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

std::string fixed(double v, int digits = 4) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

Json report_to_json(const MetricsReport& r) {
  Json buckets = Json::array();
  for (const auto& b : r.buckets) {
    Json j = summary_json(b.metrics);
    j["range"] = b.label();
    j["lower"] = b.lower;
    j["upper"] = b.upper ? Json(*b.upper) : Json(nullptr);
    buckets.push_back(std::move(j));
  }
  return {{"name", r.name}, {"overall", summary_json(r.overall)}, {"buckets", buckets}};
}

void write_report_table(std::ostream& out, const MetricsReport& r) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"bucket", "n", "precision", "recall", "f1"});
  const auto add = [&](const std::string& label, const MetricsSummary& m) {
    rows.push_back({label, std::to_string(m.count), fixed(m.precision), fixed(m.recall), fixed(m.f1)});
  };
  add("all", r.overall);
  for (const auto& b : r.buckets) add(b.label(), b.metrics);

  std::vector<std::size_t> width(rows.front().size(), 0);
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  }
  if (!r.name.empty()) out << r.name << '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      const std::string pad(width[c] - row[c].size(), ' ');
      out << (c == 0 ? row[c] + pad : "  " + pad + row[c]);
    }
    out << '\n';
  }
}

void write_report_csv(std::ostream& out, const MetricsReport& r) {
  out << "name,bucket,lower,upper,count,precision,recall,f1\n";
  const auto line = [&](const std::string& label, std::size_t lo, const std::string& hi, const MetricsSummary& m) {
    out << r.name << ',' << '"' << label << '"' << ',' << lo << ',' << hi << ',' << m.count << ','
        << fixed(m.precision, 6) << ',' << fixed(m.recall, 6) << ',' << fixed(m.f1, 6) << '\n';
  };
  line("all", 0, "", r.overall);
  for (const auto& b : r.buckets) line(b.label(), b.lower, b.upper ? std::to_string(*b.upper) : "", b.metrics);
}

}  // namespace protvec
