#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <sstream>

#include "protvec/cli.hpp"
#include "protvec/corpus.hpp"
#include "protvec/error.hpp"
#include "protvec/featurize.hpp"
#include "protvec/heads.hpp"
#include "protvec/metrics.hpp"
#include "protvec/mlda.hpp"
#include "protvec/nn.hpp"
#include "protvec/pipeline.hpp"
#include "protvec/segmenter.hpp"
#include "protvec/tokenizer.hpp"

namespace py = pybind11;
using namespace protvec;

namespace {

std::vector<LabelPair> to_pairs(const std::vector<LabelSet>& truth, const std::vector<LabelSet>& predicted) {
  if (truth.size() != predicted.size()) throw ShapeError("truth and predicted lists differ in length");
  std::vector<LabelPair> pairs;
  pairs.reserve(truth.size());
  for (std::size_t i = 0; i < truth.size(); ++i) pairs.push_back({truth[i], predicted[i]});
  return pairs;
}

py::dict summary_dict(const MetricsSummary& m) {
  py::dict d;
  d["count"] = m.count;
  d["precision"] = m.precision;
  d["recall"] = m.recall;
  d["f1"] = m.f1;
  return d;
}

py::tuple run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv{"protvec"};
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  int code;
  {
    py::gil_scoped_release release;
    code = cli_dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  }
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(_protvec, m) {
  m.doc() = "Segment-based protein function features: segmentation, LSTM kernel, MLDA, thresholds and metrics";

  auto data_error = py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);
  (void)data_error;

  // ---- corpus ---------------------------------------------------------------
  py::class_<ProteinRecord>(m, "ProteinRecord")
      .def(py::init<>())
      .def(py::init([](std::string id, std::string sequence, LabelSet labels) {
             return ProteinRecord{std::move(id), std::move(sequence), std::move(labels)};
           }),
           py::arg("id"), py::arg("sequence"), py::arg("labels") = LabelSet{})
      .def_readwrite("id", &ProteinRecord::id)
      .def_readwrite("sequence", &ProteinRecord::sequence)
      .def_readwrite("labels", &ProteinRecord::labels)
      .def("__repr__", [](const ProteinRecord& r) {
        return "<ProteinRecord " + r.id + " len=" + std::to_string(r.sequence.size()) + ">";
      });

  m.def(
      "filter_corpus",
      [](std::vector<ProteinRecord> records, std::size_t min_annotations) {
        const Corpus c = filter_corpus(std::move(records), min_annotations);
        return py::make_tuple(c.records, c.vocabulary.terms());
      },
      py::arg("records"), py::arg("min_annotations") = 200,
      "Drops GO terms with fewer proteins than the threshold, then proteins left without terms. "
      "Returns (records, terms).");

  m.def(
      "split_counts",
      [](std::vector<ProteinRecord> records, double train, double validation, double test, std::uint64_t seed) {
        Corpus c = filter_corpus(std::move(records), 1);
        c = split_corpus(std::move(c), SplitFractions{train, validation, test}, seed);
        return py::make_tuple(c.indices(Split::kTrain).size(), c.indices(Split::kValidation).size(),
                              c.indices(Split::kTest).size());
      },
      py::arg("records"), py::arg("train"), py::arg("validation"), py::arg("test"), py::arg("seed") = 1);

  m.def(
      "generate_synthetic",
      [](std::size_t labels, std::size_t records, std::size_t min_length, std::size_t max_length, double noise,
         std::uint64_t seed) {
        SynthSpec spec;
        spec.label_count = labels;
        spec.record_count = records;
        spec.min_length = min_length;
        spec.max_length = max_length;
        spec.noise_rate = noise;
        spec.seed = seed;
        return generate_synthetic(spec).corpus.records;
      },
      py::arg("labels") = 6, py::arg("records") = 1200, py::arg("min_length") = 80, py::arg("max_length") = 1500,
      py::arg("noise") = 0.05, py::arg("seed") = 1);

  // ---- segmenter / tokenizer ----------------------------------------------
  py::class_<Segment>(m, "Segment")
      .def_readonly("start", &Segment::start)
      .def_readonly("residues", &Segment::residues)
      .def_readonly("pad_length", &Segment::pad_length);

  m.def("segment_sequence", &segment_sequence, py::arg("sequence"), py::arg("size"),
        py::arg("stride") = kDefaultStride);
  m.def("segment_count", &segment_count, py::arg("length"), py::arg("size"), py::arg("stride") = kDefaultStride);

  m.def(
      "tokenize",
      [](const std::string& residues, const std::vector<std::string>& corpus, std::size_t n, std::size_t min_count) {
        const auto vocab = build_vocab(std::span<const std::string>(corpus), n, min_count);
        return tokenize(residues, vocab);
      },
      py::arg("residues"), py::arg("corpus"), py::arg("n") = 4, py::arg("min_count") = 1,
      "Token ids of `residues` under a vocabulary built from `corpus`; id 0 marks padding or unknown n-mers.");

  // ---- nn kernel ------------------------------------------------------------
  m.def(
      "lstm_cell_step",
      [](const nn::Matrix& weights, const nn::Vector& bias, const nn::Vector& h_prev, const nn::Vector& c_prev,
         const nn::Vector& x) {
        nn::LstmParams p(h_prev.size(), x.size());
        if (weights.rows() != p.weights.rows() || weights.cols() != p.weights.cols() || bias.size() != p.bias.size()) {
          throw ShapeError("weights must be 4H x (H+E) and bias 4H");
        }
        p.weights = weights;
        p.bias = bias;
        const auto s = nn::lstm_cell_step(p, h_prev, c_prev, x);
        py::dict d;
        d["forget"] = s.forget;
        d["input"] = s.input;
        d["candidate"] = s.candidate;
        d["output"] = s.output;
        d["cell"] = s.cell;
        d["hidden"] = s.hidden;
        return d;
      },
      py::arg("weights"), py::arg("bias"), py::arg("h_prev"), py::arg("c_prev"), py::arg("x"),
      "One LSTM step; gate rows are stacked forget, input, candidate, output.");

  // ---- MLDA -----------------------------------------------------------------
  m.def(
      "mlda_scatter",
      [](const nn::Matrix& X, const nn::Matrix& Y) {
        const auto s = mlda_scatter(X, Y);
        return py::make_tuple(s.between, s.within);
      },
      py::arg("X"), py::arg("Y"), "Between- and within-class scatter of n x d features and n x K labels.");
  m.def(
      "mlda_fit",
      [](const nn::Matrix& X, const nn::Matrix& Y, double epsilon) {
        const auto model = mlda_fit(X, Y, epsilon);
        return py::make_tuple(model.projection, model.eigenvalues);
      },
      py::arg("X"), py::arg("Y"), py::arg("epsilon") = 1e-6, "Returns (projection d x (K-1), eigenvalues).");

  // ---- thresholds / hybrid -------------------------------------------------
  m.def(
      "train_threshold",
      [](const std::vector<double>& scores, const std::vector<bool>& labels, double scale) {
        const auto r = train_threshold(scores, labels, scale);
        return py::make_tuple(r.direction == Direction::kAbove ? "above" : "below", r.threshold, r.margin);
      },
      py::arg("scores"), py::arg("labels"), py::arg("scale") = kDefaultHingeScale,
      "Returns (direction, threshold, margin).");
  m.def(
      "hinge_loss",
      [](const std::string& direction, double threshold, double margin, const std::vector<double>& scores,
         const std::vector<bool>& labels) {
        if (direction != "above" && direction != "below") throw InvalidArgument("direction must be above or below");
        const ThresholdRule r{direction == "above" ? Direction::kAbove : Direction::kBelow, threshold, margin};
        return hinge_loss(r, scores, labels);
      },
      py::arg("direction"), py::arg("threshold"), py::arg("margin"), py::arg("scores"), py::arg("labels"));
  m.def("compute_alpha", &compute_alpha, py::arg("f1_m1"), py::arg("f1_m2"));
  m.def(
      "hybrid_combine", [](const nn::Vector& z1, const nn::Vector& z2, double alpha) { return hybrid_combine(z1, z2, alpha); },
      py::arg("z1"), py::arg("z2"), py::arg("alpha"));

  // ---- metrics ----------------------------------------------------------------
  m.def(
      "score_sample",
      [](const LabelSet& truth, const LabelSet& predicted) {
        const auto s = score_sample(truth, predicted);
        return py::make_tuple(s.precision, s.recall, s.f1);
      },
      py::arg("truth"), py::arg("predicted"));
  m.def(
      "compute_metrics",
      [](const std::vector<LabelSet>& truth, const std::vector<LabelSet>& predicted) {
        return summary_dict(compute_metrics(to_pairs(truth, predicted)));
      },
      py::arg("truth"), py::arg("predicted"));
  m.def(
      "bucketize",
      [](const std::vector<LabelSet>& truth, const std::vector<LabelSet>& predicted,
         const std::vector<std::size_t>& lengths, std::optional<std::vector<std::size_t>> edges) {
        const auto pairs = to_pairs(truth, predicted);
        const auto buckets = edges ? bucketize(pairs, lengths, *edges) : bucketize(pairs, lengths);
        py::list out;
        for (const auto& b : buckets) {
          py::dict d = summary_dict(b.metrics);
          d["range"] = b.label();
          out.append(d);
        }
        return out;
      },
      py::arg("truth"), py::arg("predicted"), py::arg("lengths"), py::arg("edges") = py::none());

  // ---- pipeline ---------------------------------------------------------------
  m.def("derive_seed", &derive_seed, py::arg("seed"), py::arg("stage"));
  m.def(
      "load_features",
      [](const std::filesystem::path& path) {
        const auto f = load_features(path);
        return py::make_tuple(f.ids, f.values);
      },
      py::arg("path"), "Returns (ids, n x dims matrix) from a feature file.");
  m.def("cli", &run_cli, py::arg("args"),
        "Runs one command-line invocation in-process; returns (exit_code, stdout, stderr).");
}
