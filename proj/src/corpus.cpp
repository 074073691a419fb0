#include "protvec/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "protvec/error.hpp"
#include "protvec/hash.hpp"
#include "protvec/rng.hpp"

namespace protvec {

namespace {

std::string_view trim_cr(std::string_view line) {
  while (!line.empty() && (line.back() == '\r' || line.back() == ' ' || line.back() == '\t')) {
    line.remove_suffix(1);
  }
  return line;
}

char upper(char c) { return (c >= 'a' && c <= 'z') ? static_cast<char>(c - 'a' + 'A') : c; }

std::string go_label(std::size_t k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "GO:%07zu", 9000001 + k);
  return buf;
}

}  // namespace

bool is_residue(char c) noexcept { return c >= 'A' && c <= 'Z'; }

bool is_go_id(std::string_view token) noexcept {
  if (token.size() != 10 || token.substr(0, 3) != "GO:") return false;
  return std::all_of(token.begin() + 3, token.end(), [](char c) { return c >= '0' && c <= '9'; });
}

// ---- GoVocabulary ---------------------------------------------------------

GoVocabulary::GoVocabulary(std::vector<std::string> terms) : terms_(std::move(terms)) {
  std::sort(terms_.begin(), terms_.end());
  terms_.erase(std::unique(terms_.begin(), terms_.end()), terms_.end());
  for (std::size_t k = 0; k < terms_.size(); ++k) index_.emplace(terms_[k], k);
}

std::optional<std::size_t> GoVocabulary::index(const std::string& term) const {
  auto it = index_.find(term);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::vector<double> GoVocabulary::one_hot(const LabelSet& labels) const {
  std::vector<double> y(terms_.size(), 0.0);
  for (const auto& label : labels) {
    if (auto k = index(label)) y[*k] = 1.0;
  }
  return y;
}

LabelSet GoVocabulary::decode(const std::vector<bool>& indicator) const {
  LabelSet out;
  for (std::size_t k = 0; k < terms_.size() && k < indicator.size(); ++k) {
    if (indicator[k]) out.insert(terms_[k]);
  }
  return out;
}

std::uint64_t GoVocabulary::fingerprint() const noexcept {
  std::uint64_t h = kFnvOffset;
  for (const auto& t : terms_) {
    h = fnv1a64(t, h);
    h = fnv1a64("\n", h);
  }
  return h;
}

std::string_view split_name(Split split) noexcept {
  switch (split) {
    case Split::kTrain:
      return "train";
    case Split::kValidation:
      return "validation";
    case Split::kTest:
      return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::kTrain;
  if (name == "validation") return Split::kValidation;
  if (name == "test") return Split::kTest;
  throw InvalidArgument("unknown split '" + std::string(name) + "'");
}

std::vector<std::size_t> Corpus::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (splits[i] == split) out.push_back(i);
  }
  return out;
}

std::vector<const ProteinRecord*> Corpus::subset(Split split) const {
  std::vector<const ProteinRecord*> out;
  for (std::size_t i : indices(split)) out.push_back(&records[i]);
  return out;
}

// ---- parsers --------------------------------------------------------------

std::vector<FastaEntry> parse_fasta(std::istream& in) {
  std::vector<FastaEntry> entries;
  std::vector<std::size_t> header_lines;
  std::string raw;
  std::size_t line_no = 0;
  auto close_entry = [&]() {
    if (!entries.empty() && entries.back().second.empty()) {
      throw ParseError("empty sequence for '" + entries.back().first + "'", header_lines.back());
    }
  };
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim_cr(raw);
    if (line.empty()) continue;
    if (line.front() == '>') {
      close_entry();
      std::string_view header = line.substr(1);
      const auto end = header.find_first_of(" \t");
      std::string id(header.substr(0, end));
      if (id.empty()) throw ParseError("header without identifier", line_no);
      entries.emplace_back(std::move(id), std::string{});
      header_lines.push_back(line_no);
      continue;
    }
    if (entries.empty()) throw ParseError("sequence data before first header", line_no);
    auto& seq = entries.back().second;
    for (char c : line) {
      const char u = upper(c);
      if (!is_residue(u)) {
        throw ParseError(std::string("invalid residue '") + c + "'", line_no);
      }
      seq.push_back(u);
    }
  }
  close_entry();
  return entries;
}

std::vector<FastaEntry> parse_fasta(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_fasta(in);
}

std::map<std::string, LabelSet> parse_annotations(std::istream& in) {
  std::map<std::string, LabelSet> out;
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = trim_cr(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto tab = line.find('\t');
    if (tab == std::string_view::npos) throw ParseError("expected id<TAB>terms", line_no);
    std::string id(line.substr(0, tab));
    if (id.empty()) throw ParseError("empty identifier", line_no);
    auto& labels = out[id];
    std::string_view rest = line.substr(tab + 1);
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      std::string_view token = rest.substr(0, comma);
      while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
      while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
      if (!is_go_id(token)) {
        throw ParseError("malformed GO identifier '" + std::string(token) + "'", line_no);
      }
      labels.emplace(token);
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
  }
  return out;
}

std::map<std::string, LabelSet> parse_annotations(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_annotations(in);
}

std::vector<ProteinRecord> attach_labels(const std::vector<FastaEntry>& entries,
                                         const std::map<std::string, LabelSet>& annotations) {
  std::vector<ProteinRecord> records;
  records.reserve(entries.size());
  for (const auto& [id, seq] : entries) {
    ProteinRecord r{id, seq, {}};
    if (auto it = annotations.find(id); it != annotations.end()) r.labels = it->second;
    records.push_back(std::move(r));
  }
  return records;
}

// ---- dataset preparation --------------------------------------------------

Corpus filter_corpus(std::vector<ProteinRecord> records, std::size_t min_annotations) {
  std::map<std::string, std::size_t> counts;
  for (const auto& r : records) {
    for (const auto& t : r.labels) ++counts[t];
  }
  std::vector<std::string> kept;
  for (const auto& [term, n] : counts) {
    if (n >= min_annotations) kept.push_back(term);
  }
  Corpus corpus;
  corpus.vocabulary = GoVocabulary(std::move(kept));
  for (auto& r : records) {
    std::erase_if(r.labels, [&](const std::string& t) { return !corpus.vocabulary.contains(t); });
    if (!r.labels.empty()) corpus.records.push_back(std::move(r));
  }
  if (corpus.records.empty()) throw DataError("empty corpus after filtering");
  corpus.splits.assign(corpus.records.size(), Split::kTrain);
  return corpus;
}

Corpus split_corpus(Corpus corpus, const SplitFractions& fractions, std::uint64_t seed) {
  for (double f : {fractions.train, fractions.validation, fractions.test}) {
    if (!(f >= 0.0 && f <= 1.0)) throw InvalidArgument("split fraction outside [0,1]");
  }
  if (std::abs(fractions.train + fractions.validation + fractions.test - 1.0) > 1e-9) {
    throw InvalidArgument("split fractions must sum to 1");
  }
  const std::size_t n = corpus.records.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));

  auto count = [n](double f) { return static_cast<std::size_t>(std::floor(f * static_cast<double>(n) + 0.5)); };
  const std::size_t n_train = std::min(n, count(fractions.train));
  const std::size_t n_val = std::min(n - n_train, count(fractions.validation));
  corpus.splits.assign(n, Split::kTest);
  for (std::size_t r = 0; r < n; ++r) {
    const Split s = r < n_train ? Split::kTrain : (r < n_train + n_val ? Split::kValidation : Split::kTest);
    corpus.splits[order[r]] = s;
  }
  return corpus;
}

// ---- synthetic corpora ----------------------------------------------------

void SynthSpec::validate() const {
  if (label_count < 1 || motif_length < 1 || motifs_per_label < 1 || record_count < 1 ||
      min_labels_per_protein < 1) {
    throw InvalidArgument("synthetic spec counts must be >= 1");
  }
  if (min_labels_per_protein > max_labels_per_protein || max_labels_per_protein > label_count) {
    throw InvalidArgument("labels-per-protein range must lie within [1, label count]");
  }
  if (min_length > max_length) throw InvalidArgument("length range is inverted");
  if (motif_length >= min_length) throw InvalidArgument("motif length must be below the minimum sequence length");
  if (!(noise_rate >= 0.0 && noise_rate < 0.5)) throw InvalidArgument("noise rate must lie in [0, 0.5)");
}

SyntheticCorpus generate_synthetic(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const auto residue = [&rng]() { return kCanonicalResidues[rng.below(kCanonicalResidues.size())]; };

  SyntheticCorpus out;
  out.truth.spec = spec;
  std::vector<std::string> labels(spec.label_count);
  std::vector<std::string> motifs(spec.label_count);
  for (std::size_t k = 0; k < spec.label_count; ++k) {
    labels[k] = go_label(k);
    for (std::size_t p = 0; p < spec.motif_length; ++p) motifs[k].push_back(residue());
    out.truth.motifs.emplace(labels[k], motifs[k]);
  }

  const double log_lo = std::log(static_cast<double>(spec.min_length));
  const double log_hi = std::log(static_cast<double>(spec.max_length));
  std::vector<std::size_t> label_pool(spec.label_count);

  for (std::size_t i = 0; i < spec.record_count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "syn%05zu", i);
    ProteinRecord rec;
    rec.id = id;

    const std::size_t n_labels =
        spec.min_labels_per_protein + rng.below(spec.max_labels_per_protein - spec.min_labels_per_protein + 1);
    std::iota(label_pool.begin(), label_pool.end(), 0);
    for (std::size_t j = 0; j < n_labels; ++j) {
      std::swap(label_pool[j], label_pool[j + rng.below(spec.label_count - j)]);
    }
    std::vector<std::size_t> chosen(label_pool.begin(), label_pool.begin() + static_cast<std::ptrdiff_t>(n_labels));
    std::sort(chosen.begin(), chosen.end());

    const double u = rng.uniform(log_lo, log_hi);
    const auto length = std::clamp<std::size_t>(static_cast<std::size_t>(std::llround(std::exp(u))),
                                                spec.min_length, spec.max_length);
    rec.sequence.resize(length);
    for (auto& c : rec.sequence) c = residue();

    const std::size_t copies = n_labels * spec.motifs_per_label;
    const std::size_t m = spec.motif_length;
    std::vector<std::size_t> starts(copies);
    bool placed = false;
    for (int attempt = 0; attempt < 1000 && !placed; ++attempt) {
      for (auto& s : starts) s = rng.below(length - m + 1);
      std::vector<std::size_t> sorted = starts;
      std::sort(sorted.begin(), sorted.end());
      placed = true;
      for (std::size_t c = 1; c < sorted.size(); ++c) {
        if (sorted[c] < sorted[c - 1] + m) {
          placed = false;
          break;
        }
      }
    }
    if (!placed) {
      throw DataError("cannot place " + std::to_string(copies) + " motifs without overlap in a sequence of length " +
                      std::to_string(length) + "; increase the minimum sequence length");
    }
    for (std::size_t c = 0; c < copies; ++c) {
      const std::size_t k = chosen[c / spec.motifs_per_label];
      std::string copy = motifs[k];
      for (auto& ch : copy) {
        if (rng.bernoulli(spec.noise_rate)) {
          // Substitute with one of the other 19 residues.
          const auto pos = kCanonicalResidues.find(ch);
          const auto shift = 1 + rng.below(kCanonicalResidues.size() - 1);
          ch = kCanonicalResidues[(pos + shift) % kCanonicalResidues.size()];
        }
      }
      rec.sequence.replace(starts[c], m, copy);
      out.truth.placements.push_back({rec.id, labels[k], starts[c], copy});
    }
    for (std::size_t k : chosen) rec.labels.insert(labels[k]);
    out.corpus.records.push_back(std::move(rec));
  }
  out.corpus.vocabulary = GoVocabulary(labels);
  out.corpus.splits.assign(out.corpus.records.size(), Split::kTrain);
  return out;
}

// ---- persistence ----------------------------------------------------------

void write_fasta(std::ostream& out, const std::vector<ProteinRecord>& records, std::size_t width) {
  for (const auto& r : records) {
    out << '>' << r.id << '\n';
    for (std::size_t p = 0; p < r.sequence.size(); p += width) {
      out << std::string_view(r.sequence).substr(p, width) << '\n';
    }
  }
}

void write_annotations(std::ostream& out, const std::vector<std::pair<std::string, LabelSet>>& rows) {
  for (const auto& [id, labels] : rows) {
    out << id << '\t';
    bool first = true;
    for (const auto& t : labels) {
      if (!first) out << ',';
      out << t;
      first = false;
    }
    out << '\n';
  }
}

namespace {

nlohmann::json truth_to_json(const SynthTruth& truth) {
  const auto& s = truth.spec;
  nlohmann::json j;
  j["spec"] = {{"label_count", s.label_count},
               {"motif_length", s.motif_length},
               {"motifs_per_label", s.motifs_per_label},
               {"min_labels_per_protein", s.min_labels_per_protein},
               {"max_labels_per_protein", s.max_labels_per_protein},
               {"min_length", s.min_length},
               {"max_length", s.max_length},
               {"noise_rate", s.noise_rate},
               {"record_count", s.record_count},
               {"seed", s.seed}};
  j["motifs"] = truth.motifs;
  auto& placements = j["placements"] = nlohmann::json::array();
  for (const auto& p : truth.placements) {
    placements.push_back({{"id", p.record_id}, {"label", p.label}, {"start", p.start}, {"planted", p.planted}});
  }
  return j;
}

SynthTruth truth_from_json(const nlohmann::json& j) {
  SynthTruth truth;
  const auto& s = j.at("spec");
  truth.spec.label_count = s.at("label_count");
  truth.spec.motif_length = s.at("motif_length");
  truth.spec.motifs_per_label = s.at("motifs_per_label");
  truth.spec.min_labels_per_protein = s.at("min_labels_per_protein");
  truth.spec.max_labels_per_protein = s.at("max_labels_per_protein");
  truth.spec.min_length = s.at("min_length");
  truth.spec.max_length = s.at("max_length");
  truth.spec.noise_rate = s.at("noise_rate");
  truth.spec.record_count = s.at("record_count");
  truth.spec.seed = s.at("seed");
  truth.motifs = j.at("motifs").get<std::map<std::string, std::string>>();
  for (const auto& p : j.at("placements")) {
    truth.placements.push_back({p.at("id"), p.at("label"), p.at("start"), p.at("planted")});
  }
  return truth;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return in;
}

}  // namespace

void write_corpus(const std::filesystem::path& dir, const Corpus& corpus, const SynthTruth* truth) {
  std::filesystem::create_directories(dir);
  {
    auto out = open_out(dir / "records.fasta");
    write_fasta(out, corpus.records);
  }
  {
    auto out = open_out(dir / "labels.tsv");
    std::vector<std::pair<std::string, LabelSet>> rows;
    for (const auto& r : corpus.records) rows.emplace_back(r.id, r.labels);
    write_annotations(out, rows);
  }
  {
    auto out = open_out(dir / "splits.tsv");
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      out << corpus.records[i].id << '\t' << split_name(corpus.splits[i]) << '\n';
    }
  }
  if (truth != nullptr) {
    auto out = open_out(dir / "manifest.json");
    out << truth_to_json(*truth).dump(1) << '\n';
  }
}

Corpus read_corpus(const std::filesystem::path& dir) {
  auto fasta_in = open_in(dir / "records.fasta");
  auto labels_in = open_in(dir / "labels.tsv");
  Corpus corpus;
  corpus.records = attach_labels(parse_fasta(fasta_in), parse_annotations(labels_in));
  std::vector<std::string> terms;
  for (const auto& r : corpus.records) terms.insert(terms.end(), r.labels.begin(), r.labels.end());
  corpus.vocabulary = GoVocabulary(std::move(terms));

  corpus.splits.assign(corpus.size(), Split::kTrain);
  if (std::filesystem::exists(dir / "splits.tsv")) {
    std::map<std::string, Split> tags;
    auto in = open_in(dir / "splits.tsv");
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
      ++line_no;
      std::string_view line = trim_cr(raw);
      if (line.empty()) continue;
      const auto tab = line.find('\t');
      if (tab == std::string_view::npos) throw ParseError("expected id<TAB>split", line_no);
      tags[std::string(line.substr(0, tab))] = parse_split(line.substr(tab + 1));
    }
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      auto it = tags.find(corpus.records[i].id);
      if (it == tags.end()) throw DataError("record '" + corpus.records[i].id + "' has no split tag");
      corpus.splits[i] = it->second;
    }
  }
  return corpus;
}

std::optional<SynthTruth> read_synth_truth(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  if (!std::filesystem::exists(path)) return std::nullopt;
  auto in = open_in(path);
  return truth_from_json(nlohmann::json::parse(in));
}

}  // namespace protvec
