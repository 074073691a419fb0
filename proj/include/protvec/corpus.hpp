#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace protvec {

using LabelSet = std::set<std::string>;

/// True for the accepted residue alphabet: the 20 canonical amino acids plus
/// the ambiguity codes B, J, O, U, X and Z (upper case only).
bool is_residue(char c) noexcept;

inline constexpr std::string_view kCanonicalResidues = "ACDEFGHIKLMNPQRSTVWY";

/// True when `token` is "GO:" followed by exactly seven digits.
bool is_go_id(std::string_view token) noexcept;

struct ProteinRecord {
  std::string id;
  std::string sequence;
  LabelSet labels;
};

/// Ordered set of K GO identifiers; position k is the one-hot column of term k.
class GoVocabulary {
 public:
  GoVocabulary() = default;
  /// Terms are sorted lexicographically and de-duplicated.
  explicit GoVocabulary(std::vector<std::string> terms);

  std::size_t size() const noexcept { return terms_.size(); }
  bool empty() const noexcept { return terms_.empty(); }
  const std::string& term(std::size_t k) const { return terms_.at(k); }
  const std::vector<std::string>& terms() const noexcept { return terms_; }
  std::optional<std::size_t> index(const std::string& term) const;
  bool contains(const std::string& term) const { return index_.count(term) > 0; }

  /// Membership indicator y_k for every term, in vocabulary order.
  std::vector<double> one_hot(const LabelSet& labels) const;
  /// Terms whose indicator is set.
  LabelSet decode(const std::vector<bool>& indicator) const;

  /// FNV-1a hash of the ordered term list; identifies a label space.
  std::uint64_t fingerprint() const noexcept;

  bool operator==(const GoVocabulary& other) const { return terms_ == other.terms_; }

 private:
  std::vector<std::string> terms_;
  std::map<std::string, std::size_t> index_;
};

enum class Split : std::uint8_t { kTrain, kValidation, kTest };

std::string_view split_name(Split split) noexcept;
Split parse_split(std::string_view name);

struct Corpus {
  std::vector<ProteinRecord> records;
  GoVocabulary vocabulary;
  std::vector<Split> splits;  // parallel to records

  std::size_t size() const noexcept { return records.size(); }
  /// Record positions carrying `split`, in corpus order.
  std::vector<std::size_t> indices(Split split) const;
  std::vector<const ProteinRecord*> subset(Split split) const;
};

struct SplitFractions {
  double train = 0.60;
  double validation = 0.15;
  double test = 0.25;
};

struct SynthSpec {
  std::size_t label_count = 6;
  std::size_t motif_length = 15;
  std::size_t motifs_per_label = 1;
  std::size_t min_labels_per_protein = 1;
  std::size_t max_labels_per_protein = 2;
  std::size_t min_length = 80;
  std::size_t max_length = 1500;
  double noise_rate = 0.05;
  std::size_t record_count = 1200;
  std::uint64_t seed = 1;

  /// Throws InvalidArgument when an invariant does not hold.
  void validate() const;
};

struct MotifPlacement {
  std::string record_id;
  std::string label;
  std::size_t start = 0;
  std::string planted;  // the copy actually written, after noise
};

/// Generator ground truth, persisted next to the synthetic corpus.
struct SynthTruth {
  SynthSpec spec;
  std::map<std::string, std::string> motifs;  // label -> motif
  std::vector<MotifPlacement> placements;
};

struct SyntheticCorpus {
  Corpus corpus;
  SynthTruth truth;
};

using FastaEntry = std::pair<std::string, std::string>;

/// Reads FASTA text. Wrapped sequence lines are joined and upper-cased; the
/// id is the header token up to the first whitespace.
std::vector<FastaEntry> parse_fasta(std::istream& in);
std::vector<FastaEntry> parse_fasta(std::string_view text);

/// Reads "id<TAB>GO:...,GO:..." lines. Duplicate ids merge by union.
std::map<std::string, LabelSet> parse_annotations(std::istream& in);
std::map<std::string, LabelSet> parse_annotations(std::string_view text);

/// Joins FASTA entries with annotations; unannotated entries get empty labels.
std::vector<ProteinRecord> attach_labels(
    const std::vector<FastaEntry>& entries,
    const std::map<std::string, LabelSet>& annotations);

/// Removes every term annotating fewer than `min_annotations` records, then
/// drops records whose label set became empty. Single pass. All records of the
/// result are tagged train.
Corpus filter_corpus(std::vector<ProteinRecord> records, std::size_t min_annotations = 200);

/// Seeded uniform shuffle followed by contiguous train/validation/test cuts.
Corpus split_corpus(Corpus corpus, const SplitFractions& fractions, std::uint64_t seed);

SyntheticCorpus generate_synthetic(const SynthSpec& spec);

// Corpus directory layout: records.fasta, labels.tsv, splits.tsv and, for
// synthetic corpora, manifest.json.
void write_corpus(const std::filesystem::path& dir, const Corpus& corpus,
                  const SynthTruth* truth = nullptr);
Corpus read_corpus(const std::filesystem::path& dir);
std::optional<SynthTruth> read_synth_truth(const std::filesystem::path& dir);

void write_fasta(std::ostream& out, const std::vector<ProteinRecord>& records,
                 std::size_t width = 60);
void write_annotations(std::ostream& out, const std::vector<std::pair<std::string, LabelSet>>& rows);

}  // namespace protvec
