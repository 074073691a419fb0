#include <doctest.h>

#include "fixtures.hpp"
#include "protvec/error.hpp"
#include "protvec/segmenter.hpp"

using namespace protvec;

namespace {

// Start offsets enumerated directly from the window rule: keep adding
// windows every `stride` residues until one reaches the end.
std::vector<std::size_t> oracle_starts(std::size_t L, std::size_t s, std::size_t stride) {
  std::vector<std::size_t> starts{0};
  while (starts.back() + s < L && starts.back() + stride < L) starts.push_back(starts.back() + stride);
  return starts;
}

}  // namespace

TEST_SUITE("segmenter") {

TEST_CASE("worked example L=400 s=120") {
  Rng rng(1);
  const auto segs = segment_sequence(fixture::random_protein(rng, 400), 120);
  REQUIRE(segs.size() == 11);
  for (std::size_t j = 0; j < segs.size(); ++j) CHECK(segs[j].start == 30 * j);
  CHECK(segs.back().start == 300);
  CHECK(segs.back().pad_length == 20);
  CHECK(segs.back().residues.substr(100) == std::string(20, kPadSymbol));
}

TEST_CASE("worked example L=1000 s=100 has an unpadded tail") {
  Rng rng(2);
  const auto segs = segment_sequence(fixture::random_protein(rng, 1000), 100);
  REQUIRE(segs.size() == 31);
  CHECK(segs.back().start == 900);
  CHECK(segs.back().pad_length == 0);
}

TEST_CASE("short and exact-fit sequences") {
  Rng rng(3);
  const auto a = segment_sequence(fixture::random_protein(rng, 50), 120);
  REQUIRE(a.size() == 1);
  CHECK(a[0].pad_length == 70);
  CHECK(a[0].residues.size() == 120);
  const auto b = segment_sequence(fixture::random_protein(rng, 120), 120);
  REQUIRE(b.size() == 1);
  CHECK(b[0].pad_length == 0);
}

TEST_CASE("invalid arguments") {
  CHECK_THROWS_AS(segment_sequence("MKVLAWMKVL", 3), InvalidArgument);
  CHECK_THROWS_AS(segment_sequence("", 10), InvalidArgument);
}

TEST_CASE("segments inherit the record's labels") {
  const ProteinRecord r{"p", std::string(200, 'A'), {"GO:0000001", "GO:0000002"}};
  for (const auto& s : segment_record(r, 100)) {
    CHECK(s.parent_id == "p");
    CHECK(s.labels == r.labels);
  }
}

TEST_CASE("coverage, overlap, reconstruction and count over many lengths") {
  Rng rng(4);
  for (std::size_t s : {4ul, 29ul, 30ul, 60ul, 100ul, 120ul, 140ul}) {
    std::size_t previous = 0;
    for (std::size_t L = 1; L <= 420; L += 1 + L / 40) {
      const std::string seq = fixture::random_protein(rng, L);
      const auto segs = segment_sequence(seq, s);
      const auto starts = oracle_starts(L, s, 30);
      REQUIRE(segs.size() == starts.size());
      CHECK(segment_count(L, s) == segs.size());
      CHECK(segs.size() >= previous);
      previous = segs.size();

      std::vector<int> covered(L, 0);
      for (std::size_t j = 0; j < segs.size(); ++j) {
        const auto& g = segs[j];
        CHECK(g.start == starts[j]);
        CHECK(g.residues.size() == s);
        CHECK(g.pad_length < s);
        if (j + 1 < segs.size()) CHECK(g.pad_length == 0);
        for (std::size_t p = g.start; p < std::min(L, g.start + s); ++p) covered[p] = 1;
        if (j > 0 && s > 30) {
          // Shared residues between consecutive windows.
          const auto& prev = segs[j - 1];
          CHECK(prev.residues.substr(30) == g.residues.substr(0, s - 30));
        }
        if (j > 0) {
          CHECK(g.start < L);
        }
      }
      if (s >= 30) {
        for (int c : covered) CHECK(c == 1);
      }

      if (s >= 30) {
        std::string rebuilt;
        for (std::size_t j = 0; j + 1 < segs.size(); ++j) rebuilt += segs[j].residues.substr(0, 30);
        rebuilt += segs.back().residues.substr(0, s - segs.back().pad_length);
        CHECK(rebuilt == seq);
      }
    }
  }
}

TEST_CASE("segment sizes below the stride leave gaps but still segment") {
  const auto segs = segment_sequence(std::string(100, 'A'), 20);
  REQUIRE(segs.size() == 4);
  CHECK(segs[1].start == 30);
}

}  // TEST_SUITE
