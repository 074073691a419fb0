#include <doctest.h>

#include "fixtures.hpp"
#include "protvec/error.hpp"
#include "protvec/segmenter.hpp"
#include "protvec/tokenizer.hpp"

using namespace protvec;

TEST_SUITE("tokenizer") {

TEST_CASE("single segment vocabulary") {
  const std::vector<std::string> segs{"MKVL"};
  const auto v = build_vocab(std::span<const std::string>(segs), 4);
  CHECK(v.size() == 2);
  CHECK(v.id("MKVL") == 1);
  CHECK(v.id("AAAA") == kPadToken);
}

TEST_CASE("window enumeration") {
  const std::vector<std::string> segs{"MKVLAW"};
  const auto v = build_vocab(std::span<const std::string>(segs), 4);
  const auto t = tokenize("MKVLAW", v);
  REQUIRE(t.size() == 3);
  CHECK(t[0] == v.id("MKVL"));
  CHECK(t[1] == v.id("KVLA"));
  CHECK(t[2] == v.id("VLAW"));
  CHECK(t[0] != kPadToken);
}

TEST_CASE("ids follow descending frequency then lexicographic order") {
  const std::vector<std::string> segs{"AAAAA", "CCCC", "DDDD", "CCCC"};
  const auto v = build_vocab(std::span<const std::string>(segs), 4);
  // AAAA x2, CCCC x2, DDDD x1.
  CHECK(v.words() == std::vector<std::string>{"AAAA", "CCCC", "DDDD"});
  const auto pruned = build_vocab(std::span<const std::string>(segs), 4, 2);
  CHECK(pruned.words() == std::vector<std::string>{"AAAA", "CCCC"});
}

TEST_CASE("pad windows map to id zero") {
  Segment seg;
  seg.residues = "MKVLA" + std::string(115, kPadSymbol);
  seg.pad_length = 115;
  const std::vector<Segment> segs{seg};
  const auto v = build_vocab(std::span<const Segment>(segs), 4);
  CHECK(v.words().size() == 2);  // MKVL, KVLA
  const auto t = tokenize_segment(seg, v);
  REQUIRE(t.size() == 117);
  CHECK(t[0] == v.id("MKVL"));
  CHECK(t[1] == v.id("KVLA"));
  for (std::size_t k = 2; k < t.size(); ++k) CHECK(t[k] == kPadToken);
  for (const auto& w : v.words()) CHECK(w.find(kPadSymbol) == std::string::npos);
}

TEST_CASE("token count is s - n + 1 for every segment and n in {3,4,5}") {
  Rng rng(9);
  for (std::size_t n : {3ul, 4ul, 5ul}) {
    const auto segs = segment_sequence(fixture::random_protein(rng, 500), 120);
    const auto v = build_vocab(std::span<const Segment>(segs), n);
    for (const auto& w : v.words()) CHECK(w.size() == n);
    for (const auto& s : segs) CHECK(tokenize_segment(s, v).size() == 120 - n + 1);
    CHECK(tokenize_segment(segs[0], v) == tokenize_segment(segs[0], v));
  }
}

TEST_CASE("vocabulary bound and contiguous ids") {
  Rng rng(10);
  std::vector<std::string> seqs;
  for (int i = 0; i < 50; ++i) seqs.push_back(fixture::random_protein(rng, 400));
  const auto v = build_vocab(std::span<const std::string>(seqs), 4);
  CHECK(v.size() <= 160001);
  for (std::size_t k = 0; k < v.words().size(); ++k) CHECK(v.id(v.words()[k]) == static_cast<TokenId>(k + 1));
}

TEST_CASE("errors") {
  const std::vector<std::string> none;
  CHECK_THROWS_AS(build_vocab(std::span<const std::string>(none), 4), InvalidArgument);
  const std::vector<std::string> segs{"MKVL"};
  const auto v = build_vocab(std::span<const std::string>(segs), 4);
  CHECK_THROWS_AS(tokenize("MKV", v), InvalidArgument);
}

}  // TEST_SUITE
