#pragma once

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <unistd.h>

#include "protvec/corpus.hpp"
#include "protvec/rng.hpp"

namespace fixture {

inline std::string random_protein(protvec::Rng& rng, std::size_t length) {
  static constexpr char kAlphabet[] = "ACDEFGHIKLMNPQRSTVWY";
  std::string s(length, 'A');
  for (auto& c : s) c = kAlphabet[rng.below(20)];
  return s;
}

/// 1000 records: GO:0000001 on 199 of them, GO:0000002 on 200, GO:0000003
/// on all. Filtering at 200 removes exactly the first term.
inline std::vector<protvec::ProteinRecord> filter_boundary_records() {
  protvec::Rng rng(42);
  std::vector<protvec::ProteinRecord> out;
  for (std::size_t i = 0; i < 1000; ++i) {
    protvec::ProteinRecord r;
    r.id = "fx" + std::to_string(i);
    r.sequence = random_protein(rng, 30 + rng.below(50));
    r.labels.insert("GO:0000003");
    if (i < 199) r.labels.insert("GO:0000001");
    else if (i < 399) r.labels.insert("GO:0000002");
    out.push_back(std::move(r));
  }
  return out;
}

/// A fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("protvec-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

}  // namespace fixture
