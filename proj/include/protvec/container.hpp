#pragma once

// Binary container shared by every persisted artifact:
//
//   8-byte magic | u64 LE header length | JSON header | payload
//
// The payload is a sequence of little-endian IEEE-754 doubles. The writer adds
// "payload_count" and "payload_crc32" to the header; tensors listed under
// "tensors" ({name, rows, cols}) are laid out back to back in row-major order.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

namespace protvec {

using Json = nlohmann::json;

struct Container {
  Json header;
  std::vector<double> payload;
};

/// Serializes to bytes; `magic` must be exactly 8 characters.
std::string encode_container(std::string_view magic, Json header, std::span<const double> payload);

/// Parses bytes. Throws FormatVersionError when the 4-character family matches
/// but the version differs, ChecksumError on truncation or CRC mismatch, and
/// DataError for an unrelated file.
Container decode_container(std::string_view bytes, std::string_view magic);

/// Writes `bytes` to `path`, creating parent directories.
void write_file(const std::filesystem::path& path, std::string_view bytes);
std::string read_file(const std::filesystem::path& path);

void write_container(const std::filesystem::path& path, std::string_view magic, Json header,
                     std::span<const double> payload);
Container read_container(const std::filesystem::path& path, std::string_view magic);

/// Reads only the header of an existing file, or returns null JSON when the
/// file is absent or unreadable.
Json peek_header(const std::filesystem::path& path, std::string_view magic);

/// Accumulates named tensors in row-major order plus their shape table.
class TensorWriter {
 public:
  void add(const std::string& name, const Eigen::MatrixXd& m);
  void add(const std::string& name, const Eigen::VectorXd& v);
  void add(const std::string& name, std::span<const double> values);
  /// Adds a V x E table whose rows are the columns of `m` (E x V storage).
  void add_transposed(const std::string& name, const Eigen::MatrixXd& m);

  const Json& shapes() const noexcept { return shapes_; }
  const std::vector<double>& payload() const noexcept { return payload_; }

 private:
  Json shapes_ = Json::array();
  std::vector<double> payload_;
};

/// Reads tensors back in declaration order, checking names and shapes.
class TensorReader {
 public:
  explicit TensorReader(const Container& c);
  Eigen::MatrixXd matrix(const std::string& name, Eigen::Index rows, Eigen::Index cols);
  Eigen::VectorXd vector(const std::string& name, Eigen::Index size);
  std::vector<double> values(const std::string& name, std::size_t size);
  /// Inverse of TensorWriter::add_transposed.
  Eigen::MatrixXd matrix_transposed(const std::string& name, Eigen::Index rows, Eigen::Index cols);
  /// Throws ShapeError unless every declared tensor was consumed.
  void finish() const;

 private:
  const Json& take(const std::string& name, Eigen::Index rows, Eigen::Index cols);
  const Container& c_;
  std::size_t tensor_ = 0;
  std::size_t offset_ = 0;
};

}  // namespace protvec
