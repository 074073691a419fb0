#include "protvec/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "protvec/error.hpp"
#include "protvec/hash.hpp"

namespace protvec {

namespace {

constexpr std::size_t kMagicSize = 8;
constexpr std::size_t kPrefixSize = kMagicSize + 8;

std::uint64_t to_le(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    v = ((v & 0x00000000FFFFFFFFULL) << 32) | ((v & 0xFFFFFFFF00000000ULL) >> 32);
    v = ((v & 0x0000FFFF0000FFFFULL) << 16) | ((v & 0xFFFF0000FFFF0000ULL) >> 16);
    v = ((v & 0x00FF00FF00FF00FFULL) << 8) | ((v & 0xFF00FF00FF00FF00ULL) >> 8);
  }
  return v;
}

void put_u64(std::string& out, std::uint64_t v) {
  v = to_le(v);
  char buf[8];
  std::memcpy(buf, &v, 8);
  out.append(buf, 8);
}

std::uint64_t get_u64(std::string_view bytes) {
  std::uint64_t v;
  std::memcpy(&v, bytes.data(), 8);
  return to_le(v);
}

std::string encode_payload(std::span<const double> payload) {
  std::string out;
  out.reserve(payload.size() * 8);
  for (double d : payload) put_u64(out, std::bit_cast<std::uint64_t>(d));
  return out;
}

std::uint32_t crc_of(std::string_view bytes) {
  return crc32({reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size()});
}

void check_magic(std::string_view bytes, std::string_view magic) {
  if (bytes.size() < kMagicSize) throw ChecksumError("file truncated before the magic number");
  const std::string_view found = bytes.substr(0, kMagicSize);
  if (found == magic) return;
  if (found.substr(0, 4) == magic.substr(0, 4)) {
    throw FormatVersionError("unsupported format version " + std::string(found) + " (expected " +
                             std::string(magic) + ")");
  }
  throw DataError("not a " + std::string(magic) + " file");
}

}  // namespace

std::string encode_container(std::string_view magic, Json header, std::span<const double> payload) {
  if (magic.size() != kMagicSize) throw InvalidArgument("container magic must be 8 bytes");
  const std::string body = encode_payload(payload);
  header["payload_count"] = payload.size();
  header["payload_crc32"] = crc_of(body);
  const std::string text = header.dump();
  std::string out(magic);
  put_u64(out, text.size());
  out += text;
  out += body;
  return out;
}

Container decode_container(std::string_view bytes, std::string_view magic) {
  check_magic(bytes, magic);
  if (bytes.size() < kPrefixSize) throw ChecksumError("file truncated inside the header length");
  const std::uint64_t header_len = get_u64(bytes.substr(kMagicSize, 8));
  if (header_len > bytes.size() - kPrefixSize) throw ChecksumError("file truncated inside the header");
  Container c;
  try {
    c.header = Json::parse(bytes.substr(kPrefixSize, header_len));
  } catch (const Json::exception& e) {
    throw ChecksumError(std::string("corrupt header: ") + e.what());
  }
  if (!c.header.contains("payload_count") || !c.header.contains("payload_crc32")) {
    throw ChecksumError("header lacks payload checksum fields");
  }
  const std::uint64_t count = c.header["payload_count"];
  const std::string_view body = bytes.substr(kPrefixSize + header_len);
  if (body.size() != count * 8) {
    throw ChecksumError("payload holds " + std::to_string(body.size()) + " bytes, header declares " +
                        std::to_string(count * 8));
  }
  if (crc_of(body) != c.header["payload_crc32"].get<std::uint32_t>()) {
    throw ChecksumError("payload CRC32 mismatch");
  }
  c.payload.resize(count);
  for (std::size_t k = 0; k < count; ++k) c.payload[k] = std::bit_cast<double>(get_u64(body.substr(k * 8, 8)));
  return c;
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw DataError("write failed for " + path.string());
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_container(const std::filesystem::path& path, std::string_view magic, Json header,
                     std::span<const double> payload) {
  write_file(path, encode_container(magic, std::move(header), payload));
}

Container read_container(const std::filesystem::path& path, std::string_view magic) {
  return decode_container(read_file(path), magic);
}

Json peek_header(const std::filesystem::path& path, std::string_view magic) {
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) return nullptr;
  try {
    return read_container(path, magic).header;
  } catch (const Error&) {
    return nullptr;
  }
}

// ---- tensors --------------------------------------------------------------

void TensorWriter::add(const std::string& name, const Eigen::MatrixXd& m) {
  shapes_.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) payload_.push_back(m(r, c));
  }
}

void TensorWriter::add(const std::string& name, const Eigen::VectorXd& v) {
  add(name, std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

void TensorWriter::add(const std::string& name, std::span<const double> values) {
  shapes_.push_back({{"name", name}, {"rows", values.size()}, {"cols", 1}});
  payload_.insert(payload_.end(), values.begin(), values.end());
}

void TensorWriter::add_transposed(const std::string& name, const Eigen::MatrixXd& m) {
  add(name, Eigen::MatrixXd(m.transpose()));
}

TensorReader::TensorReader(const Container& c) : c_(c) {
  if (!c_.header.contains("tensors") || !c_.header["tensors"].is_array()) {
    throw ShapeError("header lacks a tensor table");
  }
  std::size_t total = 0;
  for (const auto& t : c_.header["tensors"]) total += t.at("rows").get<std::size_t>() * t.at("cols").get<std::size_t>();
  if (total != c_.payload.size()) throw ShapeError("tensor table does not account for the payload");
}

const Json& TensorReader::take(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  const auto& table = c_.header["tensors"];
  if (tensor_ >= table.size()) throw ShapeError("missing tensor '" + name + "'");
  const auto& t = table[tensor_++];
  if (t.at("name") != name) {
    throw ShapeError("expected tensor '" + name + "', found '" + t.at("name").get<std::string>() + "'");
  }
  if (t.at("rows").get<Eigen::Index>() != rows || t.at("cols").get<Eigen::Index>() != cols) {
    throw ShapeError("tensor '" + name + "' has shape " + t.at("rows").dump() + "x" + t.at("cols").dump() +
                     ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
  }
  return t;
}

Eigen::MatrixXd TensorReader::matrix(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  take(name, rows, cols);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = c_.payload[offset_++];
  }
  return m;
}

Eigen::VectorXd TensorReader::vector(const std::string& name, Eigen::Index size) {
  take(name, size, 1);
  Eigen::VectorXd v(size);
  for (Eigen::Index k = 0; k < size; ++k) v(k) = c_.payload[offset_++];
  return v;
}

std::vector<double> TensorReader::values(const std::string& name, std::size_t size) {
  take(name, static_cast<Eigen::Index>(size), 1);
  std::vector<double> v(c_.payload.begin() + static_cast<std::ptrdiff_t>(offset_),
                        c_.payload.begin() + static_cast<std::ptrdiff_t>(offset_ + size));
  offset_ += size;
  return v;
}

Eigen::MatrixXd TensorReader::matrix_transposed(const std::string& name, Eigen::Index rows, Eigen::Index cols) {
  return matrix(name, cols, rows).transpose();
}

void TensorReader::finish() const {
  if (tensor_ != c_.header["tensors"].size()) throw ShapeError("file declares unread tensors");
}

}  // namespace protvec
