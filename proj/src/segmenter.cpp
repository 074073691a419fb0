#include "protvec/segmenter.hpp"

#include <algorithm>

#include "protvec/error.hpp"

namespace protvec {

std::size_t segment_count(std::size_t length, std::size_t size, std::size_t stride) {
  if (length <= size) return 1;
  const std::size_t reach = (length - size + stride - 1) / stride + 1;
  // With size < stride the reaching window may start past the end; stop at
  // the last start inside the sequence instead.
  return std::min(reach, (length + stride - 1) / stride);
}

std::vector<Segment> segment_sequence(std::string_view sequence, std::size_t size, std::size_t stride) {
  if (sequence.empty()) throw InvalidArgument("cannot segment an empty sequence");
  if (size < kMinSegmentSize) {
    throw InvalidArgument("segment size " + std::to_string(size) + " is below the n-mer size " +
                          std::to_string(kMinSegmentSize));
  }
  if (stride == 0) throw InvalidArgument("stride must be >= 1");

  const std::size_t m = segment_count(sequence.size(), size, stride);
  std::vector<Segment> out(m);
  for (std::size_t j = 0; j < m; ++j) {
    Segment& seg = out[j];
    seg.start = j * stride;
    const std::string_view body = sequence.substr(seg.start, size);
    seg.residues.assign(body);
    seg.pad_length = size - body.size();
    seg.residues.append(seg.pad_length, kPadSymbol);
  }
  return out;
}

std::vector<Segment> segment_record(const ProteinRecord& record, std::size_t size, std::size_t stride) {
  auto segments = segment_sequence(record.sequence, size, stride);
  for (auto& s : segments) {
    s.parent_id = record.id;
    s.labels = record.labels;
  }
  return segments;
}

}  // namespace protvec
