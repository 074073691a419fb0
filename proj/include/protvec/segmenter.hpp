#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "protvec/corpus.hpp"

namespace protvec {

inline constexpr char kPadSymbol = '-';
inline constexpr std::size_t kDefaultStride = 30;
inline constexpr std::size_t kMinSegmentSize = 4;

/// Fixed-length window of a protein. Only the last segment of a protein may
/// carry padding.
struct Segment {
  std::string parent_id;
  std::size_t start = 0;
  std::string residues;  // length == segment size
  std::size_t pad_length = 0;
  LabelSet labels;
};

/// Number of windows for a sequence of length `length`: 1 when it fits in a
/// single window, otherwise ceil((length - size) / stride) + 1, capped at
/// ceil(length / stride) so no window starts past the end.
std::size_t segment_count(std::size_t length, std::size_t size, std::size_t stride = kDefaultStride);

/// Windows start at multiples of `stride`; the last window is the first one
/// reaching the end of the sequence and is right-padded with '-'.
std::vector<Segment> segment_sequence(std::string_view sequence, std::size_t size,
                                      std::size_t stride = kDefaultStride);

/// Segments a record and copies its id and labels onto every segment.
std::vector<Segment> segment_record(const ProteinRecord& record, std::size_t size,
                                    std::size_t stride = kDefaultStride);

}  // namespace protvec
