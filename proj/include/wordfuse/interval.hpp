#pragma once

#include <cstddef>
#include <vector>

namespace wordfuse {

// Frames [start_frame, end_frame) owned by one transcript word.
struct WordInterval {
  std::size_t word_index = 0;
  std::size_t start_frame = 0;
  std::size_t end_frame = 0;

  std::size_t length() const { return end_frame - start_frame; }
  bool operator==(const WordInterval&) const = default;
};

// Throws an alignment error unless intervals are non-empty, in word order,
// non-overlapping and inside [0, n_frames).
void validate_intervals(const std::vector<WordInterval>& intervals, std::size_t n_frames);

}  // namespace wordfuse
