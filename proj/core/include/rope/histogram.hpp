#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace rope {

/// Tally h(w) of edges with selection count w, for w in {0..B}.
struct CountHistogram {
  int B = 0;
  std::vector<std::int64_t> bins;  ///< size B + 1

  CountHistogram() = default;
  CountHistogram(int B, std::vector<std::int64_t> bins);

  /// Builds the histogram of `counts` and adds p - counts.size() implicit
  /// zero-count edges to bin 0.
  static CountHistogram from_counts(std::span<const int> counts, int B, std::size_t p);

  std::int64_t p() const;
  std::int64_t operator[](int w) const { return bins[static_cast<std::size_t>(w)]; }
  /// Sum of h(v) for v >= t.
  std::int64_t tail(int t) const;
};

}  // namespace rope
