#pragma once

#include <cstdint>
#include <span>
#include <vector>

// Low-discrepancy point stream over the unit hypercube, used to approximate
// the expectation over meter-reading outcomes with a deterministic sample.
namespace adr {

// Unscrambled 32-bit Sobol sequence in Gray-code order.  The natural
// sequence starts with the all-zero point, which is useless for inverse-CDF
// sampling, so the stream begins at sequence position 1: the point returned
// for stream index i is the (i+1)-th element of the raw sequence.  Streams
// are deterministic functions of (dimension, start index).
class QmcStream {
  public:
    // `start_index` is the stream index of the first point produced (the
    // all-zero point is always skipped regardless).
    explicit QmcStream(int dimension, std::uint64_t start_index = 0);

    int dimension() const { return dim_; }
    std::uint64_t index() const { return index_; }  // index of the next point

    // Fill `out` (size == dimension) with the next point; all coordinates in (0,1).
    void next(std::span<double> out);
    std::vector<double> next();

    // Reposition so the next call to next() returns the point at stream
    // index `idx` (O(dimension * 32), independent of the distance moved).
    void seek(std::uint64_t idx);

  private:
    int dim_;
    std::uint64_t index_ = 0;               // stream index of the next point
    std::vector<std::uint32_t> direction_;  // dim_ x 32, direction_[d*32 + j]
    std::vector<std::uint32_t> state_;      // current Gray-code XOR state

    void advance_state();  // one Gray-code step of the underlying sequence
};

}  // namespace adr
