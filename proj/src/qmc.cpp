#include "adrsched/qmc.hpp"

#include <algorithm>
#include <bit>
#include <stdexcept>
#include <string>

#include "adrsched/sobol_tables.hpp"

namespace adr {

namespace {
constexpr int kBits = 32;
}  // namespace

QmcStream::QmcStream(int dimension, std::uint64_t start_index) : dim_(dimension) {
    if (dimension < 1 || dimension > detail::kSobolTableDims) {
        throw std::invalid_argument("QmcStream: dimension must be in [1, " +
                                    std::to_string(detail::kSobolTableDims) + "]");
    }
    direction_.assign(static_cast<std::size_t>(dim_) * kBits, 0);
    state_.assign(dim_, 0);

    // Dimension 0 is the van der Corput sequence: m_j = 1 for every j.
    for (int j = 0; j < kBits; ++j) direction_[j] = 1u << (kBits - 1 - j);

    // Remaining dimensions: expand the initial values m_1..m_s of each
    // primitive polynomial with the standard recurrence
    //   m_i = 2 a_1 m_{i-1} XOR 4 a_2 m_{i-2} XOR ... XOR 2^s m_{i-s} XOR m_{i-s}
    // where a_k are the interior polynomial coefficients, then scale
    // v_j = m_j * 2^(32-j).
    for (int d = 1; d < dim_; ++d) {
        const std::uint32_t poly = detail::kSobolPoly[d];
        const int s = std::bit_width(poly) - 1;  // polynomial degree
        std::uint32_t m[kBits + 1];
        for (int i = 1; i <= s; ++i) m[i] = detail::kSobolVinit[d][i - 1];
        for (int i = s + 1; i <= kBits; ++i) {
            std::uint32_t v = m[i - s] ^ (m[i - s] << s);
            for (int k = 1; k < s; ++k) {
                if ((poly >> (s - k)) & 1u) v ^= m[i - k] << k;
            }
            m[i] = v;
        }
        for (int j = 1; j <= kBits; ++j) {
            direction_[static_cast<std::size_t>(d) * kBits + (j - 1)] = m[j] << (kBits - j);
        }
    }
    seek(start_index);
}

// Invariant: state_ holds the raw-sequence point at stream index index_,
// i.e. raw position index_ + 1 (position 0 is the skipped all-zero point).

void QmcStream::seek(std::uint64_t idx) {
    // The point at raw position n is the XOR of the direction numbers
    // selected by the set bits of gray(n) = n ^ (n >> 1).
    const std::uint64_t pos = idx + 1;
    if (pos >= (1ull << kBits)) throw std::overflow_error("QmcStream: seek past 2^32 points");
    std::uint64_t gray = pos ^ (pos >> 1);
    std::fill(state_.begin(), state_.end(), 0u);
    for (int j = 0; gray != 0; ++j, gray >>= 1) {
        if (gray & 1ull) {
            for (int d = 0; d < dim_; ++d) {
                state_[d] ^= direction_[static_cast<std::size_t>(d) * kBits + j];
            }
        }
    }
    index_ = idx;
}

void QmcStream::advance_state() {
    // Gray-code step from raw position pos to pos+1 flips direction number
    // ctz(pos+1).
    const std::uint64_t entering = index_ + 2;  // raw position being entered
    if (entering >= (1ull << kBits)) throw std::overflow_error("QmcStream: sequence exhausted");
    const int j = std::countr_zero(entering);
    for (int d = 0; d < dim_; ++d) state_[d] ^= direction_[static_cast<std::size_t>(d) * kBits + j];
    ++index_;
}

void QmcStream::next(std::span<double> out) {
    if (static_cast<int>(out.size()) != dim_) {
        throw std::invalid_argument("QmcStream::next: output span size != dimension");
    }
    constexpr double scale = 1.0 / 4294967296.0;  // 2^-32
    for (int d = 0; d < dim_; ++d) out[d] = static_cast<double>(state_[d]) * scale;
    advance_state();
}

std::vector<double> QmcStream::next() {
    std::vector<double> pt(dim_);
    next(std::span<double>(pt));
    return pt;
}

}  // namespace adr
