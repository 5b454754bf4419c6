#pragma once

#include <cstdint>

// Joe-Kuo primitive polynomials and initial direction numbers backing the
// Sobol generator in qmc.hpp.  kSobolPoly[d] stores the full polynomial bit
// pattern for dimension d (dimension 0 is the van der Corput sequence and
// ignores its entry); kSobolVinit[d] holds the first deg(poly) initial values.
namespace adr::detail {

inline constexpr int kSobolTableDims = 64;
inline constexpr int kSobolMaxDegree = 18;

extern const std::uint32_t kSobolPoly[kSobolTableDims];
extern const std::uint32_t kSobolVinit[kSobolTableDims][kSobolMaxDegree];

}  // namespace adr::detail
