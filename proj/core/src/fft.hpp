#pragma once

#include <cstddef>
#include <span>

namespace rotorvib::detail {

/// Magnitudes |X(k)|, k = 0..n/2, of the real DFT of `input`.
/// `output` must hold input.size() / 2 + 1 values. Safe to call concurrently.
void real_dft_magnitude(std::span<const double> input, std::span<double> output);

}  // namespace rotorvib::detail
