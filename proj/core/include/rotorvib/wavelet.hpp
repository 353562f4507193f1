#pragma once

#include <span>
#include <string_view>
#include <vector>

namespace rotorvib {

enum class WaveletFamily { Haar, Daubechies2 };

std::string_view to_string(WaveletFamily family) noexcept;
WaveletFamily parse_wavelet_family(std::string_view text);

/// Orthonormal two-channel filter pair. The highpass filter is the quadrature
/// mirror of the lowpass: g[j] = (-1)^j h[L-1-j].
struct WaveletFilter {
  std::vector<double> lowpass;
  std::vector<double> highpass;

  static WaveletFilter make(WaveletFamily family);
};

/// Full wavelet-packet decomposition to `levels`, with periodic boundary
/// extension. Returns the energy (sum of squared coefficients) of each of the
/// 2^levels terminal nodes in natural order: node 0 is the all-lowpass path,
/// and the children of node i are 2i (lowpass) and 2i+1 (highpass).
/// Throws LengthNotDivisible unless the length is a multiple of 2^levels.
std::vector<double> wavelet_packet_energies(std::span<const double> series, int levels = 3,
                                            WaveletFamily family = WaveletFamily::Haar);

}  // namespace rotorvib
