#include "rotorvib/wavelet.hpp"

#include <cmath>
#include <string>

#include "rotorvib/error.hpp"

namespace rotorvib {
namespace {

// One analysis step: a[k] = sum_j h[j] x[(2k + j) mod n], same for d with g.
void split(std::span<const double> x, const WaveletFilter& filter, std::vector<double>& approx,
           std::vector<double>& detail) {
  const std::size_t n = x.size();
  const std::size_t half = n / 2;
  approx.assign(half, 0.0);
  detail.assign(half, 0.0);
  for (std::size_t k = 0; k < half; ++k) {
    double a = 0.0;
    double d = 0.0;
    for (std::size_t j = 0; j < filter.lowpass.size(); ++j) {
      const double v = x[(2 * k + j) % n];
      a += filter.lowpass[j] * v;
      d += filter.highpass[j] * v;
    }
    approx[k] = a;
    detail[k] = d;
  }
}

}  // namespace

std::string_view to_string(WaveletFamily family) noexcept {
  return family == WaveletFamily::Haar ? "haar" : "db2";
}

WaveletFamily parse_wavelet_family(std::string_view text) {
  if (text == "haar") return WaveletFamily::Haar;
  if (text == "db2") return WaveletFamily::Daubechies2;
  throw Error(ErrorCode::ConfigInvalid, "unknown wavelet '" + std::string(text) + "'");
}

WaveletFilter WaveletFilter::make(WaveletFamily family) {
  WaveletFilter f;
  if (family == WaveletFamily::Haar) {
    f.lowpass = {M_SQRT1_2, M_SQRT1_2};
  } else {
    const double s3 = std::sqrt(3.0);
    const double norm = 4.0 * std::sqrt(2.0);
    f.lowpass = {(1 + s3) / norm, (3 + s3) / norm, (3 - s3) / norm, (1 - s3) / norm};
  }
  const std::size_t len = f.lowpass.size();
  f.highpass.resize(len);
  for (std::size_t j = 0; j < len; ++j) {
    f.highpass[j] = (j % 2 == 0 ? 1.0 : -1.0) * f.lowpass[len - 1 - j];
  }
  return f;
}

std::vector<double> wavelet_packet_energies(std::span<const double> series, int levels, WaveletFamily family) {
  if (levels < 1) throw Error(ErrorCode::InvalidArgument, "wavelet levels must be >= 1");
  const std::size_t leaves = std::size_t{1} << levels;
  if (series.empty() || series.size() % leaves != 0) {
    throw Error(ErrorCode::LengthNotDivisible, "series length " + std::to_string(series.size()) +
                                                   " is not divisible by " + std::to_string(leaves));
  }
  const WaveletFilter filter = WaveletFilter::make(family);

  std::vector<std::vector<double>> nodes{std::vector<double>(series.begin(), series.end())};
  for (int level = 0; level < levels; ++level) {
    std::vector<std::vector<double>> next(nodes.size() * 2);
    for (std::size_t i = 0; i < nodes.size(); ++i) split(nodes[i], filter, next[2 * i], next[2 * i + 1]);
    nodes = std::move(next);
  }

  std::vector<double> energies(leaves, 0.0);
  for (std::size_t i = 0; i < leaves; ++i) {
    for (double c : nodes[i]) energies[i] += c * c;
  }
  return energies;
}

}  // namespace rotorvib
