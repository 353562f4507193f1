#include "rotorvib/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fft.hpp"
#include "rotorvib/error.hpp"

namespace rotorvib {
namespace {

void check_band(const Spectrum& spectrum, SpectralBand band) {
  if (band.first > band.last || band.last >= spectrum.size()) {
    throw Error(ErrorCode::InvalidArgument, "spectral band [" + std::to_string(band.first) + ", " +
                                                std::to_string(band.last) + "] outside spectrum");
  }
}

double band_weight(const Spectrum& spectrum, SpectralBand band) {
  double total = 0.0;
  for (std::size_t k = band.first; k <= band.last; ++k) total += spectrum.magnitude[k];
  if (!(total > 0.0)) throw Error(ErrorCode::ZeroSpectrum, "spectrum is zero over the band");
  return total;
}

}  // namespace

void StftParams::validate(std::size_t series_length) const {
  if (segment_length < 2 || hop < 1 || hop > segment_length) {
    throw Error(ErrorCode::InvalidArgument, "stft needs segment_length >= 2 and 1 <= hop <= segment_length");
  }
  if (segment_length > series_length) {
    throw Error(ErrorCode::SeriesTooShort, "series of " + std::to_string(series_length) +
                                               " samples is shorter than one stft segment");
  }
}

std::vector<double> hann_window(std::size_t length) {
  std::vector<double> w(length);
  for (std::size_t n = 0; n < length; ++n) {
    w[n] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(n) / static_cast<double>(length));
  }
  return w;
}

Spectrogram stft(std::span<const double> series, const StftParams& params) {
  params.validate(series.size());
  const auto window = hann_window(params.segment_length);
  Spectrogram out;
  out.frames = params.frames(series.size());
  out.bins = params.bins();
  out.magnitude.resize(out.frames * out.bins);
  std::vector<double> segment(params.segment_length);
  for (std::size_t m = 0; m < out.frames; ++m) {
    const std::size_t offset = m * params.hop;
    for (std::size_t n = 0; n < params.segment_length; ++n) segment[n] = series[offset + n] * window[n];
    detail::real_dft_magnitude(segment, std::span(out.magnitude).subspan(m * out.bins, out.bins));
  }
  return out;
}

Spectrum periodogram(std::span<const double> series, double sample_rate_hz) {
  if (series.size() < 2) throw Error(ErrorCode::SeriesTooShort, "periodogram needs at least 2 samples");
  const std::size_t bins = series.size() / 2 + 1;
  Spectrum spectrum;
  spectrum.magnitude.resize(bins);
  spectrum.frequency_hz.resize(bins);
  detail::real_dft_magnitude(series, spectrum.magnitude);
  for (std::size_t k = 0; k < bins; ++k) {
    spectrum.frequency_hz[k] = static_cast<double>(k) * sample_rate_hz / static_cast<double>(series.size());
  }
  return spectrum;
}

SpectralBand default_band(const Spectrum& spectrum) {
  if (spectrum.size() < 2) throw Error(ErrorCode::SeriesTooShort, "spectrum has no non-DC bins");
  return {1, spectrum.size() - 1};
}

double spectral_centroid(const Spectrum& spectrum, SpectralBand band) {
  check_band(spectrum, band);
  const double total = band_weight(spectrum, band);
  double weighted = 0.0;
  for (std::size_t k = band.first; k <= band.last; ++k) weighted += spectrum.frequency_hz[k] * spectrum.magnitude[k];
  return weighted / total;
}

double spectral_spread(const Spectrum& spectrum, SpectralBand band, double centroid_hz) {
  check_band(spectrum, band);
  const double total = band_weight(spectrum, band);
  double acc = 0.0;
  for (std::size_t k = band.first; k <= band.last; ++k) {
    const double d = spectrum.frequency_hz[k] - centroid_hz;
    acc += d * d * spectrum.magnitude[k];
  }
  return std::sqrt(acc / total);
}

double spectral_skewness(const Spectrum& spectrum, SpectralBand band) {
  const double mu1 = spectral_centroid(spectrum, band);
  const double mu2 = spectral_spread(spectrum, band, mu1);
  // A single spectral line leaves rounding-level spread; treat it as zero.
  const double scale = std::max(std::abs(spectrum.frequency_hz[band.last]), 1.0);
  if (!(mu2 > 1e-12 * scale)) throw Error(ErrorCode::DegenerateSpectrum, "spectral spread is zero");
  const double total = band_weight(spectrum, band);
  double acc = 0.0;
  for (std::size_t k = band.first; k <= band.last; ++k) {
    const double d = spectrum.frequency_hz[k] - mu1;
    acc += d * d * d * spectrum.magnitude[k];
  }
  return acc / (mu2 * mu2 * mu2 * total);
}

}  // namespace rotorvib
