#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace rotorvib {

enum class WindowFunction { Hann };

/// Short-time Fourier transform configuration. `hop` is the sample offset
/// between successive frames; frames never extend past the end of the series.
struct StftParams {
  std::size_t segment_length = 128;
  std::size_t hop = 64;
  WindowFunction window = WindowFunction::Hann;

  std::size_t bins() const noexcept { return segment_length / 2 + 1; }
  std::size_t frames(std::size_t series_length) const noexcept {
    return series_length < segment_length ? 0 : (series_length - segment_length) / hop + 1;
  }
  /// Throws InvalidArgument unless 2 <= segment_length <= series_length and
  /// 1 <= hop <= segment_length.
  void validate(std::size_t series_length) const;
};

/// Periodic Hann window, w(n) = 0.5 - 0.5 cos(2 pi n / N).
std::vector<double> hann_window(std::size_t length);

/// Frame-major magnitude grid: value(m, k) = |X_m(k)|.
struct Spectrogram {
  std::size_t frames = 0;
  std::size_t bins = 0;
  std::vector<double> magnitude;

  double at(std::size_t frame, std::size_t bin) const { return magnitude[frame * bins + bin]; }
};

/// Frame m covers samples [m*hop, m*hop + segment_length), multiplied by the
/// window and transformed to a one-sided magnitude spectrum. Throws
/// SeriesTooShort when the series cannot hold one frame.
Spectrogram stft(std::span<const double> series, const StftParams& params = {});

/// One-sided spectrum: frequency_hz[k] = k * fs / n, magnitude[k] = |X(k)|.
struct Spectrum {
  std::vector<double> frequency_hz;
  std::vector<double> magnitude;

  std::size_t size() const noexcept { return magnitude.size(); }
};

/// Rectangular-window magnitude spectrum of the whole series.
Spectrum periodogram(std::span<const double> series, double sample_rate_hz = 800.0);

/// Inclusive bin range [first, last].
struct SpectralBand {
  std::size_t first = 0;
  std::size_t last = 0;
};

/// Bins 1..Nyquist: drops the DC bin, which carries the static gravity offset.
SpectralBand default_band(const Spectrum& spectrum);

double spectral_centroid(const Spectrum& spectrum, SpectralBand band);
double spectral_spread(const Spectrum& spectrum, SpectralBand band, double centroid_hz);
/// Third standardized moment about the centroid. Throws DegenerateSpectrum
/// when the spread is zero.
double spectral_skewness(const Spectrum& spectrum, SpectralBand band);

}  // namespace rotorvib
