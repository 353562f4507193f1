#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rotorvib/ingest.hpp"
#include "rotorvib/spectral.hpp"
#include "rotorvib/wavelet.hpp"

namespace rotorvib {

enum class Axis { X, Y, Z };

enum class FeatureFamily { TimeDomain, Stft, Wavelet, SpectralCentroid, FrequencySkewness };

inline constexpr std::size_t kTimeDomainPerAxis = 4;  // amplitude, mean, std, entropy

std::string_view to_string(Axis axis) noexcept;
std::string_view to_string(FeatureFamily family) noexcept;
/// Short label used in importance reports: TimeDomain, STFT, Wavelet, SC, FS.
std::string_view short_label(FeatureFamily family) noexcept;
/// Accepts the long name, the short label, or a lowercase alias
/// (time, stft, wavelet, sc, fs). Throws UnknownFamily.
FeatureFamily parse_feature_family(std::string_view text);

/// Everything that determines the layout and values of a feature vector.
struct FeatureParams {
  StftParams stft;
  std::size_t entropy_bins = 16;
  int wavelet_levels = 3;
  WaveletFamily wavelet = WaveletFamily::Haar;
  double sample_rate_hz = kSampleRateHz;
  std::size_t window_size = kDefaultWindowSize;

  void validate() const;
  std::size_t per_axis() const noexcept;
};

struct FeatureDescriptor {
  Sensor sensor = Sensor::Central;
  Axis axis = Axis::X;
  FeatureFamily family = FeatureFamily::TimeDomain;
  std::size_t index_within_family = 0;
  std::string name;

  friend bool operator==(const FeatureDescriptor&, const FeatureDescriptor&) = default;
};

/// Ordered column descriptors. Layout per axis is
/// [time-domain(4) | stft(frames*bins) | wavelet(2^levels) | centroid | skewness],
/// axes X, Y, Z per sensor, Central before Outer.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<FeatureDescriptor> descriptors);

  static FeatureSchema build(const FeatureParams& params);

  std::size_t size() const noexcept { return descriptors_.size(); }
  const FeatureDescriptor& operator[](std::size_t i) const { return descriptors_[i]; }
  const std::vector<FeatureDescriptor>& descriptors() const noexcept { return descriptors_; }
  std::vector<std::string> names() const;

  /// Columns of the given family, in schema order.
  std::vector<std::size_t> columns_of(FeatureFamily family) const;
  bool has_family(FeatureFamily family) const;
  FeatureSchema select(std::span<const std::size_t> columns) const;

  /// 16 hex digits of FNV-1a over the ordered column names.
  std::string fingerprint() const;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

 private:
  std::vector<FeatureDescriptor> descriptors_;
};

/// Sidecar JSON: {"fingerprint", "params", "features": [{name, sensor, axis, family, index}]}.
std::string schema_to_json(const FeatureSchema& schema, const FeatureParams* params = nullptr);
FeatureSchema schema_from_json(std::string_view text);
void write_schema(const std::filesystem::path& path, const FeatureSchema& schema, const FeatureParams& params);
FeatureSchema read_schema(const std::filesystem::path& path);

struct FeatureVector {
  std::vector<double> values;
  std::string experiment_id;
  int label = 0;
  /// Columns where an undefined skewness (zero spectral spread) was replaced by 0.
  std::vector<std::size_t> substituted;
};

/// Per-sample magnitude channel of a window. Not part of the feature vector.
std::vector<double> magnitude_series(const Window& window);

/// Features of one axis, in per-axis layout order.
std::vector<double> extract_axis_features(std::span<const double> series, const FeatureParams& params,
                                          std::vector<std::size_t>* substituted = nullptr);

FeatureVector extract_window_features(const WindowPair& pair, const FeatureParams& params = {});

/// Extracts every pair (concurrently); output order matches input order.
std::vector<FeatureVector> extract_corpus_features(std::span<const WindowPair> pairs,
                                                   const FeatureParams& params = {});

}  // namespace rotorvib
