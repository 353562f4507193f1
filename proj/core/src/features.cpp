#include "rotorvib/features.hpp"

#include <array>
#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <unordered_set>

#include "parallel.hpp"
#include "rotorvib/error.hpp"
#include "rotorvib/time_domain.hpp"

namespace rotorvib {
namespace {

constexpr std::array<Axis, 3> kAxes{Axis::X, Axis::Y, Axis::Z};
constexpr std::array<Sensor, 2> kSensors{Sensor::Central, Sensor::Outer};
constexpr std::array<std::string_view, kTimeDomainPerAxis> kTimeDomainNames{"amplitude", "mean", "std", "entropy"};

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

Sensor parse_sensor(std::string_view s) {
  const auto l = lower(s);
  if (l == "central") return Sensor::Central;
  if (l == "outer") return Sensor::Outer;
  throw Error(ErrorCode::UnknownSensor, "unknown sensor '" + std::string(s) + "'");
}

Axis parse_axis(std::string_view s) {
  const auto l = lower(s);
  if (l == "x") return Axis::X;
  if (l == "y") return Axis::Y;
  if (l == "z") return Axis::Z;
  throw Error(ErrorCode::ConfigInvalid, "unknown axis '" + std::string(s) + "'");
}

const std::vector<double>& axis_series(const Window& w, Axis axis) {
  switch (axis) {
    case Axis::X: return w.x;
    case Axis::Y: return w.y;
    case Axis::Z: return w.z;
  }
  return w.x;
}

}  // namespace

std::string_view to_string(Axis axis) noexcept {
  switch (axis) {
    case Axis::X: return "X";
    case Axis::Y: return "Y";
    case Axis::Z: return "Z";
  }
  return "X";
}

std::string_view to_string(FeatureFamily family) noexcept {
  switch (family) {
    case FeatureFamily::TimeDomain: return "TimeDomain";
    case FeatureFamily::Stft: return "STFT";
    case FeatureFamily::Wavelet: return "Wavelet";
    case FeatureFamily::SpectralCentroid: return "SpectralCentroid";
    case FeatureFamily::FrequencySkewness: return "FrequencySkewness";
  }
  return "TimeDomain";
}

std::string_view short_label(FeatureFamily family) noexcept {
  switch (family) {
    case FeatureFamily::SpectralCentroid: return "SC";
    case FeatureFamily::FrequencySkewness: return "FS";
    default: return to_string(family);
  }
}

FeatureFamily parse_feature_family(std::string_view text) {
  const auto l = lower(text);
  if (l == "timedomain" || l == "time" || l == "time-domain" || l == "time_domain") return FeatureFamily::TimeDomain;
  if (l == "stft") return FeatureFamily::Stft;
  if (l == "wavelet") return FeatureFamily::Wavelet;
  if (l == "spectralcentroid" || l == "sc" || l == "centroid") return FeatureFamily::SpectralCentroid;
  if (l == "frequencyskewness" || l == "fs" || l == "skewness") return FeatureFamily::FrequencySkewness;
  throw Error(ErrorCode::UnknownFamily, "unknown feature family '" + std::string(text) + "'");
}

void FeatureParams::validate() const {
  stft.validate(window_size);
  if (entropy_bins < 2) throw Error(ErrorCode::ConfigInvalid, "entropy_bins must be >= 2");
  if (wavelet_levels < 1 || wavelet_levels > 16) throw Error(ErrorCode::ConfigInvalid, "wavelet_levels out of range");
  if (window_size % (std::size_t{1} << wavelet_levels) != 0) {
    throw Error(ErrorCode::LengthNotDivisible, "window_size must be divisible by 2^wavelet_levels");
  }
  if (!(sample_rate_hz > 0.0)) throw Error(ErrorCode::ConfigInvalid, "sample_rate_hz must be positive");
}

std::size_t FeatureParams::per_axis() const noexcept {
  return kTimeDomainPerAxis + stft.frames(window_size) * stft.bins() + (std::size_t{1} << wavelet_levels) + 2;
}

FeatureSchema::FeatureSchema(std::vector<FeatureDescriptor> descriptors) : descriptors_(std::move(descriptors)) {
  std::unordered_set<std::string> seen;
  for (const auto& d : descriptors_) {
    if (!seen.insert(d.name).second) throw Error(ErrorCode::ConfigInvalid, "duplicate feature name '" + d.name + "'");
  }
}

FeatureSchema FeatureSchema::build(const FeatureParams& params) {
  params.validate();
  const std::size_t frames = params.stft.frames(params.window_size);
  const std::size_t bins = params.stft.bins();
  const std::size_t wavelet_nodes = std::size_t{1} << params.wavelet_levels;
  std::vector<FeatureDescriptor> out;
  out.reserve(6 * params.per_axis());
  for (Sensor sensor : kSensors) {
    for (Axis axis : kAxes) {
      const std::string prefix = lower(to_string(sensor)) + "_" + lower(to_string(axis)) + "_";
      for (std::size_t i = 0; i < kTimeDomainPerAxis; ++i) {
        out.push_back({sensor, axis, FeatureFamily::TimeDomain, i, prefix + std::string(kTimeDomainNames[i])});
      }
      for (std::size_t m = 0; m < frames; ++m) {
        for (std::size_t k = 0; k < bins; ++k) {
          out.push_back({sensor, axis, FeatureFamily::Stft, m * bins + k,
                         prefix + "stft_m" + std::to_string(m) + "_k" + std::to_string(k)});
        }
      }
      for (std::size_t j = 0; j < wavelet_nodes; ++j) {
        out.push_back({sensor, axis, FeatureFamily::Wavelet, j, prefix + "wpt_" + std::to_string(j)});
      }
      out.push_back({sensor, axis, FeatureFamily::SpectralCentroid, 0, prefix + "centroid"});
      out.push_back({sensor, axis, FeatureFamily::FrequencySkewness, 0, prefix + "skewness"});
    }
  }
  return FeatureSchema(std::move(out));
}

std::vector<std::string> FeatureSchema::names() const {
  std::vector<std::string> out;
  out.reserve(descriptors_.size());
  for (const auto& d : descriptors_) out.push_back(d.name);
  return out;
}

std::vector<std::size_t> FeatureSchema::columns_of(FeatureFamily family) const {
  std::vector<std::size_t> cols;
  for (std::size_t i = 0; i < descriptors_.size(); ++i) {
    if (descriptors_[i].family == family) cols.push_back(i);
  }
  return cols;
}

bool FeatureSchema::has_family(FeatureFamily family) const {
  return std::any_of(descriptors_.begin(), descriptors_.end(),
                     [family](const FeatureDescriptor& d) { return d.family == family; });
}

FeatureSchema FeatureSchema::select(std::span<const std::size_t> columns) const {
  std::vector<FeatureDescriptor> out;
  out.reserve(columns.size());
  for (std::size_t c : columns) out.push_back(descriptors_.at(c));
  return FeatureSchema(std::move(out));
}

std::string FeatureSchema::fingerprint() const {
  std::uint64_t h = 14695981039346656037ULL;
  for (const auto& d : descriptors_) {
    for (unsigned char c : d.name) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= '\n';
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string schema_to_json(const FeatureSchema& schema, const FeatureParams* params) {
  nlohmann::ordered_json doc;
  doc["fingerprint"] = schema.fingerprint();
  if (params != nullptr) {
    doc["params"] = {{"stft_segment_length", params->stft.segment_length},
                     {"stft_hop", params->stft.hop},
                     {"stft_window", "hann"},
                     {"entropy_bins", params->entropy_bins},
                     {"wavelet_levels", params->wavelet_levels},
                     {"wavelet", std::string(to_string(params->wavelet))},
                     {"sample_rate_hz", params->sample_rate_hz},
                     {"window_size", params->window_size}};
  }
  auto& features = doc["features"] = nlohmann::ordered_json::array();
  for (const auto& d : schema.descriptors()) {
    features.push_back({{"name", d.name},
                        {"sensor", std::string(to_string(d.sensor))},
                        {"axis", std::string(to_string(d.axis))},
                        {"family", std::string(to_string(d.family))},
                        {"index", d.index_within_family}});
  }
  return doc.dump(1);
}

FeatureSchema schema_from_json(std::string_view text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    std::vector<FeatureDescriptor> descriptors;
    for (const auto& f : doc.at("features")) {
      descriptors.push_back({parse_sensor(f.at("sensor").get<std::string>()),
                             parse_axis(f.at("axis").get<std::string>()),
                             parse_feature_family(f.at("family").get<std::string>()),
                             f.at("index").get<std::size_t>(), f.at("name").get<std::string>()});
    }
    FeatureSchema schema(std::move(descriptors));
    if (doc.contains("fingerprint") && doc["fingerprint"].get<std::string>() != schema.fingerprint()) {
      throw Error(ErrorCode::SchemaMismatch, "schema fingerprint does not match its feature list");
    }
    return schema;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("schema json: ") + e.what());
  }
}

void write_schema(const std::filesystem::path& path, const FeatureSchema& schema, const FeatureParams& params) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write schema '" + path.string() + "'");
  out << schema_to_json(schema, &params) << '\n';
}

FeatureSchema read_schema(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open schema '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return schema_from_json(buf.str());
}

std::vector<double> magnitude_series(const Window& window) {
  std::vector<double> out(window.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = magnitude(window.x[i], window.y[i], window.z[i]);
  return out;
}

std::vector<double> extract_axis_features(std::span<const double> series, const FeatureParams& params,
                                          std::vector<std::size_t>* substituted) {
  std::vector<double> out;
  out.reserve(params.per_axis());
  out.push_back(amplitude(series));
  out.push_back(mean(series));
  out.push_back(std_dev(series));
  out.push_back(shannon_entropy(series, params.entropy_bins));

  const Spectrogram grid = stft(series, params.stft);
  out.insert(out.end(), grid.magnitude.begin(), grid.magnitude.end());

  const auto energies = wavelet_packet_energies(series, params.wavelet_levels, params.wavelet);
  out.insert(out.end(), energies.begin(), energies.end());

  const Spectrum spectrum = periodogram(series, params.sample_rate_hz);
  const SpectralBand band = default_band(spectrum);
  out.push_back(spectral_centroid(spectrum, band));
  try {
    out.push_back(spectral_skewness(spectrum, band));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::DegenerateSpectrum) throw;
    if (substituted != nullptr) substituted->push_back(out.size());
    out.push_back(0.0);
  }
  return out;
}

FeatureVector extract_window_features(const WindowPair& pair, const FeatureParams& params) {
  params.validate();
  if (pair.central.experiment_id != pair.outer.experiment_id || pair.central.label != pair.outer.label) {
    throw Error(ErrorCode::InvalidArgument, "window pair mixes experiments");
  }
  FeatureVector fv;
  fv.experiment_id = pair.experiment_id();
  fv.label = pair.label();
  fv.values.reserve(6 * params.per_axis());
  for (const Window* w : {&pair.central, &pair.outer}) {
    if (w->size() != params.window_size || w->y.size() != w->size() || w->z.size() != w->size()) {
      throw Error(ErrorCode::LengthMismatch, "window length does not match window_size");
    }
    for (Axis axis : kAxes) {
      std::vector<std::size_t> local;
      const std::size_t base = fv.values.size();
      const auto values = extract_axis_features(axis_series(*w, axis), params, &local);
      for (std::size_t idx : local) fv.substituted.push_back(base + idx);
      fv.values.insert(fv.values.end(), values.begin(), values.end());
    }
  }
  for (double v : fv.values) {
    if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "non-finite feature in " + fv.experiment_id);
  }
  return fv;
}

std::vector<FeatureVector> extract_corpus_features(std::span<const WindowPair> pairs, const FeatureParams& params) {
  params.validate();
  std::vector<FeatureVector> out(pairs.size());
  detail::parallel_for(pairs.size(), [&](std::size_t i) { out[i] = extract_window_features(pairs[i], params); });
  return out;
}

}  // namespace rotorvib
