#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace rotorvib {

inline constexpr double kSensorRangeG = 8.0;
inline constexpr double kSampleRateHz = 800.0;
inline constexpr std::size_t kDefaultWindowSize = 800;

enum class Sensor { Central, Outer };

std::string_view to_string(Sensor sensor) noexcept;

/// One timestamped tri-axial sample from one accelerometer. Values are in g.
struct VibrationRecord {
  Sensor sensor = Sensor::Central;
  std::int64_t timestamp_us = 0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const VibrationRecord&, const VibrationRecord&) = default;
};

enum class BladeCondition { Normal, DefectType1, DefectType2, DefectType3 };

std::string_view to_string(BladeCondition condition) noexcept;
/// Case-insensitive; throws Error{ConfigInvalid} on unknown names.
BladeCondition parse_blade_condition(std::string_view text);

struct ExperimentMeta {
  std::string experiment_id;
  BladeCondition condition = BladeCondition::Normal;
  int blade_instance = 0;  // 1 or 2 for defective blades, ignored for Normal
  double duration_s = 60.0;

  int label() const noexcept { return condition == BladeCondition::Normal ? 0 : 1; }
  /// Throws Error{ConfigInvalid} when a defective blade lacks an instance in {1,2}.
  void validate() const;
};

/// W consecutive samples of one sensor.
struct Window {
  Sensor sensor = Sensor::Central;
  std::int64_t start_timestamp_us = 0;
  std::vector<double> x;
  std::vector<double> y;
  std::vector<double> z;
  std::string experiment_id;
  int label = 0;

  std::size_t size() const noexcept { return x.size(); }
};

/// k-th Central window paired with the k-th Outer window of one experiment.
struct WindowPair {
  Window central;
  Window outer;

  const std::string& experiment_id() const noexcept { return central.experiment_id; }
  int label() const noexcept { return central.label; }
};

struct RecordFormat {
  char delimiter = ',';
};

inline constexpr std::string_view kRecordHeader = "sensor,timestamp,x,y,z";

bool is_header_line(std::string_view line, RecordFormat format = {});

/// Parses `sensor,timestamp,x,y,z`. Throws MalformedLine, RangeViolation or
/// UnknownSensor.
VibrationRecord parse_record_line(std::string_view line, RecordFormat format = {});

/// Shortest round-trip representation; parse_record_line(format_record(r)) == r.
std::string format_record(const VibrationRecord& record, RecordFormat format = {});

struct ExperimentStreams {
  ExperimentMeta meta;
  std::vector<VibrationRecord> central;
  std::vector<VibrationRecord> outer;
};

/// Reads one experiment log. Any invalid line aborts the load; the error
/// message carries the 1-based line number.
ExperimentStreams load_experiment(const std::filesystem::path& path, const ExperimentMeta& meta);
ExperimentStreams load_experiment(std::istream& input, const ExperimentMeta& meta);

/// Non-overlapping windows of `window_size` samples; a trailing partial group
/// is dropped. All records must come from one sensor.
std::vector<Window> window_stream(std::span<const VibrationRecord> records,
                                  const ExperimentMeta& meta,
                                  std::size_t window_size = kDefaultWindowSize);

constexpr std::size_t discarded_samples(std::size_t record_count, std::size_t window_size) noexcept {
  return record_count % window_size;
}

struct ExperimentSource {
  std::filesystem::path path;
  ExperimentMeta meta;
};

/// Loads every experiment (concurrently) and pairs Central/Outer windows by
/// index. Output order follows the input order of experiments.
std::vector<WindowPair> assemble_corpus(std::span<const ExperimentSource> experiments,
                                        std::size_t window_size = kDefaultWindowSize);

std::vector<WindowPair> pair_windows(const ExperimentStreams& streams,
                                     std::size_t window_size = kDefaultWindowSize);

/// Manifest: JSON array of {path, experiment_id, blade_condition, blade_instance}.
/// Relative paths resolve against the manifest's directory.
std::vector<ExperimentSource> read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, std::span<const ExperimentSource> experiments);

}  // namespace rotorvib
