#include "rotorvib/ingest.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <sstream>

#include "parallel.hpp"
#include "rotorvib/error.hpp"

namespace rotorvib {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r' || s.back() == '\n'))
    s.remove_suffix(1);
  return s;
}

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char l, char r) {
           return std::tolower(static_cast<unsigned char>(l)) == std::tolower(static_cast<unsigned char>(r));
         });
}

template <typename T>
T parse_number(std::string_view token, std::string_view line) {
  token = trim(token);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  T value{};
  const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (token.empty() || ec != std::errc{} || end != token.data() + token.size()) {
    throw Error(ErrorCode::MalformedLine, "non-numeric field '" + std::string(token) + "' in '" +
                                              std::string(line) + "'");
  }
  return value;
}

void append_number(std::string& out, double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  out.append(buf.data(), res.ptr);
}

}  // namespace

std::string_view to_string(Sensor sensor) noexcept {
  return sensor == Sensor::Central ? "Central" : "Outer";
}

std::string_view to_string(BladeCondition condition) noexcept {
  switch (condition) {
    case BladeCondition::Normal: return "Normal";
    case BladeCondition::DefectType1: return "DefectType1";
    case BladeCondition::DefectType2: return "DefectType2";
    case BladeCondition::DefectType3: return "DefectType3";
  }
  return "Normal";
}

BladeCondition parse_blade_condition(std::string_view text) {
  for (auto c : {BladeCondition::Normal, BladeCondition::DefectType1, BladeCondition::DefectType2,
                 BladeCondition::DefectType3}) {
    if (iequals(text, to_string(c))) return c;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown blade_condition '" + std::string(text) + "'");
}

void ExperimentMeta::validate() const {
  if (experiment_id.empty()) throw Error(ErrorCode::ConfigInvalid, "experiment_id must not be empty");
  if (condition != BladeCondition::Normal && blade_instance != 1 && blade_instance != 2) {
    throw Error(ErrorCode::ConfigInvalid, "experiment '" + experiment_id +
                                              "': defective blades need blade_instance 1 or 2");
  }
  if (!(duration_s > 0.0)) throw Error(ErrorCode::ConfigInvalid, "duration_s must be positive");
}

bool is_header_line(std::string_view line, RecordFormat format) {
  line = trim(line);
  const auto first = line.substr(0, line.find(format.delimiter));
  return iequals(trim(first), "sensor");
}

VibrationRecord parse_record_line(std::string_view line, RecordFormat format) {
  const std::string_view body = trim(line);
  std::array<std::string_view, 5> fields{};
  std::size_t count = 0;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = body.find(format.delimiter, start);
    if (count == fields.size()) {
      throw Error(ErrorCode::MalformedLine, "expected 5 fields in '" + std::string(body) + "'");
    }
    fields[count++] = body.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  if (count != fields.size()) {
    throw Error(ErrorCode::MalformedLine, "expected 5 fields in '" + std::string(body) + "'");
  }

  VibrationRecord record;
  const std::string_view sensor = trim(fields[0]);
  if (iequals(sensor, "central")) {
    record.sensor = Sensor::Central;
  } else if (iequals(sensor, "outer")) {
    record.sensor = Sensor::Outer;
  } else {
    throw Error(ErrorCode::UnknownSensor, "unknown sensor '" + std::string(sensor) + "'");
  }
  record.timestamp_us = parse_number<std::int64_t>(fields[1], body);
  record.x = parse_number<double>(fields[2], body);
  record.y = parse_number<double>(fields[3], body);
  record.z = parse_number<double>(fields[4], body);
  for (double v : {record.x, record.y, record.z}) {
    if (!std::isfinite(v)) throw Error(ErrorCode::MalformedLine, "non-finite value in '" + std::string(body) + "'");
    if (std::abs(v) > kSensorRangeG) {
      throw Error(ErrorCode::RangeViolation, "value out of +/-8 g range in '" + std::string(body) + "'");
    }
  }
  return record;
}

std::string format_record(const VibrationRecord& record, RecordFormat format) {
  std::string out(to_string(record.sensor));
  out.reserve(64);
  out.push_back(format.delimiter);
  out += std::to_string(record.timestamp_us);
  for (double v : {record.x, record.y, record.z}) {
    out.push_back(format.delimiter);
    append_number(out, v);
  }
  return out;
}

ExperimentStreams load_experiment(std::istream& input, const ExperimentMeta& meta) {
  meta.validate();
  ExperimentStreams streams;
  streams.meta = meta;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(input, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    if (line_no == 1 && is_header_line(line)) continue;
    try {
      const VibrationRecord record = parse_record_line(line);
      auto& stream = record.sensor == Sensor::Central ? streams.central : streams.outer;
      if (!stream.empty() && record.timestamp_us < stream.back().timestamp_us) {
        throw Error(ErrorCode::NonMonotonicTimestamp,
                    "timestamp decreases for sensor " + std::string(to_string(record.sensor)));
      }
      stream.push_back(record);
    } catch (const Error& e) {
      throw Error(e.code(), meta.experiment_id + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (input.bad()) throw Error(ErrorCode::Io, meta.experiment_id + ": read failure");
  return streams;
}

ExperimentStreams load_experiment(const std::filesystem::path& path, const ExperimentMeta& meta) {
  std::ifstream input(path);
  if (!input) throw Error(ErrorCode::Io, "cannot open '" + path.string() + "'");
  return load_experiment(input, meta);
}

std::vector<Window> window_stream(std::span<const VibrationRecord> records, const ExperimentMeta& meta,
                                  std::size_t window_size) {
  if (window_size < 2) throw Error(ErrorCode::InvalidArgument, "window_size must be >= 2");
  const std::size_t count = records.size() / window_size;
  std::vector<Window> windows;
  windows.reserve(count);
  for (std::size_t w = 0; w < count; ++w) {
    const auto group = records.subspan(w * window_size, window_size);
    Window window;
    window.sensor = group.front().sensor;
    window.start_timestamp_us = group.front().timestamp_us;
    window.experiment_id = meta.experiment_id;
    window.label = meta.label();
    window.x.reserve(window_size);
    window.y.reserve(window_size);
    window.z.reserve(window_size);
    for (const auto& r : group) {
      if (r.sensor != window.sensor) {
        throw Error(ErrorCode::InvalidArgument, "window_stream expects records from a single sensor");
      }
      window.x.push_back(r.x);
      window.y.push_back(r.y);
      window.z.push_back(r.z);
    }
    windows.push_back(std::move(window));
  }
  return windows;
}

std::vector<WindowPair> pair_windows(const ExperimentStreams& streams, std::size_t window_size) {
  if (streams.central.empty() || streams.outer.empty()) {
    throw Error(ErrorCode::MissingSensor, "experiment '" + streams.meta.experiment_id + "' lacks " +
                                              (streams.central.empty() ? "Central" : "Outer") + " records");
  }
  auto central = window_stream(streams.central, streams.meta, window_size);
  auto outer = window_stream(streams.outer, streams.meta, window_size);
  const std::size_t n = std::min(central.size(), outer.size());
  std::vector<WindowPair> pairs;
  pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pairs.push_back({std::move(central[i]), std::move(outer[i])});
  return pairs;
}

std::vector<WindowPair> assemble_corpus(std::span<const ExperimentSource> experiments, std::size_t window_size) {
  std::vector<std::vector<WindowPair>> per_experiment(experiments.size());
  detail::parallel_for(experiments.size(), [&](std::size_t i) {
    per_experiment[i] = pair_windows(load_experiment(experiments[i].path, experiments[i].meta), window_size);
  });
  std::vector<WindowPair> corpus;
  for (auto& pairs : per_experiment) {
    std::move(pairs.begin(), pairs.end(), std::back_inserter(corpus));
  }
  return corpus;
}

std::vector<ExperimentSource> read_manifest(const std::filesystem::path& path) {
  std::ifstream input(path);
  if (!input) throw Error(ErrorCode::Io, "cannot open manifest '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(input);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, "manifest '" + path.string() + "': " + e.what());
  }
  if (!doc.is_array()) throw Error(ErrorCode::ConfigInvalid, "manifest must be a JSON array");
  const auto base = path.parent_path();
  std::vector<ExperimentSource> out;
  for (const auto& entry : doc) {
    try {
      ExperimentSource src;
      std::filesystem::path p = entry.at("path").get<std::string>();
      src.path = p.is_absolute() ? p : base / p;
      src.meta.experiment_id = entry.at("experiment_id").get<std::string>();
      src.meta.condition = parse_blade_condition(entry.at("blade_condition").get<std::string>());
      if (entry.contains("blade_instance") && !entry["blade_instance"].is_null()) {
        src.meta.blade_instance = entry["blade_instance"].get<int>();
      }
      if (entry.contains("duration_s")) src.meta.duration_s = entry["duration_s"].get<double>();
      src.meta.validate();
      out.push_back(std::move(src));
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::ConfigInvalid, "manifest entry: " + std::string(e.what()));
    }
  }
  return out;
}

void write_manifest(const std::filesystem::path& path, std::span<const ExperimentSource> experiments) {
  nlohmann::json doc = nlohmann::json::array();
  const auto base = path.parent_path();
  for (const auto& e : experiments) {
    auto rel = e.path.lexically_relative(base);
    nlohmann::json entry;
    entry["path"] = (rel.empty() || rel.native().starts_with("..")) ? e.path.string() : rel.string();
    entry["experiment_id"] = e.meta.experiment_id;
    entry["blade_condition"] = std::string(to_string(e.meta.condition));
    entry["blade_instance"] = e.meta.blade_instance;
    entry["duration_s"] = e.meta.duration_s;
    doc.push_back(std::move(entry));
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot write manifest '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

}  // namespace rotorvib
