#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "rotorvib/ingest.hpp"

namespace rotorvib {

enum class DefectKind { None, Crack, Trim, Scratch };

/// Crack: amplitude modulation depth at the rotation frequency.
/// Trim: fraction of even-harmonic amplitude moved onto odd harmonics.
/// Scratch: noise-floor inflation factor (bursts scale with it).
struct DefectModifier {
  DefectKind kind = DefectKind::None;
  double strength = 0.0;
};

struct Harmonic {
  int index = 1;  // multiple of the rotation frequency
  double amplitude_g = 0.0;
};

struct RotorProfile {
  double rotation_hz = 25.0;
  std::array<std::vector<Harmonic>, 3> harmonics;  // per axis X, Y, Z
  std::array<double, 3> offset_g{0.0, 0.0, 1.0};  // static gravity component
  double noise_sigma_g = 0.05;
  DefectModifier defect;
  double outer_attenuation = 1.0;  // Outer / Central amplitude ratio
  /// Per-window throttle variation: every 1 s block draws a gain in
  /// [1 - j, 1 + j] shared by all axes, and per-harmonic factors in the same range.
  double window_gain_jitter = 0.0;
  double harmonic_jitter = 0.0;
  double burst_frequency_hz = 330.0;
  double burst_amplitude_g = 0.0;  // Scratch only
  double burst_rate_hz = 4.0;

  /// Throws ConfigInvalid for negative amplitudes or bad ranges and
  /// ClippingProfile when the worst case (6 sigma noise) exceeds the sensor range.
  void validate() const;
  double worst_case_g() const;
};

struct SynthExperiment {
  ExperimentMeta meta;
  std::vector<VibrationRecord> central;
  std::vector<VibrationRecord> outer;
};

/// Samples are quantized to 1e-4 g. Deterministic for a given (profile, seed).
SynthExperiment generate_experiment(const RotorProfile& profile, const ExperimentMeta& meta, std::uint64_t seed,
                                    double sample_rate_hz = kSampleRateHz);

/// Ingest CSV with header; Central then Outer for each sample index.
void write_experiment_csv(std::ostream& out, const SynthExperiment& experiment);
void write_experiment_csv(const std::filesystem::path& path, const SynthExperiment& experiment);

struct SnrConfig {
  double noise_sigma_g = 0.08;
  double crack_depth = 0.6;
  double trim_factor = 0.08;
  double scratch_factor = 7.0;
  double window_gain_jitter = 0.35;
  double harmonic_jitter = 0.25;
  double instance_jitter = 0.1;
  double duration_s = 60.0;
  /// Harmonics zeroed and defects disabled: every experiment is the same noise process.
  bool noise_only = false;
};

struct PlannedExperiment {
  ExperimentMeta meta;
  RotorProfile profile;
  std::uint64_t seed = 0;
};

/// 8 normal runs plus 2 blade instances x 3 defect types x 3 runs.
std::vector<PlannedExperiment> plan_paper_shaped_corpus(std::uint64_t seed, const SnrConfig& snr = {});

/// Writes every planned experiment and `manifest.json` into `out_dir`;
/// returns the manifest entries.
std::vector<ExperimentSource> generate_paper_shaped_corpus(const std::filesystem::path& out_dir, std::uint64_t seed,
                                                           const SnrConfig& snr = {});

/// In-memory variant: the window pairs the written corpus would assemble to.
std::vector<WindowPair> generate_paper_shaped_windows(std::uint64_t seed, const SnrConfig& snr = {},
                                                      std::size_t window_size = kDefaultWindowSize);

/// Fraction of (Scratch window, Normal window) pairings in which the Scratch
/// window's time-domain std is strictly larger. Std is taken on the Outer
/// sensor, averaged over the three axes. Scratch windows are recognized by the
/// generator's "scratch_" experiment ids. Throws Empty if either group is missing.
double scratch_std_exceedance(std::span<const WindowPair> pairs);

}  // namespace rotorvib
