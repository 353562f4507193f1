#include "rotorvib/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <random>
#include <string>

#include "parallel.hpp"
#include "rotorvib/error.hpp"
#include "rotorvib/time_domain.hpp"

namespace rotorvib {
namespace {

constexpr double kQuantumG = 1e-4;
constexpr double kBurstSeconds = 0.02;

std::uint64_t splitmix(std::uint64_t master, std::uint64_t stream) noexcept {
  std::uint64_t z = master + (stream + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Harmonic amplitudes after the defect's spectral rewrite. Trim moves the
// power it removes from even harmonics onto the 1x and 3x lines.
std::array<std::vector<Harmonic>, 3> effective_harmonics(const RotorProfile& p) {
  auto out = p.harmonics;
  if (p.defect.kind != DefectKind::Trim) return out;
  const double keep = 1.0 - p.defect.strength;
  for (auto& axis : out) {
    double moved = 0.0;
    for (auto& h : axis) {
      if (h.index % 2 == 0) {
        moved += h.amplitude_g * h.amplitude_g * (1.0 - keep * keep);
        h.amplitude_g *= keep;
      }
    }
    for (int target : {1, 3}) {
      auto it = std::find_if(axis.begin(), axis.end(), [target](const Harmonic& h) { return h.index == target; });
      if (it == axis.end()) it = axis.insert(axis.end(), Harmonic{target, 0.0});
      it->amplitude_g = std::sqrt(it->amplitude_g * it->amplitude_g + moved / 2.0);
    }
  }
  return out;
}

double crack_norm(const RotorProfile& p) {
  return p.defect.kind == DefectKind::Crack ? 1.0 / std::sqrt(1.0 + p.defect.strength * p.defect.strength / 2.0) : 1.0;
}

double noise_sigma(const RotorProfile& p) {
  return p.defect.kind == DefectKind::Scratch ? p.noise_sigma_g * p.defect.strength : p.noise_sigma_g;
}

double quantize(double v) { return std::round(v / kQuantumG) * kQuantumG; }

}  // namespace

double RotorProfile::worst_case_g() const {
  const auto eff = effective_harmonics(*this);
  const double mod = defect.kind == DefectKind::Crack ? (1.0 + defect.strength) * crack_norm(*this) : 1.0;
  const double burst = defect.kind == DefectKind::Scratch ? burst_amplitude_g : 0.0;
  double worst = 0.0;
  for (std::size_t a = 0; a < 3; ++a) {
    double sum = 0.0;
    for (const auto& h : eff[a]) sum += h.amplitude_g;
    const double peak = (1.0 + window_gain_jitter) * (1.0 + harmonic_jitter) * sum * mod + burst;
    worst = std::max(worst, std::abs(offset_g[a]) + std::max(1.0, outer_attenuation) * peak + 6.0 * noise_sigma(*this));
  }
  return worst;
}

void RotorProfile::validate() const {
  if (!(rotation_hz > 0.0)) throw Error(ErrorCode::ConfigInvalid, "rotation frequency must be positive");
  for (const auto& axis : harmonics) {
    for (const auto& h : axis) {
      if (h.index < 1 || !(h.amplitude_g >= 0.0)) {
        throw Error(ErrorCode::ConfigInvalid, "harmonics need index >= 1 and amplitude >= 0");
      }
    }
  }
  if (!(noise_sigma_g >= 0.0) || !(outer_attenuation >= 0.0) || !(burst_amplitude_g >= 0.0) || !(burst_rate_hz >= 0.0)) {
    throw Error(ErrorCode::ConfigInvalid, "noise, attenuation and burst settings must be non-negative");
  }
  if (!(window_gain_jitter >= 0.0 && window_gain_jitter < 1.0) || !(harmonic_jitter >= 0.0 && harmonic_jitter < 1.0)) {
    throw Error(ErrorCode::ConfigInvalid, "jitter must lie in [0, 1)");
  }
  const double s = defect.strength;
  switch (defect.kind) {
    case DefectKind::None: break;
    case DefectKind::Crack:
      if (!(s >= 0.0 && s <= 1.0)) throw Error(ErrorCode::ConfigInvalid, "crack depth must lie in [0, 1]");
      break;
    case DefectKind::Trim:
      if (!(s >= 0.0 && s <= 1.0)) throw Error(ErrorCode::ConfigInvalid, "trim factor must lie in [0, 1]");
      break;
    case DefectKind::Scratch:
      if (!(s >= 1.0)) throw Error(ErrorCode::ConfigInvalid, "scratch noise factor must be >= 1");
      break;
  }
  if (worst_case_g() > kSensorRangeG) {
    throw Error(ErrorCode::ClippingProfile, "profile can exceed the +-8 g sensor range");
  }
}

SynthExperiment generate_experiment(const RotorProfile& profile, const ExperimentMeta& meta, std::uint64_t seed,
                                    double sample_rate_hz) {
  profile.validate();
  meta.validate();
  if (!(sample_rate_hz > 0.0) || !(meta.duration_s > 0.0)) {
    throw Error(ErrorCode::ConfigInvalid, "sample rate and duration must be positive");
  }
  const auto n = static_cast<std::size_t>(std::llround(meta.duration_s * sample_rate_hz));
  const auto block = static_cast<std::size_t>(std::max<long long>(1, std::llround(sample_rate_hz)));
  const auto eff = effective_harmonics(profile);
  const double norm = crack_norm(profile);
  const double sigma = noise_sigma(profile);
  const bool bursts = profile.defect.kind == DefectKind::Scratch && profile.burst_amplitude_g > 0.0;
  const double two_pi = 2.0 * std::numbers::pi;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, two_pi);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::array<std::vector<double>, 3> phases;
  for (std::size_t a = 0; a < 3; ++a) {
    for (std::size_t h = 0; h < eff[a].size(); ++h) phases[a].push_back(phase(rng));
  }
  const double crack_phase = phase(rng);
  const std::int64_t dt_us = std::llround(1e6 / sample_rate_hz);

  SynthExperiment out;
  out.meta = meta;
  out.central.resize(n);
  out.outer.resize(n);
  double gain = 1.0;
  std::array<std::vector<double>, 3> factors;
  std::vector<std::pair<std::size_t, double>> burst_starts;  // (sample, phase)
  const auto burst_len = static_cast<std::size_t>(std::llround(kBurstSeconds * sample_rate_hz));

  for (std::size_t i = 0; i < n; ++i) {
    if (i % block == 0) {
      gain = 1.0 + profile.window_gain_jitter * unit(rng);
      for (std::size_t a = 0; a < 3; ++a) {
        factors[a].resize(eff[a].size());
        for (double& f : factors[a]) f = 1.0 + profile.harmonic_jitter * unit(rng);
      }
      burst_starts.clear();
      if (bursts) {
        std::poisson_distribution<int> count(profile.burst_rate_hz * static_cast<double>(block) / sample_rate_hz);
        std::uniform_int_distribution<std::size_t> where(i, i + block - 1);
        for (int b = count(rng); b > 0; --b) burst_starts.emplace_back(where(rng), phase(rng));
      }
    }
    const double t = static_cast<double>(i) / sample_rate_hz;
    const double mod = profile.defect.kind == DefectKind::Crack
                           ? (1.0 + profile.defect.strength * std::cos(two_pi * profile.rotation_hz * t + crack_phase)) * norm
                           : 1.0;
    double burst = 0.0;
    for (const auto& [start, ph] : burst_starts) {
      if (i >= start && i < start + burst_len) {
        const double u = static_cast<double>(i - start) / static_cast<double>(burst_len);
        burst += profile.burst_amplitude_g * std::sin(std::numbers::pi * u) *
                 std::sin(two_pi * profile.burst_frequency_hz * t + ph);
      }
    }
    std::array<double, 3> central{};
    std::array<double, 3> outer{};
    for (std::size_t a = 0; a < 3; ++a) {
      double s = 0.0;
      for (std::size_t h = 0; h < eff[a].size(); ++h) {
        s += factors[a][h] * eff[a][h].amplitude_g *
             std::sin(two_pi * eff[a][h].index * profile.rotation_hz * t + phases[a][h]);
      }
      s = gain * s * mod + burst;
      central[a] = profile.offset_g[a] + s + sigma * gauss(rng);
      outer[a] = profile.offset_g[a] + profile.outer_attenuation * s + sigma * gauss(rng);
    }
    const std::int64_t ts = static_cast<std::int64_t>(i) * dt_us;
    auto make = [ts](Sensor sensor, const std::array<double, 3>& v) {
      for (double c : v) {
        if (!(std::abs(c) <= kSensorRangeG)) throw Error(ErrorCode::ClippingProfile, "generated sample clipped");
      }
      return VibrationRecord{sensor, ts, quantize(v[0]), quantize(v[1]), quantize(v[2])};
    };
    out.central[i] = make(Sensor::Central, central);
    out.outer[i] = make(Sensor::Outer, outer);
  }
  return out;
}

void write_experiment_csv(std::ostream& out, const SynthExperiment& experiment) {
  std::string buffer;
  buffer.reserve(64 * 1024);
  buffer.append(kRecordHeader).push_back('\n');
  for (std::size_t i = 0; i < experiment.central.size(); ++i) {
    buffer.append(format_record(experiment.central[i])).push_back('\n');
    buffer.append(format_record(experiment.outer[i])).push_back('\n');
    if (buffer.size() > 60 * 1024) {
      out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
      buffer.clear();
    }
  }
  out.write(buffer.data(), static_cast<std::streamsize>(buffer.size()));
}

void write_experiment_csv(const std::filesystem::path& path, const SynthExperiment& experiment) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  write_experiment_csv(out, experiment);
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

std::vector<PlannedExperiment> plan_paper_shaped_corpus(std::uint64_t seed, const SnrConfig& snr) {
  RotorProfile base;
  base.rotation_hz = 25.0;
  base.harmonics = {std::vector<Harmonic>{{1, 0.04}, {2, 0.50}, {4, 0.25}, {6, 0.12}, {8, 0.06}},
                    std::vector<Harmonic>{{1, 0.03}, {2, 0.40}, {4, 0.20}, {6, 0.10}, {8, 0.05}},
                    std::vector<Harmonic>{{1, 0.02}, {2, 0.30}, {4, 0.15}, {6, 0.08}, {8, 0.04}}};
  base.noise_sigma_g = snr.noise_sigma_g;
  base.outer_attenuation = 1.25;
  base.window_gain_jitter = snr.window_gain_jitter;
  base.harmonic_jitter = snr.harmonic_jitter;
  base.burst_amplitude_g = 0.3;
  if (snr.noise_only) {
    for (auto& axis : base.harmonics) axis.clear();
  }

  std::vector<PlannedExperiment> plan;
  std::uint64_t stream = 0;
  // Small run-to-run and blade-to-blade variation of the mechanical setup.
  auto jittered = [&](const RotorProfile& p, double amount) {
    std::mt19937_64 rng(splitmix(seed, 1000 + stream));
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    RotorProfile q = p;
    q.rotation_hz *= 1.0 + 0.01 * unit(rng);
    for (auto& axis : q.harmonics) {
      for (auto& h : axis) h.amplitude_g *= 1.0 + amount * unit(rng);
    }
    q.outer_attenuation *= 1.0 + 0.05 * unit(rng);
    return q;
  };
  auto add = [&](std::string id, BladeCondition condition, int instance, const RotorProfile& profile) {
    ExperimentMeta meta{std::move(id), condition, instance, snr.duration_s};
    plan.push_back({std::move(meta), profile, splitmix(seed, stream)});
    ++stream;
  };

  for (int r = 1; r <= 8; ++r) add("normal_r" + std::to_string(r), BladeCondition::Normal, 0, jittered(base, 0.1));

  struct DefectSpec {
    const char* name;
    BladeCondition condition;
    DefectKind kind;
    double strength;
  };
  const DefectSpec defects[] = {{"crack", BladeCondition::DefectType1, DefectKind::Crack, snr.crack_depth},
                                {"trim", BladeCondition::DefectType2, DefectKind::Trim, snr.trim_factor},
                                {"scratch", BladeCondition::DefectType3, DefectKind::Scratch, snr.scratch_factor}};
  for (const auto& d : defects) {
    for (int b = 1; b <= 2; ++b) {
      std::mt19937_64 rng(splitmix(seed, 2000 + static_cast<std::uint64_t>(b) * 10 + static_cast<std::uint64_t>(d.kind)));
      std::uniform_real_distribution<double> unit(-1.0, 1.0);
      RotorProfile blade = base;
      if (!snr.noise_only) {
        double strength = d.strength * (1.0 + snr.instance_jitter * unit(rng));
        if (d.kind == DefectKind::Scratch) strength = std::max(1.0, strength);
        if (d.kind != DefectKind::Scratch) strength = std::min(1.0, strength);
        blade.defect = {d.kind, strength};
      }
      for (int r = 1; r <= 3; ++r) {
        const std::string id = std::string(d.name) + "_b" + std::to_string(b) + "_r" + std::to_string(r);
        add(id, d.condition, b, jittered(blade, 0.1));
      }
    }
  }
  return plan;
}

std::vector<ExperimentSource> generate_paper_shaped_corpus(const std::filesystem::path& out_dir, std::uint64_t seed,
                                                           const SnrConfig& snr) {
  const auto plan = plan_paper_shaped_corpus(seed, snr);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<ExperimentSource> sources(plan.size());
  detail::parallel_for(plan.size(), [&](std::size_t i) {
    const auto& p = plan[i];
    const auto file = out_dir / (p.meta.experiment_id + ".csv");
    write_experiment_csv(file, generate_experiment(p.profile, p.meta, p.seed));
    sources[i] = {file, p.meta};
  });
  write_manifest(out_dir / "manifest.json", sources);
  return sources;
}

std::vector<WindowPair> generate_paper_shaped_windows(std::uint64_t seed, const SnrConfig& snr,
                                                      std::size_t window_size) {
  const auto plan = plan_paper_shaped_corpus(seed, snr);
  std::vector<std::vector<WindowPair>> parts(plan.size());
  detail::parallel_for(plan.size(), [&](std::size_t i) {
    auto exp = generate_experiment(plan[i].profile, plan[i].meta, plan[i].seed);
    parts[i] = pair_windows(ExperimentStreams{exp.meta, std::move(exp.central), std::move(exp.outer)}, window_size);
  });
  std::vector<WindowPair> out;
  for (auto& part : parts) {
    for (auto& pair : part) out.push_back(std::move(pair));
  }
  return out;
}

double scratch_std_exceedance(std::span<const WindowPair> pairs) {
  std::vector<double> scratch;
  std::vector<double> normal;
  for (const auto& p : pairs) {
    const double s = (std_dev(p.outer.x) + std_dev(p.outer.y) + std_dev(p.outer.z)) / 3.0;
    if (p.experiment_id().rfind("scratch", 0) == 0) scratch.push_back(s);
    if (p.label() == 0) normal.push_back(s);
  }
  if (scratch.empty() || normal.empty()) throw Error(ErrorCode::Empty, "need both scratch and normal windows");
  std::sort(normal.begin(), normal.end());
  std::size_t wins = 0;
  for (double s : scratch) {
    wins += static_cast<std::size_t>(std::lower_bound(normal.begin(), normal.end(), s) - normal.begin());
  }
  return static_cast<double>(wins) / (static_cast<double>(scratch.size()) * static_cast<double>(normal.size()));
}

}  // namespace rotorvib
