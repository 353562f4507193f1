#pragma once

#include <random>
#include <string>
#include <vector>

#include "rotorvib/features.hpp"
#include "rotorvib/pipeline.hpp"

namespace rotorvib::fixture {

/// Schema of `cols` generic time-domain columns named f0, f1, ...
inline FeatureSchema plain_schema(std::size_t cols) {
  std::vector<FeatureDescriptor> d;
  for (std::size_t i = 0; i < cols; ++i) {
    d.push_back({Sensor::Central, Axis::X, FeatureFamily::TimeDomain, i, "f" + std::to_string(i)});
  }
  return FeatureSchema(std::move(d));
}

/// Two Gaussian classes whose means differ by `separation` in every column.
/// Rows come in experiment blocks of `per_experiment`.
inline Dataset gaussian_dataset(std::size_t normal, std::size_t defective, const FeatureSchema& schema,
                                std::uint64_t seed, double separation = 1.0, std::size_t per_experiment = 60) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  Dataset ds;
  const std::size_t rows = normal + defective;
  ds.features.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(schema.size()));
  for (std::size_t r = 0; r < rows; ++r) {
    const int label = r < normal ? 0 : 1;
    for (std::size_t c = 0; c < schema.size(); ++c) {
      ds.features(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = noise(rng) + separation * label;
    }
    ds.labels.push_back(label);
    const std::size_t local = label == 0 ? r : r - normal;
    ds.experiment_ids.push_back((label == 0 ? "normal_" : "defect_") + std::to_string(local / per_experiment));
  }
  ds.schema = schema;
  return ds;
}

/// Small feature layout: 64-sample windows, 32/16 STFT, two wavelet levels.
inline FeatureParams small_params() {
  FeatureParams p;
  p.window_size = 64;
  p.stft = {32, 16};
  p.wavelet_levels = 2;
  return p;
}

}  // namespace rotorvib::fixture
