#pragma once

#include <cstddef>
#include <span>

namespace rotorvib {

/// Euclidean norm of one tri-axial sample.
double magnitude(double x, double y, double z) noexcept;

/// Half the peak-to-peak excursion: (max - min) / 2.
double amplitude(std::span<const double> series);

double mean(std::span<const double> series);

/// Population standard deviation (denominator n).
double std_dev(std::span<const double> series);

/// Shannon entropy in bits of the value histogram. Values are binned into
/// `num_bins` equal-width bins spanning [min, max] of the series itself; the
/// maximum falls into the last bin. A constant series has entropy 0.
double shannon_entropy(std::span<const double> series, std::size_t num_bins = 16);

}  // namespace rotorvib
