#include "rotorvib/time_domain.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "rotorvib/error.hpp"

namespace rotorvib {
namespace {

void require_non_empty(std::span<const double> series) {
  if (series.empty()) throw Error(ErrorCode::EmptySeries, "series is empty");
}

}  // namespace

double magnitude(double x, double y, double z) noexcept { return std::sqrt(x * x + y * y + z * z); }

double amplitude(std::span<const double> series) {
  require_non_empty(series);
  const auto [lo, hi] = std::minmax_element(series.begin(), series.end());
  return (*hi - *lo) / 2.0;
}

double mean(std::span<const double> series) {
  require_non_empty(series);
  double sum = 0.0;
  for (double v : series) sum += v;
  return sum / static_cast<double>(series.size());
}

double std_dev(std::span<const double> series) {
  require_non_empty(series);
  // Deviations from the first sample keep a constant series exactly at zero.
  const double origin = series.front();
  double shift = 0.0;
  for (double v : series) shift += v - origin;
  shift /= static_cast<double>(series.size());
  double acc = 0.0;
  for (double v : series) {
    const double d = (v - origin) - shift;
    acc += d * d;
  }
  return std::sqrt(acc / static_cast<double>(series.size()));
}

double shannon_entropy(std::span<const double> series, std::size_t num_bins) {
  require_non_empty(series);
  if (num_bins < 2) throw Error(ErrorCode::InvalidArgument, "entropy needs at least 2 bins");
  const auto [lo_it, hi_it] = std::minmax_element(series.begin(), series.end());
  const double lo = *lo_it;
  const double width = *hi_it - lo;
  if (width == 0.0) return 0.0;

  std::vector<std::size_t> counts(num_bins, 0);
  const double scale = static_cast<double>(num_bins) / width;
  for (double v : series) {
    auto bin = static_cast<std::size_t>((v - lo) * scale);
    ++counts[std::min(bin, num_bins - 1)];
  }
  const double n = static_cast<double>(series.size());
  double h = 0.0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log2(p);
  }
  return std::max(h, 0.0);
}

}  // namespace rotorvib
