#include "fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <vector>

#include "rotorvib/error.hpp"

namespace rotorvib::detail {
namespace {

// The FFTW planner is not thread-safe; plan creation is serialized here while
// execution with the new-array interface runs concurrently.
class PlanCache {
 public:
  ~PlanCache() {
    for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
  }

  fftw_plan get(std::size_t n) {
    std::lock_guard lock(mutex_);
    if (auto it = plans_.find(n); it != plans_.end()) return it->second;
    std::vector<double> in(n);
    std::vector<std::complex<double>> out(n / 2 + 1);
    fftw_plan plan = fftw_plan_dft_r2c_1d(static_cast<int>(n), in.data(),
                                          reinterpret_cast<fftw_complex*>(out.data()),
                                          FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (plan == nullptr) throw Error(ErrorCode::NonFinite, "FFTW failed to create a plan");
    plans_.emplace(n, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::size_t, fftw_plan> plans_;
};

PlanCache& plan_cache() {
  static PlanCache cache;
  return cache;
}

}  // namespace

void real_dft_magnitude(std::span<const double> input, std::span<double> output) {
  const std::size_t n = input.size();
  const std::size_t bins = n / 2 + 1;
  if (output.size() != bins) throw Error(ErrorCode::LengthMismatch, "dft output has the wrong length");
  fftw_plan plan = plan_cache().get(n);
  // FFTW may scribble on the input for some plans; work on copies.
  std::vector<double> in(input.begin(), input.end());
  std::vector<std::complex<double>> out(bins);
  fftw_execute_dft_r2c(plan, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  for (std::size_t k = 0; k < bins; ++k) output[k] = std::abs(out[k]);
}

}  // namespace rotorvib::detail
