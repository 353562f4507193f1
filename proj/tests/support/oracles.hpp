#pragma once

// Independent reference implementations used by the unit tests and the
// acceptance runner. Each one is written from the defining formula and shares
// no code with the library.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <random>
#include <span>
#include <vector>

#include "rotorvib/models.hpp"

namespace rotorvib::oracle {

inline std::vector<double> random_series(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> out(n);
  for (double& v : out) v = dist(rng);
  return out;
}

// |sum_n x[n] w[n] e^{-2 pi i k n / N}| for k = 0..N/2, periodic Hann w.
inline std::vector<double> windowed_dft_magnitude(std::span<const double> segment) {
  const std::size_t n = segment.size();
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    double re = 0.0;
    double im = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(t) / static_cast<double>(n));
      const double angle = -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n);
      re += segment[t] * w * std::cos(angle);
      im += segment[t] * w * std::sin(angle);
    }
    out[k] = std::hypot(re, im);
  }
  return out;
}

// Terminal-node energies by repeated pairwise averaging and differencing.
inline void haar_packet(const std::vector<double>& node, int depth, std::vector<std::vector<double>>& leaves) {
  if (depth == 0) {
    leaves.push_back(node);
    return;
  }
  std::vector<double> approx;
  std::vector<double> detail;
  for (std::size_t i = 0; i + 1 < node.size(); i += 2) {
    approx.push_back((node[i] + node[i + 1]) / std::sqrt(2.0));
    detail.push_back((node[i] - node[i + 1]) / std::sqrt(2.0));
  }
  haar_packet(approx, depth - 1, leaves);
  haar_packet(detail, depth - 1, leaves);
}

inline std::vector<double> haar_packet_energies(const std::vector<double>& series, int levels) {
  std::vector<std::vector<double>> leaves;
  haar_packet(series, levels, leaves);
  std::vector<double> out;
  for (const auto& leaf : leaves) {
    double e = 0.0;
    for (double v : leaf) e += v * v;
    out.push_back(e);
  }
  return out;
}

struct Moments {
  double centroid = 0.0;
  double spread = 0.0;
  double skewness = 0.0;
};

inline Moments spectral_moments(std::span<const double> freq, std::span<const double> mag, std::size_t first,
                                std::size_t last) {
  double total = 0.0;
  double m1 = 0.0;
  for (std::size_t k = first; k <= last; ++k) {
    total += mag[k];
    m1 += freq[k] * mag[k];
  }
  Moments m;
  m.centroid = m1 / total;
  double m2 = 0.0;
  double m3 = 0.0;
  for (std::size_t k = first; k <= last; ++k) {
    const double d = freq[k] - m.centroid;
    m2 += d * d * mag[k];
    m3 += d * d * d * mag[k];
  }
  m.spread = std::sqrt(m2 / total);
  m.skewness = m3 / (m.spread * m.spread * m.spread * total);
  return m;
}

inline double histogram_entropy(std::span<const double> series, std::size_t bins) {
  const double lo = *std::min_element(series.begin(), series.end());
  const double hi = *std::max_element(series.begin(), series.end());
  if (hi == lo) return 0.0;
  std::vector<double> counts(bins, 0.0);
  for (double v : series) {
    double pos = (v - lo) / (hi - lo) * static_cast<double>(bins);
    auto b = static_cast<std::size_t>(std::floor(pos));
    if (b >= bins) b = bins - 1;
    counts[b] += 1.0;
  }
  double h = 0.0;
  for (double c : counts) {
    if (c > 0.0) {
      const double p = c / static_cast<double>(series.size());
      h += -p * std::log(p) / std::log(2.0);
    }
  }
  return h;
}

// Leading eigenvalues of a symmetric PSD matrix by power iteration with
// Hotelling deflation.
inline std::vector<double> power_iteration_eigenvalues(Eigen::MatrixXd a, std::size_t count) {
  std::vector<double> out;
  for (std::size_t c = 0; c < count; ++c) {
    Eigen::VectorXd v = Eigen::VectorXd::Ones(a.rows());
    v(c % a.rows()) += 0.5;
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < 100000; ++it) {
      Eigen::VectorXd w = a * v;
      const double next = v.dot(w);
      const double norm = w.norm();
      if (norm == 0.0) {
        lambda = 0.0;
        break;
      }
      w /= norm;
      const bool done = std::abs(next - lambda) <= 1e-15 * std::abs(next) && (w - v).norm() < 1e-13;
      v = w;
      lambda = next;
      if (done) break;
    }
    out.push_back(lambda);
    a -= lambda * v * v.transpose();
  }
  return out;
}

struct SplitChoice {
  bool found = false;
  int feature = -1;
  double threshold = 0.0;
  long double impurity = 0.0L;  // weighted child Gini
};

inline long double gini(std::size_t c0, std::size_t c1) {
  const long double n = static_cast<long double>(c0 + c1);
  if (n == 0) return 0.0L;
  const long double p0 = c0 / n;
  const long double p1 = c1 / n;
  return 1.0L - p0 * p0 - p1 * p1;
}

// Enumerates every (feature, midpoint) split of the given rows and returns
// the lowest weighted child Gini; ties within 1e-15 go to the lower feature,
// then the lower threshold. Only splits strictly below the parent count.
inline SplitChoice brute_force_split(const Eigen::MatrixXd& x, std::span<const int> y,
                                     std::span<const std::size_t> rows) {
  std::size_t p0 = 0;
  std::size_t p1 = 0;
  for (std::size_t r : rows) (y[r] == 0 ? p0 : p1)++;
  const long double parent = gini(p0, p1);
  const long double n = static_cast<long double>(rows.size());
  SplitChoice best;
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    std::vector<double> values;
    for (std::size_t r : rows) values.push_back(x(static_cast<Eigen::Index>(r), f));
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());
    for (std::size_t i = 0; i + 1 < values.size(); ++i) {
      double t = values[i] + (values[i + 1] - values[i]) / 2.0;
      if (t >= values[i + 1]) t = values[i];
      std::size_t l0 = 0;
      std::size_t l1 = 0;
      std::size_t r0 = 0;
      std::size_t r1 = 0;
      for (std::size_t r : rows) {
        const bool left = x(static_cast<Eigen::Index>(r), f) <= t;
        if (y[r] == 0) (left ? l0 : r0)++;
        else (left ? l1 : r1)++;
      }
      const long double imp = ((l0 + l1) * gini(l0, l1) + (r0 + r1) * gini(r0, r1)) / n;
      if (!(imp < parent - 1e-15L)) continue;
      if (!best.found || imp < best.impurity - 1e-15L) {
        best = {true, static_cast<int>(f), t, imp};
      }
    }
  }
  return best;
}

// Per-feature (n_node/n_root)(gini(node) - weighted gini(children)) from the
// stored node counts, normalized to sum 1.
inline std::vector<double> traversal_importance(const DecisionTree& tree) {
  const auto& nodes = tree.nodes();
  std::vector<long double> acc(tree.feature_count(), 0.0L);
  const long double root = static_cast<long double>(nodes.front().counts[0] + nodes.front().counts[1]);
  std::vector<std::size_t> stack{0};
  while (!stack.empty()) {
    const auto& node = nodes[stack.back()];
    stack.pop_back();
    if (node.feature < 0) continue;
    const auto& l = nodes[static_cast<std::size_t>(node.left)];
    const auto& r = nodes[static_cast<std::size_t>(node.right)];
    const long double n = node.counts[0] + node.counts[1];
    const long double nl = l.counts[0] + l.counts[1];
    const long double nr = r.counts[0] + r.counts[1];
    acc[static_cast<std::size_t>(node.feature)] +=
        (n * gini(node.counts[0], node.counts[1]) - nl * gini(l.counts[0], l.counts[1]) -
         nr * gini(r.counts[0], r.counts[1])) /
        root;
    stack.push_back(static_cast<std::size_t>(node.left));
    stack.push_back(static_cast<std::size_t>(node.right));
  }
  long double total = 0.0L;
  for (auto v : acc) total += v;
  std::vector<double> out;
  for (auto v : acc) out.push_back(total > 0 ? static_cast<double>(v / total) : 0.0);
  return out;
}

// Sorts every training row by (squared distance, index), votes among the
// first k, and breaks vote ties with the nearest row's label.
inline int exhaustive_knn(const Eigen::MatrixXd& train, std::span<const int> labels, const Eigen::RowVectorXd& query,
                          std::size_t k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (Eigen::Index r = 0; r < train.rows(); ++r) {
    double s = 0.0;
    for (Eigen::Index c = 0; c < train.cols(); ++c) {
      const double diff = train(r, c) - query(c);
      s += diff * diff;
    }
    d.emplace_back(s, static_cast<std::size_t>(r));
  }
  std::sort(d.begin(), d.end());
  std::size_t ones = 0;
  for (std::size_t i = 0; i < k; ++i) ones += labels[d[i].second] == 1 ? 1 : 0;
  if (2 * ones == k) return labels[d[0].second];
  return 2 * ones > k ? 1 : 0;
}

}  // namespace rotorvib::oracle
