// Acceptance runner: one PASS/FAIL line per criterion, exit status 1 if any fail.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "rotorvib/analysis.hpp"
#include "rotorvib/features.hpp"
#include "rotorvib/models.hpp"
#include "rotorvib/pipeline.hpp"
#include "rotorvib/spectral.hpp"
#include "rotorvib/synth.hpp"
#include "rotorvib/time_domain.hpp"
#include "rotorvib/wavelet.hpp"

using namespace rotorvib;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome stft_oracle() {
  const auto start = Clock::now();
  double worst = 0.0;
  std::size_t frames = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto s = oracle::random_series(64, 1000 + seed);
    for (const StftParams p : {StftParams{64, 64}, StftParams{32, 8}, StftParams{16, 4}}) {
      const auto grid = stft(s, p);
      for (std::size_t m = 0; m < grid.frames; ++m, ++frames) {
        const auto ref = oracle::windowed_dft_magnitude(std::span(s).subspan(m * p.hop, p.segment_length));
        for (std::size_t k = 0; k < grid.bins; ++k) worst = std::max(worst, std::abs(grid.at(m, k) - ref[k]));
      }
    }
  }
  const double t = seconds_since(start);
  return {worst < 1e-9 && t < 1.0, fmt("%zu frames, max abs error %.2e, %.3f s", frames, worst, t)};
}

Outcome wavelet_parseval() {
  const auto start = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto s = oracle::random_series(800, 2000 + seed, -4.0, 4.0);
    double total = 0.0;
    for (double v : s) total += v * v;
    double sum = 0.0;
    for (double e : wavelet_packet_energies(s, 3)) sum += e;
    worst = std::max(worst, std::abs(sum - total) / total);
  }
  const auto constant = wavelet_packet_energies(std::vector<double>(800, 1.7), 3);
  double leaked = 0.0;
  for (std::size_t i = 1; i < constant.size(); ++i) leaked = std::max(leaked, constant[i]);
  const bool concentrated = leaked == 0.0 && std::abs(constant[0] - 800 * 1.7 * 1.7) < 1e-9 * constant[0];
  const double t = seconds_since(start);
  return {worst < 1e-9 && concentrated && t < 1.0,
          fmt("max rel error %.2e, constant leak %.1e, %.3f s", worst, leaked, t)};
}

Outcome spectral_moments() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Spectrum s;
    const std::size_t n = 401;
    for (std::size_t k = 0; k < n; ++k) s.frequency_hz.push_back(static_cast<double>(k));
    s.magnitude = oracle::random_series(n, 3000 + seed, 0.0, 1.0);
    const SpectralBand band{1 + seed % 5, n - 1 - seed % 13};
    const auto ref = oracle::spectral_moments(s.frequency_hz, s.magnitude, band.first, band.last);
    const double mu = spectral_centroid(s, band);
    const auto rel = [](double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); };
    worst = std::max({worst, rel(mu, ref.centroid), rel(spectral_spread(s, band, mu), ref.spread),
                      rel(spectral_skewness(s, band), ref.skewness)});
  }
  Spectrum sym;
  for (std::size_t k = 0; k < 401; ++k) sym.frequency_hz.push_back(static_cast<double>(k));
  sym.magnitude.assign(401, 0.0);
  const auto half = oracle::random_series(60, 99, 0.1, 1.0);
  for (std::size_t i = 0; i < half.size(); ++i) sym.magnitude[199 - i] = sym.magnitude[201 + i] = half[i];
  sym.magnitude[200] = 0.3;
  const double skew = std::abs(spectral_skewness(sym, default_band(sym)));
  return {worst < 1e-12 && skew < 1e-9, fmt("max rel error %.2e, symmetric |skew| %.2e", worst, skew)};
}

Outcome entropy_bounds() {
  std::mt19937_64 rng(4000);
  double lo = 1e9;
  double hi = -1e9;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> w(800);
    switch (i % 4) {
      case 0: {
        std::normal_distribution<double> d(0.0, 1.0);
        for (double& v : w) v = d(rng);
        break;
      }
      case 1: {
        std::uniform_real_distribution<double> d(-8.0, 8.0);
        for (double& v : w) v = d(rng);
        break;
      }
      case 2: {
        std::exponential_distribution<double> d(2.0);
        for (double& v : w) v = d(rng);
        break;
      }
      default: {
        std::uniform_int_distribution<int> d(0, 2);
        for (double& v : w) v = d(rng);
      }
    }
    const double h = shannon_entropy(w, 16);
    lo = std::min(lo, h);
    hi = std::max(hi, h);
  }
  const double constant = shannon_entropy(std::vector<double>(800, -0.42), 16);
  return {lo >= 0.0 && hi <= 4.0 && constant == 0.0,
          fmt("range [%.4f, %.4f] of [0, 4], constant %.1f", lo, hi, constant)};
}

Outcome pca_checks() {
  double recon = 0.0;
  double eig = 0.0;
  double ratio_sum = 0.0;
  bool monotone = true;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto ds = fixture::gaussian_dataset(25, 25, fixture::plain_schema(8), 5000 + seed, 0.5);
    for (Eigen::Index c = 0; c < 8; ++c) ds.features.col(c) *= 0.5 + static_cast<double>(c);
    SplitIndices all;
    for (std::size_t r = 0; r < 50; ++r) all.train.push_back(r);
    const TrainingRows rows(ds, all);
    const auto pca = fit_pca(rows, 8, all_columns(8));
    recon = std::max(recon, (pca.reconstruct(pca.transform(rows.matrix())) - rows.matrix()).cwiseAbs().maxCoeff());
    const Eigen::MatrixXd centered = rows.matrix().rowwise() - rows.matrix().colwise().mean();
    const auto ref = oracle::power_iteration_eigenvalues(centered.transpose() * centered / 49.0, 8);
    for (Eigen::Index i = 0; i < 8; ++i) {
      const double r = ref[static_cast<std::size_t>(i)];
      eig = std::max(eig, std::abs(pca.explained_variance()(i) - r) / r);
    }
    const auto ratios = pca.explained_variance_ratio();
    for (Eigen::Index i = 1; i < ratios.size(); ++i) monotone = monotone && ratios(i) <= ratios(i - 1);
    ratio_sum = std::max(ratio_sum, std::abs(ratios.sum() - 1.0));
  }
  return {recon < 1e-8 && eig < 1e-6 && monotone && ratio_sum < 1e-12,
          fmt("reconstruction %.2e, eigenvalue rel error %.2e, ratios %s, |sum-1| %.1e", recon, eig,
              monotone ? "non-increasing" : "NOT monotone", ratio_sum)};
}

Outcome leakage_guard() {
  auto ds = fixture::gaussian_dataset(90, 210, fixture::plain_schema(12), 6000, 0.7);
  const auto split = stratified_split(ds, 0.7, 42);
  const auto fit = [&](const Dataset& d) {
    const TrainingRows rows(d, split);
    const auto scaler = fit_scaler(rows);
    return std::make_pair(scaler, fit_pca(scaler.apply(rows), 6, all_columns(12)));
  };
  const auto [scaler_a, pca_a] = fit(ds);
  std::mt19937_64 rng(6001);
  std::normal_distribution<double> d(0.0, 1e3);
  for (std::size_t r : split.test)
    for (Eigen::Index c = 0; c < ds.features.cols(); ++c) ds.features(static_cast<Eigen::Index>(r), c) = d(rng);
  const auto [scaler_b, pca_b] = fit(ds);
  const auto same = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
  };
  const bool identical = scaler_a == scaler_b && same(pca_a.components(), pca_b.components()) &&
                         same(pca_a.column_means(), pca_b.column_means()) &&
                         same(pca_a.explained_variance(), pca_b.explained_variance());
  bool rejected = false;
  try {
    SplitIndices overlap = split;
    overlap.train.push_back(split.test.front());
    TrainingRows leaky(ds, overlap);
  } catch (const std::exception&) {
    rejected = true;
  }
  return {identical && rejected, fmt("%zu test rows perturbed; fits %s; overlapping split %s", split.test.size(),
                                     identical ? "bit-identical" : "DIFFER", rejected ? "rejected" : "accepted")};
}

// ---------------------------------------------------------------------------
// End-to-end chain on the synthetic corpus.

struct ChainResult {
  Dataset dataset;
  std::vector<ScenarioResult> pca;
  std::vector<ScenarioResult> isolation;
  double seconds = 0.0;
};

ChainResult run_chain(const fs::path& dir) {
  const auto start = Clock::now();
  fs::remove_all(dir);
  generate_paper_shaped_corpus(dir, 42);
  const auto pairs = assemble_corpus(read_manifest(dir / "manifest.json"));
  ChainResult out;
  out.dataset = make_dataset(extract_corpus_features(pairs), FeatureSchema::build(FeatureParams{}));
  const StudyConfig config;
  out.pca = run_pca_scenarios(out.dataset, config);
  out.isolation = run_feature_isolation(out.dataset, config);
  out.seconds = seconds_since(start);
  fs::remove_all(dir);
  return out;
}

const fs::path kWorkDir = fs::temp_directory_path() / "rotorvib_acceptance";

const ChainResult& first_chain() {
  static const ChainResult chain = run_chain(kWorkDir / "run1");
  return chain;
}

Outcome stratified_split_counts() {
  const Dataset& ds = first_chain().dataset;
  const auto count = [&](const std::vector<std::size_t>& rows, int label) {
    return static_cast<long>(std::count_if(rows.begin(), rows.end(), [&](std::size_t r) { return ds.labels[r] == label; }));
  };
  const auto a = stratified_split(ds, 0.7, 42);
  const auto b = stratified_split(ds, 0.7, 42);
  const long n0 = std::count(ds.labels.begin(), ds.labels.end(), 0);
  const bool shape = ds.rows() == 1560 && n0 == 480;
  const bool counts = a.train.size() == 1092 && a.test.size() == 468 && std::abs(count(a.train, 0) - 336) <= 1 &&
                      std::abs(count(a.test, 0) - 144) <= 1 && std::abs(count(a.train, 1) - 756) <= 1 &&
                      std::abs(count(a.test, 1) - 324) <= 1;
  const bool same = a.train == b.train && a.test == b.test;
  return {shape && counts && same,
          fmt("corpus %zu rows (%ld/%ld); train %zu (%ld/%ld), test %zu (%ld/%ld); %s", ds.rows(), n0,
              static_cast<long>(ds.rows()) - n0, a.train.size(), count(a.train, 0), count(a.train, 1), a.test.size(),
              count(a.test, 0), count(a.test, 1), same ? "reproducible" : "NOT reproducible")};
}

Outcome majority_baseline() {
  const Dataset& ds = first_chain().dataset;
  const double acc = accuracy(std::vector<int>(ds.rows(), 1), ds.labels);
  const bool exact = acc == 1080.0 / 1560.0;
  const bool rounds = std::round(acc * 10.0) / 10.0 == 0.7;
  return {exact && rounds, fmt("dominant-class accuracy %.4f (1080/1560), rounds to %.0f%%", acc, std::round(acc * 10) * 10)};
}

// ---------------------------------------------------------------------------

struct TreeCheck {
  std::size_t nodes = 0;
  std::size_t mismatches = 0;
};

void walk_tree(const DecisionTree& tree, int index, const Eigen::MatrixXd& x, const std::vector<int>& y,
               const std::vector<std::size_t>& rows, TreeCheck& check) {
  const auto& node = tree.nodes()[static_cast<std::size_t>(index)];
  ++check.nodes;
  const auto best = oracle::brute_force_split(x, y, rows);
  if (node.is_leaf()) {
    if (best.found) ++check.mismatches;
    return;
  }
  if (!best.found || best.feature != node.feature || std::abs(best.threshold - node.threshold) > 1e-12) {
    ++check.mismatches;
    return;
  }
  std::vector<std::size_t> left;
  std::vector<std::size_t> right;
  for (std::size_t r : rows) (x(static_cast<Eigen::Index>(r), node.feature) <= node.threshold ? left : right).push_back(r);
  walk_tree(tree, node.left, x, y, left, check);
  walk_tree(tree, node.right, x, y, right, check);
}

Outcome tree_oracle() {
  std::mt19937_64 rng(7000);
  std::uniform_int_distribution<int> small(0, 3);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd x(40, 5);
  std::vector<int> y;
  for (Eigen::Index r = 0; r < 40; ++r) {
    x(r, 0) = small(rng);
    x(r, 1) = small(rng);
    for (Eigen::Index c = 2; c < 5; ++c) x(r, c) = normal(rng);
    y.push_back(0.7 * x(r, 0) - 0.5 * x(r, 1) + x(r, 2) + 0.8 * normal(rng) > 0.6 ? 1 : 0);
  }
  const TrainedModel model = train_decision_tree(x, y);
  const auto& tree = std::get<DecisionTree>(model);
  std::vector<std::size_t> all(40);
  std::iota(all.begin(), all.end(), 0);
  TreeCheck check;
  walk_tree(tree, 0, x, y, all, check);
  const auto imp = gini_importance(model);
  const auto ref = oracle::traversal_importance(tree);
  double diff = 0.0;
  for (std::size_t f = 0; f < imp.size(); ++f) diff = std::max(diff, std::abs(imp[f] - ref[f]));
  const double sum = std::accumulate(imp.begin(), imp.end(), 0.0);
  return {check.mismatches == 0 && std::abs(sum - 1.0) <= 1e-9 && diff <= 1e-12,
          fmt("%zu nodes, %zu split mismatches; importance sum %.12f, traversal diff %.1e", check.nodes,
              check.mismatches, sum, diff)};
}

Outcome knn_oracle() {
  std::mt19937_64 rng(8000);
  std::uniform_int_distribution<int> grid(0, 4);
  Eigen::MatrixXd x(80, 3);
  std::vector<int> y;
  for (Eigen::Index r = 0; r < 80; ++r) {
    for (Eigen::Index c = 0; c < 3; ++c) x(r, c) = grid(rng);
    y.push_back(static_cast<int>(rng() % 2));
  }
  std::size_t mismatches = 0;
  std::size_t queries = 0;
  for (std::size_t k : {1u, 4u, 5u}) {
    const auto model = train_knn(x, y, {k});
    std::mt19937_64 qrng(8001);
    for (int q = 0; q < 50; ++q, ++queries) {
      Eigen::RowVectorXd query(3);
      for (Eigen::Index c = 0; c < 3; ++c) query(c) = grid(qrng) + 0.5 * static_cast<double>(qrng() % 2);
      if (model.predict_row(query) != oracle::exhaustive_knn(x, y, query, k)) ++mismatches;
    }
  }
  return {mismatches == 0, fmt("%zu queries (k = 1, 4, 5 on a tie-heavy grid), %zu mismatches", queries, mismatches)};
}

Outcome svm_checks() {
  const auto d = fixture::gaussian_dataset(40, 40, fixture::plain_schema(4), 9000, 0.8);
  const SvmConfig cfg;
  const auto m = train_svm(d.features, d.labels, cfg);
  double lo = 0.0;
  double hi = 0.0;
  for (double a : m.alphas) {
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  const bool box = lo >= 0.0 && hi <= cfg.c;

  Eigen::MatrixXd xor_x(4, 2);
  xor_x << 0, 0, 1, 1, 0, 1, 1, 0;
  const std::vector<int> xor_y{0, 0, 1, 1};
  const double xor_acc = accuracy(train_svm(xor_x, xor_y).predict(xor_x), xor_y);

  std::vector<int> flipped;
  for (int v : d.labels) flipped.push_back(1 - v);
  const auto f = train_svm(d.features, flipped, cfg);
  const auto q = fixture::gaussian_dataset(30, 30, fixture::plain_schema(4), 9001, 0.8);
  const double anti = (m.decision_values(q.features) + f.decision_values(q.features)).cwiseAbs().maxCoeff();
  return {box && xor_acc == 1.0 && anti <= cfg.tol && m.converged && f.converged,
          fmt("alpha in [%.3g, %.3g] with C = %.1f; XOR accuracy %.2f; max |f + f_flipped| %.1e (tol %.0e)", lo, hi,
              cfg.c, xor_acc, anti, cfg.tol)};
}

// ---------------------------------------------------------------------------

std::optional<double> find(const std::vector<ScenarioResult>& rs, ScenarioKind kind, Algorithm alg,
                           std::optional<std::size_t> k) {
  for (const auto& r : rs)
    if (r.kind == kind && r.algorithm == alg && r.k == k) return r.accuracy;
  return std::nullopt;
}

Outcome end_to_end() {
  const ChainResult& c = first_chain();
  std::ostringstream detail;
  bool pass = c.seconds < 300.0;

  bool a = true;
  detail << "(a) RF stft-pca";
  for (std::size_t k : {10u, 15u, 20u}) {
    const auto acc = find(c.pca, ScenarioKind::StftPca, Algorithm::RandomForest, k);
    a = a && acc && *acc >= 0.99;
    detail << fmt(" k%zu=%.4f", k, acc.value_or(-1.0));
  }
  const double stft = best_accuracy(c.isolation, FeatureFamily::Stft);
  const double time = best_accuracy(c.isolation, FeatureFamily::TimeDomain);
  const double wavelet = best_accuracy(c.isolation, FeatureFamily::Wavelet);
  const bool b = stft > time && time > wavelet;
  detail << fmt("; (b) best STFT %.4f > TimeDomain %.4f > Wavelet %.4f", stft, time, wavelet);

  const double baseline = 324.0 / 468.0;
  bool cc = true;
  detail << "; (c) no-pca";
  for (Algorithm alg : kAllAlgorithms) {
    const auto acc = find(c.pca, ScenarioKind::NoPca, alg, std::nullopt);
    cc = cc && acc && *acc >= baseline + 0.20;
    detail << fmt(" %s=%.4f", std::string(to_string(alg)).c_str(), acc.value_or(-1.0));
  }
  detail << fmt(" vs baseline %.4f; %.1f s", baseline, c.seconds);
  pass = pass && a && b && cc;
  return {pass, detail.str()};
}

Outcome determinism() {
  const ChainResult& first = first_chain();
  const ChainResult second = run_chain(kWorkDir / "run2");
  const auto same = [](const std::vector<ScenarioResult>& x, const std::vector<ScenarioResult>& y, std::size_t& n) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i, ++n) {
      if (std::memcmp(&x[i].accuracy, &y[i].accuracy, sizeof(double)) != 0 || x[i].k != y[i].k ||
          x[i].algorithm != y[i].algorithm)
        return false;
    }
    return true;
  };
  std::size_t compared = 0;
  const bool features = first.dataset.features.size() == second.dataset.features.size() &&
                        std::memcmp(first.dataset.features.data(), second.dataset.features.data(),
                                    sizeof(double) * first.dataset.features.size()) == 0;
  const bool ok = same(first.pca, second.pca, compared) && same(first.isolation, second.isolation, compared);
  return {ok && features, fmt("%zu scenario accuracies %s; feature matrices %s; rerun %.1f s", compared,
                              ok ? "bit-identical" : "DIFFER", features ? "bit-identical" : "DIFFER", second.seconds)};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> check;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"stft-oracle", stft_oracle},
      {"wavelet-parseval", wavelet_parseval},
      {"spectral-moments-oracle", spectral_moments},
      {"entropy-bounds", entropy_bounds},
      {"pca", pca_checks},
      {"leakage-guard", leakage_guard},
      {"stratified-split", stratified_split_counts},
      {"majority-baseline", majority_baseline},
      {"tree-oracle", tree_oracle},
      {"knn-oracle", knn_oracle},
      {"svm", svm_checks},
      {"end-to-end", end_to_end},
      {"determinism", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += o.pass ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << fmt(" %2zu %-24s ", i + 1, criteria[i].name) << o.detail << std::endl;
  }
  fs::remove_all(kWorkDir);
  std::cout << (failures == 0 ? "all criteria passed" : fmt("%d criteria failed", failures)) << std::endl;
  return failures == 0 ? 0 : 1;
}
