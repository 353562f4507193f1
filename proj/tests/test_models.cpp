#include <gtest/gtest.h>

#include <nlohmann/json.hpp>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "rotorvib/error.hpp"
#include "rotorvib/models.hpp"

using namespace rotorvib;

namespace {

SvmConfig svm_config(KernelType kernel = KernelType::Rbf, double c = 1.0, std::size_t max_iterations = 0) {
  SvmConfig cfg;
  cfg.kernel = kernel;
  cfg.c = c;
  cfg.max_iterations = max_iterations;
  return cfg;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no rotorvib::Error thrown";
  return ErrorCode::InvalidArgument;
}

struct Labeled {
  Eigen::MatrixXd x;
  std::vector<int> y;
};

// Two integer-valued columns (many ties) and three continuous ones; the label
// depends on a noisy combination of them.
Labeled tree_dataset(std::uint64_t seed, std::size_t rows = 40) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> small(0, 3);
  std::normal_distribution<double> normal(0.0, 1.0);
  Labeled d{Eigen::MatrixXd(static_cast<Eigen::Index>(rows), 5), {}};
  for (Eigen::Index r = 0; r < d.x.rows(); ++r) {
    d.x(r, 0) = small(rng);
    d.x(r, 1) = small(rng);
    for (Eigen::Index c = 2; c < 5; ++c) d.x(r, c) = normal(rng);
    const double score = 0.6 * d.x(r, 0) - 0.4 * d.x(r, 1) + d.x(r, 3) + 0.8 * normal(rng);
    d.y.push_back(score > 0.5 ? 1 : 0);
  }
  return d;
}

Labeled blobs(std::uint64_t seed, std::size_t per_class, std::size_t cols, double separation) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Labeled d{Eigen::MatrixXd(static_cast<Eigen::Index>(2 * per_class), static_cast<Eigen::Index>(cols)), {}};
  for (Eigen::Index r = 0; r < d.x.rows(); ++r) {
    const int label = static_cast<std::size_t>(r) < per_class ? 0 : 1;
    for (Eigen::Index c = 0; c < d.x.cols(); ++c) d.x(r, c) = normal(rng) + separation * label;
    d.y.push_back(label);
  }
  return d;
}

void check_node(const DecisionTree& tree, int index, const Labeled& d, const std::vector<std::size_t>& rows) {
  const auto& node = tree.nodes()[static_cast<std::size_t>(index)];
  std::size_t ones = 0;
  for (std::size_t r : rows) ones += d.y[r] == 1 ? 1 : 0;
  EXPECT_EQ(node.counts[1], ones);
  EXPECT_EQ(node.counts[0], rows.size() - ones);
  const auto best = oracle::brute_force_split(d.x, d.y, rows);
  if (node.is_leaf()) {
    EXPECT_FALSE(best.found) << "leaf " << index << " admits an impurity-reducing split";
    return;
  }
  ASSERT_TRUE(best.found) << "node " << index << " split without reducing impurity";
  EXPECT_EQ(node.feature, best.feature) << "node " << index;
  EXPECT_NEAR(node.threshold, best.threshold, 1e-12) << "node " << index;
  std::vector<std::size_t> left;
  std::vector<std::size_t> right;
  for (std::size_t r : rows) {
    (d.x(static_cast<Eigen::Index>(r), node.feature) <= node.threshold ? left : right).push_back(r);
  }
  check_node(tree, node.left, d, left);
  check_node(tree, node.right, d, right);
}

}  // namespace

TEST(DecisionTree, SeparablePair) {
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 1.0;
  const std::vector<int> y{0, 1};
  const auto tree = train_decision_tree(x, y);
  ASSERT_EQ(tree.nodes().size(), 3u);
  EXPECT_EQ(tree.nodes()[0].threshold, 0.5);
  EXPECT_EQ(tree.predict(x), y);
}

TEST(DecisionTree, IdenticalRowsGiveMajorityLeaf) {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Ones(5, 3);
  const std::vector<int> y{1, 0, 1, 1, 0};
  const auto tree = train_decision_tree(x, y);
  ASSERT_EQ(tree.nodes().size(), 1u);
  EXPECT_EQ(tree.predict_row(x.row(0)), 1);
  EXPECT_EQ(gini_importance(TrainedModel{tree}), std::vector<double>(3, 0.0));
}

TEST(DecisionTree, EmptyTrainSet) {
  EXPECT_EQ(code_of([] { train_decision_tree(Eigen::MatrixXd(0, 2), std::vector<int>{}); }), ErrorCode::EmptyTrainSet);
}

TEST(DecisionTree, SplitsMatchBruteForce) {
  for (std::uint64_t seed : {1u, 2u, 3u, 42u}) {
    const auto d = tree_dataset(seed);
    const auto tree = train_decision_tree(d.x, d.y);
    std::vector<std::size_t> all(40);
    std::iota(all.begin(), all.end(), 0);
    check_node(tree, 0, d, all);
    EXPECT_EQ(tree.predict(d.x), d.y) << "consistent data must be fitted exactly";
  }
}

TEST(DecisionTree, ImportanceMatchesTraversal) {
  const auto d = tree_dataset(42);
  const TrainedModel model = train_decision_tree(d.x, d.y);
  const auto imp = gini_importance(model);
  const auto ref = oracle::traversal_importance(std::get<DecisionTree>(model));
  EXPECT_NEAR(std::accumulate(imp.begin(), imp.end(), 0.0), 1.0, 1e-9);
  for (std::size_t f = 0; f < imp.size(); ++f) EXPECT_NEAR(imp[f], ref[f], 1e-12);
}

TEST(DecisionTree, SingleSeparatingFeature) {
  auto d = blobs(5, 20, 5, 0.0);
  for (Eigen::Index r = 0; r < d.x.rows(); ++r) d.x(r, 3) = d.y[static_cast<std::size_t>(r)] * 10.0 + 0.01 * r;
  const auto imp = gini_importance(train_model(Algorithm::DecisionTree, d.x, d.y));
  EXPECT_EQ(imp, (std::vector<double>{0, 0, 0, 1, 0}));
}

TEST(DecisionTree, MaxDepth) {
  const auto d = tree_dataset(7);
  const auto tree = train_decision_tree(d.x, d.y, TreeConfig{.max_depth = 2});
  for (const auto& node : tree.nodes()) EXPECT_LE(node.depth, 2u);
}

TEST(RandomForest, DegenerateForestEqualsTree) {
  const auto d = tree_dataset(11, 80);
  const auto tree = train_decision_tree(d.x, d.y);
  const auto forest = train_random_forest(d.x, d.y, ForestConfig{.trees = 1, .max_features = 5, .bootstrap = false});
  const auto q = blobs(12, 30, 5, 0.5);
  EXPECT_EQ(forest.predict(q.x), tree.predict(q.x));
  EXPECT_EQ(forest.predict(d.x), tree.predict(d.x));
}

TEST(RandomForest, DeterministicAndOrderInvariant) {
  const auto d = blobs(3, 60, 6, 0.8);
  const ForestConfig cfg{.trees = 25, .seed = 9};
  const auto a = train_random_forest(d.x, d.y, cfg);
  const auto b = train_random_forest(d.x, d.y, cfg);
  EXPECT_EQ(model_to_json(a), model_to_json(b));
  auto trees = a.trees();
  auto seeds = a.tree_seeds();
  std::reverse(trees.begin(), trees.end());
  std::reverse(seeds.begin(), seeds.end());
  const RandomForest reversed(trees, seeds, a.max_features(), a.tie_class());
  const auto q = blobs(4, 50, 6, 0.8);
  EXPECT_EQ(reversed.predict(q.x), a.predict(q.x));
}

TEST(RandomForest, SeparableDataIsPerfect) {
  const auto train = blobs(1, 100, 4, 8.0);
  const auto test = blobs(2, 50, 4, 8.0);
  const auto forest = train_random_forest(train.x, train.y);
  EXPECT_EQ(accuracy(forest.predict(test.x), test.y), 1.0);
  const auto imp = gini_importance(TrainedModel{forest});
  EXPECT_NEAR(std::accumulate(imp.begin(), imp.end(), 0.0), 1.0, 1e-9);
}

TEST(RandomForest, VoteTieGoesToTieClass) {
  Eigen::MatrixXd x(2, 1);
  x << 0.0, 1.0;
  const std::vector<int> y{0, 1};
  const auto t0 = train_decision_tree(x, std::vector<int>{0, 0});
  const auto t1 = train_decision_tree(x, std::vector<int>{1, 1});
  EXPECT_EQ(RandomForest({t0, t1}, {1, 2}, 1, 0).predict_row(x.row(0)), 0);
  EXPECT_EQ(RandomForest({t0, t1}, {1, 2}, 1, 1).predict_row(x.row(0)), 1);
}

TEST(Knn, MatchesExhaustiveOracle) {
  std::mt19937_64 rng(77);
  std::uniform_int_distribution<int> grid(0, 4);
  Eigen::MatrixXd x(60, 3);
  std::vector<int> y;
  for (Eigen::Index r = 0; r < 60; ++r) {
    for (Eigen::Index c = 0; c < 3; ++c) x(r, c) = grid(rng);
    y.push_back(static_cast<int>(rng() % 2));
  }
  for (std::size_t k : {1u, 2u, 4u, 5u, 8u}) {
    const auto model = train_knn(x, y, KnnConfig{k});
    for (int q = 0; q < 50; ++q) {
      Eigen::RowVectorXd query(3);
      for (Eigen::Index c = 0; c < 3; ++c) query(c) = grid(rng) + 0.5 * static_cast<double>(rng() % 2);
      EXPECT_EQ(model.predict_row(query), oracle::exhaustive_knn(x, y, query, k)) << "k=" << k << " query " << q;
    }
  }
}

TEST(Knn, DocumentedTieBreaks) {
  Eigen::MatrixXd x(4, 1);
  x << -1.0, 1.0, -2.0, 2.0;
  const std::vector<int> y{1, 0, 0, 1};
  Eigen::RowVectorXd origin(1);
  origin << 0.0;
  // Distance tie between rows 0 and 1: the lower row wins.
  EXPECT_EQ(train_knn(x, y, {1}).predict_row(origin), 1);
  // Vote tie 1-1 at k=2: label of the nearest (row 0).
  EXPECT_EQ(train_knn(x, y, {2}).predict_row(origin), 1);
  // k = all rows, 2-2: nearest again.
  EXPECT_EQ(train_knn(x, y, {4}).predict_row(origin), 1);
}

TEST(Knn, ExactMatchAndGlobalMajority) {
  const auto d = blobs(8, 10, 2, 1.0);
  auto y = d.y;
  y[0] = 1;
  const auto one = train_knn(d.x, y, {1});
  for (Eigen::Index r = 0; r < d.x.rows(); ++r) EXPECT_EQ(one.predict_row(d.x.row(r)), y[static_cast<std::size_t>(r)]);
  const auto all = train_knn(d.x, y, {20});
  EXPECT_EQ(all.predict_row(Eigen::RowVectorXd::Zero(2)), 1);
}

TEST(Svm, TwoPointLinear) {
  Eigen::MatrixXd x(2, 2);
  x << -1.0, 0.0, 1.0, 0.0;
  const std::vector<int> y{0, 1};
  const auto m = train_svm(x, y, svm_config(KernelType::Linear));
  EXPECT_EQ(m.predict(x), y);
  EXPECT_LT(std::abs(m.decision_value(Eigen::RowVector2d(0.0, 0.0))), 1e-6);
}

TEST(Svm, XorWithRbf) {
  Eigen::MatrixXd x(4, 2);
  x << 0, 0, 1, 1, 0, 1, 1, 0;
  const std::vector<int> y{0, 0, 1, 1};
  for (double c : {1.0, 10.0}) {
    const auto m = train_svm(x, y, svm_config(KernelType::Rbf, c));
    EXPECT_TRUE(m.converged);
    EXPECT_EQ(m.predict(x), y) << "C=" << c;
  }
}

TEST(Svm, BoxConstraint) {
  const auto d = blobs(21, 40, 4, 0.7);
  for (double c : {0.1, 1.0, 5.0}) {
    const auto m = train_svm(d.x, d.y, svm_config(KernelType::Rbf, c));
    ASSERT_EQ(m.alphas.size(), 80u);
    for (double a : m.alphas) {
      EXPECT_GE(a, 0.0);
      EXPECT_LE(a, c);
    }
  }
}

TEST(Svm, LabelFlipAntisymmetry) {
  const auto d = blobs(22, 40, 4, 0.7);
  std::vector<int> flipped;
  for (int v : d.y) flipped.push_back(1 - v);
  for (KernelType kernel : {KernelType::Rbf, KernelType::Linear}) {
    const auto a = train_svm(d.x, d.y, svm_config(kernel));
    const auto b = train_svm(d.x, flipped, svm_config(kernel));
    const auto q = blobs(23, 20, 4, 0.7);
    EXPECT_LT((a.decision_values(q.x) + b.decision_values(q.x)).cwiseAbs().maxCoeff(), 1e-3);
  }
}

TEST(Svm, NonConvergenceIsFlagged) {
  const auto d = blobs(24, 40, 4, 0.3);
  const auto m = train_svm(d.x, d.y, svm_config(KernelType::Rbf, 1.0, 1));
  EXPECT_FALSE(m.converged);
  EXPECT_EQ(m.iterations, 1u);
}

TEST(Svm, SingleClass) {
  const auto d = blobs(1, 5, 2, 0.0);
  EXPECT_EQ(code_of([&] { train_svm(d.x, std::vector<int>(10, 1)); }), ErrorCode::SingleClass);
}

TEST(Accuracy, Basics) {
  EXPECT_EQ(accuracy(std::vector<int>{1, 0, 1}, std::vector<int>{1, 0, 1}), 1.0);
  EXPECT_EQ(accuracy(std::vector<int>{1, 0, 1, 0}, std::vector<int>{1, 1, 0, 0}), 0.5);
  std::vector<int> labels(1560, 1);
  std::fill(labels.begin(), labels.begin() + 480, 0);
  EXPECT_NEAR(accuracy(std::vector<int>(1560, 1), labels), 1080.0 / 1560.0, 1e-15);
  EXPECT_EQ(code_of([] { accuracy(std::vector<int>{1}, std::vector<int>{1, 0}); }), ErrorCode::LengthMismatch);
  EXPECT_EQ(code_of([] { accuracy(std::vector<int>{}, std::vector<int>{}); }), ErrorCode::Empty);
}

TEST(Importance, RejectsNonTreeModels) {
  const auto d = blobs(1, 10, 2, 2.0);
  EXPECT_EQ(code_of([&] { gini_importance(train_model(Algorithm::Knn, d.x, d.y)); }), ErrorCode::NotTreeBased);
  EXPECT_EQ(code_of([&] { gini_importance(train_model(Algorithm::Svm, d.x, d.y)); }), ErrorCode::NotTreeBased);
}

TEST(Persistence, JsonRoundTripPreservesPredictions) {
  const auto d = blobs(31, 30, 3, 1.0);
  const auto q = blobs(32, 20, 3, 1.0);
  ModelConfig cfg;
  cfg.rf.trees = 10;
  for (Algorithm alg : kAllAlgorithms) {
    const auto model = train_model(alg, d.x, d.y, cfg);
    const auto back = model_from_json(nlohmann::json::parse(model_to_json(model).dump()));
    EXPECT_EQ(algorithm_of(back), alg);
    EXPECT_EQ(predict(back, q.x), predict(model, q.x)) << to_string(alg);
  }
}

TEST(Persistence, ConfigRejectsUnknownKeys) {
  ModelConfig cfg;
  cfg.knn.k = 7;
  cfg.svm.gamma = 0.25;
  const auto back = model_config_from_json(model_config_to_json(cfg));
  EXPECT_EQ(back.knn.k, 7u);
  EXPECT_EQ(back.svm.gamma, 0.25);
  auto doc = model_config_to_json(cfg);
  doc["rf"]["n_trees"] = 5;
  EXPECT_EQ(code_of([&] { model_config_from_json(doc); }), ErrorCode::ConfigInvalid);
  EXPECT_EQ(parse_algorithm("rf"), Algorithm::RandomForest);
  EXPECT_EQ(code_of([] { parse_algorithm("xgb"); }), ErrorCode::ConfigInvalid);
}
