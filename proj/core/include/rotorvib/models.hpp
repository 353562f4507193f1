#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstddef>
#include <cstdint>
#include <nlohmann/json_fwd.hpp>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace rotorvib {

enum class Algorithm { Svm, DecisionTree, RandomForest, Knn };

inline constexpr std::array<Algorithm, 4> kAllAlgorithms{Algorithm::Svm, Algorithm::DecisionTree,
                                                         Algorithm::RandomForest, Algorithm::Knn};

/// "svm", "dt", "rf", "knn".
std::string_view to_string(Algorithm algorithm) noexcept;
Algorithm parse_algorithm(std::string_view text);

// ---------------------------------------------------------------------------
// Decision tree (CART, Gini)

struct TreeConfig {
  std::size_t max_depth = 0;  // 0 = unbounded
  std::size_t min_samples_split = 2;
  /// Features examined per split; 0 = all. When the sampled features admit no
  /// impurity-reducing split, the remaining features are examined in the same
  /// random order until one does.
  std::size_t max_features = 0;
  std::uint64_t seed = 0;  // only used when max_features > 0
};

struct TreeNode {
  int feature = -1;  // -1 for leaves
  double threshold = 0.0;
  int left = -1;   // rows with x[feature] <= threshold
  int right = -1;
  std::array<std::size_t, 2> counts{};  // training rows per class routed here
  std::size_t depth = 0;

  bool is_leaf() const noexcept { return feature < 0; }
  std::size_t samples() const noexcept { return counts[0] + counts[1]; }
  /// Majority class; ties go to class 0.
  int prediction() const noexcept { return counts[1] > counts[0] ? 1 : 0; }
  double gini() const noexcept;
};

class DecisionTree {
 public:
  DecisionTree() = default;
  DecisionTree(std::vector<TreeNode> nodes, std::size_t feature_count);

  const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
  std::size_t feature_count() const noexcept { return feature_count_; }

  int predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  std::vector<int> predict(const Eigen::MatrixXd& x) const;

  /// Per feature: sum over splitting nodes of (n_node / n_root) * (Gini(node) -
  /// weighted Gini(children)). Unnormalized.
  std::vector<double> impurity_decrease() const;

 private:
  std::vector<TreeNode> nodes_;
  std::size_t feature_count_ = 0;
};

/// Greedy CART. Each node takes the (feature, threshold) with the lowest
/// weighted child Gini among midpoints of consecutive distinct values; ties go
/// to the lowest feature index, then the lowest threshold. A node becomes a
/// leaf when it is pure or no split strictly lowers the impurity.
DecisionTree train_decision_tree(const Eigen::MatrixXd& x, std::span<const int> labels, const TreeConfig& config = {});

/// Same, restricted to the given (possibly repeated) sample rows.
DecisionTree train_decision_tree(const Eigen::MatrixXd& x, std::span<const int> labels,
                                 std::span<const std::size_t> samples, const TreeConfig& config);

// ---------------------------------------------------------------------------
// Random forest

struct ForestConfig {
  std::size_t trees = 100;
  std::size_t max_features = 0;  // 0 = floor(sqrt(F))
  bool bootstrap = true;
  std::uint64_t seed = 42;
  int tie_class = 0;  // vote ties
  std::size_t max_depth = 0;
};

class RandomForest {
 public:
  RandomForest() = default;
  RandomForest(std::vector<DecisionTree> trees, std::vector<std::uint64_t> seeds, std::size_t max_features,
               int tie_class);

  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }
  const std::vector<std::uint64_t>& tree_seeds() const noexcept { return seeds_; }
  std::size_t max_features() const noexcept { return max_features_; }
  int tie_class() const noexcept { return tie_class_; }

  int predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  std::vector<int> predict(const Eigen::MatrixXd& x) const;

 private:
  std::vector<DecisionTree> trees_;
  std::vector<std::uint64_t> seeds_;
  std::size_t max_features_ = 0;
  int tie_class_ = 0;
};

/// Per-tree seeds derive from the master seed and the tree index only, so the
/// forest is identical however the trees are scheduled.
RandomForest train_random_forest(const Eigen::MatrixXd& x, std::span<const int> labels,
                                 const ForestConfig& config = {});

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept;

// ---------------------------------------------------------------------------
// k-nearest neighbours

struct KnnConfig {
  std::size_t k = 5;
};

/// Euclidean distance. Distance ties go to the lower training row; vote ties
/// go to the label of the single nearest neighbour.
class KnnModel {
 public:
  KnnModel() = default;
  KnnModel(Eigen::MatrixXd train, std::vector<int> labels, std::size_t k);

  std::size_t k() const noexcept { return k_; }
  const Eigen::MatrixXd& train() const noexcept { return train_; }
  const std::vector<int>& labels() const noexcept { return labels_; }

  int predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  std::vector<int> predict(const Eigen::MatrixXd& x) const;

 private:
  Eigen::MatrixXd train_;
  std::vector<int> labels_;
  std::size_t k_ = 5;
};

KnnModel train_knn(const Eigen::MatrixXd& x, std::span<const int> labels, const KnnConfig& config = {});

// ---------------------------------------------------------------------------
// Support vector machine (C-SVC, SMO)

enum class KernelType { Rbf, Linear };

struct SvmConfig {
  KernelType kernel = KernelType::Rbf;
  double c = 1.0;
  std::optional<double> gamma;  // default 1 / (F * mean per-feature variance)
  double tol = 1e-3;
  std::size_t max_iterations = 0;  // 0 = max(10'000'000, 100 n)
};

/// f(x) = sum_i coef_i K(sv_i, x) + bias with coef_i = alpha_i y_i, where
/// label 1 maps to y = +1 and label 0 to y = -1. predict returns 1 iff f > 0.
class SvmModel {
 public:
  KernelType kernel = KernelType::Rbf;
  double gamma = 0.0;
  double c = 1.0;
  Eigen::MatrixXd support_vectors;
  Eigen::VectorXd coefficients;
  double bias = 0.0;
  /// Dual variables of every training row, in training order.
  std::vector<double> alphas;
  std::size_t iterations = 0;
  bool converged = true;

  double decision_value(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  Eigen::VectorXd decision_values(const Eigen::MatrixXd& x) const;
  int predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  std::vector<int> predict(const Eigen::MatrixXd& x) const;
};

/// Sequential minimal optimization with second-order working-set selection.
/// Stops when the maximal KKT violation drops below `tol`; otherwise returns
/// the last iterate with converged = false.
SvmModel train_svm(const Eigen::MatrixXd& x, std::span<const int> labels, const SvmConfig& config = {});

double default_gamma(const Eigen::MatrixXd& x);

// ---------------------------------------------------------------------------

using TrainedModel = std::variant<DecisionTree, RandomForest, KnnModel, SvmModel>;

struct ModelConfig {
  TreeConfig dt;
  ForestConfig rf;
  KnnConfig knn;
  SvmConfig svm;
};

TrainedModel train_model(Algorithm algorithm, const Eigen::MatrixXd& x, std::span<const int> labels,
                         const ModelConfig& config = {});
Algorithm algorithm_of(const TrainedModel& model) noexcept;
std::vector<int> predict(const TrainedModel& model, const Eigen::MatrixXd& x);

/// correct / total. Throws LengthMismatch or Empty.
double accuracy(std::span<const int> predictions, std::span<const int> labels);

/// Gini importance normalized to sum 1; a forest averages the normalized
/// importances of its trees that have at least one split. A model without any
/// split yields all zeros. Throws NotTreeBased for kNN and SVM.
std::vector<double> gini_importance(const TrainedModel& model);

nlohmann::json model_to_json(const TrainedModel& model);
TrainedModel model_from_json(const nlohmann::json& doc);

nlohmann::json model_config_to_json(const ModelConfig& config);
/// Unknown keys are rejected with ConfigInvalid.
ModelConfig model_config_from_json(const nlohmann::json& doc);

}  // namespace rotorvib
