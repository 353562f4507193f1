#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "parallel.hpp"
#include "rotorvib/error.hpp"
#include "rotorvib/models.hpp"

namespace rotorvib {
namespace {

__extension__ typedef unsigned __int128 u128;

// Weighted child impurity is minimized by maximizing
//   (l0^2 + l1^2) / nl + (r0^2 + r1^2) / nr,
// held here as an exact fraction so that ties compare exactly.
struct Score {
  u128 num = 0;
  u128 den = 1;

  bool operator>(const Score& o) const { return num * o.den > o.num * den; }
};

Score split_score(std::size_t l0, std::size_t l1, std::size_t r0, std::size_t r1) {
  const u128 nl = l0 + l1;
  const u128 nr = r0 + r1;
  const u128 a = u128(l0) * l0 + u128(l1) * l1;
  const u128 b = u128(r0) * r0 + u128(r1) * r1;
  return {a * nr + b * nl, nl * nr};
}

Score node_score(std::size_t c0, std::size_t c1) {
  return {u128(c0) * c0 + u128(c1) * c1, u128(c0 + c1)};
}

struct Candidate {
  bool found = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  Score score;
};

class TreeBuilder {
 public:
  TreeBuilder(const Eigen::MatrixXd& x, std::span<const int> labels, const TreeConfig& config)
      : x_(x), labels_(labels), config_(config), rng_(config.seed) {
    features_.resize(static_cast<std::size_t>(x.cols()));
    std::iota(features_.begin(), features_.end(), std::size_t{0});
  }

  std::vector<TreeNode> build(std::vector<std::size_t> samples) {
    grow(std::move(samples), 0);
    return std::move(nodes_);
  }

 private:
  int grow(std::vector<std::size_t> samples, std::size_t depth) {
    TreeNode node;
    node.depth = depth;
    for (std::size_t s : samples) ++node.counts[labels_[s] == 1];
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(node);

    const bool pure = node.counts[0] == 0 || node.counts[1] == 0;
    const bool depth_capped = config_.max_depth != 0 && depth >= config_.max_depth;
    if (pure || depth_capped || samples.size() < std::max<std::size_t>(config_.min_samples_split, 2)) return id;

    const Candidate best = find_split(samples, node.counts);
    if (!best.found) return id;

    std::vector<std::size_t> left;
    std::vector<std::size_t> right;
    const auto f = static_cast<Eigen::Index>(best.feature);
    for (std::size_t s : samples) {
      (x_(static_cast<Eigen::Index>(s), f) <= best.threshold ? left : right).push_back(s);
    }
    samples.clear();
    samples.shrink_to_fit();

    nodes_[static_cast<std::size_t>(id)].feature = static_cast<int>(best.feature);
    nodes_[static_cast<std::size_t>(id)].threshold = best.threshold;
    const int l = grow(std::move(left), depth + 1);
    const int r = grow(std::move(right), depth + 1);
    nodes_[static_cast<std::size_t>(id)].left = l;
    nodes_[static_cast<std::size_t>(id)].right = r;
    return id;
  }

  // Scans one feature; keeps `best` unless a strictly better split appears.
  void scan_feature(std::size_t feature, const std::vector<std::size_t>& samples, std::array<std::size_t, 2> counts,
                    const Score& parent, Candidate& best) {
    column_.clear();
    const auto f = static_cast<Eigen::Index>(feature);
    for (std::size_t s : samples) column_.emplace_back(x_(static_cast<Eigen::Index>(s), f), labels_[s] == 1);
    std::sort(column_.begin(), column_.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    std::size_t l0 = 0;
    std::size_t l1 = 0;
    for (std::size_t i = 0; i + 1 < column_.size(); ++i) {
      (column_[i].second ? l1 : l0) += 1;
      const double lo = column_[i].first;
      const double hi = column_[i + 1].first;
      if (!(lo < hi)) continue;
      const Score score = split_score(l0, l1, counts[0] - l0, counts[1] - l1);
      if (!(score > parent)) continue;
      if (!best.found || score > best.score) {
        double mid = (lo + hi) / 2.0;
        if (!(mid < hi)) mid = lo;
        best = {true, feature, mid, score};
      }
    }
  }

  Candidate find_split(const std::vector<std::size_t>& samples, std::array<std::size_t, 2> counts) {
    const Score parent = node_score(counts[0], counts[1]);
    Candidate best;
    const std::size_t n_features = features_.size();
    if (config_.max_features == 0 || config_.max_features >= n_features) {
      for (std::size_t f = 0; f < n_features; ++f) scan_feature(f, samples, counts, parent, best);
      return best;
    }
    // Random subset, examined in ascending index order so ties keep the
    // lowest feature; keep drawing features if none of them can split.
    std::vector<std::size_t> order = features_;
    for (std::size_t i = 0; i < n_features; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n_features - 1);
      std::swap(order[i], order[pick(rng_)]);
      if (i + 1 == config_.max_features) break;
    }
    std::vector<std::size_t> subset(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(config_.max_features));
    std::sort(subset.begin(), subset.end());
    for (std::size_t f : subset) scan_feature(f, samples, counts, parent, best);
    for (std::size_t i = config_.max_features; i < n_features && !best.found; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n_features - 1);
      std::swap(order[i], order[pick(rng_)]);
      scan_feature(order[i], samples, counts, parent, best);
    }
    return best;
  }

  const Eigen::MatrixXd& x_;
  std::span<const int> labels_;
  TreeConfig config_;
  std::mt19937_64 rng_;
  std::vector<std::size_t> features_;
  std::vector<TreeNode> nodes_;
  std::vector<std::pair<double, bool>> column_;
};

void check_training_input(const Eigen::MatrixXd& x, std::span<const int> labels) {
  if (x.rows() == 0) throw Error(ErrorCode::EmptyTrainSet, "training set is empty");
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, "feature rows and labels differ in length");
  }
  for (int l : labels) {
    if (l != 0 && l != 1) throw Error(ErrorCode::InvalidArgument, "labels must be 0 or 1");
  }
}

}  // namespace

double TreeNode::gini() const noexcept {
  const double n = static_cast<double>(samples());
  if (n == 0.0) return 0.0;
  const double p0 = static_cast<double>(counts[0]) / n;
  const double p1 = static_cast<double>(counts[1]) / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

DecisionTree::DecisionTree(std::vector<TreeNode> nodes, std::size_t feature_count)
    : nodes_(std::move(nodes)), feature_count_(feature_count) {
  if (nodes_.empty()) throw Error(ErrorCode::InvalidArgument, "a tree needs at least one node");
}

int DecisionTree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  if (static_cast<std::size_t>(row.size()) != feature_count_) {
    throw Error(ErrorCode::SchemaMismatch, "row width does not match the tree");
  }
  std::size_t i = 0;
  while (!nodes_[i].is_leaf()) {
    const auto& n = nodes_[i];
    i = static_cast<std::size_t>(row(n.feature) <= n.threshold ? n.left : n.right);
  }
  return nodes_[i].prediction();
}

std::vector<int> DecisionTree::predict(const Eigen::MatrixXd& x) const {
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) out[static_cast<std::size_t>(r)] = predict_row(x.row(r));
  return out;
}

std::vector<double> DecisionTree::impurity_decrease() const {
  std::vector<double> out(feature_count_, 0.0);
  const double root = static_cast<double>(nodes_.front().samples());
  for (const auto& n : nodes_) {
    if (n.is_leaf()) continue;
    const auto& l = nodes_[static_cast<std::size_t>(n.left)];
    const auto& r = nodes_[static_cast<std::size_t>(n.right)];
    const double weighted = static_cast<double>(n.samples()) * n.gini() -
                            static_cast<double>(l.samples()) * l.gini() -
                            static_cast<double>(r.samples()) * r.gini();
    out[static_cast<std::size_t>(n.feature)] += weighted / root;
  }
  return out;
}

DecisionTree train_decision_tree(const Eigen::MatrixXd& x, std::span<const int> labels,
                                 std::span<const std::size_t> samples, const TreeConfig& config) {
  check_training_input(x, labels);
  if (samples.empty()) throw Error(ErrorCode::EmptyTrainSet, "no samples to train on");
  TreeBuilder builder(x, labels, config);
  return DecisionTree(builder.build({samples.begin(), samples.end()}), static_cast<std::size_t>(x.cols()));
}

DecisionTree train_decision_tree(const Eigen::MatrixXd& x, std::span<const int> labels, const TreeConfig& config) {
  check_training_input(x, labels);
  std::vector<std::size_t> samples(static_cast<std::size_t>(x.rows()));
  std::iota(samples.begin(), samples.end(), std::size_t{0});
  return train_decision_tree(x, labels, samples, config);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  // splitmix64 finalizer over (master, stream)
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

RandomForest::RandomForest(std::vector<DecisionTree> trees, std::vector<std::uint64_t> seeds,
                           std::size_t max_features, int tie_class)
    : trees_(std::move(trees)), seeds_(std::move(seeds)), max_features_(max_features), tie_class_(tie_class) {
  if (trees_.empty()) throw Error(ErrorCode::InvalidArgument, "a forest needs at least one tree");
}

int RandomForest::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  std::size_t votes1 = 0;
  for (const auto& t : trees_) votes1 += static_cast<std::size_t>(t.predict_row(row));
  const std::size_t votes0 = trees_.size() - votes1;
  if (votes1 == votes0) return tie_class_;
  return votes1 > votes0 ? 1 : 0;
}

std::vector<int> RandomForest::predict(const Eigen::MatrixXd& x) const {
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index r = 0; r < x.rows(); ++r) out[static_cast<std::size_t>(r)] = predict_row(x.row(r));
  return out;
}

RandomForest train_random_forest(const Eigen::MatrixXd& x, std::span<const int> labels, const ForestConfig& config) {
  check_training_input(x, labels);
  if (config.trees == 0) throw Error(ErrorCode::InvalidArgument, "forest needs at least one tree");
  const auto n = static_cast<std::size_t>(x.rows());
  const auto f = static_cast<std::size_t>(x.cols());
  const std::size_t m = config.max_features != 0
                            ? std::min(config.max_features, f)
                            : std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(std::sqrt(static_cast<double>(f)))));

  std::vector<std::uint64_t> seeds(config.trees);
  for (std::size_t t = 0; t < config.trees; ++t) seeds[t] = derive_seed(config.seed, t);

  std::vector<DecisionTree> trees(config.trees);
  detail::parallel_for(config.trees, [&](std::size_t t) {
    std::mt19937_64 rng(seeds[t]);
    std::vector<std::size_t> samples(n);
    if (config.bootstrap) {
      std::uniform_int_distribution<std::size_t> draw(0, n - 1);
      for (auto& s : samples) s = draw(rng);
    } else {
      std::iota(samples.begin(), samples.end(), std::size_t{0});
    }
    TreeConfig tc;
    tc.max_depth = config.max_depth;
    tc.max_features = m;
    tc.seed = rng();
    trees[t] = train_decision_tree(x, labels, samples, tc);
  });
  return RandomForest(std::move(trees), std::move(seeds), m, config.tie_class);
}

}  // namespace rotorvib
