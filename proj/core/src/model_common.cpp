#include <cmath>
#include <nlohmann/json.hpp>
#include <set>

#include "rotorvib/error.hpp"
#include "rotorvib/models.hpp"

namespace rotorvib {
namespace {

using json = nlohmann::json;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index c = 0; c < m.cols(); ++c) row[static_cast<std::size_t>(c)] = m(r, c);
    rows.push_back(std::move(row));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Eigen::MatrixXd matrix_from_json(const json& doc) {
  const auto rows = doc.at("rows").get<Eigen::Index>();
  const auto cols = doc.at("cols").get<Eigen::Index>();
  Eigen::MatrixXd m(rows, cols);
  const auto& data = doc.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows) throw Error(ErrorCode::ConfigInvalid, "matrix row count mismatch");
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto row = data[static_cast<std::size_t>(r)].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(row.size()) != cols) throw Error(ErrorCode::ConfigInvalid, "matrix column count mismatch");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)];
  }
  return m;
}

json node_to_json(const std::vector<TreeNode>& nodes, std::size_t i) {
  const auto& n = nodes[i];
  json out = {{"counts", {n.counts[0], n.counts[1]}}};
  if (!n.is_leaf()) {
    out["feature"] = n.feature;
    out["threshold"] = n.threshold;
    out["left"] = node_to_json(nodes, static_cast<std::size_t>(n.left));
    out["right"] = node_to_json(nodes, static_cast<std::size_t>(n.right));
  }
  return out;
}

int node_from_json(const json& doc, std::size_t depth, std::vector<TreeNode>& nodes) {
  TreeNode node;
  node.depth = depth;
  node.counts = {doc.at("counts").at(0).get<std::size_t>(), doc.at("counts").at(1).get<std::size_t>()};
  const int id = static_cast<int>(nodes.size());
  nodes.push_back(node);
  if (doc.contains("feature")) {
    nodes[static_cast<std::size_t>(id)].feature = doc["feature"].get<int>();
    nodes[static_cast<std::size_t>(id)].threshold = doc.at("threshold").get<double>();
    const int l = node_from_json(doc.at("left"), depth + 1, nodes);
    const int r = node_from_json(doc.at("right"), depth + 1, nodes);
    nodes[static_cast<std::size_t>(id)].left = l;
    nodes[static_cast<std::size_t>(id)].right = r;
  }
  return id;
}

json tree_to_json(const DecisionTree& tree) {
  return {{"features", tree.feature_count()}, {"root", node_to_json(tree.nodes(), 0)}};
}

DecisionTree tree_from_json(const json& doc) {
  std::vector<TreeNode> nodes;
  node_from_json(doc.at("root"), 0, nodes);
  return DecisionTree(std::move(nodes), doc.at("features").get<std::size_t>());
}

std::vector<double> normalized(std::vector<double> v) {
  double total = 0.0;
  for (double x : v) total += x;
  if (total > 0.0) {
    for (double& x : v) x /= total;
  }
  return v;
}

void reject_unknown(const json& doc, std::initializer_list<std::string_view> allowed, std::string_view where) {
  const std::set<std::string_view> keys(allowed);
  for (const auto& [key, value] : doc.items()) {
    if (!keys.contains(key)) throw Error(ErrorCode::ConfigInvalid, "unknown key '" + key + "' in " + std::string(where));
  }
}

}  // namespace

std::string_view to_string(Algorithm algorithm) noexcept {
  switch (algorithm) {
    case Algorithm::Svm: return "svm";
    case Algorithm::DecisionTree: return "dt";
    case Algorithm::RandomForest: return "rf";
    case Algorithm::Knn: return "knn";
  }
  return "svm";
}

Algorithm parse_algorithm(std::string_view text) {
  for (Algorithm a : kAllAlgorithms) {
    if (text == to_string(a)) return a;
  }
  throw Error(ErrorCode::ConfigInvalid, "unknown algorithm '" + std::string(text) + "' (expected svm, dt, rf, knn)");
}

TrainedModel train_model(Algorithm algorithm, const Eigen::MatrixXd& x, std::span<const int> labels,
                         const ModelConfig& config) {
  switch (algorithm) {
    case Algorithm::Svm: return train_svm(x, labels, config.svm);
    case Algorithm::DecisionTree: return train_decision_tree(x, labels, config.dt);
    case Algorithm::RandomForest: return train_random_forest(x, labels, config.rf);
    case Algorithm::Knn: return train_knn(x, labels, config.knn);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown algorithm");
}

Algorithm algorithm_of(const TrainedModel& model) noexcept {
  return std::visit(overloaded{[](const DecisionTree&) { return Algorithm::DecisionTree; },
                               [](const RandomForest&) { return Algorithm::RandomForest; },
                               [](const KnnModel&) { return Algorithm::Knn; },
                               [](const SvmModel&) { return Algorithm::Svm; }},
                    model);
}

std::vector<int> predict(const TrainedModel& model, const Eigen::MatrixXd& x) {
  return std::visit([&x](const auto& m) { return m.predict(x); }, model);
}

double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size()) throw Error(ErrorCode::LengthMismatch, "prediction/label length mismatch");
  if (labels.empty()) throw Error(ErrorCode::Empty, "accuracy of an empty set");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) correct += predictions[i] == labels[i];
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

std::vector<double> gini_importance(const TrainedModel& model) {
  if (const auto* tree = std::get_if<DecisionTree>(&model)) return normalized(tree->impurity_decrease());
  if (const auto* forest = std::get_if<RandomForest>(&model)) {
    const std::size_t f = forest->trees().front().feature_count();
    std::vector<double> sum(f, 0.0);
    std::size_t used = 0;
    for (const auto& t : forest->trees()) {
      if (t.nodes().size() <= 1) continue;
      const auto imp = normalized(t.impurity_decrease());
      for (std::size_t i = 0; i < f; ++i) sum[i] += imp[i];
      ++used;
    }
    if (used == 0) return sum;
    for (double& v : sum) v /= static_cast<double>(used);
    return normalized(std::move(sum));
  }
  throw Error(ErrorCode::NotTreeBased, "gini importance needs a decision tree or random forest");
}

json model_to_json(const TrainedModel& model) {
  return std::visit(
      overloaded{
          [](const DecisionTree& t) { return json{{"type", "dt"}, {"tree", tree_to_json(t)}}; },
          [](const RandomForest& f) {
            json trees = json::array();
            for (const auto& t : f.trees()) trees.push_back(tree_to_json(t));
            return json{{"type", "rf"},
                        {"max_features", f.max_features()},
                        {"tie_class", f.tie_class()},
                        {"tree_seeds", f.tree_seeds()},
                        {"trees", std::move(trees)}};
          },
          [](const KnnModel& k) {
            return json{{"type", "knn"}, {"k", k.k()}, {"labels", k.labels()}, {"train", matrix_to_json(k.train())}};
          },
          [](const SvmModel& s) {
            return json{{"type", "svm"},
                        {"kernel", s.kernel == KernelType::Rbf ? "rbf" : "linear"},
                        {"gamma", s.gamma},
                        {"c", s.c},
                        {"bias", s.bias},
                        {"iterations", s.iterations},
                        {"converged", s.converged},
                        {"coefficients", std::vector<double>(s.coefficients.data(),
                                                             s.coefficients.data() + s.coefficients.size())},
                        {"support_vectors", matrix_to_json(s.support_vectors)}};
          }},
      model);
}

TrainedModel model_from_json(const json& doc) {
  try {
    const auto type = doc.at("type").get<std::string>();
    if (type == "dt") return tree_from_json(doc.at("tree"));
    if (type == "rf") {
      std::vector<DecisionTree> trees;
      for (const auto& t : doc.at("trees")) trees.push_back(tree_from_json(t));
      return RandomForest(std::move(trees), doc.at("tree_seeds").get<std::vector<std::uint64_t>>(),
                          doc.at("max_features").get<std::size_t>(), doc.at("tie_class").get<int>());
    }
    if (type == "knn") {
      return KnnModel(matrix_from_json(doc.at("train")), doc.at("labels").get<std::vector<int>>(),
                      doc.at("k").get<std::size_t>());
    }
    if (type == "svm") {
      SvmModel s;
      s.kernel = doc.at("kernel").get<std::string>() == "linear" ? KernelType::Linear : KernelType::Rbf;
      s.gamma = doc.at("gamma").get<double>();
      s.c = doc.at("c").get<double>();
      s.bias = doc.at("bias").get<double>();
      s.iterations = doc.value("iterations", std::size_t{0});
      s.converged = doc.value("converged", true);
      const auto coef = doc.at("coefficients").get<std::vector<double>>();
      s.coefficients = Eigen::Map<const Eigen::VectorXd>(coef.data(), static_cast<Eigen::Index>(coef.size()));
      s.support_vectors = matrix_from_json(doc.at("support_vectors"));
      return s;
    }
    throw Error(ErrorCode::ConfigInvalid, "unknown model type '" + type + "'");
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("model json: ") + e.what());
  }
}

json model_config_to_json(const ModelConfig& c) {
  json svm = {{"kernel", c.svm.kernel == KernelType::Rbf ? "rbf" : "linear"},
              {"c", c.svm.c},
              {"tol", c.svm.tol},
              {"max_iterations", c.svm.max_iterations}};
  svm["gamma"] = c.svm.gamma ? json(*c.svm.gamma) : json(nullptr);
  return {{"dt", {{"max_depth", c.dt.max_depth}, {"min_samples_split", c.dt.min_samples_split}}},
          {"rf",
           {{"trees", c.rf.trees},
            {"max_features", c.rf.max_features},
            {"bootstrap", c.rf.bootstrap},
            {"seed", c.rf.seed},
            {"tie_class", c.rf.tie_class},
            {"max_depth", c.rf.max_depth}}},
          {"knn", {{"k", c.knn.k}}},
          {"svm", std::move(svm)}};
}

ModelConfig model_config_from_json(const json& doc) {
  ModelConfig c;
  try {
    reject_unknown(doc, {"dt", "rf", "knn", "svm"}, "hyperparameters");
    if (doc.contains("dt")) {
      const auto& d = doc["dt"];
      reject_unknown(d, {"max_depth", "min_samples_split"}, "dt");
      c.dt.max_depth = d.value("max_depth", c.dt.max_depth);
      c.dt.min_samples_split = d.value("min_samples_split", c.dt.min_samples_split);
    }
    if (doc.contains("rf")) {
      const auto& r = doc["rf"];
      reject_unknown(r, {"trees", "max_features", "bootstrap", "seed", "tie_class", "max_depth"}, "rf");
      c.rf.trees = r.value("trees", c.rf.trees);
      c.rf.max_features = r.value("max_features", c.rf.max_features);
      c.rf.bootstrap = r.value("bootstrap", c.rf.bootstrap);
      c.rf.seed = r.value("seed", c.rf.seed);
      c.rf.tie_class = r.value("tie_class", c.rf.tie_class);
      c.rf.max_depth = r.value("max_depth", c.rf.max_depth);
    }
    if (doc.contains("knn")) {
      reject_unknown(doc["knn"], {"k"}, "knn");
      c.knn.k = doc["knn"].value("k", c.knn.k);
    }
    if (doc.contains("svm")) {
      const auto& s = doc["svm"];
      reject_unknown(s, {"kernel", "c", "gamma", "tol", "max_iterations"}, "svm");
      if (s.contains("kernel")) {
        const auto k = s["kernel"].get<std::string>();
        if (k != "rbf" && k != "linear") throw Error(ErrorCode::ConfigInvalid, "svm kernel must be rbf or linear");
        c.svm.kernel = k == "rbf" ? KernelType::Rbf : KernelType::Linear;
      }
      c.svm.c = s.value("c", c.svm.c);
      c.svm.tol = s.value("tol", c.svm.tol);
      c.svm.max_iterations = s.value("max_iterations", c.svm.max_iterations);
      if (s.contains("gamma") && !s["gamma"].is_null()) c.svm.gamma = s["gamma"].get<double>();
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ConfigInvalid, std::string("hyperparameters: ") + e.what());
  }
  return c;
}

}  // namespace rotorvib
