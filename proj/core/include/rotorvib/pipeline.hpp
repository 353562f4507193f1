#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <nlohmann/json_fwd.hpp>
#include <span>
#include <string>
#include <vector>

#include "rotorvib/features.hpp"

namespace rotorvib {

/// Feature matrix with binary labels (0 = normal, 1 = defective) and the
/// experiment each row came from.
struct Dataset {
  Eigen::MatrixXd features;
  std::vector<int> labels;
  std::vector<std::string> experiment_ids;
  FeatureSchema schema;

  std::size_t rows() const noexcept { return static_cast<std::size_t>(features.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(features.cols()); }

  /// Throws unless row/label/id counts agree, columns match the schema,
  /// labels are binary and every value is finite.
  void validate() const;
  Dataset select_rows(std::span<const std::size_t> rows) const;
};

Dataset make_dataset(std::span<const FeatureVector> vectors, FeatureSchema schema);

/// CSV: header is the schema names followed by experiment_id,label.
void write_feature_csv(const std::filesystem::path& path, const Dataset& dataset);
/// The header must match `schema` exactly; otherwise SchemaMismatch.
Dataset read_feature_csv(const std::filesystem::path& path, const FeatureSchema& schema);

/// Columns of one family, across both sensors and all axes.
Dataset select_family(const Dataset& dataset, FeatureFamily family);

enum class SplitMode {
  Row,              // stratify individual windows
  GroupByExperiment // stratify whole experiments; no experiment straddles train/test
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Per class, shuffle with a seeded generator and keep round-half-up
/// (fraction * class_count) rows (or experiments) for training. Both index
/// lists come back sorted.
SplitIndices stratified_split(const Dataset& dataset, double train_fraction = 0.7, std::uint64_t seed = 42,
                              SplitMode mode = SplitMode::Row);

/// Rows of a dataset drawn from a split's training set. This is the only input
/// the scaler and PCA fitters accept, so they cannot see test rows. Building
/// one from an overlapping or out-of-range split throws LeakageViolation.
class TrainingRows {
 public:
  TrainingRows(const Dataset& dataset, const SplitIndices& split);

  const Eigen::MatrixXd& matrix() const noexcept { return matrix_; }
  const std::vector<int>& labels() const noexcept { return labels_; }
  const std::vector<std::size_t>& indices() const noexcept { return indices_; }
  std::size_t rows() const noexcept { return static_cast<std::size_t>(matrix_.rows()); }
  std::size_t cols() const noexcept { return static_cast<std::size_t>(matrix_.cols()); }

 private:
  friend class ScalerParams;
  friend class PcaModel;
  TrainingRows(Eigen::MatrixXd matrix, std::vector<int> labels, std::vector<std::size_t> indices)
      : matrix_(std::move(matrix)), labels_(std::move(labels)), indices_(std::move(indices)) {}

  Eigen::MatrixXd matrix_;
  std::vector<int> labels_;
  std::vector<std::size_t> indices_;
};

/// Per-column standardization fitted on training rows. Columns with zero
/// variance are only centered.
class ScalerParams {
 public:
  ScalerParams() = default;
  ScalerParams(std::vector<double> mean, std::vector<double> std_dev, std::vector<bool> constant);

  const std::vector<double>& mean() const noexcept { return mean_; }
  const std::vector<double>& std_dev() const noexcept { return std_; }
  const std::vector<bool>& constant() const noexcept { return constant_; }

  Eigen::MatrixXd apply(const Eigen::MatrixXd& matrix) const;
  TrainingRows apply(const TrainingRows& rows) const;

  nlohmann::json to_json() const;
  static ScalerParams from_json(const nlohmann::json& doc);

  friend bool operator==(const ScalerParams&, const ScalerParams&) = default;

 private:
  std::vector<double> mean_;
  std::vector<double> std_;
  std::vector<bool> constant_;
};

ScalerParams fit_scaler(const TrainingRows& train);

/// Principal components of a subset of columns. Transformed output is the
/// untouched columns (in original order) followed by the k projections.
class PcaModel {
 public:
  PcaModel() = default;

  std::size_t k() const noexcept { return static_cast<std::size_t>(components_.cols()); }
  std::size_t input_cols() const noexcept { return input_cols_; }
  std::size_t output_cols() const noexcept { return passthrough_.size() + k(); }
  const std::vector<std::size_t>& masked_columns() const noexcept { return masked_; }
  const std::vector<std::size_t>& passthrough_columns() const noexcept { return passthrough_; }
  const Eigen::VectorXd& column_means() const noexcept { return means_; }
  /// masked_cols x k, orthonormal columns, sorted by decreasing variance. Each
  /// column's largest-magnitude loading is positive.
  const Eigen::MatrixXd& components() const noexcept { return components_; }
  const Eigen::VectorXd& explained_variance() const noexcept { return explained_variance_; }
  double total_variance() const noexcept { return total_variance_; }
  Eigen::VectorXd explained_variance_ratio() const;

  Eigen::MatrixXd transform(const Eigen::MatrixXd& matrix) const;
  TrainingRows transform(const TrainingRows& rows) const;
  /// Maps k projected coordinates back to the masked block.
  Eigen::MatrixXd reconstruct(const Eigen::MatrixXd& projected) const;
  /// Same fit keeping only the leading `k` components.
  PcaModel truncated(std::size_t k) const;
  /// Schema of the transformed matrix: passthrough descriptors then pc_1..pc_k.
  FeatureSchema output_schema(const FeatureSchema& input) const;

  nlohmann::json to_json(const FeatureSchema& schema) const;
  static PcaModel from_json(const nlohmann::json& doc, const FeatureSchema& schema);

 private:
  friend PcaModel fit_pca(const TrainingRows&, std::size_t, std::span<const std::size_t>);

  std::size_t input_cols_ = 0;
  std::vector<std::size_t> masked_;
  std::vector<std::size_t> passthrough_;
  Eigen::VectorXd means_;
  Eigen::MatrixXd components_;
  Eigen::VectorXd explained_variance_;
  double total_variance_ = 0.0;
};

/// Eigendecomposition of the sample covariance of the masked training columns.
/// Requires 1 <= k <= min(rows - 1, masked columns).
PcaModel fit_pca(const TrainingRows& train, std::size_t k, std::span<const std::size_t> masked_columns);

/// Every column.
std::vector<std::size_t> all_columns(std::size_t count);

}  // namespace rotorvib
