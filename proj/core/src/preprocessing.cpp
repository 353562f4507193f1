#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <unordered_map>

#include "rotorvib/error.hpp"
#include "rotorvib/pipeline.hpp"

namespace rotorvib {

TrainingRows::TrainingRows(const Dataset& dataset, const SplitIndices& split) {
  std::vector<char> role(dataset.rows(), 0);
  for (std::size_t r : split.train) {
    if (r >= dataset.rows() || role[r] != 0) {
      throw Error(ErrorCode::LeakageViolation, "training index out of range or repeated");
    }
    role[r] = 1;
  }
  for (std::size_t r : split.test) {
    if (r >= dataset.rows() || role[r] != 0) {
      throw Error(ErrorCode::LeakageViolation, "test index out of range or shared with the training set");
    }
    role[r] = 2;
  }
  if (split.train.empty()) throw Error(ErrorCode::EmptyMatrix, "training set is empty");

  indices_ = split.train;
  matrix_.resize(static_cast<Eigen::Index>(indices_.size()), dataset.features.cols());
  for (std::size_t i = 0; i < indices_.size(); ++i) {
    matrix_.row(static_cast<Eigen::Index>(i)) = dataset.features.row(static_cast<Eigen::Index>(indices_[i]));
    labels_.push_back(dataset.labels[indices_[i]]);
  }
}

ScalerParams::ScalerParams(std::vector<double> mean, std::vector<double> std_dev, std::vector<bool> constant)
    : mean_(std::move(mean)), std_(std::move(std_dev)), constant_(std::move(constant)) {
  if (mean_.size() != std_.size() || mean_.size() != constant_.size()) {
    throw Error(ErrorCode::LengthMismatch, "scaler parameter lengths disagree");
  }
}

ScalerParams fit_scaler(const TrainingRows& train) {
  const auto& x = train.matrix();
  if (x.rows() == 0 || x.cols() == 0) throw Error(ErrorCode::EmptyMatrix, "cannot fit a scaler on an empty matrix");
  const auto n = static_cast<double>(x.rows());
  std::vector<double> mean(static_cast<std::size_t>(x.cols()));
  std::vector<double> std_dev(mean.size());
  std::vector<bool> constant(mean.size());
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    const auto col = x.col(c);
    const double mu = col.sum() / n;
    const bool flat = (col.array() == col(0)).all();
    const double sd = flat ? 0.0 : std::sqrt((col.array() - mu).square().sum() / n);
    const auto i = static_cast<std::size_t>(c);
    mean[i] = flat ? col(0) : mu;
    std_dev[i] = sd;
    constant[i] = flat || sd == 0.0;
  }
  return ScalerParams(std::move(mean), std::move(std_dev), std::move(constant));
}

Eigen::MatrixXd ScalerParams::apply(const Eigen::MatrixXd& matrix) const {
  if (static_cast<std::size_t>(matrix.cols()) != mean_.size()) {
    throw Error(ErrorCode::SchemaMismatch, "scaler fitted on a different column count");
  }
  Eigen::MatrixXd out(matrix.rows(), matrix.cols());
  for (Eigen::Index c = 0; c < matrix.cols(); ++c) {
    const auto i = static_cast<std::size_t>(c);
    const double scale = constant_[i] ? 1.0 : std_[i];
    out.col(c) = (matrix.col(c).array() - mean_[i]) / scale;
  }
  return out;
}

TrainingRows ScalerParams::apply(const TrainingRows& rows) const {
  return TrainingRows(apply(rows.matrix()), rows.labels(), rows.indices());
}

nlohmann::json ScalerParams::to_json() const {
  nlohmann::json constant = nlohmann::json::array();
  for (bool b : constant_) constant.push_back(b);
  return {{"mean", mean_}, {"std", std_}, {"constant", constant}};
}

ScalerParams ScalerParams::from_json(const nlohmann::json& doc) {
  std::vector<bool> constant;
  for (const auto& b : doc.at("constant")) constant.push_back(b.get<bool>());
  return ScalerParams(doc.at("mean").get<std::vector<double>>(), doc.at("std").get<std::vector<double>>(),
                      std::move(constant));
}

namespace {

// Flip so the largest-magnitude loading is positive (first index on ties).
void canonicalize_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index best = 0;
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v(i)) > std::abs(v(best))) best = i;
  }
  if (v(best) < 0) v = -v;
}

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& x, std::span<const std::size_t> cols) {
  Eigen::MatrixXd out(x.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t i = 0; i < cols.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = x.col(static_cast<Eigen::Index>(cols[i]));
  return out;
}

}  // namespace

PcaModel fit_pca(const TrainingRows& train, std::size_t k, std::span<const std::size_t> masked_columns) {
  if (masked_columns.empty()) throw Error(ErrorCode::EmptyMask, "pca mask selects no columns");
  const std::size_t n = train.rows();
  const std::size_t d = masked_columns.size();
  if (k < 1 || n < 2 || k > std::min(n - 1, d)) {
    throw Error(ErrorCode::KTooLarge, "pca k=" + std::to_string(k) + " outside [1, min(rows-1, cols)] = [1, " +
                                          std::to_string(n < 2 ? 0 : std::min(n - 1, d)) + "]");
  }
  std::vector<char> in_mask(train.cols(), 0);
  for (std::size_t c : masked_columns) {
    if (c >= train.cols() || in_mask[c]) throw Error(ErrorCode::InvalidArgument, "pca mask column invalid or repeated");
    in_mask[c] = 1;
  }

  PcaModel model;
  model.input_cols_ = train.cols();
  model.masked_.assign(masked_columns.begin(), masked_columns.end());
  for (std::size_t c = 0; c < train.cols(); ++c) {
    if (!in_mask[c]) model.passthrough_.push_back(c);
  }

  Eigen::MatrixXd centered = gather_columns(train.matrix(), masked_columns);
  model.means_ = centered.colwise().mean().transpose();
  centered.rowwise() -= model.means_.transpose();
  const double denom = static_cast<double>(n - 1);
  model.total_variance_ = centered.squaredNorm() / denom;

  model.components_.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k));
  model.explained_variance_.resize(static_cast<Eigen::Index>(k));

  if (d <= n - 1) {
    const Eigen::MatrixXd cov = (centered.transpose() * centered) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::RankDeficient, "covariance eigensolver failed");
    for (std::size_t i = 0; i < k; ++i) {
      const auto src = static_cast<Eigen::Index>(d - 1 - i);
      model.explained_variance_(static_cast<Eigen::Index>(i)) = std::max(solver.eigenvalues()(src), 0.0);
      model.components_.col(static_cast<Eigen::Index>(i)) = solver.eigenvectors().col(src);
    }
  } else {
    // Wide data: the nonzero spectrum of X^T X equals that of X X^T, whose
    // eigenvectors u map to covariance eigenvectors X^T u / ||X^T u||.
    const Eigen::MatrixXd gram = (centered * centered.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
    if (solver.info() != Eigen::Success) throw Error(ErrorCode::RankDeficient, "gram eigensolver failed");
    const double top = solver.eigenvalues()(static_cast<Eigen::Index>(n - 1));
    for (std::size_t i = 0; i < k; ++i) {
      const auto src = static_cast<Eigen::Index>(n - 1 - i);
      const double lambda = solver.eigenvalues()(src);
      if (!(lambda > 1e-12 * std::max(top, 1e-300))) {
        throw Error(ErrorCode::RankDeficient,
                    "training data has rank below k=" + std::to_string(k) + " on the pca mask");
      }
      Eigen::VectorXd v = centered.transpose() * solver.eigenvectors().col(src);
      v.normalize();
      model.explained_variance_(static_cast<Eigen::Index>(i)) = lambda;
      model.components_.col(static_cast<Eigen::Index>(i)) = v;
    }
  }
  for (Eigen::Index i = 0; i < model.components_.cols(); ++i) canonicalize_sign(model.components_.col(i));
  return model;
}

Eigen::VectorXd PcaModel::explained_variance_ratio() const {
  if (!(total_variance_ > 0.0)) return Eigen::VectorXd::Zero(explained_variance_.size());
  return explained_variance_ / total_variance_;
}

Eigen::MatrixXd PcaModel::transform(const Eigen::MatrixXd& matrix) const {
  if (static_cast<std::size_t>(matrix.cols()) != input_cols_) {
    throw Error(ErrorCode::SchemaMismatch, "pca fitted on a different column count");
  }
  Eigen::MatrixXd masked = gather_columns(matrix, masked_);
  masked.rowwise() -= means_.transpose();
  Eigen::MatrixXd out(matrix.rows(), static_cast<Eigen::Index>(output_cols()));
  for (std::size_t i = 0; i < passthrough_.size(); ++i) {
    out.col(static_cast<Eigen::Index>(i)) = matrix.col(static_cast<Eigen::Index>(passthrough_[i]));
  }
  out.rightCols(static_cast<Eigen::Index>(k())) = masked * components_;
  return out;
}

TrainingRows PcaModel::transform(const TrainingRows& rows) const {
  return TrainingRows(transform(rows.matrix()), rows.labels(), rows.indices());
}

Eigen::MatrixXd PcaModel::reconstruct(const Eigen::MatrixXd& projected) const {
  if (static_cast<std::size_t>(projected.cols()) != k()) throw Error(ErrorCode::LengthMismatch, "expected k columns");
  Eigen::MatrixXd out = projected * components_.transpose();
  out.rowwise() += means_.transpose();
  return out;
}

PcaModel PcaModel::truncated(std::size_t new_k) const {
  if (new_k < 1 || new_k > k()) throw Error(ErrorCode::KTooLarge, "cannot truncate pca to k=" + std::to_string(new_k));
  PcaModel out = *this;
  out.components_ = components_.leftCols(static_cast<Eigen::Index>(new_k));
  out.explained_variance_ = explained_variance_.head(static_cast<Eigen::Index>(new_k));
  return out;
}

FeatureSchema PcaModel::output_schema(const FeatureSchema& input) const {
  std::vector<FeatureDescriptor> out;
  for (std::size_t c : passthrough_) out.push_back(input[c]);
  for (std::size_t i = 0; i < k(); ++i) {
    FeatureDescriptor d;
    d.index_within_family = i;
    d.name = "pc_" + std::to_string(i + 1);
    out.push_back(d);
  }
  return FeatureSchema(std::move(out));
}

nlohmann::json PcaModel::to_json(const FeatureSchema& schema) const {
  if (schema.size() != input_cols_) throw Error(ErrorCode::SchemaMismatch, "pca schema has the wrong width");
  nlohmann::json mask = nlohmann::json::array();
  for (std::size_t c : masked_) mask.push_back(schema[c].name);
  nlohmann::json comps = nlohmann::json::array();
  for (Eigen::Index i = 0; i < components_.cols(); ++i) {
    comps.push_back(std::vector<double>(components_.col(i).data(), components_.col(i).data() + components_.rows()));
  }
  return {{"mask", mask},
          {"means", std::vector<double>(means_.data(), means_.data() + means_.size())},
          {"components", comps},
          {"explained_variance",
           std::vector<double>(explained_variance_.data(), explained_variance_.data() + explained_variance_.size())},
          {"total_variance", total_variance_}};
}

PcaModel PcaModel::from_json(const nlohmann::json& doc, const FeatureSchema& schema) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < schema.size(); ++i) index.emplace(schema[i].name, i);
  PcaModel m;
  m.input_cols_ = schema.size();
  std::vector<char> in_mask(schema.size(), 0);
  for (const auto& name : doc.at("mask")) {
    const auto it = index.find(name.get<std::string>());
    if (it == index.end()) throw Error(ErrorCode::SchemaMismatch, "pca mask column missing from schema");
    m.masked_.push_back(it->second);
    in_mask[it->second] = 1;
  }
  for (std::size_t c = 0; c < schema.size(); ++c) {
    if (!in_mask[c]) m.passthrough_.push_back(c);
  }
  const auto means = doc.at("means").get<std::vector<double>>();
  m.means_ = Eigen::Map<const Eigen::VectorXd>(means.data(), static_cast<Eigen::Index>(means.size()));
  const auto& comps = doc.at("components");
  m.components_.resize(static_cast<Eigen::Index>(m.masked_.size()), static_cast<Eigen::Index>(comps.size()));
  for (std::size_t i = 0; i < comps.size(); ++i) {
    const auto v = comps[i].get<std::vector<double>>();
    if (v.size() != m.masked_.size()) throw Error(ErrorCode::SchemaMismatch, "pca component length mismatch");
    m.components_.col(static_cast<Eigen::Index>(i)) = Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  const auto ev = doc.at("explained_variance").get<std::vector<double>>();
  m.explained_variance_ = Eigen::Map<const Eigen::VectorXd>(ev.data(), static_cast<Eigen::Index>(ev.size()));
  m.total_variance_ = doc.at("total_variance").get<double>();
  return m;
}

}  // namespace rotorvib
