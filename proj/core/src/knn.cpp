#include <algorithm>
#include <numeric>

#include "parallel.hpp"
#include "rotorvib/error.hpp"
#include "rotorvib/models.hpp"

namespace rotorvib {

KnnModel::KnnModel(Eigen::MatrixXd train, std::vector<int> labels, std::size_t k)
    : train_(std::move(train)), labels_(std::move(labels)), k_(k) {
  if (train_.rows() == 0) throw Error(ErrorCode::EmptyTrainSet, "knn needs training rows");
  if (static_cast<std::size_t>(train_.rows()) != labels_.size()) {
    throw Error(ErrorCode::LengthMismatch, "feature rows and labels differ in length");
  }
  if (k_ < 1 || k_ > labels_.size()) throw Error(ErrorCode::InvalidArgument, "knn k must lie in [1, training rows]");
}

int KnnModel::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  if (row.size() != train_.cols()) throw Error(ErrorCode::SchemaMismatch, "row width does not match the knn model");
  // Column-wise accumulation adds the squared differences in feature order.
  Eigen::VectorXd dist = Eigen::VectorXd::Zero(train_.rows());
  for (Eigen::Index c = 0; c < train_.cols(); ++c) {
    dist.array() += (train_.col(c).array() - row(c)).square();
  }
  std::vector<std::size_t> order(labels_.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto nearer = [&dist](std::size_t a, std::size_t b) {
    const double da = dist(static_cast<Eigen::Index>(a));
    const double db = dist(static_cast<Eigen::Index>(b));
    return da < db || (da == db && a < b);
  };
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k_), order.end(), nearer);
  std::size_t ones = 0;
  for (std::size_t i = 0; i < k_; ++i) ones += labels_[order[i]] == 1;
  if (2 * ones > k_) return 1;
  if (2 * ones < k_) return 0;
  return labels_[order.front()];
}

std::vector<int> KnnModel::predict(const Eigen::MatrixXd& x) const {
  std::vector<int> out(static_cast<std::size_t>(x.rows()));
  detail::parallel_for(out.size(), [&](std::size_t r) { out[r] = predict_row(x.row(static_cast<Eigen::Index>(r))); });
  return out;
}

KnnModel train_knn(const Eigen::MatrixXd& x, std::span<const int> labels, const KnnConfig& config) {
  return KnnModel(x, std::vector<int>(labels.begin(), labels.end()), config.k);
}

}  // namespace rotorvib
