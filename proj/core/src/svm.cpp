#include <algorithm>
#include <cmath>
#include <limits>

#include "rotorvib/error.hpp"
#include "rotorvib/models.hpp"

namespace rotorvib {
namespace {

constexpr double kTau = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

Eigen::MatrixXd kernel_matrix(KernelType kernel, double gamma, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  Eigen::MatrixXd k = a * b.transpose();
  if (kernel == KernelType::Linear) return k;
  const Eigen::VectorXd na = a.rowwise().squaredNorm();
  const Eigen::VectorXd nb = b.rowwise().squaredNorm();
  for (Eigen::Index j = 0; j < k.cols(); ++j) {
    for (Eigen::Index i = 0; i < k.rows(); ++i) {
      const double d2 = std::max(na(i) + nb(j) - 2.0 * k(i, j), 0.0);
      k(i, j) = std::exp(-gamma * d2);
    }
  }
  return k;
}

// Dual C-SVC solver over Q_ij = y_i y_j K_ij (working-set selection by
// second-order information).
struct SmoResult {
  std::vector<double> alpha;
  double rho = 0.0;
  std::size_t iterations = 0;
  bool converged = true;
};

SmoResult solve_smo(const Eigen::MatrixXd& kernel, const std::vector<double>& y, double c, double eps,
                    std::size_t max_iter) {
  const auto n = static_cast<Eigen::Index>(y.size());
  SmoResult res;
  res.alpha.assign(y.size(), 0.0);
  auto& alpha = res.alpha;
  std::vector<double> grad(y.size(), -1.0);
  auto q = [&](Eigen::Index i, Eigen::Index j) { return y[i] * y[j] * kernel(i, j); };
  auto in_up = [&](Eigen::Index t) { return (y[t] > 0 && alpha[t] < c) || (y[t] < 0 && alpha[t] > 0); };
  auto in_low = [&](Eigen::Index t) { return (y[t] > 0 && alpha[t] > 0) || (y[t] < 0 && alpha[t] < c); };

  while (true) {
    if (res.iterations >= max_iter) {
      res.converged = false;
      break;
    }
    double gmax = -kInf;
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (in_up(t) && -y[t] * grad[t] > gmax) {
        gmax = -y[t] * grad[t];
        i = t;
      }
    }
    double gmax2 = -kInf;
    Eigen::Index j = -1;
    double obj_min = kInf;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (!in_low(t)) continue;
      const double yg = y[t] * grad[t];
      gmax2 = std::max(gmax2, yg);
      if (i < 0) continue;
      const double b = gmax + yg;
      if (b > 0) {
        double a = kernel(i, i) + kernel(t, t) - 2.0 * kernel(i, t);
        if (a <= 0) a = kTau;
        const double obj = -(b * b) / a;
        if (obj < obj_min) {
          obj_min = obj;
          j = t;
        }
      }
    }
    if (i < 0 || j < 0 || gmax + gmax2 < eps) break;
    ++res.iterations;

    const double old_i = alpha[i];
    const double old_j = alpha[j];
    if (y[i] != y[j]) {
      double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (-grad[i] - grad[j]) / quad;
      const double diff = alpha[i] - alpha[j];
      alpha[i] += delta;
      alpha[j] += delta;
      if (diff > 0) {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = diff; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = -diff; }
      }
      if (diff > 0) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = c - diff; }
      } else {
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = c + diff; }
      }
    } else {
      double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
      if (quad <= 0) quad = kTau;
      const double delta = (grad[i] - grad[j]) / quad;
      const double sum = alpha[i] + alpha[j];
      alpha[i] -= delta;
      alpha[j] += delta;
      if (sum > c) {
        if (alpha[i] > c) { alpha[i] = c; alpha[j] = sum - c; }
      } else {
        if (alpha[j] < 0) { alpha[j] = 0; alpha[i] = sum; }
      }
      if (sum > c) {
        if (alpha[j] > c) { alpha[j] = c; alpha[i] = sum - c; }
      } else {
        if (alpha[i] < 0) { alpha[i] = 0; alpha[j] = sum; }
      }
    }
    const double di = alpha[i] - old_i;
    const double dj = alpha[j] - old_j;
    for (Eigen::Index t = 0; t < n; ++t) grad[t] += q(t, i) * di + q(t, j) * dj;
  }

  double ub = kInf;
  double lb = -kInf;
  double sum_free = 0.0;
  std::size_t free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = y[t] * grad[t];
    if (alpha[t] >= c) {
      if (y[t] < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else if (alpha[t] <= 0) {
      if (y[t] > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
    } else {
      ++free;
      sum_free += yg;
    }
  }
  res.rho = free > 0 ? sum_free / static_cast<double>(free) : (ub + lb) / 2.0;
  return res;
}

}  // namespace

double default_gamma(const Eigen::MatrixXd& x) {
  const auto f = static_cast<double>(x.cols());
  if (x.rows() == 0 || x.cols() == 0) throw Error(ErrorCode::EmptyTrainSet, "cannot derive gamma from empty data");
  const Eigen::RowVectorXd mu = x.colwise().mean();
  const double mean_var = (x.rowwise() - mu).array().square().sum() / static_cast<double>(x.rows()) / f;
  return mean_var > 0.0 ? 1.0 / (f * mean_var) : 1.0 / f;
}

SvmModel train_svm(const Eigen::MatrixXd& x, std::span<const int> labels, const SvmConfig& config) {
  if (x.rows() == 0) throw Error(ErrorCode::EmptyTrainSet, "training set is empty");
  if (static_cast<std::size_t>(x.rows()) != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, "feature rows and labels differ in length");
  }
  const bool has0 = std::find(labels.begin(), labels.end(), 0) != labels.end();
  const bool has1 = std::find(labels.begin(), labels.end(), 1) != labels.end();
  if (!has0 || !has1) throw Error(ErrorCode::SingleClass, "svm needs both classes");
  if (!(config.c > 0.0) || !(config.tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "svm needs C > 0 and tol > 0");

  SvmModel model;
  model.kernel = config.kernel;
  model.c = config.c;
  model.gamma = config.gamma.value_or(default_gamma(x));

  // The solver always sees the first row as the positive class, so flipping
  // every label yields the same dual solution and an exactly negated f.
  const double orient = labels[0] == 1 ? 1.0 : -1.0;
  std::vector<double> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) y[i] = (labels[i] == 1 ? 1.0 : -1.0) * orient;

  const Eigen::MatrixXd kernel = kernel_matrix(model.kernel, model.gamma, x, x);
  const std::size_t max_iter =
      config.max_iterations != 0 ? config.max_iterations : std::max<std::size_t>(10'000'000, 100 * labels.size());
  const SmoResult res = solve_smo(kernel, y, config.c, config.tol, max_iter);

  model.alphas = res.alpha;
  model.iterations = res.iterations;
  model.converged = res.converged;
  model.bias = -res.rho * orient;
  std::vector<Eigen::Index> sv;
  for (std::size_t i = 0; i < res.alpha.size(); ++i) {
    if (res.alpha[i] > 0.0) sv.push_back(static_cast<Eigen::Index>(i));
  }
  model.support_vectors.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
  model.coefficients.resize(static_cast<Eigen::Index>(sv.size()));
  for (std::size_t s = 0; s < sv.size(); ++s) {
    const auto i = sv[s];
    model.support_vectors.row(static_cast<Eigen::Index>(s)) = x.row(i);
    model.coefficients(static_cast<Eigen::Index>(s)) = res.alpha[static_cast<std::size_t>(i)] * y[static_cast<std::size_t>(i)] * orient;
  }
  return model;
}

Eigen::VectorXd SvmModel::decision_values(const Eigen::MatrixXd& x) const {
  if (support_vectors.rows() > 0 && x.cols() != support_vectors.cols()) {
    throw Error(ErrorCode::SchemaMismatch, "row width does not match the svm model");
  }
  if (support_vectors.rows() == 0) return Eigen::VectorXd::Constant(x.rows(), bias);
  const Eigen::MatrixXd k = kernel_matrix(kernel, gamma, x, support_vectors);
  return (k * coefficients).array() + bias;
}

double SvmModel::decision_value(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  return decision_values(Eigen::MatrixXd(row))(0);
}

int SvmModel::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
  return decision_value(row) > 0.0 ? 1 : 0;
}

std::vector<int> SvmModel::predict(const Eigen::MatrixXd& x) const {
  const Eigen::VectorXd f = decision_values(x);
  std::vector<int> out(static_cast<std::size_t>(f.size()));
  for (Eigen::Index i = 0; i < f.size(); ++i) out[static_cast<std::size_t>(i)] = f(i) > 0.0 ? 1 : 0;
  return out;
}

}  // namespace rotorvib
