#include "gradflow/balance.hpp"

#include "gradflow/linear.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace gradflow {

Mat sample_end_to_end(const BalancedInitConfig& cfg) {
  validate_dims(cfg.dims);
  if (!(cfg.radius > 0.0)) throw DomainError("radius must be positive");
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const int rows = cfg.dims.back(), cols = cfg.dims.front();
  const int rank = *std::min_element(cfg.dims.begin(), cfg.dims.end());
  Mat a = Mat::NullaryExpr(rows, cols, [&]() { return gauss(rng); });
  if (rank < std::min(rows, cols)) {
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    Vec s = svd.singularValues();
    s.tail(s.size() - rank).setZero();
    a = svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
  }
  // (0, radius]: 1 - U maps [0,1) onto (0,1]
  const double norm = cfg.radius * (1.0 - unit(rng));
  return a * (norm / a.norm());
}

WeightSetting balanced_factorization(const Mat& a, const Dims& dims) {
  validate_dims(dims);
  const int n = static_cast<int>(dims.size()) - 1;
  if (a.rows() != dims.back() || a.cols() != dims.front()) throw ShapeError("end-to-end matrix does not match dims");
  WeightSetting theta = WeightSetting::zeros(dims);
  if (a.norm() == 0.0) return theta;

  Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec s = svd.singularValues();
  const int k = *std::min_element(dims.begin(), dims.end());
  for (Eigen::Index i = k; i < s.size(); ++i)
    if (s[i] > 1e-12 * s[0])
      throw PreconditionError("end-to-end matrix rank exceeds the narrowest layer (" + std::to_string(k) + ")");
  const int r = std::min<int>(k, static_cast<int>(s.size()));
  const Vec root = s.head(r).array().pow(1.0 / n);

  if (n == 1) {
    theta[0] = a;
    return theta;
  }
  theta[0].topRows(r) = root.asDiagonal() * svd.matrixV().leftCols(r).transpose();
  for (int j = 2; j < n; ++j) theta[j - 1].topLeftCorner(r, r) = root.asDiagonal();
  theta[n - 1].leftCols(r) = svd.matrixU().leftCols(r) * root.asDiagonal();
  return theta;
}

WeightSetting random_balanced_init(const BalancedInitConfig& cfg) {
  const Mat a = cfg.target ? *cfg.target : sample_end_to_end(cfg);
  return balanced_factorization(a, cfg.dims);
}

std::vector<Mat> balance_defects(const WeightSetting& theta) {
  theta.validate();
  std::vector<Mat> out;
  for (int j = 1; j < theta.depth(); ++j)
    out.push_back(theta[j].transpose() * theta[j] - theta[j - 1] * theta[j - 1].transpose());
  return out;
}

double unbalancedness(const WeightSetting& theta) {
  double worst = 0.0;
  for (const auto& d : balance_defects(theta)) worst = std::max(worst, nuclear_norm(d));
  return worst;
}

namespace {

// Replace (W_j, W_{j+1}) by the balanced factorisation of their product closest to the current pair.
void rebalance_pair(Mat& lower, Mat& upper) {
  const Eigen::Index hidden = lower.rows();
  const Mat prod = upper * lower;
  Eigen::JacobiSVD<Mat> svd(prod, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec s = svd.singularValues();
  const Eigen::Index r = std::min<Eigen::Index>(hidden, s.size());

  Mat b = Mat::Zero(hidden, lower.cols());  // S^{1/2} V^T
  Mat c = Mat::Zero(upper.rows(), hidden);  // U S^{1/2}
  const Vec half = s.head(r).cwiseSqrt();
  b.topRows(r) = half.asDiagonal() * svd.matrixV().leftCols(r).transpose();
  c.leftCols(r) = svd.matrixU().leftCols(r) * half.asDiagonal();

  // orthogonal Procrustes: Q maximising tr(Q (B W_j^T + C^T W_{j+1}))
  const Mat m = b * lower.transpose() + c.transpose() * upper;
  Eigen::JacobiSVD<Mat> align(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat q = align.matrixV() * align.matrixU().transpose();
  lower = q * b;
  upper = c * q.transpose();
}

}  // namespace

BalanceResult balance_nearest(const WeightSetting& theta, int sweeps, double tol) {
  theta.validate();
  BalanceResult res;
  res.theta = theta;
  res.residual = unbalancedness(theta);
  res.history.push_back(res.residual);
  if (theta.depth() < 2 || res.residual <= tol) {
    res.converged = true;
    return res;
  }
  for (int s = 0; s < sweeps; ++s) {
    for (int j = 1; j < theta.depth(); ++j) rebalance_pair(res.theta[j - 1], res.theta[j]);
    res.sweeps = s + 1;
    res.residual = unbalancedness(res.theta);
    res.history.push_back(res.residual);
    if (res.residual <= tol) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace gradflow
