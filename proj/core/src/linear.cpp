#include "gradflow/linear.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace gradflow {

DataMoments::DataMoments(Mat lambda, double c) : lambda_yx(std::move(lambda)), offset_c(c) {
  normalized = std::abs(lambda_yx.norm() - 1.0) <= 1e-12;
}

DataMoments DataMoments::from_data(const Mat& inputs, const Mat& targets) {
  if (inputs.cols() != targets.cols() || inputs.cols() == 0)
    throw ShapeError("inputs and targets need the same positive sample count");
  const double n = static_cast<double>(inputs.cols());
  Mat lambda = targets * inputs.transpose() / n;
  const double c = -0.5 * lambda.squaredNorm() + targets.squaredNorm() / (2.0 * n);
  return DataMoments(std::move(lambda), c);
}

EndToEndLoss EndToEndLoss::square(const DataMoments& m) {
  EndToEndLoss l;
  Mat lambda = m.lambda_yx;
  l.grad = [lambda](const Mat& w) -> Mat { return w - lambda; };
  l.hess_form = [](const Mat&, const Mat& d) { return d.squaredNorm(); };
  return l;
}

Mat partial_product(const WeightSetting& theta, int hi, int lo) {
  if (hi < lo) {
    const Dims d = theta.dims();
    return Mat::Identity(d[lo - 1], d[lo - 1]);
  }
  Mat p = theta.layers[lo - 1];
  for (int j = lo + 1; j <= hi; ++j) p = theta.layers[j - 1] * p;
  return p;
}

Mat end_to_end(const WeightSetting& theta) {
  theta.validate();
  return partial_product(theta, theta.depth(), 1);
}

static void check_output(const WeightSetting& theta, const DataMoments& m) {
  const Dims d = theta.dims();
  if (m.lambda_yx.rows() != d.back() || m.lambda_yx.cols() != d.front())
    throw ShapeError("lambda_yx is " + std::to_string(m.lambda_yx.rows()) + "x" +
                     std::to_string(m.lambda_yx.cols()) + ", network maps " + std::to_string(d.front()) +
                     " -> " + std::to_string(d.back()));
}

double loss(const WeightSetting& theta, const DataMoments& m) {
  check_output(theta, m);
  return 0.5 * (end_to_end(theta) - m.lambda_yx).squaredNorm() + m.offset_c;
}

namespace {

// prefix[j] = W_{j:1} (prefix[0] = I_{d0}), suffix[j] = W_{n:j+1} (suffix[n] = I_{dn})
struct Products {
  std::vector<Mat> prefix, suffix;
  explicit Products(const WeightSetting& theta) {
    const int n = theta.depth();
    prefix.resize(n + 1);
    suffix.resize(n + 1);
    prefix[0] = Mat::Identity(theta.layers[0].cols(), theta.layers[0].cols());
    for (int j = 1; j <= n; ++j) prefix[j] = theta.layers[j - 1] * prefix[j - 1];
    suffix[n] = Mat::Identity(theta.layers.back().rows(), theta.layers.back().rows());
    for (int j = n - 1; j >= 0; --j) suffix[j] = suffix[j + 1] * theta.layers[j];
  }
};

}  // namespace

WeightSetting gradient(const WeightSetting& theta, const DataMoments& m) {
  check_output(theta, m);
  const Products p(theta);
  const int n = theta.depth();
  const Mat g = p.prefix[n] - m.lambda_yx;
  WeightSetting out;
  out.layers.reserve(n);
  for (int j = 1; j <= n; ++j) out.layers.push_back(p.suffix[j].transpose() * g * p.prefix[j - 1].transpose());
  return out;
}

double hessian_qform(const WeightSetting& theta, const WeightSetting& delta, const EndToEndLoss& phi) {
  theta.validate();
  require_same_shape(theta, delta);
  const Products p(theta);
  const int n = theta.depth();

  // first[j]  = sum_{i<j} W_{j-1:i+1} dW_i W_{i-1:1}
  // second[j] = sum_{i<i'<j} W_{j-1:i'+1} dW_i' W_{i'-1:i+1} dW_i W_{i-1:1}
  const Eigen::Index d0 = theta.layers[0].cols();
  Mat first = Mat::Zero(d0, d0);
  Mat second = Mat::Zero(d0, d0);
  for (int j = 1; j <= n; ++j) {
    const Mat& w = theta.layers[j - 1];
    const Mat& dw = delta.layers[j - 1];
    Mat next_second = w * second + dw * first;
    Mat next_first = w * first + dw * p.prefix[j - 1];
    first = std::move(next_first);
    second = std::move(next_second);
  }
  const Mat e2e = p.prefix[n];
  return phi.hess_form(e2e, first) + 2.0 * (phi.grad(e2e).array() * second.array()).sum();
}

double hessian_qform(const WeightSetting& theta, const WeightSetting& delta, const DataMoments& m) {
  check_output(theta, m);
  return hessian_qform(theta, delta, EndToEndLoss::square(m));
}

Mat polarize(const std::function<double(const Vec&)>& qform, Eigen::Index dim) {
  Mat h(dim, dim);
  Vec e = Vec::Zero(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    for (Eigen::Index j = i; j < dim; ++j) {
      e.setZero();
      e[i] += 1.0;
      e[j] += 1.0;
      const double plus = qform(e);
      e[j] -= 2.0;
      const double minus = qform(e);
      h(i, j) = h(j, i) = 0.25 * (plus - minus);
    }
  }
  return h;
}

Mat hessian_dense(const WeightSetting& theta, const DataMoments& m, Eigen::Index cap) {
  check_output(theta, m);
  const Dims dims = theta.dims();
  const Eigen::Index d = theta.size();
  if (d > cap)
    throw SizeError("dense Hessian of " + std::to_string(d) + " parameters exceeds cap " + std::to_string(cap));
  const EndToEndLoss phi = EndToEndLoss::square(m);
  return polarize([&](const Vec& v) { return hessian_qform(theta, WeightSetting::unflatten(v, dims), phi); }, d);
}

double min_eigenvalue(const Mat& symmetric) {
  Eigen::SelfAdjointEigenSolver<Mat> es(symmetric, Eigen::EigenvaluesOnly);
  return es.eigenvalues()(0);
}

double spectral_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues()(0);
}

double nuclear_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(a);
  return svd.singularValues().sum();
}

double max_product_of(std::vector<double> norms, int k) {
  if (k <= 0) return 1.0;
  // all factors are nonnegative, so the best subset is the k largest
  std::sort(norms.begin(), norms.end(), std::greater<>());
  double p = 1.0;
  for (int i = 0; i < k && i < static_cast<int>(norms.size()); ++i) p *= norms[i];
  return p;
}

double min_eig_lower_bound(const WeightSetting& theta, const DataMoments& m) {
  check_output(theta, m);
  const Dims d = theta.dims();
  const int n = theta.depth();
  std::vector<double> norms;
  for (const auto& w : theta.layers) norms.push_back(spectral_norm(w));
  const double g = (end_to_end(theta) - m.lambda_yx).norm();
  return -(n - 1) * std::sqrt(double(std::min(d.front(), d.back()))) * g * max_product_of(norms, n - 2);
}

double gf_min_eig_lower_bound(const WeightSetting& theta, const DataMoments& m, double eps) {
  check_output(theta, m);
  const int n = theta.depth();
  if (!(eps > 0.0) || eps > 1.0 / (2.0 * n))
    throw DomainError("eps must lie in (0, 1/(2n)], got " + std::to_string(eps));
  if (n == 1) return 0.0;  // convex case, the Hessian is the identity
  const Dims d = theta.dims();
  const Mat e2e = end_to_end(theta);
  const double g = (e2e - m.lambda_yx).norm();
  const double root = std::sqrt(double(std::min(d.front(), d.back())));
  const double expo = 1.0 - 2.0 / n;

  double wmax = 1.0;
  for (const auto& w : theta.layers) wmax = std::max(wmax, spectral_norm(w));
  const double c = 4.0 * n * (n - 1) / std::pow(4.0 * n, 2.0 / n) * root * g * std::pow(wmax, 2.0 * (n - 2));
  const double e2e_norm = spectral_norm(e2e);
  // 0^0 = 1 when n = 2
  const double lead = (n == 2) ? 1.0 : std::pow(e2e_norm, expo);
  const double tail = (n == 2) ? 1.0 : std::pow(eps, expo);
  return -(n - 1) * root * g * lead - c * tail;
}

CurvatureWitness construct_negative_curvature(double c, const Dims& dims, const DataMoments& m) {
  validate_dims(dims);
  const int n = static_cast<int>(dims.size()) - 1;
  if (n < 3) throw PreconditionError("negative curvature construction needs depth n >= 3");
  if (!(c > 0.0)) throw PreconditionError("c must be positive");
  if (m.lambda_yx.rows() != dims.back() || m.lambda_yx.cols() != dims.front())
    throw ShapeError("lambda_yx does not match dims");
  if (m.lambda_yx.norm() == 0.0) throw PreconditionError("zero mapping is a global minimizer (lambda_yx = 0)");

  // grad phi(0) = -lambda; route its top singular pair through coordinate 0 of every hidden layer
  Eigen::JacobiSVD<Mat> svd(-m.lambda_yx, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec u = svd.matrixU().col(0);
  const Vec v = svd.matrixV().col(0);
  const double pairing = svd.singularValues()(0);

  WeightSetting theta = WeightSetting::zeros(dims);
  WeightSetting delta = WeightSetting::zeros(dims);
  delta[0].row(0) = v.transpose();
  delta[1](0, 0) = 1.0;
  for (int j = 3; j <= n; ++j) theta[j - 1](0, 0) = 1.0;
  theta[n - 1].setZero();
  theta[n - 1].col(0) = u;

  const double ratio = -c * delta.squared_norm() / (2.0 * pairing);
  theta[2] *= ratio;
  return {theta, delta};
}

}  // namespace gradflow
