#include "gradflow/homogeneous.hpp"

#include "gradflow/linear.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>
#include <string>

namespace gradflow {

double Activation::max_abs_slope() const { return std::max(std::abs(alpha), std::abs(alpha_bar)); }

SampleLoss SampleLoss::square(const LabeledSet& s) {
  SampleLoss l;
  auto y = std::make_shared<const Mat>(s.targets);
  l.value = [y](const Vec& p, Eigen::Index i) { return 0.5 * (p - y->col(i)).squaredNorm(); };
  l.grad = [y](const Vec& p, Eigen::Index i) -> Vec { return p - y->col(i); };
  l.hess = [](const Vec& p, Eigen::Index) -> Mat { return Mat::Identity(p.size(), p.size()); };
  return l;
}

namespace {

Vec softmax(const Vec& p) {
  const Vec e = (p.array() - p.maxCoeff()).exp();
  return e / e.sum();
}

}  // namespace

SampleLoss SampleLoss::cross_entropy(const LabeledSet& s) {
  SampleLoss l;
  auto c = std::make_shared<const std::vector<int>>(s.classes);
  l.value = [c](const Vec& p, Eigen::Index i) {
    const double mx = p.maxCoeff();
    return -(p[(*c)[i]] - mx) + std::log((p.array() - mx).exp().sum());
  };
  l.grad = [c](const Vec& p, Eigen::Index i) -> Vec {
    Vec g = softmax(p);
    g[(*c)[i]] -= 1.0;
    return g;
  };
  l.hess = [](const Vec& p, Eigen::Index) -> Mat {
    const Vec q = softmax(p);
    return Mat(q.asDiagonal()) - q * q.transpose();
  };
  return l;
}

Vec ActivationPattern::slopes(int layer, Eigen::Index sample) const {
  const auto& m = masks[layer - 1];
  Vec d(m.rows());
  for (Eigen::Index u = 0; u < m.rows(); ++u) d[u] = act.slope(m(u, sample));
  return d;
}

bool ActivationPattern::operator==(const ActivationPattern& o) const {
  if (masks.size() != o.masks.size()) return false;
  for (size_t j = 0; j < masks.size(); ++j) {
    if (masks[j].rows() != o.masks[j].rows() || masks[j].cols() != o.masks[j].cols()) return false;
    if (!(masks[j] == o.masks[j]).all()) return false;
  }
  return act.alpha == o.act.alpha && act.alpha_bar == o.act.alpha_bar;
}

BoundaryError::BoundaryError(Eigen::Index i, int j, Eigen::Index u)
    : std::runtime_error("zero pre-activation at sample " + std::to_string(i) + ", layer " + std::to_string(j) +
                         ", unit " + std::to_string(u)),
      sample(i), layer(j), unit(u) {}

static Mat apply(const Mat& z, const Activation& act) {
  return z.unaryExpr([&](double v) { return act(v); });
}

Mat forward_batch(const WeightSetting& theta, const Mat& inputs, const Activation& act) {
  const Dims d = theta.dims();
  if (inputs.rows() != d.front())
    throw ShapeError("input dimension " + std::to_string(inputs.rows()) + " != d_0 = " + std::to_string(d.front()));
  Mat a = inputs;
  const int n = theta.depth();
  for (int j = 1; j < n; ++j) a = apply(theta[j - 1] * a, act);
  return theta[n - 1] * a;
}

Vec forward(const WeightSetting& theta, const Vec& x, const Activation& act) {
  return forward_batch(theta, x, act).col(0);
}

double empirical_loss(const WeightSetting& theta, const LabeledSet& s, const Activation& act, const SampleLoss& l) {
  const Mat p = forward_batch(theta, s.inputs, act);
  double total = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) total += l.value(p.col(i), i);
  return total / static_cast<double>(s.size());
}

WeightSetting empirical_gradient(const WeightSetting& theta, const LabeledSet& s, const Activation& act,
                                 const SampleLoss& l) {
  const int n = theta.depth();
  std::vector<Mat> pre(n), post(n);
  post[0] = s.inputs;  // post[j] = input of layer j+1
  for (int j = 1; j < n; ++j) {
    pre[j] = theta[j - 1] * post[j - 1];
    post[j] = apply(pre[j], act);
  }
  const Mat out = theta[n - 1] * post[n - 1];
  const double inv = 1.0 / static_cast<double>(s.size());
  Mat g(out.rows(), out.cols());
  for (Eigen::Index i = 0; i < s.size(); ++i) g.col(i) = l.grad(out.col(i), i) * inv;

  WeightSetting grad;
  grad.layers.resize(n);
  for (int j = n; j >= 1; --j) {
    grad[j - 1] = g * post[j - 1].transpose();
    if (j > 1) {
      Mat back = theta[j - 1].transpose() * g;
      const Mat& z = pre[j - 1];
      back.array() *= z.unaryExpr([&](double v) { return act.slope(v > 0); }).array();
      g = std::move(back);
    }
  }
  return grad;
}

ActivationPattern read_pattern(const WeightSetting& theta, const LabeledSet& s, const Activation& act,
                               std::optional<std::tuple<Eigen::Index, int, Eigen::Index>>* zero) {
  ActivationPattern p;
  p.act = act;
  const int n = theta.depth();
  Mat a = s.inputs;
  if (a.rows() != theta[0].cols()) throw ShapeError("input dimension does not match d_0");
  if (zero) zero->reset();
  for (int j = 1; j < n; ++j) {
    const Mat z = theta[j - 1] * a;
    p.masks.emplace_back(z.array() > 0.0);
    if (zero && !zero->has_value()) {
      for (Eigen::Index i = 0; i < z.cols() && !zero->has_value(); ++i)
        for (Eigen::Index u = 0; u < z.rows(); ++u)
          if (z(u, i) == 0.0) {
            *zero = std::make_tuple(i, j, u);
            break;
          }
    }
    a = apply(z, act);
  }
  return p;
}

namespace {

// Layer j of sample i with slopes folded in: D'_{i,j} W_j (D'_{i,n} = I)
Mat folded(const WeightSetting& theta, const ActivationPattern& p, int j, Eigen::Index i, const Mat& m) {
  if (j == theta.depth() || p.act.is_linear()) {
    if (j == theta.depth()) return m;
    return p.act.alpha * m;
  }
  return p.slopes(j, i).asDiagonal() * m;
}

Vec region_output(const WeightSetting& theta, const ActivationPattern& p, Eigen::Index i, const Vec& x) {
  Vec a = x;
  for (int j = 1; j <= theta.depth(); ++j) a = folded(theta, p, j, i, theta[j - 1] * a);
  return a;
}

}  // namespace

double linearized_loss(const WeightSetting& theta, const LabeledSet& s, const ActivationPattern& p,
                       const SampleLoss& l) {
  double total = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) total += l.value(region_output(theta, p, i, s.inputs.col(i)), i);
  return total / static_cast<double>(s.size());
}

ActivationPattern activation_pattern(const WeightSetting& theta, const LabeledSet& s, const Activation& act) {
  std::optional<std::tuple<Eigen::Index, int, Eigen::Index>> zero;
  ActivationPattern p = read_pattern(theta, s, act, &zero);
  if (zero && !act.is_linear()) {
    const auto [i, j, u] = *zero;
    throw BoundaryError(i, j, u);
  }
  // the network output must coincide with the multilinear formula
  const Mat direct = forward_batch(theta, s.inputs, act);
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const Vec lin = region_output(theta, p, i, s.inputs.col(i));
    const double scale = std::max(1.0, direct.col(i).norm());
    if ((lin - direct.col(i)).norm() > 1e-10 * scale)
      throw std::logic_error("multilinear formula disagrees with forward pass at sample " + std::to_string(i));
  }
  return p;
}

double region_hessian_qform(const WeightSetting& theta, const WeightSetting& delta, const LabeledSet& s,
                            const ActivationPattern& p, const SampleLoss& l) {
  require_same_shape(theta, delta);
  const int n = theta.depth();
  double curv = 0, cross = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    // same recursion as the deep linear form, applied to a column
    Vec prefix = s.inputs.col(i);
    Vec first = Vec::Zero(prefix.size());
    Vec second = Vec::Zero(prefix.size());
    for (int j = 1; j <= n; ++j) {
      Vec next_second = folded(theta, p, j, i, theta[j - 1] * second + delta[j - 1] * first);
      Vec next_first = folded(theta, p, j, i, theta[j - 1] * first + delta[j - 1] * prefix);
      prefix = folded(theta, p, j, i, theta[j - 1] * prefix);
      first = std::move(next_first);
      second = std::move(next_second);
    }
    curv += first.dot(l.hess(prefix, i) * first);
    cross += l.grad(prefix, i).dot(second);
  }
  const double inv = 1.0 / static_cast<double>(s.size());
  return inv * curv + 2.0 * inv * cross;
}

Mat region_hessian_dense(const WeightSetting& theta, const LabeledSet& s, const ActivationPattern& p,
                         const SampleLoss& l) {
  const Dims dims = theta.dims();
  return polarize(
      [&](const Vec& v) { return region_hessian_qform(theta, WeightSetting::unflatten(v, dims), s, p, l); },
      theta.size());
}

namespace {

double gradient_input_mass(const WeightSetting& theta, const LabeledSet& s, const ActivationPattern& p,
                           const SampleLoss& l) {
  double total = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const Vec x = s.inputs.col(i);
    total += l.grad(region_output(theta, p, i, x), i).norm() * x.norm();
  }
  return total / static_cast<double>(s.size());
}

}  // namespace

double region_min_eig_lower_bound(const WeightSetting& theta, const LabeledSet& s, const ActivationPattern& p,
                                  const SampleLoss& l) {
  const int n = theta.depth();
  std::vector<double> norms;
  for (const auto& w : theta.layers) norms.push_back(w.norm());
  return -std::pow(p.act.max_abs_slope(), n - 1) * (n - 1) * gradient_input_mass(theta, s, p, l) *
         max_product_of(norms, n - 2);
}

double gf_region_min_eig_lower_bound(const WeightSetting& theta, const LabeledSet& s, const ActivationPattern& p,
                                     const SampleLoss& l, double eps) {
  if (!(eps >= 0.0)) throw DomainError("eps must be nonnegative");
  const int n = theta.depth();
  double smallest = theta[0].norm();
  for (const auto& w : theta.layers) smallest = std::min(smallest, w.norm());
  const double factor = n >= 2 ? std::pow(smallest + eps, n - 2) : 1.0;
  return -std::pow(p.act.max_abs_slope(), n - 1) * (n - 1) * gradient_input_mass(theta, s, p, l) * factor;
}

WeightSetting RescalingFamily::at(double a) const {
  if (!(a > 0.0)) throw DomainError("rescaling factor must be positive");
  WeightSetting t = base;
  t[0] *= 1.0 / (a * a);
  t[1] *= 1.0 / (a * a);
  t[2] *= a;
  return t;
}

RescalingFamily construct_negative_curvature_nonlinear(const Dims& dims, const LabeledSet& s, const Activation& act,
                                                       const SampleLoss& l, std::uint64_t seed) {
  validate_dims(dims);
  const int n = static_cast<int>(dims.size()) - 1;
  if (n < 3) throw PreconditionError("rescaling construction needs depth n >= 3");
  if (s.inputs.rows() != dims.front()) throw ShapeError("data does not match d_0");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  const Vec zero = Vec::Zero(dims.back());
  for (int attempt = 0; attempt < 64; ++attempt) {
    WeightSetting theta = WeightSetting::zeros(dims);
    for (auto& w : theta.layers) w = w.unaryExpr([&](double) { return gauss(rng) / std::sqrt(double(w.cols())); });

    std::optional<std::tuple<Eigen::Index, int, Eigen::Index>> hit;
    read_pattern(theta, s, act, &hit);
    if (hit && !act.is_linear()) continue;

    const Mat h = forward_batch(theta, s.inputs, act);
    double pairing = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) pairing += l.grad(zero, i).dot(h.col(i));
    const double scale = h.norm();
    if (!(std::abs(pairing) > 1e-12 * std::max(1.0, scale))) continue;
    // flipping the last layer negates every output
    if (pairing > 0) theta[n - 1] *= -1.0;

    // keep predictions small against the targets so the linear term in a dominates early
    double target_rms = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) target_rms += l.grad(zero, i).squaredNorm();
    target_rms = std::sqrt(target_rms / double(s.size()));
    const double out_rms = scale / std::sqrt(double(s.size()));
    if (out_rms > 0 && target_rms > 0) theta[n - 1] *= 0.1 * target_rms / out_rms;

    RescalingFamily fam;
    fam.base = theta;
    fam.delta = WeightSetting::zeros(dims);
    fam.delta[0] = theta[0];
    fam.delta[1] = theta[1];
    return fam;
  }
  throw ConstructionError("no weight setting with nonzero pairing against the loss gradient at zero");
}

std::vector<double> layer_norm_differences(const WeightSetting& theta) {
  std::vector<double> out;
  for (int j = 1; j < theta.depth(); ++j) out.push_back(theta[j].squaredNorm() - theta[j - 1].squaredNorm());
  return out;
}

std::vector<double> layer_norm_gaps(const WeightSetting& theta) {
  auto out = layer_norm_differences(theta);
  for (auto& v : out) v = std::abs(v);
  return out;
}

}  // namespace gradflow
