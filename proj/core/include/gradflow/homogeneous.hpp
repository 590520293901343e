#pragma once

#include "gradflow/weights.hpp"

#include <functional>
#include <optional>
#include <string>

namespace gradflow {

// sigma(z) = alpha max{z,0} - alpha_bar max{-z,0}
struct Activation {
  double alpha = 1.0;
  double alpha_bar = 0.0;

  static Activation linear() { return {1.0, 1.0}; }
  static Activation relu() { return {1.0, 0.0}; }
  static Activation leaky(double slope) { return {1.0, slope}; }

  double operator()(double z) const { return z > 0 ? alpha * z : alpha_bar * z; }
  double slope(bool positive) const { return positive ? alpha : alpha_bar; }
  double max_abs_slope() const;
  bool is_linear() const { return alpha == alpha_bar; }
};

struct LabeledSet {
  Mat inputs;               // d_0 x N
  Mat targets;              // d_n x N, square loss
  std::vector<int> classes; // cross-entropy labels

  Eigen::Index size() const { return inputs.cols(); }
};

// Per-sample loss l(prediction, i) with gradient and Hessian in the prediction.
struct SampleLoss {
  std::function<double(const Vec&, Eigen::Index)> value;
  std::function<Vec(const Vec&, Eigen::Index)> grad;
  std::function<Mat(const Vec&, Eigen::Index)> hess;

  static SampleLoss square(const LabeledSet& s);         // 0.5 ||p - y_i||^2
  static SampleLoss cross_entropy(const LabeledSet& s);  // -log softmax(p)[c_i]
};

// Sign bits of hidden pre-activations. masks[j-1] is d_j x N for hidden layer j = 1..n-1.
struct ActivationPattern {
  Activation act;
  std::vector<Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>> masks;

  Vec slopes(int layer, Eigen::Index sample) const;  // diagonal of D'_{i,j}
  bool operator==(const ActivationPattern& o) const;
};

struct BoundaryError : std::runtime_error {
  Eigen::Index sample;
  int layer;
  Eigen::Index unit;
  BoundaryError(Eigen::Index i, int j, Eigen::Index u);
};

struct ConstructionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Vec forward(const WeightSetting& theta, const Vec& x, const Activation& act);
Mat forward_batch(const WeightSetting& theta, const Mat& inputs, const Activation& act);

double empirical_loss(const WeightSetting& theta, const LabeledSet& s, const Activation& act, const SampleLoss& l);
WeightSetting empirical_gradient(const WeightSetting& theta, const LabeledSet& s, const Activation& act,
                                 const SampleLoss& l);

// Reads the sign pattern, rejecting exact zeros, and verifies the multilinear formula against forward.
ActivationPattern activation_pattern(const WeightSetting& theta, const LabeledSet& s, const Activation& act);
// Same read-off without validation. Zeros are reported through the optional.
ActivationPattern read_pattern(const WeightSetting& theta, const LabeledSet& s, const Activation& act,
                               std::optional<std::tuple<Eigen::Index, int, Eigen::Index>>* zero = nullptr);

// Loss of the multilinear function attached to a region (fixed slopes).
double linearized_loss(const WeightSetting& theta, const LabeledSet& s, const ActivationPattern& p,
                       const SampleLoss& l);

// Exact Hessian quadratic form of the region function. The pattern must belong to theta's region.
double region_hessian_qform(const WeightSetting& theta, const WeightSetting& delta, const LabeledSet& s,
                            const ActivationPattern& p, const SampleLoss& l);
Mat region_hessian_dense(const WeightSetting& theta, const LabeledSet& s, const ActivationPattern& p,
                         const SampleLoss& l);

double region_min_eig_lower_bound(const WeightSetting& theta, const LabeledSet& s, const ActivationPattern& p,
                                  const SampleLoss& l);
double gf_region_min_eig_lower_bound(const WeightSetting& theta, const LabeledSet& s, const ActivationPattern& p,
                                     const SampleLoss& l, double eps);

// theta(a): W_1, W_2 scaled by a^-2, W_3 by a; delta = (W_1, W_2, 0, ...).
struct RescalingFamily {
  WeightSetting base;
  WeightSetting delta;
  WeightSetting at(double a) const;
};

RescalingFamily construct_negative_curvature_nonlinear(const Dims& dims, const LabeledSet& s, const Activation& act,
                                                       const SampleLoss& l, std::uint64_t seed = 7);

// |‖W_{j+1}‖_F^2 - ‖W_j‖_F^2| for j = 1..n-1
std::vector<double> layer_norm_gaps(const WeightSetting& theta);
// signed version, useful for drift checks
std::vector<double> layer_norm_differences(const WeightSetting& theta);

}  // namespace gradflow
