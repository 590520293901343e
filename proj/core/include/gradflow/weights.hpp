#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace gradflow {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using Dims = std::vector<int>;

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct PreconditionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct SizeError : std::length_error {
  using std::length_error::length_error;
};

// Layers are stored bottom-up: layers[0] is W_1 (d_1 x d_0), layers.back() is W_n.
// A perturbation (dW_1..dW_n) uses the same container.
struct WeightSetting {
  std::vector<Mat> layers;

  WeightSetting() = default;
  explicit WeightSetting(std::vector<Mat> l) : layers(std::move(l)) {}

  static WeightSetting zeros(const Dims& dims);

  int depth() const { return static_cast<int>(layers.size()); }
  const Mat& operator[](int j) const { return layers[j]; }
  Mat& operator[](int j) { return layers[j]; }

  // d_0..d_n, throws ShapeError if adjacent layers do not chain.
  Dims dims() const;
  void validate() const { (void)dims(); }
  Eigen::Index size() const;

  Vec flatten() const;
  static WeightSetting unflatten(const Vec& flat, const Dims& dims);

  double squared_norm() const;
  double norm() const;

  WeightSetting& operator+=(const WeightSetting& o);
  WeightSetting& operator-=(const WeightSetting& o);
  WeightSetting& operator*=(double s);
};

WeightSetting operator+(WeightSetting a, const WeightSetting& b);
WeightSetting operator-(WeightSetting a, const WeightSetting& b);
WeightSetting operator*(double s, WeightSetting a);

// throws ShapeError unless a and b have identical layer shapes
void require_same_shape(const WeightSetting& a, const WeightSetting& b);

Eigen::Index parameter_count(const Dims& dims);
void validate_dims(const Dims& dims);

}  // namespace gradflow
