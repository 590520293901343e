#include "gradflow/weights.hpp"

#include <cmath>
#include <string>

namespace gradflow {

void validate_dims(const Dims& dims) {
  if (dims.size() < 2) throw ShapeError("need at least d_0 and d_1");
  for (int d : dims)
    if (d <= 0) throw ShapeError("dimensions must be positive");
}

Eigen::Index parameter_count(const Dims& dims) {
  validate_dims(dims);
  Eigen::Index total = 0;
  for (size_t j = 1; j < dims.size(); ++j) total += Eigen::Index(dims[j]) * dims[j - 1];
  return total;
}

WeightSetting WeightSetting::zeros(const Dims& dims) {
  validate_dims(dims);
  WeightSetting w;
  for (size_t j = 1; j < dims.size(); ++j) w.layers.push_back(Mat::Zero(dims[j], dims[j - 1]));
  return w;
}

Dims WeightSetting::dims() const {
  if (layers.empty()) throw ShapeError("weight setting has no layers");
  Dims d{static_cast<int>(layers[0].cols())};
  for (size_t j = 0; j < layers.size(); ++j) {
    if (layers[j].cols() != d.back())
      throw ShapeError("layer " + std::to_string(j + 1) + " has " + std::to_string(layers[j].cols()) +
                       " columns, expected " + std::to_string(d.back()));
    d.push_back(static_cast<int>(layers[j].rows()));
  }
  return d;
}

Eigen::Index WeightSetting::size() const {
  Eigen::Index s = 0;
  for (const auto& w : layers) s += w.size();
  return s;
}

Vec WeightSetting::flatten() const {
  Vec out(size());
  Eigen::Index off = 0;
  for (const auto& w : layers) {
    out.segment(off, w.size()) = w.reshaped();
    off += w.size();
  }
  return out;
}

WeightSetting WeightSetting::unflatten(const Vec& flat, const Dims& dims) {
  if (flat.size() != parameter_count(dims))
    throw ShapeError("flat vector has " + std::to_string(flat.size()) + " entries, dims need " +
                     std::to_string(parameter_count(dims)));
  WeightSetting w;
  Eigen::Index off = 0;
  for (size_t j = 1; j < dims.size(); ++j) {
    const Eigen::Index sz = Eigen::Index(dims[j]) * dims[j - 1];
    w.layers.push_back(flat.segment(off, sz).reshaped(dims[j], dims[j - 1]));
    off += sz;
  }
  return w;
}

double WeightSetting::squared_norm() const {
  double s = 0;
  for (const auto& w : layers) s += w.squaredNorm();
  return s;
}

double WeightSetting::norm() const { return std::sqrt(squared_norm()); }

void require_same_shape(const WeightSetting& a, const WeightSetting& b) {
  if (a.layers.size() != b.layers.size()) throw ShapeError("depth mismatch");
  for (size_t j = 0; j < a.layers.size(); ++j)
    if (a.layers[j].rows() != b.layers[j].rows() || a.layers[j].cols() != b.layers[j].cols())
      throw ShapeError("layer " + std::to_string(j + 1) + " shape mismatch");
}

WeightSetting& WeightSetting::operator+=(const WeightSetting& o) {
  require_same_shape(*this, o);
  for (size_t j = 0; j < layers.size(); ++j) layers[j] += o.layers[j];
  return *this;
}

WeightSetting& WeightSetting::operator-=(const WeightSetting& o) {
  require_same_shape(*this, o);
  for (size_t j = 0; j < layers.size(); ++j) layers[j] -= o.layers[j];
  return *this;
}

WeightSetting& WeightSetting::operator*=(double s) {
  for (auto& w : layers) w *= s;
  return *this;
}

WeightSetting operator+(WeightSetting a, const WeightSetting& b) { return a += b; }
WeightSetting operator-(WeightSetting a, const WeightSetting& b) { return a -= b; }
WeightSetting operator*(double s, WeightSetting a) { return a *= s; }

}  // namespace gradflow
