#pragma once

#include "gradflow/homogeneous.hpp"

#include <cstdint>
#include <string>

namespace gradflow {

struct RankError : std::runtime_error {
  Mat null_directions;  // columns span the null space of the covariance
  RankError(const std::string& what, Mat null) : std::runtime_error(what), null_directions(std::move(null)) {}
};

struct DegenerateDataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  std::size_t offset;
  ParseError(const std::string& what, std::size_t at)
      : std::runtime_error(what + " (byte offset " + std::to_string(at) + ")"), offset(at) {}
};

struct Whitening {
  Mat inputs;     // transform * original
  Mat transform;  // Lambda_xx^{-1/2}
};

// Uncentered covariance (1/N) X X^T mapped to the identity.
Whitening whiten(const Mat& inputs);

struct LabelScaling {
  Mat targets;
  double scale = 1.0;  // targets = scale * original
};

// Jointly scales labels so that ||(1/N) sum y_i x_i^T||_F = 1.
LabelScaling normalize_labels(const Mat& targets, const Mat& inputs);

// IDX image/label pair; pixels shifted and scaled to zero mean, unit std over the whole file, then `subset`
// items drawn without replacement (kept in file order). Targets are one-hot over `classes`.
LabeledSet load_idx(const std::string& images_path, const std::string& labels_path, std::size_t subset,
                    std::uint64_t seed, int classes = 10);

struct SyntheticSpec {
  Eigen::Index samples = 200;
  Eigen::Index input_dim = 4;
  Eigen::Index output_dim = 1;
  std::uint64_t seed = 0;
  bool whiten = true;   // also normalizes labels to unit Lambda_yx
  double noise = 0.0;
};

// Gaussian inputs, Gaussian linear teacher, optional label noise.
LabeledSet synthetic_data(const SyntheticSpec& spec);

// Uniform in +-sqrt(6 / (fan_in + fan_out)) per layer.
WeightSetting xavier_uniform(const Dims& dims, std::uint64_t seed);

}  // namespace gradflow
