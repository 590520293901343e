#pragma once

#include "gradflow/weights.hpp"

#include <cstdint>
#include <optional>

namespace gradflow {

struct BalancedInitConfig {
  Dims dims;
  double radius = 0.2;      // ||A||_F is drawn uniformly from (0, radius]
  std::uint64_t seed = 0;
  std::optional<Mat> target; // use this end-to-end matrix instead of sampling
};

// Gaussian d_n x d_0 matrix truncated to rank min(dims), rescaled to a uniform norm in (0, radius].
Mat sample_end_to_end(const BalancedInitConfig& cfg);

// W_n = U S^{1/n}, middle layers S^{1/n}, W_1 = S^{1/n} V^T, zero padded.
WeightSetting balanced_factorization(const Mat& a, const Dims& dims);
WeightSetting random_balanced_init(const BalancedInitConfig& cfg);

// W_{j+1}^T W_{j+1} - W_j W_j^T for j = 1..n-1
std::vector<Mat> balance_defects(const WeightSetting& theta);
// max_j nuclear norm of the defects; 0 for n = 1
double unbalancedness(const WeightSetting& theta);

struct BalanceResult {
  WeightSetting theta;
  int sweeps = 0;
  double residual = 0.0;
  bool converged = false;
  std::vector<double> history;  // unbalancedness after each sweep, history[0] = input
};

BalanceResult balance_nearest(const WeightSetting& theta, int sweeps = 50, double tol = 1e-8);

}  // namespace gradflow
