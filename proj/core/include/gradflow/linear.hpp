#pragma once

#include "gradflow/weights.hpp"

#include <functional>

namespace gradflow {

// Summary of a whitened regression problem: loss(W) = 0.5 ||W - lambda_yx||_F^2 + offset_c.
struct DataMoments {
  Mat lambda_yx;  // d_n x d_0
  double offset_c = 0.0;
  bool normalized = false;

  DataMoments() = default;
  explicit DataMoments(Mat lambda, double c = 0.0);

  // inputs: d_0 x N (already whitened), targets: d_n x N
  static DataMoments from_data(const Mat& inputs, const Mat& targets);
};

// Convex loss on the end-to-end matrix. Defaults to the square loss of the moments.
struct EndToEndLoss {
  std::function<Mat(const Mat&)> grad;                     // nabla phi(W)
  std::function<double(const Mat&, const Mat&)> hess_form;  // nabla^2 phi(W)[D, D]

  static EndToEndLoss square(const DataMoments& m);
};

Mat end_to_end(const WeightSetting& theta);

// W_hi ... W_lo with 1-based layer indices; identity of size d_{lo-1} when hi < lo.
Mat partial_product(const WeightSetting& theta, int hi, int lo);

double loss(const WeightSetting& theta, const DataMoments& m);
WeightSetting gradient(const WeightSetting& theta, const DataMoments& m);

double hessian_qform(const WeightSetting& theta, const WeightSetting& delta, const DataMoments& m);
double hessian_qform(const WeightSetting& theta, const WeightSetting& delta, const EndToEndLoss& phi);

// Polarisation of hessian_qform. Throws SizeError when the parameter count exceeds cap.
Mat hessian_dense(const WeightSetting& theta, const DataMoments& m, Eigen::Index cap = 2000);
Mat polarize(const std::function<double(const Vec&)>& qform, Eigen::Index dim);

double min_eigenvalue(const Mat& symmetric);
double spectral_norm(const Mat& a);
double nuclear_norm(const Mat& a);

// max over |J| = k of prod_{j in J} norms[j]; 1 for k <= 0
double max_product_of(std::vector<double> norms, int k);

double min_eig_lower_bound(const WeightSetting& theta, const DataMoments& m);
double gf_min_eig_lower_bound(const WeightSetting& theta, const DataMoments& m, double eps);

struct CurvatureWitness {
  WeightSetting theta;
  WeightSetting delta;
};

// A point and direction with qform = -c ||delta||^2. Needs n >= 3 and lambda_yx != 0.
CurvatureWitness construct_negative_curvature(double c, const Dims& dims, const DataMoments& m);

}  // namespace gradflow
