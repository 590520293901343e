#pragma once

#include "gradflow/flow.hpp"
#include "gradflow/linear.hpp"

#include <optional>
#include <string>
#include <utility>

namespace gradflow {

// Samples of a function on [times.front(), times.back()]. Between samples the envelope is the max of the
// two adjacent values, so integrals of the envelope are exact sums.
struct PiecewiseProfile {
  std::vector<double> times;
  std::vector<double> values;

  static PiecewiseProfile constant(double value, double horizon);
  void validate() const;
  double envelope(size_t segment) const { return std::max(values[segment], values[segment + 1]); }
  double integral(double t) const;  // int_{t0}^t envelope
};

using CurvatureProfile = PiecewiseProfile;

// e^{mu(t)} (gap + int_0^t e^{-mu(t')} delta(t') dt'), mu(t) = int_0^t m
double fundamental_bound(const CurvatureProfile& m, const PiecewiseProfile& delta, double init_gap, double t);

struct EtaBound {
  double eta = 0.0;
  bool feasible = false;
  double argmin_t = 0.0;
};

EtaBound gf_gd_eta_bound(const CurvatureProfile& m, double beta, double gamma, double init_gap, double eps,
                         double t_tilde);

struct CoarseEta {
  double eta = 0.0;
  bool feasible = false;
  double c = 0.0;
};

CoarseEta coarse_eta_bound(double m, double beta, double f0, double eps, double init_gap, double t_tilde);

struct Certificate {
  std::string statement;
  std::vector<std::pair<std::string, double>> inputs;
  std::vector<std::pair<std::string, double>> outputs;
  std::vector<std::string> hypotheses_checked;

  double output(const std::string& name) const;
  std::string to_json(int indent = 2) const;
};

// Flow-time certificate for balanced deep linear nets with unit ||lambda_yx||.
// Outputs: t_bar, m_integral_bound, beta, gamma, u_min_bound.
Certificate lnn_flow_certificate(double w_norm, double nu, int n, double eps_bar, double eps, double t);

// Outputs: eta_max, k (evaluated at eta, or eta_max when eta is not given).
Certificate gd_translation(double w_norm, double nu, int n, double eps_tilde, std::optional<double> eta = {});

// Outputs: eps_hat_max, eta_max, k_bound.
Certificate unbalanced_translation(double w_norm, double nu, int n, double eps_tilde,
                                   std::optional<double> eta = {});

// m(t_i) = -gf_min_eig_lower_bound(theta(t_i), eps) at the given sample times.
CurvatureProfile curvature_profile_from_flow(const Trajectory& flow, const Dims& dims, const DataMoments& m,
                                             double eps, const std::vector<double>& sample_times);

}  // namespace gradflow
