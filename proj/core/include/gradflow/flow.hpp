#pragma once

#include "gradflow/ode.hpp"
#include "gradflow/weights.hpp"

#include <functional>
#include <memory>
#include <utility>

namespace gradflow {

using GradientFn = std::function<Vec(const Vec&)>;

enum class TrajectoryKind { flow, gd, polygon };

struct DivergenceError : std::runtime_error {
  long iterate;
  DivergenceError(const std::string& what, long k) : std::runtime_error(what), iterate(k) {}
};

struct Trajectory {
  TrajectoryKind kind = TrajectoryKind::flow;
  std::vector<double> times;
  std::vector<Vec> states;
  double step = 0.0;  // gd only
  double tol = 0.0;   // flow only
  long accepted = 0, rejected = 0;
  std::shared_ptr<const DenseSolution> dense;  // flow only

  double horizon() const { return times.empty() ? 0.0 : times.back(); }
  // Dense output for flows, Euler polygon for gd.
  Vec at(double t) const;
};

struct GdOptions {
  double blowup = 1e12;  // abort when ||theta_k|| exceeds this
};

// Streams theta_0..theta_k to visit(k, theta_k); visit returns false to stop early.
// Returns the number of steps taken.
long gd_iterate(const Vec& theta0, double eta, long k, const GradientFn& grad,
                const std::function<bool(long, const Vec&)>& visit, const GdOptions& opt = {});

Trajectory gd_run(const Vec& theta0, double eta, long k, const GradientFn& grad, const GdOptions& opt = {});
Vec euler_polygon_eval(const Trajectory& gd, double t);

// stop(t, theta) ends the run early after an accepted step; the trajectory then ends at that t.
Trajectory gf_integrate(const Vec& theta0, double horizon, double tol, const GradientFn& grad,
                        const std::function<bool(double, const Vec&)>& stop = {});

// End-to-end field for a single-output deep linear net (lambda is the d_0 row of lambda_yx)
Vec e2e_field_h(const Vec& w, const Vec& lambda, int n);

struct ReparamState {
  double t = 0.0;
  Vec u;
  double nu = 0.0;
  double xi = 0.0;
};

struct ReparamRun {
  std::vector<ReparamState> states;     // accepted steps
  std::shared_ptr<const DenseSolution> dense;  // state = (u, xi)
  ReparamState at(double t, const Vec& lambda) const;
};

ReparamRun reparam_integrate(const Vec& u0, const Vec& lambda, int n, double horizon, double tol);

double nu_closed_form(double t, double nu0);

// ||u(t)|| when nu(0) = 1 (logistic closed form)
double aligned_norm_closed_form(double t, double u0_norm, int n);

// ||w_{n:1}(0)|| min{1, (2/3 (1+nu0)/(1-nu0))^n}
double u_min_lower_bound(double w0_norm, double nu0, int n);

std::vector<std::pair<double, double>> trajectory_distance(const Trajectory& gd, const Trajectory& flow);

// ||theta(t')|| <= ((||grad f(0)|| + beta ||theta(t0)||) e^{beta (t'-t0)} - ||grad f(0)||) / beta
double norm_growth_bound(double grad_at_origin, double beta, double norm_t0, double t0, double t);

}  // namespace gradflow
