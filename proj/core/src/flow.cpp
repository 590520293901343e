#include "gradflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gradflow {

Vec Trajectory::at(double t) const {
  if (kind == TrajectoryKind::flow) {
    if (!dense) throw DomainError("flow trajectory has no dense output");
    return (*dense)(t);
  }
  return euler_polygon_eval(*this, t);
}

long gd_iterate(const Vec& theta0, double eta, long k, const GradientFn& grad,
                const std::function<bool(long, const Vec&)>& visit, const GdOptions& opt) {
  if (!(eta > 0.0)) throw DomainError("step size must be positive");
  if (k < 0) throw DomainError("iteration count must be nonnegative");
  Vec theta = theta0;
  if (!visit(0, theta)) return 0;
  for (long i = 0; i < k; ++i) {
    const Vec g = grad(theta);
    if (!g.allFinite()) throw DivergenceError("non-finite gradient at iterate " + std::to_string(i), i);
    theta -= eta * g;
    if (!theta.allFinite() || theta.norm() > opt.blowup)
      throw DivergenceError("iterate " + std::to_string(i + 1) + " left the finite range", i + 1);
    if (!visit(i + 1, theta)) return i + 1;
  }
  return k;
}

Trajectory gd_run(const Vec& theta0, double eta, long k, const GradientFn& grad, const GdOptions& opt) {
  Trajectory tr;
  tr.kind = TrajectoryKind::gd;
  tr.step = eta;
  tr.times.reserve(k + 1);
  tr.states.reserve(k + 1);
  gd_iterate(
      theta0, eta, k, grad,
      [&](long i, const Vec& th) {
        tr.times.push_back(static_cast<double>(i) * eta);
        tr.states.push_back(th);
        return true;
      },
      opt);
  return tr;
}

Vec euler_polygon_eval(const Trajectory& gd, double t) {
  if (gd.kind == TrajectoryKind::flow) throw DomainError("not a discrete trajectory");
  if (gd.states.empty()) throw DomainError("empty trajectory");
  const double end = gd.times.back();
  if (t < 0.0 || t > end * (1 + 1e-15)) throw DomainError("time " + std::to_string(t) + " outside polygon range");
  const double pos = t / gd.step;
  long k = static_cast<long>(std::floor(pos));
  const long last = static_cast<long>(gd.states.size()) - 1;
  if (k >= last) return gd.states[last];
  const double frac = pos - static_cast<double>(k);
  if (frac == 0.0) return gd.states[k];
  // theta_k - (t - t_k) grad f(theta_k), with grad f(theta_k) = (theta_k - theta_{k+1}) / eta
  return gd.states[k] + frac * (gd.states[k + 1] - gd.states[k]);
}

Trajectory gf_integrate(const Vec& theta0, double horizon, double tol, const GradientFn& grad,
                        const std::function<bool(double, const Vec&)>& stop) {
  if (!(tol >= 1e-13 && tol <= 1e-3)) throw DomainError("tolerance must lie in [1e-13, 1e-3]");
  if (!(horizon > 0.0)) throw DomainError("horizon must be positive");
  OdeOptions opt;
  opt.rtol = tol;
  opt.atol = tol;
  auto sol = std::make_shared<DenseSolution>(
      integrate([&](double, const Vec& y) -> Vec { return -grad(y); }, 0.0, theta0, horizon, opt, stop));
  Trajectory tr;
  tr.kind = TrajectoryKind::flow;
  tr.tol = tol;
  tr.times = sol->times();
  tr.states = sol->states();
  tr.accepted = sol->stats().accepted;
  tr.rejected = sol->stats().rejected;
  tr.dense = std::move(sol);
  return tr;
}

Vec e2e_field_h(const Vec& w, const Vec& lambda, int n) {
  if (n < 1) throw DomainError("depth must be at least 1");
  if (w.size() != lambda.size()) throw ShapeError("w and lambda differ in length");
  const Vec g = w - lambda;
  const double r = w.norm();
  if (r == 0.0) return n == 1 ? g : Vec::Zero(w.size());
  const double lead = std::pow(r, 2.0 - 2.0 / n);
  return lead * g + (n - 1) * std::pow(r, -2.0 / n) * w * w.dot(g);
}

ReparamState ReparamRun::at(double t, const Vec& lambda) const {
  const Vec s = (*dense)(t);
  const Eigen::Index d = s.size() - 1;
  ReparamState out;
  out.t = t;
  out.u = s.head(d);
  out.xi = s[d];
  out.nu = lambda.dot(out.u) / out.u.norm();
  return out;
}

ReparamRun reparam_integrate(const Vec& u0, const Vec& lambda, int n, double horizon, double tol) {
  if (u0.size() != lambda.size()) throw ShapeError("u0 and lambda differ in length");
  if (u0.norm() == 0.0) throw DomainError("u0 must be nonzero");
  if (std::abs(lambda.norm() - 1.0) > 1e-12) throw DomainError("lambda must have unit norm");
  if (n < 1) throw DomainError("depth must be at least 1");
  const Eigen::Index d = u0.size();
  auto field = [&](double t, const Vec& s) -> Vec {
    const Vec u = s.head(d);
    const double r = u.norm();
    if (!(r > 1e-300)) throw IntegrationError("trajectory collapsed to the origin", t);
    Vec out(d + 1);
    out.head(d) = -r * (n * u - lambda) + ((n - 1) / r) * u * u.dot(lambda);
    out[d] = std::pow(r, -(1.0 - 2.0 / n));
    return out;
  };
  Vec s0(d + 1);
  s0.head(d) = u0;
  s0[d] = 0.0;
  OdeOptions opt;
  opt.rtol = tol;
  opt.atol = tol;
  auto sol = std::make_shared<DenseSolution>(integrate(field, 0.0, s0, horizon, opt));
  ReparamRun run;
  for (size_t k = 0; k < sol->times().size(); ++k) {
    const Vec& s = sol->states()[k];
    ReparamState st;
    st.t = sol->times()[k];
    st.u = s.head(d);
    st.xi = s[d];
    st.nu = lambda.dot(st.u) / st.u.norm();
    run.states.push_back(std::move(st));
  }
  run.dense = std::move(sol);
  return run;
}

double nu_closed_form(double t, double nu0) {
  if (!(nu0 > -1.0 && nu0 <= 1.0)) throw DomainError("nu0 must lie in (-1, 1]");
  const double r = (1.0 - nu0) / (1.0 + nu0);
  return 1.0 - 2.0 * r / (r + std::exp(2.0 * t));
}

double aligned_norm_closed_form(double t, double u0_norm, int n) {
  const double e = std::exp(n * t);
  return e / (e + 1.0 / u0_norm - 1.0);
}

double u_min_lower_bound(double w0_norm, double nu0, int n) {
  if (!(nu0 > -1.0 && nu0 <= 1.0)) throw DomainError("nu0 must lie in (-1, 1]");
  if (nu0 == 1.0) return w0_norm;
  const double ratio = (2.0 / 3.0) * (1.0 + nu0) / (1.0 - nu0);
  return w0_norm * std::min(1.0, std::pow(ratio, n));
}

std::vector<std::pair<double, double>> trajectory_distance(const Trajectory& gd, const Trajectory& flow) {
  if (gd.kind == TrajectoryKind::flow) throw DomainError("first argument must be a discrete trajectory");
  if (gd.states.empty()) return {};
  const double end = gd.times.back();
  if (flow.horizon() < end * (1 - 1e-12))
    throw DomainError("flow horizon " + std::to_string(flow.horizon()) + " does not cover " + std::to_string(end));
  std::vector<std::pair<double, double>> out;
  out.reserve(gd.states.size());
  for (size_t k = 0; k < gd.states.size(); ++k) {
    const double t = std::min(gd.times[k], flow.horizon());
    out.emplace_back(gd.times[k], (gd.states[k] - flow.at(t)).norm());
  }
  return out;
}

double norm_growth_bound(double grad_at_origin, double beta, double norm_t0, double t0, double t) {
  if (!(beta > 0.0)) throw DomainError("beta must be positive");
  return ((grad_at_origin + beta * norm_t0) * std::exp(beta * (t - t0)) - grad_at_origin) / beta;
}

}  // namespace gradflow
