#include "gradflow/bounds.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <string>

namespace gradflow {

PiecewiseProfile PiecewiseProfile::constant(double value, double horizon) {
  if (!(horizon > 0.0)) throw DomainError("profile horizon must be positive");
  return {{0.0, horizon}, {value, value}};
}

void PiecewiseProfile::validate() const {
  if (times.size() < 2 || times.size() != values.size()) throw DomainError("profile needs at least two samples");
  for (size_t i = 1; i < times.size(); ++i)
    if (!(times[i] > times[i - 1])) throw DomainError("profile times must be strictly increasing");
  for (double v : values)
    if (!std::isfinite(v)) throw DomainError("profile values must be finite");
}

double PiecewiseProfile::integral(double t) const {
  double acc = 0.0;
  for (size_t i = 0; i + 1 < times.size() && times[i] < t; ++i)
    acc += envelope(i) * (std::min(t, times[i + 1]) - times[i]);
  return acc;
}

namespace {

size_t segment_of(const PiecewiseProfile& p, double t) {
  // segment i covers [times[i], times[i+1])
  auto it = std::upper_bound(p.times.begin(), p.times.end(), t);
  size_t i = static_cast<size_t>(std::distance(p.times.begin(), it));
  return std::min(i == 0 ? 0 : i - 1, p.times.size() - 2);
}

void check_domain(const PiecewiseProfile& p, double t, const char* what) {
  p.validate();
  if (p.times.front() != 0.0) throw DomainError(std::string(what) + " profile must start at t = 0");
  const double slack = 1e-12 * std::max(1.0, p.times.back());
  if (t < 0.0 || t > p.times.back() + slack)
    throw DomainError(std::string(what) + " profile does not cover t = " + std::to_string(t));
}

// int_0^t e^{-mu(s)} delta(s) ds with piecewise-constant envelopes
double discounted_integral(const PiecewiseProfile& m, const PiecewiseProfile& delta, double t) {
  std::set<double> cuts{0.0, t};
  for (double s : m.times)
    if (s > 0.0 && s < t) cuts.insert(s);
  for (double s : delta.times)
    if (s > 0.0 && s < t) cuts.insert(s);
  double mu = 0.0, acc = 0.0;
  for (auto it = cuts.begin(); std::next(it) != cuts.end(); ++it) {
    const double a = *it, b = *std::next(it), h = b - a;
    const double mid = 0.5 * (a + b);
    const double mc = m.envelope(segment_of(m, mid));
    const double dc = delta.envelope(segment_of(delta, mid));
    const double factor = mc == 0.0 ? h : -std::expm1(-mc * h) / mc;
    acc += std::exp(-mu) * dc * factor;
    mu += mc * h;
  }
  return acc;
}

}  // namespace

double fundamental_bound(const CurvatureProfile& m, const PiecewiseProfile& delta, double init_gap, double t) {
  check_domain(m, t, "curvature");
  check_domain(delta, t, "discrepancy");
  if (init_gap < 0.0) throw DomainError("initial gap must be nonnegative");
  return std::exp(m.integral(t)) * (init_gap + discounted_integral(m, delta, t));
}

EtaBound gf_gd_eta_bound(const CurvatureProfile& m, double beta, double gamma, double init_gap, double eps,
                         double t_tilde) {
  check_domain(m, t_tilde, "curvature");
  if (!(beta > 0.0) || !(gamma > 0.0)) throw DomainError("beta and gamma must be positive");
  if (!(t_tilde > 0.0)) throw DomainError("horizon must be positive");

  std::set<double> grid;
  for (double s : m.times)
    if (s > 0.0 && s <= t_tilde) grid.insert(s);
  for (int i = 1; i <= 100; ++i) grid.insert(t_tilde * i / 100.0);

  const PiecewiseProfile one = PiecewiseProfile::constant(1.0, std::max(t_tilde, m.times.back()));
  EtaBound out;
  out.eta = std::numeric_limits<double>::infinity();
  out.feasible = init_gap < eps;
  for (double t : grid) {
    const double mu = m.integral(t);
    const double num = eps - std::exp(mu) * init_gap;
    if (!(num > 0.0)) {
      out.feasible = false;
      out.argmin_t = t;
      break;
    }
    const double den = beta * gamma * std::exp(mu) * discounted_integral(m, one, t);
    const double eta = num / den;
    if (eta < out.eta) {
      out.eta = eta;
      out.argmin_t = t;
    }
  }
  if (!out.feasible) out.eta = 0.0;
  return out;
}

CoarseEta coarse_eta_bound(double m, double beta, double f0, double eps, double init_gap, double t_tilde) {
  if (!(beta > 0.0)) throw DomainError("beta must be positive");
  if (f0 < 0.0) throw DomainError("objective value must be nonnegative");
  if (!(t_tilde > 0.0)) throw DomainError("horizon must be positive");
  CoarseEta out;
  out.c = 1.0 / (std::sqrt(2.0 * beta * beta * beta * f0) + beta * beta * eps);
  double eta;
  if (m < 0.0) {
    eta = out.c * (eps - init_gap) * std::abs(m);
  } else if (m == 0.0) {
    eta = out.c * (eps - init_gap) / t_tilde;
  } else {
    const double grow = std::exp(m * t_tilde);
    eta = out.c * (eps - init_gap * grow) * m / std::expm1(m * t_tilde);
  }
  out.feasible = eta > 0.0;
  out.eta = out.feasible ? eta : 0.0;
  return out;
}

double Certificate::output(const std::string& name) const {
  for (const auto& [k, v] : outputs)
    if (k == name) return v;
  throw std::out_of_range("certificate has no output '" + name + "'");
}

std::string Certificate::to_json(int indent) const {
  using nlohmann::ordered_json;
  auto number = [](double v) -> ordered_json { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); };
  ordered_json j;
  j["statement"] = statement;
  j["inputs"] = ordered_json::object();
  for (const auto& [k, v] : inputs) j["inputs"][k] = number(v);
  j["outputs"] = ordered_json::object();
  for (const auto& [k, v] : outputs) j["outputs"][k] = number(v);
  j["hypotheses_checked"] = hypotheses_checked;
  return j.dump(indent);
}

namespace {

struct Alignment {
  double m1, m3;  // max{1, r}, max{1, 1.5 r} with r = (1-nu)/(1+nu)
};

Alignment alignment(double nu) {
  const double r = (1.0 - nu) / (1.0 + nu);
  return {std::max(1.0, r), std::max(1.0, 1.5 * r)};
}

void require(bool ok, const std::string& hypothesis, std::vector<std::string>& checked) {
  if (!ok) throw DomainError("hypothesis violated: " + hypothesis);
  checked.push_back(hypothesis);
}

void check_alignment(double nu, std::vector<std::string>& checked) {
  require(nu >= -1.0 && nu <= 1.0, "nu in [-1, 1]", checked);
  require(nu != -1.0, "end-to-end not antiparallel to lambda_yx (nu != -1)", checked);
}

double flow_time(double w, double nu, int n, double eps_bar) {
  const Alignment a = alignment(nu);
  return 2.0 * n * std::pow(a.m3, n) / w * std::log(15.0 * n * a.m1 / (w * std::min(1.0, 2.0 * eps_bar)));
}

}  // namespace

Certificate lnn_flow_certificate(double w_norm, double nu, int n, double eps_bar, double eps, double t) {
  Certificate c;
  c.statement = "gradient flow time to eps_bar-optimality and curvature integral for balanced deep linear nets";
  c.inputs = {{"w_norm", w_norm}, {"nu", nu}, {"n", n}, {"eps_bar", eps_bar}, {"eps", eps}, {"t", t}};
  require(n >= 1, "depth n >= 1", c.hypotheses_checked);
  require(w_norm > 0.0 && w_norm <= 0.2, "||W_{n:1,s}||_F in (0, 0.2]", c.hypotheses_checked);
  check_alignment(nu, c.hypotheses_checked);
  require(eps > 0.0 && eps <= 1.0 / (2.0 * n), "eps in (0, 1/(2n)]", c.hypotheses_checked);
  require(eps_bar > 0.0, "eps_bar > 0", c.hypotheses_checked);
  require(t >= 0.0, "t >= 0", c.hypotheses_checked);

  const Alignment a = alignment(nu);
  const double m_int = 15.0 * n * n * n * std::pow(a.m3, n) * t * eps / w_norm +
                       std::log(n * n * std::pow(std::exp(2.0) * a.m1, 2.5 * (n - 1)) / (w_norm * w_norm));
  c.outputs = {{"t_bar", flow_time(w_norm, nu, n, eps_bar)},
               {"m_integral_bound", m_int},
               {"beta", 16.0 * n},
               {"gamma", 6.0 * std::sqrt(double(n))},
               {"u_min_bound", u_min_lower_bound(w_norm, nu, n)}};
  return c;
}

Certificate gd_translation(double w_norm, double nu, int n, double eps_tilde, std::optional<double> eta) {
  Certificate c;
  c.statement = "gradient descent step size and iteration count for eps_tilde-optimality, balanced init";
  c.inputs = {{"w_norm", w_norm}, {"nu", nu}, {"n", n}, {"eps_tilde", eps_tilde}};
  if (eta) c.inputs.emplace_back("eta", *eta);
  require(n >= 1, "depth n >= 1", c.hypotheses_checked);
  require(w_norm > 0.0 && w_norm <= 0.2, "||W_{n:1,0}||_F in (0, 0.2]", c.hypotheses_checked);
  check_alignment(nu, c.hypotheses_checked);
  require(eps_tilde > 0.0, "eps_tilde > 0", c.hypotheses_checked);

  const Alignment a = alignment(nu);
  const double lg = std::log(15.0 * n * a.m1 / (w_norm * std::min(1.0, eps_tilde)));
  const double log_eta = 5.0 * std::log(w_norm) + std::log(std::min(1.0, eps_tilde)) - 8.5 * std::log(double(n)) -
                         (7.0 * n + 6.0) - 0.5 * (11.0 * n - 5.0) * std::log(a.m1) - 2.0 * std::log(lg);
  const double eta_max = std::exp(log_eta);
  const double step = eta.value_or(eta_max);
  if (eta) require(*eta > 0.0 && *eta <= eta_max * (1 + 1e-15), "0 < eta <= eta_max", c.hypotheses_checked);
  const double t_bar = flow_time(w_norm, nu, n, eps_tilde / 2.0);
  c.outputs = {{"eta_max", eta_max}, {"k", std::floor(t_bar / step + 1.0)}, {"t_bar", t_bar}};
  return c;
}

Certificate unbalanced_translation(double w_norm, double nu, int n, double eps_tilde, std::optional<double> eta) {
  Certificate c;
  c.statement = "gradient descent from unbalanced init: unbalancedness budget, step size and iteration bound";
  c.inputs = {{"w_norm", w_norm}, {"nu", nu}, {"n", n}, {"eps_tilde", eps_tilde}};
  if (eta) c.inputs.emplace_back("eta", *eta);
  require(n >= 1, "depth n >= 1", c.hypotheses_checked);
  require(w_norm > 0.0 && w_norm <= 0.1, "||W_{n:1,0}||_F in (0, 0.1]", c.hypotheses_checked);
  check_alignment(nu, c.hypotheses_checked);
  require(eps_tilde > 0.0, "eps_tilde > 0", c.hypotheses_checked);

  const double big_m = std::max(3.0, (3.0 - nu) / (1.0 + nu));
  const double lg = std::log(23.0 * n * big_m / (w_norm * std::min(1.0, eps_tilde)));
  const double log_lg = std::log(lg);
  const double log_eps_hat = 8.0 * std::log(w_norm) + std::log(std::min(1.0, eps_tilde * eps_tilde)) -
                             15.0 * std::log(double(n)) - (12.0 * n + 6.0) - (9.0 * n - 5.0) * std::log(big_m) -
                             2.0 * log_lg;
  const double log_eta = 5.0 * std::log(w_norm) + std::log(std::min(1.0, eps_tilde)) - 8.5 * std::log(double(n)) -
                         (7.0 * n + 10.0) - 0.5 * (11.0 * n - 5.0) * std::log(big_m) - 2.0 * log_lg;
  const double eta_max = std::exp(log_eta);
  const double step = eta.value_or(eta_max);
  if (eta) require(*eta > 0.0 && *eta <= eta_max * (1 + 1e-15), "0 < eta <= eta_max", c.hypotheses_checked);
  const double k_bound = 3.0 * n * std::pow(1.5 * big_m, n) / (w_norm * step) * lg + 1.0;
  c.outputs = {{"eps_hat_max", std::exp(log_eps_hat)}, {"eta_max", eta_max}, {"k_bound", k_bound}};
  return c;
}

CurvatureProfile curvature_profile_from_flow(const Trajectory& flow, const Dims& dims, const DataMoments& m,
                                             double eps, const std::vector<double>& sample_times) {
  CurvatureProfile p;
  for (double t : sample_times) {
    const WeightSetting theta = WeightSetting::unflatten(flow.at(t), dims);
    p.times.push_back(t);
    p.values.push_back(-gf_min_eig_lower_bound(theta, m, eps));
  }
  p.validate();
  return p;
}

}  // namespace gradflow
