#include "gradflow/ode.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace gradflow {

namespace {

constexpr double c2 = 0.2, c3 = 0.3, c4 = 0.8, c5 = 8.0 / 9.0;
constexpr double a21 = 0.2;
constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                 a65 = -5103.0 / 18656.0;
constexpr double a71 = 35.0 / 384.0, a73 = 500.0 / 1113.0, a74 = 125.0 / 192.0, a75 = -2187.0 / 6784.0,
                 a76 = 11.0 / 84.0;
constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                 e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
constexpr double d1 = -12715105075.0 / 11282082432.0, d3 = 87487479700.0 / 32700410799.0,
                 d4 = -10690763975.0 / 1880347072.0, d5 = 701980252875.0 / 199316789632.0,
                 d6 = -1453857185.0 / 822651844.0, d7 = 69997945.0 / 29380423.0;

double scaled_max(const Vec& err, const Vec& y0, const Vec& y1, const OdeOptions& opt) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < err.size(); ++i) {
    const double sc = opt.atol + opt.rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    worst = std::max(worst, std::abs(err[i]) / sc);
  }
  return worst;
}

double initial_step(const VectorField& f, double t0, const Vec& y0, const Vec& k1, double span,
                    const OdeOptions& opt) {
  const Vec sc = (opt.atol + opt.rtol * y0.array().abs()).matrix();
  const double dnf = (k1.array() / sc.array()).matrix().norm();
  const double dny = (y0.array() / sc.array()).matrix().norm();
  double h = (dnf <= 1e-10 || dny <= 1e-10) ? 1e-6 : 0.01 * dny / dnf;
  h = std::min(h, span);
  const Vec k2 = f(t0 + h, y0 + h * k1);
  const double der2 = (((k2 - k1).array() / sc.array()).matrix().norm()) / h;
  const double der = std::max(der2, dnf);
  const double h1 = der <= 1e-15 ? std::max(1e-6, h * 1e-3) : std::pow(0.01 / der, 0.2);
  return std::min({100 * h, h1, span});
}

}  // namespace

Vec DenseSolution::operator()(double t) const {
  if (times_.empty()) throw DomainError("empty solution");
  const double lo = times_.front(), hi = times_.back();
  const double slack = 1e-12 * std::max(1.0, std::abs(hi));
  if (t < lo - slack || t > hi + slack)
    throw DomainError("time " + std::to_string(t) + " outside [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  if (times_.size() == 1) return states_.front();
  t = std::clamp(t, lo, hi);
  auto it = std::upper_bound(times_.begin(), times_.end(), t);
  size_t k = static_cast<size_t>(std::distance(times_.begin(), it));
  k = std::clamp<size_t>(k, 1, times_.size() - 1) - 1;
  if (t == times_[k]) return states_[k];
  if (t == times_[k + 1]) return states_[k + 1];
  const double h = times_[k + 1] - times_[k];
  const double s = (t - times_[k]) / h, s1 = 1.0 - s;
  const auto& r = coeffs_[k];
  return r[0] + s * (r[1] + s1 * (r[2] + s * (r[3] + s1 * r[4])));
}

double DenseSolution::first_crossing(const std::function<double(const Vec&)>& event, double tol) const {
  if (states_.empty()) return std::nan("");
  const double s0 = event(states_.front());
  if (s0 == 0.0) return times_.front();
  for (size_t k = 1; k < states_.size(); ++k) {
    const double sk = event(states_[k]);
    if ((sk > 0) != (s0 > 0) || sk == 0.0) {
      double a = times_[k - 1], b = times_[k];
      while (b - a > tol * std::max(1.0, std::abs(b))) {
        const double m = 0.5 * (a + b);
        const double sm = event((*this)(m));
        if ((sm > 0) == (s0 > 0) && sm != 0.0)
          a = m;
        else
          b = m;
      }
      return 0.5 * (a + b);
    }
  }
  return std::nan("");
}

DenseSolution integrate(const VectorField& f, double t0, const Vec& y0, double t1, const OdeOptions& opt,
                        const std::function<bool(double, const Vec&)>& stop) {
  if (!(t1 > t0)) throw DomainError("integration horizon must be positive");
  DenseSolution sol;
  sol.times_.push_back(t0);
  sol.states_.push_back(y0);

  double t = t0;
  Vec y = y0;
  Vec k1 = f(t, y);
  sol.stats_.evaluations = 1;
  const double span = t1 - t0;
  const double hmax = opt.max_step > 0 ? opt.max_step : span;
  double h = opt.initial_step > 0 ? opt.initial_step : initial_step(f, t, y, k1, span, opt);
  h = std::min(h, hmax);
  bool last_rejected = false;

  while (t < t1) {
    if (sol.stats_.accepted + sol.stats_.rejected >= opt.max_steps)
      throw IntegrationError("step budget exhausted", t);
    if (t + h > t1 || t1 - (t + h) < 1e-14 * std::abs(t1)) h = t1 - t;
    if (h < 1e-14 * std::max(1.0, std::abs(t)))
      throw IntegrationError("step size underflow at t = " + std::to_string(t), t);

    const Vec k2 = f(t + c2 * h, y + h * (a21 * k1));
    const Vec k3 = f(t + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const Vec k4 = f(t + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const Vec k5 = f(t + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const Vec k6 = f(t + h, y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5));
    const Vec y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const Vec k7 = f(t + h, y1);
    sol.stats_.evaluations += 6;

    const Vec err = h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double e = scaled_max(err, y, y1, opt);
    if (!std::isfinite(e)) e = 1e10;

    if (e <= 1.0) {
      std::array<Vec, 5> r;
      r[0] = y;
      r[1] = y1 - y;
      r[2] = h * k1 - r[1];
      r[3] = r[1] - h * k7 - r[2];
      r[4] = h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7);
      sol.coeffs_.push_back(std::move(r));
      t = (h == t1 - t) ? t1 : t + h;
      y = y1;
      k1 = k7;
      sol.times_.push_back(t);
      sol.states_.push_back(y);
      ++sol.stats_.accepted;
      double fac = e == 0.0 ? 5.0 : 0.9 * std::pow(e, -0.2);
      fac = std::clamp(fac, 0.2, last_rejected ? 1.0 : 5.0);
      h = std::min(h * fac, hmax);
      last_rejected = false;
      if (stop && stop(t, y)) break;
    } else {
      ++sol.stats_.rejected;
      h *= std::max(0.2, 0.9 * std::pow(e, -0.2));
      last_rejected = true;
    }
  }
  return sol;
}

}  // namespace gradflow
