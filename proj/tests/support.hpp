#pragma once

// Shared fixtures for unit and acceptance tests.

#include "gradflow/balance.hpp"
#include "gradflow/homogeneous.hpp"
#include "gradflow/linear.hpp"
#include "gradflow/worstcase.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>

namespace gradflow::testing {

using Rng = std::mt19937_64;

inline Mat gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  Mat m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

inline WeightSetting gaussian_weights(const Dims& dims, Rng& rng, double scale = 1.0) {
  std::vector<Mat> l;
  for (size_t j = 1; j < dims.size(); ++j) l.push_back(gaussian(dims[j], dims[j - 1], rng, scale));
  return WeightSetting(std::move(l));
}

// depth n, widths uniform in [1, max_width]
inline Dims random_dims(int n, int max_width, Rng& rng) {
  std::uniform_int_distribution<int> w(1, max_width);
  Dims d(n + 1);
  for (int& x : d) x = w(rng);
  return d;
}

inline WeightSetting unit_direction(const Dims& dims, Rng& rng) {
  WeightSetting d = gaussian_weights(dims, rng);
  d *= 1.0 / d.norm();
  return d;
}

inline double rel_err(double got, double want, double floor = 1e-300) {
  return std::abs(got - want) / std::max(std::abs(want), floor);
}

// Second directional derivative of f at theta along delta: central differences at h and h/2 with one
// Richardson step, so truncation is O(h^4).
inline double second_directional_fd(const std::function<double(const WeightSetting&)>& f, const WeightSetting& theta,
                                    const WeightSetting& delta, double h = 1e-3) {
  auto d2 = [&](double s) {
    return (f(theta + s * delta) - 2.0 * f(theta) + f(theta - s * delta)) / (s * s);
  };
  return (4.0 * d2(0.5 * h) - d2(h)) / 3.0;
}

// Unit vector with uniform direction, scaled to radius * U^{1/dim}: uniform in the ball.
inline Vec ball_point(const Vec& center, double radius, Rng& rng) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vec v(center.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = g(rng);
  v *= radius * std::pow(u(rng), 1.0 / double(v.size())) / v.norm();
  return center + v;
}

inline std::vector<double> linspace(double a, double b, int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(count == 1 ? a : a + (b - a) * i / (count - 1));
  return out;
}

// Junction continuity. Each one-sided limit of (value, d1, d2) is extrapolated linearly from the jets at
// offsets 2^-40 and 2^-39 on that side; single-ulp probes are too coarse where d2 has a slope of ~1e14 (the
// quartic next to the far cut). Cut junctions are probed in offset form. Mismatches are relative to
// max(1, |value|).
struct JunctionCheck {
  double value = 0.0, d1 = 0.0, d2 = 0.0;
  double worst() const { return std::max({value, d1, d2}); }
};

inline JunctionCheck junction_mismatch(const Junction& jn, const WorstParams& p) {
  // jet at signed offset o from the junction, together with the offset actually realised in double
  auto probe = [&](double o, double& realised) {
    if (jn.at_cut) {
      realised = o;
      return phi_near_cut(jn.cut_offset + o, jn.negative, p);
    }
    const double z = jn.z + o;
    realised = z - jn.z;
    return jn.axis == 1 ? phi_eval(z, p) : phibar_eval(z, p);
  };
  auto limit = [&](double side) {
    double o1 = 0.0, o2 = 0.0;
    const Jet j1 = probe(side * std::ldexp(1.0, -40), o1), j2 = probe(side * std::ldexp(1.0, -39), o2);
    const double w = o1 / (o2 - o1);  // extrapolate to offset 0
    return Jet{j1.value - w * (j2.value - j1.value), j1.d1 - w * (j2.d1 - j1.d1), j1.d2 - w * (j2.d2 - j1.d2)};
  };
  const Jet lo = limit(-1.0), hi = limit(1.0);
  const double scale = std::max({1.0, std::abs(lo.value), std::abs(hi.value)});
  return {std::abs(lo.value - hi.value) / scale, std::abs(lo.d1 - hi.d1) / scale, std::abs(lo.d2 - hi.d2) / scale};
}

// Derivative consistency next to a junction (on both sides): central differences of value and d1 at step h,
// Richardson-extrapolated with h/2, against the analytic d1 and d2. Points sit 4h away from the junction so
// the stencil stays on one branch. Returns the worst error over its allowance, 1e-6 max(1, |d|) plus the
// rounding floor of the differenced quantity (phi is ~1e26 near 0, where value differences cannot resolve
// the slope). <= 1 means consistent.
inline double junction_fd_error(const Junction& jn, const WorstParams& p, double h) {
  auto eval = [&](double z) { return jn.axis == 1 ? phi_eval(z, p) : phibar_eval(z, p); };
  constexpr double ulp = 2.220446049250313e-16;
  double worst = 0.0;
  for (double side : {-1.0, 1.0}) {
    const double z = jn.z + side * 4.0 * h;
    auto cd = [&](double s, bool second) {
      const Jet a = eval(z + s), b = eval(z - s);
      return second ? (a.d1 - b.d1) / (2 * s) : (a.value - b.value) / (2 * s);
    };
    const Jet at = eval(z);
    for (bool second : {false, true}) {
      const double fd = (4.0 * cd(0.5 * h, second) - cd(h, second)) / 3.0;
      const double want = second ? at.d2 : at.d1;
      const double noise = 8.0 * ulp * std::abs(second ? at.d1 : at.value) / h;
      worst = std::max(worst, std::abs(fd - want) / (1e-6 * std::max(1.0, std::abs(want)) + noise));
    }
  }
  return worst;
}

}  // namespace gradflow::testing
