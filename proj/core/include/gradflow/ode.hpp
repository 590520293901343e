#pragma once

#include "gradflow/weights.hpp"

#include <array>
#include <functional>

namespace gradflow {

using VectorField = std::function<Vec(double, const Vec&)>;

struct IntegrationError : std::runtime_error {
  double last_time;
  IntegrationError(const std::string& what, double t) : std::runtime_error(what), last_time(t) {}
};

struct OdeOptions {
  double rtol = 1e-10;
  double atol = 1e-10;
  double initial_step = 0.0;  // 0 picks one automatically
  double max_step = 0.0;      // 0 means unbounded
  long max_steps = 50'000'000;
};

struct OdeStats {
  long accepted = 0;
  long rejected = 0;
  long evaluations = 0;
};

// Accepted steps of an adaptive Dormand-Prince 5(4) run with its continuous extension.
class DenseSolution {
 public:
  double t0() const { return times_.front(); }
  double t1() const { return times_.back(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<Vec>& states() const { return states_; }
  const OdeStats& stats() const { return stats_; }

  Vec operator()(double t) const;

  // First t in [t0, t1] where event(state) changes sign from the initial sign, refined by bisection.
  // Returns NaN when no sign change is found.
  double first_crossing(const std::function<double(const Vec&)>& event, double tol = 1e-13) const;

 private:
  friend DenseSolution integrate(const VectorField&, double, const Vec&, double, const OdeOptions&,
                                 const std::function<bool(double, const Vec&)>&);
  std::vector<double> times_;
  std::vector<Vec> states_;
  // 5 coefficient vectors per step (Hairer's dense output of order 4)
  std::vector<std::array<Vec, 5>> coeffs_;
  OdeStats stats_;
};

// Integrates y' = f(t, y) from t0 to t1 (> t0). Stops early when stop(t, y) returns true after an accepted step.
DenseSolution integrate(const VectorField& f, double t0, const Vec& y0, double t1, const OdeOptions& opt = {},
                        const std::function<bool(double, const Vec&)>& stop = {});

}  // namespace gradflow
