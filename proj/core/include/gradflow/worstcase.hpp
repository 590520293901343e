#pragma once

#include "gradflow/weights.hpp"

#include <string>
#include <utility>
#include <vector>

namespace gradflow {

// Separable landscape f(q) = phi(q1) + phibar(q2) + 6a q3^2 whose flows cross a region where both active
// coordinates have curvature -a, the global minimum.
struct WorstParams {
  double a = 1.0;
  double b = 3.0;
  double eps = 1e-5;
  int d = 3;

  WorstParams() = default;
  WorstParams(double a, double b, double eps, int d = 3);

  double z_cut() const;      // b e^30 + 1
  double zbar_cut() const;   // b + 1
  double rho() const;        // min{e^-12 / 2, eps / (2b)}
  double center() const;     // rho/2 - 1, symmetry point of phibar
};

struct Jet {
  double value = 0.0, d1 = 0.0, d2 = 0.0;
};

Jet phi_eval(double z, const WorstParams& p);
Jet phibar_eval(double z, const WorstParams& p);

// phi(sign * (z_cut + s)) with s kept exact; lets callers probe the cut points, where z itself has
// an ulp of ~4e-3. Derivatives are with respect to z.
Jet phi_near_cut(double s, bool negative, const WorstParams& p);

struct WorstValue {
  double value = 0.0;
  Vec grad;
};

WorstValue worst_f(const Vec& q, const WorstParams& p);
Vec worst_grad(const Vec& q, const WorstParams& p);
Vec worst_hessian_diag(const Vec& q, const WorstParams& p);

struct Junction {
  std::string name;
  int axis = 1;              // 1: phi, 2: phibar
  double z = 0.0;
  bool at_cut = false;       // phi junction at +-z_cut or +-(z_cut+1); probe via phi_near_cut
  double cut_offset = 0.0;   // s of the junction when at_cut
  bool negative = false;
};

// All 14 points where a branch of phi or phibar meets another.
std::vector<Junction> worst_junctions(const WorstParams& p);

// Start box: q1 in (0.5, 1), q2 in (e^-12/2 - 1, e^-12 - 1), q3 > 2.
void check_start_box(const Vec& start, const WorstParams& p);

// Closed-form gradient flow from a start in the box, valid until coordinate 2 reaches zbar_cut.
class WorstFlow {
 public:
  WorstFlow(const Vec& start, const WorstParams& p);

  double aniso_exit() const { return t_aniso_; }   // coordinate 2 reaches 1 - rho
  double iso_entry() const { return t_iso_; }      // coordinate 2 reaches 1
  double iso_exit() const { return t_iso_end_; }   // coordinate 2 reaches zbar_cut
  const WorstParams& params() const { return p_; }

  Vec at(double t) const;
  double coord2(double t) const;

 private:
  Vec start_;
  WorstParams p_;
  double t_aniso_, t_iso_, t_iso_end_, omega_;
};

struct TildeInterval {
  double lo = 0.0, hi = 0.0;
  double mid() const { return 0.5 * (lo + hi); }
};

TildeInterval admissible_t_tilde(const Vec& start, const WorstParams& p);

// (10^14 / a) e^{-a t~} eps
double divergence_threshold(const WorstParams& p, double t_tilde);

struct WorstPreset {
  WorstParams params;
  Vec start;
  double t_tilde = 0.0;
  double threshold = 0.0;
};

// a = 1, b = 3, eps = 1e-5, start (0.75, 0.75 e^-12 - 1, 3), t~ at the interval midpoint.
WorstPreset desk_preset();

struct DivergenceSample {
  long k = 0;
  double t = 0.0;
  double gap = 0.0;  // ||theta_k - theta(k eta)||
};

struct DivergenceReport {
  double eta = 0.0;
  double t_tilde = 0.0;
  double threshold = 0.0;
  double min_distance = 0.0;  // min_k ||theta_k - theta(t~)||
  long argmin_k = 0;
  long iterations = 0;
  bool coord3_diverged = false;
  double growth_exponent = 0.0;       // log-linear slope of gap over the isotropic window
  double cross_track_exponent = 0.0;  // same for the component perpendicular to the flow ray
  std::vector<DivergenceSample> isotropic;
};

DivergenceReport divergence_experiment(const Vec& start, const WorstParams& p, double t_tilde, double eta);

}  // namespace gradflow
