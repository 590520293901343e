#include "gradflow/worstcase.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace gradflow {

WorstParams::WorstParams(double a_, double b_, double eps_, int d_) : a(a_), b(b_), eps(eps_), d(d_) {
  if (!(a > 0.0)) throw DomainError("a must be positive");
  if (!(b >= 3.0)) throw DomainError("b must be at least 3");
  if (!(eps > 0.0 && eps < 1.0)) throw DomainError("eps must lie in (0, 1)");
  if (d < 3) throw DomainError("dimension must be at least 3");
}

double WorstParams::z_cut() const { return b * std::exp(30.0) + 1.0; }
double WorstParams::zbar_cut() const { return b + 1.0; }
double WorstParams::rho() const { return std::min(std::exp(-12.0) / 2.0, eps / (2.0 * b)); }
double WorstParams::center() const { return rho() / 2.0 - 1.0; }

namespace {

// Quadratic -a/2 z^2 written around a cut point c (z = c + s), plus the constant that makes the
// quartic piece on [c, c+1] land at zero: a(c/2 + 1/12) - a c s - a s^2 / 2.
Jet below_cut(double s, double c, double a) {
  return {a * (0.5 * c + 1.0 / 12.0) - a * c * s - 0.5 * a * s * s, -a * (c + s), -a};
}

// Quartic piece on [c, c+1]. With r = s - 1 it factors as -a r^3 (c/2 (r+2) + (3r+4)/12), which keeps
// the value exact near c + 1 even when c ~ 1e13.
Jet across_cut(double s, double c, double a) {
  const double r = s - 1.0;
  const double g = 0.5 * c * (r + 2.0) + (3.0 * r + 4.0) / 12.0;
  const double dg = 0.5 * c + 0.25;
  return {-a * r * r * r * g, -a * (3.0 * r * r * g + r * r * r * dg), -a * (6.0 * r * g + 6.0 * r * r * dg)};
}

Jet cut_region(double s, double c, double a) {
  if (s < 0.0) return below_cut(s, c, a);
  if (s <= 1.0) return across_cut(s, c, a);
  return {};
}

Jet mirror(Jet j) {
  j.d1 = -j.d1;
  return j;
}

Jet phi_abs(double x, const WorstParams& p) {
  const double zc = p.z_cut();
  if (x >= 0.5 * zc) return cut_region(x - zc, zc, p.a);
  // phi(0) = a (zc^2/2 + zc/2 + 1/12)
  const double phi0 = p.a * (0.5 * zc * zc + 0.5 * zc + 1.0 / 12.0);
  return {phi0 - 0.5 * p.a * x * x, -p.a * x, -p.a};
}

}  // namespace

Jet phi_eval(double z, const WorstParams& p) {
  const Jet j = phi_abs(std::abs(z), p);
  return z < 0.0 ? mirror(j) : j;
}

Jet phi_near_cut(double s, bool negative, const WorstParams& p) {
  const Jet j = cut_region(s, p.z_cut(), p.a);
  return negative ? mirror(j) : j;
}

Jet phibar_eval(double z, const WorstParams& p) {
  const double a = p.a, rho = p.rho(), c0 = p.center(), zb = p.zbar_cut();
  const bool reflected = z < c0;
  const double x = reflected ? 2.0 * c0 - z : z;
  const double bump = a * (0.5 * rho - 7.0 / 48.0 * rho * rho);
  const double v0 = 0.5 * a * (zb + 1.0) * (zb + 1.0) + a / 12.0 - 0.5 * a * zb - bump;
  const double vc = v0 - 0.5 * a + bump;

  Jet j;
  if (x < 1.0 - rho) {
    const double y = x - c0;
    j = {v0 - 0.25 * a * y * y, -0.5 * a * y, -0.5 * a};
  } else if (x <= 1.0) {
    const double e = x - 1.0;
    j = {vc - 0.5 * a * x * x - a / (12.0 * rho) * e * e * e, -a * x - a / (4.0 * rho) * e * e,
         -a - a / (2.0 * rho) * e};
  } else {
    j = cut_region(x - zb, zb, a);
  }
  return reflected ? mirror(j) : j;
}

WorstValue worst_f(const Vec& q, const WorstParams& p) {
  if (q.size() < 3) throw ShapeError("worst-case landscape needs at least 3 coordinates");
  const Jet j1 = phi_eval(q[0], p), j2 = phibar_eval(q[1], p);
  WorstValue out;
  out.value = j1.value + j2.value + 6.0 * p.a * q[2] * q[2];
  out.grad = Vec::Zero(q.size());
  out.grad[0] = j1.d1;
  out.grad[1] = j2.d1;
  out.grad[2] = 12.0 * p.a * q[2];
  return out;
}

Vec worst_grad(const Vec& q, const WorstParams& p) {
  if (q.size() < 3) throw ShapeError("worst-case landscape needs at least 3 coordinates");
  Vec g = Vec::Zero(q.size());
  g[0] = phi_eval(q[0], p).d1;
  g[1] = phibar_eval(q[1], p).d1;
  g[2] = 12.0 * p.a * q[2];
  return g;
}

Vec worst_hessian_diag(const Vec& q, const WorstParams& p) {
  if (q.size() < 3) throw ShapeError("worst-case landscape needs at least 3 coordinates");
  Vec h = Vec::Zero(q.size());
  h[0] = phi_eval(q[0], p).d2;
  h[1] = phibar_eval(q[1], p).d2;
  h[2] = 12.0 * p.a;
  return h;
}

std::vector<Junction> worst_junctions(const WorstParams& p) {
  const double zc = p.z_cut(), c0 = p.center(), rho = p.rho(), zb = p.zbar_cut();
  std::vector<Junction> out;
  out.push_back({"phi:0", 1, 0.0, false, 0.0, false});
  out.push_back({"phi:+z_cut", 1, zc, true, 0.0, false});
  out.push_back({"phi:+z_cut+1", 1, zc + 1.0, true, 1.0, false});
  out.push_back({"phi:-z_cut", 1, -zc, true, 0.0, true});
  out.push_back({"phi:-z_cut-1", 1, -zc - 1.0, true, 1.0, true});
  out.push_back({"phibar:center", 2, c0, false, 0.0, false});
  const std::pair<const char*, double> right[] = {
      {"1-rho", 1.0 - rho}, {"1", 1.0}, {"zbar_cut", zb}, {"zbar_cut+1", zb + 1.0}};
  for (const auto& [name, z] : right) {
    out.push_back({std::string("phibar:") + name, 2, z, false, 0.0, false});
    out.push_back({std::string("phibar:mirror ") + name, 2, 2.0 * c0 - z, false, 0.0, true});
  }
  return out;
}

void check_start_box(const Vec& start, const WorstParams& p) {
  if (start.size() != p.d) throw ShapeError("start has " + std::to_string(start.size()) + " coordinates, expected " +
                                            std::to_string(p.d));
  const double e12 = std::exp(-12.0);
  if (!(start[0] > 0.5 && start[0] < 1.0)) throw PreconditionError("start coordinate 1 must lie in (0.5, 1)");
  if (!(start[1] > e12 / 2.0 - 1.0 && start[1] < e12 - 1.0))
    throw PreconditionError("start coordinate 2 must lie in (e^-12/2 - 1, e^-12 - 1)");
  if (!(start[2] > 2.0)) throw PreconditionError("start coordinate 3 must exceed 2");
}

WorstFlow::WorstFlow(const Vec& start, const WorstParams& p) : start_(start), p_(p) {
  check_start_box(start, p);
  const double a = p.a, rho = p.rho();
  t_aniso_ = 2.0 / a * std::log((4.0 - 3.0 * rho) / (2.0 * start[1] + 2.0 - rho));
  // on [1-rho, 1]: z' = a z + a/(4 rho) (z-1)^2, i.e. y' = a/(4 rho) (y^2 + omega^2) for y = z - (1 - 2 rho)
  omega_ = std::sqrt(4.0 * rho * (1.0 - rho));
  t_iso_ = t_aniso_ + 4.0 * rho / (a * omega_) * (std::atan(2.0 * rho / omega_) - std::atan(rho / omega_));
  t_iso_end_ = t_iso_ + std::log(p.zbar_cut()) / a;
}

double WorstFlow::coord2(double t) const {
  const double a = p_.a, rho = p_.rho(), c0 = p_.center();
  if (t < 0.0) throw DomainError("time must be nonnegative");
  if (t <= t_aniso_) return (start_[1] - c0) * std::exp(0.5 * a * t) + c0;
  if (t <= t_iso_)
    return 1.0 - 2.0 * rho + omega_ * std::tan(std::atan(rho / omega_) + a * omega_ * (t - t_aniso_) / (4.0 * rho));
  if (t <= t_iso_end_) return std::exp(a * (t - t_iso_));
  throw DomainError("closed form for coordinate 2 ends at t = " + std::to_string(t_iso_end_));
}

Vec WorstFlow::at(double t) const {
  const double a = p_.a;
  if (t > std::log(p_.z_cut() / start_[0]) / a) throw DomainError("coordinate 1 has left (0, z_cut)");
  Vec out = start_;
  out[0] = start_[0] * std::exp(a * t);
  out[1] = coord2(t);
  out[2] = start_[2] * std::exp(-12.0 * a * t);
  return out;
}

TildeInterval admissible_t_tilde(const Vec& start, const WorstParams& p) {
  check_start_box(start, p);
  const double a = p.a, rho = p.rho();
  const double t0 = 2.0 / a * std::log((2.0 - 1.5 * rho) / (start[1] - p.center()));
  return {t0 + std::log(2.0 / (1.0 - rho)) / a,
          t0 + std::log((1.0 + rho / 4.0) / (1.0 - 0.75 * rho)) / a + std::log(p.b) / a};
}

double divergence_threshold(const WorstParams& p, double t_tilde) {
  return 1e14 / p.a * std::exp(-p.a * t_tilde) * p.eps;
}

WorstPreset desk_preset() {
  WorstPreset w;
  w.params = WorstParams(1.0, 3.0, 1e-5, 3);
  w.start = Vec(3);
  w.start << 0.75, 0.75 * std::exp(-12.0) - 1.0, 3.0;
  w.t_tilde = admissible_t_tilde(w.start, w.params).mid();
  w.threshold = divergence_threshold(w.params, w.t_tilde);
  return w;
}

namespace {

double log_linear_slope(const std::vector<double>& t, const std::vector<double>& y) {
  const size_t n = t.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (size_t i = 0; i < n; ++i) {
    const double ly = std::log(y[i]);
    st += t[i];
    sy += ly;
    stt += t[i] * t[i];
    sty += t[i] * ly;
  }
  return (n * sty - st * sy) / (n * stt - st * st);
}

}  // namespace

DivergenceReport divergence_experiment(const Vec& start, const WorstParams& p, double t_tilde, double eta) {
  const TildeInterval iv = admissible_t_tilde(start, p);
  const double slack = 1e-12 * iv.hi;
  if (t_tilde < iv.lo - slack || t_tilde > iv.hi + slack)
    throw PreconditionError("t~ = " + std::to_string(t_tilde) + " outside admissible interval [" +
                            std::to_string(iv.lo) + ", " + std::to_string(iv.hi) + "]");
  if (!(eta > 0.0)) throw DomainError("step size must be positive");

  const WorstFlow flow(start, p);
  const Vec target = flow.at(t_tilde);

  DivergenceReport rep;
  rep.eta = eta;
  rep.t_tilde = t_tilde;
  rep.threshold = divergence_threshold(p, t_tilde);
  rep.min_distance = std::numeric_limits<double>::infinity();

  std::vector<double> ts, gaps, cross;
  const long cap = static_cast<long>(std::ceil(10.0 * iv.hi / eta)) + 1000;
  Vec theta = start;
  long k = 0;
  for (; k <= cap; ++k) {
    const double dist = (theta - target).norm();
    if (dist < rep.min_distance) {
      rep.min_distance = dist;
      rep.argmin_k = k;
    }
    const double t = static_cast<double>(k) * eta;
    if (t >= flow.iso_entry() && t < flow.iso_exit() && theta[1] >= 1.0 && theta[1] < p.zbar_cut()) {
      const Vec ref = flow.at(t);
      const Vec diff = theta - ref;
      const double gap = diff.norm();
      const double r = std::hypot(ref[0], ref[1]);
      const double perp = std::abs(diff[0] * ref[1] - diff[1] * ref[0]) / r;
      rep.isotropic.push_back({k, t, gap});
      if (gap > 0.0 && perp > 0.0) {
        ts.push_back(t);
        gaps.push_back(gap);
        cross.push_back(perp);
      }
    }
    // coordinate 1 only grows, and |q3| only grows once GD is unstable there: past these points
    // no later iterate can come closer
    if (theta[0] > target[0] + rep.min_distance) break;
    if (rep.coord3_diverged && std::abs(theta[2]) - std::abs(target[2]) > rep.min_distance) break;
    if (!theta.allFinite() || theta.norm() > 1e300) break;

    const double q3 = theta[2];
    theta -= eta * worst_grad(theta, p);
    if (std::abs(theta[2]) > std::abs(q3) && std::abs(q3) > 0.0) rep.coord3_diverged = true;
  }
  rep.iterations = k;
  rep.growth_exponent = log_linear_slope(ts, gaps);
  rep.cross_track_exponent = log_linear_slope(ts, cross);
  return rep;
}

}  // namespace gradflow
