#pragma once

// The regularized problem div(phi_eps(|grad u|) grad u) = 0 on an annulus
// with Dirichlet data, phi_eps(s) = (s^2 + eps)^{(p-2)/2}. Radially the
// equation has the first integral phi_eps(|u'|) |u'| A(r) = c, so solving
// means recovering |u'| from c pointwise and tuning c to hit the boundary
// gap. A piecewise-linear energy minimizer provides the independent route.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgreen/geometry.hpp"
#include "pgreen/green.hpp"
#include "pgreen/io.hpp"
#include "pgreen/numerics.hpp"

namespace pgreen {

inline double phi_eps(double s, double eps, double p) {
  if (!(s >= 0.0) || !(eps >= 0.0)) throw std::domain_error("phi_eps: need s >= 0 and eps >= 0");
  if (s == 0.0 && eps == 0.0 && p != 2.0) throw std::domain_error("phi_eps: (s, eps) = (0, 0)");
  return std::pow(s * s + eps, 0.5 * (p - 2.0));
}

inline double eta_eps(double s, double eps, double p) {
  if (!(s >= 0.0) || !(eps >= 0.0)) throw std::domain_error("eta_eps: need s >= 0 and eps >= 0");
  if (s == 0.0 && eps == 0.0) throw std::domain_error("eta_eps: (s, eps) = (0, 0)");
  return (p - 2.0) * s * s / (s * s + eps);
}

inline double eta_eps_prime(double s, double eps, double p) {
  if (!(s >= 0.0) || !(eps >= 0.0)) throw std::domain_error("eta_eps_prime: need s >= 0 and eps >= 0");
  if (s == 0.0 && eps == 0.0) throw std::domain_error("eta_eps_prime: (s, eps) = (0, 0)");
  return 2.0 * (p - 2.0) * eps * s / sqr(s * s + eps);
}

namespace detail {

// g(s) = s (s^2 + eps)^{(p-2)/2}, the flux density in |u'|; strictly
// increasing since g'(s) = (s^2+eps)^{(p-4)/2} ((p-1) s^2 + eps) > 0.
inline double flux_density(double s, double eps, double p) {
  if (s == 0.0) return 0.0;
  return s * std::pow(s * s + eps, 0.5 * (p - 2.0));
}

inline double flux_density_prime(double s, double eps, double p) {
  return std::pow(s * s + eps, 0.5 * (p - 4.0)) * ((p - 1.0) * s * s + eps);
}

// invert g(s) = y for y >= 0
inline double invert_flux_density(double y, double eps, double p) {
  if (y == 0.0) return 0.0;
  // starting guesses from the two asymptotic regimes
  double guess = std::pow(y, 1.0 / (p - 1.0));
  if (eps > 0.0) guess = std::max(guess, y * std::pow(eps, 0.5 * (2.0 - p)));
  double hi = std::max(guess * 2.0, 1e-30);
  while (flux_density(hi, eps, p) < y) {
    hi *= 2.0;
    if (hi > 1e300) throw RootError("invert_flux_density: unbounded bracket");
  }
  auto f = [=](double s) { return flux_density(s, eps, p) - y; };
  auto df = [=](double s) { return flux_density_prime(s, eps, p); };
  RootOptions opts;
  opts.x_rel_tol = 1e-15;
  opts.f_tol = 1e-14 * y;
  return newton_monotone(f, df, 0.0, hi, std::min(guess, hi), opts);
}

}  // namespace detail

// Solution of the regularized problem on [r_a, r_b]. All evaluators go
// through the conserved flux constant, so they are pure and exact for the
// ODE regardless of which solver produced the object.
class RegularizedProfile {
 public:
  RegularizedProfile(WarpedMetric metric, PParam p, double eps, double r_a, double r_b,
                     double u_a, double u_b, double c_flux, std::vector<double> grid,
                     std::vector<double> ue, std::string solver)
      : metric_(std::move(metric)), p_(p), eps_(eps), r_a_(r_a), r_b_(r_b),
        u_a_(u_a), u_b_(u_b), c_flux_(c_flux), r_(std::move(grid)), ue_(std::move(ue)),
        solver_(std::move(solver)) {
    due_.resize(r_.size());
    for (std::size_t i = 0; i < r_.size(); ++i) due_[i] = -s_at(r_[i]);
  }

  const WarpedMetric& metric() const { return metric_; }
  const PParam& p() const { return p_; }
  double eps() const { return eps_; }
  double r_a() const { return r_a_; }
  double r_b() const { return r_b_; }
  double u_a() const { return u_a_; }
  double u_b() const { return u_b_; }
  double c_flux() const { return c_flux_; }
  const std::string& solver() const { return solver_; }
  const std::vector<double>& grid() const { return r_; }
  const std::vector<double>& values() const { return ue_; }
  const std::vector<double>& gradients() const { return due_; }

  // |u'|(r) from the first integral
  double s_at(double r) const {
    check_domain(r);
    return detail::invert_flux_density(c_flux_ / metric_.area(r), eps_, p_.p);
  }

  // d|u'|/dr, by differentiating A(r) g(s(r)) = c
  double ds_at(double r) const {
    const double s = s_at(r);
    if (s == 0.0) return 0.0;
    const double s2e = s * s + eps_;
    return -(metric_.darea(r) / metric_.area(r)) * s * s2e / ((p_.p - 1.0) * s * s + eps_);
  }

  double due_at(double r) const { return -s_at(r); }
  double d2u_at(double r) const { return -ds_at(r); }
  double eta_at(double r) const { return eta_eps(s_at(r), eps_, p_.p); }

  double laplacian_at(double r) const {
    return d2u_at(r) + 2.0 * due_at(r) * metric_.dw(r) / metric_.w(r);
  }

  double ue_at(double r) const {
    check_domain(r);
    const auto it = std::lower_bound(r_.begin(), r_.end(), r);
    const std::size_t i = static_cast<std::size_t>(it - r_.begin());
    if (i < r_.size() && r_[i] == r) return ue_[i];
    QuadratureOptions opts;
    opts.rel_tol = 1e-13;
    if (i == r_.size()) {
      return ue_.back() - integrate_logspace([this](double x) { return s_at(x); }, r_.back(), r, opts);
    }
    return ue_[i] + integrate_logspace([this](double x) { return s_at(x); }, r, r_[i], opts);
  }

  // radius with u = t
  double invert(double t) const {
    if (!(t >= std::min(u_a_, u_b_)) || !(t <= std::max(u_a_, u_b_))) {
      throw std::domain_error("RegularizedProfile::invert: level outside value range");
    }
    const auto it = std::lower_bound(ue_.rbegin(), ue_.rend(), t);
    const std::size_t k = static_cast<std::size_t>(it - ue_.rbegin());
    const std::size_t j = (k == 0) ? ue_.size() - 2 : (k >= ue_.size() ? 0 : ue_.size() - 1 - k);
    const std::size_t jj = std::min(j, ue_.size() - 2);
    const double xa = std::log(r_[jj]);
    const double xb = std::log(r_[jj + 1]);
    auto f = [this, t](double x) { return t - ue_at(std::exp(x)); };
    auto df = [this](double x) {
      const double rr = std::exp(x);
      return s_at(rr) * rr;
    };
    RootOptions opts;
    opts.x_rel_tol = 1e-15;
    opts.f_tol = 1e-13 * std::max(std::abs(t), 1e-300);
    return std::exp(newton_monotone(f, df, xa, xb, 0.5 * (xa + xb), opts));
  }

 private:
  void check_domain(double r) const {
    if (!(r >= r_a_) || !(r <= r_b_)) {
      throw std::domain_error("RegularizedProfile: radius outside annulus");
    }
  }

  WarpedMetric metric_;
  PParam p_;
  double eps_, r_a_, r_b_, u_a_, u_b_, c_flux_;
  std::vector<double> r_, ue_, due_;
  std::string solver_;
};

struct Annulus {
  double r_a = 0.0;
  double r_b = 0.0;
  double u_a = 0.0;  // boundary value at r_a (the larger one)
  double u_b = 0.0;
};

// The domain {t_lo < u < t_hi} of a Green profile as a radial annulus with
// its Dirichlet data.
inline Annulus annulus_from_levels(const GreenProfile& prof, double t_lo, double t_hi) {
  if (!(t_lo < t_hi)) throw std::invalid_argument("annulus_from_levels: need t_lo < t_hi");
  Annulus a;
  a.r_a = invert_level(prof, t_hi);
  a.r_b = invert_level(prof, t_lo);
  a.u_a = prof.u_at(a.r_a);
  a.u_b = prof.u_at(a.r_b);
  return a;
}

inline Annulus annulus_from_radii(const GreenProfile& prof, double r_a, double r_b) {
  if (!(r_a < r_b)) throw std::invalid_argument("annulus_from_radii: need r_a < r_b");
  return Annulus{r_a, r_b, prof.u_at(r_a), prof.u_at(r_b)};
}

struct ShootingOptions {
  int n_grid = 257;
  double c_rel_tol = 1e-14;
};

inline RegularizedProfile solve_regularized_shooting(const WarpedMetric& metric, const PParam& p,
                                                     double eps, double r_a, double r_b,
                                                     double u_a, double u_b,
                                                     const ShootingOptions& opts = {}) {
  if (!(r_a > 0.0) || !(r_b > r_a) || !(r_b < metric.r_max())) {
    throw std::invalid_argument("solve_regularized_shooting: bad annulus");
  }
  if (!(eps >= 0.0)) throw std::invalid_argument("solve_regularized_shooting: eps < 0");
  if (u_a < u_b) {
    throw std::invalid_argument("solve_regularized_shooting: boundary values must decrease outward");
  }
  const double gap = u_a - u_b;

  double c = 0.0;
  if (gap > 0.0) {
    QuadratureOptions qopts;
    qopts.rel_tol = 1e-13;
    auto gap_of = [&](double c_try) {
      return integrate_logspace(
          [&](double r) { return detail::invert_flux_density(c_try / metric.area(r), eps, p.p); },
          r_a, r_b, qopts);
    };
    double c_hi = 1.0;
    for (int k = 0; gap_of(c_hi) < gap; ++k) {
      c_hi *= 4.0;
      if (k > 300) throw RootError("solve_regularized_shooting: boundary gap unreachable");
    }
    RootOptions ropts;
    ropts.x_rel_tol = opts.c_rel_tol;
    c = solve_increasing([&](double c_try) { return gap_of(c_try) - gap; }, 0.0, c_hi, ropts);
  }

  std::vector<double> grid = logspace(r_a, r_b, opts.n_grid);
  std::vector<double> ue(grid.size(), u_b);
  {
    QuadratureOptions qopts;
    qopts.rel_tol = 1e-13;
    auto s_of = [&](double r) { return detail::invert_flux_density(c / metric.area(r), eps, p.p); };
    for (std::size_t i = grid.size() - 1; i-- > 0;) {
      ue[i] = ue[i + 1] + integrate_logspace(s_of, grid[i], grid[i + 1], qopts);
    }
  }
  if (std::abs(ue.front() - u_a) > 1e-11 * std::max({std::abs(u_a), std::abs(u_b), 1e-300})) {
    throw RootError("solve_regularized_shooting: boundary mismatch " +
                    std::to_string(ue.front() - u_a));
  }
  ue.front() = u_a;
  return RegularizedProfile(metric, p, eps, r_a, r_b, u_a, u_b, c, std::move(grid),
                            std::move(ue), "shooting");
}

struct EnergyMinimizeOptions {
  double grad_tol_scale = 1e-10;
  int max_newton = 200;
};

// Damped Newton on the discretized energy sum_i (s_i^2 + eps)^{p/2} A_i h
// over piecewise-linear profiles with fixed boundary values. The integrand
// is strictly convex in the slope, so the tridiagonal Hessian is SPD.
inline RegularizedProfile minimize_energy(const WarpedMetric& metric, const PParam& p, double eps,
                                          double r_a, double r_b, double u_a, double u_b,
                                          int n_cells, const EnergyMinimizeOptions& opts = {}) {
  if (n_cells < 16) throw std::invalid_argument("minimize_energy: need n_cells >= 16");
  if (!(r_a > 0.0) || !(r_b > r_a) || !(r_b < metric.r_max())) {
    throw std::invalid_argument("minimize_energy: bad annulus");
  }
  if (!(eps >= 0.0)) throw std::invalid_argument("minimize_energy: eps < 0");
  if (eps == 0.0 && p.p > 2.0) {
    throw std::invalid_argument("minimize_energy: eps = 0 requires p <= 2");
  }

  const int n = n_cells;
  const double h = (r_b - r_a) / n;
  std::vector<double> area_mid(n);
  for (int i = 0; i < n; ++i) area_mid[i] = metric.area(r_a + (i + 0.5) * h);

  auto f_val = [&](double s) { return std::pow(s * s + eps, 0.5 * p.p); };
  auto f_d1 = [&](double s) {
    if (s == 0.0) return 0.0;  // |s|^{p-1} sign(s) -> 0 for p > 1
    return p.p * s * std::pow(s * s + eps, 0.5 * (p.p - 2.0));
  };
  auto f_d2 = [&](double s) {
    return p.p * std::pow(s * s + eps, 0.5 * (p.p - 4.0)) * ((p.p - 1.0) * s * s + eps);
  };

  std::vector<double> u(n + 1);
  for (int i = 0; i <= n; ++i) u[i] = u_a + (u_b - u_a) * double(i) / n;

  auto energy = [&](const std::vector<double>& v) {
    double e = 0.0;
    for (int i = 0; i < n; ++i) e += f_val((v[i + 1] - v[i]) / h) * area_mid[i] * h;
    return e;
  };

  const double gap = u_a - u_b;
  if (gap != 0.0) {
    // interior Newton iterations on u[1..n-1]
    std::vector<double> grad(n - 1), diag(n - 1), sub(n - 1), super(n - 1);
    double prev_gmax = std::numeric_limits<double>::infinity();
    double prev_energy = std::numeric_limits<double>::infinity();
    for (int iter = 0;; ++iter) {
      if (iter >= opts.max_newton) throw RootError("minimize_energy: Newton did not converge");
      double gmax = 0.0;
      for (int j = 1; j < n; ++j) {
        const double s_prev = (u[j] - u[j - 1]) / h;
        const double s_next = (u[j + 1] - u[j]) / h;
        if (eps == 0.0 && (s_prev == 0.0 || s_next == 0.0)) {
          throw std::runtime_error("minimize_energy: interior slope hit zero with eps = 0");
        }
        grad[j - 1] = f_d1(s_prev) * area_mid[j - 1] - f_d1(s_next) * area_mid[j];
        diag[j - 1] = (f_d2(s_prev) * area_mid[j - 1] + f_d2(s_next) * area_mid[j]) / h;
        super[j - 1] = -f_d2(s_next) * area_mid[j] / h;
        sub[j - 1] = (j > 1) ? -f_d2(s_prev) * area_mid[j - 1] / h : 0.0;
        gmax = std::max(gmax, std::abs(grad[j - 1]));
      }
      const double e0 = energy(u);
      const double scale = std::max(std::abs(e0), 1e-300) / std::max(std::abs(gap), 1e-300);
      if (gmax <= opts.grad_tol_scale * scale) break;
      // rounding floor of the discrete gradient: the energy is flat to the
      // last ulp and the gradient no longer contracts
      if (std::abs(prev_energy - e0) <= 8.0 * 2.3e-16 * std::abs(e0) && gmax >= 0.5 * prev_gmax) {
        break;
      }
      prev_gmax = gmax;
      prev_energy = e0;

      std::vector<double> rhs(n - 1);
      for (int j = 0; j < n - 1; ++j) rhs[j] = -grad[j];
      const std::vector<double> step = solve_tridiagonal(sub, diag, super, rhs);
      double step_max = 0.0, slope = 0.0;
      for (int j = 0; j < n - 1; ++j) {
        step_max = std::max(step_max, std::abs(step[j]));
        slope += grad[j] * step[j];
      }
      // gradient rounding floor scales with 1/h; a vanishing Newton increment
      // is the convergence signal once that floor sits above grad_tol
      if (step_max <= 4.0 * 2.3e-16 * (std::abs(u_a) + std::abs(u_b) + 1.0)) break;

      double tau = 1.0;
      std::vector<double> trial = u;
      for (;;) {
        for (int j = 1; j < n; ++j) trial[j] = u[j] + tau * step[j - 1];
        if (energy(trial) <= e0 + 1e-4 * tau * slope) break;
        tau *= 0.5;
        if (tau < 1e-14) {
          std::ostringstream os;
          os << "minimize_energy: line search failed at iteration " << iter
             << " (energy " << e0 << ", grad_max " << gmax << "); iterate:";
          for (int j = 0; j <= n; j += std::max(1, n / 8)) os << ' ' << u[j];
          throw RootError(os.str());
        }
      }
      u.swap(trial);
    }
  }

  // discrete flux phi(|s|)|s| A, constant across cells at the optimum
  double c_flux = 0.0;
  for (int i = 0; i < n; ++i) {
    c_flux += f_d1(std::abs((u[i + 1] - u[i]) / h)) / p.p * area_mid[i];
  }
  c_flux /= n;

  std::vector<double> grid(n + 1);
  for (int i = 0; i <= n; ++i) grid[i] = (i == n) ? r_b : r_a + i * h;
  return RegularizedProfile(metric, p, eps, r_a, r_b, u_a, u_b, c_flux, std::move(grid),
                            std::move(u), "energy");
}

struct RegLevelQuantities {
  double t = 0.0;
  double r_t = 0.0;
  double F_eps = 0.0;
  double flux_eps = 0.0;
};

inline RegLevelQuantities regularized_level_quantities(const RegularizedProfile& prof, double t) {
  RegLevelQuantities q;
  q.t = t;
  q.r_t = prof.invert(t);
  const double area = prof.metric().area(q.r_t);
  const double s = prof.s_at(q.r_t);
  q.F_eps = area * s * s;
  q.flux_eps = area * phi_eps(s, prof.eps(), prof.p().p) * s;
  return q;
}

struct ConvergenceRow {
  double eps = 0.0;
  double c0_error = 0.0;  // sup |u_eps - u|
  double c1_error = 0.0;  // sup |u_eps' - u'|
};

// C^0/C^1 distance from the exact Green profile across a decreasing eps
// schedule, Dirichlet data taken from the Green profile itself.
inline std::vector<ConvergenceRow> convergence_study(const WarpedMetric& metric, const PParam& p,
                                                     const std::vector<double>& eps_schedule,
                                                     double r_a, double r_b,
                                                     const GreenProfile& reference,
                                                     int probes = 129) {
  for (std::size_t i = 1; i < eps_schedule.size(); ++i) {
    if (!(eps_schedule[i] < eps_schedule[i - 1])) {
      throw std::invalid_argument("convergence_study: schedule must be decreasing");
    }
  }
  const double u_a = reference.u_at(r_a);
  const double u_b = reference.u_at(r_b);
  const std::vector<double> rs = logspace(r_a, r_b, probes);
  std::vector<ConvergenceRow> rows;
  rows.reserve(eps_schedule.size());
  for (double eps : eps_schedule) {
    const RegularizedProfile prof =
        solve_regularized_shooting(metric, p, eps, r_a, r_b, u_a, u_b);
    ConvergenceRow row;
    row.eps = eps;
    for (double r : rs) {
      row.c0_error = std::max(row.c0_error, std::abs(prof.ue_at(r) - reference.u_at(r)));
      row.c1_error = std::max(row.c1_error, std::abs(prof.s_at(r) - reference.grad_at(r)));
    }
    rows.push_back(row);
  }
  return rows;
}

struct KatoSample {
  double r = 0.0;
  double eta = 0.0;
  double lhs = 0.0;         // |Hess u|^2
  double bound_full = 0.0;  // min((eta^2+2eta+3)/2, 2) |grad|grad u||^2
  double bound_nu = 0.0;    // ((eta^2+2eta+3)/2) <grad|grad u|, nu>^2
  double margin_full = 0.0;
  double margin_nu = 0.0;
};

namespace detail {

inline KatoSample kato_sample(const WarpedMetric& m, double r, double s, double ds, double eta) {
  KatoSample k;
  k.r = r;
  k.eta = eta;
  const double h_rad = -ds;                       // u'' with u' = -s
  const double h_tan = -s * m.dw(r) / m.w(r);     // u' w'/w
  k.lhs = h_rad * h_rad + 2.0 * h_tan * h_tan;
  const double coef = 0.5 * (eta * eta + 2.0 * eta + 3.0);
  const double grad_grad_sq = h_rad * h_rad;      // |grad|grad u||^2 = <grad|grad u|,nu>^2 radially
  k.bound_full = std::min(coef, 2.0) * grad_grad_sq;
  k.bound_nu = coef * grad_grad_sq;
  k.margin_full = k.lhs - k.bound_full;
  k.margin_nu = k.lhs - k.bound_nu;
  return k;
}

}  // namespace detail

inline std::vector<KatoSample> kato_check(const RegularizedProfile& prof,
                                          const std::vector<double>& radii) {
  std::vector<KatoSample> out;
  out.reserve(radii.size());
  for (double r : radii) {
    out.push_back(detail::kato_sample(prof.metric(), r, prof.s_at(r), prof.ds_at(r),
                                      prof.eta_at(r)));
  }
  return out;
}

inline std::vector<KatoSample> kato_check(const GreenProfile& prof,
                                          const std::vector<double>& radii) {
  std::vector<KatoSample> out;
  out.reserve(radii.size());
  const double eta0 = prof.p().p - 2.0;  // eps = 0 limit
  for (double r : radii) {
    const double s = prof.grad_at(r);
    const double ds = -prof.d2u_at(r);  // s = -u'
    out.push_back(detail::kato_sample(prof.metric(), r, s, ds, eta0));
  }
  return out;
}

inline double F_eps_at(const RegularizedProfile& prof, double t) {
  const double r = prof.invert(t);
  const double s = prof.s_at(r);
  return prof.metric().area(r) * s * s;
}

inline DerivativeResult dF_eps_at(const RegularizedProfile& prof, double t, double h0 = 4e-3) {
  const double lo = std::min(prof.u_a(), prof.u_b());
  const double hi = std::max(prof.u_a(), prof.u_b());
  const double span = h0 * 1.0625;  // widest stencil point used by the tableau
  if (!(t * std::exp(span) < hi) || !(t * std::exp(-span) > lo)) {
    throw std::domain_error("dF_eps_at: differentiation stencil leaves the annulus");
  }
  return derivative_log([&prof](double tt) { return F_eps_at(prof, tt); }, t, h0);
}

// H(t) = t^{-b} F'(t) + (b - l(5-p)/(2(3-p))) t^{-b-1} F(t)
//        - 4 pi (3-p) / ((p-1)(b-1)) t^{-b+1}
inline double H_eps(const RegularizedProfile& prof, double t, double beta, double lambda) {
  const double p = prof.p().p;
  if (!(beta > 1.0)) throw std::invalid_argument("H_eps: beta must exceed 1");
  const double F = F_eps_at(prof, t);
  const double dF = dF_eps_at(prof, t).value;
  const double coef_mid = beta - lambda * (5.0 - p) / (2.0 * (3.0 - p));
  const double coef_const = 4.0 * kPi * (3.0 - p) / ((p - 1.0) * (beta - 1.0));
  return std::pow(t, -beta) * dF + coef_mid * std::pow(t, -beta - 1.0) * F -
         coef_const * std::pow(t, -beta + 1.0);
}

// One boundary term of E: t^{-b} Int_{Sigma_t} ((p-2-eta)/(3-p)) ((eta-1)/eta) Lap u.
// The ratio (p-2-eta)/eta equals eps/s^2 identically, which removes the 0/0
// at p = 2; with eps = 0 the term vanishes.
inline double E_level_term(const RegularizedProfile& prof, double t, double beta) {
  const double p = prof.p().p;
  if (prof.eps() == 0.0) return 0.0;
  const double r = prof.invert(t);
  const double s = prof.s_at(r);
  if (s == 0.0) throw std::domain_error("E_level_term: |grad u| = 0 on the level set");
  const double eta = prof.eta_at(r);
  const double lap = prof.laplacian_at(r);
  const double ratio = prof.eps() / (s * s);
  const double integrand = ratio * (eta - 1.0) / (3.0 - p) * lap;
  return std::pow(t, -beta) * prof.metric().area(r) * integrand;
}

inline double error_term_E(const RegularizedProfile& prof, double t1, double t2, double beta) {
  if (!(t1 < t2)) throw std::invalid_argument("error_term_E: need t1 < t2");
  return E_level_term(prof, t1, beta) - E_level_term(prof, t2, beta);
}

// CSV columns: r, ue, due, c_flux_residual, eta, kato_margin_full, kato_margin_nu
inline void export_csv(const RegularizedProfile& prof, std::ostream& os) {
  CsvWriter csv(os);
  csv.header({"r", "ue", "due", "c_flux_residual", "eta", "kato_margin_full", "kato_margin_nu"});
  const auto& r = prof.grid();
  const auto& ue = prof.values();
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double s = prof.s_at(r[i]);
    const double flux = prof.metric().area(r[i]) * phi_eps(s, prof.eps(), prof.p().p) * s;
    const double resid = (prof.c_flux() != 0.0) ? flux / prof.c_flux() - 1.0 : flux;
    const KatoSample k = detail::kato_sample(prof.metric(), r[i], s, prof.ds_at(r[i]),
                                             prof.eta_at(r[i]));
    csv.row({r[i], ue[i], -s, resid, k.eta, k.margin_full, k.margin_nu});
  }
}

}  // namespace pgreen
