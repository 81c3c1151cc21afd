#pragma once

// Radial p-Green profiles. With unit flux through every level sphere the
// gradient is pinned pointwise, u'(r) = -A(r)^{-1/(p-1)}, and the profile
// itself is the tail integral u(r) = int_r^inf A(s)^{-1/(p-1)} ds. Values at
// arbitrary radii are recovered by quadrature against precomputed grid
// anchors, so no interpolation error enters any downstream check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <ostream>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgreen/geometry.hpp"
#include "pgreen/io.hpp"
#include "pgreen/numerics.hpp"

namespace pgreen {

// Pole model mu(r) = (4 pi)^{-1/(p-1)} ((p-1)/(3-p)) r^{-(3-p)/(p-1)}.
inline double mu_model(const PParam& p, double r) {
  if (!(r > 0.0)) throw std::domain_error("mu_model: r must be positive");
  const double cp = p.cp();
  return std::pow(4.0 * kPi, -1.0 / (p.p - 1.0)) / cp * std::pow(r, -cp);
}

inline double mu_model_d1(const PParam& p, double r) {
  if (!(r > 0.0)) throw std::domain_error("mu_model_d1: r must be positive");
  return -std::pow(4.0 * kPi, -1.0 / (p.p - 1.0)) * std::pow(r, -2.0 / (p.p - 1.0));
}

inline double mu_model_d2(const PParam& p, double r) {
  if (!(r > 0.0)) throw std::domain_error("mu_model_d2: r must be positive");
  const double e = 2.0 / (p.p - 1.0);
  return e * std::pow(4.0 * kPi, -1.0 / (p.p - 1.0)) * std::pow(r, -e - 1.0);
}

struct GridSpec {
  int n = 1024;
  double r_min = 1e-4;
  double r_cut = 0.0;  // 0 = choose automatically
};

class ParabolicMetricError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GreenProfile {
 public:
  const WarpedMetric& metric() const { return metric_; }
  const PParam& p() const { return p_; }
  const std::vector<double>& grid() const { return r_; }
  const std::vector<double>& values() const { return u_; }
  const std::vector<double>& gradients() const { return du_; }
  double r_min() const { return r_.front(); }
  double r_cut() const { return r_.back(); }
  double tail_estimate() const { return tail_; }
  double fitted_exponent() const { return warp_exponent_; }
  double flux_norm() const { return 1.0; }

  // value range covered by the computed profile (u is decreasing in r)
  double u_min() const { return u_.back(); }
  double u_max() const { return u_.front(); }

  double grad_at(double r) const {  // s = |u'|
    return std::pow(metric_.area(r), -1.0 / (p_.p - 1.0));
  }

  double du_at(double r) const { return -grad_at(r); }

  double d2u_at(double r) const {
    const double s = grad_at(r);
    return s * metric_.darea(r) / ((p_.p - 1.0) * metric_.area(r));
  }

  double u_at(double r) const {
    if (!(r >= r_.front()) || !(r <= r_.back())) {
      throw std::domain_error("GreenProfile::u_at: radius outside computed range");
    }
    const std::size_t i = anchor_above(r);
    if (r_[i] == r) return u_[i];
    QuadratureOptions opts;
    opts.rel_tol = 1e-13;
    return u_[i] + integrate_logspace([this](double s) { return grad_at(s); }, r, r_[i], opts);
  }

  double area_at(double r) const { return metric_.area(r); }

 private:
  friend GreenProfile solve_green(const WarpedMetric&, const PParam&, const GridSpec&);

  std::size_t anchor_above(double r) const {
    const auto it = std::lower_bound(r_.begin(), r_.end(), r);
    return static_cast<std::size_t>(it - r_.begin());
  }

  WarpedMetric metric_;
  PParam p_;
  std::vector<double> r_, u_, du_;
  double tail_ = 0.0;
  double warp_exponent_ = 1.0;
};

inline GreenProfile solve_green(const WarpedMetric& metric, const PParam& p,
                                const GridSpec& spec = {}) {
  if (!metric.pole_complete()) {
    throw std::invalid_argument("solve_green: metric is not pole-complete");
  }
  const NonparabolicityResult np = nonparabolicity_check(metric, p, std::max(spec.r_min, 1.0));
  if (!np.exists) {
    throw ParabolicMetricError("parabolic metric: no positive p-Green function");
  }

  auto q = [&metric, &p](double r) { return std::pow(metric.area(r), -1.0 / (p.p - 1.0)); };
  auto log_q = [&metric, &p](double r) { return detail::log_green_integrand(metric, p.p, r); };
  QuadratureOptions opts;
  opts.rel_tol = 1e-13;

  // Grow r_cut until the analytic tail is a negligible fraction of the
  // profile's largest value, so truncation never pollutes a level query.
  // Steeply decaying integrands (fast warp growth at small p) cap r_cut
  // where q would leave the safely-normal double range.
  auto q_representable = [&q](double r) {
    const double v = q(r);
    return std::isfinite(v) && v >= 1e-250;
  };
  double r_cut = spec.r_cut > 0.0
                     ? spec.r_cut
                     : detail::finite_warp_radius(metric, std::max(100.0, 32.0 * spec.r_min),
                                                  spec.r_min);
  while (spec.r_cut <= 0.0 && !q_representable(r_cut) && r_cut > 4.0 * spec.r_min) {
    r_cut *= 0.5;
  }
  double head = integrate_logspace(q, spec.r_min, r_cut, opts);
  double tail = 0.0, q_exponent = 0.0;
  for (int attempt = 0;; ++attempt) {
    const double w_exp =
        metric.asymptotic_exponent().value_or(detail::fit_warp_exponent(metric, r_cut).exponent);
    q_exponent = 2.0 * w_exp / (p.p - 1.0);
    // the tail matters down to 1e-12 of the head, hence 1e-24 head absolute
    tail = detail::tail_integral_transformed(log_q, r_cut, q_exponent, 1e-24 * head);
    if (tail <= 1e-12 * (head + tail)) break;
    const double next = r_cut * 4.0;
    if (spec.r_cut > 0.0 || attempt >= 40 || !q_representable(next)) {
      throw QuadratureError("solve_green: could not shrink tail below 1e-12 of u(r_min)");
    }
    head += integrate_logspace(q, r_cut, next, opts);
    r_cut = next;
  }

  GreenProfile prof;
  prof.metric_ = metric;
  prof.p_ = p;
  prof.warp_exponent_ = (p.p - 1.0) * q_exponent / 2.0;
  prof.tail_ = tail;
  prof.r_ = logspace(spec.r_min, r_cut, std::max(spec.n, 16));
  const std::size_t n = prof.r_.size();
  prof.u_.assign(n, 0.0);
  prof.du_.assign(n, 0.0);
  prof.u_[n - 1] = tail;
  for (std::size_t i = n - 1; i-- > 0;) {
    prof.u_[i] = prof.u_[i + 1] + integrate_logspace(q, prof.r_[i], prof.r_[i + 1], opts);
  }
  for (std::size_t i = 0; i < n; ++i) {
    prof.du_[i] = -q(prof.r_[i]);
    // unit-flux identity |u'|^{p-1} A = 1, exact up to pow() rounding
    const double flux = std::pow(-prof.du_[i], p.p - 1.0) * metric.area(prof.r_[i]);
    if (std::abs(flux - 1.0) > 1e-12) {
      throw QuadratureError("solve_green: flux normalization violated at r = " +
                            std::to_string(prof.r_[i]));
    }
    if (i > 0 && !(prof.u_[i] < prof.u_[i - 1])) {
      throw QuadratureError("solve_green: profile not strictly decreasing");
    }
  }
  return prof;
}

// Radius of the level set {u = t}, by bracketed Newton in log r.
inline double invert_level(const GreenProfile& prof, double t) {
  if (!(t > prof.u_min()) || !(t < prof.u_max())) {
    throw std::domain_error("invert_level: level outside computed range");
  }
  const auto& u = prof.values();
  const auto& r = prof.grid();
  // u is decreasing: locate j with u[j] >= t > u[j+1]
  const auto it = std::lower_bound(u.rbegin(), u.rend(), t);
  const std::size_t k = static_cast<std::size_t>(it - u.rbegin());  // >= 1 by the range check
  const std::size_t j = u.size() - 1 - k;
  const double xa = std::log(r[j]);
  const double xb = std::log(r[j + 1]);
  auto f = [&prof, t](double x) { return t - prof.u_at(std::exp(x)); };
  auto df = [&prof](double x) {
    const double rr = std::exp(x);
    return -prof.du_at(rr) * rr;
  };
  RootOptions ropts;
  ropts.x_rel_tol = 1e-15;
  ropts.f_tol = 1e-13 * t;
  const double x = newton_monotone(f, df, xa, xb, 0.5 * (xa + xb), ropts);
  return std::exp(x);
}

struct LevelFunctionals {
  double t = 0.0;
  double r_t = 0.0;
  double F = 0.0;
  double area = 0.0;
  double flux = 0.0;
  double M = 0.0;  // t^{-1} F - 4 pi c_p^2 t
};

inline LevelFunctionals level_functionals(const GreenProfile& prof, double t) {
  LevelFunctionals lf;
  lf.t = t;
  lf.r_t = invert_level(prof, t);
  const double area = prof.area_at(lf.r_t);
  const double s = prof.grad_at(lf.r_t);
  lf.area = area;
  lf.F = area * s * s;
  lf.flux = area * std::pow(s, prof.p().p - 1.0);
  const double cp = prof.p().cp();
  lf.M = lf.F / t - 4.0 * kPi * cp * cp * t;
  return lf;
}

// Log-spaced probe levels strictly inside the computed value range, with an
// optional seeded jitter for property-style sweeps.
inline std::vector<double> default_levels(const GreenProfile& prof, int count,
                                          double margin_factor = 1e3, double jitter = 0.0,
                                          std::uint64_t seed = 0) {
  const double lo = prof.u_min() * margin_factor;
  const double hi = prof.u_max() / margin_factor;
  if (!(lo < hi)) throw std::invalid_argument("default_levels: margin leaves empty level range");
  std::vector<double> t = logspace(lo, hi, count);
  if (jitter > 0.0) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(-0.5, 0.5);
    const double dlog = (std::log(hi) - std::log(lo)) / (count - 1);
    for (int i = 1; i + 1 < count; ++i) t[i] *= std::exp(jitter * dlog * uni(rng));
    std::sort(t.begin(), t.end());
  }
  return t;
}

struct AsymptoticsRow {
  double r = 0.0;
  double dev_value = 0.0;     // |u - mu| r^{c_p}
  double dev_gradient = 0.0;  // |u' - mu'| r^{2/(p-1)}
  double dev_hessian = 0.0;   // Frobenius deviation from the model Hessian, scaled
};

// Scaled deviations from the pole model over the decade above r_min, ordered
// with decreasing radius so decay toward the pole reads top to bottom.
inline std::vector<AsymptoticsRow> asymptotics_check(const GreenProfile& prof) {
  const WarpedMetric& m = prof.metric();
  const PParam& p = prof.p();
  const double r_probe = 10.0 * prof.r_min();
  if (!m.pole_complete() || std::abs(m.w(r_probe) / r_probe - 1.0) > 1e-4 ||
      std::abs(m.dw(r_probe) - 1.0) > 1e-4) {
    throw std::invalid_argument("asymptotics_check: metric is not Euclidean at the pole");
  }
  const double cp = p.cp();
  const double e1 = 2.0 / (p.p - 1.0);
  const double e2 = (p.p + 1.0) / (p.p - 1.0);
  std::vector<AsymptoticsRow> rows;
  const auto& grid = prof.grid();
  for (std::size_t k = grid.size(); k-- > 0;) {
    const double r = grid[k];
    if (r > r_probe) continue;
    AsymptoticsRow row;
    row.r = r;
    row.dev_value = std::abs(prof.u_at(r) - mu_model(p, r)) * std::pow(r, cp);
    row.dev_gradient = std::abs(prof.du_at(r) - mu_model_d1(p, r)) * std::pow(r, e1);
    const double d_rad = prof.d2u_at(r) - mu_model_d2(p, r);
    const double d_tan = prof.du_at(r) * m.dw(r) / m.w(r) - mu_model_d1(p, r) / r;
    row.dev_hessian = std::sqrt(d_rad * d_rad + 2.0 * d_tan * d_tan) * std::pow(r, e2);
    rows.push_back(row);  // grid walked downward: rows run from 10 r_min to r_min
  }
  return rows;
}

// Nonincreasing toward the pole, allowing a noise floor for exact models.
inline bool asymptotics_column_decreasing(const std::vector<AsymptoticsRow>& rows,
                                          double AsymptoticsRow::* col, double floor_abs) {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double prev = rows[i - 1].*col;
    const double cur = rows[i].*col;
    if (cur <= floor_abs && prev <= floor_abs) continue;
    if (!(cur <= prev * (1.0 + 1e-9))) return false;
  }
  return true;
}

// CSV columns: r, u, du, A, F, flux, M
inline void export_csv(const GreenProfile& prof, std::ostream& os) {
  CsvWriter csv(os);
  csv.header({"r", "u", "du", "A", "F", "flux", "M"});
  const double cp = prof.p().cp();
  const auto& r = prof.grid();
  const auto& u = prof.values();
  const auto& du = prof.gradients();
  for (std::size_t i = 0; i < r.size(); ++i) {
    const double area = prof.area_at(r[i]);
    const double s = -du[i];
    const double F = area * s * s;
    const double flux = area * std::pow(s, prof.p().p - 1.0);
    const double M = F / u[i] - 4.0 * kPi * cp * cp * u[i];
    csv.row({r[i], u[i], du[i], area, F, flux, M});
  }
}

}  // namespace pgreen
