#pragma once

// Rotationally symmetric 3-metrics g = dr^2 + w(r)^2 g_{S^2} and the
// curvature / level-sphere quantities derived from the warp function.

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pgreen/numerics.hpp"

namespace pgreen {

// Exponent of the p-Laplacian. The range is 1 < p <= 2 unless the caller
// explicitly opts into 1 < p < 3 (smooth regime).
struct PParam {
  double p = 2.0;
  bool smooth_override = false;

  PParam() = default;
  explicit PParam(double p_, bool smooth_override_ = false)
      : p(p_), smooth_override(smooth_override_) {
    const double hi = smooth_override ? 3.0 : 2.0;
    const bool ok = smooth_override ? (p > 1.0 && p < 3.0) : (p > 1.0 && p <= 2.0);
    if (!ok) {
      throw std::invalid_argument("PParam: p = " + std::to_string(p) +
                                  " outside (1, " + std::to_string(hi) + "]");
    }
  }

  // c_p = (3 - p)/(p - 1), finite and positive on the admissible range.
  double cp() const { return (3.0 - p) / (p - 1.0); }
};

enum class MetricFamily { euclidean, power_cap, sphere, hyperbolic, custom_table };

inline std::string family_name(MetricFamily f) {
  switch (f) {
    case MetricFamily::euclidean: return "euclidean";
    case MetricFamily::power_cap: return "power_cap";
    case MetricFamily::sphere: return "sphere";
    case MetricFamily::hyperbolic: return "hyperbolic";
    case MetricFamily::custom_table: return "custom_table";
  }
  return "unknown";
}

inline MetricFamily family_from_name(const std::string& name) {
  if (name == "euclidean") return MetricFamily::euclidean;
  if (name == "power_cap") return MetricFamily::power_cap;
  if (name == "sphere") return MetricFamily::sphere;
  if (name == "hyperbolic") return MetricFamily::hyperbolic;
  if (name == "custom_table") return MetricFamily::custom_table;
  throw std::invalid_argument("unknown metric family: " + name);
}

namespace detail {

// Cap construction: w = r up to the transition radius T, then the log-slope
// of w' ramps from 0 to alpha-1 over a smoothstep window in log r, after
// which w is exactly a*r^alpha + b. The ramp keeps w C^2 with w'' <= 0 and
// 0 < w' <= 1 everywhere.
struct PowerCapShape {
  double alpha = 0.8;
  double transition = 2.0;
  double log_width = 0.6931471805599453;  // transition zone [T, 2T] in log r
  double u_t = 0.0;                       // log(transition)
  double r_end = 0.0;                     // transition * exp(log_width)
  double w_end = 0.0;                     // w(r_end), fixed at construction
  double a_coef = 0.0;                    // far field w = a r^alpha + b
  double b_coef = 0.0;

  // integral of the smoothstep from u_t to u, in units of log r
  double ramp_integral(double u) const {
    if (u <= u_t) return 0.0;
    const double s = std::min((u - u_t) / log_width, 1.0);
    const double base = log_width * (s * s * s - 0.5 * s * s * s * s);
    return (u <= u_t + log_width) ? base : 0.5 * log_width + (u - u_t - log_width);
  }

  double smoothstep(double u) const {
    if (u <= u_t) return 0.0;
    if (u >= u_t + log_width) return 1.0;
    const double s = (u - u_t) / log_width;
    return s * s * (3.0 - 2.0 * s);
  }

  double dw(double r) const {
    if (r <= transition) return 1.0;
    return std::exp((alpha - 1.0) * ramp_integral(std::log(r)));
  }

  double d2w(double r) const {
    if (r <= transition) return 0.0;
    return dw(r) * (alpha - 1.0) * smoothstep(std::log(r)) / r;
  }

  double w(double r) const {
    if (r <= transition) return r;
    if (r >= r_end) return a_coef * std::pow(r, alpha) + b_coef;
    // short smooth panel; fixed-order quadrature is exact to rounding
    const double u = std::log(r);
    auto integrand = [this](double x) { return std::exp((alpha - 1.0) * ramp_integral(x) + x); };
    return transition + integrate_fixed(integrand, u_t, u);
  }

  void finalize() {
    u_t = std::log(transition);
    r_end = transition * std::exp(log_width);
    const double r0 = transition * std::exp(0.5 * log_width);
    a_coef = std::pow(r0, 1.0 - alpha) / alpha;
    auto integrand = [this](double x) { return std::exp((alpha - 1.0) * ramp_integral(x) + x); };
    w_end = transition + integrate_fixed(integrand, u_t, u_t + log_width);
    b_coef = w_end - a_coef * std::pow(r_end, alpha);
  }
};

// Natural cubic spline for table-defined warp functions.
class CubicSpline {
 public:
  CubicSpline(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 3) throw std::invalid_argument("custom_table: need at least 3 samples");
    for (std::size_t i = 1; i < n; ++i) {
      if (!(x_[i] > x_[i - 1])) throw std::invalid_argument("custom_table: radii must be strictly increasing");
    }
    std::vector<double> sub(n, 0.0), diag(n, 1.0), super(n, 0.0), rhs(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x_[i] - x_[i - 1];
      const double h1 = x_[i + 1] - x_[i];
      sub[i] = h0;
      diag[i] = 2.0 * (h0 + h1);
      super[i] = h1;
      rhs[i] = 3.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    }
    c_ = solve_tridiagonal(sub, diag, super, rhs);
    b_.resize(n - 1);
    d_.resize(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double h = x_[i + 1] - x_[i];
      b_[i] = (y_[i + 1] - y_[i]) / h - h * (2.0 * c_[i] + c_[i + 1]) / 3.0;
      d_[i] = (c_[i + 1] - c_[i]) / (3.0 * h);
    }
  }

  double x_min() const { return x_.front(); }
  double x_max() const { return x_.back(); }

  double eval(double x, int deriv) const {
    std::size_t i = segment(x);
    const double t = x - x_[i];
    switch (deriv) {
      case 0: return y_[i] + t * (b_[i] + t * (c_[i] + t * d_[i]));
      case 1: return b_[i] + t * (2.0 * c_[i] + 3.0 * t * d_[i]);
      default: return 2.0 * c_[i] + 6.0 * t * d_[i];
    }
  }

 private:
  std::size_t segment(double x) const {
    if (x < x_.front() || x > x_.back()) throw std::domain_error("custom_table: radius outside table");
    std::size_t lo = 0, hi = x_.size() - 1;
    while (hi - lo > 1) {
      const std::size_t mid = (lo + hi) / 2;
      (x_[mid] <= x) ? lo = mid : hi = mid;
    }
    return lo;
  }

  std::vector<double> x_, y_, b_, c_, d_;
};

}  // namespace detail

class WarpedMetric {
 public:
  double w(double r) const {
    check_domain(r);
    switch (family_) {
      case MetricFamily::euclidean: return r;
      case MetricFamily::sphere: return std::sin(r);
      case MetricFamily::hyperbolic: return std::sinh(r);
      case MetricFamily::power_cap: return cap_.w(r);
      case MetricFamily::custom_table: return table_->eval(r, 0);
    }
    return r;
  }

  double dw(double r) const {
    check_domain(r);
    switch (family_) {
      case MetricFamily::euclidean: return 1.0;
      case MetricFamily::sphere: return std::cos(r);
      case MetricFamily::hyperbolic: return std::cosh(r);
      case MetricFamily::power_cap: return cap_.dw(r);
      case MetricFamily::custom_table: return table_->eval(r, 1);
    }
    return 1.0;
  }

  double d2w(double r) const {
    check_domain(r);
    switch (family_) {
      case MetricFamily::euclidean: return 0.0;
      case MetricFamily::sphere: return -std::sin(r);
      case MetricFamily::hyperbolic: return std::sinh(r);
      case MetricFamily::power_cap: return cap_.d2w(r);
      case MetricFamily::custom_table: return table_->eval(r, 2);
    }
    return 0.0;
  }

  // A(r) = 4 pi w(r)^2, area of the geodesic r-sphere
  double area(double r) const { return 4.0 * kPi * sqr(w(r)); }
  double darea(double r) const { return 8.0 * kPi * w(r) * dw(r); }

  double r_max() const { return r_max_; }
  double r_min() const { return r_min_; }
  bool pole_complete() const { return pole_complete_; }
  MetricFamily family() const { return family_; }
  const std::map<std::string, double>& params() const { return params_; }

  // exact far-field exponent of w, when the family defines one
  std::optional<double> asymptotic_exponent() const {
    switch (family_) {
      case MetricFamily::euclidean: return 1.0;
      case MetricFamily::power_cap: return cap_.alpha;
      default: return std::nullopt;
    }
  }

  std::string id() const {
    std::ostringstream os;
    os << family_name(family_);
    if (family_ == MetricFamily::power_cap) {
      os << "_a" << params_.at("alpha") << "_t" << params_.at("transition");
    }
    return os.str();
  }

 private:
  friend WarpedMetric make_metric(MetricFamily, const std::map<std::string, double>&);
  friend WarpedMetric make_metric_from_table(const std::vector<double>&, const std::vector<double>&, bool);

  void check_domain(double r) const {
    if (!(r > r_min_) || !(r < r_max_)) {
      throw std::domain_error("radius " + std::to_string(r) + " outside metric domain");
    }
  }

  MetricFamily family_ = MetricFamily::euclidean;
  std::map<std::string, double> params_;
  detail::PowerCapShape cap_;
  std::shared_ptr<const detail::CubicSpline> table_;
  double r_max_ = std::numeric_limits<double>::infinity();
  double r_min_ = 0.0;
  bool pole_complete_ = true;
};

inline WarpedMetric make_metric(MetricFamily family,
                                const std::map<std::string, double>& params = {}) {
  WarpedMetric m;
  m.family_ = family;
  m.params_ = params;
  switch (family) {
    case MetricFamily::euclidean:
    case MetricFamily::hyperbolic:
      break;
    case MetricFamily::sphere:
      m.r_max_ = kPi;
      break;
    case MetricFamily::power_cap: {
      auto need = [&params](const char* key) {
        auto it = params.find(key);
        if (it == params.end()) {
          throw std::invalid_argument(std::string("power_cap: missing parameter '") + key + "'");
        }
        return it->second;
      };
      detail::PowerCapShape cap;
      cap.alpha = need("alpha");
      cap.transition = need("transition");
      const double p = need("p");
      if (auto it = params.find("log_width"); it != params.end()) cap.log_width = it->second;
      if (!(cap.transition > 0.0) || !(cap.log_width > 0.0)) {
        throw std::invalid_argument("power_cap: transition and log_width must be positive");
      }
      // alpha below (p-1)/2 loses non-parabolicity; alpha >= 1 loses the cap
      const double alpha_lo = (p - 1.0) / 2.0;
      if (!(cap.alpha > alpha_lo) || !(cap.alpha < 1.0)) {
        throw std::invalid_argument("power_cap: alpha must lie in ((p-1)/2, 1) for p = " +
                                    std::to_string(p));
      }
      cap.finalize();
      m.cap_ = cap;
      break;
    }
    case MetricFamily::custom_table:
      throw std::invalid_argument("custom_table metrics are built from samples; use make_metric_from_table");
  }
  return m;
}

inline WarpedMetric make_metric_from_table(const std::vector<double>& radii,
                                           const std::vector<double>& warp,
                                           bool pole_complete = false) {
  if (radii.size() != warp.size()) throw std::invalid_argument("custom_table: size mismatch");
  for (double v : warp) {
    if (!(v > 0.0)) throw std::invalid_argument("custom_table: warp values must be positive");
  }
  WarpedMetric m;
  m.family_ = MetricFamily::custom_table;
  m.table_ = std::make_shared<detail::CubicSpline>(radii, warp);
  m.r_min_ = radii.front();
  m.r_max_ = radii.back();
  m.pole_complete_ = pole_complete;
  return m;
}

struct CurvatureSample {
  double r = 0.0;
  double R_scalar = 0.0;
  double ric_radial = 0.0;
  double ric_tangential = 0.0;
  double H_sphere = 0.0;
  double area = 0.0;
};

// Curvature of g = dr^2 + w^2 g_{S^2}: sectional curvatures are
// K_rad = -w''/w (radial planes) and K_sph = (1 - w'^2)/w^2 (tangent plane).
inline CurvatureSample curvature_at(const WarpedMetric& m, double r) {
  const double w = m.w(r);
  if (!(w > 0.0)) throw std::domain_error("curvature_at: w(r) <= 0");
  const double w1 = m.dw(r);
  const double w2 = m.d2w(r);
  const double k_rad = -w2 / w;
  const double k_sph = (1.0 - w1 * w1) / (w * w);
  CurvatureSample s;
  s.r = r;
  s.R_scalar = 2.0 * (2.0 * k_rad + k_sph);
  s.ric_radial = 2.0 * k_rad;
  s.ric_tangential = k_rad + k_sph;
  s.H_sphere = 2.0 * w1 / w;
  s.area = 4.0 * kPi * w * w;
  return s;
}

struct RadialHessian {
  double h_rad = 0.0;  // frame component along the radial direction
  double h_tan = 0.0;  // the two equal tangential components
};

// Hessian of a radial function f in an orthonormal frame: diag(f'', f'w'/w, f'w'/w).
inline RadialHessian hessian_radial(const WarpedMetric& m, double df, double d2f, double r) {
  RadialHessian h;
  h.h_rad = d2f;
  h.h_tan = df * m.dw(r) / m.w(r);
  return h;
}

inline double laplacian_radial(const WarpedMetric& m, double df, double d2f, double r) {
  const RadialHessian h = hessian_radial(m, df, d2f, r);
  return h.h_rad + 2.0 * h.h_tan;
}

struct NonparabolicityResult {
  bool exists = false;
  double tail_integral = std::numeric_limits<double>::quiet_NaN();
  double fitted_exponent = std::numeric_limits<double>::quiet_NaN();  // w ~ r^m at infinity
};

namespace detail {

// Largest radius <= r_hi where w stays in a numerically safe band; metrics
// with exponentially growing warp overflow double precision far out.
inline double finite_warp_radius(const WarpedMetric& m, double r_hi, double r_lo) {
  while (r_hi > 4.0 * r_lo) {
    const double w = m.w(r_hi);
    if (std::isfinite(w) && w < 1e100) return r_hi;
    r_hi /= 4.0;
  }
  return r_hi;
}

// Far-field exponent of w from a log-log fit over the top decade of [r0, r1].
inline PowerFit fit_warp_exponent(const WarpedMetric& m, double r1) {
  const int n = 33;
  std::vector<double> rs = logspace(r1 / 10.0, r1, n);
  std::vector<double> ws(n);
  for (int i = 0; i < n; ++i) ws[i] = m.w(rs[i]);
  return fit_power_law(rs, ws);
}

// Integral of exp(log_q(r)) over [r_cut, infinity) where q ~ coef * r^{-m_q},
// m_q > 1. The substitution r = r_cut * y^{-1/(m_q-1)} maps the tail to
// (0, 1] with an integrand tending to a constant at y -> 0. The integrand is
// assembled in log space: for m_q near 1 the factors q and y^{-k-1} leave
// double range individually while their product stays moderate. Below y_star
// the radius itself leaves double range; there q is a pure power to machine
// precision and the remaining strip integrates to q(r_cut) * y_star.
template <class LogQ>
double tail_integral_transformed(LogQ&& log_q, double r_cut, double m_q, double abs_tol = 0.0) {
  if (!(m_q > 1.0)) throw std::invalid_argument("tail integral diverges: exponent <= 1");
  const double k = 1.0 / (m_q - 1.0);
  double y_star = std::pow(r_cut / 1e250, m_q - 1.0);
  if (!(y_star >= 1e-280)) y_star = 1e-280;
  auto g = [&](double y) {
    const double r = r_cut * std::pow(y, -k);
    if (!std::isfinite(r)) return 0.0;
    const double lg = log_q(r) - (k + 1.0) * std::log(y);
    return std::isfinite(lg) ? std::exp(lg) : 0.0;
  };
  QuadratureOptions opts;
  opts.rel_tol = 1e-13;
  opts.abs_tol = abs_tol / std::max(k * r_cut, 1e-300);
  const double num = integrate(g, y_star, 1.0, opts);
  const double patch = std::exp(log_q(r_cut)) * y_star;
  return k * r_cut * (num + patch);
}

// log of the p-Green gradient integrand A(r)^{-1/(p-1)}; -inf when the warp
// overflows, which only happens where the contribution is zero anyway.
inline double log_green_integrand(const WarpedMetric& m, double p, double r) {
  return -(std::log(4.0 * kPi) + 2.0 * std::log(m.w(r))) / (p - 1.0);
}

}  // namespace detail

// Existence of the radial p-Green function: the tail integral of
// A(s)^{-1/(p-1)} converges iff the asymptotic exponent of w exceeds (p-1)/2.
inline NonparabolicityResult nonparabolicity_check(const WarpedMetric& m, const PParam& p,
                                                   double r0, double r_far = 0.0) {
  if (!(r0 > m.r_min()) || !(r0 < m.r_max())) throw std::domain_error("nonparabolicity_check: r0 out of domain");
  NonparabolicityResult res;
  if (std::isfinite(m.r_max())) {
    res.exists = false;  // bounded exhaustion
    return res;
  }
  if (r_far <= 0.0) r_far = std::max(1e6, 1e4 * r0);
  r_far = detail::finite_warp_radius(m, r_far, r0);
  const PowerFit fit = detail::fit_warp_exponent(m, r_far);
  res.fitted_exponent = fit.exponent;
  // the exact family exponent, where defined, keeps the tail transform well
  // conditioned; the fitted value decides only marginally differently
  const double w_exp = m.asymptotic_exponent().value_or(fit.exponent);
  const double q_exponent = 2.0 * w_exp / (p.p - 1.0);
  res.exists = q_exponent > 1.0;
  if (res.exists) {
    auto q = [&m, &p](double r) { return std::pow(m.area(r), -1.0 / (p.p - 1.0)); };
    auto log_q = [&m, &p](double r) { return detail::log_green_integrand(m, p.p, r); };
    QuadratureOptions opts;
    opts.rel_tol = 1e-13;
    const double head = integrate_logspace(q, r0, r_far, opts);
    res.tail_integral =
        head + detail::tail_integral_transformed(log_q, r_far, q_exponent, 1e-13 * head);
  }
  return res;
}

struct CurvatureCertificate {
  double r_scalar_min = 0.0;
  double ric_min = 0.0;           // min over both Ricci eigenvalues on the scan
  double dw_max = 0.0;
  double d2w_max = -std::numeric_limits<double>::infinity();
  bool scalar_nonnegative = false;
  double ricci_lower_k = 0.0;     // Ric >= -k certified with this k
};

// Grid scan of the curvature bounds the comparison theorems assume.
inline CurvatureCertificate certify_curvature(const WarpedMetric& m, int n = 1024,
                                              double r_lo = 1e-4, double r_hi = 0.0) {
  if (r_hi <= 0.0) r_hi = std::isfinite(m.r_max()) ? m.r_max() * (1.0 - 1e-9) : 1e6;
  if (m.r_min() > 0.0) r_lo = std::max(r_lo, m.r_min() * (1.0 + 1e-12));
  r_hi = detail::finite_warp_radius(m, r_hi, r_lo);
  CurvatureCertificate cert;
  cert.r_scalar_min = std::numeric_limits<double>::infinity();
  cert.ric_min = std::numeric_limits<double>::infinity();
  for (double r : logspace(r_lo, r_hi, n)) {
    const CurvatureSample s = curvature_at(m, r);
    cert.r_scalar_min = std::min(cert.r_scalar_min, s.R_scalar);
    cert.ric_min = std::min({cert.ric_min, s.ric_radial, s.ric_tangential});
    cert.dw_max = std::max(cert.dw_max, m.dw(r));
    cert.d2w_max = std::max(cert.d2w_max, m.d2w(r));
  }
  cert.scalar_nonnegative = cert.r_scalar_min >= -1e-12;
  cert.ricci_lower_k = std::max(0.0, -cert.ric_min);
  return cert;
}

}  // namespace pgreen
