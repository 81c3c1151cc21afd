#pragma once

// Small numerical toolkit shared by the radial solvers: adaptive quadrature,
// safeguarded scalar root finding, Richardson-extrapolated differentiation,
// log-log power fits and a tridiagonal solve.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace pgreen {

inline constexpr double kPi = 3.141592653589793238462643383279502884;

inline double sqr(double x) { return x * x; }

inline double rel_diff(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  if (scale == 0.0) return 0.0;
  return std::abs(a - b) / scale;
}

struct QuadratureOptions {
  double rel_tol = 1e-12;
  double abs_tol = 0.0;
  int max_depth = 18;          // bisection depth inside each panel
  double panel_length = 2.0;   // panel size for the log-space splitter
};

class QuadratureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// The Gauss-Kronrod error estimate on a panel [a, b] cannot drop below a
// rounding floor ~ eps * |I| * (1 + |a|/(b - a)): abscissa rounding alone
// produces that much apparent error on short offset panels. Panels at their
// floor are retired; splitting them only inflates the accumulated estimate.
inline constexpr double kQuadratureFloor = 4e-13;

struct QuadEstimate {
  double value = 0.0;
  double error = 0.0;
  double floor = 0.0;  // accumulated rounding floor of the panel estimates
};

// Adaptive Gauss-Kronrod on [a, b]; no convergence gate. Worst-panel-first
// bisection over single K15 rules.
template <class F>
QuadEstimate integrate_core(F&& f, double a, double b, const QuadratureOptions& opts) {
  if (a == b) return {};
  struct Panel {
    double a, b, value, err, floor;
  };
  auto eval = [&f](double lo, double hi) {
    Panel p{lo, hi, 0.0, 0.0, 0.0};
    p.value = boost::math::quadrature::gauss_kronrod<double, 15>::integrate(
        f, lo, hi, 0, 0.0, &p.err);
    // measured estimator floor: ~4 eps / length, plus an abscissa-offset term
    const double offset = std::max(std::abs(lo), std::abs(hi));
    p.floor = 2.3e-16 * std::abs(p.value) * (10.0 + 6.0 * (1.0 + offset) / (hi - lo)) + 1e-310;
    return p;
  };
  auto by_err = [](const Panel& x, const Panel& y) { return x.err < y.err; };

  std::vector<Panel> active{eval(a, b)};
  std::vector<Panel> done;
  double total = active[0].value;
  double total_err = active[0].err;
  const std::size_t cap = std::min<std::size_t>(std::size_t(1) << opts.max_depth, 8192);
  while (!active.empty() && active.size() + done.size() < cap) {
    const double tol = std::max(opts.abs_tol,
                                std::max(opts.rel_tol, kQuadratureFloor) * std::abs(total));
    if (total_err <= tol) break;
    std::pop_heap(active.begin(), active.end(), by_err);
    const Panel worst = active.back();
    active.pop_back();
    const double mid = 0.5 * (worst.a + worst.b);
    if (worst.err <= worst.floor || !(mid > worst.a && mid < worst.b)) {
      done.push_back(worst);
      continue;
    }
    const Panel left = eval(worst.a, mid);
    const Panel right = eval(mid, worst.b);
    total += left.value + right.value - worst.value;
    total_err += left.err + right.err - worst.err;
    active.push_back(left);
    std::push_heap(active.begin(), active.end(), by_err);
    active.push_back(right);
    std::push_heap(active.begin(), active.end(), by_err);
  }
  // recompute the sums; the incremental updates drift over many splits
  QuadEstimate out;
  for (const auto* bucket : {&active, &done}) {
    for (const Panel& p : *bucket) {
      out.value += p.value;
      out.error += p.err;
      out.floor += p.floor;
    }
  }
  return out;
}

template <class F>
double integrate_raw(F&& f, double a, double b, const QuadratureOptions& opts,
                     double* err_out, double* floor_out = nullptr) {
  const QuadEstimate est = integrate_core(std::forward<F>(f), a, b, opts);
  if (err_out) *err_out = est.error;
  if (floor_out) *floor_out = est.floor;
  return est.value;
}

inline void check_quadrature(const QuadEstimate& est, double a, double b,
                             const QuadratureOptions& opts) {
  const double tol = std::max({opts.abs_tol,
                               std::max(opts.rel_tol, kQuadratureFloor) * std::abs(est.value),
                               est.floor});
  if (!(est.error <= std::max(tol * 10.0, 1e-300)) && std::abs(est.value) > 0.0) {
    std::ostringstream os;
    os << "quadrature failed to meet tolerance: error " << est.error << " for value "
       << est.value << " on [" << a << ", " << b << "]";
    throw QuadratureError(os.str());
  }
}

// Adaptive Gauss-Kronrod on [a, b]. Throws QuadratureError if the error
// estimate misses the requested tolerance by more than a factor of 10.
template <class F>
double integrate(F&& f, double a, double b, const QuadratureOptions& opts = {},
                 double* err_out = nullptr) {
  const QuadEstimate est = integrate_core(std::forward<F>(f), a, b, opts);
  if (err_out) *err_out = est.error;
  check_quadrature(est, a, b, opts);
  return est.value;
}

// Integrate f over [a, b], 0 < a < b, working in x = log r and splitting into
// panels of bounded log-length before refining each panel adaptively.
template <class F>
double integrate_logspace(F&& f, double a, double b, const QuadratureOptions& opts = {},
                          double* err_out = nullptr) {
  if (!(a > 0.0) || !(b > 0.0)) throw std::invalid_argument("integrate_logspace: bounds must be positive");
  if (a == b) {
    if (err_out) *err_out = 0.0;
    return 0.0;
  }
  const double sign = (a < b) ? 1.0 : -1.0;
  const double xa = std::log(std::min(a, b));
  const double xb = std::log(std::max(a, b));
  const int n_panels = std::max(1, static_cast<int>(std::ceil((xb - xa) / opts.panel_length)));
  const double h = (xb - xa) / n_panels;
  auto g = [&f](double x) {
    const double r = std::exp(x);
    return f(r) * r;
  };
  QuadEstimate total;
  for (int k = 0; k < n_panels; ++k) {
    const QuadEstimate est = integrate_core(g, xa + k * h, xa + (k + 1) * h, opts);
    total.value += est.value;
    total.error += est.error;
    total.floor += est.floor;
  }
  if (err_out) *err_out = total.error;
  // gate on the whole integral: single panels of a long positive integrand
  // can be negligibly small without being accurate in their own relative terms
  check_quadrature(total, xa, xb, opts);
  return sign * total.value;
}

// Fixed-order Gauss-Legendre, for short smooth panels where adaptivity is
// unnecessary and determinism matters.
template <class F>
double integrate_fixed(F&& f, double a, double b) {
  return boost::math::quadrature::gauss<double, 30>::integrate(std::forward<F>(f), a, b);
}

class RootError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RootOptions {
  double x_rel_tol = 1e-14;
  double f_tol = 0.0;  // optional absolute residual target
  int max_iter = 200;
};

// Newton iteration on a strictly monotone function, safeguarded by a
// maintained bracket [lo, hi] with f(lo) <= 0 <= f(hi).
template <class F, class DF>
double newton_monotone(F&& f, DF&& df, double lo, double hi, double x0,
                       const RootOptions& opts = {}) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (!(flo < 0.0 && fhi > 0.0)) throw RootError("newton_monotone: invalid bracket");
  double x = std::clamp(x0, lo, hi);
  for (int it = 0; it < opts.max_iter; ++it) {
    const double fx = f(x);
    if (fx == 0.0 || (opts.f_tol > 0.0 && std::abs(fx) <= opts.f_tol)) return x;
    if (fx < 0.0) lo = x; else hi = x;
    const double d = df(x);
    double x_next = (d != 0.0) ? x - fx / d : lo + 0.5 * (hi - lo);
    if (!(x_next > lo && x_next < hi)) x_next = lo + 0.5 * (hi - lo);
    if (std::abs(x_next - x) <= opts.x_rel_tol * (std::abs(x_next) + std::abs(x)) * 0.5) {
      return x_next;
    }
    x = x_next;
  }
  if (hi - lo <= opts.x_rel_tol * std::max(std::abs(lo), std::abs(hi))) return 0.5 * (lo + hi);
  throw RootError("newton_monotone: no convergence");
}

// Bisection/secant hybrid for an increasing function without a derivative.
template <class F>
double solve_increasing(F&& f, double lo, double hi, const RootOptions& opts = {}) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (!(flo < 0.0 && fhi > 0.0)) throw RootError("solve_increasing: invalid bracket");
  for (int it = 0; it < opts.max_iter; ++it) {
    double mid = lo + (hi - lo) * (-flo) / (fhi - flo);  // secant guess
    const double safe_lo = lo + 0.25 * (hi - lo);
    const double safe_hi = hi - 0.25 * (hi - lo);
    if (!(mid > lo && mid < hi)) mid = 0.5 * (lo + hi);
    if ((it % 2) == 1) mid = std::clamp(mid, safe_lo, safe_hi);
    const double fm = f(mid);
    if (fm == 0.0) return mid;
    if (fm < 0.0) { lo = mid; flo = fm; } else { hi = mid; fhi = fm; }
    if (hi - lo <= opts.x_rel_tol * std::max(std::abs(lo), std::abs(hi))) {
      return 0.5 * (lo + hi);
    }
  }
  throw RootError("solve_increasing: no convergence");
}

struct DerivativeResult {
  double value = 0.0;
  double error = std::numeric_limits<double>::infinity();
};

// Central differences with a Richardson tableau; returns the entry with the
// smallest internal-consistency error estimate.
template <class F>
DerivativeResult derivative_richardson(F&& f, double x, double h0, int levels = 5) {
  std::vector<std::vector<double>> d(levels);
  DerivativeResult best;
  for (int k = 0; k < levels; ++k) {
    const double h = h0 / double(1 << k);
    d[k].resize(k + 1);
    d[k][0] = (f(x + h) - f(x - h)) / (2.0 * h);
    double pow4 = 1.0;
    for (int j = 1; j <= k; ++j) {
      pow4 *= 4.0;
      d[k][j] = (pow4 * d[k][j - 1] - d[k - 1][j - 1]) / (pow4 - 1.0);
      const double err = std::abs(d[k][j] - d[k][j - 1]) +
                         std::abs(d[k][j] - d[k - 1][j - 1]);
      if (err < best.error) {
        best.value = d[k][j];
        best.error = err;
      }
    }
  }
  if (levels == 1 || best.error == std::numeric_limits<double>::infinity()) {
    best.value = d[0][0];
    best.error = std::abs(best.value);
  }
  return best;
}

// d/dt f(t) computed through x = log t, so the stencil is relative to t.
template <class F>
DerivativeResult derivative_log(F&& f, double t, double h0 = 4e-3, int levels = 5) {
  if (!(t > 0.0)) throw std::invalid_argument("derivative_log: t must be positive");
  auto g = [&f, t](double x) { return f(t * std::exp(x)); };
  DerivativeResult r = derivative_richardson(g, 0.0, h0, levels);
  r.value /= t;
  r.error /= t;
  return r;
}

struct PowerFit {
  double exponent = 0.0;     // slope of log y vs log x
  double coefficient = 0.0;  // y ~ coefficient * x^exponent
  double max_residual = 0.0; // max |log y - fit| over the samples
};

inline PowerFit fit_power_law(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size() || xs.size() < 2) {
    throw std::invalid_argument("fit_power_law: need at least two samples");
  }
  const std::size_t n = xs.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  std::vector<double> lx(n), ly(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(xs[i] > 0.0) || !(ys[i] > 0.0)) {
      throw std::invalid_argument("fit_power_law: samples must be positive");
    }
    lx[i] = std::log(xs[i]);
    ly[i] = std::log(ys[i]);
    sx += lx[i]; sy += ly[i]; sxx += lx[i] * lx[i]; sxy += lx[i] * ly[i];
  }
  const double denom = n * sxx - sx * sx;
  if (denom == 0.0) throw std::invalid_argument("fit_power_law: degenerate abscissae");
  PowerFit fit;
  fit.exponent = (n * sxy - sx * sy) / denom;
  const double intercept = (sy - fit.exponent * sx) / n;
  fit.coefficient = std::exp(intercept);
  for (std::size_t i = 0; i < n; ++i) {
    fit.max_residual = std::max(fit.max_residual,
                                std::abs(ly[i] - (intercept + fit.exponent * lx[i])));
  }
  return fit;
}

// Thomas algorithm; diagonals (sub, diag, super) are modified in place.
inline std::vector<double> solve_tridiagonal(std::vector<double> sub, std::vector<double> diag,
                                             std::vector<double> super, std::vector<double> rhs) {
  const std::size_t n = diag.size();
  if (sub.size() != n || super.size() != n || rhs.size() != n) {
    throw std::invalid_argument("solve_tridiagonal: inconsistent sizes");
  }
  for (std::size_t i = 1; i < n; ++i) {
    const double m = sub[i] / diag[i - 1];
    diag[i] -= m * super[i - 1];
    rhs[i] -= m * rhs[i - 1];
  }
  std::vector<double> x(n);
  x[n - 1] = rhs[n - 1] / diag[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) {
    x[i] = (rhs[i] - super[i] * x[i + 1]) / diag[i];
  }
  return x;
}

inline std::vector<double> logspace(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw std::invalid_argument("logspace: bad range");
  std::vector<double> out(n);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) out[i] = std::exp(a + (b - a) * double(i) / double(n - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

inline std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 2) throw std::invalid_argument("linspace: need n >= 2");
  std::vector<double> out(n);
  for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * double(i) / double(n - 1);
  out.front() = lo;
  out.back() = hi;
  return out;
}

}  // namespace pgreen
