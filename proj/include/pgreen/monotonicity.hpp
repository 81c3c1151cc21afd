#pragma once

// Theorem-level checks on level-set functionals of a p-Green profile:
// the derivative bound F' <= 4 pi c_p^2 t + F/t, monotonicity of
// M(t) = F/t - 4 pi c_p^2 t, the (lambda, beta) family, the comparison
// bounds on F and Area, and the equality-case diagnostics.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pgreen/geometry.hpp"
#include "pgreen/green.hpp"
#include "pgreen/numerics.hpp"

namespace pgreen {

struct LambdaBeta {
  double p = 2.0;
  double beta = 0.0;
  double lambda = 0.0;
  bool admissible = false;
  double exact_constraint_residual = 0.0;
};

inline double lambda_beta_residual(double p, double lambda, double beta) {
  return lambda * lambda * (5.0 - p) / (4.0 * (3.0 - p)) -
         lambda * (5.0 - p) * (beta + 1.0) / (2.0 * (3.0 - p)) + beta * (beta + 1.0);
}

inline LambdaBeta make_lambda_beta(const PParam& p, double lambda, double beta) {
  LambdaBeta lb;
  lb.p = p.p;
  lb.beta = beta;
  lb.lambda = lambda;
  lb.exact_constraint_residual = std::abs(lambda_beta_residual(p.p, lambda, beta));
  const bool range_ok = beta > 1.0 && lambda > 0.0 &&
                        (5.0 - p.p) + (3.0 * p.p - 7.0) * beta >= -1e-14;
  lb.admissible = range_ok &&
                  lb.exact_constraint_residual <= 1e-12 * beta * (beta + 1.0);
  return lb;
}

// Roots of the constraint in lambda for fixed beta:
// lambda = (beta+1) -/+ sqrt((beta+1)^2 - 4 beta (beta+1) (3-p)/(5-p)).
inline std::pair<double, double> lambda_for_beta(const PParam& p, double beta) {
  const double disc = sqr(beta + 1.0) - 4.0 * beta * (beta + 1.0) * (3.0 - p.p) / (5.0 - p.p);
  if (disc < 0.0) {
    throw std::domain_error("lambda_for_beta: negative discriminant, no real admissible lambda");
  }
  const double root = std::sqrt(disc);
  return {beta + 1.0 - root, beta + 1.0 + root};
}

inline double default_beta(const PParam& p) { return 2.0 / (3.0 - p.p); }

inline LambdaBeta default_lambda_beta(const PParam& p) {
  return make_lambda_beta(p, lambda_for_beta(p, default_beta(p)).first, default_beta(p));
}

struct LevelPoint {
  double t = 0.0;
  double r_t = 0.0;
  double F = 0.0;
  double dF = 0.0;       // F'(t)
  double dF_error = 0.0; // differentiation error estimate
  double area = 0.0;
  double flux = 1.0;
  double M = 0.0;
};

struct LevelSeries {
  double p = 2.0;
  double cp = 1.0;
  std::string metric_id;
  bool in_hypothesis = true;  // scalar curvature certified nonnegative
  double r_scalar_min = 0.0;
  double ricci_lower_k = 0.0;
  int trimmed_levels = 0;
  std::vector<LevelPoint> pts;  // sorted by increasing t
};

// Evaluate the level functionals and F' (Richardson in log t) on a level
// grid, trimming levels whose differentiation stencil leaves the range.
inline LevelSeries probe_levels(const GreenProfile& prof, std::vector<double> levels,
                                double diff_step = 4e-3) {
  std::sort(levels.begin(), levels.end());
  LevelSeries out;
  out.p = prof.p().p;
  out.cp = prof.p().cp();
  out.metric_id = prof.metric().id();
  const CurvatureCertificate cert =
      certify_curvature(prof.metric(), 1024, std::max(prof.r_min(), 1e-4),
                        std::min(prof.r_cut(), 1e6));
  out.in_hypothesis = cert.scalar_nonnegative;
  out.r_scalar_min = cert.r_scalar_min;
  out.ricci_lower_k = cert.ricci_lower_k;
  const double span = diff_step * 1.0625;
  for (double t : levels) {
    if (!(t * std::exp(span) < prof.u_max()) || !(t * std::exp(-span) > prof.u_min())) {
      ++out.trimmed_levels;
      continue;
    }
    const LevelFunctionals lf = level_functionals(prof, t);
    LevelPoint pt;
    pt.t = lf.t;
    pt.r_t = lf.r_t;
    pt.F = lf.F;
    pt.area = lf.area;
    pt.flux = lf.flux;
    pt.M = lf.M;
    const DerivativeResult d = derivative_log(
        [&prof](double tt) { return level_functionals(prof, tt).F; }, t, diff_step);
    pt.dF = d.value;
    pt.dF_error = d.error;
    out.pts.push_back(pt);
  }
  return out;
}

// Series from externally supplied F (detector self-tests and injections).
inline LevelSeries synthetic_series(const PParam& p, const std::vector<double>& levels,
                                    const std::function<double(double)>& F,
                                    const std::function<double(double)>& dF,
                                    const std::string& id = "synthetic") {
  LevelSeries out;
  out.p = p.p;
  out.cp = p.cp();
  out.metric_id = id;
  out.in_hypothesis = true;
  for (double t : levels) {
    LevelPoint pt;
    pt.t = t;
    pt.F = F(t);
    pt.dF = dF(t);
    pt.M = pt.F / t - 4.0 * kPi * sqr(out.cp) * t;
    pt.area = std::numeric_limits<double>::quiet_NaN();
    out.pts.push_back(pt);
  }
  std::sort(out.pts.begin(), out.pts.end(),
            [](const LevelPoint& a, const LevelPoint& b) { return a.t < b.t; });
  return out;
}

struct Violation {
  double t1 = 0.0;
  double t2 = std::numeric_limits<double>::quiet_NaN();  // NaN for single-level claims
  double margin = 0.0;  // normalized, negative = violated
};

struct MonotonicityReport {
  std::string claim;
  double p = 2.0;
  std::string metric_id;
  int levels = 0;
  double worst_margin = std::numeric_limits<double>::infinity();  // normalized
  std::vector<Violation> violations;
  double tolerance = 1e-8;
  bool asserted = true;  // false: out-of-hypothesis, recorded only
  bool passed = true;
  std::map<std::string, double> extra;

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["claim"] = claim;
    j["p"] = p;
    j["metric"] = metric_id;
    j["levels"] = levels;
    j["worst_margin"] = worst_margin;
    j["violations"] = nlohmann::json::array();
    for (const Violation& v : violations) {
      nlohmann::json jv;
      jv["t1"] = v.t1;
      if (std::isfinite(v.t2)) jv["t2"] = v.t2;
      jv["margin"] = v.margin;
      j["violations"].push_back(jv);
    }
    j["tolerances"] = {{"margin", tolerance}};
    j["asserted"] = asserted;
    j["passed"] = passed;
    for (const auto& [k, v] : extra) j["extra"][k] = v;
    return j;
  }
};

namespace detail {

inline void finalize_report(MonotonicityReport& rep, const LevelSeries& series, double tol) {
  rep.p = series.p;
  rep.metric_id = series.metric_id;
  rep.levels = static_cast<int>(series.pts.size());
  rep.tolerance = tol;
  rep.asserted = series.in_hypothesis;
  rep.passed = rep.worst_margin >= -tol;
  if (series.pts.empty()) {
    rep.worst_margin = 0.0;
    rep.passed = false;
  }
}

inline void record(MonotonicityReport& rep, double t1, double t2, double normalized, double tol) {
  rep.worst_margin = std::min(rep.worst_margin, normalized);
  if (normalized < -tol) rep.violations.push_back({t1, t2, normalized});
}

}  // namespace detail

// F'(t) <= 4 pi c_p^2 t + t^{-1} F(t) at every probed level.
inline MonotonicityReport check_theorem_a(const LevelSeries& series, double tol = 1e-8) {
  MonotonicityReport rep;
  rep.claim = "T1a";
  const double c2 = 4.0 * kPi * sqr(series.cp);
  for (const LevelPoint& pt : series.pts) {
    const double rhs = c2 * pt.t + pt.F / pt.t;
    const double margin = rhs - pt.dF;
    const double scale = std::max(std::abs(pt.dF), rhs);
    detail::record(rep, pt.t, std::numeric_limits<double>::quiet_NaN(),
                   margin / scale, tol);
  }
  detail::finalize_report(rep, series, tol);
  return rep;
}

// M(t) = t^{-1} F - 4 pi c_p^2 t pairwise nonincreasing.
inline MonotonicityReport check_theorem_b(const LevelSeries& series, double tol = 1e-8,
                                          const std::string& claim = "T1b") {
  MonotonicityReport rep;
  rep.claim = claim;
  if (series.pts.size() < 2) {
    detail::finalize_report(rep, series, tol);
    rep.passed = false;
    return rep;
  }
  const double c2 = 4.0 * kPi * sqr(series.cp);
  for (std::size_t i = 0; i + 1 < series.pts.size(); ++i) {
    const LevelPoint& a = series.pts[i];
    const LevelPoint& b = series.pts[i + 1];
    const double margin = a.M - b.M;  // t1 < t2 requires M(t1) >= M(t2)
    const double scale = std::max({std::abs(a.M), std::abs(b.M), c2 * b.t});
    detail::record(rep, a.t, b.t, margin / scale, tol);
  }
  detail::finalize_report(rep, series, tol);
  return rep;
}

struct GeneralizedReports {
  MonotonicityReport bound;      // T4G: G(t) <= c_p 4 pi / (beta - 1) t
  MonotonicityReport monotone;   // T4I: I(t) nonincreasing
};

inline GeneralizedReports check_generalized(const LevelSeries& series, const LambdaBeta& lb,
                                            double tol = 1e-8) {
  if (!lb.admissible) throw std::invalid_argument("check_generalized: (lambda, beta) not admissible");
  const double p = series.p;
  const double cp = series.cp;
  const double alpha = lb.beta - lb.lambda * (5.0 - p) / (2.0 * (3.0 - p));
  if (std::abs(alpha + 2.0) <= 1e-12 * (1.0 + std::abs(alpha))) {
    throw std::invalid_argument("check_generalized: exponent beta - lambda(5-p)/(2(3-p)) + 2 = 0");
  }
  const double coef_i = 4.0 * kPi / ((lb.beta - 1.0) * (alpha + 2.0)) * cp;
  const double bound_coef = cp * 4.0 * kPi / (lb.beta - 1.0);
  const bool is_default_pair = std::abs(alpha + 1.0) <= 1e-9;

  GeneralizedReports out;
  out.bound.claim = "T4G";
  out.monotone.claim = "T4I";
  std::vector<double> I_vals(series.pts.size());
  for (std::size_t i = 0; i < series.pts.size(); ++i) {
    const LevelPoint& pt = series.pts[i];
    const double G = pt.dF + alpha * pt.F / pt.t;
    const double rhs = bound_coef * pt.t;
    const double scale_g = std::max(std::abs(G), std::abs(rhs));
    detail::record(out.bound, pt.t, std::numeric_limits<double>::quiet_NaN(),
                   (rhs - G) / scale_g, tol);
    I_vals[i] = std::pow(pt.t, alpha) * pt.F - coef_i * std::pow(pt.t, alpha + 2.0);
    if (is_default_pair) {
      const double term_scale = std::max({std::abs(pt.M), std::abs(I_vals[i]),
                                          std::abs(coef_i) * std::pow(pt.t, alpha + 2.0)});
      if (std::abs(I_vals[i] - pt.M) > 1e-12 * term_scale) {
        throw std::logic_error("check_generalized: reduction to M failed at the default pair");
      }
    }
  }
  for (std::size_t i = 0; i + 1 < series.pts.size(); ++i) {
    const LevelPoint& a = series.pts[i];
    const LevelPoint& b = series.pts[i + 1];
    const double margin = I_vals[i] - I_vals[i + 1];
    const double scale = std::max({std::abs(I_vals[i]), std::abs(I_vals[i + 1]),
                                   std::abs(coef_i) * std::pow(a.t, alpha + 2.0),
                                   std::abs(coef_i) * std::pow(b.t, alpha + 2.0)});
    detail::record(out.monotone, a.t, b.t, margin / scale, tol);
  }
  detail::finalize_report(out.bound, series, tol);
  detail::finalize_report(out.monotone, series, tol);
  out.bound.extra["lambda"] = lb.lambda;
  out.bound.extra["beta"] = lb.beta;
  out.monotone.extra["lambda"] = lb.lambda;
  out.monotone.extra["beta"] = lb.beta;
  out.monotone.extra["alpha"] = alpha;
  return out;
}

struct CorollaryReports {
  MonotonicityReport upper;  // C1c: F <= 4 pi c_p^2 t^2
  MonotonicityReport area;   // C1d: Area >= (4 pi c_p^2 t^2)^{-(p-1)/(3-p)}
};

inline CorollaryReports check_corollary_cd(const LevelSeries& series, double tol = 1e-8) {
  CorollaryReports out;
  out.upper.claim = "C1c";
  out.area.claim = "C1d";
  const double c2 = 4.0 * kPi * sqr(series.cp);
  const double area_exp = -(series.p - 1.0) / (3.0 - series.p);
  double holder_min = std::numeric_limits<double>::infinity();
  for (const LevelPoint& pt : series.pts) {
    const double cap = c2 * pt.t * pt.t;
    detail::record(out.upper, pt.t, std::numeric_limits<double>::quiet_NaN(),
                   (cap - pt.F) / cap, tol);
    const double floor_area = std::pow(cap, area_exp);
    detail::record(out.area, pt.t, std::numeric_limits<double>::quiet_NaN(),
                   (pt.area - floor_area) / floor_area, tol);
    // derivation chain: 1 = flux <= F^{(p-1)/2} Area^{(3-p)/2}
    holder_min = std::min(holder_min, std::pow(pt.F, 0.5 * (series.p - 1.0)) *
                                          std::pow(pt.area, 0.5 * (3.0 - series.p)));
  }
  detail::finalize_report(out.upper, series, tol);
  detail::finalize_report(out.area, series, tol);
  out.upper.extra["holder_chain_min"] = holder_min;
  out.area.extra["holder_chain_min"] = holder_min;
  const bool holder_ok = holder_min >= 1.0 - 1e-10;
  out.upper.passed = out.upper.passed && holder_ok;
  out.area.passed = out.area.passed && holder_ok;
  return out;
}

struct RigidityRow {
  double t = 0.0;
  double r_t = 0.0;
  double ratio_gradient = 0.0;   // |u'| / u^{2/(3-p)}, constant iff flat
  double ratio_hessian = 0.0;    // h_tan / h_rad, equals -(p-1)/2 iff flat
  double a_t_deviation = 0.0;    // |grad u|^2 / <grad|grad u|, nu> vs (3-p) t / 2, relative
  double df_ratio = 0.0;         // F' t / F, equals lambda = 2 iff flat
  double q_hess_rad = 0.0;       // radial Hessian component of Q, 1 iff flat
  double q_hess_tan = 0.0;
};

struct RigidityDiagnostics {
  std::vector<RigidityRow> rows;
  double gradient_ratio_spread = 0.0;  // max/min - 1
  double hessian_ratio_deviation = 0.0;
  double a_t_deviation = 0.0;
  double df_ratio_deviation = 0.0;
  double q_hessian_deviation = 0.0;
  bool flat_match = false;  // all five diagnostics constant/matched to 1e-8
};

inline RigidityDiagnostics rigidity_diagnostics(const GreenProfile& prof,
                                                const std::vector<double>& levels) {
  const PParam& p = prof.p();
  const double cp = p.cp();
  const double grad_exp = 2.0 / (3.0 - p.p);
  const double q_exp = 2.0 * (p.p - 1.0) / (3.0 - p.p);  // = 2 / c_p
  RigidityDiagnostics diag;
  std::vector<double> ratio1;
  for (double t : levels) {
    const double span = 4e-3 * 1.0625;
    if (!(t * std::exp(span) < prof.u_max()) || !(t * std::exp(-span) > prof.u_min())) continue;
    RigidityRow row;
    row.t = t;
    row.r_t = invert_level(prof, t);
    const double s = prof.grad_at(row.r_t);
    const double d2u = prof.d2u_at(row.r_t);
    const double h_tan = -s * prof.metric().dw(row.r_t) / prof.metric().w(row.r_t);
    row.ratio_gradient = s / std::pow(t, grad_exp);
    row.ratio_hessian = h_tan / d2u;
    const double a_t = s * s / d2u;  // <grad|grad u|, nu> = u'' on radial profiles
    row.a_t_deviation = a_t / (0.5 * (3.0 - p.p) * t) - 1.0;
    const LevelFunctionals lf = level_functionals(prof, t);
    const double dF = derivative_log(
        [&prof](double tt) { return level_functionals(prof, tt).F; }, t).value;
    row.df_ratio = dF * t / lf.F;
    ratio1.push_back(row.ratio_gradient);
    diag.rows.push_back(row);
  }
  if (diag.rows.empty()) return diag;
  // potential Q = c_p^2 / (2 C^2) u^{-2(p-1)/(3-p)} with C from the median level
  std::vector<double> sorted_r1 = ratio1;
  std::sort(sorted_r1.begin(), sorted_r1.end());
  const double C = sorted_r1[sorted_r1.size() / 2];
  for (RigidityRow& row : diag.rows) {
    const double u = row.t;
    const double du = -prof.grad_at(row.r_t);
    const double d2u = prof.d2u_at(row.r_t);
    const double coef = sqr(cp) / (2.0 * C * C);
    const double q1 = -coef * q_exp * std::pow(u, -q_exp - 1.0) * du;
    const double q2 = coef * q_exp *
                      ((q_exp + 1.0) * std::pow(u, -q_exp - 2.0) * du * du -
                       std::pow(u, -q_exp - 1.0) * d2u);
    row.q_hess_rad = q2;
    row.q_hess_tan = q1 * prof.metric().dw(row.r_t) / prof.metric().w(row.r_t);
  }
  double r1_min = sorted_r1.front(), r1_max = sorted_r1.back();
  diag.gradient_ratio_spread = r1_max / r1_min - 1.0;
  for (const RigidityRow& row : diag.rows) {
    diag.hessian_ratio_deviation = std::max(
        diag.hessian_ratio_deviation,
        std::abs(row.ratio_hessian + 0.5 * (p.p - 1.0)) / (0.5 * (p.p - 1.0)));
    diag.a_t_deviation = std::max(diag.a_t_deviation, std::abs(row.a_t_deviation));
    diag.df_ratio_deviation = std::max(diag.df_ratio_deviation, std::abs(row.df_ratio / 2.0 - 1.0));
    diag.q_hessian_deviation = std::max({diag.q_hessian_deviation,
                                         std::abs(row.q_hess_rad - 1.0),
                                         std::abs(row.q_hess_tan - 1.0)});
  }
  diag.flat_match = diag.gradient_ratio_spread <= 1e-8 && diag.hessian_ratio_deviation <= 1e-8 &&
                    diag.a_t_deviation <= 1e-8 && diag.df_ratio_deviation <= 1e-8 &&
                    diag.q_hessian_deviation <= 1e-8;
  return diag;
}

inline MonotonicityReport rigidity_report(const GreenProfile& prof,
                                          const std::vector<double>& levels, bool assert_flat) {
  const RigidityDiagnostics diag = rigidity_diagnostics(prof, levels);
  MonotonicityReport rep;
  rep.claim = "RIGID";
  rep.p = prof.p().p;
  rep.metric_id = prof.metric().id();
  rep.levels = static_cast<int>(diag.rows.size());
  rep.tolerance = 1e-8;
  const double dev = std::max({diag.gradient_ratio_spread, diag.hessian_ratio_deviation,
                               diag.a_t_deviation, diag.df_ratio_deviation,
                               diag.q_hessian_deviation});
  rep.worst_margin = 1e-8 - dev;
  rep.asserted = assert_flat;
  rep.passed = assert_flat ? diag.flat_match : true;
  rep.extra["gradient_ratio_spread"] = diag.gradient_ratio_spread;
  rep.extra["hessian_ratio_deviation"] = diag.hessian_ratio_deviation;
  rep.extra["a_t_deviation"] = diag.a_t_deviation;
  rep.extra["df_ratio_deviation"] = diag.df_ratio_deviation;
  rep.extra["q_hessian_deviation"] = diag.q_hessian_deviation;
  rep.extra["flat_match"] = diag.flat_match ? 1.0 : 0.0;
  return rep;
}

}  // namespace pgreen
