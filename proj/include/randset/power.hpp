#pragma once

// Analytic power of averaging vs selection enrichment tests under the
// independent location model: s_g ~ N(delta * I_g, 1), a fraction pi of all
// genes and pi_c of the category's m genes altered.
//
// Selection uses the indicator 1[s_g > k] with k chosen so the selected gene
// list has FDR fdr_alpha, i.e. h(k) = (1 - Phi(k)) / (1 - Phi(k - delta)) = kappa.
// Selection tails (mu0 = 1 - Phi(k)) get astronomically small when delta is
// small, so everything below is carried in log space where it matters.

#include <cmath>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "randset/error.hpp"
#include "randset/numerics.hpp"

namespace randset {

struct PowerModel {
  double pi = 0.2;         // altered fraction of the whole universe
  double pi_c = 0.2;       // altered fraction of the category
  double delta = 1.0;      // per-gene effect
  std::size_t m = 20;      // category size
  double alpha = 0.05;     // category test level
  double fdr_alpha = 0.05; // gene-list FDR

  void validate() const {
    detail::require(pi > 0.0 && pi < 1.0, "power model: pi must lie in (0,1)");
    detail::require(pi_c >= 0.0 && pi_c <= 1.0, "power model: pi_c must lie in [0,1]");
    detail::require(delta > 0.0 && std::isfinite(delta), "power model: delta must be > 0");
    detail::require(m >= 1, "power model: m must be >= 1");
    detail::require(alpha > 0.0 && alpha < 1.0, "power model: alpha must lie in (0,1)");
    detail::require(fdr_alpha > 0.0 && fdr_alpha < 1.0, "power model: fdr_alpha must lie in (0,1)");
  }
};

struct SelectionCalibration {
  double kappa = 0.0;
  double k = 0.0;        // selection threshold
  double mu0 = 0.0;      // P(s > k | unaltered)
  double mu1 = 0.0;      // P(s > k | altered)
  double log_mu0 = 0.0;
  double log_mu1 = 0.0;
  double delta = 0.0;
};

inline double kappa(double pi, double fdr_alpha) {
  detail::require(pi > 0.0 && pi < 1.0, "kappa: pi must lie in (0,1)");
  detail::require(fdr_alpha > 0.0 && fdr_alpha < 1.0, "kappa: fdr_alpha must lie in (0,1)");
  const double k = fdr_alpha * pi / ((1.0 - fdr_alpha) * (1.0 - pi));
  if (!(k < 1.0)) {
    throw infeasible_error("kappa = " + std::to_string(k) + " >= 1: FDR target infeasible");
  }
  return k;
}

inline double log_h(double x, double delta) {
  detail::require(delta > 0.0, "h: delta must be > 0");
  return log_norm_sf(x) - log_norm_sf(x - delta);
}

inline double h(double x, double delta) { return std::exp(log_h(x, delta)); }

// Unique root of h(k) = kappa by bisection (h is strictly decreasing).
inline SelectionCalibration invert_h(double kappa_value, double delta) {
  detail::require(kappa_value > 0.0 && kappa_value < 1.0, "invert_h: kappa must lie in (0,1)");
  detail::require(delta > 0.0 && std::isfinite(delta), "invert_h: delta must be > 0");
  const double target = std::log(kappa_value);
  auto g = [&](double x) { return log_h(x, delta) - target; };
  double lo = -50.0, hi = 50.0;
  while (g(lo) < 0.0) lo *= 2.0;
  while (g(hi) > 0.0) {
    hi *= 2.0;
    if (hi > 1e12) throw std::domain_error("invert_h: could not bracket the threshold");
  }
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  // pick the endpoint with the smaller residual
  const double k = std::abs(g(lo)) <= std::abs(g(hi)) ? lo : hi;
  SelectionCalibration cal;
  cal.kappa = kappa_value;
  cal.k = k;
  cal.delta = delta;
  cal.log_mu0 = log_norm_sf(k);
  cal.log_mu1 = log_norm_sf(k - delta);
  cal.mu0 = std::exp(cal.log_mu0);
  cal.mu1 = std::exp(cal.log_mu1);
  return cal;
}

// Variance of sqrt(m) * Xbar_sel when a fraction pi_c of the m genes is altered.
inline double variance_fn(double pi_c, const SelectionCalibration& cal) {
  const double v0 = cal.mu0 * (1.0 - cal.mu0);
  const double v1 = cal.mu1 * (1.0 - cal.mu1);
  return v0 + pi_c * (v1 - v0);
}

namespace detail {

// variance_fn / mu1, finite even when mu0 and mu1 underflow.
inline double scaled_variance(double pi_c, const SelectionCalibration& cal) {
  const double ratio = std::exp(cal.log_mu0 - cal.log_mu1);
  return ratio * (1.0 - cal.mu0) * (1.0 - pi_c) + pi_c * (1.0 - cal.mu1);
}

inline double z_upper(double alpha) { return -norm_quantile(alpha); }

}  // namespace detail

inline double tau_ave(const PowerModel& pm) {
  pm.validate();
  return detail::z_upper(pm.alpha) -
         std::sqrt(static_cast<double>(pm.m)) * (pm.pi_c - pm.pi) * pm.delta;
}

inline double tau_sel(const PowerModel& pm, const SelectionCalibration& cal) {
  pm.validate();
  const double v_null = detail::scaled_variance(pm.pi, cal);
  const double v_alt = detail::scaled_variance(pm.pi_c, cal);
  const double ratio = pm.pi_c == pm.pi ? 1.0 : std::sqrt(v_null / v_alt);
  // (mu1 - mu0) / sigma(pi_c) = sqrt(mu1) * (1 - mu0/mu1) / sqrt(v_alt)
  const double effect = std::exp(0.5 * cal.log_mu1) *
                        (-std::expm1(cal.log_mu0 - cal.log_mu1)) / std::sqrt(v_alt);
  return detail::z_upper(pm.alpha) * ratio -
         std::sqrt(static_cast<double>(pm.m)) * (pm.pi_c - pm.pi) * effect;
}

inline SelectionCalibration calibrate(const PowerModel& pm) {
  pm.validate();
  return invert_h(kappa(pm.pi, pm.fdr_alpha), pm.delta);
}

inline double tau_sel(const PowerModel& pm) { return tau_sel(pm, calibrate(pm)); }

inline double power_ave(const PowerModel& pm) { return norm_sf(tau_ave(pm)); }

inline double power_sel(const PowerModel& pm) { return norm_sf(tau_sel(pm)); }

// tau_sel - tau_ave: positive favours averaging, negative favours selection.
inline double delta_gap(const PowerModel& pm) { return tau_sel(pm) - tau_ave(pm); }

// Effect size where variance_fn is flat in pi_c.
inline double critical_delta(double kappa_value) {
  detail::require(kappa_value > 0.0 && kappa_value < 1.0, "critical_delta: kappa must lie in (0,1)");
  return -2.0 * norm_quantile(kappa_value / (1.0 + kappa_value));
}

// Effect sizes for which selection wins at large m; empty when the bounds cross.
inline std::optional<std::pair<double, double>> superiority_interval(double kappa_value) {
  const double lo = critical_delta(kappa_value);
  const double hi = 1.0 / std::sqrt(kappa_value) - std::sqrt(kappa_value);
  if (!(lo < hi)) return std::nullopt;
  return std::make_pair(lo, hi);
}

enum class Superior { ave, sel, tie, infeasible };

inline std::string_view to_string(Superior s) {
  switch (s) {
    case Superior::ave: return "ave";
    case Superior::sel: return "sel";
    case Superior::tie: return "tie";
    case Superior::infeasible: return "infeasible";
  }
  return "?";
}

struct PowerRow {
  double enrichment = 0.0;  // pi_c - pi
  double delta = 0.0;
  double power_ave = 0.0;
  std::optional<double> power_sel;
  std::optional<double> gap;
  Superior superior = Superior::tie;
};

inline constexpr double kTieBand = 1e-12;

// Row-major over (enrichment, delta). Cells whose FDR target is infeasible
// keep their averaging power and are marked instead of dropped.
inline std::vector<PowerRow> power_grid(const PowerModel& base,
                                        const std::vector<double>& enrichment_axis,
                                        const std::vector<double>& delta_axis) {
  std::vector<PowerRow> rows;
  rows.reserve(enrichment_axis.size() * delta_axis.size());
  for (double e : enrichment_axis) {
    detail::require(std::isfinite(e) && e >= 0.0 && base.pi + e <= 1.0 + 1e-12,
                    "power_grid: enrichment must keep pi_c within [pi, 1]");
    for (double d : delta_axis) {
      detail::require(std::isfinite(d) && d > 0.0, "power_grid: delta must be > 0");
      PowerModel pm = base;
      pm.pi_c = std::min(1.0, base.pi + e);
      pm.delta = d;
      PowerRow row;
      row.enrichment = e;
      row.delta = d;
      const double ta = tau_ave(pm);
      row.power_ave = norm_sf(ta);
      try {
        const double ts = tau_sel(pm);
        row.power_sel = norm_sf(ts);
        row.gap = ts - ta;
        row.superior = std::abs(*row.gap) <= kTieBand ? Superior::tie
                       : *row.gap > 0.0             ? Superior::ave
                                                    : Superior::sel;
      } catch (const infeasible_error&) {
        row.superior = Superior::infeasible;
      }
      rows.push_back(row);
    }
  }
  return rows;
}

}  // namespace randset
