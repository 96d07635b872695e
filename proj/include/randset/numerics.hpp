#pragma once

// Scalar and vector kernels shared by the scoring, multi-category and power
// code: normal distribution functions (including log-tail forms that survive
// far past double underflow), Mills' ratio, midranks, Spearman correlation and
// the sign-flipped Fisher transform.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "randset/error.hpp"

namespace randset {

inline constexpr double kSqrt2 = 1.41421356237309504880;
inline constexpr double kSqrt2Pi = 2.50662827463100050242;
inline constexpr double kLogSqrt2Pi = 0.91893853320467274178;

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

inline double norm_pdf(double x) {
  return std::exp(-0.5 * x * x) / kSqrt2Pi;
}

// Phi(x). erfc keeps relative accuracy in both tails.
inline double norm_cdf(double x) {
  detail::require(std::isfinite(x), "norm_cdf: non-finite argument");
  return 0.5 * std::erfc(-x / kSqrt2);
}

// 1 - Phi(x), without cancellation.
inline double norm_sf(double x) {
  detail::require(std::isfinite(x), "norm_sf: non-finite argument");
  return 0.5 * std::erfc(x / kSqrt2);
}

// (1 - Phi(x)) / phi(x).
inline double mills_ratio(double x) {
  detail::require(std::isfinite(x), "mills_ratio: non-finite argument");
  if (x <= 26.0) return norm_sf(x) / norm_pdf(x);
  // Laplace continued fraction; converges quickly this far out.
  double t = x;
  for (int n = 60; n >= 1; --n) t = x + n / t;
  return 1.0 / t;
}

// log(1 - Phi(x)), finite for every finite x.
inline double log_norm_sf(double x) {
  detail::require(std::isfinite(x), "log_norm_sf: non-finite argument");
  if (x < 0.0) return std::log1p(-0.5 * std::erfc(-x / kSqrt2));
  if (x <= 26.0) return std::log(norm_sf(x));
  return std::log(mills_ratio(x)) - 0.5 * x * x - kLogSqrt2Pi;
}

namespace detail {

// Rational initial guess for the lower half (p <= 0.5), refined by Halley steps.
inline double lower_quantile(double p) {
  static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                 -2.759285104469687e+02, 1.383577518672690e+02,
                                 -3.066479806614716e+01, 2.506628277459239e+00};
  static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                 -1.556989798598866e+02, 6.680131188771972e+01,
                                 -1.328068155288572e+01};
  static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838e+00, -2.549732539343734e+00,
                                 4.374664141464968e+00,  2.938163982698783e+00};
  static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996e+00, 3.754408661907416e+00};
  double x;
  if (p < 0.02425) {
    const double q = std::sqrt(-2.0 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
  } else {
    const double q = p - 0.5;
    const double r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
  }
  for (int it = 0; it < 4; ++it) {
    const double e = 0.5 * std::erfc(-x / kSqrt2) - p;
    const double u = e / norm_pdf(x);
    if (!std::isfinite(u)) break;
    const double step = u / (1.0 + 0.5 * x * u);
    x -= step;
    if (std::abs(step) <= 1e-16 * std::max(1.0, std::abs(x))) break;
  }
  return x;
}

}  // namespace detail

// Phi^{-1}(p) for 0 < p < 1.
inline double norm_quantile(double p) {
  detail::require(p > 0.0 && p < 1.0, "norm_quantile: p must lie in (0,1)");
  if (p <= 0.5) return detail::lower_quantile(p);
  return -detail::lower_quantile(1.0 - p);  // exact subtraction for p >= 0.5
}

// Average-rank (midrank) convention; ranks start at 1.
inline std::vector<double> midranks(std::span<const double> xs) {
  detail::require(!xs.empty(), "midranks: empty input");
  const std::size_t n = xs.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(n);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i + 1;
    while (j < n && xs[order[j]] == xs[order[i]]) ++j;
    // positions i..j-1 hold ranks i+1..j
    const double r = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = r;
    i = j;
  }
  return ranks;
}

inline double pearson(std::span<const double> x, std::span<const double> y) {
  detail::require(x.size() == y.size(), "pearson: length mismatch");
  const std::size_t n = x.size();
  const double mx = compensated_sum(x) / static_cast<double>(n);
  const double my = compensated_sum(y) / static_cast<double>(n);
  CompensatedSum sxy, sxx, syy;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy.add(dx * dy);
    sxx.add(dx * dx);
    syy.add(dy * dy);
  }
  if (sxx.value() <= 0.0 || syy.value() <= 0.0) {
    throw std::domain_error("correlation undefined for a constant vector");
  }
  const double r = sxy.value() / std::sqrt(sxx.value() * syy.value());
  return std::clamp(r, -1.0, 1.0);
}

// Pearson correlation of midranks, so ties are handled without a shortcut formula.
inline double spearman(std::span<const double> x, std::span<const double> y) {
  detail::require(x.size() == y.size(), "spearman: length mismatch");
  detail::require(x.size() >= 3, "spearman: need at least 3 observations");
  const auto rx = midranks(x);
  const auto ry = midranks(y);
  return pearson(rx, ry);
}

// Sign-flipped Fisher transform: negative correlations map to positive scores.
inline double fisher_transform(double r, int n) {
  detail::require(std::isfinite(r) && std::abs(r) < 1.0,
                  "fisher_transform: |r| must be < 1");
  detail::require(n >= 4, "fisher_transform: need n >= 4");
  // log1p difference keeps f(-r) == -f(r) bit for bit
  return 0.5 * std::sqrt(static_cast<double>(n - 3)) * (std::log1p(-r) - std::log1p(r));
}

}  // namespace randset
