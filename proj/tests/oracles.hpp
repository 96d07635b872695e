#pragma once

// Reference computations used only by the tests. None of these call into the
// library code paths they are used to check.

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace oracle {

// erf by its Maclaurin series in long double; good to ~1e-16 for |x| <= 3.
inline long double erf_series(long double x) {
  long double term = x;  // (-1)^n x^(2n+1) / n!
  long double sum = x;
  for (int n = 1; n < 200; ++n) {
    term *= -x * x / n;
    const long double add = term / (2 * n + 1);
    sum += add;
    if (std::fabs(add) < 1e-22L) break;
  }
  return sum * 2.0L / std::sqrt(3.14159265358979323846264338327950288L);
}

inline long double phi_series(long double x) {
  return 0.5L * (1.0L + erf_series(x / std::sqrt(2.0L)));
}

// Inverse of phi_series by bisection on [-6, 6].
inline double quantile_bisect(double p) {
  long double lo = -6.0L, hi = 6.0L;
  for (int i = 0; i < 200; ++i) {
    const long double mid = 0.5L * (lo + hi);
    (phi_series(mid) < p ? lo : hi) = mid;
  }
  return static_cast<double>(0.5L * (lo + hi));
}

struct SubsetMoments {
  long double mean = 0;
  long double var = 0;
};

// Mean and variance of the subset mean over all C(G, m) subsets.
inline SubsetMoments enumerate_subsets(const std::vector<double>& s, int m) {
  const int G = static_cast<int>(s.size());
  long double sum = 0, sum_sq = 0;
  long long count = 0;
  for (std::uint32_t mask = 0; mask < (1u << G); ++mask) {
    if (__builtin_popcount(mask) != m) continue;
    long double acc = 0;
    for (int g = 0; g < G; ++g)
      if (mask & (1u << g)) acc += s[g];
    const long double xbar = acc / m;
    sum += xbar;
    sum_sq += xbar * xbar;
    ++count;
  }
  SubsetMoments out;
  out.mean = sum / count;
  out.var = sum_sq / count - out.mean * out.mean;
  return out;
}

// Pearson chi-squared for the 2x2 table [[a, b], [c, d]].
inline double pearson_chisq(double a, double b, double c, double d) {
  const double n = a + b + c + d;
  const double num = n * (a * d - b * c) * (a * d - b * c);
  return num / ((a + b) * (c + d) * (a + c) * (b + d));
}

// Direct evaluation of the overlap correlation from sampling-without-
// replacement covariances of the two subset sums.
inline double overlap_corr_direct(double m1, double m2, double m12, double G) {
  // cov of indicator sums for category membership under a random labelling
  const double cov = m12 / G - (m1 / G) * (m2 / G);
  const double v1 = (m1 / G) * (1 - m1 / G);
  const double v2 = (m2 / G) * (1 - m2 / G);
  return cov / std::sqrt(v1 * v2);
}

inline double sample_corr(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

// Rejection rates of the averaging and selection tests for a category of m
// genes, n_alt of them shifted by delta, estimated by simulating gene scores.
struct LocationModelRates {
  double ave = 0;
  double sel = 0;
};

inline LocationModelRates simulate_location_model(int m, int n_alt, double delta, double pi,
                                                  double z_alpha, double k, double mu0,
                                                  double mu1, int reps, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const double mu_null = mu0 + pi * (mu1 - mu0);
  const double var_null = mu0 * (1 - mu0) + pi * (mu1 * (1 - mu1) - mu0 * (1 - mu0));
  const double ave_crit = delta * pi + z_alpha / std::sqrt(static_cast<double>(m));
  const double sel_crit = mu_null + z_alpha * std::sqrt(var_null / m);
  long long ave = 0, sel = 0;
  for (int r = 0; r < reps; ++r) {
    double sum = 0;
    int count = 0;
    for (int g = 0; g < m; ++g) {
      const double s = normal(rng) + (g < n_alt ? delta : 0.0);
      sum += s;
      count += s > k;
    }
    ave += sum / m > ave_crit;
    sel += static_cast<double>(count) / m > sel_crit;
  }
  return {static_cast<double>(ave) / reps, static_cast<double>(sel) / reps};
}

}  // namespace oracle
