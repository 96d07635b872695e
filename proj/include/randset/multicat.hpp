#pragma once

// Joint null distribution of category Z-scores.
//
// Under random relabelling of the gene scores, Z-scores of two categories
// with sizes m1, m2 and overlap m12 in a universe of G genes have correlation
//
//   (G*m12 - m1*m2) / sqrt(m1*m2*(G-m1)*(G-m2))
//
// whatever the score distribution. The Gaussian approximation with this
// correlation matrix drives a single-step maxT procedure on T = Z/sqrt(m).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "randset/catalog.hpp"
#include "randset/error.hpp"
#include "randset/parallel.hpp"
#include "randset/scoring.hpp"

namespace randset {

inline double overlap_correlation(std::size_t m1, std::size_t m2, std::size_t m12,
                                  std::size_t G) {
  detail::require(m1 >= 1 && m2 >= 1, "overlap_correlation: empty category");
  detail::require(m12 <= std::min(m1, m2), "overlap_correlation: overlap exceeds a category");
  detail::require(std::max(m1, m2) < G, "overlap_correlation: category must be smaller than G");
  if (m1 == m2 && m12 == m1) return 1.0;
  const double g = static_cast<double>(G);
  const double a = static_cast<double>(m1);
  const double b = static_cast<double>(m2);
  const double num = g * static_cast<double>(m12) - a * b;
  return num / std::sqrt(a * b * (g - a) * (g - b));
}

struct NullJointModel {
  std::vector<std::string> ids;
  std::vector<std::size_t> sizes;
  std::size_t G = 0;
  std::vector<double> R;       // k x k, row-major
  std::vector<double> factor;  // k x rank, row-major; R ~= factor * factor^T
  std::size_t rank = 0;

  std::size_t k() const { return ids.size(); }
  double corr(std::size_t i, std::size_t j) const { return R[i * k() + j]; }
  double L(std::size_t i, std::size_t j) const { return factor[i * rank + j]; }
};

namespace detail {

// Diagonal-pivoted Cholesky for a PSD matrix, truncated once the largest
// remaining pivot drops below tol (negative pivots from rounding are clipped).
// Pivot ties go to the lexicographically smallest id, so the factor and hence
// every simulated draw is attached to labels rather than positions.
inline void pivoted_psd_factor(NullJointModel& model, double tol = 1e-10) {
  const std::size_t k = model.k();
  std::vector<double> work(k * k, 0.0);  // row-major, row i holds L[i][0..j)
  std::vector<double> diag(k);
  for (std::size_t i = 0; i < k; ++i) diag[i] = model.R[i * k + i];
  std::vector<char> done(k, 0);
  std::size_t rank = 0;
  for (; rank < k; ++rank) {
    std::size_t p = k;
    for (std::size_t i = 0; i < k; ++i) {
      if (done[i]) continue;
      if (p == k || diag[i] > diag[p] || (diag[i] == diag[p] && model.ids[i] < model.ids[p])) p = i;
    }
    if (diag[p] < -1e-8) {
      throw std::domain_error("null model: correlation matrix is not positive semidefinite");
    }
    if (diag[p] <= tol) break;
    done[p] = 1;
    const double piv = std::sqrt(diag[p]);
    const double* lp = &work[p * k];
    work[p * k + rank] = piv;
    for (std::size_t i = 0; i < k; ++i) {
      if (done[i]) continue;
      const double* li = &work[i * k];
      double c = model.R[i * k + p];
      for (std::size_t l = 0; l < rank; ++l) c -= li[l] * lp[l];
      const double v = c / piv;
      work[i * k + rank] = v;
      diag[i] -= v * v;
    }
  }
  model.rank = rank;
  model.factor.assign(k * rank, 0.0);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < rank; ++j) model.factor[i * rank + j] = work[i * k + j];
}

}  // namespace detail

// Model from raw sizes and a k x k overlap matrix (diagonal ignored).
inline NullJointModel build_null_model(std::vector<std::string> ids,
                                       std::vector<std::size_t> sizes,
                                       std::span<const std::size_t> overlaps, std::size_t G) {
  const std::size_t k = ids.size();
  detail::require(k >= 1, "build_null_model: no categories");
  detail::require(sizes.size() == k && overlaps.size() == k * k,
                  "build_null_model: inconsistent dimensions");
  NullJointModel model;
  model.ids = std::move(ids);
  model.sizes = std::move(sizes);
  model.G = G;
  model.R.assign(k * k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    model.R[i * k + i] = 1.0;
    for (std::size_t j = i + 1; j < k; ++j) {
      const double r =
          overlap_correlation(model.sizes[i], model.sizes[j], overlaps[i * k + j], G);
      if (!(std::abs(r) <= 1.0 + 1e-12)) {
        throw std::logic_error("null model: correlation outside [-1,1] for '" + model.ids[i] +
                               "' vs '" + model.ids[j] + "'");
      }
      model.R[i * k + j] = r;
      model.R[j * k + i] = r;
    }
  }
  detail::pivoted_psd_factor(model);
  return model;
}

inline NullJointModel build_null_model(const BoundCatalog& catalog) {
  std::vector<std::string> ids;
  std::vector<std::size_t> sizes;
  for (const auto& c : catalog.categories()) {
    ids.push_back(c.id);
    sizes.push_back(c.size());
  }
  const auto ov = overlap_matrix(catalog);
  return build_null_model(std::move(ids), std::move(sizes), ov, catalog.universe_size());
}

// max |L L^T - R|
inline double factor_residual(const NullJointModel& model) {
  const std::size_t k = model.k();
  double worst = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < model.rank; ++l) s += model.L(i, l) * model.L(j, l);
      worst = std::max(worst, std::abs(s - model.corr(i, j)));
    }
  }
  return worst;
}

inline constexpr std::size_t kSimulationBlock = 256;

// Calls visit(draw_index, z) for B draws z = L * eps. Draws are grouped in
// blocks of kSimulationBlock whose RNG substream depends only on (seed, block),
// so the draws are identical for any thread count. visit runs concurrently
// for different blocks.
template <typename Visit>
void simulate_null_each(const NullJointModel& model, std::size_t B, std::uint64_t seed,
                        unsigned threads, Visit&& visit) {
  detail::require(B >= 1, "simulate_null: need B >= 1");
  const std::size_t k = model.k();
  const std::size_t r = model.rank;
  const std::size_t n_blocks = (B + kSimulationBlock - 1) / kSimulationBlock;
  parallel_blocks(n_blocks, threads, [&](std::size_t b) {
    std::mt19937_64 rng(substream_seed(seed, b));
    std::normal_distribution<double> normal;
    std::vector<double> eps(r), z(k);
    const std::size_t end = std::min(B, (b + 1) * kSimulationBlock);
    for (std::size_t d = b * kSimulationBlock; d < end; ++d) {
      for (auto& e : eps) e = normal(rng);
      for (std::size_t i = 0; i < k; ++i) {
        const double* li = &model.factor[i * r];
        double s = 0.0;
        for (std::size_t l = 0; l < r; ++l) s += li[l] * eps[l];
        z[i] = s;
      }
      visit(d, std::span<const double>(z));
    }
  });
}

// B x k matrix of simulated null Z-vectors, row-major.
inline std::vector<double> simulate_null(const NullJointModel& model, std::size_t B,
                                         std::uint64_t seed, unsigned threads = 1) {
  const std::size_t k = model.k();
  std::vector<double> out(B * k);
  simulate_null_each(model, B, seed, threads, [&](std::size_t d, std::span<const double> z) {
    std::copy(z.begin(), z.end(), out.begin() + static_cast<std::ptrdiff_t>(d * k));
  });
  return out;
}

struct MaxTResult {
  double t_star = 0.0;
  double alpha = 0.0;
  std::size_t B = 0;
  std::uint64_t seed = 0;
  std::vector<bool> significant;  // aligned with the input results
  std::vector<double> null_max;   // simulated max T, in draw order

  std::size_t n_significant() const {
    return static_cast<std::size_t>(std::count(significant.begin(), significant.end(), true));
  }
};

// Empirical upper quantile: the ceil((1-alpha) B)-th smallest value.
inline double upper_quantile(std::vector<double> sample, double alpha) {
  detail::require(!sample.empty(), "upper_quantile: empty sample");
  const double B = static_cast<double>(sample.size());
  auto rank = static_cast<long long>(std::ceil((1.0 - alpha) * B - 1e-9));
  rank = std::clamp<long long>(rank, 1, static_cast<long long>(sample.size()));
  const auto idx = static_cast<std::size_t>(rank - 1);
  std::nth_element(sample.begin(), sample.begin() + static_cast<std::ptrdiff_t>(idx), sample.end());
  return sample[idx];
}

// Single-step maxT on T = Z/sqrt(m) against the simulated Gaussian null.
inline MaxTResult max_t(std::span<const EnrichmentResult> results, const NullJointModel& model,
                        double alpha, std::size_t B, std::uint64_t seed, unsigned threads = 1) {
  detail::require(alpha > 0.0 && alpha <= 1.0, "max_t: alpha must lie in (0,1]");
  detail::require(B >= 100, "max_t: need B >= 100 simulations");
  detail::require(results.size() == model.k(), "max_t: results and model differ in length");
  for (std::size_t i = 0; i < results.size(); ++i) {
    if (results[i].category_id != model.ids[i] || results[i].m != model.sizes[i]) {
      throw std::invalid_argument("max_t: results and model list different categories at " +
                                  std::to_string(i));
    }
  }
  std::vector<double> inv_sqrt_m(model.k());
  for (std::size_t i = 0; i < model.k(); ++i)
    inv_sqrt_m[i] = 1.0 / std::sqrt(static_cast<double>(model.sizes[i]));

  MaxTResult out;
  out.alpha = alpha;
  out.B = B;
  out.seed = seed;
  out.null_max.assign(B, 0.0);
  simulate_null_each(model, B, seed, threads, [&](std::size_t d, std::span<const double> z) {
    double mx = -INFINITY;
    for (std::size_t i = 0; i < z.size(); ++i) mx = std::max(mx, z[i] * inv_sqrt_m[i]);
    out.null_max[d] = mx;
  });
  out.t_star = upper_quantile(out.null_max, alpha);
  out.significant.resize(results.size());
  for (std::size_t i = 0; i < results.size(); ++i)
    out.significant[i] = results[i].t > out.t_star;
  return out;
}

// Joint Z-scores under uniform relabelling of the scores (B x k, row-major).
// mu and sigma are permutation invariant, so only the category means move.
inline std::vector<double> permutation_joint_oracle(const GeneScoreTable& table,
                                                    const BoundCatalog& catalog, std::size_t B,
                                                    std::uint64_t seed, unsigned threads = 1) {
  detail::require(B >= 1, "permutation_joint_oracle: need B >= 1");
  if (!catalog.table().same_universe(table)) {
    throw std::invalid_argument("permutation_joint_oracle: table is not over the catalog's universe");
  }
  const auto summary = UniverseSummary::of(table.scores());
  const std::size_t k = catalog.size();
  std::vector<double> mu(k), sigma(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto mom = random_set_moments(summary, catalog[i].size());
    if (mom.sigma2 <= 0.0) throw degenerate_error("permutation oracle: zero null variance");
    mu[i] = mom.mu;
    sigma[i] = mom.sigma();
  }
  std::vector<double> out(B * k);
  const std::size_t n_blocks = (B + kSimulationBlock - 1) / kSimulationBlock;
  parallel_blocks(n_blocks, threads, [&](std::size_t b) {
    std::mt19937_64 rng(substream_seed(seed, b));
    std::vector<double> s(table.scores().begin(), table.scores().end());
    const std::size_t end = std::min(B, (b + 1) * kSimulationBlock);
    for (std::size_t d = b * kSimulationBlock; d < end; ++d) {
      std::shuffle(s.begin(), s.end(), rng);
      for (std::size_t i = 0; i < k; ++i) {
        CompensatedSum acc;
        for (auto g : catalog[i].members) acc.add(s[g]);
        const double xbar = acc.value() / static_cast<double>(catalog[i].size());
        out[d * k + i] = (xbar - mu[i]) / sigma[i];
      }
    }
  });
  return out;
}

// Every one of the G! relabellings, for small universes (G <= 10).
inline std::vector<double> exhaustive_permutation_joint(const GeneScoreTable& table,
                                                        const BoundCatalog& catalog) {
  const std::size_t G = table.size();
  detail::require(G <= 10, "exhaustive_permutation_joint: G too large");
  if (!catalog.table().same_universe(table)) {
    throw std::invalid_argument("exhaustive_permutation_joint: table is not over the catalog's universe");
  }
  const auto summary = UniverseSummary::of(table.scores());
  const std::size_t k = catalog.size();
  std::vector<double> mu(k), sigma(k);
  for (std::size_t i = 0; i < k; ++i) {
    const auto mom = random_set_moments(summary, catalog[i].size());
    if (mom.sigma2 <= 0.0) throw degenerate_error("permutation oracle: zero null variance");
    mu[i] = mom.mu;
    sigma[i] = mom.sigma();
  }
  std::vector<std::size_t> perm(G);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<double> out;
  do {
    for (std::size_t i = 0; i < k; ++i) {
      CompensatedSum acc;
      for (auto g : catalog[i].members) acc.add(table.score(perm[g]));
      const double xbar = acc.value() / static_cast<double>(catalog[i].size());
      out.push_back((xbar - mu[i]) / sigma[i]);
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

}  // namespace randset
