#pragma once

// Random-set calibration of category statistics.
//
// A category of size m is compared with a uniformly random m-subset of the
// universe, conditional on the observed gene scores. Only the first two
// moments of the subset mean are needed:
//
//   mu     = sum(s) / G
//   sigma2 = (1/m) * ((G - m) / (G - 1)) * (sum(s^2)/G - mu^2)
//
// and Z = (xbar - mu) / sigma. Binary scores give the normal-score version of
// the 2x2 Pearson/Fisher test; ranks give a Wilcoxon-type test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "randset/catalog.hpp"
#include "randset/error.hpp"
#include "randset/numerics.hpp"
#include "randset/parallel.hpp"

namespace randset {

struct RandomSetMoments {
  double mu = 0.0;
  double sigma2 = 0.0;
  std::size_t m = 0;
  std::size_t G = 0;

  double sigma() const { return std::sqrt(sigma2); }
};

// Per-table aggregates shared by every category scored against the table.
struct UniverseSummary {
  std::size_t G = 0;
  double mean = 0.0;
  double sum_sq_dev = 0.0;  // sum (s - mean)^2
  bool constant = false;

  static UniverseSummary of(std::span<const double> scores) {
    detail::require(!scores.empty(), "UniverseSummary: empty score vector");
    UniverseSummary u;
    u.G = scores.size();
    u.constant = std::all_of(scores.begin(), scores.end(),
                             [&](double s) { return s == scores.front(); });
    if (u.constant) {
      u.mean = scores.front();
      return u;
    }
    u.mean = compensated_sum(scores) / static_cast<double>(u.G);
    CompensatedSum ss;
    for (double s : scores) ss.add((s - u.mean) * (s - u.mean));
    u.sum_sq_dev = ss.value();
    return u;
  }
};

inline RandomSetMoments random_set_moments(const UniverseSummary& u, std::size_t m) {
  detail::require(m >= 1 && m <= u.G, "random_set_moments: need 1 <= m <= G");
  RandomSetMoments out{u.mean, 0.0, m, u.G};
  if (u.constant || m == u.G) return out;
  // One rounding of the exact rational (G-m)*SS / (m*(G-1)*G); integer-valued
  // scores such as untied ranks therefore reproduce closed forms bit for bit.
  const double G = static_cast<double>(u.G);
  const double num = static_cast<double>(u.G - m) * u.sum_sq_dev;
  const double den = static_cast<double>(m) * (G - 1.0) * G;
  out.sigma2 = num / den;
  return out;
}

inline RandomSetMoments random_set_moments(const GeneScoreTable& table, std::size_t m) {
  return random_set_moments(UniverseSummary::of(table.scores()), m);
}

// Closed form for untied ranks 1..G.
inline RandomSetMoments wilcoxon_moments(std::size_t G, std::size_t m) {
  detail::require(m >= 1 && m < G, "wilcoxon_moments: need 1 <= m < G");
  const double num = static_cast<double>(G - m) * static_cast<double>(G + 1);
  return {static_cast<double>(G + 1) / 2.0, num / (12.0 * static_cast<double>(m)), m, G};
}

struct EnrichmentResult {
  std::string category_id;
  std::string description;
  std::size_t m = 0;
  double xbar = 0.0;
  double mu = 0.0;
  double sigma = 0.0;
  double z = 0.0;
  double t = 0.0;  // z / sqrt(m)
  double p_nominal = 0.0;
  std::optional<double> z_adjusted;
};

inline EnrichmentResult z_score(const BoundCategory& category, const GeneScoreTable& table,
                                const UniverseSummary& summary) {
  if (category.universe != table.universe()) {
    throw std::invalid_argument("z_score: category is bound to a different universe");
  }
  const std::size_t m = category.size();
  const auto mom = random_set_moments(summary, m);
  if (mom.sigma2 <= 0.0) {
    const std::string cause =
        m == summary.G ? "category covers the whole universe (m = G)" : "all scores are equal";
    throw degenerate_error("category '" + category.id + "': zero null variance, " + cause);
  }
  CompensatedSum s;
  for (auto g : category.members) s.add(table.score(g));
  EnrichmentResult r;
  r.category_id = category.id;
  r.description = category.description;
  r.m = m;
  r.xbar = s.value() / static_cast<double>(m);
  r.mu = mom.mu;
  r.sigma = mom.sigma();
  r.z = (r.xbar - r.mu) / r.sigma;
  r.t = r.z / std::sqrt(static_cast<double>(m));
  r.p_nominal = norm_sf(r.z);
  return r;
}

inline EnrichmentResult z_score(const BoundCategory& category, const GeneScoreTable& table) {
  return z_score(category, table, UniverseSummary::of(table.scores()));
}

// Scores every category of the catalog; output follows catalog order.
inline std::vector<EnrichmentResult> score_all(const BoundCatalog& catalog,
                                               const GeneScoreTable& table,
                                               unsigned threads = 1) {
  if (!catalog.table().same_universe(table)) {
    throw std::invalid_argument("score_all: table is not over the catalog's universe");
  }
  const auto summary = UniverseSummary::of(table.scores());
  std::vector<EnrichmentResult> out(catalog.size());
  constexpr std::size_t kBlock = 64;
  const std::size_t n_blocks = (catalog.size() + kBlock - 1) / kBlock;
  parallel_blocks(n_blocks, threads, [&](std::size_t b) {
    const std::size_t end = std::min(catalog.size(), (b + 1) * kBlock);
    for (std::size_t i = b * kBlock; i < end; ++i) out[i] = z_score(catalog[i], table, summary);
  });
  return out;
}

// Variance-ratio correction for categories measured by several probes per gene.
inline double adjust_for_probesets(double z, std::size_t m_g, std::size_t m_p, std::size_t G) {
  detail::require(m_g >= 1, "adjust_for_probesets: need m_g >= 1");
  detail::require(m_g <= m_p, "adjust_for_probesets: m_g exceeds m_p");
  detail::require(m_p < G, "adjust_for_probesets: need m_p < G");
  const double num = static_cast<double>(m_g) * static_cast<double>(G - m_p);
  const double den = static_cast<double>(m_p) * static_cast<double>(G - m_g);
  return z * std::sqrt(num / den);
}

// Gene selection rules producing binary scores.
struct SelectionRule {
  enum class Kind { fdr_bh, fdr_storey, threshold, top_n };

  Kind kind = Kind::fdr_bh;
  double level = 0.05;      // FDR target for fdr_* rules
  double lambda = 0.5;      // fdr_storey only
  double threshold = 0.0;   // select s > threshold
  std::size_t n = 0;        // top_n

  static SelectionRule bh(double level) { return {Kind::fdr_bh, level}; }
  static SelectionRule storey(double level, double lambda = 0.5) {
    return {Kind::fdr_storey, level, lambda};
  }
  static SelectionRule score_threshold(double k) {
    SelectionRule r;
    r.kind = Kind::threshold;
    r.threshold = k;
    return r;
  }
  static SelectionRule top(std::size_t n) {
    SelectionRule r;
    r.kind = Kind::top_n;
    r.n = n;
    return r;
  }
};

namespace detail {

// Benjamini-Hochberg step-up on upper-tail normal p-values.
inline std::vector<double> bh_select(std::span<const double> pvals, double level) {
  const std::size_t G = pvals.size();
  std::vector<std::size_t> order(G);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return pvals[a] < pvals[b]; });
  std::optional<double> cutoff;
  for (std::size_t i = G; i >= 1; --i) {
    const double p = pvals[order[i - 1]];
    if (p <= static_cast<double>(i) * level / static_cast<double>(G)) {
      cutoff = p;
      break;
    }
  }
  std::vector<double> out(G, 0.0);
  if (!cutoff) return out;
  for (std::size_t g = 0; g < G; ++g) out[g] = pvals[g] <= *cutoff ? 1.0 : 0.0;
  return out;
}

}  // namespace detail

inline GeneScoreTable select_genes(const GeneScoreTable& table, const SelectionRule& rule) {
  const auto s = table.scores();
  const std::size_t G = s.size();
  std::vector<double> ind(G, 0.0);
  switch (rule.kind) {
    case SelectionRule::Kind::threshold:
      for (std::size_t g = 0; g < G; ++g) ind[g] = s[g] > rule.threshold ? 1.0 : 0.0;
      break;
    case SelectionRule::Kind::top_n: {
      detail::require(rule.n <= G, "select_genes: top n exceeds universe size");
      std::vector<std::size_t> order(G);
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::stable_sort(order.begin(), order.end(),
                       [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
      for (std::size_t i = 0; i < rule.n; ++i) ind[order[i]] = 1.0;
      break;
    }
    case SelectionRule::Kind::fdr_bh:
    case SelectionRule::Kind::fdr_storey: {
      detail::require(rule.level > 0.0 && rule.level < 1.0, "select_genes: FDR level must lie in (0,1)");
      std::vector<double> p(G);
      for (std::size_t g = 0; g < G; ++g) p[g] = norm_sf(s[g]);
      double level = rule.level;
      if (rule.kind == SelectionRule::Kind::fdr_storey) {
        detail::require(rule.lambda > 0.0 && rule.lambda < 1.0, "select_genes: lambda must lie in (0,1)");
        const auto above = static_cast<double>(
            std::count_if(p.begin(), p.end(), [&](double v) { return v > rule.lambda; }));
        const double pi0 = std::min(1.0, above / ((1.0 - rule.lambda) * static_cast<double>(G)));
        level = pi0 > 0.0 ? std::min(1.0, level / pi0) : 1.0;
      }
      ind = detail::bh_select(p, level);
      break;
    }
  }
  return table.with_scores(std::move(ind));
}

enum class ScoreKind { average, selection, rank };

// Gene-level scores actually averaged for the requested test.
inline GeneScoreTable transform_scores(const GeneScoreTable& table, ScoreKind kind,
                                       const SelectionRule& rule = {}) {
  switch (kind) {
    case ScoreKind::average:
      return table;
    case ScoreKind::rank:
      return table.with_scores(midranks(table.scores()));
    case ScoreKind::selection:
      return select_genes(table, rule);
  }
  return table;
}

}  // namespace randset
