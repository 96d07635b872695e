#pragma once

// The four command-line workflows, writing to streams so they can be driven
// from tests as well as from tools/randset.
//
// Output is deterministic: '#' header lines echo every option that affects the
// content (not the thread count or output paths), and all numbers are printed
// with 17 significant digits.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <numeric>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "randset/catalog.hpp"
#include "randset/io.hpp"
#include "randset/multicat.hpp"
#include "randset/power.hpp"
#include "randset/scoring.hpp"

namespace randset {

struct Axis {
  std::vector<double> values;  // explicit list wins when non-empty
  double max = 0.0;
  std::size_t steps = 0;

  // Explicit values, or max/steps, max*2/steps, ..., max.
  std::vector<double> resolve() const {
    if (!values.empty()) return values;
    std::vector<double> out;
    for (std::size_t i = 1; i <= steps; ++i)
      out.push_back(max * static_cast<double>(i) / static_cast<double>(steps));
    return out;
  }
};

struct RunConfig {
  std::string subcommand;
  std::string scores_path;
  std::string sets_path;
  std::string probe_map_path;
  UniverseMode universe = UniverseMode::all;
  std::size_t min_size = 10;
  ScoreKind method = ScoreKind::average;
  SelectionRule::Kind select = SelectionRule::Kind::fdr_bh;
  double fdr = 0.05;
  double lambda = 0.5;
  double threshold = 0.0;
  std::size_t top = 0;
  double alpha = 0.05;
  std::size_t B = 10000;
  std::uint64_t seed = 0;
  bool negate = false;
  bool sort_by_z = false;
  unsigned threads = 1;

  // power
  std::size_t m = 20;
  double pi = 0.2;
  Axis enrichment{{}, 0.8, 40};
  Axis delta{{}, 5.0, 50};

  SelectionRule rule() const {
    SelectionRule r;
    r.kind = select;
    r.level = fdr;
    r.lambda = lambda;
    r.threshold = threshold;
    r.n = top;
    return r;
  }
};

inline std::string format_real(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string_view to_string(UniverseMode m) {
  return m == UniverseMode::all ? "all" : "annotated";
}

inline std::string_view to_string(ScoreKind k) {
  switch (k) {
    case ScoreKind::average: return "ave";
    case ScoreKind::selection: return "sel";
    case ScoreKind::rank: return "rank";
  }
  return "?";
}

inline std::string_view to_string(SelectionRule::Kind k) {
  switch (k) {
    case SelectionRule::Kind::fdr_bh: return "bh";
    case SelectionRule::Kind::fdr_storey: return "storey";
    case SelectionRule::Kind::threshold: return "threshold";
    case SelectionRule::Kind::top_n: return "top";
  }
  return "?";
}

namespace detail {

inline std::string format_axis(const Axis& a) {
  std::string s;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    if (i) s += ',';
    s += format_real(a.values[i]);
  }
  return s;
}

// Replayable command line for the options that shape the output.
inline std::string command_echo(const RunConfig& c) {
  std::ostringstream os;
  os << c.subcommand;
  if (c.subcommand == "power") {
    os << " --m " << c.m << " --pi " << format_real(c.pi) << " --alpha " << format_real(c.alpha)
       << " --fdr " << format_real(c.fdr);
    if (c.enrichment.values.empty()) {
      os << " --enrichment-max " << format_real(c.enrichment.max) << " --enrichment-steps "
         << c.enrichment.steps;
    } else {
      os << " --enrichment " << format_axis(c.enrichment);
    }
    if (c.delta.values.empty()) {
      os << " --delta-max " << format_real(c.delta.max) << " --delta-steps " << c.delta.steps;
    } else {
      os << " --delta " << format_axis(c.delta);
    }
    return os.str();
  }
  os << " --scores " << c.scores_path;
  if (!c.probe_map_path.empty()) os << " --probe-map " << c.probe_map_path;
  if (c.subcommand == "adjust") return os.str();
  os << " --sets " << c.sets_path << " --universe " << to_string(c.universe) << " --min-size "
     << c.min_size << " --method " << to_string(c.method);
  if (c.method == ScoreKind::selection) {
    os << " --select " << to_string(c.select);
    switch (c.select) {
      case SelectionRule::Kind::fdr_bh: os << " --fdr " << format_real(c.fdr); break;
      case SelectionRule::Kind::fdr_storey:
        os << " --fdr " << format_real(c.fdr) << " --lambda " << format_real(c.lambda);
        break;
      case SelectionRule::Kind::threshold: os << " --threshold " << format_real(c.threshold); break;
      case SelectionRule::Kind::top_n: os << " --top " << c.top; break;
    }
  }
  if (c.negate) os << " --negate";
  if (c.sort_by_z) os << " --sort z";
  if (c.subcommand == "simulate") {
    os << " --alpha " << format_real(c.alpha) << " --B " << c.B << " --seed " << c.seed;
  }
  return os.str();
}

struct Scored {
  BoundCatalog catalog;
  GeneScoreTable transformed;
  std::vector<EnrichmentResult> results;  // catalog order
};

inline Scored score_inputs(const RunConfig& cfg) {
  auto table = io::parse_scores(cfg.scores_path);
  if (cfg.negate) {
    std::vector<double> neg(table.scores().begin(), table.scores().end());
    for (auto& v : neg) v = -v;
    table = table.with_scores(std::move(neg));
  }
  const auto sets = io::parse_gmt(cfg.sets_path, cfg.min_size);
  auto catalog = bind(sets, table, cfg.universe);
  auto transformed = transform_scores(catalog.table(), cfg.method, cfg.rule());
  auto results = score_all(catalog, transformed, cfg.threads);
  if (!cfg.probe_map_path.empty()) {
    const auto map = io::parse_probe_map(cfg.probe_map_path);
    const std::size_t G = catalog.universe_size();
    for (std::size_t i = 0; i < results.size(); ++i) {
      const std::size_t m_g = distinct_genes(catalog[i], catalog.table(), map);
      results[i].z_adjusted = adjust_for_probesets(results[i].z, m_g, results[i].m, G);
    }
  }
  return {std::move(catalog), std::move(transformed), std::move(results)};
}

// Indices ordered by descending t (or z); ties broken by category id.
inline std::vector<std::size_t> ranking(const std::vector<EnrichmentResult>& rs, bool by_z) {
  std::vector<std::size_t> order(rs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double ka = by_z ? rs[a].z : rs[a].t;
    const double kb = by_z ? rs[b].z : rs[b].t;
    if (ka != kb) return ka > kb;
    return rs[a].category_id < rs[b].category_id;
  });
  return order;
}

inline void write_result_header(std::ostream& out) {
  out << "category_id\tdescription\tm\txbar\tmu\tsigma\tz\tt\tp_nominal\tz_adjusted\n";
}

inline void write_result_row(std::ostream& out, const EnrichmentResult& r) {
  out << r.category_id << '\t' << r.description << '\t' << r.m << '\t' << format_real(r.xbar)
      << '\t' << format_real(r.mu) << '\t' << format_real(r.sigma) << '\t' << format_real(r.z)
      << '\t' << format_real(r.t) << '\t' << format_real(r.p_nominal) << '\t';
  if (r.z_adjusted) out << format_real(*r.z_adjusted);
  out << '\n';
}

inline void write_preamble(std::ostream& out, const RunConfig& cfg) {
  out << "# randset " << cfg.subcommand << '\n';
  out << "# command: " << command_echo(cfg) << '\n';
}

}  // namespace detail

inline void run_score(const RunConfig& cfg, std::ostream& out) {
  const auto s = detail::score_inputs(cfg);
  detail::write_preamble(out, cfg);
  out << "# G=" << s.catalog.universe_size() << '\n';
  out << "# categories=" << s.catalog.size() << '\n';
  if (cfg.method == ScoreKind::selection) {
    const auto sc = s.transformed.scores();
    out << "# selected=" << std::count(sc.begin(), sc.end(), 1.0) << '\n';
  }
  detail::write_result_header(out);
  for (auto i : detail::ranking(s.results, cfg.sort_by_z)) detail::write_result_row(out, s.results[i]);
}

// Probe-level scores reduced to gene level by the median.
inline void run_adjust(const RunConfig& cfg, std::ostream& out) {
  const auto probes = io::parse_scores(cfg.scores_path);
  const auto map = io::parse_probe_map(cfg.probe_map_path);
  const auto genes = reduce_probesets(probes, map);
  detail::write_preamble(out, cfg);
  out << "# probes=" << probes.size() << '\n';
  out << "# G=" << genes.size() << '\n';
  out << "gene_id\tscore\n";
  for (std::size_t i = 0; i < genes.size(); ++i)
    out << genes.id(i) << '\t' << format_real(genes.score(i)) << '\n';
}

inline MaxTResult run_simulate(const RunConfig& cfg, std::ostream& out,
                               std::ostream* dump_null = nullptr) {
  const auto s = detail::score_inputs(cfg);
  const auto model = build_null_model(s.catalog);
  const auto mt = max_t(s.results, model, cfg.alpha, cfg.B, cfg.seed, cfg.threads);
  detail::write_preamble(out, cfg);
  out << "# G=" << s.catalog.universe_size() << '\n';
  out << "# categories=" << s.catalog.size() << '\n';
  out << "# rank=" << model.rank << '\n';
  out << "# B=" << mt.B << '\n';
  out << "# seed=" << mt.seed << '\n';
  out << "# alpha=" << format_real(mt.alpha) << '\n';
  out << "# t_star=" << format_real(mt.t_star) << '\n';
  out << "# significant=" << mt.n_significant() << '\n';
  detail::write_result_header(out);
  for (auto i : detail::ranking(s.results, cfg.sort_by_z)) {
    if (mt.significant[i]) detail::write_result_row(out, s.results[i]);
  }
  if (dump_null) {
    for (double v : mt.null_max) *dump_null << format_real(v) << '\n';
  }
  return mt;
}

inline void run_power(const RunConfig& cfg, std::ostream& out) {
  PowerModel base;
  base.pi = cfg.pi;
  base.pi_c = cfg.pi;
  base.m = cfg.m;
  base.alpha = cfg.alpha;
  base.fdr_alpha = cfg.fdr;
  base.validate();
  const auto rows = power_grid(base, cfg.enrichment.resolve(), cfg.delta.resolve());
  detail::write_preamble(out, cfg);
  out << "pic_minus_pi,delta,power_ave,power_sel,delta_gap,superior\n";
  for (const auto& r : rows) {
    out << format_real(r.enrichment) << ',' << format_real(r.delta) << ','
        << format_real(r.power_ave) << ',' << (r.power_sel ? format_real(*r.power_sel) : "NA")
        << ',' << (r.gap ? format_real(*r.gap) : "NA") << ',' << to_string(r.superior) << '\n';
  }
}

}  // namespace randset
