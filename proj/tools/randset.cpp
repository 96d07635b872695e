// randset: random-set gene-set enrichment from the command line.
//
//   randset score    --scores S --sets GMT [--probe-map P] [...]
//   randset adjust   --scores PROBES --probe-map P
//   randset simulate --scores S --sets GMT [--alpha A --B N --seed S --dump-null PATH]
//   randset power    [--m 20 --pi 0.2 --alpha 0.05 --fdr 0.05 ...]
//
// Exit status: 0 success, 2 input or usage error, 3 degenerate statistics or
// infeasible FDR target, 1 anything else.

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>

#include "CLI11.hpp"
#include "randset/randset.hpp"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitDegenerate = 3;

int fail(std::string_view kind, std::string msg, int code) {
  for (auto& ch : msg)
    if (ch == '\n' || ch == '\t') ch = ' ';
  std::cerr << "randset: error=" << kind << ": " << msg << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  randset::RunConfig cfg;
  std::string out_path;
  std::string dump_path;
  std::string universe = "all";
  std::string method = "ave";
  std::string select = "bh";
  std::string sort = "t";

  CLI::App app{"Random-set gene-set enrichment scoring, maxT inference and power analysis"};
  app.require_subcommand(1);

  auto* score = app.add_subcommand("score", "score every gene set");
  auto* simulate = app.add_subcommand("simulate", "maxT over gene sets with a simulated joint null");
  for (auto* sub : {score, simulate}) {
    sub->add_option("--scores", cfg.scores_path, "gene_id<TAB>score file")->required();
    sub->add_option("--sets", cfg.sets_path, "gene sets in GMT format")->required();
    sub->add_option("--probe-map", cfg.probe_map_path, "probe_id<TAB>gene_id file (adds z_adjusted)");
    sub->add_option("--universe", universe, "all | annotated")
        ->check(CLI::IsMember({"all", "annotated"}))
        ->capture_default_str();
    sub->add_option("--min-size", cfg.min_size, "drop sets smaller than this")->capture_default_str();
    sub->add_option("--method", method, "ave | sel | rank")
        ->check(CLI::IsMember({"ave", "sel", "rank"}))
        ->capture_default_str();
    sub->add_option("--select", select, "selection rule for --method sel")
        ->check(CLI::IsMember({"bh", "storey", "threshold", "top"}))
        ->capture_default_str();
    sub->add_option("--fdr", cfg.fdr, "gene-list FDR for bh/storey")->capture_default_str();
    sub->add_option("--lambda", cfg.lambda, "storey pi0 tuning point")->capture_default_str();
    sub->add_option("--threshold", cfg.threshold, "select genes with score > K");
    sub->add_option("--top", cfg.top, "select the N highest-scoring genes");
    sub->add_flag("--negate", cfg.negate, "negate scores to test the lower tail");
    sub->add_option("--sort", sort, "order rows by t or z")
        ->check(CLI::IsMember({"t", "z"}))
        ->capture_default_str();
    sub->add_option("--threads", cfg.threads, "worker threads, 0 = all cores")->capture_default_str();
    sub->add_option("--out", out_path, "output file (default stdout)");
  }
  simulate->add_option("--alpha", cfg.alpha, "family-wise level")->capture_default_str();
  simulate->add_option("--B", cfg.B, "number of simulated null vectors")->capture_default_str();
  simulate->add_option("--seed", cfg.seed, "RNG seed")->capture_default_str();
  simulate->add_option("--dump-null", dump_path, "write simulated max-T values, one per line");

  auto* adjust = app.add_subcommand("adjust", "reduce probe-level scores to genes by the median");
  adjust->add_option("--scores", cfg.scores_path, "probe_id<TAB>score file")->required();
  adjust->add_option("--probe-map", cfg.probe_map_path, "probe_id<TAB>gene_id file")->required();
  adjust->add_option("--out", out_path, "output file (default stdout)");

  auto* power = app.add_subcommand("power", "averaging vs selection power grid (CSV)");
  power->add_option("--m", cfg.m, "category size")->capture_default_str();
  power->add_option("--pi", cfg.pi, "altered fraction of all genes")->capture_default_str();
  power->add_option("--alpha", cfg.alpha, "category test level")->capture_default_str();
  power->add_option("--fdr", cfg.fdr, "gene-list FDR")->capture_default_str();
  power->add_option("--enrichment", cfg.enrichment.values, "explicit pi_c - pi values")
      ->delimiter(',');
  power->add_option("--enrichment-max", cfg.enrichment.max)->capture_default_str();
  power->add_option("--enrichment-steps", cfg.enrichment.steps)->capture_default_str();
  power->add_option("--delta", cfg.delta.values, "explicit effect sizes")->delimiter(',');
  power->add_option("--delta-max", cfg.delta.max)->capture_default_str();
  power->add_option("--delta-steps", cfg.delta.steps)->capture_default_str();
  power->add_option("--out", out_path, "output file (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    return fail("usage", e.what(), kExitInput);
  }

  cfg.universe = universe == "annotated" ? randset::UniverseMode::annotated : randset::UniverseMode::all;
  cfg.method = method == "sel"    ? randset::ScoreKind::selection
               : method == "rank" ? randset::ScoreKind::rank
                                  : randset::ScoreKind::average;
  static const std::map<std::string, randset::SelectionRule::Kind> kinds = {
      {"bh", randset::SelectionRule::Kind::fdr_bh},
      {"storey", randset::SelectionRule::Kind::fdr_storey},
      {"threshold", randset::SelectionRule::Kind::threshold},
      {"top", randset::SelectionRule::Kind::top_n}};
  cfg.select = kinds.at(select);
  cfg.sort_by_z = sort == "z";

  try {
    std::ofstream file;
    if (!out_path.empty()) {
      file.open(out_path, std::ios::binary);
      if (!file) throw randset::input_error(out_path + ": cannot open for writing");
    }
    std::ostream& out = out_path.empty() ? std::cout : file;

    if (*score) {
      cfg.subcommand = "score";
      randset::run_score(cfg, out);
    } else if (*simulate) {
      cfg.subcommand = "simulate";
      std::ofstream dump;
      if (!dump_path.empty()) {
        dump.open(dump_path, std::ios::binary);
        if (!dump) throw randset::input_error(dump_path + ": cannot open for writing");
      }
      randset::run_simulate(cfg, out, dump_path.empty() ? nullptr : &dump);
    } else if (*adjust) {
      cfg.subcommand = "adjust";
      randset::run_adjust(cfg, out);
    } else if (*power) {
      cfg.subcommand = "power";
      randset::run_power(cfg, out);
    }
    out.flush();
    if (!out) throw randset::input_error("write failed");
  } catch (const randset::degenerate_error& e) {
    return fail("degenerate", e.what(), kExitDegenerate);
  } catch (const randset::infeasible_error& e) {
    return fail("infeasible", e.what(), kExitDegenerate);
  } catch (const randset::input_error& e) {
    return fail("input", e.what(), kExitInput);
  } catch (const std::invalid_argument& e) {
    return fail("input", e.what(), kExitInput);
  } catch (const std::exception& e) {
    return fail("internal", e.what(), 1);
  }
  return 0;
}
