// substspec: command line front end for the substspec headers.
//
//   substspec analyze   SPEC [--depth K] [--recog-max R]
//   substspec spectrum  SPEC [--q-min --q-max --q-step] [--k 3,5,7] [--out FILE]
//   substspec conjugate SPEC [--alpha-min --alpha-max --alpha-step] [--out FILE]
//   substspec oracle    SPEC [--n N] [--q LIST] [--samples S] [--seed X] [--out FILE]
//   substspec entropy   SPEC [--k-max K]

#include <cstdio>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "substspec/cli.hpp"

namespace cli = substspec::cli;

namespace {

void emit(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-")
    std::cout << text << std::flush;
  else
    cli::write_atomic(path, text);
}

void add_analyze_flags(CLI::App* cmd, cli::AnalyzeOptions& opt) {
  cmd->add_option("--depth", opt.depth, "depth K for DSC/ISC/IPP checks")->capture_default_str();
  cmd->add_option("--recog-max", opt.recog_max, "largest recognisability radius tried")
      ->capture_default_str();
  cmd->add_option("--cap", opt.cap, "support cap for exact level distributions")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lq-spectra and multifractal spectra of random substitutions"};
  app.require_subcommand(1);
  std::string spec_path, out_path;

  cli::AnalyzeOptions analyze_opt;
  auto* analyze = app.add_subcommand("analyze", "structural checks and closed-form regime (JSON)");
  analyze->add_option("spec", spec_path, "substitution spec (JSON)")->required();
  add_analyze_flags(analyze, analyze_opt);

  cli::SpectrumOptions spectrum_opt;
  auto* spectrum = app.add_subcommand("spectrum", "tau bounds per level and closed form (CSV)");
  spectrum->add_option("spec", spec_path)->required();
  spectrum->add_option("--q-min", spectrum_opt.q_min)->capture_default_str();
  spectrum->add_option("--q-max", spectrum_opt.q_max)->capture_default_str();
  spectrum->add_option("--q-step", spectrum_opt.q_step)->capture_default_str();
  spectrum->add_option("--k", spectrum_opt.ks, "levels")->delimiter(',')->capture_default_str();
  spectrum->add_option("--out", out_path, "output file (default stdout)");
  add_analyze_flags(spectrum, spectrum_opt.analyze);

  cli::ConjugateOptions conj_opt;
  double alpha_min = 0, alpha_max = 0;
  auto* conjugate = app.add_subcommand("conjugate", "multifractal spectrum f(alpha) (CSV)");
  conjugate->add_option("spec", spec_path)->required();
  auto* amin = conjugate->add_option("--alpha-min", alpha_min, "default: alpha_min of the measure");
  auto* amax = conjugate->add_option("--alpha-max", alpha_max, "default: alpha_max of the measure");
  conjugate->add_option("--alpha-step", conj_opt.alpha_step, "default: 200 intervals");
  conjugate->add_option("--out", out_path);
  add_analyze_flags(conjugate, conj_opt.analyze);

  cli::OracleOptions oracle_opt;
  std::string table_path;
  auto* oracle = app.add_subcommand("oracle", "frequency table and empirical tau (CSV + JSON)");
  oracle->add_option("spec", spec_path)->required();
  oracle->add_option("--n", oracle_opt.n, "word length")->capture_default_str();
  oracle->add_option("--q", oracle_opt.qs)->delimiter(',')->capture_default_str();
  oracle->add_option("--bound-k", oracle_opt.bound_k, "level of the tau bounds")->capture_default_str();
  oracle->add_option("--samples", oracle_opt.samples, "Monte Carlo samples (0 = none)")
      ->capture_default_str();
  oracle->add_option("--mc-k", oracle_opt.mc_k, "Monte Carlo inflation level")->capture_default_str();
  oracle->add_option("--seed", oracle_opt.seed)->capture_default_str();
  double min_bound = 0;
  auto* mb = oracle->add_option("--min-bound", min_bound, "require min mu >= bound");
  oracle->add_option("--out", out_path, "comparison CSV (default stdout)");
  oracle->add_option("--table-out", table_path, "per-word table CSV");
  add_analyze_flags(oracle, oracle_opt.analyze);

  int k_max = 5;
  cli::AnalyzeOptions entropy_opt;
  auto* entropy = app.add_subcommand("entropy", "entropy approximants (JSON)");
  entropy->add_option("spec", spec_path)->required();
  entropy->add_option("--k-max", k_max)->capture_default_str();
  add_analyze_flags(entropy, entropy_opt);

  CLI11_PARSE(app, argc, argv);

  try {
    const auto s = cli::parse_spec(spec_path);
    if (*analyze) {
      std::cout << cli::analysis_report(s, analyze_opt).dump(2) << "\n";
    } else if (*spectrum) {
      const auto out = cli::spectrum_csv(s, spectrum_opt);
      emit(out.text, out_path);
      for (const auto& n : out.notes) std::cerr << n << "\n";
      if (!out.notes.empty()) return cli::kResourceCap;
    } else if (*conjugate) {
      if (*amin) conj_opt.alpha_min = alpha_min;
      if (*amax) conj_opt.alpha_max = alpha_max;
      emit(cli::conjugate_csv(s, conj_opt).text, out_path);
    } else if (*oracle) {
      if (*mb) oracle_opt.min_bound = min_bound;
      const auto out = cli::run_oracle(s, oracle_opt);
      emit(out.comparison, out_path);
      if (!table_path.empty()) cli::write_atomic(table_path, out.table);
      std::cerr << out.summary.dump(2) << "\n";
      if (!out.invariants_ok) return cli::kInvariantFailure;
    } else if (*entropy) {
      std::cout << cli::entropy_report(s, k_max, entropy_opt).dump(2) << "\n";
    }
  } catch (const std::exception& e) {
    std::cout << cli::error_json(e).dump(2) << "\n";
    return cli::exit_code_for(e);
  }
  return cli::kOk;
}
