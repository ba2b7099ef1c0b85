// netspill: estimation, diagnostics and simulation for network experiments
// with sampled units and networks.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "netspill/netspill.hpp"

namespace {

using namespace netspill;

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  out << text;
}

struct CommonFlags {
  std::string graph;
  int index_base = 0;
  std::string data;
  std::string spec;
  std::string p = "0.5";
  std::string scheme = "induced";
  std::optional<std::size_t> censor_cap;
  std::uint64_t seed = 1;
  std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--graph", f.graph, "Edge list (one 'i j' pair per line)")->required();
  cmd->add_option("--index-base", f.index_base, "Node numbering of the edge list and id column")
      ->check(CLI::IsMember({0, 1}));
  cmd->add_option("--spec", f.spec, "Exposure spec JSON")->required();
  cmd->add_option("--p", f.p, "Assignment probability, or the name of a data column holding one per unit");
  cmd->add_option("--scheme", f.scheme, "Network sampling scheme")->check(CLI::IsMember({"induced", "star"}));
  cmd->add_option("--censor-cap", f.censor_cap, "Maximum number of reported links per unit");
  cmd->add_option("--seed", f.seed, "Master seed");
  cmd->add_option("--out", f.out, "Output file (default: stdout)");
}

IndexBase base_of(int b) { return b == 1 ? IndexBase::One : IndexBase::Zero; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Regression-based spillover estimation with sampled networks"};
  app.set_version_flag("--version", std::string(netspill::kVersion));
  app.require_subcommand(1);

  CommonFlags f;
  AnalysisConfig acfg;
  std::optional<double> rho;
  std::string variance = "eigen", gamma = "hat";
  std::optional<std::size_t> hac_k;
  std::size_t diagnose_b = 1000;

  auto add_analysis = [&](CLI::App* cmd) {
    add_common(cmd, f);
    cmd->add_option("--data", f.data, "Unit CSV with columns Y, R, D (optional id, covariates, T_<name>)")
        ->required();
    cmd->add_option("--covariates", acfg.covariates, "Extra covariate columns ('intercept' for a constant)")
        ->delimiter(',');
    cmd->add_flag("!--no-cond-mean", acfg.cond_mean_covariates,
                  "Do not add the E[T|R] columns to the covariates");
    auto* r = cmd->add_option("--rho", rho, "Known sampling probability");
    auto* e = cmd->add_flag("--estimate-rho", acfg.estimate_rho, "Replace rho by N/n");
    r->excludes(e);
    cmd->add_option("--hac-k", hac_k, "HAC radius K (kernel reaches distance 2K)")->check(CLI::PositiveNumber);
    cmd->add_option("--variance", variance, "Headline variance estimator")
        ->check(CLI::IsMember({"ehw", "plain", "eigen"}));
    cmd->add_option("--gamma", gamma, "Nuisance coefficients used in the scores")
        ->check(CLI::IsMember({"hat", "tilde"}));
    cmd->add_option("--gamma-m", acfg.gamma_m, "Leading covariate columns proportional to R_i");
  };

  auto* estimate = app.add_subcommand("estimate", "Fit the residualized regression and its standard errors");
  add_analysis(estimate);
  auto* diagnose = app.add_subcommand("diagnose", "Check covariates, correlation between exposures and sparsity");
  add_analysis(diagnose);
  diagnose->add_option("--replications", diagnose_b, "Draws of D* for the correlation check")
      ->check(CLI::Range(100, 100000000));

  ExpectationConfig ecfg;
  auto* expectation = app.add_subcommand("expectation", "Write E[T|R] for every unit as CSV");
  add_common(expectation, f);
  expectation->add_option("--data", f.data, "CSV with an R column (and optional id, p columns)");
  expectation->add_option("--rho", rho, "Draw R with this probability instead of reading it");
  expectation->add_option("--nodes", ecfg.nodes, "Number of nodes when no data file is given (0: infer)");

  std::string config_path, graph_override;
  std::optional<std::size_t> threads, replications;
  std::optional<std::uint64_t> sim_seed;
  std::string out_dir;
  auto* simulate = app.add_subcommand("simulate", "Run the Monte Carlo study");
  simulate->add_option("--config", config_path, "Simulation config JSON")->required();
  simulate->add_option("--out", out_dir, "Directory for simulation.json and simulation.csv")->required();
  simulate->add_option("--graph", graph_override, "Edge list overriding the config's graph");
  simulate->add_option("--seed", sim_seed, "Master seed overriding the config");
  simulate->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  simulate->add_option("--replications", replications, "Replications overriding the config")
      ->check(CLI::PositiveNumber);

  std::string summary_graph, summary_out;
  int summary_base = 0;
  std::size_t summary_nodes = 0, summary_k = 1;
  auto* summary = app.add_subcommand("summary", "Network summary and sparsity diagnostics");
  summary->add_option("--graph", summary_graph, "Edge list")->required();
  summary->add_option("--index-base", summary_base, "Node numbering")->check(CLI::IsMember({0, 1}));
  summary->add_option("--nodes", summary_nodes, "Number of nodes (0: infer from the largest index)");
  summary->add_option("--hac-k", summary_k, "Radius K for the sparsity diagnostics")->check(CLI::PositiveNumber);
  summary->add_option("--out", summary_out, "Output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*estimate || *diagnose) {
      acfg.graph_path = f.graph;
      acfg.index_base = base_of(f.index_base);
      acfg.data_path = f.data;
      acfg.spec_path = f.spec;
      acfg.rho = rho;
      acfg.p = f.p;
      acfg.scheme = parse_scheme(f.scheme);
      acfg.censor_cap = f.censor_cap;
      acfg.hac_k = hac_k;
      acfg.variance = variance == "ehw" ? VarianceKind::EHW
                      : variance == "plain" ? VarianceKind::Plain
                                            : VarianceKind::EigenClipped;
      acfg.gamma = gamma == "hat" ? GammaSource::GammaHat : GammaSource::GammaTilde;
      acfg.seed = f.seed;
      acfg.replications = diagnose_b;
      const Json j = *estimate ? cmd_estimate(acfg) : cmd_diagnose(acfg);
      write_output(f.out, j.dump(2) + "\n");
    } else if (*expectation) {
      ecfg.graph_path = f.graph;
      ecfg.index_base = base_of(f.index_base);
      ecfg.spec_path = f.spec;
      ecfg.data_path = f.data;
      ecfg.rho = rho;
      ecfg.p = f.p;
      ecfg.scheme = parse_scheme(f.scheme);
      ecfg.censor_cap = f.censor_cap;
      ecfg.seed = f.seed;
      write_output(f.out, cmd_expectation(ecfg));
    } else if (*simulate) {
      SimulationConfig cfg = load_simulation_config(config_path);
      if (!graph_override.empty()) cfg.graph_path = graph_override;
      if (sim_seed) cfg.seed = *sim_seed;
      if (threads) cfg.threads = *threads;
      if (replications) cfg.replications = *replications;
      cfg.validate();
      const SimulationReport rep = run_simulation(cfg);
      std::error_code ec;
      std::filesystem::create_directories(out_dir, ec);
      if (ec) throw InputError("cannot create " + out_dir + ": " + ec.message());
      const std::filesystem::path dir(out_dir);
      write_output((dir / "simulation.json").string(), simulation_report_json(rep, cfg).dump(2) + "\n");
      write_output((dir / "simulation.csv").string(), simulation_report_csv(rep));
    } else if (*summary) {
      const Json j = cmd_summary(summary_graph, base_of(summary_base), summary_nodes, summary_k);
      write_output(summary_out, j.dump(2) + "\n");
    }
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
