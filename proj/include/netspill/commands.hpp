#pragma once

// The command layer behind the netspill executable. Each command takes a
// parsed configuration and returns its report; writing is left to the caller.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netspill/design.hpp"
#include "netspill/error.hpp"
#include "netspill/estimator.hpp"
#include "netspill/exposure.hpp"
#include "netspill/graph.hpp"
#include "netspill/linalg.hpp"
#include "netspill/montecarlo.hpp"
#include "netspill/rng.hpp"
#include "netspill/spec_io.hpp"
#include "netspill/variance.hpp"

#ifndef NETSPILL_VERSION
#define NETSPILL_VERSION "0.0.0"
#endif

namespace netspill {

inline constexpr const char* kVersion = NETSPILL_VERSION;

struct AnalysisConfig {
  std::string graph_path;
  IndexBase index_base = IndexBase::Zero;
  std::string data_path;
  std::string spec_path;
  std::vector<std::string> covariates;
  /// Put the E[T~|R] columns first among the covariates.
  bool cond_mean_covariates = true;
  std::optional<double> rho;
  bool estimate_rho = false;
  /// A number, or the name of a data column holding per-unit probabilities.
  std::string p = "0.5";
  SamplingScheme scheme = SamplingScheme::InducedSubgraph;
  std::optional<std::size_t> censor_cap;
  std::optional<std::size_t> hac_k;
  VarianceKind variance = VarianceKind::EigenClipped;
  GammaSource gamma = GammaSource::GammaHat;
  /// Leading covariate columns that carry R_i as a factor.
  std::size_t gamma_m = 1;
  std::uint64_t seed = 1;
  std::size_t replications = 1000;
};

namespace detail {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline Json vec_json(const Eigen::VectorXd& v) {
  Json a = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

inline Json mat_json(const Eigen::MatrixXd& m) {
  Json a = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vec_json(m.row(r).transpose()));
  return a;
}

inline Json header(const std::string& command, std::uint64_t seed, const Json& config) {
  Json j;
  j["tool"] = "netspill";
  j["version"] = kVersion;
  j["command"] = command;
  j["config_hash"] = hex64(fnv1a(config.dump()));
  j["seed"] = seed;
  return j;
}

inline PopulationGraph load_graph(const std::string& path, std::size_t n, IndexBase base) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open graph file " + path);
  return load_edge_list(in, n, base);
}

inline bool parse_number(const std::string& s, double& out) {
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

/// Reorders table rows to node order using the optional `id` column.
inline std::vector<std::size_t> row_order(const CsvTable& t, IndexBase base) {
  const std::size_t n = t.size();
  std::vector<std::size_t> node_of_row(n);
  if (!t.has("id")) {
    for (std::size_t r = 0; r < n; ++r) node_of_row[r] = r;
    return node_of_row;
  }
  const auto ids = t.numbers("id");
  const double offset = base == IndexBase::One ? 1.0 : 0.0;
  std::vector<bool> seen(n, false);
  for (std::size_t r = 0; r < n; ++r) {
    const double v = ids[r] - offset;
    if (v < 0.0 || v >= static_cast<double>(n) || v != std::floor(v))
      throw InputError(t.source + ": line " + std::to_string(t.lines[r]) + ": id out of range");
    const auto node = static_cast<std::size_t>(v);
    if (seen[node]) throw InputError(t.source + ": line " + std::to_string(t.lines[r]) + ": duplicate id");
    seen[node] = true;
    node_of_row[r] = node;
  }
  return node_of_row;
}

template <class V>
V reorder(const V& by_row, const std::vector<std::size_t>& node_of_row) {
  V out(by_row.size());
  for (std::size_t r = 0; r < by_row.size(); ++r) out[node_of_row[r]] = by_row[r];
  return out;
}

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace detail

/// Everything derived from the input files before estimation.
struct Prepared {
  PopulationGraph g;
  ExposureSpec spec;
  DesignSpec design;
  Draw state;
  std::vector<double> p;
  Dataset ds;
  std::string rho_source;
  std::size_t K = 1;
  std::size_t gamma_m = 0;
  bool precomputed_exposures = false;
  std::vector<std::string> notes;
  Json config;
};

inline Json analysis_config_json(const AnalysisConfig& cfg) {
  Json j;
  j["graph_fnv"] = hex64(fnv1a(read_text_file(cfg.graph_path)));
  j["data_fnv"] = hex64(fnv1a(read_text_file(cfg.data_path)));
  if (!cfg.spec_path.empty()) j["spec"] = exposure_spec_to_json(load_exposure_spec(cfg.spec_path));
  j["index_base"] = cfg.index_base == IndexBase::One ? 1 : 0;
  j["covariates"] = cfg.covariates;
  j["cond_mean_covariates"] = cfg.cond_mean_covariates;
  j["rho"] = cfg.rho ? Json(*cfg.rho) : Json(nullptr);
  j["estimate_rho"] = cfg.estimate_rho;
  j["p"] = cfg.p;
  j["scheme"] = to_string(cfg.scheme);
  j["censor_cap"] = cfg.censor_cap ? Json(*cfg.censor_cap) : Json(nullptr);
  j["hac_k"] = cfg.hac_k ? Json(*cfg.hac_k) : Json(nullptr);
  j["variance"] = to_string(cfg.variance);
  j["gamma"] = cfg.gamma == GammaSource::GammaHat ? "hat" : "tilde";
  j["gamma_m"] = cfg.gamma_m;
  j["replications"] = cfg.replications;
  return j;
}

inline Prepared prepare(const AnalysisConfig& cfg) {
  if (cfg.graph_path.empty()) throw InputError("--graph is required");
  if (cfg.data_path.empty()) throw InputError("--data is required");
  if (cfg.spec_path.empty()) throw InputError("--spec is required");
  if (cfg.rho.has_value() == cfg.estimate_rho) throw InputError("give exactly one of --rho and --estimate-rho");

  Prepared pr;
  pr.config = analysis_config_json(cfg);
  const CsvTable table = read_csv_file(cfg.data_path);
  const std::size_t n = table.size();
  if (n == 0) throw InputError(cfg.data_path + ": no data rows");
  const auto order = detail::row_order(table, cfg.index_base);
  pr.g = detail::load_graph(cfg.graph_path, n, cfg.index_base);
  if (pr.g.size() != n)
    throw InputError("graph has " + std::to_string(pr.g.size()) + " nodes but the data has " + std::to_string(n) +
                     " rows");
  pr.spec = load_exposure_spec(cfg.spec_path);
  if (pr.spec.source == NetworkSource::Population)
    throw InputError(cfg.spec_path + ": observed exposures cannot use the population network; use 'sampled' or 'censored'");
  if (pr.spec.source == NetworkSource::Censored && !cfg.censor_cap)
    throw InputError("a censored-network spec needs --censor-cap");

  const Indicator R_rows = table.indicators("R");
  const Indicator R = detail::reorder(R_rows, order);
  const Eigen::VectorXd Y = detail::to_eigen(detail::reorder(table.numbers("Y"), order));
  std::size_t N = 0;
  for (auto r : R) N += r;
  if (N == 0) throw InputError(cfg.data_path + ": no sampled units (all R = 0)");

  double pv = 0.0;
  if (detail::parse_number(cfg.p, pv)) {
    pr.design.p = {pv};
  } else {
    pr.design.p = detail::reorder(table.numbers(cfg.p), order);
  }
  pr.design.scheme = cfg.scheme;
  pr.design.censor_cap = cfg.censor_cap;
  if (cfg.estimate_rho) {
    pr.design.rho = static_cast<double>(N) / static_cast<double>(n);
    pr.rho_source = "N/n";
  } else {
    pr.design.rho = *cfg.rho;
    pr.rho_source = "known";
  }
  pr.design.validate(n);
  pr.p = pr.design.p_vector(n);

  const auto names = pr.spec.names();
  bool all_precomputed = true;
  for (const auto& name : names) all_precomputed = all_precomputed && table.has("T_" + name);
  Indicator D(n, 0);
  if (!all_precomputed || table.has("D")) D = detail::reorder(table.indicators("D"), order);
  for (std::size_t i = 0; i < n; ++i)
    if (D[i] && !R[i]) throw InputError(cfg.data_path + ": unit " + std::to_string(i) + " has D = 1 but R = 0");
  pr.state = realize(pr.g, pr.design, R, D);

  pr.ds.R = R;
  pr.ds.Y = Y;
  pr.ds.exposure_names = names;
  pr.ds.cond_mean = conditional_expectation(pr.spec, pr.state, pr.g, pr.p);
  if (all_precomputed) {
    pr.precomputed_exposures = true;
    pr.ds.T.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(names.size()));
    for (std::size_t k = 0; k < names.size(); ++k)
      pr.ds.T.col(static_cast<Eigen::Index>(k)) = detail::to_eigen(detail::reorder(table.numbers("T_" + names[k], &R_rows), order));
    pr.notes.push_back("exposures read from T_* columns");
  } else {
    pr.ds.T = compute_exposure(pr.spec, pr.state, pr.g);
  }

  // Candidate covariates: conditional means first, then user columns.
  std::vector<Eigen::VectorXd> cols;
  std::vector<std::string> col_names;
  if (cfg.cond_mean_covariates)
    for (std::size_t k = 0; k < names.size(); ++k) {
      cols.push_back(pr.ds.cond_mean.col(static_cast<Eigen::Index>(k)));
      col_names.push_back("E[" + names[k] + "|R]");
    }
  const std::size_t leading = cfg.cond_mean_covariates ? std::min(cfg.gamma_m, names.size()) : cfg.gamma_m;
  for (const auto& c : cfg.covariates) {
    if (c == "intercept") {
      cols.push_back(Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)));
    } else {
      if (!table.has(c)) throw InputError(cfg.data_path + ": missing covariate column '" + c + "'");
      cols.push_back(detail::to_eigen(detail::reorder(table.numbers(c, &R_rows), order)));
    }
    col_names.push_back(c);
  }
  if (cols.empty()) throw InputError("no covariates: pass --covariates or keep the conditional-mean columns");
  Eigen::MatrixXd Zall(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) Zall.col(static_cast<Eigen::Index>(k)) = cols[k];
  const auto units = sampled_units(R);
  const auto kept = prune_collinear(gather_rows(Zall, units));
  pr.ds.Z = select_columns(Zall, kept);
  pr.gamma_m = 0;
  for (std::size_t k = 0, c = 0; c < col_names.size(); ++c) {
    if (k < kept.size() && kept[k] == c) {
      pr.ds.covariate_names.push_back(col_names[c]);
      if (c < leading) ++pr.gamma_m;
      ++k;
    } else {
      pr.notes.push_back("dropped covariate '" + col_names[c] + "': collinear with earlier columns on the sample");
    }
  }
  pr.ds.validate();
  pr.K = cfg.hac_k ? *cfg.hac_k : hac_radius(pr.spec);
  return pr;
}

struct Fitted {
  ResidualizedDesign rd;
  EstimationResult fit;
  HacKernel kernel;
  ClippedKernel clipped;
  VarianceReport variance;
};

inline Fitted fit_prepared(const Prepared& pr, const AnalysisConfig& cfg) {
  Fitted f;
  f.rd = residualize(pr.ds);
  f.fit = ols_fit(pr.ds, f.rd);
  f.kernel = hac_kernel(network_for(pr.spec.source, pr.g, pr.state), pr.ds.R, pr.K);
  f.clipped = clip_kernel(f.kernel);
  f.variance = estimate_variance(pr.ds, f.rd, f.fit, f.kernel, f.clipped, cfg.gamma, pr.design.rho, pr.gamma_m);
  return f;
}

inline Json cmd_estimate(const AnalysisConfig& cfg) {
  const Prepared pr = prepare(cfg);
  const Fitted f = fit_prepared(pr, cfg);
  Json j = detail::header("estimate", cfg.seed, pr.config);
  j["n"] = pr.g.size();
  j["N"] = f.fit.N;
  j["rho"] = pr.design.rho;
  j["rho_source"] = pr.rho_source;
  j["exposures"] = pr.ds.exposure_names;
  j["covariates"] = pr.ds.covariate_names;
  j["skipped_columns"] = pr.notes;
  j["theta_hat"] = detail::vec_json(f.fit.theta);
  j["gamma"] = detail::vec_json(f.fit.gamma);
  j["gamma_source"] = cfg.gamma == GammaSource::GammaHat ? "hat" : "tilde";
  j["gamma_used"] = detail::vec_json(f.variance.gamma_used);
  j["hac_k"] = pr.K;
  j["se_ehw"] = detail::vec_json(f.variance.ehw.se);
  j["se_hac_plain"] = detail::vec_json(f.variance.plain.se);
  j["se_hac_eigen"] = detail::vec_json(f.variance.eigen.se);
  j["variance"] = to_string(cfg.variance);
  const Sandwich& chosen = cfg.variance == VarianceKind::EHW     ? f.variance.ehw
                           : cfg.variance == VarianceKind::Plain ? f.variance.plain
                                                                 : f.variance.eigen;
  j["se"] = detail::vec_json(chosen.se);
  j["cov"] = detail::mat_json(chosen.cov);
  j["qxx_condition"] = spd_condition(f.fit.QXX);
  std::vector<std::string> warnings;
  for (const auto* s : {&f.variance.ehw, &f.variance.plain, &f.variance.eigen})
    for (const auto& w : s->warnings) warnings.push_back(w);
  j["warnings"] = warnings;
  return j;
}

/// Exposure elements that read the unit's own treatment.
inline std::size_t own_treatment_elements(const ExposureSpec& spec) {
  std::size_t count = 0;
  for (const auto& c : spec.components) {
    const Component& base = c.kind == ComponentKind::CensorAware ? c.inner.at(0) : c;
    if (base.kind == ComponentKind::Own || base.kind == ComponentKind::InteractionOwnShare ||
        base.kind == ComponentKind::Category)
      ++count;
  }
  return count;
}

inline Json cmd_diagnose(const AnalysisConfig& cfg) {
  const Prepared pr = prepare(cfg);
  Json j = detail::header("diagnose", cfg.seed, pr.config);
  const auto units = sampled_units(pr.ds.R);
  const auto names = pr.ds.exposure_names;

  // (a) cond_mean in the span of the covariates.
  const Eigen::MatrixXd M = gather_rows(pr.ds.cond_mean, units);
  const Eigen::MatrixXd Zs = gather_rows(pr.ds.Z, units);
  const Eigen::MatrixXd coef = Zs.colPivHouseholderQr().solve(M);
  Json span = Json::array();
  bool spanned = true;
  for (Eigen::Index k = 0; k < M.cols(); ++k) {
    const double norm = M.col(k).norm();
    const double resid = (M.col(k) - Zs * coef.col(k)).norm();
    const double rel = norm > 0.0 ? resid / norm : resid;
    const bool ok = rel <= 1e-8;
    spanned = spanned && ok;
    span.push_back({{"exposure", names[static_cast<std::size_t>(k)]}, {"relative_residual", rel}, {"spanned", ok}});
  }
  j["cond_mean_span"] = {{"threshold", 1e-8}, {"columns", span}, {"passed", spanned}};

  // (b) correlation between exposure elements given R.
  Rng rng(derive_seed(cfg.seed, 0x0D1A, 0));
  const OverlapDiagnostic od = overlap_diagnostic(pr.spec, pr.state, pr.g, pr.p, cfg.replications, rng);
  Json flags = Json::array();
  for (const auto& [k, l] : od.flagged) flags.push_back({names[k], names[l]});
  j["overlap"] = {{"replications", od.replications},
                  {"covariance", detail::mat_json(od.covariance)},
                  {"standard_error", detail::mat_json(od.standard_error)},
                  {"exact_covariance", detail::mat_json(od.exact)},
                  {"flagged", flags},
                  {"contamination_risk", !od.flagged.empty()}};
  const std::size_t own = own_treatment_elements(pr.spec);
  j["own_treatment_elements"] = own;

  // (c) sparsity of the network and of the clipped kernel.
  const Fitted f = fit_prepared(pr, cfg);
  const auto sd = sparsity_diagnostics(pr.g, pr.K);
  j["sparsity"] = {{"K", pr.K},
                   {"boundary_sum", sd.boundary_sum},
                   {"second_moment_ratio", sd.second_moment_ratio},
                   {"quadruple_ratio", sd.quadruple_ratio}};
  const auto cd = clip_diagnostics(negative_part_row_sums(f.kernel, f.clipped), build_index(pr.g, 2 * pr.K), pr.K);
  j["clip"] = {{"delta_1", cd.delta_1}, {"delta_2_over_n", cd.delta_2_over_n}, {"j_over_n2", cd.j_over_n2}};

  // (d) verdicts, one per decision of the recommended workflow.
  const std::size_t radius = dependency_radius(pr.spec);
  const bool first_order_star = pr.design.scheme == SamplingScheme::Star && radius <= 1 &&
                                pr.spec.source == NetworkSource::Sampled && !pr.design.censor_cap;
  Json verdicts = Json::array();
  verdicts.push_back(spanned ? "covariates: conditional means are spanned"
                             : "covariates: include the conditional-mean columns among the covariates");
  verdicts.push_back(od.flagged.empty()
                         ? "correlation: no correlation between exposure elements detected"
                         : "correlation: modify the exposure mapping or flag results as potentially contaminated");
  if (own > 1)
    verdicts.push_back("own treatment: more than one element depends on own treatment; theta_hat is not adjusted for this");
  verdicts.push_back(first_order_star
                         ? "network information: first-order mapping under star sampling; interpret as theta_causal"
                         : "network information: interpret as inference for theta_causal_sample, not theta_causal");
  verdicts.push_back(pr.K >= std::max<std::size_t>(1, radius)
                         ? "hac: radius covers the exposure dependence"
                         : "hac: radius is below the exposure dependence radius " + std::to_string(radius) +
                               "; increase --hac-k");
  j["verdicts"] = verdicts;
  return j;
}

/// CSV of E[T~|R]. R comes from the data file's R column when given,
/// otherwise it is drawn with the given rho and seed.
struct ExpectationConfig {
  std::string graph_path;
  IndexBase index_base = IndexBase::Zero;
  std::string spec_path;
  std::string data_path;
  std::optional<double> rho;
  std::string p = "0.5";
  SamplingScheme scheme = SamplingScheme::InducedSubgraph;
  std::optional<std::size_t> censor_cap;
  std::uint64_t seed = 1;
  std::size_t nodes = 0;
};

inline std::string cmd_expectation(const ExpectationConfig& cfg) {
  if (cfg.graph_path.empty()) throw InputError("--graph is required");
  if (cfg.spec_path.empty()) throw InputError("--spec is required");
  if (cfg.data_path.empty() == !cfg.rho.has_value())
    throw InputError("give exactly one of --data (with an R column) and --rho");
  const ExposureSpec spec = load_exposure_spec(cfg.spec_path);
  std::optional<CsvTable> table;
  std::size_t n = cfg.nodes;
  if (!cfg.data_path.empty()) {
    table = read_csv_file(cfg.data_path);
    n = table->size();
  }
  const PopulationGraph g = detail::load_graph(cfg.graph_path, n, cfg.index_base);
  n = g.size();

  DesignSpec design;
  design.scheme = cfg.scheme;
  design.censor_cap = cfg.censor_cap;
  Indicator R;
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  if (table) {
    if (table->size() != n) throw InputError("graph and data disagree on the number of units");
    order = detail::row_order(*table, cfg.index_base);
    R = detail::reorder(table->indicators("R"), order);
  }
  double pv = 0.0;
  if (detail::parse_number(cfg.p, pv)) {
    design.p = {pv};
  } else {
    if (!table) throw InputError("--p names a column, so --data is required");
    design.p = detail::reorder(table->numbers(cfg.p), order);
  }
  if (cfg.rho) {
    design.rho = *cfg.rho;
    design.validate(n);
    Rng rng(derive_seed(cfg.seed, 0, 0));
    R = draw_sampling(n, design.rho, rng);
  }
  design.validate(n);
  const Draw state = realize(g, design, R, Indicator(n, 0));
  const Eigen::MatrixXd m = conditional_expectation(spec, state, g, design.p_vector(n));

  std::ostringstream out;
  out << "id,R";
  for (const auto& name : spec.names()) out << ',' << name;
  out << '\n';
  const std::size_t base = cfg.index_base == IndexBase::One ? 1 : 0;
  for (std::size_t i = 0; i < n; ++i) {
    out << i + base << ',' << static_cast<int>(R[i]);
    for (Eigen::Index k = 0; k < m.cols(); ++k)
      out << ',' << detail::format_double(m(static_cast<Eigen::Index>(i), k));
    out << '\n';
  }
  return out.str();
}

inline Json cmd_summary(const std::string& graph_path, IndexBase base, std::size_t nodes, std::size_t K) {
  if (graph_path.empty()) throw InputError("--graph is required");
  if (K < 1) throw InputError("--hac-k must be at least 1");
  const PopulationGraph g = detail::load_graph(graph_path, nodes, base);
  Json config{{"graph_fnv", hex64(fnv1a(read_text_file(graph_path)))},
              {"index_base", base == IndexBase::One ? 1 : 0},
              {"nodes", nodes},
              {"K", K}};
  Json j = detail::header("summary", 0, config);
  const auto s = network_summary(g);
  j["nodes"] = s.nodes;
  j["edges"] = s.edges;
  j["mean_degree"] = s.mean_degree;
  j["mean_second_order_degree"] = s.mean_second_order_degree;
  const auto sd = sparsity_diagnostics(g, K);
  j["sparsity"] = {{"K", K},
                   {"boundary_sum", sd.boundary_sum},
                   {"second_moment_ratio", sd.second_moment_ratio},
                   {"quadruple_ratio", sd.quadruple_ratio}};
  return j;
}

inline Json simulation_report_json(const SimulationReport& rep, const SimulationConfig& cfg) {
  const Json config = simulation_config_to_json(cfg);
  Json hashed = config;
  if (!cfg.graph_path.empty()) hashed["graph"] = hex64(fnv1a(read_text_file(cfg.graph_path)));
  Json j = detail::header("simulate", cfg.seed, hashed);
  j["config"] = config;
  j["network"] = {{"nodes", rep.network.nodes},
                  {"edges", rep.network.edges},
                  {"mean_degree", rep.network.mean_degree},
                  {"mean_second_order_degree", rep.network.mean_second_order_degree},
                  {"synthetic", rep.synthetic_network}};
  j["mean_theta2"] = rep.mean_theta2;
  Json cells = Json::array();
  for (const auto& c : rep.cells) {
    Json cell;
    cell["rho"] = c.rho;
    cell["spec"] = c.spec;
    cell["columns"] = c.columns;
    cell["successful"] = c.successful;
    cell["skipped"] = c.skipped;
    cell["mean_sample_size"] = c.mean_sample_size;
    cell["population_method"] = c.population_method;
    cell["pruned_covariates"] = c.pruned_covariates;
    Json rows;
    for (const auto& label : report_rows()) rows[label] = c.rows.at(label);
    cell["rows"] = rows;
    cells.push_back(cell);
  }
  j["cells"] = cells;
  return j;
}

/// Long-format table: one line per (rho, spec, statistic, element).
inline std::string simulation_report_csv(const SimulationReport& rep) {
  std::ostringstream out;
  out << "rho,spec,statistic,element,value\n";
  for (const auto& c : rep.cells)
    for (const auto& label : report_rows()) {
      const auto& values = c.rows.at(label);
      for (std::size_t k = 0; k < values.size(); ++k)
        out << detail::format_double(c.rho) << ',' << c.spec << ',' << label << ',' << c.columns[k] << ','
            << detail::format_double(values[k]) << '\n';
    }
  return out.str();
}

}  // namespace netspill
