#pragma once

// Simulation harness: a fixed heterogeneous-effects DGP on a fixed network,
// repeated draws of (R, D*), and the averages, deviations and coverage rates
// of the resulting estimates against both causal estimands.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "netspill/design.hpp"
#include "netspill/error.hpp"
#include "netspill/estimator.hpp"
#include "netspill/exposure.hpp"
#include "netspill/graph.hpp"
#include "netspill/linalg.hpp"
#include "netspill/rng.hpp"
#include "netspill/variance.hpp"

namespace netspill {

/// M_i = (100 / n) * sum_{k != i} (number of paths i-j-k with j != i, k)^2
inline Eigen::VectorXd clustering_coefficient(const PopulationGraph& g) {
  const std::size_t n = g.size();
  Eigen::VectorXd M = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  if (n == 0) return M;
  std::vector<double> scratch(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (const auto& [k, w] : detail::second_order_weights(g, i, false, scratch)) s += w * w;
    M(static_cast<Eigen::Index>(i)) = 100.0 / static_cast<double>(n) * s;
  }
  return M;
}

/// deg_i / max_k deg_k (zero on an empty graph).
inline Eigen::VectorXd normalized_degree(const PopulationGraph& g) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(g.size()));
  std::size_t max_deg = 0;
  for (std::size_t i = 0; i < g.size(); ++i) max_deg = std::max(max_deg, g.degree(i));
  for (std::size_t i = 0; i < g.size(); ++i)
    v(static_cast<Eigen::Index>(i)) = max_deg ? static_cast<double>(g.degree(i)) / static_cast<double>(max_deg) : 0.0;
  return v;
}

enum class Theta2Source { ClusteringCoefficient, NormalizedDegree };

struct DgpConfig {
  /// Mean of the exponential direct effects.
  double exp_mean = 1.0 / 3.0;
  Theta2Source theta2 = Theta2Source::ClusteringCoefficient;
  /// Value of every effect column after the second.
  double theta3 = 0.0;
  double nu_sd = std::sqrt(2.0);
};

/// Draws theta_(1) for all units, then nu for all units. Columns after the
/// first are deterministic.
inline DgpTruth generate_dgp(const PopulationGraph& g, const DgpConfig& cfg, std::size_t d, Rng& rng) {
  if (d < 1) throw InputError("the true mapping needs at least one element");
  const auto n = static_cast<Eigen::Index>(g.size());
  DgpTruth truth;
  truth.theta = Eigen::MatrixXd::Constant(n, static_cast<Eigen::Index>(d), cfg.theta3);
  for (Eigen::Index i = 0; i < n; ++i) truth.theta(i, 0) = exponential(rng, cfg.exp_mean);
  if (d >= 2)
    truth.theta.col(1) = cfg.theta2 == Theta2Source::ClusteringCoefficient ? clustering_coefficient(g)
                                                                           : normalized_degree(g);
  truth.nu.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) truth.nu(i) = normal(rng, 0.0, cfg.nu_sd);
  return truth;
}

/// Stand-in network when no edge list is supplied: n points uniform on the
/// unit square joined by their `edges` shortest pairs.
inline PopulationGraph synthetic_village(std::size_t n, std::size_t edges, std::uint64_t seed) {
  const std::size_t pairs = n * (n - 1) / 2;
  if (edges > pairs) throw InputError("more edges requested than node pairs");
  Rng rng(seed);
  std::vector<double> x(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = uniform01(rng);
    y[i] = uniform01(rng);
  }
  struct Pair {
    double dist;
    std::uint32_t a, b;
  };
  std::vector<Pair> all;
  all.reserve(pairs);
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b) {
      const double dx = x[a] - x[b], dy = y[a] - y[b];
      all.push_back({dx * dx + dy * dy, static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(b)});
    }
  auto less = [](const Pair& l, const Pair& r) {
    return l.dist != r.dist ? l.dist < r.dist : (l.a != r.a ? l.a < r.a : l.b < r.b);
  };
  if (edges < all.size()) std::nth_element(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(edges), all.end(), less);
  std::vector<Edge> list;
  list.reserve(edges);
  for (std::size_t e = 0; e < edges; ++e) list.emplace_back(all[e].a, all[e].b);
  return PopulationGraph(n, list);
}

enum class SpecPreset { NoOverlap, Overlap, CorrectlySpecified };

inline const char* to_string(SpecPreset s) {
  switch (s) {
    case SpecPreset::NoOverlap: return "no_overlap";
    case SpecPreset::Overlap: return "overlap";
    case SpecPreset::CorrectlySpecified: return "correctly_specified";
  }
  return "?";
}

struct SpecPair {
  std::string name;
  ExposureSpec true_spec;
  ExposureSpec observed_spec;
};

/// The true mapping is always evaluated on the population network; the
/// observed one on the sampled network.
inline SpecPair preset_pair(SpecPreset preset) {
  SpecPair pair;
  pair.name = to_string(preset);
  pair.true_spec.source = NetworkSource::Population;
  pair.observed_spec.source = NetworkSource::Sampled;
  auto named = [](Component c, const char* name) {
    c.name = name;
    return c;
  };
  switch (preset) {
    case SpecPreset::NoOverlap:
    case SpecPreset::Overlap:
      pair.true_spec.components = {named(Component::own(), "D"), named(Component::share(), "net"),
                                   named(Component::second_share(true), "weak")};
      pair.observed_spec.components = {
          named(Component::own(), "D"), named(Component::share(), "net"),
          named(Component::second_share(preset == SpecPreset::NoOverlap), "weak")};
      break;
    case SpecPreset::CorrectlySpecified:
      pair.true_spec.components = {named(Component::own(), "D"), named(Component::count(), "net")};
      pair.observed_spec.components = pair.true_spec.components;
      pair.observed_spec.source = NetworkSource::Population;
      break;
  }
  return pair;
}

struct SimulationConfig {
  /// Edge list path; empty means the synthetic stand-in network.
  std::string graph_path;
  IndexBase index_base = IndexBase::Zero;
  std::size_t graph_nodes = 0;
  std::size_t synthetic_nodes = 1770;
  std::size_t synthetic_edges = 5556;
  std::vector<double> rho_grid{0.1, 0.5, 1.0};
  double p = 0.5;
  std::size_t replications = 2000;
  DgpConfig dgp;
  std::vector<SpecPreset> specs{SpecPreset::NoOverlap, SpecPreset::Overlap};
  SamplingScheme scheme = SamplingScheme::InducedSubgraph;
  std::uint64_t seed = 1;
  std::size_t threads = 1;
  /// HAC radius; defaults to the observed mapping's radius (floor 1).
  std::optional<std::size_t> hac_k;
  /// When false only estimands and point estimates are computed.
  bool standard_errors = true;
  double confidence = 0.95;

  void validate() const {
    if (replications < 1) throw InputError("replications must be at least 1");
    if (rho_grid.empty()) throw InputError("rho grid is empty");
    for (double r : rho_grid)
      if (!(r > 0.0 && r <= 1.0)) throw InputError("rho must lie in (0, 1], got " + std::to_string(r));
    if (!(p >= 0.0 && p <= 1.0)) throw InputError("p must lie in [0, 1]");
    if (specs.empty()) throw InputError("no spec pairs selected");
    if (hac_k && *hac_k < 1) throw InputError("hac_k must be at least 1");
    if (!(confidence > 0.0 && confidence < 1.0)) throw InputError("confidence must lie in (0, 1)");
  }
};

/// Row labels of the report, one value per exposure element in each.
inline const std::vector<std::string>& report_rows() {
  static const std::vector<std::string> rows{
      "theta_causal",          "theta_causal_sample",        "theta_hat",
      "se_ehw",                "se_hac_causal",              "se_hac_causal_sample",
      "abs_dev_causal",        "abs_dev_causal_sample",      "coverage_ehw_causal",
      "coverage_ehw_causal_sample", "coverage_hac_causal",   "coverage_hac_causal_sample"};
  return rows;
}

struct CellReport {
  double rho = 1.0;
  std::string spec;
  std::vector<std::string> columns;
  /// Keyed by report_rows(); NaN where standard errors were not computed.
  std::map<std::string, std::vector<double>> rows;
  std::size_t successful = 0;
  std::size_t skipped = 0;
  double mean_sample_size = 0.0;
  std::string population_method;
  std::vector<std::string> pruned_covariates;
};

struct SimulationReport {
  NetworkSummary network;
  bool synthetic_network = false;
  std::vector<CellReport> cells;
  double mean_theta2 = 0.0;
};

namespace detail {

struct RepOutcome {
  bool ok = false;
  std::size_t N = 0;
  Eigen::VectorXd theta_cs, theta_hat, se_ehw, se_hac_c, se_hac_cs;
  std::vector<std::string> pruned;
};

/// Two-sided normal quantile for the given coverage level.
inline double normal_quantile(double confidence) {
  // Bisection on the standard normal CDF.
  const double target = 0.5 + confidence / 2.0;
  double lo = 0.0, hi = 10.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct KernelCache {
  HacKernel kernel;
  ClippedKernel clipped;
};

inline RepOutcome run_one(const PopulationGraph& g, const SpecPair& pair, const DesignSpec& design,
                          const DgpTruth& truth, const Draw& draw, const ConditionalMoments& cm,
                          const KernelCache* kc, bool standard_errors) {
  RepOutcome out;
  try {
    const auto units = sampled_units(draw.R);
    const Eigen::MatrixXd T = compute_exposure(pair.true_spec, draw, g);
    const Eigen::VectorXd Y = potential_outcomes(T, truth);

    Dataset ds;
    ds.Y = Y;
    ds.T = compute_exposure(pair.observed_spec, draw, g);
    ds.R = draw.R;
    ds.cond_mean = cm.observed_mean;
    ds.exposure_names = pair.observed_spec.names();
    const auto kept = prune_collinear(gather_rows(cm.observed_mean, units));
    ds.Z = select_columns(cm.observed_mean, kept);
    const auto names = pair.observed_spec.names();
    for (std::size_t c = 0, k = 0; c < names.size(); ++c) {
      if (k < kept.size() && kept[k] == c)
        ++k;
      else
        out.pruned.push_back("E[" + names[c] + "|R]");
    }
    const ResidualizedDesign rd = residualize(ds);
    const EstimationResult fit = ols_fit(ds, rd);
    const SampleEstimand se = sample_estimand(g, draw, pair.true_spec, pair.observed_spec, design,
                                              truth, {}, &cm);
    out.N = fit.N;
    out.theta_hat = fit.theta;
    out.theta_cs = se.theta;
    if (standard_errors) {
      const VarianceReport vh = estimate_variance(ds, rd, fit, kc->kernel, kc->clipped, GammaSource::GammaHat);
      // The first covariate column is the R-multiplicative one when kept.
      const std::size_t m = !kept.empty() && kept[0] == 0 ? 1 : 0;
      const VarianceReport vt =
          estimate_variance(ds, rd, fit, kc->kernel, kc->clipped, GammaSource::GammaTilde, design.rho, m);
      out.se_ehw = vh.ehw.se;
      out.se_hac_cs = vh.eigen.se;
      out.se_hac_c = vt.eigen.se;
    }
    out.ok = true;
  } catch (const NumericalError&) {
    out.ok = false;
  }
  return out;
}

template <class Fn>
void parallel_for(std::size_t count, std::size_t threads, Fn fn) {
  threads = std::max<std::size_t>(1, std::min(threads, count));
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        if (failed) return;
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
          return;
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace detail

inline PopulationGraph simulation_graph(const SimulationConfig& cfg, bool* synthetic = nullptr);

/// Runs the study on `g`. Replication r at grid point a uses the generator
/// seeded with derive_seed(seed, a + 1, r); the DGP uses derive_seed(seed, 0, 0).
/// Per-replication results are stored by index and reduced in order, so the
/// report does not depend on the thread count.
inline SimulationReport run_simulation(const SimulationConfig& cfg, const PopulationGraph& g) {
  cfg.validate();
  SimulationReport report;
  report.network = network_summary(g);
  const std::size_t n = g.size();
  const double z = detail::normal_quantile(cfg.confidence);

  std::vector<SpecPair> pairs;
  std::size_t dmax = 1;
  for (auto s : cfg.specs) {
    pairs.push_back(preset_pair(s));
    dmax = std::max(dmax, pairs.back().true_spec.dim());
  }
  Rng dgp_rng(derive_seed(cfg.seed, 0, 0));
  const DgpTruth full_truth = generate_dgp(g, cfg.dgp, dmax, dgp_rng);
  if (dmax >= 2) report.mean_theta2 = full_truth.theta.col(1).mean();

  for (std::size_t a = 0; a < cfg.rho_grid.size(); ++a) {
    DesignSpec design;
    design.rho = cfg.rho_grid[a];
    design.p = {cfg.p};
    design.scheme = cfg.scheme;
    const auto p = design.p_vector(n);
    const bool fixed_R = design.rho >= 1.0;

    std::vector<DgpTruth> truths;
    std::vector<PopulationEstimand> causal;
    std::vector<std::size_t> radius;
    for (const auto& pair : pairs) {
      DgpTruth t;
      t.theta = full_truth.theta.leftCols(static_cast<Eigen::Index>(pair.true_spec.dim()));
      t.nu = full_truth.nu;
      causal.push_back(population_estimand(g, pair.true_spec, design, t,
                                           {EstimandMode::ClosedForm, 2000, derive_seed(cfg.seed, 0, a + 1)}));
      truths.push_back(std::move(t));
      radius.push_back(cfg.hac_k ? *cfg.hac_k : hac_radius(pair.observed_spec));
    }

    // With rho = 1 every replication shares R, so the conditional moments
    // and the clipped kernels are computed once.
    std::vector<ConditionalMoments> fixed_moments;
    std::map<std::size_t, detail::KernelCache> fixed_kernels;
    if (fixed_R) {
      const Draw state = realize(g, design, Indicator(n, 1), Indicator(n, 0));
      for (const auto& pair : pairs)
        fixed_moments.push_back(conditional_moments(g, state, pair.true_spec, pair.observed_spec, p));
      if (cfg.standard_errors)
        for (std::size_t K : radius)
          if (!fixed_kernels.count(K)) {
            detail::KernelCache kc;
            kc.kernel = hac_kernel(state.sampled, state.R, K);
            kc.clipped = clip_kernel(kc.kernel);
            fixed_kernels.emplace(K, std::move(kc));
          }
    }

    std::vector<std::vector<detail::RepOutcome>> outcomes(pairs.size(),
                                                          std::vector<detail::RepOutcome>(cfg.replications));
    detail::parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
      Rng rng(derive_seed(cfg.seed, a + 1, r));
      const Draw draw = draw_sample(g, design, rng, derive_seed(cfg.seed, a + 1, r));
      std::map<std::size_t, detail::KernelCache> kernels;
      for (std::size_t s = 0; s < pairs.size(); ++s) {
        ConditionalMoments local;
        const ConditionalMoments* cm = nullptr;
        if (fixed_R) {
          cm = &fixed_moments[s];
        } else {
          local = conditional_moments(g, draw, pairs[s].true_spec, pairs[s].observed_spec, p);
          cm = &local;
        }
        const detail::KernelCache* kc = nullptr;
        if (cfg.standard_errors) {
          if (fixed_R) {
            kc = &fixed_kernels.at(radius[s]);
          } else {
            auto it = kernels.find(radius[s]);
            if (it == kernels.end()) {
              detail::KernelCache fresh;
              fresh.kernel = hac_kernel(draw.sampled, draw.R, radius[s]);
              fresh.clipped = clip_kernel(fresh.kernel);
              it = kernels.emplace(radius[s], std::move(fresh)).first;
            }
            kc = &it->second;
          }
        }
        outcomes[s][r] = detail::run_one(g, pairs[s], design, truths[s], draw, *cm, kc, cfg.standard_errors);
      }
    });

    for (std::size_t s = 0; s < pairs.size(); ++s) {
      CellReport cell;
      cell.rho = design.rho;
      cell.spec = pairs[s].name;
      cell.columns = pairs[s].observed_spec.names();
      cell.population_method = causal[s].method;
      const auto d = static_cast<Eigen::Index>(pairs[s].observed_spec.dim());
      const Eigen::VectorXd& tc = causal[s].theta;
      const bool dims_match = tc.size() == d;
      const double nan = std::nan("");
      std::map<std::string, Eigen::VectorXd> sums;
      for (const auto& row : report_rows()) sums[row] = Eigen::VectorXd::Zero(d);
      double n_sum = 0.0;
      for (const auto& o : outcomes[s]) {
        if (!o.ok) {
          ++cell.skipped;
          continue;
        }
        ++cell.successful;
        n_sum += static_cast<double>(o.N);
        for (const auto& name : o.pruned)
          if (std::find(cell.pruned_covariates.begin(), cell.pruned_covariates.end(), name) ==
              cell.pruned_covariates.end())
            cell.pruned_covariates.push_back(name);
        sums["theta_causal_sample"] += o.theta_cs;
        sums["theta_hat"] += o.theta_hat;
        sums["abs_dev_causal_sample"] += (o.theta_hat - o.theta_cs).cwiseAbs();
        if (dims_match) sums["abs_dev_causal"] += (o.theta_hat - tc).cwiseAbs();
        if (cfg.standard_errors) {
          sums["se_ehw"] += o.se_ehw;
          sums["se_hac_causal"] += o.se_hac_c;
          sums["se_hac_causal_sample"] += o.se_hac_cs;
          for (Eigen::Index k = 0; k < d; ++k) {
            const double dev_cs = std::abs(o.theta_hat(k) - o.theta_cs(k));
            sums["coverage_ehw_causal_sample"](k) += dev_cs <= z * o.se_ehw(k) ? 1.0 : 0.0;
            sums["coverage_hac_causal_sample"](k) += dev_cs <= z * o.se_hac_cs(k) ? 1.0 : 0.0;
            if (dims_match) {
              const double dev_c = std::abs(o.theta_hat(k) - tc(k));
              sums["coverage_ehw_causal"](k) += dev_c <= z * o.se_ehw(k) ? 1.0 : 0.0;
              sums["coverage_hac_causal"](k) += dev_c <= z * o.se_hac_c(k) ? 1.0 : 0.0;
            }
          }
        }
      }
      const double B = static_cast<double>(cell.successful);
      for (const auto& row : report_rows()) {
        std::vector<double> values(static_cast<std::size_t>(d), nan);
        const bool needs_se = row.rfind("se_", 0) == 0 || row.rfind("coverage_", 0) == 0;
        const bool needs_match = row == "abs_dev_causal" || row == "coverage_ehw_causal" ||
                                 row == "coverage_hac_causal";
        for (Eigen::Index k = 0; k < d; ++k) {
          if (row == "theta_causal") {
            if (dims_match) values[static_cast<std::size_t>(k)] = tc(k);
            continue;
          }
          if (B == 0.0 || (needs_se && !cfg.standard_errors) || (needs_match && !dims_match)) continue;
          values[static_cast<std::size_t>(k)] = sums[row](k) / B;
        }
        cell.rows[row] = values;
      }
      cell.mean_sample_size = B > 0.0 ? n_sum / B : 0.0;
      report.cells.push_back(std::move(cell));
    }
  }
  return report;
}

inline PopulationGraph simulation_graph(const SimulationConfig& cfg, bool* synthetic) {
  if (cfg.graph_path.empty()) {
    if (synthetic) *synthetic = true;
    return synthetic_village(cfg.synthetic_nodes, cfg.synthetic_edges, derive_seed(cfg.seed, 0xA11CE, 0));
  }
  if (synthetic) *synthetic = false;
  std::ifstream in(cfg.graph_path);
  if (!in) throw InputError("cannot open graph file " + cfg.graph_path);
  return load_edge_list(in, cfg.graph_nodes, cfg.index_base);
}

inline SimulationReport run_simulation(const SimulationConfig& cfg) {
  bool synthetic = false;
  const PopulationGraph g = simulation_graph(cfg, &synthetic);
  SimulationReport rep = run_simulation(cfg, g);
  rep.synthetic_network = synthetic;
  return rep;
}

}  // namespace netspill
