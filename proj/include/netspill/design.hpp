#pragma once

// Experimental design: unit sampling R, latent treatment D*, observed
// treatment D = R * D*, the sampled network and the optional censored network.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "netspill/error.hpp"
#include "netspill/graph.hpp"
#include "netspill/rng.hpp"

namespace netspill {

using Indicator = std::vector<std::uint8_t>;

enum class SamplingScheme { InducedSubgraph, Star };

inline const char* to_string(SamplingScheme s) {
  return s == SamplingScheme::InducedSubgraph ? "induced" : "star";
}

struct DesignSpec {
  double rho = 1.0;
  /// Either one value shared by every unit or one value per unit.
  std::vector<double> p{0.5};
  SamplingScheme scheme = SamplingScheme::InducedSubgraph;
  std::optional<std::size_t> censor_cap;
  /// preference[i] lists i's neighbors from most to least preferred. Empty
  /// means ascending node index.
  std::vector<std::vector<std::size_t>> preference;

  double p_of(std::size_t i) const { return p.size() == 1 ? p[0] : p[i]; }

  std::vector<double> p_vector(std::size_t n) const {
    if (p.size() == 1) return std::vector<double>(n, p[0]);
    return p;
  }

  void validate(std::size_t n) const {
    if (!(rho > 0.0 && rho <= 1.0))
      throw InputError("rho must lie in (0, 1], got " + std::to_string(rho));
    if (p.empty() || (p.size() != 1 && p.size() != n))
      throw InputError("p must be a scalar or have one entry per unit");
    for (double v : p)
      if (!(v >= 0.0 && v <= 1.0)) throw InputError("assignment probability outside [0, 1]");
    if (censor_cap && *censor_cap < 1) throw InputError("censor_cap must be at least 1");
    if (!preference.empty() && preference.size() != n)
      throw InputError("censoring preference must list every node");
  }
};

struct Draw {
  Indicator R;
  Indicator Dstar;
  Indicator D;
  PopulationGraph sampled;
  /// Censored sampled network; equals `sampled` when no cap applies.
  PopulationGraph censored;
  std::uint64_t seed = 0;

  std::size_t sample_size() const {
    std::size_t n = 0;
    for (auto r : R) n += r;
    return n;
  }
};

inline PopulationGraph sample_network(const PopulationGraph& g, const Indicator& R,
                                      SamplingScheme scheme) {
  if (scheme == SamplingScheme::InducedSubgraph)
    return PopulationGraph::filtered(g, [&](std::size_t i, std::size_t j) { return R[i] && R[j]; });
  return PopulationGraph::filtered(g, [&](std::size_t i, std::size_t j) { return R[i] || R[j]; });
}

/// Each sampled unit reports at most `cap` links, chosen by preference among
/// its candidates: sampled neighbors under induced-subgraph sampling, all
/// population neighbors under star sampling. A link survives if either
/// endpoint reports it. Returns the censored network, a subgraph of the
/// sampled one.
inline PopulationGraph apply_censoring(const PopulationGraph& g, const PopulationGraph& sampled,
                                       const Indicator& R, SamplingScheme scheme, std::size_t cap,
                                       const std::vector<std::vector<std::size_t>>& preference = {}) {
  if (cap < 1) throw InputError("censor_cap must be at least 1");
  const std::size_t n = g.size();
  const PopulationGraph& candidates = scheme == SamplingScheme::Star ? g : sampled;
  std::vector<std::vector<std::size_t>> reported(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!R[i]) continue;
    std::vector<std::size_t> order;
    if (preference.empty()) {
      auto nb = candidates.neighbors(i);
      order.assign(nb.begin(), nb.end());
    } else {
      for (std::size_t j : preference[i])
        if (candidates.adjacent(i, j)) order.push_back(j);
      if (order.size() != candidates.degree(i))
        throw InputError("censoring preference for node " + std::to_string(i) +
                         " does not cover all of its candidate neighbors");
    }
    if (order.size() > cap) order.resize(cap);
    reported[i] = std::move(order);
    std::sort(reported[i].begin(), reported[i].end());
  }
  auto reports = [&](std::size_t a, std::size_t b) {
    return std::binary_search(reported[a].begin(), reported[a].end(), b);
  };
  return PopulationGraph::filtered(
      sampled, [&](std::size_t i, std::size_t j) { return reports(i, j) || reports(j, i); });
}

/// Builds a draw from given R and D*. Used by draw_sample and by tests that
/// need a specific configuration.
inline Draw realize(const PopulationGraph& g, const DesignSpec& spec, Indicator R, Indicator Dstar,
                    std::uint64_t seed = 0) {
  const std::size_t n = g.size();
  if (R.size() != n || Dstar.size() != n)
    throw InputError("R and D* must have one entry per unit");
  Draw d;
  d.R = std::move(R);
  d.Dstar = std::move(Dstar);
  d.D.resize(n);
  for (std::size_t i = 0; i < n; ++i) d.D[i] = d.R[i] & d.Dstar[i];
  d.sampled = sample_network(g, d.R, spec.scheme);
  if (spec.censor_cap)
    d.censored = apply_censoring(g, d.sampled, d.R, spec.scheme, *spec.censor_cap, spec.preference);
  else
    d.censored = d.sampled;
  d.seed = seed;
  return d;
}

inline Indicator draw_sampling(std::size_t n, double rho, Rng& rng) {
  Indicator R(n);
  if (rho >= 1.0) {
    std::fill(R.begin(), R.end(), 1);
    return R;
  }
  for (auto& r : R) r = bernoulli(rng, rho);
  return R;
}

inline Indicator draw_treatment(const DesignSpec& spec, std::size_t n, Rng& rng) {
  Indicator Dstar(n);
  for (std::size_t i = 0; i < n; ++i) Dstar[i] = bernoulli(rng, spec.p_of(i));
  return Dstar;
}

/// All R first, then all D*, from one generator.
inline Draw draw_sample(const PopulationGraph& g, const DesignSpec& spec, Rng& rng,
                        std::uint64_t seed = 0) {
  spec.validate(g.size());
  Indicator R = draw_sampling(g.size(), spec.rho, rng);
  Indicator Dstar = draw_treatment(spec, g.size(), rng);
  return realize(g, spec, std::move(R), std::move(Dstar), seed);
}

inline Draw draw_sample(const PopulationGraph& g, const DesignSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  return draw_sample(g, spec, rng, seed);
}

inline NeighborhoodIndex sampled_distances(const PopulationGraph& sampled, std::size_t smax) {
  return build_index(sampled, smax);
}

}  // namespace netspill
