#pragma once

// Exposure mappings: a catalog of components evaluated on a draw, their
// conditional moments given R, and the dependence radius they imply.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netspill/design.hpp"
#include "netspill/error.hpp"
#include "netspill/graph.hpp"
#include "netspill/rng.hpp"

namespace netspill {

enum class ComponentKind {
  Own,
  Share,
  Count,
  Any,
  SecondShare,
  InteractionOwnShare,
  Category,
  CensorAware,
};

/// Share denominators: all links of i on the chosen network, or only the
/// links to sampled units.
enum class Denominator { Network, SampledNeighbors };

/// Mutually exclusive exposure types built from own treatment and the
/// presence of a treated friend.
enum class CategoryKind { TreatedExposed, TreatedUnexposed, UntreatedExposed };

enum class NetworkSource { Population, Sampled, Censored };

struct Component {
  ComponentKind kind = ComponentKind::Own;
  Denominator denominator = Denominator::Network;
  /// SecondShare only: drop paths i-j-k where k is also a friend of i.
  bool exclude_triangles = true;
  CategoryKind category = CategoryKind::TreatedExposed;
  /// CensorAware only: zero the inner value when i has at least `cap`
  /// observed links. With zero_if_censored false the inner value passes
  /// through unchanged.
  std::size_t cap = 0;
  bool zero_if_censored = true;
  std::vector<Component> inner;
  std::string name;

  static Component of(ComponentKind kind) {
    Component c;
    c.kind = kind;
    return c;
  }
  static Component own() { return of(ComponentKind::Own); }
  static Component share(Denominator den = Denominator::Network) {
    Component c = of(ComponentKind::Share);
    c.denominator = den;
    return c;
  }
  static Component count() { return of(ComponentKind::Count); }
  static Component any() { return of(ComponentKind::Any); }
  static Component second_share(bool exclude_triangles, Denominator den = Denominator::Network) {
    Component c = of(ComponentKind::SecondShare);
    c.exclude_triangles = exclude_triangles;
    c.denominator = den;
    return c;
  }
  static Component interaction(Denominator den = Denominator::Network) {
    Component c = of(ComponentKind::InteractionOwnShare);
    c.denominator = den;
    return c;
  }
  static Component category_of(CategoryKind k) {
    Component c = of(ComponentKind::Category);
    c.category = k;
    return c;
  }
  static Component censor_aware(Component inner, std::size_t cap, bool zero_if_censored = true) {
    Component c = of(ComponentKind::CensorAware);
    c.cap = cap;
    c.zero_if_censored = zero_if_censored;
    c.inner.push_back(std::move(inner));
    return c;
  }
};

inline std::string default_name(const Component& c) {
  switch (c.kind) {
    case ComponentKind::Own: return "own";
    case ComponentKind::Share: return "share";
    case ComponentKind::Count: return "count";
    case ComponentKind::Any: return "any";
    case ComponentKind::SecondShare: return c.exclude_triangles ? "second_share" : "second_share_overlap";
    case ComponentKind::InteractionOwnShare: return "own_x_share";
    case ComponentKind::Category:
      switch (c.category) {
        case CategoryKind::TreatedExposed: return "treated_exposed";
        case CategoryKind::TreatedUnexposed: return "treated_unexposed";
        case CategoryKind::UntreatedExposed: return "untreated_exposed";
      }
      break;
    case ComponentKind::CensorAware: return default_name(c.inner.at(0)) + "_uncensored";
  }
  return "component";
}

struct ExposureSpec {
  std::vector<Component> components;
  NetworkSource source = NetworkSource::Sampled;

  std::size_t dim() const noexcept { return components.size(); }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& c : components) out.push_back(c.name.empty() ? default_name(c) : c.name);
    return out;
  }

  void validate() const {
    if (components.empty()) throw InputError("exposure spec needs at least one component");
    for (const auto& c : components) {
      if (c.kind == ComponentKind::CensorAware) {
        if (c.inner.size() != 1) throw InputError("censor_aware needs exactly one inner component");
        if (c.inner[0].kind == ComponentKind::CensorAware)
          throw InputError("censor_aware components cannot be nested");
        if (c.cap < 1) throw InputError("censor_aware needs cap >= 1");
      } else if (!c.inner.empty()) {
        throw InputError("only censor_aware components take an inner component");
      }
    }
  }
};

inline const PopulationGraph& network_for(NetworkSource source, const PopulationGraph& g,
                                          const Draw& draw) {
  switch (source) {
    case NetworkSource::Population: return g;
    case NetworkSource::Sampled: return draw.sampled;
    case NetworkSource::Censored: return draw.censored;
  }
  return g;
}

/// Order of the neighborhood a component reads. Components on the censored
/// network read one step further, since whether a link survives censoring
/// depends on the other links of its endpoints.
inline std::size_t component_radius(const Component& c, NetworkSource source) {
  const std::size_t extra = source == NetworkSource::Censored ? 1 : 0;
  switch (c.kind) {
    case ComponentKind::Own: return 0;
    case ComponentKind::SecondShare: return 2 + extra;
    case ComponentKind::CensorAware:
      // The censoring indicator of i depends on whether i's neighbors report i.
      return std::max<std::size_t>(component_radius(c.inner.at(0), source), 2);
    default: return 1 + extra;
  }
}

inline std::size_t dependency_radius(const ExposureSpec& spec) {
  std::size_t k = 0;
  for (const auto& c : spec.components) k = std::max(k, component_radius(c, spec.source));
  return k;
}

/// HAC truncation radius: the dependency radius with a floor of 1.
inline std::size_t hac_radius(const ExposureSpec& spec) {
  return std::max<std::size_t>(1, dependency_radius(spec));
}

namespace detail {

/// Path weights w_k = sum over j != i,k of G_ij G_jk (1 - G_ik if triangles
/// are excluded), for all k != i with w_k > 0. Sorted by k.
inline std::vector<std::pair<std::size_t, double>> second_order_weights(const PopulationGraph& G,
                                                                         std::size_t i,
                                                                         bool exclude_triangles,
                                                                         std::vector<double>& scratch) {
  std::vector<std::size_t> touched;
  for (std::size_t j : G.neighbors(i)) {
    for (std::size_t k : G.neighbors(j)) {
      if (k == i) continue;
      if (scratch[k] == 0.0) touched.push_back(k);
      scratch[k] += 1.0;
    }
  }
  std::sort(touched.begin(), touched.end());
  std::vector<std::pair<std::size_t, double>> out;
  out.reserve(touched.size());
  for (std::size_t k : touched) {
    const double w = scratch[k];
    scratch[k] = 0.0;
    if (exclude_triangles && G.adjacent(i, k)) continue;
    out.emplace_back(k, w);
  }
  return out;
}

}  // namespace detail

/// Exposure values for every unit on one draw. Rows are n, columns follow
/// the spec. Zero denominators give 0.
inline Eigen::MatrixXd compute_exposure(const ExposureSpec& spec, const Draw& draw,
                                        const PopulationGraph& g) {
  spec.validate();
  const std::size_t n = g.size();
  const PopulationGraph& G = network_for(spec.source, g, draw);
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, spec.dim());
  std::vector<double> scratch(n, 0.0);

  auto first_order = [&](std::size_t i, Denominator den, double& num, double& denom) {
    num = 0.0;
    denom = 0.0;
    for (std::size_t j : G.neighbors(i)) {
      num += draw.D[j];
      denom += den == Denominator::Network ? 1.0 : draw.R[j];
    }
  };

  auto evaluate = [&](const Component& c, std::size_t i, auto& self) -> double {
    double num = 0.0;
    double den = 0.0;
    switch (c.kind) {
      case ComponentKind::Own: return draw.D[i];
      case ComponentKind::Share:
        first_order(i, c.denominator, num, den);
        return den > 0.0 ? num / den : 0.0;
      case ComponentKind::Count:
        first_order(i, Denominator::Network, num, den);
        return num;
      case ComponentKind::Any:
        first_order(i, Denominator::Network, num, den);
        return num > 0.0 ? 1.0 : 0.0;
      case ComponentKind::SecondShare: {
        for (const auto& [k, w] : detail::second_order_weights(G, i, c.exclude_triangles, scratch)) {
          num += w * draw.D[k];
          den += c.denominator == Denominator::Network ? w : w * draw.R[k];
        }
        return den > 0.0 ? num / den : 0.0;
      }
      case ComponentKind::InteractionOwnShare:
        if (!draw.D[i]) return 0.0;
        first_order(i, c.denominator, num, den);
        return den > 0.0 ? num / den : 0.0;
      case ComponentKind::Category: {
        first_order(i, Denominator::Network, num, den);
        const bool exposed = num > 0.0;
        const bool treated = draw.D[i] != 0;
        switch (c.category) {
          case CategoryKind::TreatedExposed: return treated && exposed ? 1.0 : 0.0;
          case CategoryKind::TreatedUnexposed: return treated && !exposed ? 1.0 : 0.0;
          case CategoryKind::UntreatedExposed: return !treated && exposed ? 1.0 : 0.0;
        }
        return 0.0;
      }
      case ComponentKind::CensorAware: {
        const double v = self(c.inner[0], i, self);
        if (c.zero_if_censored && draw.censored.degree(i) >= c.cap) return 0.0;
        return v;
      }
    }
    return 0.0;
  };

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < spec.dim(); ++k)
      out(i, static_cast<Eigen::Index>(k)) = evaluate(spec.components[k], i, evaluate);
  return out;
}

/// One exposure component of one unit as a function of D* with R held fixed:
///
///   value = scale * prod_g 1{D*_g = v_g} * core(D*)
///
/// where core is affine in D* (constant + sum a_j D*_j), the indicator that
/// some D*_j, j in S, equals 1 (Any), or its complement (None). Every
/// cataloged component has this shape once R is fixed, which gives exact
/// first and second moments under independent Bernoulli assignment.
struct LocalForm {
  enum class Core { Linear, Any, None };
  Core core = Core::Linear;
  double scale = 1.0;
  std::vector<std::pair<std::size_t, std::uint8_t>> gates;
  double constant = 0.0;
  std::vector<std::pair<std::size_t, double>> terms;
  std::vector<std::size_t> set;

  static LocalForm zero() {
    LocalForm f;
    f.scale = 0.0;
    return f;
  }
  bool is_zero() const { return scale == 0.0; }
};

namespace detail {

class OverriddenP {
 public:
  OverriddenP(std::span<const double> p, const std::vector<std::pair<std::size_t, std::uint8_t>>& gates)
      : p_(p), gates_(gates) {}

  double operator()(std::size_t j) const {
    for (const auto& [g, v] : gates_)
      if (g == j) return v ? 1.0 : 0.0;
    return p_[j];
  }

 private:
  std::span<const double> p_;
  const std::vector<std::pair<std::size_t, std::uint8_t>>& gates_;
};

/// Probability that every D*_j, j in the union of the sorted sets a and b, is 0.
inline double all_zero(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b,
                       const OverriddenP& p) {
  double q = 1.0;
  std::size_t x = 0, y = 0;
  while (x < a.size() || y < b.size()) {
    std::size_t j;
    if (y == b.size() || (x < a.size() && a[x] < b[y])) {
      j = a[x++];
    } else if (x == a.size() || b[y] < a[x]) {
      j = b[y++];
    } else {
      j = a[x++];
      ++y;
    }
    q *= 1.0 - p(j);
  }
  return q;
}

inline double mean_core(const LocalForm& f, const OverriddenP& p) {
  static const std::vector<std::size_t> empty;
  switch (f.core) {
    case LocalForm::Core::Linear: {
      double m = f.constant;
      for (const auto& [j, a] : f.terms) m += a * p(j);
      return m;
    }
    case LocalForm::Core::Any: return 1.0 - all_zero(f.set, empty, p);
    case LocalForm::Core::None: return all_zero(f.set, empty, p);
  }
  return 0.0;
}

inline bool contains(const std::vector<std::size_t>& s, std::size_t j) {
  return std::binary_search(s.begin(), s.end(), j);
}

/// E[linear * indicator core]
inline double linear_times_set(const LocalForm& lin, const LocalForm& ind, const OverriddenP& p) {
  static const std::vector<std::size_t> empty;
  const double q = all_zero(ind.set, empty, p);
  const bool any = ind.core == LocalForm::Core::Any;
  const double e_ind = any ? 1.0 - q : q;
  double out = lin.constant * e_ind;
  for (const auto& [j, a] : lin.terms) {
    const double pj = p(j);
    if (contains(ind.set, j))
      out += a * (any ? pj : 0.0);
    else
      out += a * pj * e_ind;
  }
  return out;
}

inline double core_product(const LocalForm& f, const LocalForm& h, const OverriddenP& p) {
  using C = LocalForm::Core;
  static const std::vector<std::size_t> empty;
  if (f.core == C::Linear && h.core == C::Linear) {
    double mf = f.constant, mh = h.constant, cov = 0.0;
    for (const auto& [j, a] : f.terms) mf += a * p(j);
    for (const auto& [j, a] : h.terms) mh += a * p(j);
    std::size_t x = 0, y = 0;
    while (x < f.terms.size() && y < h.terms.size()) {
      if (f.terms[x].first < h.terms[y].first) {
        ++x;
      } else if (h.terms[y].first < f.terms[x].first) {
        ++y;
      } else {
        const double pj = p(f.terms[x].first);
        cov += f.terms[x].second * h.terms[y].second * pj * (1.0 - pj);
        ++x;
        ++y;
      }
    }
    return mf * mh + cov;
  }
  if (f.core == C::Linear) return linear_times_set(f, h, p);
  if (h.core == C::Linear) return linear_times_set(h, f, p);
  const double qf = all_zero(f.set, empty, p);
  const double qh = all_zero(h.set, empty, p);
  const double qu = all_zero(f.set, h.set, p);
  if (f.core == C::Any && h.core == C::Any) return 1.0 - qf - qh + qu;
  if (f.core == C::None && h.core == C::None) return qu;
  if (f.core == C::Any) return qh - qu;
  return qf - qu;
}

/// Merges sorted gate lists; false on conflicting requirements.
inline bool merge_gates(const LocalForm& f, const LocalForm& h,
                        std::vector<std::pair<std::size_t, std::uint8_t>>& out) {
  out.clear();
  std::size_t x = 0, y = 0;
  while (x < f.gates.size() || y < h.gates.size()) {
    if (y == h.gates.size() || (x < f.gates.size() && f.gates[x].first < h.gates[y].first)) {
      out.push_back(f.gates[x++]);
    } else if (x == f.gates.size() || h.gates[y].first < f.gates[x].first) {
      out.push_back(h.gates[y++]);
    } else {
      if (f.gates[x].second != h.gates[y].second) return false;
      out.push_back(f.gates[x++]);
      ++y;
    }
  }
  return true;
}

inline double gate_probability(const std::vector<std::pair<std::size_t, std::uint8_t>>& gates,
                               std::span<const double> p) {
  double prob = 1.0;
  for (const auto& [g, v] : gates) prob *= v ? p[g] : 1.0 - p[g];
  return prob;
}

}  // namespace detail

inline double expectation(const LocalForm& f, std::span<const double> p) {
  if (f.is_zero()) return 0.0;
  const double pg = detail::gate_probability(f.gates, p);
  if (pg == 0.0) return 0.0;
  return f.scale * pg * detail::mean_core(f, detail::OverriddenP(p, f.gates));
}

inline double expectation_of_product(const LocalForm& f, const LocalForm& h, std::span<const double> p) {
  if (f.is_zero() || h.is_zero()) return 0.0;
  std::vector<std::pair<std::size_t, std::uint8_t>> gates;
  if (!detail::merge_gates(f, h, gates)) return 0.0;
  const double pg = detail::gate_probability(gates, p);
  if (pg == 0.0) return 0.0;
  return f.scale * h.scale * pg * detail::core_product(f, h, detail::OverriddenP(p, gates));
}

inline double covariance(const LocalForm& f, const LocalForm& h, std::span<const double> p) {
  return expectation_of_product(f, h, p) - expectation(f, p) * expectation(h, p);
}

/// Local forms of every component for every unit given the R (and hence the
/// sampled and censored networks) recorded in `state`. D* in `state` is
/// ignored. Result is indexed [unit][component].
inline std::vector<std::vector<LocalForm>> build_forms(const ExposureSpec& spec, const Draw& state,
                                                       const PopulationGraph& g) {
  spec.validate();
  const std::size_t n = g.size();
  const PopulationGraph& G = network_for(spec.source, g, state);
  const auto& R = state.R;
  std::vector<double> scratch(n, 0.0);

  auto share_terms = [&](std::size_t i, Denominator den_kind, bool normalize, LocalForm& f) {
    double den = 0.0;
    for (std::size_t j : G.neighbors(i)) {
      den += den_kind == Denominator::Network ? 1.0 : R[j];
      if (R[j]) f.terms.emplace_back(j, 1.0);
    }
    if (!normalize) return;
    if (den == 0.0) {
      f.terms.clear();
      return;
    }
    for (auto& t : f.terms) t.second /= den;
  };

  auto sampled_friends = [&](std::size_t i) {
    std::vector<std::size_t> s;
    for (std::size_t j : G.neighbors(i))
      if (R[j]) s.push_back(j);
    return s;
  };

  auto build = [&](const Component& c, std::size_t i, auto& self) -> LocalForm {
    LocalForm f;
    switch (c.kind) {
      case ComponentKind::Own:
        if (R[i]) f.terms.emplace_back(i, 1.0);
        return f;
      case ComponentKind::Share:
        share_terms(i, c.denominator, true, f);
        return f;
      case ComponentKind::Count:
        share_terms(i, Denominator::Network, false, f);
        return f;
      case ComponentKind::Any:
        f.core = LocalForm::Core::Any;
        f.set = sampled_friends(i);
        return f;
      case ComponentKind::SecondShare: {
        double den = 0.0;
        for (const auto& [k, w] : detail::second_order_weights(G, i, c.exclude_triangles, scratch)) {
          den += c.denominator == Denominator::Network ? w : w * R[k];
          if (R[k]) f.terms.emplace_back(k, w);
        }
        if (den == 0.0)
          f.terms.clear();
        else
          for (auto& t : f.terms) t.second /= den;
        return f;
      }
      case ComponentKind::InteractionOwnShare:
        if (!R[i]) return LocalForm::zero();
        f.gates.emplace_back(i, 1);
        share_terms(i, c.denominator, true, f);
        return f;
      case ComponentKind::Category: {
        const auto s = sampled_friends(i);
        switch (c.category) {
          case CategoryKind::TreatedExposed:
          case CategoryKind::TreatedUnexposed:
            if (!R[i]) return LocalForm::zero();
            f.gates.emplace_back(i, 1);
            f.core = c.category == CategoryKind::TreatedExposed ? LocalForm::Core::Any
                                                                : LocalForm::Core::None;
            f.set = s;
            return f;
          case CategoryKind::UntreatedExposed:
            if (R[i]) f.gates.emplace_back(i, 0);
            f.core = LocalForm::Core::Any;
            f.set = s;
            return f;
        }
        return f;
      }
      case ComponentKind::CensorAware: {
        LocalForm inner = self(c.inner[0], i, self);
        if (c.zero_if_censored && state.censored.degree(i) >= c.cap) return LocalForm::zero();
        return inner;
      }
    }
    return f;
  };

  std::vector<std::vector<LocalForm>> forms(n);
  for (std::size_t i = 0; i < n; ++i) {
    forms[i].reserve(spec.dim());
    for (const auto& c : spec.components) forms[i].push_back(build(c, i, build));
  }
  return forms;
}

/// Conditional expectation E[T | R] for every unit (n x d).
inline Eigen::MatrixXd conditional_expectation(const std::vector<std::vector<LocalForm>>& forms,
                                               std::span<const double> p) {
  const std::size_t n = forms.size();
  const std::size_t d = n ? forms[0].size() : 0;
  Eigen::MatrixXd m(n, d);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < d; ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = expectation(forms[i][k], p);
  return m;
}

inline Eigen::MatrixXd conditional_expectation(const ExposureSpec& spec, const Draw& state,
                                               const PopulationGraph& g, std::span<const double> p) {
  if (p.size() != g.size()) throw InputError("p must have one entry per unit");
  return conditional_expectation(build_forms(spec, state, g), p);
}

/// Cov(T_a, T_b | R) for one unit, where a and b are the unit's forms under
/// two (possibly different) specs.
inline Eigen::MatrixXd conditional_cross_covariance(const std::vector<LocalForm>& a,
                                                    const std::vector<LocalForm>& b,
                                                    std::span<const double> p) {
  Eigen::MatrixXd c(a.size(), b.size());
  for (std::size_t k = 0; k < a.size(); ++k)
    for (std::size_t l = 0; l < b.size(); ++l)
      c(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = covariance(a[k], b[l], p);
  return c;
}

inline Eigen::MatrixXd conditional_covariance(const std::vector<LocalForm>& a, std::span<const double> p) {
  Eigen::MatrixXd c = conditional_cross_covariance(a, a, p);
  return 0.5 * (c + c.transpose());
}

struct OverlapDiagnostic {
  /// (1/N) sum over sampled i of Cov(T_i(k), T_i(l) | R), Monte Carlo estimate.
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd standard_error;
  /// Same average computed from the closed-form moments.
  Eigen::MatrixXd exact;
  std::vector<std::pair<std::size_t, std::size_t>> flagged;
  std::size_t replications = 0;
};

/// Redraws D* given the R, sampled and censored networks recorded in
/// `state`. Each draw contributes (1/N) sum_i (T_ik - E[T_ik|R])(T_il - E[T_il|R]),
/// which is unbiased for the averaged covariance, so the standard error is
/// the spread of those draws over sqrt(B). Off-diagonal entries beyond three
/// standard errors are flagged.
inline OverlapDiagnostic overlap_diagnostic(const ExposureSpec& spec, const Draw& state, const PopulationGraph& g,
                                            std::span<const double> p, std::size_t B, Rng& rng) {
  if (B < 100) throw InputError("overlap diagnostic needs at least 100 replications");
  if (p.size() != g.size()) throw InputError("p must have one entry per unit");
  const std::size_t n = g.size();
  const auto d = static_cast<Eigen::Index>(spec.dim());
  const auto forms = build_forms(spec, state, g);
  const Eigen::MatrixXd mean = conditional_expectation(forms, p);
  std::vector<std::size_t> units;
  for (std::size_t i = 0; i < n; ++i)
    if (state.R[i]) units.push_back(i);
  if (units.empty()) throw InputError("no sampled units (all R = 0)");
  const double N = static_cast<double>(units.size());

  OverlapDiagnostic out;
  out.replications = B;
  out.exact = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t i : units) out.exact += conditional_covariance(forms[i], p);
  out.exact /= N;

  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(d, d), sumsq = Eigen::MatrixXd::Zero(d, d);
  Draw draw = state;
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      draw.Dstar[i] = bernoulli(rng, p[i]);
      draw.D[i] = draw.R[i] & draw.Dstar[i];
    }
    const Eigen::MatrixXd T = compute_exposure(spec, draw, g);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(d, d);
    for (std::size_t i : units) {
      const Eigen::VectorXd x = (T.row(static_cast<Eigen::Index>(i)) - mean.row(static_cast<Eigen::Index>(i))).transpose();
      c += x * x.transpose();
    }
    c /= N;
    sum += c;
    sumsq += c.cwiseProduct(c);
  }
  const double Bd = static_cast<double>(B);
  out.covariance = sum / Bd;
  const Eigen::MatrixXd var = (sumsq / Bd - out.covariance.cwiseProduct(out.covariance)) * (Bd / (Bd - 1.0));
  out.standard_error = (var.cwiseMax(0.0) / Bd).cwiseSqrt();
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index l = k + 1; l < d; ++l) {
      const double c = out.covariance(k, l), se = out.standard_error(k, l);
      if (se > 0.0 ? std::abs(c) > 3.0 * se : std::abs(c) > 1e-12)
        out.flagged.emplace_back(static_cast<std::size_t>(k), static_cast<std::size_t>(l));
    }
  return out;
}

}  // namespace netspill
