#pragma once

// Residualized OLS for exposure effects, the causal estimands it targets
// under a known data-generating process, their contamination decomposition,
// and the rescaled nuisance estimator used for population-level standard
// errors.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netspill/design.hpp"
#include "netspill/error.hpp"
#include "netspill/exposure.hpp"
#include "netspill/graph.hpp"
#include "netspill/linalg.hpp"
#include "netspill/rng.hpp"

namespace netspill {

struct Dataset {
  Eigen::VectorXd Y;
  /// Observed exposures, n x d.
  Eigen::MatrixXd T;
  /// Covariates, n x q. Must span the columns of cond_mean on the sample.
  Eigen::MatrixXd Z;
  Indicator R;
  /// E[T | R], n x d.
  Eigen::MatrixXd cond_mean;
  std::vector<std::string> exposure_names;
  std::vector<std::string> covariate_names;

  std::size_t size() const { return static_cast<std::size_t>(Y.size()); }

  std::size_t sample_size() const {
    std::size_t s = 0;
    for (auto r : R) s += r;
    return s;
  }

  void validate() const {
    const auto n = Y.size();
    if (static_cast<Eigen::Index>(R.size()) != n || T.rows() != n || Z.rows() != n ||
        cond_mean.rows() != n)
      throw InputError("dataset columns have inconsistent lengths");
    if (cond_mean.cols() != T.cols()) throw InputError("cond_mean must have one column per exposure");
    if (T.cols() == 0) throw InputError("dataset has no exposure columns");
    if (sample_size() == 0) throw InputError("no sampled units (all R = 0)");
  }
};

inline std::vector<std::size_t> sampled_units(const Indicator& R) {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < R.size(); ++i)
    if (R[i]) s.push_back(i);
  return s;
}

inline Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& M, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), M.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = M.row(static_cast<Eigen::Index>(rows[r]));
  return out;
}

inline Eigen::VectorXd gather_rows(const Eigen::VectorXd& v, const std::vector<std::size_t>& rows) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) out(static_cast<Eigen::Index>(r)) = v(static_cast<Eigen::Index>(rows[r]));
  return out;
}

struct ResidualizedDesign {
  /// d x q
  Eigen::MatrixXd Lambda;
  /// n x d; rows of unsampled units are zero.
  Eigen::MatrixXd X;
};

/// X = T - Lambda Z with Lambda from regressing E[T | R] (not T) on Z over
/// the sample.
inline ResidualizedDesign residualize(const Dataset& ds) {
  ds.validate();
  const auto rows = sampled_units(ds.R);
  ResidualizedDesign rd;
  const Eigen::MatrixXd Zs = gather_rows(ds.Z, rows);
  if (Zs.cols() == 0) {
    rd.Lambda = Eigen::MatrixXd::Zero(ds.T.cols(), 0);
  } else {
    rd.Lambda = checked_least_squares(Zs, gather_rows(ds.cond_mean, rows), "covariate matrix")
                    .transpose();
  }
  rd.X = Eigen::MatrixXd::Zero(ds.T.rows(), ds.T.cols());
  for (std::size_t i : rows) {
    const auto r = static_cast<Eigen::Index>(i);
    rd.X.row(r) = ds.T.row(r) - ds.Z.row(r) * rd.Lambda.transpose();
  }
  return rd;
}

struct EstimationResult {
  Eigen::VectorXd theta;
  Eigen::VectorXd gamma;
  /// n-vector; zero for unsampled units.
  Eigen::VectorXd residuals;
  /// (1/N) sum_i R_i X_i X_i'
  Eigen::MatrixXd QXX;
  std::size_t N = 0;
  std::size_t n = 0;
};

/// Joint least squares of Y on (X, Z) over the sample.
inline EstimationResult ols_fit(const Dataset& ds, const ResidualizedDesign& rd) {
  const auto rows = sampled_units(ds.R);
  const Eigen::Index d = rd.X.cols();
  const Eigen::Index q = ds.Z.cols();
  Eigen::MatrixXd W(static_cast<Eigen::Index>(rows.size()), d + q);
  W << gather_rows(rd.X, rows), gather_rows(ds.Z, rows);
  const Eigen::VectorXd Ys = gather_rows(ds.Y, rows);
  const Eigen::VectorXd coef = checked_least_squares(W, Ys, "regressor matrix (exposures then covariates)");
  EstimationResult res;
  res.theta = coef.head(d);
  res.gamma = coef.tail(q);
  res.N = rows.size();
  res.n = ds.size();
  res.residuals = Eigen::VectorXd::Zero(ds.Y.size());
  const Eigen::VectorXd fitted = W * coef;
  for (std::size_t r = 0; r < rows.size(); ++r)
    res.residuals(static_cast<Eigen::Index>(rows[r])) = Ys(static_cast<Eigen::Index>(r)) - fitted(static_cast<Eigen::Index>(r));
  const Eigen::MatrixXd Xs = W.leftCols(d);
  res.QXX = symmetrize(Xs.transpose() * Xs / static_cast<double>(res.N));
  return res;
}

/// Nuisance coefficients from regressing Y on Z alone with the blocks that
/// involve the first m (R-multiplicative) columns of Z scaled by rho.
inline Eigen::VectorXd gamma_tilde(const Dataset& ds, double rho, std::size_t m) {
  if (!(rho > 0.0 && rho <= 1.0)) throw InputError("rho must lie in (0, 1]");
  const auto q = static_cast<std::size_t>(ds.Z.cols());
  if (m > q) throw InputError("m exceeds the number of covariates");
  const auto rows = sampled_units(ds.R);
  const double N = static_cast<double>(rows.size());
  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(ds.Z.cols(), ds.Z.cols());
  Eigen::VectorXd PY = Eigen::VectorXd::Zero(ds.Z.cols());
  Eigen::VectorXd scale = Eigen::VectorXd::Ones(ds.Z.cols());
  for (std::size_t c = 0; c < m; ++c) scale(static_cast<Eigen::Index>(c)) = rho;
  for (std::size_t i : rows) {
    const Eigen::VectorXd z = ds.Z.row(static_cast<Eigen::Index>(i)).transpose();
    P += z * z.transpose();
    PY += z * ds.Y(static_cast<Eigen::Index>(i));
  }
  // Entry (a, b) is scaled once if either index is among the first m.
  for (Eigen::Index a = 0; a < P.rows(); ++a)
    for (Eigen::Index b = 0; b < P.cols(); ++b)
      if (static_cast<std::size_t>(a) < m || static_cast<std::size_t>(b) < m) P(a, b) *= rho;
  PY = PY.cwiseProduct(scale);
  P /= N;
  PY /= N;
  return checked_spd_solve(P, PY, "rescaled covariate moment matrix");
}

struct DgpTruth {
  /// n x d_T heterogeneous effects.
  Eigen::MatrixXd theta;
  Eigen::VectorXd nu;
};

/// Y_i = T_i' theta_i + nu_i.
inline Eigen::VectorXd potential_outcomes(const Eigen::MatrixXd& T, const DgpTruth& truth) {
  if (T.rows() != truth.theta.rows() || T.cols() != truth.theta.cols())
    throw InputError("truth dimension does not match the true exposure mapping");
  return T.cwiseProduct(truth.theta).rowwise().sum() + truth.nu;
}

enum class EstimandMode { ClosedForm, MonteCarlo };

struct EstimandOptions {
  EstimandMode mode = EstimandMode::ClosedForm;
  /// Replications for Monte Carlo mode, and for the fallback over R when
  /// the population estimand has no exact route.
  std::size_t replications = 2000;
  std::uint64_t seed = 0;
  /// Largest n for exact enumeration over all R.
  std::size_t enumeration_cap = 16;
};

struct PopulationEstimand {
  Eigen::VectorXd theta;
  /// sum_i E[X_i X_i']
  Eigen::MatrixXd S;
  /// E[X_i X_i'] per unit.
  std::vector<Eigen::MatrixXd> moments;
  std::string method;
};

namespace detail {

inline Draw state_for(const PopulationGraph& g, const DesignSpec& design, Indicator R) {
  return realize(g, design, std::move(R), Indicator(g.size(), 0));
}

/// True when every component is a fixed linear combination of R_j D*_j,
/// so that Cov(T | R) is linear in R.
inline bool r_linear(const ExposureSpec& spec) {
  if (spec.source != NetworkSource::Population) return false;
  for (const auto& c : spec.components) {
    switch (c.kind) {
      case ComponentKind::Own:
      case ComponentKind::Count: break;
      case ComponentKind::Share:
      case ComponentKind::SecondShare:
        if (c.denominator != Denominator::Network) return false;
        break;
      default: return false;
    }
  }
  return true;
}

inline Eigen::VectorXd combine(const Eigen::MatrixXd& S, const std::vector<Eigen::MatrixXd>& cross,
                               const Eigen::MatrixXd& theta, const std::vector<std::size_t>& units,
                               const std::string& what) {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(S.rows());
  for (std::size_t u = 0; u < units.size(); ++u)
    rhs += cross[u] * theta.row(static_cast<Eigen::Index>(units[u])).transpose();
  return checked_spd_solve(S, rhs, what);
}

}  // namespace detail

/// theta_causal = (sum_i E[X_i X_i'])^-1 sum_i E[X_i X_i'] theta_i with
/// X_i = T_i - E[T_i | R] (population covariates are taken to span E[T | R]).
inline PopulationEstimand population_estimand(const PopulationGraph& g, const ExposureSpec& spec,
                                              const DesignSpec& design, const DgpTruth& truth,
                                              const EstimandOptions& opt = {}) {
  spec.validate();
  design.validate(g.size());
  const std::size_t n = g.size();
  const auto d = static_cast<Eigen::Index>(spec.dim());
  if (truth.theta.rows() != static_cast<Eigen::Index>(n) || truth.theta.cols() != d)
    throw InputError("truth dimension does not match the true exposure mapping");
  const auto p = design.p_vector(n);
  PopulationEstimand out;
  out.moments.assign(n, Eigen::MatrixXd::Zero(d, d));

  if (opt.mode == EstimandMode::MonteCarlo) {
    Rng rng(opt.seed);
    for (std::size_t b = 0; b < opt.replications; ++b) {
      Draw draw = draw_sample(g, design, rng);
      const auto forms = build_forms(spec, draw, g);
      const Eigen::MatrixXd m = conditional_expectation(forms, p);
      const Eigen::MatrixXd X = compute_exposure(spec, draw, g) - m;
      for (std::size_t i = 0; i < n; ++i) {
        const Eigen::VectorXd x = X.row(static_cast<Eigen::Index>(i)).transpose();
        out.moments[i] += x * x.transpose();
      }
    }
    for (auto& M : out.moments) M /= static_cast<double>(opt.replications);
    out.method = "monte_carlo(" + std::to_string(opt.replications) + ")";
  } else if (design.rho >= 1.0 || detail::r_linear(spec)) {
    const auto forms = build_forms(spec, detail::state_for(g, design, Indicator(n, 1)), g);
    const double rho = design.rho;
    for (std::size_t i = 0; i < n; ++i) {
      Eigen::MatrixXd C = conditional_covariance(forms[i], p);
      out.moments[i] = rho >= 1.0 ? C : Eigen::MatrixXd(rho * C);
    }
    out.method = design.rho >= 1.0 ? "exact" : "exact_r_linear";
  } else if (n <= opt.enumeration_cap) {
    const double rho = design.rho;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
      Indicator R(n);
      double prob = 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        R[i] = (mask >> i) & 1U;
        prob *= R[i] ? rho : 1.0 - rho;
      }
      const auto forms = build_forms(spec, detail::state_for(g, design, std::move(R)), g);
      for (std::size_t i = 0; i < n; ++i) out.moments[i] += prob * conditional_covariance(forms[i], p);
    }
    out.method = "exact_enumeration";
  } else {
    Rng rng(opt.seed);
    for (std::size_t b = 0; b < opt.replications; ++b) {
      const auto forms =
          build_forms(spec, detail::state_for(g, design, draw_sampling(n, design.rho, rng)), g);
      for (std::size_t i = 0; i < n; ++i) out.moments[i] += conditional_covariance(forms[i], p);
    }
    for (auto& M : out.moments) M /= static_cast<double>(opt.replications);
    out.method = "monte_carlo_over_R(" + std::to_string(opt.replications) + ")";
  }

  out.S = Eigen::MatrixXd::Zero(d, d);
  for (const auto& M : out.moments) out.S += M;
  out.S = symmetrize(out.S);
  std::vector<std::size_t> all(n);
  for (std::size_t i = 0; i < n; ++i) all[i] = i;
  out.theta = detail::combine(out.S, out.moments, truth.theta, all, "sum of E[X X']");
  return out;
}

struct SampleEstimand {
  Eigen::VectorXd theta;
  /// sum_i R_i E[X~_i X~_i' | R]
  Eigen::MatrixXd S;
  /// Sampled units, in order.
  std::vector<std::size_t> units;
  /// E[X~_i X~_i' | R] per sampled unit.
  std::vector<Eigen::MatrixXd> moments;
  /// E[X~_i X_i' | R] per sampled unit (d~ x d_T).
  std::vector<Eigen::MatrixXd> cross;
  std::string method;
};

struct SampleEstimandOptions {
  EstimandMode mode = EstimandMode::ClosedForm;
  std::size_t replications = 2000;
  std::uint64_t seed = 0;
  /// Covariates Z~ (n x q). When absent, Z~ is taken to be E[T~ | R] itself,
  /// so Lambda~ Z~ = E[T~ | R].
  std::optional<Eigen::MatrixXd> covariates;
};

/// Cached conditional moments of a (true, observed) spec pair for one R.
struct ConditionalMoments {
  std::vector<std::vector<LocalForm>> observed_forms;
  std::vector<std::vector<LocalForm>> true_forms;
  Eigen::MatrixXd observed_mean;
  Eigen::MatrixXd true_mean;
};

inline ConditionalMoments conditional_moments(const PopulationGraph& g, const Draw& state,
                                              const ExposureSpec& true_spec,
                                              const ExposureSpec& observed_spec,
                                              std::span<const double> p) {
  ConditionalMoments cm;
  cm.observed_forms = build_forms(observed_spec, state, g);
  cm.true_forms = build_forms(true_spec, state, g);
  cm.observed_mean = conditional_expectation(cm.observed_forms, p);
  cm.true_mean = conditional_expectation(cm.true_forms, p);
  return cm;
}

/// theta_causal_sample = (sum_i R_i E[X~ X~' | R])^-1 sum_i R_i E[X~ X' | R] theta_i
/// for the R recorded in `state`.
inline SampleEstimand sample_estimand(const PopulationGraph& g, const Draw& state,
                                      const ExposureSpec& true_spec, const ExposureSpec& observed_spec,
                                      const DesignSpec& design, const DgpTruth& truth,
                                      const SampleEstimandOptions& opt = {},
                                      const ConditionalMoments* cached = nullptr) {
  const std::size_t n = g.size();
  const auto dt = static_cast<Eigen::Index>(true_spec.dim());
  const auto dobs = static_cast<Eigen::Index>(observed_spec.dim());
  if (truth.theta.rows() != static_cast<Eigen::Index>(n) || truth.theta.cols() != dt)
    throw InputError("truth dimension does not match the true exposure mapping");
  const auto p = design.p_vector(n);
  ConditionalMoments local;
  if (!cached) {
    local = conditional_moments(g, state, true_spec, observed_spec, p);
    cached = &local;
  }
  const ConditionalMoments& cm = *cached;

  SampleEstimand out;
  out.units = sampled_units(state.R);
  if (out.units.empty()) throw InputError("no sampled units");

  // h_i = Lambda~ Z~_i; equals E[T~_i | R] when Z~ spans it.
  Eigen::MatrixXd h = cm.observed_mean;
  if (opt.covariates) {
    const Eigen::MatrixXd Zs = gather_rows(*opt.covariates, out.units);
    const Eigen::MatrixXd Lambda =
        checked_least_squares(Zs, gather_rows(cm.observed_mean, out.units), "covariate matrix").transpose();
    h = *opt.covariates * Lambda.transpose();
  }

  out.moments.assign(out.units.size(), Eigen::MatrixXd::Zero(dobs, dobs));
  out.cross.assign(out.units.size(), Eigen::MatrixXd::Zero(dobs, dt));
  if (opt.mode == EstimandMode::ClosedForm) {
    for (std::size_t u = 0; u < out.units.size(); ++u) {
      const std::size_t i = out.units[u];
      const Eigen::VectorXd gap = (cm.observed_mean.row(static_cast<Eigen::Index>(i)) -
                                   h.row(static_cast<Eigen::Index>(i))).transpose();
      out.moments[u] = conditional_covariance(cm.observed_forms[i], p) + gap * gap.transpose();
      out.cross[u] = conditional_cross_covariance(cm.observed_forms[i], cm.true_forms[i], p);
    }
    out.method = "exact";
  } else {
    Rng rng(opt.seed);
    Draw draw = state;
    for (std::size_t b = 0; b < opt.replications; ++b) {
      draw.Dstar = draw_treatment(design, n, rng);
      for (std::size_t i = 0; i < n; ++i) draw.D[i] = draw.R[i] & draw.Dstar[i];
      const Eigen::MatrixXd Xo = compute_exposure(observed_spec, draw, g) - h;
      const Eigen::MatrixXd Xt = compute_exposure(true_spec, draw, g) - cm.true_mean;
      for (std::size_t u = 0; u < out.units.size(); ++u) {
        const auto i = static_cast<Eigen::Index>(out.units[u]);
        const Eigen::VectorXd xo = Xo.row(i).transpose();
        out.moments[u] += xo * xo.transpose();
        out.cross[u] += xo * Xt.row(i);
      }
    }
    for (auto& M : out.moments) M /= static_cast<double>(opt.replications);
    for (auto& M : out.cross) M /= static_cast<double>(opt.replications);
    out.method = "monte_carlo(" + std::to_string(opt.replications) + ")";
  }
  out.S = Eigen::MatrixXd::Zero(dobs, dobs);
  for (const auto& M : out.moments) out.S += M;
  out.S = symmetrize(out.S);
  out.theta = detail::combine(out.S, out.cross, truth.theta, out.units, "sum of R E[X~ X~' | R]");
  return out;
}

struct ContaminationReport {
  std::size_t k = 0;
  /// Row u holds the weights on theta_{units[u]}; n_units x d_T.
  Eigen::MatrixXd weights;
  std::vector<std::size_t> units;
  /// Own/contamination split; present only when the observed and true
  /// mappings have the same dimension.
  std::optional<Eigen::VectorXd> own_weights;
  std::optional<Eigen::MatrixXd> contamination_weights;
  double estimand = 0.0;
  std::optional<double> own_term;
  std::optional<double> contamination_term;
  std::size_t negative_own_weights = 0;
  std::size_t nonzero_contamination_weights = 0;
};

/// Decomposes element k of an estimand into the weight each unit's effect
/// vector receives. `moments[u]` are the second moments used to residualize
/// element k on the others; `cross[u]` pair them with the true residualized
/// exposures. Pass the same list twice for the population estimand.
inline ContaminationReport contamination_weights(const std::vector<Eigen::MatrixXd>& moments,
                                                 const std::vector<Eigen::MatrixXd>& cross,
                                                 const std::vector<std::size_t>& units,
                                                 const DgpTruth& truth, std::size_t k,
                                                 double tolerance = 1e-12) {
  if (moments.empty() || moments.size() != cross.size() || moments.size() != units.size())
    throw InputError("moment lists must be non-empty and aligned");
  const Eigen::Index d = moments[0].rows();
  const Eigen::Index dt = cross[0].cols();
  if (static_cast<Eigen::Index>(k) >= d) throw InputError("element index out of range");
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(d, d);
  for (const auto& M : moments) S += M;
  S = symmetrize(S);

  Eigen::VectorXd c = Eigen::VectorXd::Zero(d);
  c(static_cast<Eigen::Index>(k)) = 1.0;
  if (d > 1) {
    std::vector<Eigen::Index> others;
    for (Eigen::Index a = 0; a < d; ++a)
      if (a != static_cast<Eigen::Index>(k)) others.push_back(a);
    Eigen::MatrixXd Soo(d - 1, d - 1);
    Eigen::VectorXd Sok(d - 1);
    for (Eigen::Index a = 0; a < d - 1; ++a) {
      Sok(a) = S(others[a], static_cast<Eigen::Index>(k));
      for (Eigen::Index b = 0; b < d - 1; ++b) Soo(a, b) = S(others[a], others[b]);
    }
    const Eigen::VectorXd b = checked_spd_solve(Soo, Sok, "moments of the other elements");
    for (Eigen::Index a = 0; a < d - 1; ++a) c(others[a]) = -b(a);
  }
  const double denom = c.dot(S * c);
  if (!(denom > tolerance * std::max(1.0, S.trace())))
    throw NumericalError("residualized element " + std::to_string(k) + " has zero variance");

  ContaminationReport rep;
  rep.k = k;
  rep.units = units;
  rep.weights.resize(static_cast<Eigen::Index>(units.size()), dt);
  for (std::size_t u = 0; u < units.size(); ++u)
    rep.weights.row(static_cast<Eigen::Index>(u)) = c.transpose() * cross[u] / denom;
  for (std::size_t u = 0; u < units.size(); ++u)
    rep.estimand += rep.weights.row(static_cast<Eigen::Index>(u)).dot(truth.theta.row(static_cast<Eigen::Index>(units[u])));
  if (dt == d) {
    const auto kk = static_cast<Eigen::Index>(k);
    Eigen::VectorXd own = rep.weights.col(kk);
    Eigen::MatrixXd cont(rep.weights.rows(), dt - 1);
    double own_term = 0.0, cont_term = 0.0;
    for (Eigen::Index u = 0; u < rep.weights.rows(); ++u) {
      const auto row = truth.theta.row(static_cast<Eigen::Index>(units[static_cast<std::size_t>(u)]));
      own_term += own(u) * row(kk);
      Eigen::Index col = 0;
      for (Eigen::Index l = 0; l < dt; ++l) {
        if (l == kk) continue;
        cont(u, col++) = rep.weights(u, l);
        cont_term += rep.weights(u, l) * row(l);
      }
      if (own(u) < -1e-12) ++rep.negative_own_weights;
    }
    const double scale = std::max(1.0, rep.weights.cwiseAbs().maxCoeff());
    for (Eigen::Index u = 0; u < cont.rows(); ++u)
      for (Eigen::Index l = 0; l < cont.cols(); ++l)
        if (std::abs(cont(u, l)) > 1e-10 * scale) ++rep.nonzero_contamination_weights;
    rep.own_weights = own;
    rep.contamination_weights = cont;
    rep.own_term = own_term;
    rep.contamination_term = cont_term;
  }
  return rep;
}

inline ContaminationReport contamination_weights(const PopulationEstimand& est, const DgpTruth& truth,
                                                 std::size_t k) {
  std::vector<std::size_t> all(est.moments.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return contamination_weights(est.moments, est.moments, all, truth, k);
}

inline ContaminationReport contamination_weights(const SampleEstimand& est, const DgpTruth& truth,
                                                 std::size_t k) {
  return contamination_weights(est.moments, est.cross, est.units, truth, k);
}

}  // namespace netspill
