#pragma once

// Network-HAC variance with eigenvalue clipping of the distance kernel, the
// Eicker-Huber-White baseline, and diagnostics for the clipped part.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "netspill/design.hpp"
#include "netspill/error.hpp"
#include "netspill/estimator.hpp"
#include "netspill/graph.hpp"
#include "netspill/linalg.hpp"

namespace netspill {

enum class VarianceKind { EHW, Plain, EigenClipped };
enum class GammaSource { GammaHat, GammaTilde };

inline const char* to_string(VarianceKind v) {
  switch (v) {
    case VarianceKind::EHW: return "ehw";
    case VarianceKind::Plain: return "plain";
    case VarianceKind::EigenClipped: return "eigen";
  }
  return "?";
}

/// Psi_i = X_i * e_i for sampled units, zero elsewhere (n x d).
inline Eigen::MatrixXd score_vectors(const ResidualizedDesign& rd, const Eigen::VectorXd& residuals,
                                     const Indicator& R) {
  Eigen::MatrixXd psi = Eigen::MatrixXd::Zero(rd.X.rows(), rd.X.cols());
  for (std::size_t i = 0; i < R.size(); ++i)
    if (R[i]) {
      const auto r = static_cast<Eigen::Index>(i);
      psi.row(r) = rd.X.row(r) * residuals(r);
    }
  return psi;
}

/// Residuals Y - X theta - Z gamma over the sample, for any gamma.
inline Eigen::VectorXd residuals_with(const Dataset& ds, const ResidualizedDesign& rd,
                                      const Eigen::VectorXd& theta, const Eigen::VectorXd& gamma) {
  Eigen::VectorXd e = Eigen::VectorXd::Zero(ds.Y.size());
  for (std::size_t i = 0; i < ds.R.size(); ++i)
    if (ds.R[i]) {
      const auto r = static_cast<Eigen::Index>(i);
      e(r) = ds.Y(r) - rd.X.row(r).dot(theta) - ds.Z.row(r).dot(gamma);
    }
  return e;
}

/// 0/1 kernel K_ij = 1{d~(i,j) <= 2K} over sampled units, stored as sparse
/// rows. Distances are measured on the whole sampled network, so under star
/// sampling a path may pass through unsampled units.
struct HacKernel {
  std::size_t K = 1;
  std::size_t n = 0;
  std::vector<std::size_t> units;
  /// rows[u] lists positions v (into units) with K_uv = 1, sorted, u included.
  std::vector<std::vector<std::size_t>> rows;
  /// Connected components of the kernel relation, as sorted position lists.
  std::vector<std::vector<std::size_t>> blocks;

  std::size_t size() const { return units.size(); }

  Eigen::MatrixXd dense() const {
    Eigen::MatrixXd k = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(size()));
    for (std::size_t u = 0; u < size(); ++u)
      for (std::size_t v : rows[u]) k(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) = 1.0;
    return k;
  }
};

inline HacKernel hac_kernel(const PopulationGraph& sampled, const Indicator& R, std::size_t K) {
  if (K < 1) throw InputError("HAC radius K must be at least 1");
  HacKernel ker;
  ker.K = K;
  ker.n = sampled.size();
  ker.units = sampled_units(R);
  std::vector<std::size_t> position(sampled.size(), SIZE_MAX);
  for (std::size_t u = 0; u < ker.units.size(); ++u) position[ker.units[u]] = u;
  ker.rows.resize(ker.units.size());

  std::vector<std::size_t> stamp(sampled.size(), SIZE_MAX);
  std::vector<std::size_t> frontier, next;
  for (std::size_t u = 0; u < ker.units.size(); ++u) {
    const std::size_t src = ker.units[u];
    auto& row = ker.rows[u];
    frontier.assign(1, src);
    stamp[src] = u;
    row.push_back(u);
    for (std::size_t s = 1; s <= 2 * K && !frontier.empty(); ++s) {
      next.clear();
      for (std::size_t a : frontier)
        for (std::size_t b : sampled.neighbors(a))
          if (stamp[b] != u) {
            stamp[b] = u;
            next.push_back(b);
            if (position[b] != SIZE_MAX) row.push_back(position[b]);
          }
      std::swap(frontier, next);
    }
    std::sort(row.begin(), row.end());
  }

  std::vector<std::size_t> parent(ker.units.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t u = 0; u < ker.rows.size(); ++u)
    for (std::size_t v : ker.rows[u]) {
      const std::size_t a = find(u), b = find(v);
      if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
  std::vector<std::size_t> block_of(ker.units.size(), SIZE_MAX);
  for (std::size_t u = 0; u < ker.units.size(); ++u) {
    const std::size_t root = find(u);
    if (block_of[root] == SIZE_MAX) {
      block_of[root] = ker.blocks.size();
      ker.blocks.emplace_back();
    }
    ker.blocks[block_of[root]].push_back(u);
  }
  return ker;
}

/// (1/N) sum_i sum_{j : K_ij = 1} Psi_i Psi_j'
inline Eigen::MatrixXd hac_sigma(const Eigen::MatrixXd& psi, const HacKernel& ker, std::size_t N) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(psi.cols(), psi.cols());
  for (std::size_t u = 0; u < ker.size(); ++u) {
    Eigen::RowVectorXd acc = Eigen::RowVectorXd::Zero(psi.cols());
    for (std::size_t v : ker.rows[u]) acc += psi.row(static_cast<Eigen::Index>(ker.units[v]));
    s += psi.row(static_cast<Eigen::Index>(ker.units[u])).transpose() * acc;
  }
  return symmetrize(s / static_cast<double>(N));
}

struct ClipResult {
  Eigen::MatrixXd plus;
  Eigen::MatrixXd minus;
};

namespace detail {

struct EigenParts {
  Eigen::MatrixXd Q;
  Eigen::VectorXd positive;
  Eigen::VectorXd negative;
};

/// Eigenvalues above zero go to `positive`; magnitudes of those below
/// -1e-12 * max|eigenvalue| go to `negative`; the rest are treated as zero.
inline EigenParts split_spectrum(const Eigen::MatrixXd& K) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(K);
  if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition of the HAC kernel failed");
  EigenParts parts;
  parts.Q = es.eigenvectors();
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  parts.positive = ev.cwiseMax(0.0);
  parts.negative = Eigen::VectorXd::Zero(ev.size());
  for (Eigen::Index k = 0; k < ev.size(); ++k)
    if (ev(k) < -1e-12 * scale) parts.negative(k) = -ev(k);
  return parts;
}

}  // namespace detail

/// K+ = Q max(Xi, 0) Q' and K- = K+ - K = Q |min(Xi, 0)| Q'.
inline ClipResult eigen_clip(const Eigen::MatrixXd& K) {
  if (!K.isApprox(K.transpose(), 1e-12)) throw InputError("kernel must be symmetric");
  const auto parts = detail::split_spectrum(K);
  ClipResult out;
  out.plus = symmetrize(parts.Q * parts.positive.asDiagonal() * parts.Q.transpose());
  out.minus = symmetrize(parts.Q * parts.negative.asDiagonal() * parts.Q.transpose());
  return out;
}

/// Per-block spectral factors of a kernel; reusable across score matrices
/// as long as the sampled units do not change.
struct ClippedKernel {
  std::vector<detail::EigenParts> parts;
};

inline ClippedKernel clip_kernel(const HacKernel& ker) {
  ClippedKernel out;
  out.parts.reserve(ker.blocks.size());
  std::vector<std::size_t> local(ker.size());
  for (const auto& block : ker.blocks) {
    for (std::size_t a = 0; a < block.size(); ++a) local[block[a]] = a;
    const auto m = static_cast<Eigen::Index>(block.size());
    Eigen::MatrixXd Kb = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t a = 0; a < block.size(); ++a)
      for (std::size_t v : ker.rows[block[a]]) Kb(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(local[v])) = 1.0;
    out.parts.push_back(detail::split_spectrum(Kb));
  }
  return out;
}

/// (1/N) Psi' K+ Psi
inline Eigen::MatrixXd hac_sigma_plus(const Eigen::MatrixXd& psi, const HacKernel& ker,
                                      const ClippedKernel& clipped, std::size_t N) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(psi.cols(), psi.cols());
  for (std::size_t b = 0; b < ker.blocks.size(); ++b) {
    const auto& block = ker.blocks[b];
    Eigen::MatrixXd P(static_cast<Eigen::Index>(block.size()), psi.cols());
    for (std::size_t a = 0; a < block.size(); ++a)
      P.row(static_cast<Eigen::Index>(a)) = psi.row(static_cast<Eigen::Index>(ker.units[block[a]]));
    const Eigen::MatrixXd W = clipped.parts[b].Q.transpose() * P;
    s += W.transpose() * clipped.parts[b].positive.asDiagonal() * W;
  }
  return symmetrize(s / static_cast<double>(N));
}

/// (1/N) Psi' K- Psi
inline Eigen::MatrixXd hac_sigma_minus(const Eigen::MatrixXd& psi, const HacKernel& ker,
                                       const ClippedKernel& clipped, std::size_t N) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(psi.cols(), psi.cols());
  for (std::size_t b = 0; b < ker.blocks.size(); ++b) {
    const auto& block = ker.blocks[b];
    Eigen::MatrixXd P(static_cast<Eigen::Index>(block.size()), psi.cols());
    for (std::size_t a = 0; a < block.size(); ++a)
      P.row(static_cast<Eigen::Index>(a)) = psi.row(static_cast<Eigen::Index>(ker.units[block[a]]));
    const Eigen::MatrixXd W = clipped.parts[b].Q.transpose() * P;
    s += W.transpose() * clipped.parts[b].negative.asDiagonal() * W;
  }
  return symmetrize(s / static_cast<double>(N));
}

/// Row sums of |K-| for every population unit (zero for unsampled units).
inline std::vector<double> negative_part_row_sums(const HacKernel& ker, const ClippedKernel& clipped) {
  std::vector<double> out(ker.n, 0.0);
  for (std::size_t b = 0; b < ker.blocks.size(); ++b) {
    const auto& parts = clipped.parts[b];
    if (parts.negative.isZero(0.0)) continue;
    const Eigen::MatrixXd minus = parts.Q * parts.negative.asDiagonal() * parts.Q.transpose();
    const auto& block = ker.blocks[b];
    for (std::size_t a = 0; a < block.size(); ++a)
      out[ker.units[block[a]]] = minus.row(static_cast<Eigen::Index>(a)).cwiseAbs().sum();
  }
  return out;
}

struct Sandwich {
  /// Q^-1 (Sigma / N) Q^-1: asymptotic variance of sqrt(N) (theta_hat - theta).
  Eigen::MatrixXd avar;
  /// avar / N: covariance of theta_hat.
  Eigen::MatrixXd cov;
  Eigen::VectorXd se;
  std::vector<std::string> warnings;
};

inline Sandwich sandwich(const Eigen::MatrixXd& QXX, const Eigen::MatrixXd& meat, std::size_t N) {
  if (N == 0) throw InputError("sandwich needs a positive sample size");
  const Eigen::MatrixXd Qinv = checked_spd_solve(QXX, Eigen::MatrixXd::Identity(QXX.rows(), QXX.cols()), "Q_XX");
  Sandwich out;
  out.avar = symmetrize(Qinv * meat * Qinv);
  out.cov = out.avar / static_cast<double>(N);
  out.se.resize(out.cov.rows());
  for (Eigen::Index k = 0; k < out.cov.rows(); ++k) {
    const double v = out.cov(k, k);
    if (v < 0.0) {
      out.se(k) = std::nan("");
      out.warnings.push_back("negative variance for element " + std::to_string(k) +
                             "; standard error reported as NaN");
    } else {
      out.se(k) = std::sqrt(v);
    }
  }
  return out;
}

/// (1/N) sum_i R_i X_i X_i' e_i^2
inline Eigen::MatrixXd ehw_meat(const Eigen::MatrixXd& X, const Eigen::VectorXd& residuals,
                                const Indicator& R) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(X.cols(), X.cols());
  std::size_t N = 0;
  for (std::size_t i = 0; i < R.size(); ++i)
    if (R[i]) {
      const auto r = static_cast<Eigen::Index>(i);
      const double e2 = residuals(r) * residuals(r);
      m += X.row(r).transpose() * X.row(r) * e2;
      ++N;
    }
  return symmetrize(m / static_cast<double>(N));
}

inline Sandwich ehw_variance(const Eigen::MatrixXd& X, const Eigen::VectorXd& residuals,
                             const Indicator& R, const Eigen::MatrixXd& QXX, std::size_t N) {
  return sandwich(QXX, ehw_meat(X, residuals, R), N);
}

struct ClipDiagnostics {
  /// n^-1 sum_i (sum_j |K-_ij|)
  double delta_1 = 0.0;
  /// n^-1 sum_i (sum_j |K-_ij|)^2, divided by n
  double delta_2_over_n = 0.0;
  /// sum over s <= 2K of sum_{i,j : d(i,j) = s} rowabs_i rowabs_j, over n^2
  double j_over_n2 = 0.0;
};

/// `row_abs` holds sum_j |K-_ij| for every population unit; `index` is the
/// population distance index built to at least 2K.
inline ClipDiagnostics clip_diagnostics(const std::vector<double>& row_abs, const NeighborhoodIndex& index,
                                        std::size_t K) {
  ClipDiagnostics d;
  const std::size_t n = row_abs.size();
  if (n == 0) return d;
  if (index.smax() < 2 * K) throw InputError("population index must reach distance 2K");
  const double nd = static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.delta_1 += row_abs[i];
    d.delta_2_over_n += row_abs[i] * row_abs[i];
    if (row_abs[i] == 0.0) continue;
    for (std::size_t s = 0; s <= 2 * K; ++s)
      for (std::size_t j : index.shell(i, s)) d.j_over_n2 += row_abs[i] * row_abs[j];
  }
  d.delta_1 /= nd;
  d.delta_2_over_n /= nd * nd;
  d.j_over_n2 /= nd * nd;
  return d;
}

struct VarianceReport {
  std::size_t K = 1;
  GammaSource gamma_source = GammaSource::GammaHat;
  Eigen::VectorXd gamma_used;
  Eigen::MatrixXd sigma_over_n;
  Eigen::MatrixXd sigma_plus_over_n;
  Eigen::MatrixXd ehw_meat;
  Sandwich ehw;
  Sandwich plain;
  Sandwich eigen;
};

/// All three variance estimates for one fit. The clipped kernel may be
/// passed in when it is reused across fits with the same sampled units.
inline VarianceReport estimate_variance(const Dataset& ds, const ResidualizedDesign& rd,
                                        const EstimationResult& fit, const HacKernel& ker,
                                        const ClippedKernel& clipped, GammaSource source,
                                        double rho = 1.0, std::size_t m = 1) {
  VarianceReport rep;
  rep.K = ker.K;
  rep.gamma_source = source;
  rep.gamma_used = source == GammaSource::GammaHat ? fit.gamma : gamma_tilde(ds, rho, m);
  const Eigen::VectorXd e = source == GammaSource::GammaHat
                                ? fit.residuals
                                : residuals_with(ds, rd, fit.theta, rep.gamma_used);
  const Eigen::MatrixXd psi = score_vectors(rd, e, ds.R);
  rep.sigma_over_n = hac_sigma(psi, ker, fit.N);
  rep.sigma_plus_over_n = hac_sigma_plus(psi, ker, clipped, fit.N);
  rep.ehw_meat = ehw_meat(rd.X, e, ds.R);
  rep.ehw = sandwich(fit.QXX, rep.ehw_meat, fit.N);
  rep.plain = sandwich(fit.QXX, rep.sigma_over_n, fit.N);
  rep.eigen = sandwich(fit.QXX, rep.sigma_plus_over_n, fit.N);
  return rep;
}

}  // namespace netspill
