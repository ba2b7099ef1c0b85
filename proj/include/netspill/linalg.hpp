#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "netspill/error.hpp"

namespace netspill {

/// Largest accepted condition number of a Gram (second-moment) matrix.
inline constexpr double kConditionLimit = 1e10;

/// Condition number of W'W computed from the singular values of W.
inline double gram_condition(const Eigen::MatrixXd& W) {
  if (W.cols() == 0) return 1.0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(W);
  const auto& s = svd.singularValues();
  const double smax = s(0);
  const double smin = s(s.size() - 1);
  if (smax == 0.0 || smin == 0.0) return INFINITY;
  const double r = smax / smin;
  return r * r;
}

/// Condition number of a symmetric positive semi-definite matrix.
inline double spd_condition(const Eigen::MatrixXd& S) {
  if (S.rows() == 0) return 1.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  const double lo = ev(0);
  const double hi = ev(ev.size() - 1);
  if (hi <= 0.0 || lo <= 0.0) return INFINITY;
  return hi / lo;
}

/// Columns of W that are (near) linear combinations of earlier columns,
/// found by greedy forward selection under the condition limit.
inline std::vector<std::size_t> collinear_columns(const Eigen::MatrixXd& W,
                                                  double limit = kConditionLimit) {
  std::vector<std::size_t> kept, dropped;
  for (Eigen::Index c = 0; c < W.cols(); ++c) {
    Eigen::MatrixXd trial(W.rows(), static_cast<Eigen::Index>(kept.size()) + 1);
    for (std::size_t k = 0; k < kept.size(); ++k)
      trial.col(static_cast<Eigen::Index>(k)) = W.col(static_cast<Eigen::Index>(kept[k]));
    trial.col(trial.cols() - 1) = W.col(c);
    if (gram_condition(trial) <= limit)
      kept.push_back(static_cast<std::size_t>(c));
    else
      dropped.push_back(static_cast<std::size_t>(c));
  }
  return dropped;
}

/// Indices of the columns kept by greedy forward selection.
inline std::vector<std::size_t> prune_collinear(const Eigen::MatrixXd& W,
                                                double limit = kConditionLimit) {
  const auto dropped = collinear_columns(W, limit);
  std::vector<std::size_t> kept;
  std::size_t d = 0;
  for (std::size_t c = 0; c < static_cast<std::size_t>(W.cols()); ++c) {
    if (d < dropped.size() && dropped[d] == c) {
      ++d;
      continue;
    }
    kept.push_back(c);
  }
  return kept;
}

inline Eigen::MatrixXd select_columns(const Eigen::MatrixXd& W, const std::vector<std::size_t>& cols) {
  Eigen::MatrixXd out(W.rows(), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k)
    out.col(static_cast<Eigen::Index>(k)) = W.col(static_cast<Eigen::Index>(cols[k]));
  return out;
}

inline std::string describe_columns(const std::vector<std::size_t>& cols) {
  std::string s;
  for (std::size_t k = 0; k < cols.size(); ++k) s += (k ? ", " : "") + std::to_string(cols[k]);
  return s;
}

/// Least squares coefficients of y on W. Throws SingularMatrixError naming
/// the collinear columns when W'W is too ill-conditioned.
inline Eigen::MatrixXd checked_least_squares(const Eigen::MatrixXd& W, const Eigen::MatrixXd& y,
                                             const std::string& what) {
  if (W.rows() < W.cols())
    throw SingularMatrixError(what + ": fewer observations (" + std::to_string(W.rows()) +
                              ") than columns (" + std::to_string(W.cols()) + ")");
  if (gram_condition(W) > kConditionLimit) {
    const auto cols = collinear_columns(W);
    throw SingularMatrixError(what + ": regressors are collinear (columns " +
                                  describe_columns(cols) + "); prune them",
                              cols);
  }
  return W.colPivHouseholderQr().solve(y);
}

/// Solves S x = b for a symmetric positive definite S, with a condition check.
inline Eigen::MatrixXd checked_spd_solve(const Eigen::MatrixXd& S, const Eigen::MatrixXd& b,
                                         const std::string& what) {
  const double cond = spd_condition(S);
  if (!(cond <= kConditionLimit)) {
    std::vector<std::size_t> cols;
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(S);
    qr.setThreshold(1.0 / kConditionLimit);
    for (Eigen::Index k = qr.rank(); k < S.cols(); ++k)
      cols.push_back(static_cast<std::size_t>(qr.colsPermutation().indices()(k)));
    throw SingularMatrixError(what + " is singular or ill-conditioned (condition " +
                                  std::to_string(cond) + ")",
                              cols);
  }
  return S.ldlt().solve(b);
}

inline Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& S) { return 0.5 * (S + S.transpose()); }

}  // namespace netspill
