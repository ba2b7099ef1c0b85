#pragma once

// Brute-force reference implementations for the tests. Everything here works
// on dense 0/1 matrices and full enumeration, and shares no code with the
// library beyond the spec description types.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "netspill/exposure.hpp"

namespace oracle {

using Mat = std::vector<std::vector<int>>;
using Vec = std::vector<int>;

inline Mat dense(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
  Mat A(n, Vec(n, 0));
  for (auto [a, b] : edges)
    if (a != b) A[a][b] = A[b][a] = 1;
  return A;
}

inline Mat random_graph(std::size_t n, double density, std::mt19937_64& gen) {
  std::bernoulli_distribution edge(density);
  Mat A(n, Vec(n, 0));
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = a + 1; b < n; ++b)
      if (edge(gen)) A[a][b] = A[b][a] = 1;
  return A;
}

inline std::vector<std::pair<std::size_t, std::size_t>> edges_of(const Mat& A) {
  std::vector<std::pair<std::size_t, std::size_t>> e;
  for (std::size_t a = 0; a < A.size(); ++a)
    for (std::size_t b = a + 1; b < A.size(); ++b)
      if (A[a][b]) e.emplace_back(a, b);
  return e;
}

/// Induced: both ends sampled. Star: at least one end sampled.
inline Mat sampled(const Mat& A, const Vec& R, bool star) {
  const std::size_t n = A.size();
  Mat S(n, Vec(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      S[i][j] = A[i][j] && (star ? (R[i] || R[j]) : (R[i] && R[j]));
  return S;
}

/// Each sampled unit reports its `cap` lowest-indexed observable links; a
/// link survives when either end reports it.
inline Mat censored(const Mat& A, const Vec& R, bool star, std::size_t cap) {
  const Mat S = sampled(A, R, star);
  const std::size_t n = A.size();
  Mat rep(n, Vec(n, 0));
  for (std::size_t i = 0; i < n; ++i) {
    if (!R[i]) continue;
    std::size_t taken = 0;
    for (std::size_t j = 0; j < n && taken < cap; ++j)
      if (S[i][j]) {
        rep[i][j] = 1;
        ++taken;
      }
  }
  Mat C(n, Vec(n, 0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) C[i][j] = S[i][j] && (rep[i][j] || rep[j][i]);
  return C;
}

struct Networks {
  Mat population, sampled, censored;

  const Mat& pick(netspill::NetworkSource s) const {
    switch (s) {
      case netspill::NetworkSource::Population: return population;
      case netspill::NetworkSource::Sampled: return sampled;
      case netspill::NetworkSource::Censored: return censored;
    }
    return population;
  }
};

inline Networks networks(const Mat& A, const Vec& R, bool star, std::optional<std::size_t> cap) {
  Networks nw;
  nw.population = A;
  nw.sampled = sampled(A, R, star);
  nw.censored = cap ? censored(A, R, star, *cap) : nw.sampled;
  return nw;
}

inline double component(const netspill::Component& c, std::size_t i, const Mat& G, const Mat& C, const Vec& D,
                        const Vec& R) {
  using K = netspill::ComponentKind;
  const std::size_t n = G.size();
  auto share = [&](netspill::Denominator den) {
    double num = 0, d = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      num += G[i][j] * D[j];
      d += den == netspill::Denominator::Network ? G[i][j] : G[i][j] * R[j];
    }
    return d > 0 ? num / d : 0.0;
  };
  auto count = [&] {
    double s = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) s += G[i][j] * D[j];
    return s;
  };
  switch (c.kind) {
    case K::Own: return D[i];
    case K::Share: return share(c.denominator);
    case K::Count: return count();
    case K::Any: return count() > 0 ? 1.0 : 0.0;
    case K::SecondShare: {
      double num = 0, d = 0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == i || k == j) continue;
          double w = G[i][j] * G[j][k];
          if (c.exclude_triangles) w *= 1 - G[i][k];
          num += w * D[k];
          d += c.denominator == netspill::Denominator::Network ? w : w * R[k];
        }
      }
      return d > 0 ? num / d : 0.0;
    }
    case K::InteractionOwnShare: return D[i] * share(c.denominator);
    case K::Category: {
      const bool e = count() > 0, t = D[i] == 1;
      switch (c.category) {
        case netspill::CategoryKind::TreatedExposed: return t && e;
        case netspill::CategoryKind::TreatedUnexposed: return t && !e;
        case netspill::CategoryKind::UntreatedExposed: return !t && e;
      }
      return 0;
    }
    case K::CensorAware: {
      std::size_t deg = 0;
      for (std::size_t j = 0; j < n; ++j) deg += C[i][j];
      if (c.zero_if_censored && deg >= c.cap) return 0.0;
      return component(c.inner.at(0), i, G, C, D, R);
    }
  }
  return 0;
}

inline Eigen::MatrixXd exposures(const netspill::ExposureSpec& spec, const Networks& nw, const Vec& R,
                                 const Vec& Dstar) {
  const std::size_t n = R.size();
  Vec D(n);
  for (std::size_t i = 0; i < n; ++i) D[i] = R[i] * Dstar[i];
  Eigen::MatrixXd T(n, spec.dim());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < spec.dim(); ++k)
      T(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          component(spec.components[k], i, nw.pick(spec.source), nw.censored, D, R);
  return T;
}

/// Calls f(Dstar, probability) for every assignment of D* to the sampled
/// units; unsampled units keep D* = 0, which is irrelevant since D = R D*.
inline void for_each_dstar(const Vec& R, const std::vector<double>& p,
                           const std::function<void(const Vec&, double)>& f) {
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < R.size(); ++i)
    if (R[i]) s.push_back(i);
  Vec Dstar(R.size(), 0);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << s.size()); ++mask) {
    double prob = 1;
    for (std::size_t b = 0; b < s.size(); ++b) {
      const int v = (mask >> b) & 1;
      Dstar[s[b]] = v;
      prob *= v ? p[s[b]] : 1 - p[s[b]];
    }
    f(Dstar, prob);
  }
}

inline void for_each_r(std::size_t n, double rho, const std::function<void(const Vec&, double)>& f) {
  Vec R(n);
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << n); ++mask) {
    double prob = 1;
    for (std::size_t i = 0; i < n; ++i) {
      R[i] = (mask >> i) & 1;
      prob *= R[i] ? rho : 1 - rho;
    }
    if (prob > 0) f(R, prob);
  }
}

inline Eigen::MatrixXd conditional_mean(const netspill::ExposureSpec& spec, const Mat& A, const Vec& R,
                                        const std::vector<double>& p, bool star,
                                        std::optional<std::size_t> cap) {
  const Networks nw = networks(A, R, star, cap);
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(A.size()), static_cast<Eigen::Index>(spec.dim()));
  for_each_dstar(R, p, [&](const Vec& Dstar, double prob) { m += prob * exposures(spec, nw, R, Dstar); });
  return m;
}

/// Per-unit Cov(T_i, T_i' | R) for one spec, by enumeration.
inline std::vector<Eigen::MatrixXd> conditional_covariances(const netspill::ExposureSpec& spec, const Mat& A,
                                                            const Vec& R, const std::vector<double>& p, bool star,
                                                            std::optional<std::size_t> cap) {
  const Networks nw = networks(A, R, star, cap);
  const auto n = static_cast<Eigen::Index>(A.size());
  const auto d = static_cast<Eigen::Index>(spec.dim());
  const Eigen::MatrixXd m = conditional_mean(spec, A, R, p, star, cap);
  std::vector<Eigen::MatrixXd> cov(A.size(), Eigen::MatrixXd::Zero(d, d));
  for_each_dstar(R, p, [&](const Vec& Dstar, double prob) {
    const Eigen::MatrixXd x = exposures(spec, nw, R, Dstar) - m;
    for (Eigen::Index i = 0; i < n; ++i) cov[static_cast<std::size_t>(i)] += prob * x.row(i).transpose() * x.row(i);
  });
  return cov;
}

/// (sum_i R_i E[X~ X~'|R])^-1 sum_i R_i E[X~ X'|R] theta_i with X = T - E[T|R].
inline Eigen::VectorXd sample_estimand(const netspill::ExposureSpec& true_spec, const netspill::ExposureSpec& obs_spec,
                                       const Mat& A, const Vec& R, const std::vector<double>& p, bool star,
                                       std::optional<std::size_t> cap, const Eigen::MatrixXd& theta) {
  const Networks nw = networks(A, R, star, cap);
  const auto n = static_cast<Eigen::Index>(A.size());
  const Eigen::MatrixXd mt = conditional_mean(true_spec, A, R, p, star, cap);
  const Eigen::MatrixXd mo = conditional_mean(obs_spec, A, R, p, star, cap);
  const auto d = mo.cols();
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
  for_each_dstar(R, p, [&](const Vec& Dstar, double prob) {
    const Eigen::MatrixXd X = exposures(true_spec, nw, R, Dstar) - mt;
    const Eigen::MatrixXd Xo = exposures(obs_spec, nw, R, Dstar) - mo;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!R[static_cast<std::size_t>(i)]) continue;
      S += prob * Xo.row(i).transpose() * Xo.row(i);
      b += prob * Xo.row(i).transpose() * X.row(i).dot(theta.row(i));
    }
  });
  return S.ldlt().solve(b);
}

/// (sum_i E[X X'])^-1 sum_i E[X X'] theta_i over the joint law of (R, D*).
inline Eigen::VectorXd population_estimand(const netspill::ExposureSpec& spec, const Mat& A, double rho,
                                           const std::vector<double>& p, bool star,
                                           std::optional<std::size_t> cap, const Eigen::MatrixXd& theta) {
  const auto n = static_cast<Eigen::Index>(A.size());
  const auto d = static_cast<Eigen::Index>(spec.dim());
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
  for_each_r(A.size(), rho, [&](const Vec& R, double pr) {
    const Networks nw = networks(A, R, star, cap);
    const Eigen::MatrixXd m = conditional_mean(spec, A, R, p, star, cap);
    for_each_dstar(R, p, [&](const Vec& Dstar, double pd) {
      const Eigen::MatrixXd X = exposures(spec, nw, R, Dstar) - m;
      for (Eigen::Index i = 0; i < n; ++i) {
        S += pr * pd * X.row(i).transpose() * X.row(i);
        b += pr * pd * X.row(i).transpose() * X.row(i).dot(theta.row(i));
      }
    });
  });
  return S.ldlt().solve(b);
}

inline constexpr int kInf = std::numeric_limits<int>::max() / 4;

inline Mat floyd_warshall(const Mat& A) {
  const std::size_t n = A.size();
  Mat d(n, Vec(n, kInf));
  for (std::size_t i = 0; i < n; ++i) {
    d[i][i] = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (A[i][j]) d[i][j] = 1;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  return d;
}

/// (100/n) sum_{k != i} (sum_{j != i,k} A_ij A_jk)^2, straight from the definition.
inline std::vector<double> clustering(const Mat& A) {
  const std::size_t n = A.size();
  std::vector<double> M(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0;
    for (std::size_t k = 0; k < n; ++k) {
      if (k == i) continue;
      double inner = 0;
      for (std::size_t j = 0; j < n; ++j)
        if (j != i && j != k) inner += A[i][j] * A[j][k];
      s += inner * inner;
    }
    M[i] = 100.0 / static_cast<double>(n) * s;
  }
  return M;
}

}  // namespace oracle
