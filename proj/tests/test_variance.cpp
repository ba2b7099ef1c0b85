#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "netspill/variance.hpp"
#include "oracles.hpp"

using namespace netspill;

namespace {

PopulationGraph from_dense(const oracle::Mat& A) {
  const auto e = oracle::edges_of(A);
  return PopulationGraph(A.size(), e);
}

struct Problem {
  PopulationGraph g;
  Draw state;
  Dataset ds;
};

/// A random sampled graph with synthetic exposures and outcomes.
Problem make_problem(std::size_t n, double density, double rho, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  Problem pr{from_dense(oracle::random_graph(n, density, gen)), {}, {}};
  DesignSpec design;
  design.rho = rho;
  pr.state = draw_sample(pr.g, design, seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Dataset& ds = pr.ds;
  const auto N = static_cast<Eigen::Index>(n);
  ds.R = pr.state.R;
  ds.T.resize(N, 2);
  ds.cond_mean.resize(N, 2);
  ds.Z.resize(N, 2);
  ds.Y.resize(N);
  for (Eigen::Index i = 0; i < N; ++i) {
    ds.cond_mean.row(i) << 0.5, 0.3 + 0.2 * z(gen);
    ds.T.row(i) = ds.cond_mean.row(i) + Eigen::RowVector2d(z(gen), z(gen));
    ds.Z.row(i) = ds.cond_mean.row(i);
    ds.Y(i) = ds.T(i, 0) + 0.5 * ds.T(i, 1) + z(gen);
  }
  return pr;
}

}  // namespace

TEST(Variance, KernelMatchesFloydWarshall) {
  std::mt19937_64 gen(3);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 5 + rep % 10;
    const auto A = oracle::random_graph(n, 0.25, gen);
    const auto g = from_dense(A);
    DesignSpec design;
    design.rho = 0.6;
    design.scheme = rep % 2 ? SamplingScheme::Star : SamplingScheme::InducedSubgraph;
    const Draw d = draw_sample(g, design, static_cast<std::uint64_t>(rep));
    const std::size_t K = 1 + rep % 2;
    const auto ker = hac_kernel(d.sampled, d.R, K);
    const auto dist = oracle::floyd_warshall(oracle::sampled(A, oracle::Vec(d.R.begin(), d.R.end()), rep % 2));
    const auto dense = ker.dense();
    for (std::size_t u = 0; u < ker.size(); ++u)
      for (std::size_t v = 0; v < ker.size(); ++v)
        EXPECT_EQ(dense(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)),
                  dist[ker.units[u]][ker.units[v]] <= static_cast<int>(2 * K) ? 1.0 : 0.0);
  }
}

TEST(Variance, ClippedPartIsPsdAndDecomposes) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto pr = make_problem(40, 0.08, 0.8, seed);
    const auto rd = residualize(pr.ds);
    const auto fit = ols_fit(pr.ds, rd);
    const auto ker = hac_kernel(pr.state.sampled, pr.ds.R, 1);
    const auto clipped = clip_kernel(ker);
    const Eigen::MatrixXd psi = score_vectors(rd, fit.residuals, pr.ds.R);

    // K+ is PSD and K+ - K = K-.
    const Eigen::MatrixXd Kd = ker.dense();
    const auto full = eigen_clip(Kd);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(full.plus);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-10 * full.plus.trace());
    EXPECT_LE((full.plus - Kd - full.minus).cwiseAbs().maxCoeff(), 1e-10);

    // Sigma+ - Sigma = Psi' K- Psi / N, block-wise and dense.
    const Eigen::MatrixXd Ps = gather_rows(psi, ker.units);
    const double N = static_cast<double>(fit.N);
    const Eigen::MatrixXd sigma = hac_sigma(psi, ker, fit.N);
    const Eigen::MatrixXd plus = hac_sigma_plus(psi, ker, clipped, fit.N);
    const Eigen::MatrixXd minus = hac_sigma_minus(psi, ker, clipped, fit.N);
    const double scale = std::max(1.0, plus.cwiseAbs().maxCoeff());
    EXPECT_LE((sigma - Ps.transpose() * Kd * Ps / N).cwiseAbs().maxCoeff(), 1e-10 * scale);
    EXPECT_LE((plus - sigma - Ps.transpose() * full.minus * Ps / N).cwiseAbs().maxCoeff(), 1e-10 * scale);
    EXPECT_LE((plus - sigma - minus).cwiseAbs().maxCoeff(), 1e-10 * scale);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> sp(plus);
    EXPECT_GE(sp.eigenvalues().minCoeff(), -1e-10 * plus.trace());
  }
}

TEST(Variance, IdentityKernelIsEhwMeat) {
  // With no sampled links the kernel is the identity.
  auto pr = make_problem(30, 0.0, 0.9, 4);
  const auto rd = residualize(pr.ds);
  const auto fit = ols_fit(pr.ds, rd);
  const auto ker = hac_kernel(pr.state.sampled, pr.ds.R, 2);
  EXPECT_TRUE(ker.dense().isIdentity(0.0));
  const auto rep = estimate_variance(pr.ds, rd, fit, ker, clip_kernel(ker), GammaSource::GammaHat);
  EXPECT_LE((rep.sigma_over_n - rep.ehw_meat).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((rep.sigma_plus_over_n - rep.ehw_meat).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((rep.eigen.se - rep.ehw.se).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Variance, EhwMatchesDirectSandwich) {
  auto pr = make_problem(50, 0.05, 1.0, 7);
  const auto rd = residualize(pr.ds);
  const auto fit = ols_fit(pr.ds, rd);
  const auto ker = hac_kernel(pr.state.sampled, pr.ds.R, 1);
  const auto rep = estimate_variance(pr.ds, rd, fit, ker, clip_kernel(ker), GammaSource::GammaHat);
  const double N = static_cast<double>(fit.N);
  const Eigen::MatrixXd X = rd.X;
  Eigen::MatrixXd meat = Eigen::MatrixXd::Zero(2, 2);
  for (Eigen::Index i = 0; i < X.rows(); ++i) meat += X.row(i).transpose() * X.row(i) * std::pow(fit.residuals(i), 2);
  const Eigen::MatrixXd Q = X.transpose() * X / N;
  const Eigen::MatrixXd V = Q.inverse() * (meat / N) * Q.inverse() / N;
  for (Eigen::Index k = 0; k < 2; ++k) EXPECT_NEAR(rep.ehw.se(k), std::sqrt(V(k, k)), 1e-12);
}

TEST(Variance, EigenStandardErrorsAreFinite) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto pr = make_problem(60, 0.1, 0.7, 100 + seed);
    const auto rd = residualize(pr.ds);
    const auto fit = ols_fit(pr.ds, rd);
    const auto ker = hac_kernel(pr.state.sampled, pr.ds.R, 1);
    for (auto src : {GammaSource::GammaHat, GammaSource::GammaTilde}) {
      const auto rep = estimate_variance(pr.ds, rd, fit, ker, clip_kernel(ker), src, 0.7, 0);
      EXPECT_TRUE(rep.eigen.warnings.empty());
      for (Eigen::Index k = 0; k < rep.eigen.se.size(); ++k) {
        EXPECT_TRUE(std::isfinite(rep.eigen.se(k)));
        EXPECT_GE(rep.eigen.se(k), 0.0);
      }
    }
  }
}

TEST(Variance, GammaSourceSelectsResiduals) {
  auto pr = make_problem(40, 0.1, 0.6, 9);
  const auto rd = residualize(pr.ds);
  const auto fit = ols_fit(pr.ds, rd);
  EXPECT_LE((residuals_with(pr.ds, rd, fit.theta, fit.gamma) - fit.residuals).cwiseAbs().maxCoeff(), 1e-12);
  const auto ker = hac_kernel(pr.state.sampled, pr.ds.R, 1);
  const auto clipped = clip_kernel(ker);
  const auto a = estimate_variance(pr.ds, rd, fit, ker, clipped, GammaSource::GammaHat);
  const auto b = estimate_variance(pr.ds, rd, fit, ker, clipped, GammaSource::GammaTilde, 0.6, 1);
  EXPECT_EQ(a.gamma_used, fit.gamma);
  EXPECT_LE((b.gamma_used - gamma_tilde(pr.ds, 0.6, 1)).cwiseAbs().maxCoeff(), 0.0);
  const Eigen::VectorXd e = residuals_with(pr.ds, rd, fit.theta, b.gamma_used);
  EXPECT_LE((b.ehw_meat - ehw_meat(rd.X, e, pr.ds.R)).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Variance, ClipDiagnosticsMatchBruteForce) {
  std::mt19937_64 gen(21);
  for (int rep = 0; rep < 8; ++rep) {
    const std::size_t n = 12 + rep;
    const auto A = oracle::random_graph(n, 0.25, gen);
    const auto g = from_dense(A);
    const auto ker = hac_kernel(g, Indicator(n, 1), 1);
    const auto clipped = clip_kernel(ker);
    const auto rows = negative_part_row_sums(ker, clipped);
    const auto full = eigen_clip(ker.dense());
    const auto dist = oracle::floyd_warshall(A);
    double d1 = 0, d2 = 0, j = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = full.minus.row(static_cast<Eigen::Index>(i)).cwiseAbs().sum();
      EXPECT_NEAR(rows[i], r, 1e-10);
      d1 += r;
      d2 += r * r;
      for (std::size_t k = 0; k < n; ++k)
        if (dist[i][k] <= 2) j += r * full.minus.row(static_cast<Eigen::Index>(k)).cwiseAbs().sum();
    }
    const double nd = static_cast<double>(n);
    const auto diag = clip_diagnostics(rows, build_index(g, 2), 1);
    EXPECT_NEAR(diag.delta_1, d1 / nd, 1e-10);
    EXPECT_NEAR(diag.delta_2_over_n, d2 / nd / nd, 1e-10);
    EXPECT_NEAR(diag.j_over_n2, j / nd / nd, 1e-10);
    EXPECT_THROW(clip_diagnostics(rows, build_index(g, 1), 1), InputError);
  }
}

TEST(Variance, PathKernelHasNegativePart) {
  // A five-node path at K = 1 has a kernel with a negative eigenvalue.
  std::vector<Edge> e{{0, 1}, {1, 2}, {2, 3}, {3, 4}};
  const PopulationGraph g(5, e);
  const auto ker = hac_kernel(g, Indicator(5, 1), 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ker.dense());
  EXPECT_LT(es.eigenvalues().minCoeff(), -1e-6);
  const auto rows = negative_part_row_sums(ker, clip_kernel(ker));
  double total = 0;
  for (double r : rows) total += r;
  EXPECT_GT(total, 0.0);
  EXPECT_THROW(hac_kernel(g, Indicator(5, 1), 0), InputError);
}
