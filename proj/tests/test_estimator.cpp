#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "netspill/estimator.hpp"
#include "oracles.hpp"

using namespace netspill;

namespace {

ExposureSpec make_spec(std::vector<Component> c, NetworkSource s = NetworkSource::Sampled) {
  ExposureSpec spec;
  spec.components = std::move(c);
  spec.source = s;
  return spec;
}

Dataset toy_dataset(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  Dataset ds;
  ds.Y.resize(static_cast<Eigen::Index>(n));
  ds.T.resize(static_cast<Eigen::Index>(n), 2);
  ds.cond_mean.resize(static_cast<Eigen::Index>(n), 2);
  ds.Z.resize(static_cast<Eigen::Index>(n), 3);
  ds.R.assign(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    ds.R[i] = i % 5 != 3;
    ds.cond_mean.row(r) << 0.5 + 0.1 * z(gen), 2.0 + z(gen);
    ds.T.row(r) = ds.cond_mean.row(r) + Eigen::RowVector2d(z(gen), z(gen));
    ds.Z.row(r) << 1.0, ds.cond_mean(r, 0), ds.cond_mean(r, 1);
    ds.Y(r) = 1.0 + 2.0 * ds.T(r, 0) - ds.T(r, 1) + z(gen);
  }
  return ds;
}

Eigen::MatrixXd heterogeneous_theta(std::size_t n, std::size_t d, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u(-1.0, 2.0);
  Eigen::MatrixXd th(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
  for (Eigen::Index i = 0; i < th.rows(); ++i)
    for (Eigen::Index k = 0; k < th.cols(); ++k) th(i, k) = u(gen);
  return th;
}

const ExposureSpec kTrue = make_spec({Component::own(), Component::share(), Component::second_share(true)},
                                     NetworkSource::Population);

}  // namespace

TEST(Estimator, ResidualizeOnConstant) {
  Dataset ds;
  ds.Y = Eigen::Vector3d(1, 2, 3);
  ds.T = Eigen::Vector3d(1, 0, 1);
  ds.cond_mean = Eigen::Vector3d(0.2, 0.4, 0.6);
  ds.Z = Eigen::MatrixXd::Ones(3, 1);
  ds.R = {1, 1, 0};
  const auto rd = residualize(ds);
  EXPECT_NEAR(rd.Lambda(0, 0), 0.3, 1e-15);
  EXPECT_NEAR(rd.X(0, 0), 0.7, 1e-15);
  EXPECT_NEAR(rd.X(1, 0), -0.3, 1e-15);
  EXPECT_EQ(rd.X(2, 0), 0.0);
}

TEST(Estimator, ResidualizeRemovesConditionalMean) {
  const Dataset ds = toy_dataset(40, 3);
  const auto rd = residualize(ds);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (!ds.R[i]) continue;
    const auto r = static_cast<Eigen::Index>(i);
    EXPECT_LE((rd.X.row(r) - (ds.T.row(r) - ds.cond_mean.row(r))).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Estimator, TwoByTwoHandSolve) {
  // Z = (1, 2), (1, 4) on two units, cond_mean = (3, 7): Lambda = (-1, 2).
  Dataset ds;
  ds.Y = Eigen::Vector2d(0, 0);
  ds.T = Eigen::Vector2d(5, 5);
  ds.cond_mean = Eigen::Vector2d(3, 7);
  ds.Z.resize(2, 2);
  ds.Z << 1, 2, 1, 4;
  ds.R = {1, 1};
  const auto rd = residualize(ds);
  EXPECT_NEAR(rd.Lambda(0, 0), -1.0, 1e-12);
  EXPECT_NEAR(rd.Lambda(0, 1), 2.0, 1e-12);
  EXPECT_NEAR(rd.X(0, 0), 2.0, 1e-12);
  EXPECT_NEAR(rd.X(1, 0), -2.0, 1e-12);
}

TEST(Estimator, OlsOrthogonalityAndFwl) {
  const Dataset ds = toy_dataset(60, 5);
  const auto rd = residualize(ds);
  const auto fit = ols_fit(ds, rd);
  EXPECT_EQ(fit.N, ds.sample_size());
  const auto rows = sampled_units(ds.R);
  const Eigen::MatrixXd Xs = gather_rows(rd.X, rows), Zs = gather_rows(ds.Z, rows);
  const Eigen::VectorXd es = gather_rows(fit.residuals, rows), Ys = gather_rows(ds.Y, rows);
  const double scale = Ys.norm();
  EXPECT_LE((Xs.transpose() * es).cwiseAbs().maxCoeff(), 1e-10 * scale * Xs.norm());
  EXPECT_LE((Zs.transpose() * es).cwiseAbs().maxCoeff(), 1e-10 * scale * Zs.norm());

  // Frisch-Waugh-Lovell: theta from residualizing X on Z and Y on Z.
  const Eigen::MatrixXd Pz = Zs * (Zs.transpose() * Zs).inverse() * Zs.transpose();
  const Eigen::MatrixXd Mx = Xs - Pz * Xs;
  const Eigen::VectorXd My = Ys - Pz * Ys;
  const Eigen::VectorXd fwl = (Mx.transpose() * Mx).ldlt().solve(Mx.transpose() * My);
  EXPECT_LE((fwl - fit.theta).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((fit.QXX - Xs.transpose() * Xs / static_cast<double>(fit.N)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Estimator, OlsExactFit) {
  Dataset ds = toy_dataset(30, 8);
  const auto rd = residualize(ds);
  const Eigen::Vector2d theta(0.7, -1.3);
  const Eigen::Vector3d gamma(0.4, 1.0, -0.2);
  ds.Y = rd.X * theta + ds.Z * gamma;
  const auto fit = ols_fit(ds, rd);
  EXPECT_LE((fit.theta - theta).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE((fit.gamma - gamma).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LE(fit.residuals.cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Estimator, CollinearCovariatesRejected) {
  Dataset ds = toy_dataset(30, 9);
  ds.Z.col(2) = 2.0 * ds.Z.col(1);
  EXPECT_THROW(residualize(ds), SingularMatrixError);
}

TEST(Estimator, GammaTildeAtFullSamplingIsOls) {
  const Dataset ds = toy_dataset(50, 12);
  const auto rows = sampled_units(ds.R);
  const Eigen::MatrixXd Zs = gather_rows(ds.Z, rows);
  const Eigen::VectorXd ols = Zs.colPivHouseholderQr().solve(gather_rows(ds.Y, rows));
  for (std::size_t m = 0; m <= 3; ++m) EXPECT_LE((gamma_tilde(ds, 1.0, m) - ols).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Estimator, GammaTildeHandExamples) {
  Dataset ds;
  ds.Y = Eigen::Vector2d(2, 4);
  ds.T = Eigen::Vector2d(0, 0);
  ds.cond_mean = ds.T;
  ds.Z = Eigen::MatrixXd::Ones(2, 1);
  ds.R = {1, 1};
  EXPECT_NEAR(gamma_tilde(ds, 0.5, 1)(0), 3.0, 1e-14);

  // Z = [(1, 1), (2, 1)], Y = (1, 3), m = 1, rho = 1/2:
  // P = [[5/4, 3/4], [3/4, 1]], PY = (7/4, 2) so gamma = (4/11, 19/11).
  ds.Y = Eigen::Vector2d(1, 3);
  ds.Z.resize(2, 2);
  ds.Z << 1, 1, 2, 1;
  const auto g = gamma_tilde(ds, 0.5, 1);
  EXPECT_NEAR(g(0), 4.0 / 11.0, 1e-14);
  EXPECT_NEAR(g(1), 19.0 / 11.0, 1e-14);
  EXPECT_THROW(gamma_tilde(ds, 0.5, 3), InputError);
  EXPECT_THROW(gamma_tilde(ds, 0.0, 1), InputError);
}

TEST(Estimator, SampleEstimandMatchesEnumeration) {
  const PopulationGraph g(8, fixture::kEight);
  const auto A = oracle::dense(8, fixture::kEight);
  const std::vector<ExposureSpec> observed{
      make_spec({Component::own(), Component::share(), Component::second_share(true)}),
      make_spec({Component::own(), Component::share(), Component::second_share(false)}),
      make_spec({Component::own(), Component::count()}),
      make_spec({Component::own(), Component::any(), Component::interaction(Denominator::SampledNeighbors)},
                NetworkSource::Censored),
  };
  std::mt19937_64 gen(17);
  for (int rep = 0; rep < 12; ++rep) {
    DesignSpec design;
    design.rho = 0.7;
    design.scheme = rep % 2 ? SamplingScheme::Star : SamplingScheme::InducedSubgraph;
    design.censor_cap = 2;
    std::uniform_real_distribution<double> u(0.2, 0.8);
    design.p.assign(8, 0.0);
    for (auto& v : design.p) v = u(gen);
    Draw state = draw_sample(g, design, static_cast<std::uint64_t>(rep));
    if (state.sample_size() < 4) state = realize(g, design, Indicator(8, 1), Indicator(8, 0));
    const oracle::Vec Rv(state.R.begin(), state.R.end());
    DgpTruth truth{heterogeneous_theta(8, 3, static_cast<std::uint64_t>(rep)), Eigen::VectorXd::Zero(8)};
    for (const auto& obs : observed) {
      SCOPED_TRACE("rep " + std::to_string(rep) + " spec " + obs.names()[1]);
      SampleEstimand est;
      try {
        est = sample_estimand(g, state, kTrue, obs, design, truth);
      } catch (const SingularMatrixError&) {
        continue;  // a component with no variation on this draw
      }
      const Eigen::VectorXd want =
          oracle::sample_estimand(kTrue, obs, A, Rv, design.p, rep % 2, design.censor_cap, truth.theta);
      EXPECT_LE((est.theta - want).cwiseAbs().maxCoeff(), 1e-10);
      EXPECT_EQ(est.method, "exact");
    }
  }
}

TEST(Estimator, SampleEstimandMonteCarloAgrees) {
  const PopulationGraph g(8, fixture::kEight);
  DesignSpec design;
  design.rho = 1.0;
  const Draw state = realize(g, design, Indicator(8, 1), Indicator(8, 0));
  const auto obs = make_spec({Component::own(), Component::share(), Component::second_share(false)});
  DgpTruth truth{heterogeneous_theta(8, 3, 2), Eigen::VectorXd::Zero(8)};
  const auto exact = sample_estimand(g, state, kTrue, obs, design, truth);
  SampleEstimandOptions opt;
  opt.mode = EstimandMode::MonteCarlo;
  opt.replications = 40000;
  opt.seed = derive_seed(4, 0, 0);
  const auto mc = sample_estimand(g, state, kTrue, obs, design, truth, opt);
  EXPECT_LE((mc.theta - exact.theta).cwiseAbs().maxCoeff(), 0.05);
}

TEST(Estimator, PopulationEstimandMatchesEnumeration) {
  const PopulationGraph g(8, fixture::kEight);
  const auto A = oracle::dense(8, fixture::kEight);
  const std::vector<std::pair<ExposureSpec, std::string>> cases{
      {kTrue, "exact_r_linear"},
      {make_spec({Component::own(), Component::count()}, NetworkSource::Population), "exact_r_linear"},
      {make_spec({Component::own(), Component::any()}, NetworkSource::Population), "exact_enumeration"},
      {make_spec({Component::own(), Component::share()}, NetworkSource::Sampled), "exact_enumeration"},
  };
  for (const double rho : {0.4, 1.0}) {
    for (const auto& [spec, method] : cases) {
      DesignSpec design;
      design.rho = rho;
      design.p = {0.3, 0.6, 0.5, 0.4, 0.7, 0.5, 0.2, 0.5};
      DgpTruth truth{heterogeneous_theta(8, spec.dim(), 7), Eigen::VectorXd::Zero(8)};
      const auto est = population_estimand(g, spec, design, truth);
      const Eigen::VectorXd want = oracle::population_estimand(spec, A, rho, design.p, false, std::nullopt, truth.theta);
      EXPECT_LE((est.theta - want).cwiseAbs().maxCoeff(), 1e-10) << method << " rho " << rho;
      EXPECT_EQ(est.method, rho >= 1.0 ? std::string("exact") : method);
    }
  }
}

TEST(Estimator, HomogeneousEffectsAreRecovered) {
  const PopulationGraph g(8, fixture::kEight);
  DesignSpec design;
  design.rho = 0.6;
  const Eigen::Vector3d theta(0.3, 0.8, -0.4);
  DgpTruth truth{theta.transpose().replicate(8, 1), Eigen::VectorXd::Zero(8)};
  EXPECT_LE((population_estimand(g, kTrue, design, truth).theta - theta).cwiseAbs().maxCoeff(), 1e-12);
  const Draw state = realize(g, design, {1, 1, 1, 0, 1, 1, 1, 1}, Indicator(8, 0));
  EXPECT_LE((sample_estimand(g, state, kTrue, kTrue, design, truth).theta - theta).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Estimator, ScalarWeightsAreNonNegative) {
  const PopulationGraph g(8, fixture::kEight);
  DesignSpec design;
  design.rho = 0.5;
  const auto spec = make_spec({Component::share()}, NetworkSource::Population);
  DgpTruth truth{heterogeneous_theta(8, 1, 3), Eigen::VectorXd::Zero(8)};
  const auto est = population_estimand(g, spec, design, truth);
  const auto rep = contamination_weights(est, truth, 0);
  EXPECT_EQ(rep.negative_own_weights, 0u);
  EXPECT_NEAR(rep.weights.sum(), 1.0, 1e-12);
  EXPECT_NEAR(rep.estimand, est.theta(0), 1e-10);
  for (Eigen::Index u = 0; u < rep.weights.rows(); ++u) EXPECT_GE(rep.weights(u, 0), 0.0);
}

TEST(Estimator, ContaminationReconstructsEstimand) {
  const PopulationGraph g(8, fixture::kEight);
  DesignSpec design;
  design.rho = 0.8;
  design.scheme = SamplingScheme::Star;
  const Draw state = realize(g, design, {1, 1, 0, 1, 1, 0, 1, 1}, Indicator(8, 0));
  DgpTruth truth{heterogeneous_theta(8, 3, 11), Eigen::VectorXd::Zero(8)};
  const auto obs = make_spec({Component::own(), Component::share(), Component::second_share(false)});
  const auto s = sample_estimand(g, state, kTrue, obs, design, truth);
  const auto p = population_estimand(g, kTrue, design, truth);
  for (std::size_t k = 0; k < 3; ++k) {
    for (const auto& rep : {contamination_weights(s, truth, k), contamination_weights(p, truth, k)}) {
      ASSERT_TRUE(rep.own_term && rep.contamination_term);
      EXPECT_NEAR(*rep.own_term + *rep.contamination_term, rep.estimand, 1e-8);
    }
    // With matching mappings the own weights sum to one and the rest to zero.
    const auto rep = contamination_weights(p, truth, k);
    EXPECT_NEAR(rep.own_weights->sum(), 1.0, 1e-8);
    for (Eigen::Index l = 0; l < rep.contamination_weights->cols(); ++l)
      EXPECT_NEAR(rep.contamination_weights->col(l).sum(), 0.0, 1e-8);
    EXPECT_NEAR(contamination_weights(s, truth, k).estimand, s.theta(static_cast<Eigen::Index>(k)), 1e-8);
    EXPECT_NEAR(contamination_weights(p, truth, k).estimand, p.theta(static_cast<Eigen::Index>(k)), 1e-8);
  }
}

TEST(Estimator, OverlapContaminatesOnFigureGraph) {
  const PopulationGraph g(10, fixture::kFigure);
  DesignSpec design;
  const Draw state = realize(g, design, Indicator(10, 1), Indicator(10, 0));
  DgpTruth truth{heterogeneous_theta(10, 3, 1), Eigen::VectorXd::Zero(10)};
  const auto overlap = make_spec({Component::own(), Component::share(), Component::second_share(false)});
  const auto clean = make_spec({Component::own(), Component::share(), Component::second_share(true)});
  const auto bad = contamination_weights(sample_estimand(g, state, kTrue, overlap, design, truth), truth, 2);
  const auto good = contamination_weights(sample_estimand(g, state, kTrue, clean, design, truth), truth, 2);
  EXPECT_GT(bad.nonzero_contamination_weights, 0u);
  EXPECT_EQ(good.nonzero_contamination_weights, 0u);
}

TEST(Estimator, PotentialOutcomesDimensionCheck) {
  DgpTruth truth{Eigen::MatrixXd::Ones(3, 2), Eigen::VectorXd::Zero(3)};
  EXPECT_THROW(potential_outcomes(Eigen::MatrixXd::Ones(3, 3), truth), InputError);
  EXPECT_NEAR(potential_outcomes(Eigen::MatrixXd::Ones(3, 2), truth)(1), 2.0, 1e-15);
}
