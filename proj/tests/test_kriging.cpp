#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "oracles.hpp"
#include "spatial/kriging.hpp"

using namespace spatial;

namespace {

SpatialDataset random_dataset(std::size_t n, std::mt19937_64& rng) {
  const auto locs = oracle::random_locations(n, rng);
  return build_dataset(locs, oracle::normals(static_cast<Eigen::Index>(n), rng));
}

SpatialDataset simulate(const CovarianceModel& m, const std::vector<Location>& locs, std::mt19937_64& rng,
                        double mean = 0.0) {
  const Eigen::MatrixXd k = oracle::dense_cov(m, locs, locs, true);
  const Eigen::MatrixXd l = k.llt().matrixL();
  const Eigen::VectorXd z = (l * oracle::normals(static_cast<Eigen::Index>(locs.size()), rng)).array() + mean;
  return build_dataset(locs, z);
}

// Data covariance with noise, target cross-covariance and target variance as the library defines them.
struct Blocks {
  Eigen::MatrixXd sigma;
  Eigen::VectorXd c0;
  double c00;
};

Blocks blocks(const CovarianceModel& m, const SpatialDataset& d, const Location& s0, double noise) {
  const std::vector<Location> t{s0};
  Blocks b;
  b.sigma = oracle::dense_cov(m, d.locations(), d.locations(), true);
  b.sigma.diagonal().array() += noise;
  b.c0 = oracle::dense_cov(m, d.locations(), t, false).col(0);
  b.c00 = m.sill() + m.nugget();
  return b;
}

}  // namespace

TEST(SimpleKriging, ExactInterpolation) {
  std::mt19937_64 rng(1);
  const auto d = random_dataset(8, rng);
  const auto r = simple_kriging(d, CovarianceModel::exponential(1, 0.4), [](const Location&) { return 0.0; },
                                d.locations()[3], 0.0);
  EXPECT_NEAR(r.predictor, d.values()(3), 1e-10);
  EXPECT_NEAR(r.variance, 0.0, 1e-10);
}

TEST(SimpleKriging, NoCorrelationGivesPrior) {
  std::mt19937_64 rng(2);
  const auto d = random_dataset(6, rng);
  const auto r = simple_kriging(d, CovarianceModel::exponential(1.7, 1e-6), [](const Location&) { return 0.4; },
                                Location{0.5, 0.5}, 0.0);
  EXPECT_NEAR(r.predictor, 0.4, 1e-12);
  EXPECT_NEAR(r.variance, 1.7, 1e-12);
}

TEST(SimpleKriging, TwoPointMidwayClosedForm) {
  const auto d = build_dataset({Location{0, 0}, Location{1, 0}}, Eigen::Vector2d(1.0, 3.0));
  const auto r = simple_kriging(d, CovarianceModel::exponential(1, 1), [](const Location&) { return 0.0; },
                                Location{0.5, 0}, 0.0);
  // Symmetric 2x2: both weights w = e^-0.5 / (1 + e^-1)
  const double c = std::exp(-0.5), rho = std::exp(-1.0);
  const double w = c / (1 + rho);
  EXPECT_NEAR(r.predictor, w * 4.0, 1e-12);
  EXPECT_NEAR(r.variance, 1 - 2 * w * c, 1e-12);
  EXPECT_NEAR(r.weights(0), w, 1e-12);
}

TEST(SimpleKriging, MatchesGaussianConditioning) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t n = 2 + rep % 15;
    const auto d = random_dataset(n, rng);
    const auto m = rep % 2 ? CovarianceModel::exponential(1.2, 0.3, 0.05 * (rep % 3))
                           : CovarianceModel::make(Family::Matern, 0.9, 0.25, 0.0, 1.5);
    const double noise = rep % 4 == 0 ? 0.1 : 0.0;
    const Location s0{0.37, 0.61};
    const double mu = 0.25;
    const auto r = simple_kriging(d, m, [mu](const Location&) { return mu; }, s0, noise);

    const auto b = blocks(m, d, s0, 0.0);
    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd joint(ni + 1, ni + 1);
    joint.topLeftCorner(ni, ni) = b.sigma;
    joint.topRightCorner(ni, 1) = b.c0;
    joint.bottomLeftCorner(1, ni) = b.c0.transpose();
    joint(ni, ni) = b.c00;
    std::vector<std::size_t> obs(n);
    for (std::size_t i = 0; i < n; ++i) obs[i] = i;
    const auto want = oracle::condition(Eigen::VectorXd::Constant(ni + 1, mu), joint, obs, d.values(),
                                        Eigen::VectorXd::Constant(ni, noise));
    EXPECT_NEAR(r.predictor, want.mean(0), 1e-10);
    EXPECT_NEAR(r.variance, want.cov(0, 0), 1e-10);
  }
}

TEST(SimpleKriging, DeletionNeverDecreasesVariance) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 30; ++rep) {
    const auto d = random_dataset(10, rng);
    const auto m = CovarianceModel::exponential(1, 0.3, 0.02);
    std::vector<Location> fewer(d.locations().begin(), d.locations().end() - 1);
    const auto d2 = build_dataset(fewer, d.values().head(9));
    const Location s0{0.5, 0.5};
    const auto zero = [](const Location&) { return 0.0; };
    EXPECT_GE(simple_kriging(d2, m, zero, s0, 0.0).variance, simple_kriging(d, m, zero, s0, 0.0).variance - 1e-12);
  }
}

TEST(OrdinaryKriging, SinglePoint) {
  const auto d = build_dataset({Location{0.3, 0.3}}, Eigen::VectorXd::Constant(1, 4.2));
  const auto r = ordinary_kriging(d, CovarianceModel::exponential(1, 0.5), Location{0.9, 0.1}, 0.0);
  EXPECT_NEAR(r.weights(0), 1.0, 1e-12);
  EXPECT_NEAR(r.predictor, 4.2, 1e-12);
}

TEST(OrdinaryKriging, SquareCornersSymmetry) {
  const auto d = build_dataset({Location{0, 0}, Location{1, 0}, Location{0, 1}, Location{1, 1}},
                               Eigen::Vector4d(1, 2, 3, 4));
  const auto r = ordinary_kriging(d, CovarianceModel::make(Family::Gaussian, 1, 0.7, 0.1), Location{0.5, 0.5}, 0.0);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_NEAR(r.weights(i), 0.25, 1e-12);
  EXPECT_NEAR(r.predictor, 2.5, 1e-12);
}

TEST(OrdinaryKriging, MatchesKkt) {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const auto d = random_dataset(10, rng);
    const auto m = CovarianceModel::make(Family::Spherical, 1.1, 0.8, 0.1);
    const Location s0{0.2, 0.9};
    const auto r = ordinary_kriging(d, m, s0, 0.05);
    const auto b = blocks(m, d, s0, 0.05);
    const auto want = oracle::kriging_kkt(b.sigma, b.c0, b.c00, Eigen::MatrixXd::Ones(10, 1),
                                          Eigen::VectorXd::Ones(1), d.values());
    EXPECT_NEAR(r.predictor, want.predictor, 1e-8);
    EXPECT_NEAR(r.variance, want.variance, 1e-8);
    EXPECT_NEAR(r.weights.sum(), 1.0, 1e-10);
  }
}

TEST(UniversalKriging, InterceptOnlyEqualsOrdinary) {
  std::mt19937_64 rng(6);
  const auto d = random_dataset(12, rng);
  const auto m = CovarianceModel::exponential(1, 0.2, 0.1);
  const Location s0{0.4, 0.4};
  const auto a = ordinary_kriging(d, m, s0, 0.0);
  const auto b = universal_kriging(d, m, TrendSpec::intercept(), s0, 0.0);
  EXPECT_NEAR(a.predictor, b.predictor, 1e-12);
  EXPECT_NEAR(a.variance, b.variance, 1e-12);
}

TEST(UniversalKriging, PureNuggetIsOls) {
  std::mt19937_64 rng(7);
  const auto locs = oracle::random_locations(25, rng);
  Eigen::VectorXd z(25);
  Eigen::MatrixXd x(25, 3);
  for (Eigen::Index i = 0; i < 25; ++i) {
    x.row(i) << 1, locs[static_cast<std::size_t>(i)][0], locs[static_cast<std::size_t>(i)][1];
    z(i) = 2 - locs[static_cast<std::size_t>(i)][0] + 3 * locs[static_cast<std::size_t>(i)][1] + 0.3 * oracle::normals(1, rng)(0);
  }
  const auto d = build_dataset(locs, z);
  // Correlation range far below the smallest spacing: the model is pure nugget for the data.
  const auto m = CovarianceModel::exponential(1, 1e-8);
  const Location s0{0.55, 0.45};
  const auto r = universal_kriging(d, m, TrendSpec::linear(2), s0, 0.0);
  const Eigen::VectorXd beta = x.colPivHouseholderQr().solve(z);
  EXPECT_NEAR(r.predictor, Eigen::Vector3d(1, 0.55, 0.45).dot(beta), 1e-8);
}

TEST(UniversalKriging, ExactAtDataSite) {
  std::mt19937_64 rng(8);
  const auto d = random_dataset(9, rng);
  const auto r = universal_kriging(d, CovarianceModel::exponential(1, 0.5), TrendSpec::linear(2), d.locations()[4], 0.0);
  EXPECT_NEAR(r.predictor, d.values()(4), 1e-8);
  EXPECT_NEAR(r.variance, 0.0, 1e-8);
}

TEST(UniversalKriging, MatchesKktAndConstraints) {
  std::mt19937_64 rng(9);
  for (int rep = 0; rep < 20; ++rep) {
    const auto d = random_dataset(14, rng);
    const auto m = CovarianceModel::make(Family::Matern, 1.0, 0.3, 0.05, 2.5);
    const Location s0{0.1 + 0.04 * rep, 0.7};
    const auto trend = TrendSpec::linear(2);
    const auto r = universal_kriging(d, m, trend, s0, 0.02);
    const auto b = blocks(m, d, s0, 0.02);
    const Eigen::MatrixXd x = trend.design(d.locations());
    const Eigen::VectorXd x0 = trend.evaluate(s0);
    const auto want = oracle::kriging_kkt(b.sigma, b.c0, b.c00, x, x0, d.values());
    EXPECT_NEAR(r.predictor, want.predictor, 1e-8);
    EXPECT_NEAR(r.variance, want.variance, 1e-8);
    EXPECT_LT((x.transpose() * r.weights - x0).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(UniversalKriging, DatasetCovariates) {
  std::mt19937_64 rng(10);
  const auto locs = oracle::random_locations(10, rng);
  Eigen::MatrixXd x(10, 2);
  x.col(0).setOnes();
  x.col(1) = oracle::normals(10, rng);
  const auto d = build_dataset(locs, oracle::normals(10, rng), x);
  const auto m = CovarianceModel::exponential(1, 0.3);
  const Eigen::Vector2d x0(1, 0.4);
  const Location s0{0.5, 0.5};
  const auto r = universal_kriging(d, m, x0, s0, 0.0);
  const auto b = blocks(m, d, s0, 0.0);
  const auto want = oracle::kriging_kkt(b.sigma, b.c0, b.c00, x, x0, d.values());
  EXPECT_NEAR(r.predictor, want.predictor, 1e-8);
  EXPECT_NEAR(r.variance, want.variance, 1e-8);
}

TEST(UniversalKriging, RankDeficientTrend) {
  const auto d = build_dataset({Location{0, 0}, Location{0, 1}, Location{0, 2}}, Eigen::Vector3d(1, 2, 3));
  try {
    universal_kriging(d, CovarianceModel::exponential(1, 1), TrendSpec::linear(2), Location{1, 1}, 0.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::RankDeficientTrend);
  }
}

TEST(Kriging, ShiftInvariance) {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 10; ++rep) {
    const auto d = random_dataset(12, rng);
    const auto shifted = build_dataset(d.locations(), d.values().array() + 3.7);
    const auto m = CovarianceModel::exponential(1, 0.3, 0.1);
    const Location s0{0.3, 0.8};
    for (bool linear : {false, true}) {
      const auto t = linear ? TrendSpec::linear(2) : TrendSpec::intercept();
      const auto a = universal_kriging(d, m, t, s0, 0.0);
      const auto b = universal_kriging(shifted, m, t, s0, 0.0);
      EXPECT_NEAR(b.predictor - a.predictor, 3.7, 1e-10);
      EXPECT_NEAR(b.variance, a.variance, 1e-10);
    }
  }
}

TEST(Kriging, NuggetDoesNotInterpolate) {
  const auto d = build_dataset({Location{0, 0}, Location{1, 0}}, Eigen::Vector2d(1, -1));
  const auto r = ordinary_kriging(d, CovarianceModel::exponential(1, 0.5, 0.5), Location{0, 0}, 0.0);
  EXPECT_LT(r.predictor, 1.0 - 1e-3);
  EXPECT_GT(r.variance, 0.0);
}

TEST(Mle, TooFewObservations) {
  std::mt19937_64 rng(12);
  const auto d = random_dataset(3, rng);
  try {
    fit_mle(d, Family::Exponential, TrendSpec::linear(2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TooFewObservations);
  }
}

TEST(Mle, ProfileLikelihoodMatchesDense) {
  std::mt19937_64 rng(13);
  const auto d = random_dataset(15, rng);
  const auto m = CovarianceModel::exponential(0.8, 0.2, 0.1);
  const Eigen::MatrixXd x = TrendSpec::linear(2).design(d.locations());
  Eigen::VectorXd beta;
  const double ll = profile_log_likelihood(d, m, x, &beta);
  const Eigen::MatrixXd k = oracle::dense_cov(m, d.locations(), d.locations(), true);
  const Eigen::MatrixXd ki = k.fullPivLu().inverse();
  const Eigen::VectorXd b = (x.transpose() * ki * x).fullPivLu().solve(x.transpose() * ki * d.values());
  EXPECT_LT((beta - b).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(ll, oracle::log_density(x * b, k, d.values()), 1e-9);
}

TEST(Mle, WhiteNoiseGoesToNugget) {
  std::mt19937_64 rng(14);
  const auto locs = oracle::random_locations(120, rng, 0.0, 5.0);
  const Eigen::VectorXd z = oracle::normals(120, rng);
  const auto d = build_dataset(locs, z);
  const auto fit = fit_mle(d, Family::Exponential, TrendSpec::intercept());
  const double v = (z.array() - z.mean()).square().sum() / 119.0;
  const double smallest_gap = [&] {
    double g = INFINITY;
    for (std::size_t i = 0; i < locs.size(); ++i)
      for (std::size_t j = 0; j < i; ++j) g = std::min(g, distance(locs[i], locs[j]));
    return g;
  }();
  const bool range_collapsed = fit.model.range() < smallest_gap / 5.0;
  const bool nugget_dominates = std::abs(fit.model.nugget() - v) < 0.25 * v;
  EXPECT_TRUE(range_collapsed || nugget_dominates)
      << "sill " << fit.model.sill() << " range " << fit.model.range() << " nugget " << fit.model.nugget();
}

// 150 jittered grid sites on [0,5]^2 for sill and range, plus 50 partners at
// distance 1e-3 so the nugget is identifiable. Each parameter is scored on its own.
TEST(Mle, RecoversSimulatedParameters) {
  const auto truth = CovarianceModel::exponential(1, 0.3, 0.1);
  int sill = 0, range = 0, nugget = 0;
  for (std::uint64_t rep = 0; rep < 20; ++rep) {
    std::mt19937_64 rng(7000 + rep);
    std::uniform_real_distribution<double> jitter(-0.3, 0.3), angle(0.0, 2 * std::numbers::pi);
    std::vector<Location> locs;
    const int side = 13;
    for (int i = 0; i < 150; ++i)
      locs.push_back(Location{5.0 * (i % side + 0.5 + jitter(rng)) / side, 5.0 * (i / side + 0.5 + jitter(rng)) / side});
    for (std::size_t i = 0; i < 50; ++i) {
      const double a = angle(rng);
      locs.push_back(Location{locs[i][0] + 1e-3 * std::cos(a), locs[i][1] + 1e-3 * std::sin(a)});
    }
    const auto d = simulate(truth, locs, rng, 1.0);
    const auto fit = fit_mle(d, Family::Exponential, TrendSpec::intercept());
    sill += std::abs(fit.model.sill() / 1.0 - 1) <= 0.25;
    range += std::abs(fit.model.range() / 0.3 - 1) <= 0.25;
    nugget += std::abs(fit.model.nugget() / 0.1 - 1) <= 0.25;
  }
  EXPECT_GE(sill, 16);
  EXPECT_GE(range, 16);
  EXPECT_GE(nugget, 16);
}

TEST(KrigingMap, SingleCellAtDatum) {
  const auto d = build_dataset({Location{0.5, 0.5}, Location{0.1, 0.2}}, Eigen::Vector2d(2.5, 1.0));
  const auto grid = tessellate_baus(Window::unit_square(), 1, 1);
  const auto map = kriging_map(d, CovarianceModel::exponential(1, 0.3), TrendSpec::intercept(), grid, 0.0);
  ASSERT_EQ(map.predictions.size(), 1u);
  EXPECT_NEAR(map.predictions[0], 2.5, 1e-10);
  EXPECT_NEAR(map.standard_errors[0], 0.0, 1e-5);
}

TEST(KrigingMap, MatchesPointwiseAndDensityOrdering) {
  std::mt19937_64 rng(15);
  std::vector<Location> locs = oracle::random_locations(15, rng, 0.05, 0.25);  // cluster near the origin
  locs.push_back(Location{0.9, 0.2});
  const auto d = build_dataset(locs, oracle::normals(16, rng));
  const auto m = CovarianceModel::exponential(1, 0.3, 0.05);
  const auto grid = tessellate_baus(Window::unit_square(), 8, 8);
  const auto map = kriging_map(d, m, TrendSpec::intercept(), grid, 0.01);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto r = universal_kriging(d, m, TrendSpec::intercept(), grid.cells()[i].centroid, 0.01);
    EXPECT_EQ(map.predictions[i], r.predictor);
    EXPECT_EQ(map.standard_errors[i], r.standard_error());
    EXPECT_GE(map.standard_errors[i], 0.0);
  }
  const auto near = *grid.locate(Location{0.15, 0.15});
  const auto far = *grid.locate(Location{0.95, 0.95});
  EXPECT_LT(map.standard_errors[near], map.standard_errors[far]);
}
