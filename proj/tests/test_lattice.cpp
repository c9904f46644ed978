#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "oracles.hpp"
#include "spatial/lattice.hpp"
#include "spatial/rng.hpp"

using namespace spatial;

namespace {

Eigen::MatrixXd sample_cov(const Eigen::MatrixXd& draws) {
  const Eigen::RowVectorXd mean = draws.colwise().mean();
  const Eigen::MatrixXd c = draws.rowwise() - mean;
  return c.transpose() * c / static_cast<double>(draws.rows() - 1);
}

void expect_cov_close(const Eigen::MatrixXd& got, const Eigen::MatrixXd& want, double rel_diag, double abs_off) {
  for (Eigen::Index i = 0; i < want.rows(); ++i)
    for (Eigen::Index j = 0; j < want.cols(); ++j) {
      if (i == j) {
        EXPECT_NEAR(got(i, i) / want(i, i), 1.0, rel_diag) << "node " << i;
      } else {
        EXPECT_NEAR(got(i, j), want(i, j), abs_off) << i << "," << j;
      }
    }
}

NeighborhoodGraph triangle() {
  std::vector<Eigen::Triplet<double>> t;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) t.emplace_back(i, j, 1.0);
  SparseMatrix w(3, 3);
  w.setFromTriplets(t.begin(), t.end());
  return NeighborhoodGraph({Location{0, 0}, Location{1, 0}, Location{0, 1}}, w);
}

}  // namespace

TEST(GridGraph, NeighborCounts) {
  const auto g = build_grid_graph(5, 5);
  EXPECT_EQ(g.size(), 25u);
  EXPECT_EQ(g.neighbors(g.node_index(2, 2)).size(), 4u);
  EXPECT_EQ(g.neighbors(g.node_index(0, 0)).size(), 2u);
  EXPECT_EQ(g.neighbors(g.node_index(0, 2)).size(), 3u);
  EXPECT_EQ(build_grid_graph(1, 1).neighbors(0).size(), 0u);
  EXPECT_EQ(g.nodes()[g.node_index(2, 3)], (Location{3, 4}));
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_EQ(g.weights().coeff(static_cast<int>(i), static_cast<int>(i)), 0.0);
  const Eigen::MatrixXd w(g.weights());
  EXPECT_EQ((w - w.transpose()).cwiseAbs().maxCoeff(), 0.0);
}

TEST(GridGraph, ZeroSize) {
  try {
    build_grid_graph(0, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroSize);
  }
}

TEST(ValidateCar, ZeroCoefficientsGiveM) {
  const auto g = build_grid_graph(3, 3);
  Eigen::VectorXd tau2(9);
  tau2 << 1, 2, 3, 4, 5, 6, 7, 8, 9;
  const auto m = validate_car(g, SparseMatrix(9, 9), tau2);
  EXPECT_LT((m.covariance() - Eigen::MatrixXd(tau2.asDiagonal())).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(ValidateCar, HomogeneousBoundary) {
  const auto g = build_grid_graph(4, 4);
  EXPECT_NO_THROW(homogeneous_car(g, 0.3, 1.0));
  try {
    homogeneous_car(g, 0.5, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotPositiveDefinite);
  }
  // bound from a dense eigensolve
  const Eigen::MatrixXd w(g.weights());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(w);
  const double hi = 1.0 / eig.eigenvalues().maxCoeff();
  const auto [lo_b, hi_b] = homogeneous_rho_bounds(g);
  EXPECT_NEAR(hi_b, hi, 1e-10);
  EXPECT_NEAR(lo_b, -hi, 1e-10);  // bipartite spectrum is symmetric
  EXPECT_NO_THROW(homogeneous_car(g, hi - 1e-6, 1.0));
  EXPECT_THROW(homogeneous_car(g, hi + 1e-6, 1.0), Error);
}

TEST(ValidateCar, AsymmetricPrecision) {
  const auto g = build_grid_graph(2, 1);
  SparseMatrix c(2, 2);
  c.insert(0, 1) = 0.3;
  c.insert(1, 0) = 0.3;
  try {
    validate_car(g, c, Eigen::Vector2d(1.0, 2.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::AsymmetricPrecision);
  }
  // c01 / tau0 = c10 / tau1 is fine
  SparseMatrix ok(2, 2);
  ok.insert(0, 1) = 0.2;
  ok.insert(1, 0) = 0.4;
  EXPECT_NO_THROW(validate_car(g, ok, Eigen::Vector2d(1.0, 2.0)));
}

TEST(ValidateCar, PrecisionAndCovariance) {
  const auto g = build_grid_graph(4, 3);
  const auto m = homogeneous_car(g, 0.2, 0.7);
  const Eigen::MatrixXd w(g.weights());
  const Eigen::MatrixXd q = (Eigen::MatrixXd::Identity(12, 12) - 0.2 * w) / 0.7;
  EXPECT_LT((Eigen::MatrixXd(m.precision()) - q).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_LT((m.covariance() - q.fullPivLu().inverse()).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_NEAR(m.log_det_precision(), std::log(q.determinant()), 1e-10);
}

TEST(Checkerboard, FiveByFive) {
  const auto g = build_grid_graph(5, 5);
  const auto cb = checkerboard_partition(g);
  EXPECT_EQ(cb.first.size(), 13u);
  EXPECT_EQ(cb.second.size(), 12u);
  for (auto i : cb.first) {
    const auto ix = i % 5, iy = i / 5;
    EXPECT_EQ((ix + iy) % 2, 0u);
    for (auto j : g.neighbors(i)) EXPECT_EQ(std::count(cb.first.begin(), cb.first.end(), j), 0);
  }
}

TEST(Checkerboard, SingleNodeAndTriangle) {
  const auto cb = checkerboard_partition(build_grid_graph(1, 1));
  EXPECT_EQ(cb.first, std::vector<std::size_t>{0});
  EXPECT_TRUE(cb.second.empty());
  try {
    checkerboard_partition(triangle());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NotBipartite);
  }
}

TEST(Checkerboard, ColorClassPrecisionIsDiagonal) {
  const auto g = build_grid_graph(6, 5);
  const auto m = homogeneous_car(g, 0.22, 1.3);
  const auto cb = checkerboard_partition(g);
  const Eigen::MatrixXd q(m.precision());
  for (const auto* cls : {&cb.first, &cb.second})
    for (auto i : *cls)
      for (auto j : *cls)
        if (i != j) EXPECT_EQ(q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), 0.0);
}

TEST(CarSampling, IndependentStandardNormal) {
  const auto g = build_grid_graph(3, 2);
  const auto m = validate_car(g, SparseMatrix(6, 6), Eigen::VectorXd::Ones(6));
  const auto draws = sample_car(m, 100000, 11, SamplingMethod::Exact);
  expect_cov_close(sample_cov(draws), Eigen::MatrixXd::Identity(6, 6), 0.05, 0.05);
}

TEST(CarSampling, ExactAndGibbsMatchJoint) {
  const auto g = build_grid_graph(4, 4);
  const auto m = homogeneous_car(g, 0.2, 1.0);
  const Eigen::MatrixXd want = m.covariance();
  const auto exact = sample_car(m, 100000, 21, SamplingMethod::Exact);
  const Eigen::MatrixXd ce = sample_cov(exact);
  expect_cov_close(ce, want, 0.05, 0.02);
  const auto gibbs = sample_car(m, 100000, 22, SamplingMethod::Gibbs, {50, 1});
  const Eigen::MatrixXd cg = sample_cov(gibbs);
  expect_cov_close(cg, ce, 0.05, 0.02);
  EXPECT_LT(gibbs.colwise().mean().cwiseAbs().maxCoeff(), 0.03);
}

TEST(CarSampling, Deterministic) {
  const auto m = homogeneous_car(build_grid_graph(5, 4), 0.15, 2.0);
  for (auto method : {SamplingMethod::Exact, SamplingMethod::Gibbs}) {
    EXPECT_EQ(sample_car(m, 20, 5, method), sample_car(m, 20, 5, method));
    EXPECT_NE(sample_car(m, 20, 5, method), sample_car(m, 20, 6, method));
  }
}

TEST(CarSampling, GibbsThinning) {
  const auto m = homogeneous_car(build_grid_graph(3, 3), 0.1, 1.0);
  const auto a = sample_car(m, 10, 3, SamplingMethod::Gibbs, {5, 3});
  const auto b = sample_car(m, 30, 3, SamplingMethod::Gibbs, {5, 1});
  for (Eigen::Index r = 0; r < 10; ++r) EXPECT_EQ(a.row(r), b.row(3 * r + 2));
}

TEST(CarSampling, SparseMatchesDenseReference) {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 5; ++rep) {
    const std::size_t nx = 3 + rep, ny = 4 + rep % 3;  // up to 7x6 = 42 nodes
    const auto g = build_grid_graph(nx, ny);
    const auto m = homogeneous_car(g, 0.1 + 0.03 * rep, 0.5 + rep);
    const auto n = static_cast<Eigen::Index>(g.size());
    const auto& f = m.factor();
    // Dense Cholesky of the same permuted precision, then the same triangular solve.
    const Eigen::MatrixXd q(m.precision());
    const Eigen::MatrixXd p = f.permutationP().toDenseMatrix().cast<double>();
    const Eigen::MatrixXd pq = p * q * p.transpose();
    const Eigen::MatrixXd l = pq.llt().matrixL();
    const auto draws = sample_car(m, 4, 100 + static_cast<std::uint64_t>(rep), SamplingMethod::Exact);
    for (Eigen::Index s = 0; s < 4; ++s) {
      Eigen::VectorXd z(n);
      for (Eigen::Index i = 0; i < n; ++i)
        z(i) = counter_normal(100 + static_cast<std::uint64_t>(rep), static_cast<std::uint64_t>(s), static_cast<std::uint64_t>(i));
      const Eigen::VectorXd x = p.transpose() * l.transpose().triangularView<Eigen::Upper>().solve(z);
      EXPECT_LT((draws.row(s).transpose() - x).cwiseAbs().maxCoeff(), 1e-12);
    }
  }
}

TEST(CarPredict, ObserveAllExactly) {
  const auto m = homogeneous_car(build_grid_graph(3, 3), 0.2, 1.0);
  std::mt19937_64 rng(41);
  LatticeObservations obs;
  for (std::size_t i = 0; i < 9; ++i) obs.nodes.push_back(i);
  obs.values = oracle::normals(9, rng);
  obs.noise_variances = Eigen::VectorXd::Zero(9);
  const auto p = car_predict(m, obs, obs.nodes);
  EXPECT_LT((p.mean - obs.values).cwiseAbs().maxCoeff(), 1e-14);
  EXPECT_EQ(p.variance.cwiseAbs().maxCoeff(), 0.0);
}

TEST(CarPredict, IndependentNodesGivePrior) {
  const auto g = build_grid_graph(3, 1);
  const auto m = validate_car(g, SparseMatrix(3, 3), Eigen::Vector3d(1, 2, 3));
  LatticeObservations obs{{0, 2}, Eigen::Vector2d(5, -1), Eigen::Vector2d(0.1, 0.0)};
  const std::vector<std::size_t> t{1};
  const auto p = car_predict(m, obs, t);
  EXPECT_NEAR(p.mean(0), 0.0, 1e-14);
  EXPECT_NEAR(p.variance(0), 2.0, 1e-14);
}

TEST(CarPredict, MatchesDenseConditioning) {
  const auto m = homogeneous_car(build_grid_graph(4, 4), 0.2, 1.0);
  std::mt19937_64 rng(42);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<std::size_t> all(16);
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    std::vector<std::size_t> obs_nodes(all.begin(), all.begin() + 8);
    std::sort(obs_nodes.begin(), obs_nodes.end());
    LatticeObservations obs;
    obs.nodes = obs_nodes;
    obs.values = oracle::normals(8, rng);
    obs.noise_variances = Eigen::VectorXd::Constant(8, rep % 2 ? 0.3 : 0.0);
    std::vector<std::size_t> targets(16);
    std::iota(targets.begin(), targets.end(), 0);
    const auto p = car_predict(m, obs, targets);

    const auto want = oracle::condition(Eigen::VectorXd::Zero(16), m.covariance(), obs_nodes, obs.values,
                                        obs.noise_variances);
    // oracle returns the free (unobserved) nodes in ascending order
    Eigen::Index f = 0;
    for (std::size_t i = 0; i < 16; ++i) {
      if (std::binary_search(obs_nodes.begin(), obs_nodes.end(), i)) continue;
      EXPECT_NEAR(p.mean(static_cast<Eigen::Index>(i)), want.mean(f), 1e-10);
      EXPECT_NEAR(p.variance(static_cast<Eigen::Index>(i)), want.cov(f, f), 1e-10);
      ++f;
    }
    // and the library's own dense conditioning
    const auto gc = gaussian_condition(m.joint(), obs_nodes, obs.values, obs.noise_variances);
    EXPECT_LT((gc.mean - want.mean).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(CarPredict, LogLikelihoodMatchesDense) {
  const auto m = homogeneous_car(build_grid_graph(4, 3), 0.18, 1.4);
  std::mt19937_64 rng(43);
  LatticeObservations obs{{0, 3, 5, 6, 11}, oracle::normals(5, rng), Eigen::VectorXd::Constant(5, 0.2)};
  const Eigen::MatrixXd cov = m.covariance();
  Eigen::MatrixXd s(5, 5);
  for (Eigen::Index a = 0; a < 5; ++a)
    for (Eigen::Index b = 0; b < 5; ++b)
      s(a, b) = cov(static_cast<Eigen::Index>(obs.nodes[static_cast<std::size_t>(a)]),
                    static_cast<Eigen::Index>(obs.nodes[static_cast<std::size_t>(b)])) + (a == b ? 0.2 : 0.0);
  EXPECT_NEAR(car_log_likelihood(m, obs), oracle::log_density(Eigen::VectorXd::Zero(5), s, obs.values), 1e-9);
  // exact observation of some nodes
  obs.noise_variances(1) = 0.0;
  obs.noise_variances(3) = 0.0;
  for (Eigen::Index a = 0; a < 5; ++a) s(a, a) = cov(static_cast<Eigen::Index>(obs.nodes[static_cast<std::size_t>(a)]), static_cast<Eigen::Index>(obs.nodes[static_cast<std::size_t>(a)])) + obs.noise_variances(a);
  EXPECT_NEAR(car_log_likelihood(m, obs), oracle::log_density(Eigen::VectorXd::Zero(5), s, obs.values), 1e-9);
}

TEST(CarModel, MarkovProperty) {
  const auto g = build_grid_graph(5, 5);
  const auto m = homogeneous_car(g, 0.23, 0.8);
  const Eigen::MatrixXd cov = m.covariance();
  const Eigen::MatrixXd c(m.coefficients());
  std::mt19937_64 rng(51);
  const Eigen::VectorXd y = oracle::normals(25, rng);
  for (std::size_t i = 0; i < 25; ++i) {
    std::vector<std::size_t> others;
    Eigen::VectorXd vals(24);
    for (std::size_t j = 0; j < 25; ++j)
      if (j != i) {
        vals(static_cast<Eigen::Index>(others.size())) = y(static_cast<Eigen::Index>(j));
        others.push_back(j);
      }
    const auto cond = oracle::condition(Eigen::VectorXd::Zero(25), cov, others, vals, Eigen::VectorXd::Zero(24));
    double expect_mean = 0.0;
    for (std::size_t j = 0; j < 25; ++j) expect_mean += c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * y(static_cast<Eigen::Index>(j));
    EXPECT_NEAR(cond.mean(0), expect_mean, 1e-8);
    EXPECT_NEAR(cond.cov(0, 0), 0.8, 1e-8);
  }
}

TEST(CarFit, RecoversRhoRoughly) {
  const auto g = build_grid_graph(12, 12);
  const auto truth = homogeneous_car(g, 0.2, 1.0);
  const auto y = sample_car(truth, 1, 61, SamplingMethod::Exact);
  LatticeObservations obs;
  for (std::size_t i = 0; i < g.size(); ++i) obs.nodes.push_back(i);
  obs.values = y.row(0).transpose();
  obs.noise_variances = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(g.size()), 0.01);
  const auto fit = fit_homogeneous_car(g, obs);
  EXPECT_NEAR(fit.rho, 0.2, 0.08);
  EXPECT_NEAR(fit.tau2, 1.0, 0.35);
  // the fit is a local maximum of the likelihood
  const double at = car_log_likelihood(homogeneous_car(g, fit.rho, fit.tau2), obs);
  EXPECT_GE(at + 1e-6, car_log_likelihood(homogeneous_car(g, fit.rho * 0.9, fit.tau2), obs));
  EXPECT_GE(at + 1e-6, car_log_likelihood(homogeneous_car(g, fit.rho, fit.tau2 * 1.1), obs));
}
