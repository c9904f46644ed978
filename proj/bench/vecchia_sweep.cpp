// Vecchia accuracy and cost against the dense solve.
// usage: vecchia_sweep [n ...]   prints n,q,loglik_err,rmse,seconds

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include "spatial/kernels.hpp"
#include "spatial/kriging.hpp"
#include "spatial/vecchia.hpp"

using namespace spatial;

int main(int argc, char** argv) {
  std::vector<std::size_t> sizes{500, 1000, 2000};
  if (argc > 1) {
    sizes.clear();
    for (int i = 1; i < argc; ++i) sizes.push_back(static_cast<std::size_t>(std::atol(argv[i])));
  }
  const auto model = CovarianceModel::exponential(1.0, 0.2);
  const double noise = 0.01;
  std::printf("n,q,loglik_err,rmse,seconds\n");
  for (const auto n : sizes) {
    std::mt19937_64 rng(n);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> z;
    std::vector<Location> locs, targets;
    for (std::size_t i = 0; i < n; ++i) locs.push_back(Location{u(rng), u(rng)});
    for (std::size_t i = 0; i < 100; ++i) targets.push_back(Location{u(rng), u(rng)});

    auto t0 = std::chrono::steady_clock::now();
    Eigen::MatrixXd sigma = kernels::gram_matrix(model, locs);
    sigma.diagonal().array() += noise;
    const Eigen::LLT<Eigen::MatrixXd> llt(sigma);
    Eigen::VectorXd e(static_cast<Eigen::Index>(n));
    for (auto& v : e) v = z(rng);
    const Eigen::VectorXd values = llt.matrixL() * e;
    const double exact_ll = -0.5 * (static_cast<double>(n) * std::log(2.0 * M_PI) +
                                    2.0 * llt.matrixLLT().diagonal().array().log().sum() +
                                    llt.matrixL().solve(values).squaredNorm());
    const auto data = build_dataset(locs, values);
    const KrigingSystem sys(locs, values, model, Eigen::MatrixXd(static_cast<Eigen::Index>(n), 0), noise);
    const auto dense = kernels::predict_batch(sys, targets, Eigen::MatrixXd(targets.size(), 0));
    const double dense_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%zu,dense,0,0,%.4f\n", n, dense_s);

    for (const std::size_t q : {5, 10, 20, 40}) {
      t0 = std::chrono::steady_clock::now();
      const auto order = order_locations(locs, OrderingStrategy::MaxMin);
      const auto f = build_vecchia_factor(order, select_neighbors(order, locs, q), model, locs, noise);
      const double ll = vecchia_loglik(f, values);
      const auto vk = vecchia_krige(data, targets, model, q, noise);
      const double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      double sq = 0;
      for (std::size_t i = 0; i < targets.size(); ++i) {
        const double d = vk.mean(static_cast<Eigen::Index>(i)) - dense[i].predictor;
        sq += d * d / static_cast<double>(targets.size());
      }
      std::printf("%zu,%zu,%.6g,%.6g,%.4f\n", n, q, std::abs(ll - exact_ll), std::sqrt(sq), s);
    }
  }
  return 0;
}
