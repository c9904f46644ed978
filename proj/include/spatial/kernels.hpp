#pragma once

// Hot loops shared by the modules. `kernels` holds the OpenMP versions;
// `reference` holds single-threaded twins with identical arithmetic, used
// by the tests (bitwise comparison) and the benchmarks.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "spatial/core.hpp"
#include "spatial/covariance.hpp"
#include "spatial/kriging.hpp"
#include "spatial/lattice.hpp"
#include "spatial/multivariate.hpp"

namespace spatial {

struct VariogramSums {
  std::vector<std::size_t> counts;
  std::vector<double> distance_sums;
  std::vector<double> squared_increment_sums;
};

using RowMajorSparse = Eigen::SparseMatrix<double, Eigen::RowMajor>;
using Neighbors = std::vector<std::vector<std::size_t>>;

#define SPATIAL_KERNEL_DECLS                                                                        \
  Eigen::MatrixXd gram_matrix(const CovarianceModel& model, std::span<const Location> locs);        \
  Eigen::MatrixXd cross_covariance_matrix(const CovarianceModel& model, std::span<const Location> a, \
                                          std::span<const Location> b);                             \
  VariogramSums variogram_accumulate(std::span<const Location> locs, const Eigen::VectorXd& values, \
                                     std::size_t n_bins, double max_lag);                           \
  std::vector<KrigingResult> predict_batch(const KrigingSystem& sys, std::span<const Location> targets, \
                                           const Eigen::MatrixXd& x0);                              \
  Eigen::MatrixXd car_exact_samples(const CarModel& model, std::size_t n, std::uint64_t seed);      \
  void gibbs_color_update(const RowMajorSparse& c, const Eigen::VectorXd& sd,                       \
                          const std::vector<std::size_t>& nodes, std::uint64_t seed,                \
                          std::uint64_t stream, Eigen::VectorXd& state);                            \
  std::vector<double> k_function_sums(std::span<const Location> points, const Window& window,      \
                                      std::span<const double> radii);                               \
  std::vector<double> monte_carlo(std::size_t n, const std::function<double(std::size_t)>& fn);     \
  Eigen::MatrixXd kernel_matrix(const InteractionKernel& kernel, std::span<const Location> a,       \
                                std::span<const Location> nodes, const Eigen::VectorXd& weights);   \
  void maxmin_update(std::span<const Location> locs, const Location& added,                         \
                     std::vector<double>& min_dist);                                                \
  Neighbors nearest_predecessors(std::span<const Location> locs, std::size_t q);                    \
  Neighbors nearest_data(std::span<const Location> data, std::span<const Location> targets,         \
                         std::size_t q);                                                            \
  void vecchia_node_factors(const CovarianceModel& model, std::span<const Location> locs,           \
                            const Neighbors& neighbors, double noise,                               \
                            std::vector<Eigen::VectorXd>& coefficients,                             \
                            Eigen::VectorXd& residual_variances);                                   \
  void vecchia_predict_batch(const CovarianceModel& model, std::span<const Location> data,          \
                             const Eigen::VectorXd& values, std::span<const Location> targets,      \
                             const Neighbors& neighbors, double noise, double mean,                 \
                             Eigen::VectorXd& out_mean, Eigen::VectorXd& out_var);

namespace kernels {
SPATIAL_KERNEL_DECLS
}  // namespace kernels

namespace reference {
SPATIAL_KERNEL_DECLS
}  // namespace reference

#undef SPATIAL_KERNEL_DECLS

}  // namespace spatial
