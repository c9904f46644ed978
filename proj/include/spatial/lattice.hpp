#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "spatial/core.hpp"

namespace spatial {

using SparseMatrix = Eigen::SparseMatrix<double>;
using SparseFactor = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;

/// Lattice nodes with a spatial-dependence matrix W (zero diagonal).
class NeighborhoodGraph {
 public:
  NeighborhoodGraph(std::vector<Location> nodes, SparseMatrix weights);

  std::size_t size() const noexcept { return nodes_.size(); }
  const std::vector<Location>& nodes() const noexcept { return nodes_; }
  const SparseMatrix& weights() const noexcept { return weights_; }
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return neighbors_.at(i); }

  /// Grid helpers for graphs built by `build_grid_graph` (0-based ix, iy).
  std::size_t grid_width() const noexcept { return nx_; }
  std::size_t grid_height() const noexcept { return ny_; }
  std::size_t node_index(std::size_t ix, std::size_t iy) const noexcept { return iy * nx_ + ix; }

 private:
  friend NeighborhoodGraph build_grid_graph(std::size_t, std::size_t);
  std::vector<Location> nodes_;
  SparseMatrix weights_;
  std::vector<std::vector<std::size_t>> neighbors_;
  std::size_t nx_ = 0, ny_ = 0;
};

/// First-order (rook) adjacency on an nx-by-ny grid with nodes at integer
/// coordinates 1..nx, 1..ny; node (x, y) has index (y-1)*nx + (x-1).
NeighborhoodGraph build_grid_graph(std::size_t nx, std::size_t ny);

/// Gaussian CAR model: E[Y_i | rest] = sum_j c_ij Y_j, var = tau_i^2, so
/// Y ~ Gau(0, (I - C)^-1 M) with precision Q = M^-1 (I - C).
class CarModel {
 public:
  const NeighborhoodGraph& graph() const noexcept { return *graph_; }
  const SparseMatrix& coefficients() const noexcept { return c_; }
  const Eigen::VectorXd& conditional_variances() const noexcept { return tau2_; }
  const SparseMatrix& precision() const noexcept { return q_; }
  const SparseFactor& factor() const noexcept { return *factor_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(tau2_.size()); }

  /// Dense (I - C)^-1 M.
  Eigen::MatrixXd covariance() const;
  GaussianSpec joint() const;
  /// log |Q|
  double log_det_precision() const;

 private:
  friend CarModel validate_car(const NeighborhoodGraph&, const SparseMatrix&, const Eigen::VectorXd&);
  std::shared_ptr<const NeighborhoodGraph> graph_;
  SparseMatrix c_;
  Eigen::VectorXd tau2_;
  SparseMatrix q_;
  std::shared_ptr<const SparseFactor> factor_;
};

CarModel validate_car(const NeighborhoodGraph& graph, const SparseMatrix& c,
                      const Eigen::VectorXd& conditional_variances);

/// C = rho W, M = tau2 I. Valid for rho in (1/lambda_min(W), 1/lambda_max(W)).
CarModel homogeneous_car(const NeighborhoodGraph& graph, double rho, double tau2);

/// Open interval of rho for which the homogeneous CAR is positive definite.
std::pair<double, double> homogeneous_rho_bounds(const NeighborhoodGraph& graph);

struct Checkerboard {
  std::vector<std::size_t> first, second;
};

Checkerboard checkerboard_partition(const NeighborhoodGraph& graph);

enum class SamplingMethod { Exact, Gibbs };

struct GibbsOptions {
  std::size_t burn_in = 50;
  std::size_t thin = 1;
};

/// Draws are rows of the returned matrix.
Eigen::MatrixXd sample_car(const CarModel& model, std::size_t n_samples, std::uint64_t seed,
                           SamplingMethod method, const GibbsOptions& gibbs = {});

struct LatticeObservations {
  std::vector<std::size_t> nodes;
  Eigen::VectorXd values;
  Eigen::VectorXd noise_variances;
};

struct LatticePrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

LatticePrediction car_predict(const CarModel& model, const LatticeObservations& observed,
                              std::span<const std::size_t> targets);

/// Marginal Gaussian log-likelihood of the observations under the CAR prior.
double car_log_likelihood(const CarModel& model, const LatticeObservations& observed);

struct HomogeneousCarFit {
  double rho = 0.0;
  double tau2 = 0.0;
  double log_likelihood = 0.0;
  bool converged = false;
};

HomogeneousCarFit fit_homogeneous_car(const NeighborhoodGraph& graph,
                                      const LatticeObservations& observed);

}  // namespace spatial
