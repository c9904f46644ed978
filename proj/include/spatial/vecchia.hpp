#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spatial/core.hpp"
#include "spatial/covariance.hpp"

namespace spatial {

enum class OrderingStrategy { CoordinateSort, MaxMin };

OrderingStrategy parse_ordering(const std::string& name);
const char* to_string(OrderingStrategy s) noexcept;

/// order[k] is the original index of the k-th node in the artificial ordering.
struct Ordering {
  std::vector<std::size_t> order;
  OrderingStrategy strategy = OrderingStrategy::MaxMin;
};

/// neighbors[k] lists ordering positions (all < k) that node k conditions on.
struct NeighborDag {
  std::vector<std::vector<std::size_t>> neighbors;
  std::size_t bound = 0;
};

/// Per-node regression on the neighbor set:
///   X_(k) = mean + sum_j a_kj (X_(j) - mean) + e_k,  e_k ~ N(0, d_k).
struct VecchiaFactor {
  Ordering ordering;
  NeighborDag dag;
  std::vector<Eigen::VectorXd> coefficients;
  Eigen::VectorXd residual_variances;
  double mean = 0.0;
};

Ordering order_locations(std::span<const Location> locations, OrderingStrategy strategy);

/// q nearest predecessors in Euclidean distance, ties to the lower position.
NeighborDag select_neighbors(const Ordering& ordering, std::span<const Location> locations, std::size_t q);

/// `noise` is added to every node's marginal variance (data nodes observed with error).
VecchiaFactor build_vecchia_factor(const Ordering& ordering, const NeighborDag& dag,
                                   const CovarianceModel& model, std::span<const Location> locations,
                                   double noise = 0.0, double mean = 0.0);

/// Sum of per-node conditional log-densities; `values` in original index order.
double vecchia_loglik(const VecchiaFactor& factor, const Eigen::VectorXd& values);

/// Dense covariance implied by the factor, in original index order.
Eigen::MatrixXd implied_covariance(const VecchiaFactor& factor);

/// Prediction nodes follow all data nodes and condition only on data nodes.
struct PredictionDag {
  std::vector<std::vector<std::size_t>> neighbors;  // data indices per target
  std::size_t bound = 0;
};

PredictionDag select_prediction_neighbors(std::span<const Location> data_locations,
                                          std::span<const Location> targets, std::size_t q);

struct VecchiaPrediction {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

VecchiaPrediction vecchia_krige(const PredictionDag& dag, const CovarianceModel& model,
                                const SpatialDataset& data, std::span<const Location> targets,
                                double noise, double mean = 0.0);

VecchiaPrediction vecchia_krige(const SpatialDataset& data, std::span<const Location> targets,
                                const CovarianceModel& model, std::size_t q, double noise,
                                double mean = 0.0);

}  // namespace spatial
