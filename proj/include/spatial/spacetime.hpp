#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "spatial/core.hpp"
#include "spatial/covariance.hpp"
#include "spatial/lattice.hpp"

namespace spatial {

/// Separable C(s, t; u, v) = C_s(|s - u|) * C_t(|t - v|).
struct STCovariance {
  CovarianceModel spatial;
  CovarianceModel temporal;
};

double st_covariance_at(const STCovariance& c, const Location& s, double t, const Location& u, double v);

/// Y_1 ~ initial; Y_t = M Y_{t-1} + eta_t, eta ~ Gau(0, Q);
/// Z_t = H_t Y_t + eps_t, eps ~ Gau(0, diag(R restricted to observed nodes)).
struct StateSpaceModel {
  Eigen::MatrixXd transition;
  Eigen::MatrixXd process_noise;
  Eigen::VectorXd observation_noise;  // per node
  GaussianSpec initial;

  std::size_t state_dim() const noexcept { return static_cast<std::size_t>(transition.rows()); }
  void validate() const;
};

/// M = alpha * rownormalize(W) + delta * I.
Eigen::MatrixXd lattice_transition(const NeighborhoodGraph& graph, double alpha, double delta);

/// Observations at one time step: H_t selects `nodes`.
struct Observation {
  std::vector<std::size_t> nodes;
  Eigen::VectorXd values;
};

struct DynamicalSample {
  std::vector<Eigen::VectorXd> states;
  std::vector<Observation> observations;
};

/// `observed_nodes[t]` lists the nodes seen at step t; empty outer vector
/// means every node is observed at every step.
DynamicalSample simulate_dynamical(const StateSpaceModel& model, std::size_t k, std::uint64_t seed,
                                   const std::vector<std::vector<std::size_t>>& observed_nodes = {});

struct FilterOutput {
  std::vector<Eigen::VectorXd> forecast_means;   // E[Y_t | Z_1..Z_{t-1}]
  std::vector<Eigen::MatrixXd> forecast_covs;
  std::vector<Eigen::VectorXd> filtered_means;   // E[Y_t | Z_1..Z_t]
  std::vector<Eigen::MatrixXd> filtered_covs;
  double log_likelihood = 0.0;
};

FilterOutput kalman_filter(const StateSpaceModel& model, const std::vector<Observation>& observations);

struct SmootherOutput {
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covs;
};

SmootherOutput kalman_smooth(const StateSpaceModel& model, const std::vector<Observation>& observations);
SmootherOutput kalman_smooth(const StateSpaceModel& model, const FilterOutput& filtered);

/// Moments for t = k+1 .. k+horizon.
SmootherOutput kalman_forecast(const StateSpaceModel& model, const FilterOutput& filtered, std::size_t horizon);

/// Joint covariance of (Y_1, ..., Y_k) stacked, built from the Markov factorization.
Eigen::MatrixXd stacked_state_covariance(const StateSpaceModel& model, std::size_t k);

}  // namespace spatial
