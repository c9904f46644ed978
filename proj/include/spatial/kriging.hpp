#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spatial/core.hpp"
#include "spatial/covariance.hpp"

namespace spatial {

/// Mean basis x(s) for E Y(s) = x(s)' beta. The first function must be the
/// constant 1.
class TrendSpec {
 public:
  using Basis = std::function<double(const Location&)>;

  static TrendSpec intercept();
  /// 1, x, y[, z]
  static TrendSpec linear(std::size_t dim);
  static TrendSpec from_basis(std::vector<Basis> basis);

  std::size_t size() const noexcept { return basis_.size(); }
  Eigen::VectorXd evaluate(const Location& s) const;
  Eigen::MatrixXd design(std::span<const Location> locations) const;

 private:
  explicit TrendSpec(std::vector<Basis> basis) : basis_(std::move(basis)) {}
  std::vector<Basis> basis_;
};

struct KrigingResult {
  double predictor = 0.0;
  double variance = 0.0;
  Eigen::VectorXd weights;
  double standard_error() const { return std::sqrt(variance); }
};

/// Factored kriging system for one dataset, reusable across targets.
///
/// Data covariance is gram + noise * I. With a design matrix X (p >= 1) the
/// system is universal kriging with unknown beta; with p = 0 the values are
/// taken as already centred by a known mean (simple kriging).
class KrigingSystem {
 public:
  KrigingSystem(const std::vector<Location>& locations, const Eigen::VectorXd& values,
                const CovarianceModel& model, const Eigen::MatrixXd& design, double noise);

  /// Prediction of the noiseless Y(s0); `x0` is the trend basis at s0
  /// (empty for simple kriging).
  KrigingResult predict(const Location& s0, const Eigen::VectorXd& x0) const;

  const Eigen::VectorXd& beta() const noexcept { return beta_; }
  std::size_t size() const noexcept { return locations_.size(); }

 private:
  std::vector<Location> locations_;
  CovarianceModel model_;
  Eigen::MatrixXd design_;
  Eigen::LLT<Eigen::MatrixXd> data_factor_;
  Eigen::MatrixXd sigma_inv_x_;        // Sigma^-1 X
  Eigen::LLT<Eigen::MatrixXd> gls_factor_;  // X' Sigma^-1 X
  Eigen::VectorXd beta_;
  Eigen::VectorXd alpha_;              // Sigma^-1 (z - X beta)
};

using MeanFunction = std::function<double(const Location&)>;

KrigingResult simple_kriging(const SpatialDataset& data, const CovarianceModel& model,
                             const MeanFunction& mean, const Location& s0, double noise);
KrigingResult ordinary_kriging(const SpatialDataset& data, const CovarianceModel& model,
                               const Location& s0, double noise);
KrigingResult universal_kriging(const SpatialDataset& data, const CovarianceModel& model,
                                const TrendSpec& trend, const Location& s0, double noise);
/// Universal kriging with the dataset's own covariate matrix as the design
/// and `x0` the covariate row at the target.
KrigingResult universal_kriging(const SpatialDataset& data, const CovarianceModel& model,
                                const Eigen::VectorXd& x0, const Location& s0, double noise);

struct MleFit {
  CovarianceModel model;
  Eigen::VectorXd beta;
  double log_likelihood = 0.0;
  bool converged = false;
};

/// Profile log-likelihood of (sill, range, nugget) with beta replaced by its
/// GLS estimate.
double profile_log_likelihood(const SpatialDataset& data, const CovarianceModel& model,
                              const Eigen::MatrixXd& design, Eigen::VectorXd* beta_out = nullptr);

MleFit fit_mle(const SpatialDataset& data, Family family, const TrendSpec& trend,
               double smoothness = 0.5);

struct PredictionMap {
  BauGrid grid;
  std::vector<double> predictions;
  std::vector<double> standard_errors;
};

PredictionMap kriging_map(const SpatialDataset& data, const CovarianceModel& model,
                          const TrendSpec& trend, const BauGrid& grid, double noise);

}  // namespace spatial
