#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spatial/core.hpp"
#include "spatial/covariance.hpp"

namespace spatial {

/// Integrable interaction function b(s, v); may be asymmetric.
class InteractionKernel {
 public:
  using Fn = std::function<double(const Location& s, const Location& v)>;

  explicit InteractionKernel(Fn fn) : fn_(std::move(fn)) {}

  static InteractionKernel zero();
  /// b(s, v) = beta * 1{v in A(s)} / |A(s)|, A(s) the cell of `grid` holding s.
  static InteractionKernel local_average(const BauGrid& grid, double beta);
  /// b(s, v) = amplitude * exp(-|s - v - shift|^2 / bandwidth).
  static InteractionKernel shifted_gaussian(double amplitude, const Location& shift, double bandwidth);

  double operator()(const Location& s, const Location& v) const { return fn_ ? fn_(s, v) : 0.0; }
  bool is_zero() const noexcept { return !fn_; }

 private:
  InteractionKernel() = default;
  Fn fn_;
};

/// Constant or linear-in-coordinates mean.
struct LinearMean {
  double intercept = 0.0;
  std::array<double, 3> slope{};
  double operator()(const Location& s) const;
};

/// Conditional bivariate construction: Y1 ~ (mu1, C11); Y2 | Y1 has mean
/// mu2(s) + int b(s, v)(Y1(v) - mu1(v)) dv and covariance C2|1.
struct BivariateModel {
  LinearMean mu1, mu2;
  CovarianceModel c11;
  CovarianceModel c2_given_1;
  InteractionKernel kernel;
  BauGrid mesh;
};

struct CrossCovarianceSet {
  Eigen::MatrixXd c11, c12, c21, c22;
};

/// Midpoint quadrature over the mesh:
///   C12(s,u) = sum_j C11(s, v_j) b(u, v_j) |A_j|
///   C21(s,u) = sum_j b(s, v_j) C11(v_j, u) |A_j|
///   C22(s,u) = C2|1(s,u) + sum_jk b(s, v_j) C11(v_j, v_k) b(u, v_k) |A_j||A_k|
CrossCovarianceSet derive_cross_covariances(const BivariateModel& model, std::span<const Location> locations);

/// Blocks between two location sets (rows from `a`, columns from `b`).
CrossCovarianceSet cross_covariance_blocks(const BivariateModel& model, std::span<const Location> a,
                                           std::span<const Location> b);

/// [[C11, C12], [C21, C22]], symmetrized; small negative eigenvalues
/// (>= -1e-8 * max diagonal) are lifted with a diagonal jitter.
Eigen::MatrixXd joint_covariance_matrix(const CrossCovarianceSet& set);

struct CokrigingResult {
  double mean = 0.0;
  double variance = 0.0;
};

/// Gaussian conditioning of the stacked joint [Y1(S1), Y2(S2), Y_target(s0)].
CokrigingResult cokrige(const BivariateModel& model, const std::vector<Location>& loc1,
                        const Eigen::VectorXd& z1, const std::vector<Location>& loc2,
                        const Eigen::VectorXd& z2, int target, const Location& s0, double noise1,
                        double noise2);

}  // namespace spatial
