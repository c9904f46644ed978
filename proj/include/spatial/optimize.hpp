#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace spatial {

struct SimplexOptions {
  int max_iterations = 500;
  double tolerance = 1e-8;  // simplex size in the (log) parameter space
  double initial_step = 0.5;
};

struct SimplexResult {
  Eigen::VectorXd x;
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

using Objective = std::function<double(const Eigen::VectorXd&)>;

/// Nelder-Mead minimization (GSL nmsimplex2). Stops when the simplex is
/// smaller than `tolerance` or the best value has not improved (relatively,
/// by 1e-12) for 50 * dim iterations.
SimplexResult minimize_simplex(const Objective& f, const Eigen::VectorXd& start,
                               const SimplexOptions& options = {});

/// Runs `minimize_simplex` from every start and keeps the lowest finite value.
/// `converged` is set if any start converged.
SimplexResult minimize_multistart(const Objective& f, const std::vector<Eigen::VectorXd>& starts,
                                  const SimplexOptions& options = {});

}  // namespace spatial
