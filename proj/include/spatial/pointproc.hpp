#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spatial/core.hpp"
#include "spatial/covariance.hpp"

namespace spatial {

/// Realization {N, (s_1, Z(s_1)), ...} on a bounded window; marks optional.
class PointPattern {
 public:
  PointPattern(Window window, std::vector<Location> points,
               std::optional<std::vector<double>> marks = std::nullopt);

  const Window& window() const noexcept { return window_; }
  const std::vector<Location>& points() const noexcept { return points_; }
  const std::optional<std::vector<double>>& marks() const noexcept { return marks_; }
  std::size_t size() const noexcept { return points_.size(); }

  PointPattern with_marks(std::vector<double> marks) const;
  PointPattern without_marks() const;

  friend bool operator==(const PointPattern& a, const PointPattern& b) {
    return a.points_ == b.points_ && a.marks_ == b.marks_;
  }

 private:
  Window window_;
  std::vector<Location> points_;
  std::optional<std::vector<double>> marks_;
};

/// Intensity lambda(s) >= 0 with a known upper bound for thinning.
class IntensityFunction {
 public:
  static IntensityFunction constant(double lambda);
  /// Piecewise constant over the cells of `grid`.
  static IntensityFunction gridded(const BauGrid& grid, std::vector<double> values);
  static IntensityFunction callable(std::function<double(const Location&)> f, double lambda_max);

  double operator()(const Location& s) const;
  double lambda_max() const noexcept { return lambda_max_; }

 private:
  std::function<double(const Location&)> f_;
  double lambda_max_ = 0.0;
};

PointPattern simulate_homogeneous_poisson(const Window& window, double lambda, std::uint64_t seed);
PointPattern simulate_inhomogeneous_poisson(const Window& window, const IntensityFunction& intensity,
                                            std::uint64_t seed);
/// n i.i.d. uniform points (the binomial process used under the CSR null).
PointPattern simulate_binomial(const Window& window, std::size_t n, std::uint64_t seed);

struct LgcpRealization {
  PointPattern pattern;
  Eigen::VectorXd log_intensity;  // one value per BAU
};

/// log lambda is drawn on BAU centroids and held constant within each BAU.
LgcpRealization simulate_lgcp(const Window& window, const BauGrid& grid, double gp_mean,
                              const CovarianceModel& gp_covariance, std::uint64_t seed);

/// Reusable LGCP sampler: factorizes the centroid covariance once.
class LgcpSampler {
 public:
  LgcpSampler(const Window& window, const BauGrid& grid, double gp_mean, const CovarianceModel& gp_covariance);
  LgcpRealization operator()(std::uint64_t seed) const;

 private:
  Window window_;
  BauGrid grid_;
  double mean_;
  Eigen::MatrixXd chol_;
};

/// Points of `pattern` in the closed region.
std::size_t count(const PointPattern& pattern, const Window& region);

/// Translation edge-corrected Ripley K:
/// K(r) = (|D| / N^2) sum_{i != j} 1{d_ij <= r} |D| / |D cap (D + s_i - s_j)|.
std::vector<double> estimate_k_function(const PointPattern& pattern, std::span<const double> radii);

enum class CsrStatistic { KDeviation, QuadratChi2 };

struct CsrTestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t n_sim = 0;
  std::uint64_t seed = 0;
  CsrStatistic kind = CsrStatistic::KDeviation;
};

CsrStatistic parse_csr_statistic(const std::string& name);
const char* to_string(CsrStatistic s) noexcept;

/// Observed statistic for the CSR test (larger = further from CSR).
double csr_statistic(const PointPattern& pattern, CsrStatistic kind);

/// Monte Carlo test conditional on the observed N.
CsrTestResult csr_test(const PointPattern& pattern, std::size_t n_sim, std::uint64_t seed,
                       CsrStatistic kind);

}  // namespace spatial
