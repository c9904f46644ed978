#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "spatial/core.hpp"

namespace spatial {

enum class Family { Exponential, Gaussian, Spherical, Matern };

const char* to_string(Family f) noexcept;
Family parse_family(const std::string& name);

/// Isotropic stationary covariance C(h) = nugget * 1{h = 0} + sill * rho(h / range).
///
/// Families (r = h / range):
///   exponential  exp(-r)
///   gaussian     exp(-r^2)
///   spherical    1 - 1.5 r + 0.5 r^3 for r < 1, else 0
///   matern       2^(1-nu) / Gamma(nu) * r^nu * K_nu(r)   (nu = 0.5 is exponential)
class CovarianceModel {
 public:
  static CovarianceModel make(Family family, double sill, double range, double nugget = 0.0,
                              double smoothness = 0.5);
  static CovarianceModel exponential(double sill, double range, double nugget = 0.0) {
    return make(Family::Exponential, sill, range, nugget);
  }

  Family family() const noexcept { return family_; }
  double sill() const noexcept { return sill_; }
  double range() const noexcept { return range_; }
  double nugget() const noexcept { return nugget_; }
  double smoothness() const noexcept { return smoothness_; }

  /// C(h); C(0) = sill + nugget.
  double covariance_at(double h) const;
  /// gamma(h) = C(0) - C(h); zero at the origin.
  double semivariogram_at(double h) const;
  /// Covariance between values at two distinct sites separated by h. At h = 0
  /// this is the nugget-free limit `sill`, so co-located but distinct sites
  /// share only the continuous component.
  double cross_at(double h) const;
  /// Variance C(0).
  double variance() const noexcept { return sill_ + nugget_; }

  CovarianceModel with_parameters(double sill, double range, double nugget) const {
    return make(family_, sill, range, nugget, smoothness_);
  }

 private:
  CovarianceModel(Family f, double sill, double range, double nugget, double nu)
      : family_(f), sill_(sill), range_(range), nugget_(nugget), smoothness_(nu) {}
  double correlation(double r) const noexcept;

  Family family_;
  double sill_, range_, nugget_, smoothness_;
};

struct VariogramBin {
  double lag = 0.0;          // mean pair distance, or bin midpoint if empty
  std::size_t count = 0;
  double semivariance = 0.0; // NaN when count == 0
};

struct EmpiricalVariogram {
  std::vector<VariogramBin> bins;
  std::size_t occupied() const noexcept;
};

/// Matheron estimator over `n_bins` equal-width bins on [0, max_lag].
EmpiricalVariogram empirical_variogram(const SpatialDataset& data, std::size_t n_bins, double max_lag);

/// Weighted least squares (weights = pair counts) fit of sill, range and
/// nugget in log space, multi-start Nelder-Mead.
CovarianceModel fit_variogram(const EmpiricalVariogram& empirical, Family family,
                              double smoothness = 0.5);

/// Sigma_ij = C(|s_i - s_j|), Sigma_ii = sill + nugget.
Eigen::MatrixXd gram_matrix(const CovarianceModel& model, std::span<const Location> locations);
/// K_ij = cross_at(|a_i - b_j|).
Eigen::MatrixXd cross_covariance_matrix(const CovarianceModel& model, std::span<const Location> a,
                                        std::span<const Location> b);

}  // namespace spatial
