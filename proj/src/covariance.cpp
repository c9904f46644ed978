#include "spatial/covariance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "spatial/kernels.hpp"
#include "spatial/optimize.hpp"

namespace spatial {

const char* to_string(Family f) noexcept {
  switch (f) {
    case Family::Exponential: return "exponential";
    case Family::Gaussian: return "gaussian";
    case Family::Spherical: return "spherical";
    case Family::Matern: return "matern";
  }
  return "unknown";
}

Family parse_family(const std::string& name) {
  if (name == "exponential") return Family::Exponential;
  if (name == "gaussian") return Family::Gaussian;
  if (name == "spherical") return Family::Spherical;
  if (name == "matern") return Family::Matern;
  throw Error(ErrorCode::InvalidParameter, "family: unknown covariance family '" + name + "'");
}

CovarianceModel CovarianceModel::make(Family family, double sill, double range, double nugget,
                                      double smoothness) {
  if (!(sill > 0.0) || !std::isfinite(sill)) {
    throw Error(ErrorCode::InvalidParameter, "sill must be positive and finite");
  }
  if (!(range > 0.0) || !std::isfinite(range)) {
    throw Error(ErrorCode::InvalidParameter, "range must be positive and finite");
  }
  if (!(nugget >= 0.0) || !std::isfinite(nugget)) {
    throw Error(ErrorCode::InvalidParameter, "nugget must be non-negative and finite");
  }
  if (family == Family::Matern && (!(smoothness > 0.0) || !std::isfinite(smoothness))) {
    throw Error(ErrorCode::InvalidParameter, "smoothness must be positive for the matern family");
  }
  return CovarianceModel(family, sill, range, nugget, family == Family::Matern ? smoothness : 0.5);
}

double CovarianceModel::correlation(double r) const noexcept {
  switch (family_) {
    case Family::Exponential:
      return std::exp(-r);
    case Family::Gaussian:
      return std::exp(-r * r);
    case Family::Spherical:
      return r >= 1.0 ? 0.0 : 1.0 - 1.5 * r + 0.5 * r * r * r;
    case Family::Matern: {
      if (r < 1e-10) return 1.0;
      if (r > 700.0) return 0.0;
      const double nu = smoothness_;
      const double log_c = (1.0 - nu) * std::log(2.0) - std::lgamma(nu) + nu * std::log(r) +
                           std::log(std::cyl_bessel_k(nu, r));
      return std::min(1.0, std::exp(log_c));
    }
  }
  return 0.0;
}

double CovarianceModel::covariance_at(double h) const {
  if (h < 0.0 || std::isnan(h)) throw Error(ErrorCode::NegativeDistance, "distance must be >= 0");
  if (h == 0.0) return sill_ + nugget_;
  return sill_ * correlation(h / range_);
}

double CovarianceModel::semivariogram_at(double h) const {
  if (h < 0.0 || std::isnan(h)) throw Error(ErrorCode::NegativeDistance, "distance must be >= 0");
  if (h == 0.0) return 0.0;
  return nugget_ + sill_ - covariance_at(h);
}

double CovarianceModel::cross_at(double h) const {
  if (h < 0.0 || std::isnan(h)) throw Error(ErrorCode::NegativeDistance, "distance must be >= 0");
  return sill_ * correlation(h / range_);
}

// ---------------------------------------------------------------------------

std::size_t EmpiricalVariogram::occupied() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(bins.begin(), bins.end(), [](const VariogramBin& b) { return b.count > 0; }));
}

EmpiricalVariogram empirical_variogram(const SpatialDataset& data, std::size_t n_bins, double max_lag) {
  if (data.size() < 2) throw Error(ErrorCode::InsufficientData, "need at least 2 observations");
  if (n_bins == 0) throw Error(ErrorCode::InvalidParameter, "n_bins must be >= 1");
  if (!(max_lag > 0.0)) throw Error(ErrorCode::InvalidParameter, "max_lag must be positive");

  const auto acc = kernels::variogram_accumulate(data.locations(), data.values(), n_bins, max_lag);
  const double width = max_lag / static_cast<double>(n_bins);
  EmpiricalVariogram out;
  out.bins.resize(n_bins);
  for (std::size_t b = 0; b < n_bins; ++b) {
    auto& bin = out.bins[b];
    bin.count = acc.counts[b];
    if (bin.count > 0) {
      const double c = static_cast<double>(bin.count);
      bin.lag = acc.distance_sums[b] / c;
      bin.semivariance = acc.squared_increment_sums[b] / (2.0 * c);
    } else {
      bin.lag = (static_cast<double>(b) + 0.5) * width;
      bin.semivariance = std::numeric_limits<double>::quiet_NaN();
    }
  }
  return out;
}

CovarianceModel fit_variogram(const EmpiricalVariogram& empirical, Family family, double smoothness) {
  std::vector<const VariogramBin*> used;
  for (const auto& b : empirical.bins) {
    if (b.count > 0 && std::isfinite(b.semivariance)) used.push_back(&b);
  }
  if (used.size() < 3) throw Error(ErrorCode::TooFewBins, "need at least 3 occupied bins");

  double max_gamma = 0.0, max_lag = 0.0, first_gamma = used.front()->semivariance;
  for (const auto* b : used) {
    max_gamma = std::max(max_gamma, b->semivariance);
    max_lag = std::max(max_lag, b->lag);
  }
  // Parameters live in log space, clamped so flat directions stay bounded.
  constexpr double log_floor = -30.0, log_ceiling = 30.0;
  auto unpack = [&](const Eigen::VectorXd& x) {
    return Eigen::Vector3d(std::exp(std::clamp(x(0), log_floor, log_ceiling)),
                           std::exp(std::clamp(x(1), log_floor, log_ceiling)),
                           std::exp(std::clamp(x(2), log_floor, log_ceiling)));
  };
  const Objective objective = [&](const Eigen::VectorXd& x) {
    const Eigen::Vector3d p = unpack(x);
    const auto m = CovarianceModel::make(family, p(0), p(1), p(2), smoothness);
    double loss = 0.0;
    for (const auto* b : used) {
      const double r = b->semivariance - m.semivariogram_at(b->lag);
      loss += static_cast<double>(b->count) * r * r;
    }
    return loss;
  };

  const double s0 = std::max(max_gamma, 1e-12);
  const double n0 = std::max(0.5 * first_gamma, 1e-3 * s0);
  const std::vector<Eigen::VectorXd> starts = {
      Eigen::Vector3d(std::log(s0), std::log(max_lag / 3.0), std::log(n0)),
      Eigen::Vector3d(std::log(s0), std::log(max_lag / 10.0), std::log(1e-3 * s0)),
      Eigen::Vector3d(std::log(s0), std::log(max_lag), std::log(1e-3 * s0)),
      Eigen::Vector3d(std::log(0.5 * s0), std::log(max_lag / 2.0), std::log(n0)),
      Eigen::Vector3d(std::log(2.0 * s0), std::log(max_lag / 5.0), std::log(0.1 * s0)),
  };
  const auto best = minimize_multistart(objective, starts, SimplexOptions{500, 1e-8, 0.5});
  if (!best.converged || !best.x.allFinite()) {
    throw Error(ErrorCode::FitDiverged, "variogram fit did not converge from any start");
  }
  const Eigen::Vector3d p = unpack(best.x);
  return CovarianceModel::make(family, p(0), p(1), p(2), smoothness);
}

Eigen::MatrixXd gram_matrix(const CovarianceModel& model, std::span<const Location> locations) {
  check_distinct(locations);
  return kernels::gram_matrix(model, locations);
}

Eigen::MatrixXd cross_covariance_matrix(const CovarianceModel& model, std::span<const Location> a,
                                        std::span<const Location> b) {
  return kernels::cross_covariance_matrix(model, a, b);
}

}  // namespace spatial
