#include "spatial/kriging.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "spatial/kernels.hpp"
#include "spatial/optimize.hpp"

namespace spatial {

TrendSpec TrendSpec::intercept() {
  return TrendSpec({[](const Location&) { return 1.0; }});
}

TrendSpec TrendSpec::linear(std::size_t dim) {
  std::vector<Basis> b{[](const Location&) { return 1.0; }};
  for (std::size_t a = 0; a < dim; ++a) b.emplace_back([a](const Location& s) { return s[a]; });
  return TrendSpec(std::move(b));
}

TrendSpec TrendSpec::from_basis(std::vector<Basis> basis) {
  if (basis.empty()) throw Error(ErrorCode::InvalidParameter, "trend needs at least the constant term");
  return TrendSpec(std::move(basis));
}

Eigen::VectorXd TrendSpec::evaluate(const Location& s) const {
  Eigen::VectorXd x(static_cast<Eigen::Index>(basis_.size()));
  for (std::size_t j = 0; j < basis_.size(); ++j) x(static_cast<Eigen::Index>(j)) = basis_[j](s);
  if (!x.allFinite()) throw Error(ErrorCode::InvalidParameter, "trend basis is not finite");
  if (x(0) != 1.0) throw Error(ErrorCode::InvalidParameter, "first trend basis function must be 1");
  return x;
}

Eigen::MatrixXd TrendSpec::design(std::span<const Location> locations) const {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(locations.size()), static_cast<Eigen::Index>(basis_.size()));
  for (std::size_t i = 0; i < locations.size(); ++i) {
    x.row(static_cast<Eigen::Index>(i)) = evaluate(locations[i]).transpose();
  }
  return x;
}

// ---------------------------------------------------------------------------

KrigingSystem::KrigingSystem(const std::vector<Location>& locations, const Eigen::VectorXd& values,
                             const CovarianceModel& model, const Eigen::MatrixXd& design, double noise)
    : locations_(locations), model_(model), design_(design) {
  const auto n = static_cast<Eigen::Index>(locations.size());
  if (values.size() != n || (design.cols() > 0 && design.rows() != n)) {
    throw Error(ErrorCode::DimensionMismatch, "kriging inputs have inconsistent lengths");
  }
  if (!(noise >= 0.0)) throw Error(ErrorCode::InvalidParameter, "measurement noise must be >= 0");

  Eigen::MatrixXd sigma = gram_matrix(model, locations);
  sigma.diagonal().array() += noise;
  data_factor_ = factorize_spd(sigma, ErrorCode::SingularSystem, "data covariance");

  const auto p = design.cols();
  if (p == 0) {
    alpha_ = data_factor_.solve(values);
    return;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
  qr.setThreshold(1e-10);
  if (qr.rank() < p || n < p) {
    throw Error(ErrorCode::RankDeficientTrend, "trend design matrix is not of full column rank");
  }
  sigma_inv_x_ = data_factor_.solve(design);
  const Eigen::MatrixXd f = symmetrize(design.transpose() * sigma_inv_x_);
  gls_factor_.compute(f);
  if (gls_factor_.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularSystem, "GLS normal equations are singular");
  }
  beta_ = gls_factor_.solve(sigma_inv_x_.transpose() * values);
  alpha_ = data_factor_.solve(values - design * beta_);
}

KrigingResult KrigingSystem::predict(const Location& s0, const Eigen::VectorXd& x0) const {
  const auto n = static_cast<Eigen::Index>(locations_.size());
  if (x0.size() != design_.cols()) throw Error(ErrorCode::DimensionMismatch, "trend row has wrong length");
  if (s0.dim() != locations_.front().dim()) {
    throw Error(ErrorCode::DimensionMismatch, "target dimension differs from data");
  }
  Eigen::VectorXd c0(n);
  for (Eigen::Index i = 0; i < n; ++i) c0(i) = model_.cross_at(distance(locations_[static_cast<std::size_t>(i)], s0));

  const Eigen::VectorXd w = data_factor_.solve(c0);
  KrigingResult r;
  r.predictor = c0.dot(alpha_);
  double var = model_.variance() - c0.dot(w);
  if (design_.cols() > 0) {
    const Eigen::VectorXd u = x0 - design_.transpose() * w;
    const Eigen::VectorXd f_inv_u = gls_factor_.solve(u);
    r.predictor += x0.dot(beta_);
    var += u.dot(f_inv_u);
    r.weights = w + sigma_inv_x_ * f_inv_u;
  } else {
    r.weights = w;
  }
  const double tol = 1e-10 * std::max(1.0, model_.variance());
  if (var < -tol) throw Error(ErrorCode::SingularSystem, "negative kriging variance");
  r.variance = std::max(var, 0.0);
  return r;
}

// ---------------------------------------------------------------------------

KrigingResult simple_kriging(const SpatialDataset& data, const CovarianceModel& model,
                             const MeanFunction& mean, const Location& s0, double noise) {
  Eigen::VectorXd centred = data.values();
  for (std::size_t i = 0; i < data.size(); ++i) centred(static_cast<Eigen::Index>(i)) -= mean(data.locations()[i]);
  const KrigingSystem sys(data.locations(), centred, model, Eigen::MatrixXd(data.size(), 0), noise);
  auto r = sys.predict(s0, Eigen::VectorXd());
  r.predictor += mean(s0);
  return r;
}

KrigingResult ordinary_kriging(const SpatialDataset& data, const CovarianceModel& model,
                               const Location& s0, double noise) {
  return universal_kriging(data, model, TrendSpec::intercept(), s0, noise);
}

KrigingResult universal_kriging(const SpatialDataset& data, const CovarianceModel& model,
                                const TrendSpec& trend, const Location& s0, double noise) {
  const KrigingSystem sys(data.locations(), data.values(), model, trend.design(data.locations()), noise);
  return sys.predict(s0, trend.evaluate(s0));
}

KrigingResult universal_kriging(const SpatialDataset& data, const CovarianceModel& model,
                                const Eigen::VectorXd& x0, const Location& s0, double noise) {
  if (!data.covariates()) throw Error(ErrorCode::InvalidParameter, "dataset carries no covariates");
  const KrigingSystem sys(data.locations(), data.values(), model, *data.covariates(), noise);
  return sys.predict(s0, x0);
}

// ---------------------------------------------------------------------------

double profile_log_likelihood(const SpatialDataset& data, const CovarianceModel& model,
                              const Eigen::MatrixXd& design, Eigen::VectorXd* beta_out) {
  const Eigen::MatrixXd sigma = gram_matrix(model, data.locations());
  Eigen::LLT<Eigen::MatrixXd> llt(sigma);
  if (llt.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Eigen::MatrixXd si_x = llt.solve(design);
  Eigen::LLT<Eigen::MatrixXd> f(symmetrize(design.transpose() * si_x));
  if (f.info() != Eigen::Success) return -std::numeric_limits<double>::infinity();
  const Eigen::VectorXd beta = f.solve(si_x.transpose() * data.values());
  const Eigen::VectorXd r = data.values() - design * beta;
  const Eigen::VectorXd w = llt.matrixL().solve(r);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  if (beta_out) *beta_out = beta;
  const double n = static_cast<double>(data.size());
  return -0.5 * (n * std::log(2.0 * std::numbers::pi) + logdet + w.squaredNorm());
}

MleFit fit_mle(const SpatialDataset& data, Family family, const TrendSpec& trend, double smoothness) {
  const std::size_t n = data.size();
  const std::size_t p = trend.size();
  if (n < p + 2) {
    throw Error(ErrorCode::TooFewObservations,
                "need at least p + 2 = " + std::to_string(p + 2) + " observations");
  }
  const Eigen::MatrixXd x = trend.design(data.locations());
  const Eigen::VectorXd ols = x.colPivHouseholderQr().solve(data.values());
  const Eigen::VectorXd resid = data.values() - x * ols;
  const double v = std::max(resid.squaredNorm() / static_cast<double>(n - p), 1e-12);

  double extent = 0.0;
  for (std::size_t a = 0; a < data.dim(); ++a) {
    double lo = data.locations()[0][a], hi = lo;
    for (const auto& s : data.locations()) {
      lo = std::min(lo, s[a]);
      hi = std::max(hi, s[a]);
    }
    extent += (hi - lo) * (hi - lo);
  }
  extent = std::max(std::sqrt(extent), 1e-12);

  const Eigen::Vector3d lower(std::log(1e-8 * v), std::log(1e-6 * extent), std::log(1e-10 * v));
  const Eigen::Vector3d upper(std::log(1e3 * v), std::log(1e2 * extent), std::log(1e3 * v));
  auto unpack = [&](const Eigen::VectorXd& t) {
    return Eigen::Vector3d(std::exp(std::clamp(t(0), lower(0), upper(0))),
                           std::exp(std::clamp(t(1), lower(1), upper(1))),
                           std::exp(std::clamp(t(2), lower(2), upper(2))));
  };
  const Objective negll = [&](const Eigen::VectorXd& t) {
    const Eigen::Vector3d q = unpack(t);
    const auto m = CovarianceModel::make(family, q(0), q(1), q(2), smoothness);
    return -profile_log_likelihood(data, m, x);
  };
  auto start = [&](double s, double r, double g) {
    return Eigen::VectorXd(Eigen::Vector3d(std::log(s * v), std::log(r * extent), std::log(g * v)));
  };
  const std::vector<Eigen::VectorXd> starts = {
      start(0.9, 0.1, 0.1), start(0.5, 0.3, 0.5), start(0.9, 0.03, 0.1),
      start(0.1, 0.1, 0.9), start(1.0, 0.5, 0.01),
  };
  const auto best = minimize_multistart(negll, starts, SimplexOptions{500, 1e-8, 0.5});
  if (!std::isfinite(best.value) || best.value >= std::numeric_limits<double>::max()) {
    throw Error(ErrorCode::FitDiverged, "likelihood could not be evaluated from any start");
  }
  const Eigen::Vector3d q = unpack(best.x);
  MleFit fit{CovarianceModel::make(family, q(0), q(1), q(2), smoothness), Eigen::VectorXd(), 0.0,
             best.converged};
  fit.log_likelihood = profile_log_likelihood(data, fit.model, x, &fit.beta);
  return fit;
}

// ---------------------------------------------------------------------------

PredictionMap kriging_map(const SpatialDataset& data, const CovarianceModel& model,
                          const TrendSpec& trend, const BauGrid& grid, double noise) {
  const KrigingSystem sys(data.locations(), data.values(), model, trend.design(data.locations()), noise);
  const auto targets = grid.centroids();
  const Eigen::MatrixXd x0 = trend.design(targets);
  const auto results = kernels::predict_batch(sys, targets, x0);
  PredictionMap map{grid, {}, {}};
  map.predictions.reserve(results.size());
  map.standard_errors.reserve(results.size());
  for (const auto& r : results) {
    map.predictions.push_back(r.predictor);
    map.standard_errors.push_back(r.standard_error());
  }
  return map;
}

}  // namespace spatial
