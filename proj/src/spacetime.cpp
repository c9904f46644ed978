#include "spatial/spacetime.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "spatial/rng.hpp"

namespace spatial {

double st_covariance_at(const STCovariance& c, const Location& s, double t, const Location& u, double v) {
  return c.spatial.covariance_at(distance(s, u)) * c.temporal.covariance_at(std::abs(t - v));
}

void StateSpaceModel::validate() const {
  const auto m = transition.rows();
  if (m == 0 || transition.cols() != m || process_noise.rows() != m || process_noise.cols() != m ||
      observation_noise.size() != m || initial.mean.size() != m || initial.cov.rows() != m ||
      initial.cov.cols() != m) {
    throw Error(ErrorCode::DimensionMismatch, "state-space matrices have inconsistent dimensions");
  }
  if ((observation_noise.array() < 0.0).any()) {
    throw Error(ErrorCode::InvalidParameter, "observation noise must be >= 0");
  }
  if ((process_noise - process_noise.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, process_noise.cwiseAbs().maxCoeff())) {
    throw Error(ErrorCode::InvalidParameter, "process noise covariance must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(process_noise, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10 * std::max(1.0, process_noise.trace())) {
    throw Error(ErrorCode::NotPositiveDefinite, "process noise covariance is not PSD");
  }
  validate_gaussian(initial);
}

Eigen::MatrixXd lattice_transition(const NeighborhoodGraph& graph, double alpha, double delta) {
  const auto n = static_cast<Eigen::Index>(graph.size());
  Eigen::MatrixXd w = Eigen::MatrixXd(graph.weights());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = w.row(i).sum();
    if (s > 0.0) w.row(i) /= s;
  }
  return alpha * w + delta * Eigen::MatrixXd::Identity(n, n);
}

namespace {

// Any S with S S' = cov; falls back to the eigen square root for singular PSD input.
Eigen::MatrixXd psd_root(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(cov));
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

Eigen::VectorXd draw(Engine& rng, Eigen::Index m) {
  std::normal_distribution<double> normal;
  Eigen::VectorXd z(m);
  for (Eigen::Index i = 0; i < m; ++i) z(i) = normal(rng);
  return z;
}

}  // namespace

DynamicalSample simulate_dynamical(const StateSpaceModel& model, std::size_t k, std::uint64_t seed,
                                   const std::vector<std::vector<std::size_t>>& observed_nodes) {
  model.validate();
  if (k == 0) throw Error(ErrorCode::InvalidParameter, "k must be >= 1");
  if (!observed_nodes.empty() && observed_nodes.size() != k) {
    throw Error(ErrorCode::DimensionMismatch, "observed_nodes must have one entry per time step");
  }
  const auto m = static_cast<Eigen::Index>(model.state_dim());
  const Eigen::MatrixXd s0 = psd_root(model.initial.cov);
  const Eigen::MatrixXd sq = psd_root(model.process_noise);
  Engine rng(seed);
  DynamicalSample out;
  Eigen::VectorXd y = model.initial.mean + s0 * draw(rng, m);
  for (std::size_t t = 0; t < k; ++t) {
    if (t > 0) y = model.transition * y + sq * draw(rng, m);
    out.states.push_back(y);
    Observation obs;
    if (observed_nodes.empty()) {
      obs.nodes.resize(static_cast<std::size_t>(m));
      for (std::size_t i = 0; i < obs.nodes.size(); ++i) obs.nodes[i] = i;
    } else {
      obs.nodes = observed_nodes[t];
    }
    obs.values.resize(static_cast<Eigen::Index>(obs.nodes.size()));
    std::normal_distribution<double> normal;
    for (std::size_t a = 0; a < obs.nodes.size(); ++a) {
      const auto i = static_cast<Eigen::Index>(obs.nodes[a]);
      if (i >= m) throw Error(ErrorCode::DimensionMismatch, "observed node out of range");
      obs.values(static_cast<Eigen::Index>(a)) = y(i) + std::sqrt(model.observation_noise(i)) * normal(rng);
    }
    out.observations.push_back(std::move(obs));
  }
  return out;
}

FilterOutput kalman_filter(const StateSpaceModel& model, const std::vector<Observation>& observations) {
  model.validate();
  const auto m = static_cast<Eigen::Index>(model.state_dim());
  const double log2pi = std::log(2.0 * std::numbers::pi);
  const Eigen::MatrixXd& mt = model.transition;
  FilterOutput out;
  Eigen::VectorXd mean = model.initial.mean;
  Eigen::MatrixXd cov = model.initial.cov;
  for (std::size_t t = 0; t < observations.size(); ++t) {
    if (t > 0) {
      mean = mt * mean;
      cov = symmetrize(mt * cov * mt.transpose() + model.process_noise);
    }
    out.forecast_means.push_back(mean);
    out.forecast_covs.push_back(cov);

    const auto& obs = observations[t];
    const auto p = static_cast<Eigen::Index>(obs.nodes.size());
    if (obs.values.size() != p) throw Error(ErrorCode::DimensionMismatch, "observation nodes/values mismatch");
    if (p > 0) {
      Eigen::MatrixXd h = Eigen::MatrixXd::Zero(p, m);
      Eigen::VectorXd r(p);
      for (Eigen::Index a = 0; a < p; ++a) {
        const auto i = static_cast<Eigen::Index>(obs.nodes[static_cast<std::size_t>(a)]);
        if (i >= m) throw Error(ErrorCode::DimensionMismatch, "observed node " + std::to_string(i) + " out of range");
        h(a, i) = 1.0;
        r(a) = model.observation_noise(i);
      }
      const Eigen::MatrixXd ph = cov * h.transpose();
      Eigen::MatrixXd s = symmetrize(h * ph);
      s.diagonal() += r;
      Eigen::LLT<Eigen::MatrixXd> llt(s);
      if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::NonPositiveInnovationCovariance, "innovation covariance at t=" +
                                                                    std::to_string(t + 1) + " is not PD");
      }
      const Eigen::VectorXd innov = obs.values - h * mean;
      const Eigen::MatrixXd gain = llt.solve(ph.transpose()).transpose();
      mean += gain * innov;
      // Joseph form
      const Eigen::MatrixXd a = Eigen::MatrixXd::Identity(m, m) - gain * h;
      cov = symmetrize(a * cov * a.transpose() + gain * r.asDiagonal() * gain.transpose());

      const Eigen::VectorXd w = llt.matrixL().solve(innov);
      const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
      out.log_likelihood += -0.5 * (static_cast<double>(p) * log2pi + logdet + w.squaredNorm());
    }
    out.filtered_means.push_back(mean);
    out.filtered_covs.push_back(cov);
  }
  return out;
}

SmootherOutput kalman_smooth(const StateSpaceModel& model, const FilterOutput& f) {
  const std::size_t k = f.filtered_means.size();
  SmootherOutput out;
  out.means = f.filtered_means;
  out.covs = f.filtered_covs;
  if (k == 0) return out;
  const Eigen::MatrixXd& mt = model.transition;
  for (std::size_t t = k - 1; t-- > 0;) {
    const Eigen::MatrixXd& pred = f.forecast_covs[t + 1];
    const Eigen::MatrixXd cross = mt * f.filtered_covs[t];  // cov(Y_{t+1}, Y_t | Z_1..t)
    Eigen::MatrixXd gain;
    Eigen::LLT<Eigen::MatrixXd> llt(pred);
    if (llt.info() == Eigen::Success) {
      gain = llt.solve(cross).transpose();
    } else {
      gain = pred.completeOrthogonalDecomposition().solve(cross).transpose();
    }
    out.means[t] = f.filtered_means[t] + gain * (out.means[t + 1] - f.forecast_means[t + 1]);
    out.covs[t] = symmetrize(f.filtered_covs[t] + gain * (out.covs[t + 1] - pred) * gain.transpose());
  }
  return out;
}

SmootherOutput kalman_smooth(const StateSpaceModel& model, const std::vector<Observation>& observations) {
  return kalman_smooth(model, kalman_filter(model, observations));
}

SmootherOutput kalman_forecast(const StateSpaceModel& model, const FilterOutput& f, std::size_t horizon) {
  if (horizon == 0) throw Error(ErrorCode::InvalidParameter, "horizon must be >= 1");
  if (f.filtered_means.empty()) throw Error(ErrorCode::InvalidParameter, "filter output is empty");
  const Eigen::MatrixXd& mt = model.transition;
  Eigen::VectorXd mean = f.filtered_means.back();
  Eigen::MatrixXd cov = f.filtered_covs.back();
  SmootherOutput out;
  for (std::size_t h = 0; h < horizon; ++h) {
    mean = mt * mean;
    cov = symmetrize(mt * cov * mt.transpose() + model.process_noise);
    out.means.push_back(mean);
    out.covs.push_back(cov);
  }
  return out;
}

Eigen::MatrixXd stacked_state_covariance(const StateSpaceModel& model, std::size_t k) {
  model.validate();
  const auto m = static_cast<Eigen::Index>(model.state_dim());
  const auto kk = static_cast<Eigen::Index>(k);
  const Eigen::MatrixXd& mt = model.transition;
  std::vector<Eigen::MatrixXd> marginal{model.initial.cov};
  for (std::size_t t = 1; t < k; ++t) {
    marginal.push_back(mt * marginal.back() * mt.transpose() + model.process_noise);
  }
  Eigen::MatrixXd out(m * kk, m * kk);
  for (Eigen::Index s = 0; s < kk; ++s) {
    Eigen::MatrixXd block = marginal[static_cast<std::size_t>(s)];  // cov(Y_t, Y_s) = M^(t-s) P_s
    for (Eigen::Index t = s; t < kk; ++t) {
      out.block(t * m, s * m, m, m) = block;
      out.block(s * m, t * m, m, m) = block.transpose();
      block = mt * block;
    }
  }
  return out;
}

}  // namespace spatial
