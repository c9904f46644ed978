#pragma once

// Batch oracle for the state-space model: the stacked joint of all states and
// observations, conditioned by brute force.

#include <random>
#include <vector>

#include <Eigen/Dense>

#include "oracles.hpp"
#include "spatial/spacetime.hpp"

namespace oracle {

using spatial::Observation;
using spatial::StateSpaceModel;

inline StateSpaceModel random_model(Eigen::Index m, std::mt19937_64& rng) {
  StateSpaceModel s;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m, m);
  std::normal_distribution<double> z;
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j) a(i, j) = z(rng);
  s.transition = 0.9 * a / a.operatorNorm();
  s.process_noise = random_spd(m, rng, 0.2);
  s.observation_noise = (normals(m, rng).array().abs() + 0.1).matrix();
  s.initial = {normals(m, rng), random_spd(m, rng, 0.5)};
  return s;
}

inline std::vector<Observation> random_observations(Eigen::Index m, std::size_t k, std::mt19937_64& rng) {
  std::vector<Observation> out(k);
  std::bernoulli_distribution keep(0.6);
  for (std::size_t t = 0; t < k; ++t) {
    for (Eigen::Index i = 0; i < m; ++i)
      if (keep(rng)) out[t].nodes.push_back(static_cast<std::size_t>(i));
    out[t].values = normals(static_cast<Eigen::Index>(out[t].nodes.size()), rng);
  }
  return out;
}

// Stacked joint of (Y_1..Y_T, Z) built as Y = A eta with independent innovations.
struct Batch {
  Eigen::VectorXd mean;      // over Y and Z
  Eigen::MatrixXd cov;
  Eigen::Index y_dim = 0;
  std::vector<std::size_t> z_index;  // positions of Z in the augmented vector
  std::vector<std::size_t> z_time;
  Eigen::VectorXd z;
};

inline Batch batch(const StateSpaceModel& s, const std::vector<Observation>& obs, std::size_t horizon) {
  const auto m = s.transition.rows();
  const auto T = static_cast<Eigen::Index>(obs.size() + horizon);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m * T, m * T);
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(m * T, m * T);
  Eigen::VectorXd mu(m * T);
  for (Eigen::Index t = 0; t < T; ++t) {
    d.block(t * m, t * m, m, m) = t == 0 ? s.initial.cov : s.process_noise;
    Eigen::MatrixXd pow = Eigen::MatrixXd::Identity(m, m);
    for (Eigen::Index u = t; u < T; ++u) {
      a.block(u * m, t * m, m, m) = pow;
      pow = s.transition * pow;
    }
  }
  Eigen::VectorXd mt = s.initial.mean;
  for (Eigen::Index t = 0; t < T; ++t) {
    mu.segment(t * m, m) = mt;
    mt = s.transition * mt;
  }
  const Eigen::MatrixXd sy = a * d * a.transpose();
  std::vector<Eigen::Index> rows;
  std::vector<double> r, vals;
  Batch b;
  for (std::size_t t = 0; t < obs.size(); ++t)
    for (std::size_t q = 0; q < obs[t].nodes.size(); ++q) {
      rows.push_back(static_cast<Eigen::Index>(t) * m + static_cast<Eigen::Index>(obs[t].nodes[q]));
      r.push_back(s.observation_noise(static_cast<Eigen::Index>(obs[t].nodes[q])));
      vals.push_back(obs[t].values(static_cast<Eigen::Index>(q)));
      b.z_time.push_back(t);
    }
  const auto p = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(p, m * T);
  for (Eigen::Index i = 0; i < p; ++i) h(i, rows[static_cast<std::size_t>(i)]) = 1.0;
  b.y_dim = m * T;
  b.cov.resize(m * T + p, m * T + p);
  b.cov << sy, sy * h.transpose(), h * sy, h * sy * h.transpose();
  for (Eigen::Index i = 0; i < p; ++i) b.cov(m * T + i, m * T + i) += r[static_cast<std::size_t>(i)];
  b.mean.resize(m * T + p);
  b.mean << mu, h * mu;
  b.z = Eigen::Map<Eigen::VectorXd>(vals.data(), p);
  for (Eigen::Index i = 0; i < p; ++i) b.z_index.push_back(static_cast<std::size_t>(m * T + i));
  return b;
}

// Moments of Y given the observations made at times < until.
inline Moments condition_until(const Batch& b, std::size_t until) {
  std::vector<std::size_t> idx;
  std::vector<double> vals;
  for (std::size_t i = 0; i < b.z_index.size(); ++i)
    if (b.z_time[i] < until) {
      idx.push_back(b.z_index[i]);
      vals.push_back(b.z(static_cast<Eigen::Index>(i)));
    }
  // drop Z coordinates that are not conditioned on
  std::vector<Eigen::Index> keep;
  for (Eigen::Index i = 0; i < b.y_dim; ++i) keep.push_back(i);
  for (auto i : idx) keep.push_back(static_cast<Eigen::Index>(i));
  const auto n = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd s(n, n);
  Eigen::VectorXd mu(n);
  for (Eigen::Index a = 0; a < n; ++a) {
    mu(a) = b.mean(keep[static_cast<std::size_t>(a)]);
    for (Eigen::Index c = 0; c < n; ++c) s(a, c) = b.cov(keep[static_cast<std::size_t>(a)], keep[static_cast<std::size_t>(c)]);
  }
  std::vector<std::size_t> obs;
  for (std::size_t i = 0; i < idx.size(); ++i) obs.push_back(static_cast<std::size_t>(b.y_dim) + i);
  const auto k = static_cast<Eigen::Index>(obs.size());
  return condition(mu, s, obs, Eigen::Map<Eigen::VectorXd>(vals.data(), k), Eigen::VectorXd::Zero(k));
}

}  // namespace oracle
