#pragma once

// Brute-force reference computations for the tests. These deliberately take
// different numerical routes from the library (precision matrices, full LU,
// explicit KKT systems) so agreement is meaningful.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <gsl/gsl_cdf.h>
#include <gsl/gsl_randist.h>

#include "spatial/core.hpp"
#include "spatial/covariance.hpp"

namespace oracle {

using spatial::Location;

inline std::vector<Location> random_locations(std::size_t n, std::mt19937_64& rng, double lo = 0.0,
                                              double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<Location> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(Location{u(rng), u(rng)});
  return out;
}

inline Eigen::MatrixXd random_spd(Eigen::Index n, std::mt19937_64& rng, double ridge = 0.5) {
  std::normal_distribution<double> z;
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) a(i, j) = z(rng);
  Eigen::MatrixXd s = a * a.transpose() / static_cast<double>(n);
  s.diagonal().array() += ridge;
  return s;
}

inline Eigen::VectorXd normals(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> z;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = z(rng);
  return v;
}

/// Covariance C(|s_i - u_j|) with the nugget only on exact coincidence of index when `same`.
inline Eigen::MatrixXd dense_cov(const spatial::CovarianceModel& m, const std::vector<Location>& a,
                                 const std::vector<Location>& b, bool same) {
  Eigen::MatrixXd k(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double h = spatial::distance(a[i], b[j]);
      k(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          same && i == j ? m.sill() + m.nugget() : (h == 0.0 ? m.sill() : m.covariance_at(h));
    }
  return k;
}

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Conditional law of the unobserved coordinates of Y ~ N(mu, S) given
/// Z = Y[obs] + e, e ~ N(0, diag(noise)). Built as the joint of (Y, Z), inverted
/// in full by LU, and read off the precision blocks.
inline Moments condition(const Eigen::VectorXd& mu, const Eigen::MatrixXd& s, const std::vector<std::size_t>& obs,
                         const Eigen::VectorXd& z, const Eigen::VectorXd& noise) {
  const auto n = mu.size();
  const auto k = static_cast<Eigen::Index>(obs.size());
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  for (auto i : obs) seen[i] = true;
  std::vector<Eigen::Index> free;
  for (Eigen::Index i = 0; i < n; ++i)
    if (!seen[static_cast<std::size_t>(i)]) free.push_back(i);
  const auto f = static_cast<Eigen::Index>(free.size());

  // joint of (Y_free, Z)
  Eigen::MatrixXd j(f + k, f + k);
  Eigen::VectorXd m(f + k);
  for (Eigen::Index a = 0; a < f; ++a) {
    m(a) = mu(free[a]);
    for (Eigen::Index b = 0; b < f; ++b) j(a, b) = s(free[a], free[b]);
    for (Eigen::Index b = 0; b < k; ++b) j(a, f + b) = j(f + b, a) = s(free[a], static_cast<Eigen::Index>(obs[b]));
  }
  for (Eigen::Index a = 0; a < k; ++a) {
    m(f + a) = mu(static_cast<Eigen::Index>(obs[a]));
    for (Eigen::Index b = 0; b < k; ++b)
      j(f + a, f + b) = s(static_cast<Eigen::Index>(obs[a]), static_cast<Eigen::Index>(obs[b]));
    j(f + a, f + a) += noise(a);
  }
  const Eigen::MatrixXd prec = j.fullPivLu().inverse();
  const Eigen::MatrixXd puu = prec.topLeftCorner(f, f);
  const Eigen::MatrixXd puo = prec.topRightCorner(f, k);
  Moments out;
  out.cov = puu.fullPivLu().inverse();
  out.mean = m.head(f) - out.cov * puo * (z - m.tail(k));
  return out;
}

inline double log_density(const Eigen::VectorXd& mu, const Eigen::MatrixXd& s, const Eigen::VectorXd& x) {
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(s);
  const Eigen::VectorXd r = x - mu;
  double logdet = 0.0;
  const Eigen::MatrixXd u = lu.matrixLU().triangularView<Eigen::Upper>();
  for (Eigen::Index i = 0; i < s.rows(); ++i) logdet += std::log(std::abs(u(i, i)));
  return -0.5 * (static_cast<double>(s.rows()) * std::log(2.0 * std::numbers::pi) + logdet + r.dot(lu.solve(r)));
}

struct KktSolution {
  double predictor;
  double variance;
  Eigen::VectorXd weights;
};

/// Constrained least squares: min E(Y(s0) - l'Z)^2 subject to X' l = x0.
inline KktSolution kriging_kkt(const Eigen::MatrixXd& sigma, const Eigen::VectorXd& c0, double c00,
                               const Eigen::MatrixXd& x, const Eigen::VectorXd& x0, const Eigen::VectorXd& z) {
  const auto n = sigma.rows();
  const auto p = x.cols();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + p, n + p);
  a.topLeftCorner(n, n) = sigma;
  a.topRightCorner(n, p) = x;
  a.bottomLeftCorner(p, n) = x.transpose();
  Eigen::VectorXd rhs(n + p);
  rhs << c0, x0;
  const Eigen::VectorXd sol = a.fullPivLu().solve(rhs);
  KktSolution out;
  out.weights = sol.head(n);
  out.predictor = out.weights.dot(z);
  out.variance = c00 - out.weights.dot(c0) - sol.tail(p).dot(x0);
  return out;
}

/// Chi-square goodness of fit of integer draws to Poisson(mean); bins with
/// expected count < 5 are pooled into the two tails. Returns the p-value.
inline double poisson_gof_pvalue(const std::vector<long>& draws, double mean) {
  const double n = static_cast<double>(draws.size());
  long lo = 0;
  while (n * gsl_cdf_poisson_P(static_cast<unsigned>(lo), mean) < 5.0) ++lo;
  long hi = lo;
  while (n * gsl_cdf_poisson_Q(static_cast<unsigned>(hi), mean) >= 5.0) ++hi;
  // bins: (<= lo), lo+1 .. hi, (> hi)
  std::vector<double> obs(static_cast<std::size_t>(hi - lo + 2), 0.0);
  for (long k : draws) {
    const long b = k <= lo ? 0 : (k > hi ? hi - lo + 1 : k - lo);
    obs[static_cast<std::size_t>(b)] += 1.0;
  }
  double chi2 = 0.0;
  for (std::size_t b = 0; b < obs.size(); ++b) {
    double p;
    if (b == 0) p = gsl_cdf_poisson_P(static_cast<unsigned>(lo), mean);
    else if (b + 1 == obs.size()) p = gsl_cdf_poisson_Q(static_cast<unsigned>(hi), mean);
    else p = gsl_ran_poisson_pdf(static_cast<unsigned>(lo + static_cast<long>(b)), mean);
    const double e = n * p;
    chi2 += (obs[b] - e) * (obs[b] - e) / e;
  }
  return gsl_cdf_chisq_Q(chi2, static_cast<double>(obs.size() - 1));
}

}  // namespace oracle
