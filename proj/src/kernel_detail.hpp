#pragma once

// Per-item bodies shared by the threaded kernels and their serial twins, so
// both produce the same bits.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>

#include "spatial/kernels.hpp"
#include "spatial/rng.hpp"

namespace spatial::detail {

// Fixed row blocks make reductions independent of the thread count.
inline constexpr std::size_t kBlockRows = 32;

inline std::size_t block_count(std::size_t n) { return (n + kBlockRows - 1) / kBlockRows; }

inline void gram_row(const CovarianceModel& model, std::span<const Location> locs, std::size_t i,
                     Eigen::MatrixXd& out) {
  const auto ii = static_cast<Eigen::Index>(i);
  out(ii, ii) = model.covariance_at(0.0);
  for (std::size_t j = i + 1; j < locs.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double c = model.covariance_at(distance(locs[i], locs[j]));
    out(ii, jj) = c;
    out(jj, ii) = c;
  }
}

inline void cross_row(const CovarianceModel& model, std::span<const Location> a, std::span<const Location> b,
                      std::size_t i, Eigen::MatrixXd& out) {
  for (std::size_t j = 0; j < b.size(); ++j) {
    out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = model.cross_at(distance(a[i], b[j]));
  }
}

inline void variogram_block(std::span<const Location> locs, const Eigen::VectorXd& values, std::size_t n_bins,
                            double max_lag, std::size_t block, VariogramSums& acc) {
  acc.counts.assign(n_bins, 0);
  acc.distance_sums.assign(n_bins, 0.0);
  acc.squared_increment_sums.assign(n_bins, 0.0);
  const double width = max_lag / static_cast<double>(n_bins);
  const std::size_t end = std::min(locs.size(), (block + 1) * kBlockRows);
  for (std::size_t i = block * kBlockRows; i < end; ++i) {
    for (std::size_t j = i + 1; j < locs.size(); ++j) {
      const double d = distance(locs[i], locs[j]);
      if (d > max_lag) continue;
      const auto b = std::min(static_cast<std::size_t>(d / width), n_bins - 1);
      const double dz = values(static_cast<Eigen::Index>(i)) - values(static_cast<Eigen::Index>(j));
      acc.counts[b] += 1;
      acc.distance_sums[b] += d;
      acc.squared_increment_sums[b] += dz * dz;
    }
  }
}

inline void merge(VariogramSums& into, const VariogramSums& part) {
  for (std::size_t b = 0; b < into.counts.size(); ++b) {
    into.counts[b] += part.counts[b];
    into.distance_sums[b] += part.distance_sums[b];
    into.squared_increment_sums[b] += part.squared_increment_sums[b];
  }
}

inline KrigingResult predict_one(const KrigingSystem& sys, std::span<const Location> targets,
                                 const Eigen::MatrixXd& x0, std::size_t t) {
  const Eigen::VectorXd row = x0.row(static_cast<Eigen::Index>(t)).transpose();
  return sys.predict(targets[t], row);
}

inline Eigen::VectorXd car_sample(const CarModel& model, std::uint64_t seed, std::size_t s) {
  const auto n = static_cast<Eigen::Index>(model.size());
  Eigen::VectorXd z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = counter_normal(seed, s, static_cast<std::uint64_t>(i));
  // P Q P' = L L'  =>  x = P' L'^-1 z has covariance Q^-1
  const auto& f = model.factor();
  const Eigen::VectorXd y = f.matrixU().solve(z);
  return f.permutationPinv() * y;
}

inline double gibbs_node(const RowMajorSparse& c, const Eigen::VectorXd& sd, std::uint64_t seed,
                         std::uint64_t stream, const Eigen::VectorXd& state, std::size_t node) {
  const auto i = static_cast<Eigen::Index>(node);
  double m = 0.0;
  for (RowMajorSparse::InnerIterator it(c, i); it; ++it) m += it.value() * state(it.col());
  return m + sd(i) * counter_normal(seed, stream, node);
}

inline void k_block(std::span<const Location> points, const Window& window, std::span<const double> radii,
                    std::size_t block, std::vector<double>& sums) {
  sums.assign(radii.size(), 0.0);
  const double area = window.volume();
  const std::size_t end = std::min(points.size(), (block + 1) * kBlockRows);
  const double r_max = radii.empty() ? 0.0 : radii.back();
  for (std::size_t i = block * kBlockRows; i < end; ++i) {
    for (std::size_t j = 0; j < points.size(); ++j) {
      if (j == i) continue;
      const double d = distance(points[i], points[j]);
      if (d > r_max) continue;
      const Location shift{points[j][0] - points[i][0], points[j][1] - points[i][1]};
      const double overlap = window.overlap_with_shift(shift);
      if (!(overlap > 0.0)) continue;
      const double w = area / overlap;
      for (std::size_t r = 0; r < radii.size(); ++r) {
        if (d <= radii[r]) sums[r] += w;
      }
    }
  }
}

inline void kernel_row(const InteractionKernel& kernel, std::span<const Location> a,
                       std::span<const Location> nodes, const Eigen::VectorXd& weights, std::size_t i,
                       Eigen::MatrixXd& out) {
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    out(static_cast<Eigen::Index>(i), jj) = kernel(a[i], nodes[j]) * weights(jj);
  }
}

// q nearest among candidates [0, limit) (skipping nothing), ties to the lower index;
// returned in ascending index order.
inline std::vector<std::size_t> nearest(std::span<const Location> pool, std::size_t limit, const Location& s,
                                        std::size_t q) {
  const std::size_t m = std::min(q, limit);
  if (m == 0) return {};
  std::vector<std::pair<double, std::size_t>> cand(limit);
  for (std::size_t j = 0; j < limit; ++j) cand[j] = {distance(pool[j], s), j};
  std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(m), cand.end());
  std::vector<std::size_t> out(m);
  for (std::size_t j = 0; j < m; ++j) out[j] = cand[j].second;
  std::sort(out.begin(), out.end());
  return out;
}

enum class Fit { Ok, SingularBlock, NonPositiveResidual };

// Conditional regression of a node on its neighbours.
inline Fit regress(const CovarianceModel& model, std::span<const Location> pool,
                    const std::vector<std::size_t>& nb, const Location& s, double noise, double self_var,
                    Eigen::VectorXd& coef, double& resid) {
  const auto m = static_cast<Eigen::Index>(nb.size());
  coef.resize(m);
  if (m == 0) {
    resid = self_var;
    return resid > 0.0 ? Fit::Ok : Fit::NonPositiveResidual;
  }
  Eigen::MatrixXd cnn(m, m);
  Eigen::VectorXd c(m);
  for (Eigen::Index a = 0; a < m; ++a) {
    const auto& la = pool[nb[static_cast<std::size_t>(a)]];
    cnn(a, a) = model.variance() + noise;
    for (Eigen::Index b = a + 1; b < m; ++b) {
      cnn(a, b) = cnn(b, a) = model.cross_at(distance(la, pool[nb[static_cast<std::size_t>(b)]]));
    }
    c(a) = model.cross_at(distance(la, s));
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cnn);
  if (llt.info() != Eigen::Success) return Fit::SingularBlock;
  coef = llt.solve(c);
  resid = self_var - c.dot(coef);
  return resid > 1e-12 * self_var ? Fit::Ok : Fit::NonPositiveResidual;
}

inline Error neighbor_error(std::size_t k) {
  return Error(ErrorCode::SingularNeighborBlock,
               "conditioning set of node " + std::to_string(k) + " is numerically singular");
}


inline void vecchia_predict_one(const CovarianceModel& model, std::span<const Location> data,
                                const Eigen::VectorXd& values, std::span<const Location> targets,
                                const Neighbors& neighbors, double noise, double mean, std::size_t t,
                                Eigen::VectorXd& out_mean, Eigen::VectorXd& out_var) {
  const auto& nb = neighbors[t];
  Eigen::VectorXd coef;
  double resid = 0.0;
  const double var = model.variance();
  // A target on a noiseless datum legitimately has zero residual.
  if (regress(model, data, nb, targets[t], noise, var, coef, resid) == Fit::SingularBlock ||
      resid < -1e-10 * std::max(1.0, var)) {
    throw neighbor_error(t);
  }
  double m = mean;
  for (std::size_t j = 0; j < nb.size(); ++j) {
    m += coef(static_cast<Eigen::Index>(j)) * (values(static_cast<Eigen::Index>(nb[j])) - mean);
  }
  const auto tt = static_cast<Eigen::Index>(t);
  out_mean(tt) = m;
  out_var(tt) = std::max(resid, 0.0);
}

}  // namespace spatial::detail
