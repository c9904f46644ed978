#include "spatial/kernels.hpp"

#include <exception>

#include "kernel_detail.hpp"

namespace spatial::kernels {

namespace {

// Runs body(i) for i in [0, n) across threads. Exceptions cannot leave an
// OpenMP region, so they are parked and the one with the lowest index is
// rethrown, matching what a serial loop would raise.
template <class Body>
void parallel_for(std::size_t n, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

Eigen::MatrixXd gram_matrix(const CovarianceModel& model, std::span<const Location> locs) {
  const auto n = static_cast<Eigen::Index>(locs.size());
  Eigen::MatrixXd out(n, n);
  parallel_for(locs.size(), [&](std::size_t i) { detail::gram_row(model, locs, i, out); });
  return out;
}

Eigen::MatrixXd cross_covariance_matrix(const CovarianceModel& model, std::span<const Location> a,
                                        std::span<const Location> b) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  parallel_for(a.size(), [&](std::size_t i) { detail::cross_row(model, a, b, i, out); });
  return out;
}

VariogramSums variogram_accumulate(std::span<const Location> locs, const Eigen::VectorXd& values,
                                   std::size_t n_bins, double max_lag) {
  const std::size_t blocks = detail::block_count(locs.size());
  std::vector<VariogramSums> parts(blocks);
  parallel_for(blocks, [&](std::size_t b) { detail::variogram_block(locs, values, n_bins, max_lag, b, parts[b]); });
  VariogramSums total{std::vector<std::size_t>(n_bins, 0), std::vector<double>(n_bins, 0.0),
                      std::vector<double>(n_bins, 0.0)};
  for (const auto& p : parts) detail::merge(total, p);
  return total;
}

std::vector<KrigingResult> predict_batch(const KrigingSystem& sys, std::span<const Location> targets,
                                         const Eigen::MatrixXd& x0) {
  std::vector<KrigingResult> out(targets.size());
  parallel_for(targets.size(), [&](std::size_t t) { out[t] = detail::predict_one(sys, targets, x0, t); });
  return out;
}

Eigen::MatrixXd car_exact_samples(const CarModel& model, std::size_t n, std::uint64_t seed) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(model.size()));
  parallel_for(n, [&](std::size_t s) {
    out.row(static_cast<Eigen::Index>(s)) = detail::car_sample(model, seed, s).transpose();
  });
  return out;
}

void gibbs_color_update(const RowMajorSparse& c, const Eigen::VectorXd& sd, const std::vector<std::size_t>& nodes,
                        std::uint64_t seed, std::uint64_t stream, Eigen::VectorXd& state) {
  // Nodes of one colour share no edge, so each reads only the other colour.
  const auto count = static_cast<std::ptrdiff_t>(nodes.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t k = 0; k < count; ++k) {
    const auto node = nodes[static_cast<std::size_t>(k)];
    state(static_cast<Eigen::Index>(node)) = detail::gibbs_node(c, sd, seed, stream, state, node);
  }
}

std::vector<double> k_function_sums(std::span<const Location> points, const Window& window,
                                    std::span<const double> radii) {
  const std::size_t blocks = detail::block_count(points.size());
  std::vector<std::vector<double>> parts(blocks);
  parallel_for(blocks, [&](std::size_t b) { detail::k_block(points, window, radii, b, parts[b]); });
  std::vector<double> total(radii.size(), 0.0);
  for (const auto& p : parts) {
    for (std::size_t r = 0; r < total.size(); ++r) total[r] += p[r];
  }
  return total;
}

std::vector<double> monte_carlo(std::size_t n, const std::function<double(std::size_t)>& fn) {
  std::vector<double> out(n);
  parallel_for(n, [&](std::size_t k) { out[k] = fn(k); });
  return out;
}

Eigen::MatrixXd kernel_matrix(const InteractionKernel& kernel, std::span<const Location> a,
                              std::span<const Location> nodes, const Eigen::VectorXd& weights) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(nodes.size()));
  parallel_for(a.size(), [&](std::size_t i) { detail::kernel_row(kernel, a, nodes, weights, i, out); });
  return out;
}

void maxmin_update(std::span<const Location> locs, const Location& added, std::vector<double>& min_dist) {
  const auto count = static_cast<std::ptrdiff_t>(locs.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    min_dist[k] = std::min(min_dist[k], distance(locs[k], added));
  }
}

Neighbors nearest_predecessors(std::span<const Location> locs, std::size_t q) {
  Neighbors out(locs.size());
  parallel_for(locs.size(), [&](std::size_t k) { out[k] = detail::nearest(locs, k, locs[k], q); });
  return out;
}

Neighbors nearest_data(std::span<const Location> data, std::span<const Location> targets, std::size_t q) {
  Neighbors out(targets.size());
  parallel_for(targets.size(), [&](std::size_t t) { out[t] = detail::nearest(data, data.size(), targets[t], q); });
  return out;
}

void vecchia_node_factors(const CovarianceModel& model, std::span<const Location> locs, const Neighbors& neighbors,
                          double noise, std::vector<Eigen::VectorXd>& coefficients,
                          Eigen::VectorXd& residual_variances) {
  coefficients.resize(locs.size());
  residual_variances.resize(static_cast<Eigen::Index>(locs.size()));
  parallel_for(locs.size(), [&](std::size_t k) {
    double resid = 0.0;
    if (detail::regress(model, locs, neighbors[k], locs[k], noise, model.variance() + noise, coefficients[k],
                        resid) != detail::Fit::Ok) {
      throw detail::neighbor_error(k);
    }
    residual_variances(static_cast<Eigen::Index>(k)) = resid;
  });
}

void vecchia_predict_batch(const CovarianceModel& model, std::span<const Location> data,
                           const Eigen::VectorXd& values, std::span<const Location> targets,
                           const Neighbors& neighbors, double noise, double mean, Eigen::VectorXd& out_mean,
                           Eigen::VectorXd& out_var) {
  out_mean.resize(static_cast<Eigen::Index>(targets.size()));
  out_var.resize(static_cast<Eigen::Index>(targets.size()));
  parallel_for(targets.size(), [&](std::size_t t) {
    detail::vecchia_predict_one(model, data, values, targets, neighbors, noise, mean, t, out_mean, out_var);
  });
}

}  // namespace spatial::kernels
