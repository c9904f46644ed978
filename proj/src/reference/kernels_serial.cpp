#include "spatial/kernels.hpp"

#include "../kernel_detail.hpp"

namespace spatial::reference {

Eigen::MatrixXd gram_matrix(const CovarianceModel& model, std::span<const Location> locs) {
  const auto n = static_cast<Eigen::Index>(locs.size());
  Eigen::MatrixXd out(n, n);
  for (std::size_t i = 0; i < locs.size(); ++i) detail::gram_row(model, locs, i, out);
  return out;
}

Eigen::MatrixXd cross_covariance_matrix(const CovarianceModel& model, std::span<const Location> a,
                                        std::span<const Location> b) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < a.size(); ++i) detail::cross_row(model, a, b, i, out);
  return out;
}

VariogramSums variogram_accumulate(std::span<const Location> locs, const Eigen::VectorXd& values,
                                   std::size_t n_bins, double max_lag) {
  VariogramSums total{std::vector<std::size_t>(n_bins, 0), std::vector<double>(n_bins, 0.0),
                      std::vector<double>(n_bins, 0.0)};
  VariogramSums part;
  for (std::size_t b = 0; b < detail::block_count(locs.size()); ++b) {
    detail::variogram_block(locs, values, n_bins, max_lag, b, part);
    detail::merge(total, part);
  }
  return total;
}

std::vector<KrigingResult> predict_batch(const KrigingSystem& sys, std::span<const Location> targets,
                                         const Eigen::MatrixXd& x0) {
  std::vector<KrigingResult> out;
  out.reserve(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t) out.push_back(detail::predict_one(sys, targets, x0, t));
  return out;
}

Eigen::MatrixXd car_exact_samples(const CarModel& model, std::size_t n, std::uint64_t seed) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(model.size()));
  for (std::size_t s = 0; s < n; ++s) out.row(static_cast<Eigen::Index>(s)) = detail::car_sample(model, seed, s).transpose();
  return out;
}

void gibbs_color_update(const RowMajorSparse& c, const Eigen::VectorXd& sd, const std::vector<std::size_t>& nodes,
                        std::uint64_t seed, std::uint64_t stream, Eigen::VectorXd& state) {
  for (auto node : nodes) state(static_cast<Eigen::Index>(node)) = detail::gibbs_node(c, sd, seed, stream, state, node);
}

std::vector<double> k_function_sums(std::span<const Location> points, const Window& window,
                                    std::span<const double> radii) {
  std::vector<double> total(radii.size(), 0.0);
  std::vector<double> part;
  for (std::size_t b = 0; b < detail::block_count(points.size()); ++b) {
    detail::k_block(points, window, radii, b, part);
    for (std::size_t r = 0; r < total.size(); ++r) total[r] += part[r];
  }
  return total;
}

std::vector<double> monte_carlo(std::size_t n, const std::function<double(std::size_t)>& fn) {
  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = fn(k);
  return out;
}

Eigen::MatrixXd kernel_matrix(const InteractionKernel& kernel, std::span<const Location> a,
                              std::span<const Location> nodes, const Eigen::VectorXd& weights) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(a.size()), static_cast<Eigen::Index>(nodes.size()));
  for (std::size_t i = 0; i < a.size(); ++i) detail::kernel_row(kernel, a, nodes, weights, i, out);
  return out;
}

void maxmin_update(std::span<const Location> locs, const Location& added, std::vector<double>& min_dist) {
  for (std::size_t k = 0; k < locs.size(); ++k) min_dist[k] = std::min(min_dist[k], distance(locs[k], added));
}

Neighbors nearest_predecessors(std::span<const Location> locs, std::size_t q) {
  Neighbors out(locs.size());
  for (std::size_t k = 0; k < locs.size(); ++k) out[k] = detail::nearest(locs, k, locs[k], q);
  return out;
}

Neighbors nearest_data(std::span<const Location> data, std::span<const Location> targets, std::size_t q) {
  Neighbors out(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t) out[t] = detail::nearest(data, data.size(), targets[t], q);
  return out;
}

void vecchia_node_factors(const CovarianceModel& model, std::span<const Location> locs, const Neighbors& neighbors,
                          double noise, std::vector<Eigen::VectorXd>& coefficients,
                          Eigen::VectorXd& residual_variances) {
  coefficients.resize(locs.size());
  residual_variances.resize(static_cast<Eigen::Index>(locs.size()));
  for (std::size_t k = 0; k < locs.size(); ++k) {
    double resid = 0.0;
    if (detail::regress(model, locs, neighbors[k], locs[k], noise, model.variance() + noise, coefficients[k],
                        resid) != detail::Fit::Ok) {
      throw detail::neighbor_error(k);
    }
    residual_variances(static_cast<Eigen::Index>(k)) = resid;
  }
}

void vecchia_predict_batch(const CovarianceModel& model, std::span<const Location> data,
                           const Eigen::VectorXd& values, std::span<const Location> targets,
                           const Neighbors& neighbors, double noise, double mean, Eigen::VectorXd& out_mean,
                           Eigen::VectorXd& out_var) {
  out_mean.resize(static_cast<Eigen::Index>(targets.size()));
  out_var.resize(static_cast<Eigen::Index>(targets.size()));
  for (std::size_t t = 0; t < targets.size(); ++t) {
    detail::vecchia_predict_one(model, data, values, targets, neighbors, noise, mean, t, out_mean, out_var);
  }
}

}  // namespace spatial::reference
