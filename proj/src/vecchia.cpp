#include "spatial/vecchia.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "spatial/kernels.hpp"

namespace spatial {

OrderingStrategy parse_ordering(const std::string& name) {
  if (name == "maxmin") return OrderingStrategy::MaxMin;
  if (name == "coordinate-sort") return OrderingStrategy::CoordinateSort;
  throw Error(ErrorCode::InvalidParameter, "ordering: unknown strategy '" + name + "'");
}

const char* to_string(OrderingStrategy s) noexcept {
  return s == OrderingStrategy::MaxMin ? "maxmin" : "coordinate-sort";
}

Ordering order_locations(std::span<const Location> locations, OrderingStrategy strategy) {
  check_distinct(locations);
  const std::size_t n = locations.size();
  Ordering out;
  out.strategy = strategy;
  out.order.resize(n);
  std::iota(out.order.begin(), out.order.end(), 0);
  if (n <= 1) return out;

  if (strategy == OrderingStrategy::CoordinateSort) {
    std::stable_sort(out.order.begin(), out.order.end(), [&](std::size_t a, std::size_t b) {
      const auto ca = locations[a].coords();
      const auto cb = locations[b].coords();
      return std::lexicographical_compare(ca.begin(), ca.end(), cb.begin(), cb.end());
    });
    return out;
  }

  const std::size_t d = locations.front().dim();
  std::array<double, 3> mid{};
  for (const auto& s : locations) {
    for (std::size_t a = 0; a < d; ++a) mid[a] += s[a] / static_cast<double>(n);
  }
  const Location centre(std::span<const double>(mid.data(), d));
  std::size_t first = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const double r = distance(locations[i], centre);
    if (r < best) {
      best = r;
      first = i;
    }
  }
  std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
  std::vector<bool> taken(n, false);
  std::size_t current = first;
  for (std::size_t k = 0; k < n; ++k) {
    out.order[k] = current;
    taken[current] = true;
    kernels::maxmin_update(locations, locations[current], min_dist);
    if (k + 1 == n) break;
    double far = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!taken[i] && min_dist[i] > far) {
        far = min_dist[i];
        current = i;
      }
    }
  }
  return out;
}

namespace {

std::vector<Location> ordered(const Ordering& ordering, std::span<const Location> locations) {
  if (ordering.order.size() != locations.size()) {
    throw Error(ErrorCode::DimensionMismatch, "ordering does not match the location count");
  }
  std::vector<Location> out;
  out.reserve(locations.size());
  for (auto i : ordering.order) out.push_back(locations[i]);
  return out;
}

}  // namespace

NeighborDag select_neighbors(const Ordering& ordering, std::span<const Location> locations, std::size_t q) {
  const auto locs = ordered(ordering, locations);
  NeighborDag dag;
  dag.bound = q;
  dag.neighbors = kernels::nearest_predecessors(locs, q);
  return dag;
}

VecchiaFactor build_vecchia_factor(const Ordering& ordering, const NeighborDag& dag,
                                   const CovarianceModel& model, std::span<const Location> locations,
                                   double noise, double mean) {
  if (!(noise >= 0.0)) throw Error(ErrorCode::InvalidParameter, "noise must be >= 0");
  const auto locs = ordered(ordering, locations);
  if (dag.neighbors.size() != locs.size()) throw Error(ErrorCode::DimensionMismatch, "DAG size mismatch");
  VecchiaFactor f;
  f.ordering = ordering;
  f.dag = dag;
  f.mean = mean;
  f.coefficients.resize(locs.size());
  f.residual_variances.resize(static_cast<Eigen::Index>(locs.size()));
  kernels::vecchia_node_factors(model, locs, dag.neighbors, noise, f.coefficients, f.residual_variances);
  return f;
}

double vecchia_loglik(const VecchiaFactor& f, const Eigen::VectorXd& values) {
  const std::size_t n = f.ordering.order.size();
  if (static_cast<std::size_t>(values.size()) != n) throw Error(ErrorCode::DimensionMismatch, "values length mismatch");
  Eigen::VectorXd x(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) x(static_cast<Eigen::Index>(k)) = values(static_cast<Eigen::Index>(f.ordering.order[k])) - f.mean;
  const double log2pi = std::log(2.0 * std::numbers::pi);
  double ll = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const auto& nb = f.dag.neighbors[k];
    double pred = 0.0;
    for (std::size_t j = 0; j < nb.size(); ++j) pred += f.coefficients[k](static_cast<Eigen::Index>(j)) * x(static_cast<Eigen::Index>(nb[j]));
    const double d = f.residual_variances(static_cast<Eigen::Index>(k));
    const double e = x(static_cast<Eigen::Index>(k)) - pred;
    ll += -0.5 * (log2pi + std::log(d) + e * e / d);
  }
  return ll;
}

Eigen::MatrixXd implied_covariance(const VecchiaFactor& f) {
  const auto n = static_cast<Eigen::Index>(f.ordering.order.size());
  Eigen::MatrixXd l = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto& nb = f.dag.neighbors[static_cast<std::size_t>(k)];
    for (std::size_t j = 0; j < nb.size(); ++j) {
      l(k, static_cast<Eigen::Index>(nb[j])) = -f.coefficients[static_cast<std::size_t>(k)](static_cast<Eigen::Index>(j));
    }
  }
  // x = L^-1 e  =>  cov = L^-1 D L^-T
  Eigen::MatrixXd linv = l.triangularView<Eigen::UnitLower>().solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd cov_ordered =
      symmetrize(linv * f.residual_variances.asDiagonal() * linv.transpose());
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      cov(static_cast<Eigen::Index>(f.ordering.order[static_cast<std::size_t>(a)]),
          static_cast<Eigen::Index>(f.ordering.order[static_cast<std::size_t>(b)])) = cov_ordered(a, b);
    }
  }
  return cov;
}

PredictionDag select_prediction_neighbors(std::span<const Location> data_locations,
                                          std::span<const Location> targets, std::size_t q) {
  PredictionDag dag;
  dag.bound = q;
  dag.neighbors = kernels::nearest_data(data_locations, targets, q);
  return dag;
}

VecchiaPrediction vecchia_krige(const PredictionDag& dag, const CovarianceModel& model,
                                const SpatialDataset& data, std::span<const Location> targets,
                                double noise, double mean) {
  if (!(noise >= 0.0)) throw Error(ErrorCode::InvalidParameter, "noise must be >= 0");
  if (dag.neighbors.size() != targets.size()) throw Error(ErrorCode::DimensionMismatch, "DAG size mismatch");
  VecchiaPrediction out;
  out.mean.resize(static_cast<Eigen::Index>(targets.size()));
  out.variance.resize(static_cast<Eigen::Index>(targets.size()));
  kernels::vecchia_predict_batch(model, data.locations(), data.values(), targets, dag.neighbors, noise,
                                 mean, out.mean, out.variance);
  return out;
}

VecchiaPrediction vecchia_krige(const SpatialDataset& data, std::span<const Location> targets,
                                const CovarianceModel& model, std::size_t q, double noise, double mean) {
  const auto dag = select_prediction_neighbors(data.locations(), targets, q);
  return vecchia_krige(dag, model, data, targets, noise, mean);
}

}  // namespace spatial
