#include "spatial/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numbers>
#include <string>

#include "spatial/kernels.hpp"
#include "spatial/optimize.hpp"

namespace spatial {

NeighborhoodGraph::NeighborhoodGraph(std::vector<Location> nodes, SparseMatrix weights)
    : nodes_(std::move(nodes)), weights_(std::move(weights)) {
  const auto n = static_cast<Eigen::Index>(nodes_.size());
  if (weights_.rows() != n || weights_.cols() != n) {
    throw Error(ErrorCode::DimensionMismatch, "weight matrix does not match node count");
  }
  weights_.prune(0.0);
  weights_.makeCompressed();
  neighbors_.assign(nodes_.size(), {});
  for (Eigen::Index j = 0; j < weights_.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(weights_, j); it; ++it) {
      if (it.row() == it.col()) {
        throw Error(ErrorCode::InvalidParameter, "a node cannot be its own neighbor");
      }
      neighbors_[static_cast<std::size_t>(it.row())].push_back(static_cast<std::size_t>(it.col()));
    }
  }
  for (auto& nb : neighbors_) std::sort(nb.begin(), nb.end());
}

NeighborhoodGraph build_grid_graph(std::size_t nx, std::size_t ny) {
  if (nx == 0 || ny == 0) throw Error(ErrorCode::ZeroSize, "grid dimensions must be >= 1");
  std::vector<Location> nodes;
  nodes.reserve(nx * ny);
  std::vector<Eigen::Triplet<double>> t;
  for (std::size_t iy = 0; iy < ny; ++iy) {
    for (std::size_t ix = 0; ix < nx; ++ix) {
      nodes.push_back(Location{static_cast<double>(ix + 1), static_cast<double>(iy + 1)});
      const auto i = static_cast<int>(iy * nx + ix);
      if (ix + 1 < nx) {
        t.emplace_back(i, i + 1, 1.0);
        t.emplace_back(i + 1, i, 1.0);
      }
      if (iy + 1 < ny) {
        t.emplace_back(i, i + static_cast<int>(nx), 1.0);
        t.emplace_back(i + static_cast<int>(nx), i, 1.0);
      }
    }
  }
  SparseMatrix w(static_cast<Eigen::Index>(nx * ny), static_cast<Eigen::Index>(nx * ny));
  w.setFromTriplets(t.begin(), t.end());
  NeighborhoodGraph g(std::move(nodes), std::move(w));
  g.nx_ = nx;
  g.ny_ = ny;
  return g;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd CarModel::covariance() const {
  const auto n = static_cast<Eigen::Index>(size());
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  return symmetrize(factor_->solve(eye));
}

GaussianSpec CarModel::joint() const {
  return {Eigen::VectorXd::Zero(static_cast<Eigen::Index>(size())), covariance()};
}

double CarModel::log_det_precision() const {
  // SimplicialLLT stores L with positive diagonal; |Q| = prod(diag L)^2.
  const SparseMatrix l = factor_->matrixL();
  return 2.0 * l.diagonal().array().log().sum();
}

CarModel validate_car(const NeighborhoodGraph& graph, const SparseMatrix& c,
                      const Eigen::VectorXd& conditional_variances) {
  const auto n = static_cast<Eigen::Index>(graph.size());
  if (c.rows() != n || c.cols() != n || conditional_variances.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "C and M must match the graph size");
  }
  if (!(conditional_variances.array() > 0.0).all() || !conditional_variances.allFinite()) {
    throw Error(ErrorCode::InvalidParameter, "conditional variances must be positive");
  }
  const auto& w = graph.weights();
  for (Eigen::Index j = 0; j < c.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(c, j); it; ++it) {
      if (it.value() == 0.0) continue;
      if (it.row() == it.col()) throw Error(ErrorCode::InvalidParameter, "C must have a zero diagonal");
      if (w.coeff(it.row(), it.col()) == 0.0) {
        throw Error(ErrorCode::InvalidParameter,
                    "c(" + std::to_string(it.row()) + "," + std::to_string(it.col()) +
                        ") is non-zero but the nodes are not neighbors");
      }
    }
  }

  SparseMatrix eye(n, n);
  eye.setIdentity();
  const Eigen::VectorXd inv_tau = conditional_variances.cwiseInverse();
  SparseMatrix q = inv_tau.asDiagonal() * (eye - c);
  q.prune(0.0);
  q.makeCompressed();

  const SparseMatrix qt = q.transpose();
  const SparseMatrix diff = q - qt;
  double max_diff = 0.0, max_abs = 0.0;
  for (Eigen::Index j = 0; j < diff.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(diff, j); it; ++it) max_diff = std::max(max_diff, std::abs(it.value()));
  }
  for (Eigen::Index j = 0; j < q.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(q, j); it; ++it) max_abs = std::max(max_abs, std::abs(it.value()));
  }
  if (max_diff > 1e-10 * std::max(1.0, max_abs)) {
    throw Error(ErrorCode::AsymmetricPrecision,
                "M^-1 (I - C) is not symmetric: need c_ij / tau_i^2 = c_ji / tau_j^2");
  }
  SparseMatrix qs = 0.5 * (q + qt);
  qs.makeCompressed();

  auto factor = std::make_shared<SparseFactor>(qs);
  bool ok = factor->info() == Eigen::Success;
  if (ok) {
    // A successful LLT can still carry a vanishing pivot; require a safely positive diagonal.
    const SparseMatrix l = factor->matrixL();
    const double dmin = l.diagonal().minCoeff();
    ok = dmin > std::sqrt(1e-12 * std::max(1.0, max_abs));
  }
  if (!ok) throw Error(ErrorCode::NotPositiveDefinite, "CAR precision M^-1 (I - C) is not positive definite");

  CarModel m;
  m.graph_ = std::make_shared<const NeighborhoodGraph>(graph);
  m.c_ = c;
  m.c_.makeCompressed();
  m.tau2_ = conditional_variances;
  m.q_ = std::move(qs);
  m.factor_ = std::move(factor);
  return m;
}

CarModel homogeneous_car(const NeighborhoodGraph& graph, double rho, double tau2) {
  if (!std::isfinite(rho)) throw Error(ErrorCode::InvalidParameter, "rho must be finite");
  if (!(tau2 > 0.0)) throw Error(ErrorCode::InvalidParameter, "tau2 must be positive");
  const SparseMatrix c = rho * graph.weights();
  return validate_car(graph, c, Eigen::VectorXd::Constant(static_cast<Eigen::Index>(graph.size()), tau2));
}

std::pair<double, double> homogeneous_rho_bounds(const NeighborhoodGraph& graph) {
  const Eigen::MatrixXd w = Eigen::MatrixXd(graph.weights());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(symmetrize(w), Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  const double inf = std::numeric_limits<double>::infinity();
  return {lo < 0.0 ? 1.0 / lo : -inf, hi > 0.0 ? 1.0 / hi : inf};
}

// ---------------------------------------------------------------------------

Checkerboard checkerboard_partition(const NeighborhoodGraph& graph) {
  const std::size_t n = graph.size();
  std::vector<int> color(n, -1);
  std::vector<std::size_t> parent(n, n);
  for (std::size_t root = 0; root < n; ++root) {
    if (color[root] >= 0) continue;
    color[root] = 0;
    std::deque<std::size_t> queue{root};
    while (!queue.empty()) {
      const auto i = queue.front();
      queue.pop_front();
      for (auto j : graph.neighbors(i)) {
        if (color[j] < 0) {
          color[j] = 1 - color[i];
          parent[j] = i;
          queue.push_back(j);
        } else if (color[j] == color[i]) {
          throw Error(ErrorCode::NotBipartite, "odd cycle through edge (" + std::to_string(i) + "," +
                                                   std::to_string(j) + ")");
        }
      }
    }
  }
  Checkerboard cb;
  for (std::size_t i = 0; i < n; ++i) (color[i] == 0 ? cb.first : cb.second).push_back(i);
  return cb;
}

// ---------------------------------------------------------------------------

Eigen::MatrixXd sample_car(const CarModel& model, std::size_t n_samples, std::uint64_t seed,
                           SamplingMethod method, const GibbsOptions& gibbs) {
  if (method == SamplingMethod::Exact) return kernels::car_exact_samples(model, n_samples, seed);

  if (gibbs.thin == 0) throw Error(ErrorCode::InvalidParameter, "thin must be >= 1");
  const auto cb = checkerboard_partition(model.graph());
  const Eigen::SparseMatrix<double, Eigen::RowMajor> c_rows = model.coefficients();
  const Eigen::VectorXd sd = model.conditional_variances().cwiseSqrt();
  const auto n = static_cast<Eigen::Index>(model.size());

  Eigen::VectorXd state = Eigen::VectorXd::Zero(n);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n_samples), n);
  const std::size_t total = gibbs.burn_in + n_samples * gibbs.thin;
  std::size_t kept = 0;
  for (std::size_t sweep = 0; sweep < total; ++sweep) {
    kernels::gibbs_color_update(c_rows, sd, cb.first, seed, 2 * sweep, state);
    kernels::gibbs_color_update(c_rows, sd, cb.second, seed, 2 * sweep + 1, state);
    if (sweep >= gibbs.burn_in && (sweep - gibbs.burn_in + 1) % gibbs.thin == 0) {
      out.row(static_cast<Eigen::Index>(kept++)) = state.transpose();
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Posterior {
  std::vector<std::size_t> free;        // nodes not pinned by exact observations
  std::vector<std::ptrdiff_t> slot;     // node -> position in `free`, -1 if pinned
  Eigen::VectorXd full_mean;            // posterior mean over all nodes
  std::shared_ptr<SparseFactor> factor; // factor of the free-block posterior precision
};

Posterior car_posterior(const CarModel& model, const LatticeObservations& obs) {
  const std::size_t n = model.size();
  const auto k = obs.nodes.size();
  if (static_cast<std::size_t>(obs.values.size()) != k || static_cast<std::size_t>(obs.noise_variances.size()) != k) {
    throw Error(ErrorCode::DimensionMismatch, "observation arrays have different lengths");
  }
  if ((obs.noise_variances.array() < 0.0).any()) {
    throw Error(ErrorCode::InvalidParameter, "noise variances must be >= 0");
  }
  (void)complement_indices(n, obs.nodes);  // range and distinctness

  Posterior post;
  post.full_mean = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  std::vector<bool> pinned(n, false);
  Eigen::VectorXd extra_precision = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd rhs_data = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  for (std::size_t a = 0; a < k; ++a) {
    const auto i = obs.nodes[a];
    const double z = obs.values(static_cast<Eigen::Index>(a));
    const double r = obs.noise_variances(static_cast<Eigen::Index>(a));
    if (r == 0.0) {
      pinned[i] = true;
      post.full_mean(static_cast<Eigen::Index>(i)) = z;
    } else {
      extra_precision(static_cast<Eigen::Index>(i)) = 1.0 / r;
      rhs_data(static_cast<Eigen::Index>(i)) = z / r;
    }
  }
  post.slot.assign(n, -1);
  for (std::size_t i = 0; i < n; ++i) {
    if (!pinned[i]) {
      post.slot[i] = static_cast<std::ptrdiff_t>(post.free.size());
      post.free.push_back(i);
    }
  }
  const auto m = static_cast<Eigen::Index>(post.free.size());
  if (m == 0) return post;

  // Posterior precision on the free block: Q_FF + diag(1/r); rhs = -Q_FP y_P + z/r.
  const SparseMatrix& q = model.precision();
  std::vector<Eigen::Triplet<double>> t;
  Eigen::VectorXd rhs(m);
  for (Eigen::Index a = 0; a < m; ++a) rhs(a) = rhs_data(static_cast<Eigen::Index>(post.free[static_cast<std::size_t>(a)]));
  for (Eigen::Index j = 0; j < q.outerSize(); ++j) {
    for (SparseMatrix::InnerIterator it(q, j); it; ++it) {
      const auto row = static_cast<std::size_t>(it.row());
      const auto col = static_cast<std::size_t>(it.col());
      if (post.slot[row] < 0) continue;
      if (post.slot[col] >= 0) {
        t.emplace_back(static_cast<int>(post.slot[row]), static_cast<int>(post.slot[col]), it.value());
      } else {
        rhs(post.slot[row]) -= it.value() * post.full_mean(static_cast<Eigen::Index>(col));
      }
    }
  }
  for (Eigen::Index a = 0; a < m; ++a) {
    const double e = extra_precision(static_cast<Eigen::Index>(post.free[static_cast<std::size_t>(a)]));
    if (e != 0.0) t.emplace_back(static_cast<int>(a), static_cast<int>(a), e);
  }
  SparseMatrix p(m, m);
  p.setFromTriplets(t.begin(), t.end());
  post.factor = std::make_shared<SparseFactor>(p);
  if (post.factor->info() != Eigen::Success) {
    throw Error(ErrorCode::SingularSystem, "posterior precision is not positive definite");
  }
  const Eigen::VectorXd mu = post.factor->solve(rhs);
  for (Eigen::Index a = 0; a < m; ++a) post.full_mean(static_cast<Eigen::Index>(post.free[static_cast<std::size_t>(a)])) = mu(a);
  return post;
}

}  // namespace

LatticePrediction car_predict(const CarModel& model, const LatticeObservations& observed,
                              std::span<const std::size_t> targets) {
  const auto post = car_posterior(model, observed);
  const auto m = static_cast<Eigen::Index>(post.free.size());
  LatticePrediction out;
  out.mean.resize(static_cast<Eigen::Index>(targets.size()));
  out.variance.resize(static_cast<Eigen::Index>(targets.size()));
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const auto i = targets[t];
    if (i >= model.size()) throw Error(ErrorCode::DimensionMismatch, "target node out of range");
    out.mean(static_cast<Eigen::Index>(t)) = post.full_mean(static_cast<Eigen::Index>(i));
    if (post.slot[i] < 0) {
      out.variance(static_cast<Eigen::Index>(t)) = 0.0;
    } else {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(m);
      e(post.slot[i]) = 1.0;
      out.variance(static_cast<Eigen::Index>(t)) = post.factor->solve(e)(post.slot[i]);
    }
  }
  return out;
}

double car_log_likelihood(const CarModel& model, const LatticeObservations& observed) {
  // log p(z) = log p_Y(y) + log p(z_noisy | y) - log p(y_free | z), all at the
  // posterior mean, where pinned nodes take their observed values.
  const auto post = car_posterior(model, observed);
  const double log2pi = std::log(2.0 * std::numbers::pi);
  const auto n = static_cast<double>(model.size());
  const Eigen::VectorXd& y = post.full_mean;

  double ll = 0.5 * model.log_det_precision() - 0.5 * y.dot(model.precision() * y) - 0.5 * n * log2pi;
  for (std::size_t a = 0; a < observed.nodes.size(); ++a) {
    const double r = observed.noise_variances(static_cast<Eigen::Index>(a));
    if (r == 0.0) continue;
    const double e = observed.values(static_cast<Eigen::Index>(a)) - y(static_cast<Eigen::Index>(observed.nodes[a]));
    ll += -0.5 * (log2pi + std::log(r) + e * e / r);
  }
  if (!post.free.empty()) {
    const SparseMatrix l = post.factor->matrixL();
    const double logdet_p = 2.0 * l.diagonal().array().log().sum();
    ll -= 0.5 * logdet_p - 0.5 * static_cast<double>(post.free.size()) * log2pi;
  }
  return ll;
}

HomogeneousCarFit fit_homogeneous_car(const NeighborhoodGraph& graph, const LatticeObservations& observed) {
  if (observed.nodes.size() < 2) {
    throw Error(ErrorCode::TooFewObservations, "need at least 2 observed nodes");
  }
  const auto [lo, hi] = homogeneous_rho_bounds(graph);
  const double a = std::isfinite(lo) ? lo : -1e6;
  const double b = std::isfinite(hi) ? hi : 1e6;
  const double var0 = std::max(observed.values.squaredNorm() / static_cast<double>(observed.values.size()), 1e-12);

  // rho = midpoint + half-width * tanh(t) keeps the search inside the valid interval.
  auto rho_of = [&](double t) { return 0.5 * (a + b) + 0.5 * (b - a) * (1.0 - 1e-9) * std::tanh(t); };
  const Objective negll = [&](const Eigen::VectorXd& x) {
    try {
      const auto m = homogeneous_car(graph, rho_of(x(0)), std::exp(std::clamp(x(1), -30.0, 30.0)));
      return -car_log_likelihood(m, observed);
    } catch (const Error&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const double t0 = std::atanh(std::clamp(-(a + b) / (b - a), -0.99, 0.99));
  const std::vector<Eigen::VectorXd> starts = {
      Eigen::Vector2d(t0, std::log(var0)),
      Eigen::Vector2d(t0 + 1.0, std::log(0.5 * var0)),
      Eigen::Vector2d(t0 - 1.0, std::log(var0)),
  };
  const auto best = minimize_multistart(negll, starts, SimplexOptions{500, 1e-8, 0.5});
  if (!std::isfinite(best.value) || best.value >= std::numeric_limits<double>::max()) {
    throw Error(ErrorCode::FitDiverged, "CAR likelihood could not be evaluated");
  }
  HomogeneousCarFit fit;
  fit.rho = rho_of(best.x(0));
  fit.tau2 = std::exp(std::clamp(best.x(1), -30.0, 30.0));
  fit.log_likelihood = -best.value;
  fit.converged = best.converged;
  return fit;
}

}  // namespace spatial
