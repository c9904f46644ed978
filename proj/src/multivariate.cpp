#include "spatial/multivariate.hpp"

#include <cmath>
#include <string>

#include "spatial/kernels.hpp"

namespace spatial {

InteractionKernel InteractionKernel::zero() { return InteractionKernel(); }

InteractionKernel InteractionKernel::local_average(const BauGrid& grid, double beta) {
  return InteractionKernel([grid, beta](const Location& s, const Location& v) {
    const auto cs = grid.locate(s);
    if (!cs) return 0.0;
    const auto& cell = grid.cells()[*cs];
    for (std::size_t a = 0; a < v.dim(); ++a) {
      if (v[a] < cell.lower[a] || v[a] > cell.upper[a]) return 0.0;
    }
    // Share the half-open convention of `locate` so v on an edge belongs to one cell.
    if (grid.locate(v) != cs) return 0.0;
    return beta / cell.volume;
  });
}

InteractionKernel InteractionKernel::shifted_gaussian(double amplitude, const Location& shift, double bandwidth) {
  if (!(bandwidth > 0.0)) throw Error(ErrorCode::InvalidParameter, "kernel bandwidth must be positive");
  return InteractionKernel([amplitude, shift, bandwidth](const Location& s, const Location& v) {
    double d2 = 0.0;
    for (std::size_t a = 0; a < s.dim(); ++a) {
      const double d = s[a] - v[a] - shift[a];
      d2 += d * d;
    }
    return amplitude * std::exp(-d2 / bandwidth);
  });
}

double LinearMean::operator()(const Location& s) const {
  double m = intercept;
  for (std::size_t a = 0; a < s.dim(); ++a) m += slope[a] * s[a];
  return m;
}

// ---------------------------------------------------------------------------

namespace {

void check_mesh(const BivariateModel& model) {
  const auto shape = model.mesh.shape();
  for (std::size_t a = 0; a < model.mesh.window().dim(); ++a) {
    if (shape[a] < 4) throw Error(ErrorCode::GridTooCoarse, "integration mesh needs >= 4 cells per axis");
  }
}

struct Quadrature {
  std::vector<Location> nodes;
  Eigen::VectorXd weights;
  Eigen::MatrixXd c11_nodes;  // C11 between mesh centroids
};

Quadrature make_quadrature(const BivariateModel& model) {
  Quadrature q;
  q.nodes = model.mesh.centroids();
  q.weights.resize(static_cast<Eigen::Index>(q.nodes.size()));
  for (std::size_t j = 0; j < q.nodes.size(); ++j) {
    q.weights(static_cast<Eigen::Index>(j)) = model.mesh.cells()[j].volume;
  }
  if (!model.kernel.is_zero()) q.c11_nodes = kernels::gram_matrix(model.c11, q.nodes);
  return q;
}

// Rows: b(a_i, v_j) |A_j|
Eigen::MatrixXd kernel_rows(const BivariateModel& model, const Quadrature& q, std::span<const Location> a) {
  if (model.kernel.is_zero()) return Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(a.size()),
                                                           static_cast<Eigen::Index>(q.nodes.size()));
  return kernels::kernel_matrix(model.kernel, a, q.nodes, q.weights);
}

CrossCovarianceSet blocks(const BivariateModel& model, std::span<const Location> a,
                          std::span<const Location> b, bool same) {
  check_mesh(model);
  for (const auto* set : {&a, &b}) {
    for (const auto& s : *set) {
      if (!model.mesh.window().contains(s)) {
        throw Error(ErrorCode::RegionOutsideWindow, "location lies outside the integration window");
      }
    }
  }
  const auto na = static_cast<Eigen::Index>(a.size());
  const auto nb = static_cast<Eigen::Index>(b.size());
  CrossCovarianceSet out;
  if (same) {
    out.c11 = gram_matrix(model.c11, a);
    out.c22 = gram_matrix(model.c2_given_1, a);
  } else {
    out.c11 = cross_covariance_matrix(model.c11, a, b);
    out.c22 = cross_covariance_matrix(model.c2_given_1, a, b);
  }
  if (model.kernel.is_zero()) {
    out.c12 = Eigen::MatrixXd::Zero(na, nb);
    out.c21 = Eigen::MatrixXd::Zero(na, nb);
    return out;
  }
  const auto q = make_quadrature(model);
  const Eigen::MatrixXd g_a = cross_covariance_matrix(model.c11, a, q.nodes);
  const Eigen::MatrixXd k_a = kernel_rows(model, q, a);
  if (same) {
    out.c12 = g_a * k_a.transpose();
    out.c21 = out.c12.transpose();
    out.c22 += symmetrize(k_a * q.c11_nodes * k_a.transpose());
  } else {
    const Eigen::MatrixXd g_b = cross_covariance_matrix(model.c11, b, q.nodes);
    const Eigen::MatrixXd k_b = kernel_rows(model, q, b);
    out.c12 = g_a * k_b.transpose();
    out.c21 = k_a * g_b.transpose();
    out.c22 += k_a * q.c11_nodes * k_b.transpose();
  }
  return out;
}

}  // namespace

CrossCovarianceSet derive_cross_covariances(const BivariateModel& model, std::span<const Location> locations) {
  return blocks(model, locations, locations, true);
}

CrossCovarianceSet cross_covariance_blocks(const BivariateModel& model, std::span<const Location> a,
                                           std::span<const Location> b) {
  return blocks(model, a, b, false);
}

Eigen::MatrixXd joint_covariance_matrix(const CrossCovarianceSet& set) {
  const auto n = set.c11.rows();
  for (const auto* m : {&set.c11, &set.c12, &set.c21, &set.c22}) {
    if (m->rows() != n || m->cols() != n) throw Error(ErrorCode::DimensionMismatch, "blocks must be n x n");
  }
  Eigen::MatrixXd j(2 * n, 2 * n);
  j << set.c11, set.c12, set.c21, set.c22;
  j = symmetrize(j);
  if (n == 0) return j;
  const double top = j.diagonal().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(j, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  if (lo < -1e-8 * top) {
    throw Error(ErrorCode::NotPositiveDefinite, "joint covariance has min eigenvalue " + std::to_string(lo));
  }
  if (lo < 0.0) j.diagonal().array() -= lo;
  return j;
}

CokrigingResult cokrige(const BivariateModel& model, const std::vector<Location>& loc1,
                        const Eigen::VectorXd& z1, const std::vector<Location>& loc2,
                        const Eigen::VectorXd& z2, int target, const Location& s0, double noise1,
                        double noise2) {
  if (target != 1 && target != 2) throw Error(ErrorCode::InvalidParameter, "target must be 1 or 2");
  if (static_cast<Eigen::Index>(loc1.size()) != z1.size() || static_cast<Eigen::Index>(loc2.size()) != z2.size()) {
    throw Error(ErrorCode::DimensionMismatch, "locations and values differ in length");
  }
  if (!(noise1 >= 0.0) || !(noise2 >= 0.0)) throw Error(ErrorCode::InvalidParameter, "noise must be >= 0");
  check_mesh(model);
  if (!loc1.empty()) check_distinct(loc1);
  if (!loc2.empty()) check_distinct(loc2);

  const auto n1 = static_cast<Eigen::Index>(loc1.size());
  const auto n2 = static_cast<Eigen::Index>(loc2.size());
  const Eigen::Index n = n1 + n2 + 1;
  const std::vector<Location> target_loc{s0};

  GaussianSpec joint;
  joint.mean.resize(n);
  joint.cov = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n1; ++i) joint.mean(i) = model.mu1(loc1[static_cast<std::size_t>(i)]);
  for (Eigen::Index i = 0; i < n2; ++i) joint.mean(n1 + i) = model.mu2(loc2[static_cast<std::size_t>(i)]);
  joint.mean(n - 1) = target == 1 ? model.mu1(s0) : model.mu2(s0);

  if (n1 > 0) joint.cov.topLeftCorner(n1, n1) = derive_cross_covariances(model, loc1).c11;
  if (n2 > 0) joint.cov.block(n1, n1, n2, n2) = derive_cross_covariances(model, loc2).c22;
  if (n1 > 0 && n2 > 0) {
    const auto x = cross_covariance_blocks(model, loc1, loc2);
    joint.cov.block(0, n1, n1, n2) = x.c12;
    joint.cov.block(n1, 0, n2, n1) = x.c12.transpose();
  }
  const auto t1 = n1 > 0 ? cross_covariance_blocks(model, target_loc, loc1) : CrossCovarianceSet{};
  const auto t2 = n2 > 0 ? cross_covariance_blocks(model, target_loc, loc2) : CrossCovarianceSet{};
  const auto tt = derive_cross_covariances(model, target_loc);
  if (target == 1) {
    if (n1 > 0) joint.cov.block(n - 1, 0, 1, n1) = t1.c11;
    if (n2 > 0) joint.cov.block(n - 1, n1, 1, n2) = t2.c12;
    joint.cov(n - 1, n - 1) = tt.c11(0, 0);
  } else {
    if (n1 > 0) joint.cov.block(n - 1, 0, 1, n1) = t1.c21;
    if (n2 > 0) joint.cov.block(n - 1, n1, 1, n2) = t2.c22;
    joint.cov(n - 1, n - 1) = tt.c22(0, 0);
  }
  joint.cov.block(0, n - 1, n - 1, 1) = joint.cov.block(n - 1, 0, 1, n - 1).transpose();

  std::vector<std::size_t> observed(static_cast<std::size_t>(n1 + n2));
  for (std::size_t i = 0; i < observed.size(); ++i) observed[i] = i;
  Eigen::VectorXd values(n1 + n2), noise(n1 + n2);
  values << z1, z2;
  noise << Eigen::VectorXd::Constant(n1, noise1), Eigen::VectorXd::Constant(n2, noise2);
  try {
    const auto post = gaussian_condition(joint, observed, values, noise);
    return {post.mean(0), std::max(post.cov(0, 0), 0.0)};
  } catch (const Error& e) {
    if (e.code() == ErrorCode::SingularCovariance) throw Error(ErrorCode::SingularSystem, e.what());
    throw;
  }
}

}  // namespace spatial
