#include "spatial/core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

namespace spatial {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::DuplicateLocation: return "DuplicateLocation";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::InvalidWindow: return "InvalidWindow";
    case ErrorCode::ZeroResolution: return "ZeroResolution";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::NegativeDistance: return "NegativeDistance";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::TooFewBins: return "TooFewBins";
    case ErrorCode::FitDiverged: return "FitDiverged";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::RankDeficientTrend: return "RankDeficientTrend";
    case ErrorCode::TooFewObservations: return "TooFewObservations";
    case ErrorCode::ZeroSize: return "ZeroSize";
    case ErrorCode::AsymmetricPrecision: return "AsymmetricPrecision";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::NotBipartite: return "NotBipartite";
    case ErrorCode::NegativeIntensity: return "NegativeIntensity";
    case ErrorCode::UnboundedIntensity: return "UnboundedIntensity";
    case ErrorCode::RegionOutsideWindow: return "RegionOutsideWindow";
    case ErrorCode::TooFewPoints: return "TooFewPoints";
    case ErrorCode::TooFewSimulations: return "TooFewSimulations";
    case ErrorCode::RadiusTooLarge: return "RadiusTooLarge";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::SingularNeighborBlock: return "SingularNeighborBlock";
    case ErrorCode::NonPositiveInnovationCovariance: return "NonPositiveInnovationCovariance";
    case ErrorCode::EmptyMap: return "EmptyMap";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Location

Location::Location(std::initializer_list<double> coords)
    : Location(std::span<const double>(coords.begin(), coords.size())) {}

Location::Location(std::span<const double> coords) : dim_(coords.size()) {
  if (dim_ < 1 || dim_ > 3) {
    throw Error(ErrorCode::DimensionMismatch,
                "location must have 1 to 3 coordinates, got " + std::to_string(dim_));
  }
  for (std::size_t i = 0; i < dim_; ++i) {
    if (!std::isfinite(coords[i])) {
      throw Error(ErrorCode::InvalidParameter, "non-finite coordinate");
    }
    c_[i] = coords[i];
  }
}

double distance(const Location& a, const Location& b) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Polygon geometry

namespace {

double cross(const Vec2& o, const Vec2& a, const Vec2& b) noexcept {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

Vec2 intersect(const Vec2& p, const Vec2& q, const Vec2& a, const Vec2& b) noexcept {
  // Point where segment pq crosses the infinite line ab.
  const double cp = cross(a, b, p);
  const double cq = cross(a, b, q);
  const double t = cp / (cp - cq);
  return {p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])};
}

std::vector<Vec2> rectangle(const Location& lo, const Location& hi) {
  return {{lo[0], lo[1]}, {hi[0], lo[1]}, {hi[0], hi[1]}, {lo[0], hi[1]}};
}

}  // namespace

double polygon_area(std::span<const Vec2> poly) noexcept {
  double a = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    a += p[0] * q[1] - q[0] * p[1];
  }
  return 0.5 * a;
}

Vec2 polygon_centroid(std::span<const Vec2> poly) noexcept {
  const double a = polygon_area(poly);
  double cx = 0.0, cy = 0.0;
  for (std::size_t i = 0, n = poly.size(); i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    const double w = p[0] * q[1] - q[0] * p[1];
    cx += (p[0] + q[0]) * w;
    cy += (p[1] + q[1]) * w;
  }
  return {cx / (6.0 * a), cy / (6.0 * a)};
}

std::vector<Vec2> clip_polygon(std::span<const Vec2> subject, std::span<const Vec2> clip) {
  std::vector<Vec2> out(subject.begin(), subject.end());
  for (std::size_t e = 0, m = clip.size(); e < m && !out.empty(); ++e) {
    const Vec2& a = clip[e];
    const Vec2& b = clip[(e + 1) % m];
    std::vector<Vec2> in;
    in.swap(out);
    for (std::size_t i = 0, n = in.size(); i < n; ++i) {
      const Vec2& p = in[i];
      const Vec2& q = in[(i + 1) % n];
      const bool p_in = cross(a, b, p) >= 0.0;
      const bool q_in = cross(a, b, q) >= 0.0;
      if (p_in) out.push_back(p);
      if (p_in != q_in) out.push_back(intersect(p, q, a, b));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Window

Window Window::box(const Location& lower, const Location& upper) {
  if (lower.dim() != upper.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "box corners differ in dimension");
  }
  Window w;
  w.kind_ = Kind::Box;
  w.lower_ = lower;
  w.upper_ = upper;
  w.volume_ = 1.0;
  for (std::size_t i = 0; i < lower.dim(); ++i) {
    const double side = upper[i] - lower[i];
    if (!(side > 0.0)) throw Error(ErrorCode::InvalidWindow, "box has non-positive side length");
    w.volume_ *= side;
  }
  return w;
}

Window Window::polygon(std::vector<Vec2> vertices) {
  if (vertices.size() < 3) throw Error(ErrorCode::InvalidWindow, "polygon needs at least 3 vertices");
  for (const auto& v : vertices) {
    if (!std::isfinite(v[0]) || !std::isfinite(v[1])) {
      throw Error(ErrorCode::InvalidWindow, "non-finite polygon vertex");
    }
  }
  if (polygon_area(vertices) < 0.0) std::reverse(vertices.begin(), vertices.end());
  const double area = polygon_area(vertices);
  if (!(area > 0.0)) throw Error(ErrorCode::InvalidWindow, "polygon has zero area");

  // Convex and simple: every turn is to the left and the turns sum to 2*pi.
  const std::size_t n = vertices.size();
  double turning = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& p = vertices[i];
    const Vec2& q = vertices[(i + 1) % n];
    const Vec2& r = vertices[(i + 2) % n];
    const double ux = q[0] - p[0], uy = q[1] - p[1];
    const double vx = r[0] - q[0], vy = r[1] - q[1];
    const double c = ux * vy - uy * vx;
    if (c <= 0.0) throw Error(ErrorCode::InvalidWindow, "polygon is not strictly convex");
    turning += std::atan2(c, ux * vx + uy * vy);
  }
  if (std::abs(turning - 2.0 * std::numbers::pi) > 1e-6) {
    throw Error(ErrorCode::InvalidWindow, "polygon is self-intersecting");
  }

  Window w;
  w.kind_ = Kind::Polygon;
  double x0 = vertices[0][0], x1 = x0, y0 = vertices[0][1], y1 = y0;
  for (const auto& v : vertices) {
    x0 = std::min(x0, v[0]);
    x1 = std::max(x1, v[0]);
    y0 = std::min(y0, v[1]);
    y1 = std::max(y1, v[1]);
  }
  w.lower_ = Location{x0, y0};
  w.upper_ = Location{x1, y1};
  w.vertices_ = std::move(vertices);
  w.volume_ = area;
  return w;
}

bool Window::contains(const Location& s) const noexcept {
  if (s.dim() != dim()) return false;
  if (kind_ == Kind::Box) {
    for (std::size_t i = 0; i < dim(); ++i) {
      if (s[i] < lower_[i] || s[i] > upper_[i]) return false;
    }
    return true;
  }
  const double scale = std::max(1.0, std::sqrt(volume_));
  const Vec2 p{s[0], s[1]};
  for (std::size_t i = 0, n = vertices_.size(); i < n; ++i) {
    const Vec2& a = vertices_[i];
    const Vec2& b = vertices_[(i + 1) % n];
    const double len = std::hypot(b[0] - a[0], b[1] - a[1]);
    if (cross(a, b, p) < -1e-12 * scale * len) return false;
  }
  return true;
}

bool Window::covers(const Window& other) const noexcept {
  if (other.dim() != dim()) return false;
  if (other.kind() == Kind::Polygon) {
    return std::all_of(other.vertices_.begin(), other.vertices_.end(),
                       [&](const Vec2& v) { return contains(Location{v[0], v[1]}); });
  }
  // Every corner of the box must be inside (sufficient for convex windows).
  const std::size_t d = dim();
  for (std::size_t mask = 0; mask < (std::size_t{1} << d); ++mask) {
    std::array<double, 3> c{};
    for (std::size_t i = 0; i < d; ++i) c[i] = (mask >> i) & 1U ? other.upper_[i] : other.lower_[i];
    if (!contains(Location(std::span<const double>(c.data(), d)))) return false;
  }
  return true;
}

double Window::overlap_with_shift(const Location& offset) const {
  if (kind_ == Kind::Box) {
    double v = 1.0;
    for (std::size_t i = 0; i < dim(); ++i) {
      v *= std::max(0.0, (upper_[i] - lower_[i]) - std::abs(offset[i]));
    }
    return v;
  }
  std::vector<Vec2> shifted(vertices_);
  for (auto& v : shifted) {
    v[0] += offset[0];
    v[1] += offset[1];
  }
  const auto clipped = clip_polygon(vertices_, shifted);
  return clipped.size() < 3 ? 0.0 : polygon_area(clipped);
}

// ---------------------------------------------------------------------------
// SpatialDataset

void check_distinct(std::span<const Location> locations) {
  constexpr double tol = 1e-12;
  std::vector<std::size_t> order(locations.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return locations[a][0] < locations[b][0] || (locations[a][0] == locations[b][0] && a < b);
  });
  for (std::size_t i = 0; i < order.size(); ++i) {
    const Location& a = locations[order[i]];
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const Location& b = locations[order[j]];
      if (b[0] - a[0] > tol) break;
      bool same = true;
      for (std::size_t k = 1; k < a.dim(); ++k) same = same && std::abs(a[k] - b[k]) <= tol;
      if (same) {
        const auto lo = std::min(order[i], order[j]);
        const auto hi = std::max(order[i], order[j]);
        throw Error(ErrorCode::DuplicateLocation,
                    "locations " + std::to_string(lo) + " and " + std::to_string(hi) + " coincide");
      }
    }
  }
}

SpatialDataset::SpatialDataset(std::vector<Location> locations, Eigen::VectorXd values,
                               std::optional<Eigen::MatrixXd> covariates)
    : locations_(std::move(locations)), values_(std::move(values)), covariates_(std::move(covariates)) {}

SpatialDataset build_dataset(std::vector<Location> locations, Eigen::VectorXd values,
                             std::optional<Eigen::MatrixXd> covariates) {
  if (locations.empty() && values.size() == 0) {
    throw Error(ErrorCode::EmptyDataset, "dataset has no observations");
  }
  if (static_cast<std::size_t>(values.size()) != locations.size()) {
    throw Error(ErrorCode::DimensionMismatch,
                std::to_string(locations.size()) + " locations but " + std::to_string(values.size()) +
                    " values");
  }
  const std::size_t d = locations.front().dim();
  for (const auto& s : locations) {
    if (s.dim() != d) throw Error(ErrorCode::DimensionMismatch, "mixed location dimensions");
  }
  if (!values.allFinite()) throw Error(ErrorCode::InvalidParameter, "non-finite attribute value");
  if (covariates) {
    const auto& x = *covariates;
    if (static_cast<std::size_t>(x.rows()) != locations.size() || x.cols() < 1) {
      throw Error(ErrorCode::DimensionMismatch, "covariate matrix has wrong shape");
    }
    if (!x.allFinite() || (x.col(0).array() != 1.0).any()) {
      throw Error(ErrorCode::InvalidParameter, "covariate matrix must start with a column of ones");
    }
  }
  check_distinct(locations);
  return SpatialDataset(std::move(locations), std::move(values), std::move(covariates));
}

// ---------------------------------------------------------------------------
// BAU tessellation

BauGrid::BauGrid(Window window, std::array<std::size_t, 3> shape, std::vector<BauCell> cells)
    : window_(std::move(window)), shape_(shape), cells_(std::move(cells)),
      slot_(shape[0] * shape[1] * shape[2], -1) {
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const auto& ix = cells_[c].index;
    slot_[ix[0] + shape_[0] * (ix[1] + shape_[1] * ix[2])] = static_cast<std::ptrdiff_t>(c);
  }
}

std::vector<Location> BauGrid::centroids() const {
  std::vector<Location> out;
  out.reserve(cells_.size());
  for (const auto& c : cells_) out.push_back(c.centroid);
  return out;
}

double BauGrid::total_volume() const noexcept {
  double v = 0.0;
  for (const auto& c : cells_) v += c.volume;
  return v;
}

double BauGrid::cell_width(std::size_t axis) const noexcept {
  return (window_.upper()[axis] - window_.lower()[axis]) / static_cast<double>(shape_[axis]);
}

std::optional<std::size_t> BauGrid::cell_at(std::size_t ix, std::size_t iy, std::size_t iz) const {
  if (ix >= shape_[0] || iy >= shape_[1] || iz >= shape_[2]) return std::nullopt;
  const auto s = slot_[ix + shape_[0] * (iy + shape_[1] * iz)];
  if (s < 0) return std::nullopt;
  return static_cast<std::size_t>(s);
}

std::optional<std::size_t> BauGrid::locate(const Location& s) const {
  if (s.dim() != window_.dim()) return std::nullopt;
  std::array<std::size_t, 3> ix{};
  for (std::size_t a = 0; a < s.dim(); ++a) {
    const double lo = window_.lower()[a], hi = window_.upper()[a];
    if (s[a] < lo || s[a] > hi) return std::nullopt;
    const double f = (s[a] - lo) / (hi - lo) * static_cast<double>(shape_[a]);
    ix[a] = std::min(static_cast<std::size_t>(f), shape_[a] - 1);
  }
  return cell_at(ix[0], ix[1], ix[2]);
}

BauGrid tessellate_baus(const Window& window, std::span<const std::size_t> resolution) {
  const std::size_t d = window.dim();
  if (resolution.size() != d) {
    throw Error(ErrorCode::DimensionMismatch, "resolution must give one count per axis");
  }
  std::array<std::size_t, 3> shape{1, 1, 1};
  for (std::size_t a = 0; a < d; ++a) {
    if (resolution[a] == 0) throw Error(ErrorCode::ZeroResolution, "resolution must be >= 1 per axis");
    shape[a] = resolution[a];
  }
  std::array<double, 3> width{};
  for (std::size_t a = 0; a < d; ++a) {
    width[a] = (window.upper()[a] - window.lower()[a]) / static_cast<double>(shape[a]);
  }

  std::vector<BauCell> cells;
  cells.reserve(shape[0] * shape[1] * shape[2]);
  for (std::size_t iz = 0; iz < shape[2]; ++iz) {
    for (std::size_t iy = 0; iy < shape[1]; ++iy) {
      for (std::size_t ix = 0; ix < shape[0]; ++ix) {
        const std::array<std::size_t, 3> idx{ix, iy, iz};
        std::array<double, 3> lo{}, hi{}, mid{};
        double vol = 1.0;
        for (std::size_t a = 0; a < d; ++a) {
          const double base = window.lower()[a];
          lo[a] = base + width[a] * static_cast<double>(idx[a]);
          // Last cell snaps to the window edge so volumes sum exactly.
          hi[a] = idx[a] + 1 == shape[a] ? window.upper()[a]
                                         : base + width[a] * static_cast<double>(idx[a] + 1);
          mid[a] = 0.5 * (lo[a] + hi[a]);
          vol *= hi[a] - lo[a];
        }
        BauCell cell;
        cell.lower = Location(std::span<const double>(lo.data(), d));
        cell.upper = Location(std::span<const double>(hi.data(), d));
        cell.index = idx;
        if (window.kind() == Window::Kind::Box) {
          cell.centroid = Location(std::span<const double>(mid.data(), d));
          cell.volume = vol;
        } else {
          const auto clipped = clip_polygon(rectangle(cell.lower, cell.upper), window.vertices());
          if (clipped.size() < 3) continue;
          const double area = polygon_area(clipped);
          if (area <= 1e-14 * vol) continue;
          const Vec2 c = polygon_centroid(clipped);
          cell.centroid = Location{c[0], c[1]};
          cell.volume = area;
        }
        cells.push_back(cell);
      }
    }
  }
  return BauGrid(window, shape, std::move(cells));
}

BauGrid tessellate_baus(const Window& window, std::size_t nx, std::size_t ny) {
  const std::array<std::size_t, 2> r{nx, ny};
  return tessellate_baus(window, r);
}

// ---------------------------------------------------------------------------
// Gaussian conditioning

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a) { return 0.5 * (a + a.transpose()); }

void validate_gaussian(const GaussianSpec& spec) {
  const auto n = spec.cov.rows();
  if (spec.cov.cols() != n || spec.mean.size() != n) {
    throw Error(ErrorCode::DimensionMismatch, "mean and covariance sizes disagree");
  }
  if (n == 0) return;
  if ((spec.cov - spec.cov.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw Error(ErrorCode::InvalidParameter, "covariance is not symmetric");
  }
  const double floor = -1e-10 * spec.cov.diagonal().maxCoeff();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(spec.cov, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < floor) {
    throw Error(ErrorCode::NotPositiveDefinite, "covariance has a negative eigenvalue");
  }
}

Eigen::LLT<Eigen::MatrixXd> factorize_spd(const Eigen::MatrixXd& a, ErrorCode on_failure,
                                          const char* what, bool retry) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) return llt;
  if (!retry) throw Error(on_failure, std::string(what) + " is not positive definite");
  const double jitter = 1e-10 * std::max(a.diagonal().maxCoeff(), 0.0);
  Eigen::MatrixXd b = a;
  b.diagonal().array() += jitter;
  llt.compute(b);
  if (llt.info() != Eigen::Success || jitter == 0.0) {
    throw Error(on_failure, std::string(what) + " is not positive definite");
  }
  return llt;
}

std::vector<std::size_t> complement_indices(std::size_t n, std::span<const std::size_t> taken) {
  std::vector<bool> used(n, false);
  for (auto i : taken) {
    if (i >= n) throw Error(ErrorCode::DimensionMismatch, "index " + std::to_string(i) + " out of range");
    if (used[i]) throw Error(ErrorCode::InvalidParameter, "index " + std::to_string(i) + " repeated");
    used[i] = true;
  }
  std::vector<std::size_t> rest;
  for (std::size_t i = 0; i < n; ++i) {
    if (!used[i]) rest.push_back(i);
  }
  return rest;
}

GaussianSpec gaussian_condition(const GaussianSpec& spec, std::span<const std::size_t> observed,
                                const Eigen::VectorXd& observed_values,
                                const Eigen::VectorXd& noise_variances) {
  const auto n = static_cast<std::size_t>(spec.mean.size());
  if (static_cast<std::size_t>(spec.cov.rows()) != n || static_cast<std::size_t>(spec.cov.cols()) != n) {
    throw Error(ErrorCode::DimensionMismatch, "mean and covariance sizes disagree");
  }
  const auto k = observed.size();
  if (static_cast<std::size_t>(observed_values.size()) != k ||
      static_cast<std::size_t>(noise_variances.size()) != k) {
    throw Error(ErrorCode::DimensionMismatch, "observed values/noise length mismatch");
  }
  if ((noise_variances.array() < 0.0).any()) {
    throw Error(ErrorCode::InvalidParameter, "noise variances must be non-negative");
  }
  const auto rest = complement_indices(n, observed);
  const auto r = rest.size();
  if (k == 0) {
    return spec;
  }

  Eigen::MatrixXd s_oo(k, k), s_ro(r, k), s_rr(r, r);
  Eigen::VectorXd resid(k), mu_r(r);
  for (std::size_t a = 0; a < k; ++a) {
    resid(a) = observed_values(a) - spec.mean(observed[a]);
    for (std::size_t b = 0; b < k; ++b) s_oo(a, b) = spec.cov(observed[a], observed[b]);
    s_oo(a, a) += noise_variances(a);
  }
  for (std::size_t a = 0; a < r; ++a) {
    mu_r(a) = spec.mean(rest[a]);
    for (std::size_t b = 0; b < k; ++b) s_ro(a, b) = spec.cov(rest[a], observed[b]);
    for (std::size_t b = 0; b < r; ++b) s_rr(a, b) = spec.cov(rest[a], rest[b]);
  }
  const auto llt = factorize_spd(s_oo, ErrorCode::SingularCovariance, "observed covariance block", false);
  GaussianSpec out;
  out.mean = mu_r + s_ro * llt.solve(resid);
  out.cov = symmetrize(s_rr - s_ro * llt.solve(s_ro.transpose()));
  return out;
}

double gaussian_log_density(const GaussianSpec& spec, const Eigen::VectorXd& x) {
  if (x.size() != spec.mean.size()) throw Error(ErrorCode::DimensionMismatch, "vector length mismatch");
  const auto llt = factorize_spd(spec.cov, ErrorCode::SingularCovariance, "covariance", false);
  const Eigen::VectorXd r = x - spec.mean;
  const Eigen::VectorXd w = llt.matrixL().solve(r);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return -0.5 * (static_cast<double>(x.size()) * std::log(2.0 * std::numbers::pi) + logdet + w.squaredNorm());
}

}  // namespace spatial
