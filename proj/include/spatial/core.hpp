#pragma once

#include <array>
#include <cstddef>
#include <initializer_list>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spatial/error.hpp"

namespace spatial {

/// A point in R^d, d in {1, 2, 3}.
class Location {
 public:
  Location() = default;
  Location(std::initializer_list<double> coords);
  explicit Location(std::span<const double> coords);

  std::size_t dim() const noexcept { return dim_; }
  double operator[](std::size_t i) const noexcept { return c_[i]; }
  double& operator[](std::size_t i) noexcept { return c_[i]; }
  std::span<const double> coords() const noexcept { return {c_.data(), dim_}; }

  friend bool operator==(const Location&, const Location&) = default;

 private:
  std::array<double, 3> c_{};
  std::size_t dim_ = 0;
};

double distance(const Location& a, const Location& b) noexcept;

using Vec2 = std::array<double, 2>;

// Convex polygon helpers (counter-clockwise vertex order).
double polygon_area(std::span<const Vec2> poly) noexcept;
Vec2 polygon_centroid(std::span<const Vec2> poly) noexcept;
/// Sutherland-Hodgman clip of `subject` against the convex polygon `clip`.
std::vector<Vec2> clip_polygon(std::span<const Vec2> subject, std::span<const Vec2> clip);

/// Bounded study region: an axis-aligned box in 1-3 dimensions or a convex
/// polygon in the plane.
class Window {
 public:
  enum class Kind { Box, Polygon };

  static Window box(const Location& lower, const Location& upper);
  static Window unit_square() { return box({0.0, 0.0}, {1.0, 1.0}); }
  static Window polygon(std::vector<Vec2> vertices);

  Kind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return lower_.dim(); }
  double volume() const noexcept { return volume_; }
  const Location& lower() const noexcept { return lower_; }
  const Location& upper() const noexcept { return upper_; }
  std::span<const Vec2> vertices() const noexcept { return vertices_; }

  /// Closed membership: boundary points are inside.
  bool contains(const Location& s) const noexcept;
  /// True when `other` lies entirely inside this window.
  bool covers(const Window& other) const noexcept;
  /// Volume of this window intersected with itself shifted by `offset`.
  double overlap_with_shift(const Location& offset) const;

 private:
  Kind kind_ = Kind::Box;
  Location lower_, upper_;
  std::vector<Vec2> vertices_;
  double volume_ = 0.0;
};

class SpatialDataset {
 public:
  SpatialDataset(std::vector<Location> locations, Eigen::VectorXd values,
                 std::optional<Eigen::MatrixXd> covariates);

  std::size_t size() const noexcept { return locations_.size(); }
  std::size_t dim() const noexcept { return locations_.front().dim(); }
  const std::vector<Location>& locations() const noexcept { return locations_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  const std::optional<Eigen::MatrixXd>& covariates() const noexcept { return covariates_; }

 private:
  std::vector<Location> locations_;
  Eigen::VectorXd values_;
  std::optional<Eigen::MatrixXd> covariates_;
};

/// Validates and packages observations. Covariates, when given, must carry
/// a leading column of ones.
SpatialDataset build_dataset(std::vector<Location> locations, Eigen::VectorXd values,
                             std::optional<Eigen::MatrixXd> covariates = std::nullopt);

/// Throws DuplicateLocation if two locations agree within 1e-12 per coordinate.
void check_distinct(std::span<const Location> locations);

struct BauCell {
  Location centroid;
  Location lower, upper;  // rectangle before clipping
  double volume = 0.0;
  std::array<std::size_t, 3> index{};
};

/// Regular tessellation of a window into basic areal units.
class BauGrid {
 public:
  BauGrid(Window window, std::array<std::size_t, 3> shape, std::vector<BauCell> cells);

  const Window& window() const noexcept { return window_; }
  const std::vector<BauCell>& cells() const noexcept { return cells_; }
  std::size_t size() const noexcept { return cells_.size(); }
  std::array<std::size_t, 3> shape() const noexcept { return shape_; }
  std::vector<Location> centroids() const;
  double total_volume() const noexcept;
  double cell_width(std::size_t axis) const noexcept;

  /// Cell index at grid position, or nullopt when clipped away.
  std::optional<std::size_t> cell_at(std::size_t ix, std::size_t iy, std::size_t iz = 0) const;
  /// Cell containing `s` (half-open rectangles, upper edge folded in).
  std::optional<std::size_t> locate(const Location& s) const;

 private:
  Window window_;
  std::array<std::size_t, 3> shape_;
  std::vector<BauCell> cells_;
  std::vector<std::ptrdiff_t> slot_;
};

BauGrid tessellate_baus(const Window& window, std::span<const std::size_t> resolution);
BauGrid tessellate_baus(const Window& window, std::size_t nx, std::size_t ny);

struct GaussianSpec {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Checks symmetry (1e-12) and the eigenvalue floor -1e-10 * max diagonal.
void validate_gaussian(const GaussianSpec& spec);

/// Cholesky; with `jitter`, one retry after adding 1e-10 * max diagonal to the diagonal.
Eigen::LLT<Eigen::MatrixXd> factorize_spd(const Eigen::MatrixXd& a, ErrorCode on_failure,
                                          const char* what, bool jitter = true);

std::vector<std::size_t> complement_indices(std::size_t n, std::span<const std::size_t> taken);

/// Exact conditional law of the unobserved coordinates (ascending index
/// order) given Z = Y[observed] + noise, noise ~ N(0, diag(noise_variances)).
GaussianSpec gaussian_condition(const GaussianSpec& spec, std::span<const std::size_t> observed,
                                const Eigen::VectorXd& observed_values,
                                const Eigen::VectorXd& noise_variances);

double gaussian_log_density(const GaussianSpec& spec, const Eigen::VectorXd& x);

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd& a);

}  // namespace spatial
