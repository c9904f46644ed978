#include "spatial/pointproc.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "spatial/kernels.hpp"
#include "spatial/rng.hpp"

namespace spatial {

PointPattern::PointPattern(Window window, std::vector<Location> points,
                           std::optional<std::vector<double>> marks)
    : window_(std::move(window)), points_(std::move(points)), marks_(std::move(marks)) {
  for (const auto& s : points_) {
    if (!window_.contains(s)) throw Error(ErrorCode::RegionOutsideWindow, "point lies outside the window");
  }
  if (marks_ && marks_->size() != points_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "marks and points differ in length");
  }
}

PointPattern PointPattern::with_marks(std::vector<double> marks) const {
  return PointPattern(window_, points_, std::move(marks));
}

PointPattern PointPattern::without_marks() const { return PointPattern(window_, points_); }

// ---------------------------------------------------------------------------

IntensityFunction IntensityFunction::constant(double lambda) {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::NegativeIntensity, "intensity must be >= 0");
  if (!std::isfinite(lambda)) throw Error(ErrorCode::UnboundedIntensity, "intensity must be finite");
  IntensityFunction f;
  f.f_ = [lambda](const Location&) { return lambda; };
  f.lambda_max_ = lambda;
  return f;
}

IntensityFunction IntensityFunction::gridded(const BauGrid& grid, std::vector<double> values) {
  if (values.size() != grid.size()) throw Error(ErrorCode::DimensionMismatch, "one intensity per cell required");
  double top = 0.0;
  for (double v : values) {
    if (!(v >= 0.0)) throw Error(ErrorCode::NegativeIntensity, "intensity must be >= 0");
    if (!std::isfinite(v)) throw Error(ErrorCode::UnboundedIntensity, "intensity must be finite");
    top = std::max(top, v);
  }
  IntensityFunction f;
  f.f_ = [grid, values = std::move(values)](const Location& s) {
    const auto c = grid.locate(s);
    return c ? values[*c] : 0.0;
  };
  f.lambda_max_ = top;
  return f;
}

IntensityFunction IntensityFunction::callable(std::function<double(const Location&)> fn, double lambda_max) {
  if (!std::isfinite(lambda_max)) throw Error(ErrorCode::UnboundedIntensity, "lambda_max must be finite");
  if (!(lambda_max >= 0.0)) throw Error(ErrorCode::NegativeIntensity, "lambda_max must be >= 0");
  IntensityFunction f;
  f.f_ = std::move(fn);
  f.lambda_max_ = lambda_max;
  return f;
}

double IntensityFunction::operator()(const Location& s) const { return f_(s); }

// ---------------------------------------------------------------------------

namespace {

Location uniform_in_box(Engine& rng, const Location& lo, const Location& hi) {
  std::array<double, 3> c{};
  for (std::size_t a = 0; a < lo.dim(); ++a) {
    c[a] = std::uniform_real_distribution<double>(lo[a], hi[a])(rng);
  }
  return Location(std::span<const double>(c.data(), lo.dim()));
}

Location uniform_in(Engine& rng, const Window& window, const Location& lo, const Location& hi) {
  for (;;) {
    Location s = uniform_in_box(rng, lo, hi);
    if (window.kind() == Window::Kind::Box || window.contains(s)) return s;
  }
}

std::vector<Location> uniform_points(Engine& rng, const Window& window, std::size_t n) {
  std::vector<Location> pts;
  pts.reserve(n);
  for (std::size_t i = 0; i < n; ++i) pts.push_back(uniform_in(rng, window, window.lower(), window.upper()));
  return pts;
}

}  // namespace

PointPattern simulate_homogeneous_poisson(const Window& window, double lambda, std::uint64_t seed) {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::NegativeIntensity, "intensity must be >= 0");
  if (!std::isfinite(lambda)) throw Error(ErrorCode::UnboundedIntensity, "intensity must be finite");
  Engine rng(seed);
  const double mean = lambda * window.volume();
  const auto n = mean > 0.0 ? static_cast<std::size_t>(std::poisson_distribution<long long>(mean)(rng)) : 0;
  return PointPattern(window, uniform_points(rng, window, n));
}

PointPattern simulate_binomial(const Window& window, std::size_t n, std::uint64_t seed) {
  Engine rng(seed);
  return PointPattern(window, uniform_points(rng, window, n));
}

PointPattern simulate_inhomogeneous_poisson(const Window& window, const IntensityFunction& intensity,
                                            std::uint64_t seed) {
  const double top = intensity.lambda_max();
  const auto dominating = simulate_homogeneous_poisson(window, top, seed);
  Engine rng(derive_seed(seed, 0x7417));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Location> kept;
  for (const auto& s : dominating.points()) {
    const double l = intensity(s);
    if (!(l >= 0.0)) throw Error(ErrorCode::NegativeIntensity, "intensity must be >= 0");
    if (l > top * (1.0 + 1e-12)) throw Error(ErrorCode::UnboundedIntensity, "intensity exceeds lambda_max");
    if (u(rng) * top < l) kept.push_back(s);
  }
  return PointPattern(window, std::move(kept));
}

// ---------------------------------------------------------------------------

LgcpSampler::LgcpSampler(const Window& window, const BauGrid& grid, double gp_mean,
                         const CovarianceModel& gp_covariance)
    : window_(window), grid_(grid), mean_(gp_mean) {
  if (!std::isfinite(gp_mean)) throw Error(ErrorCode::InvalidParameter, "gp mean must be finite");
  if (!window.covers(grid.window())) throw Error(ErrorCode::InvalidWindow, "grid must lie in the window");
  const auto centroids = grid.centroids();
  const auto llt = factorize_spd(gram_matrix(gp_covariance, centroids), ErrorCode::SingularCovariance,
                                 "LGCP centroid covariance");
  chol_ = llt.matrixL();
}

LgcpRealization LgcpSampler::operator()(std::uint64_t seed) const {
  Engine rng(seed);
  std::normal_distribution<double> normal;
  const auto m = chol_.rows();
  Eigen::VectorXd z(m);
  for (Eigen::Index i = 0; i < m; ++i) z(i) = normal(rng);
  Eigen::VectorXd field = chol_.triangularView<Eigen::Lower>() * z;
  field.array() += mean_;

  std::vector<Location> pts;
  for (std::size_t j = 0; j < grid_.size(); ++j) {
    const auto& cell = grid_.cells()[j];
    const double mu = std::exp(field(static_cast<Eigen::Index>(j))) * cell.volume;
    const auto n = static_cast<std::size_t>(std::poisson_distribution<long long>(mu)(rng));
    for (std::size_t k = 0; k < n; ++k) pts.push_back(uniform_in(rng, grid_.window(), cell.lower, cell.upper));
  }
  return {PointPattern(window_, std::move(pts)), std::move(field)};
}

LgcpRealization simulate_lgcp(const Window& window, const BauGrid& grid, double gp_mean,
                              const CovarianceModel& gp_covariance, std::uint64_t seed) {
  return LgcpSampler(window, grid, gp_mean, gp_covariance)(seed);
}

// ---------------------------------------------------------------------------

std::size_t count(const PointPattern& pattern, const Window& region) {
  if (!pattern.window().covers(region)) {
    throw Error(ErrorCode::RegionOutsideWindow, "region is not contained in the pattern window");
  }
  return static_cast<std::size_t>(std::count_if(pattern.points().begin(), pattern.points().end(),
                                                [&](const Location& s) { return region.contains(s); }));
}

std::vector<double> estimate_k_function(const PointPattern& pattern, std::span<const double> radii) {
  if (pattern.size() < 2) throw Error(ErrorCode::TooFewPoints, "K-function needs at least 2 points");
  if (radii.empty()) throw Error(ErrorCode::InvalidParameter, "no radii given");
  for (std::size_t i = 0; i < radii.size(); ++i) {
    if (!(radii[i] > 0.0) || (i > 0 && !(radii[i] > radii[i - 1]))) {
      throw Error(ErrorCode::InvalidParameter, "radii must be positive and strictly increasing");
    }
  }
  const auto& w = pattern.window();
  double shorter = w.upper()[0] - w.lower()[0];
  for (std::size_t a = 1; a < w.dim(); ++a) shorter = std::min(shorter, w.upper()[a] - w.lower()[a]);
  if (radii.back() > 0.25 * shorter * (1.0 + 1e-12)) {
    throw Error(ErrorCode::RadiusTooLarge, "largest radius exceeds a quarter of the window's shorter side");
  }
  const auto sums = kernels::k_function_sums(pattern.points(), w, radii);
  const double n = static_cast<double>(pattern.size());
  std::vector<double> k(radii.size());
  for (std::size_t r = 0; r < radii.size(); ++r) k[r] = w.volume() / (n * n) * sums[r];
  return k;
}

CsrStatistic parse_csr_statistic(const std::string& name) {
  if (name == "k-deviation") return CsrStatistic::KDeviation;
  if (name == "quadrat-chi2") return CsrStatistic::QuadratChi2;
  throw Error(ErrorCode::InvalidParameter, "statistic: unknown CSR statistic '" + name + "'");
}

const char* to_string(CsrStatistic s) noexcept {
  return s == CsrStatistic::KDeviation ? "k-deviation" : "quadrat-chi2";
}

double csr_statistic(const PointPattern& pattern, CsrStatistic kind) {
  const auto& w = pattern.window();
  if (kind == CsrStatistic::KDeviation) {
    double shorter = w.upper()[0] - w.lower()[0];
    for (std::size_t a = 1; a < w.dim(); ++a) shorter = std::min(shorter, w.upper()[a] - w.lower()[a]);
    constexpr std::size_t n_radii = 10;
    std::vector<double> radii(n_radii);
    for (std::size_t i = 0; i < n_radii; ++i) radii[i] = 0.25 * shorter * static_cast<double>(i + 1) / n_radii;
    const auto k = estimate_k_function(pattern, radii);
    double dev = 0.0;
    for (std::size_t i = 0; i < n_radii; ++i) {
      // L(r) = sqrt(K / pi) in the plane; (K / (4/3 pi))^(1/3) in 3-d, r itself in 1-d (K = 2r).
      double l = 0.0;
      switch (w.dim()) {
        case 1: l = 0.5 * k[i]; break;
        case 2: l = std::sqrt(k[i] / std::numbers::pi); break;
        default: l = std::cbrt(k[i] / (4.0 / 3.0 * std::numbers::pi)); break;
      }
      dev = std::max(dev, std::abs(l - radii[i]));
    }
    return dev;
  }
  std::vector<std::size_t> res(w.dim(), 4);
  const auto grid = tessellate_baus(w, res);
  std::vector<double> observed(grid.size(), 0.0);
  for (const auto& s : pattern.points()) {
    if (const auto c = grid.locate(s)) observed[*c] += 1.0;
  }
  const double n = static_cast<double>(pattern.size());
  double chi2 = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const double e = n * grid.cells()[j].volume / w.volume();
    if (e > 0.0) chi2 += (observed[j] - e) * (observed[j] - e) / e;
  }
  return chi2;
}

CsrTestResult csr_test(const PointPattern& pattern, std::size_t n_sim, std::uint64_t seed, CsrStatistic kind) {
  if (pattern.size() < 5) throw Error(ErrorCode::TooFewPoints, "CSR test needs at least 5 points");
  if (n_sim < 39) throw Error(ErrorCode::TooFewSimulations, "n_sim must be >= 39");
  CsrTestResult out;
  out.statistic = csr_statistic(pattern, kind);
  out.n_sim = n_sim;
  out.seed = seed;
  out.kind = kind;
  const auto n = pattern.size();
  const auto& w = pattern.window();
  const auto sims = kernels::monte_carlo(n_sim, [&](std::size_t k) {
    return csr_statistic(simulate_binomial(w, n, derive_seed(seed, 0xC5, k)), kind);
  });
  const auto exceed = std::count_if(sims.begin(), sims.end(), [&](double t) { return t >= out.statistic; });
  out.p_value = static_cast<double>(1 + exceed) / static_cast<double>(n_sim + 1);
  return out;
}

}  // namespace spatial
