#include "spatial/pipeline.hpp"

#include <cmath>
#include <cstdlib>
#include <functional>
#include <sstream>

#include "spatial/kernels.hpp"
#include "spatial/parallel.hpp"

namespace spatial {

namespace {

Error bad_key(const std::string& key, const std::string& why) { return Error(ErrorCode::ConfigError, key + ": " + why); }

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace

Config Config::parse(const std::string& text) {
  Config c;
  std::istringstream in(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigError, "line " + std::to_string(no) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(ErrorCode::ConfigError, "line " + std::to_string(no) + ": empty key");
    if (c.values_.count(key)) throw bad_key(key, "given twice");
    c.values_[key] = value;
  }
  return c;
}

Config Config::load(const std::filesystem::path& path) {
  Config c = parse(io::read_text(path));
  c.base_ = path.parent_path();
  return c;
}

const std::string& Config::text(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw bad_key(key, "required key is missing");
  return it->second;
}

std::string Config::text_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? text(key) : fallback;
}

double Config::number(const std::string& key) const {
  const auto& s = text(key);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) throw bad_key(key, "'" + s + "' is not a number");
  return v;
}

double Config::number_or(const std::string& key, double fallback) const { return has(key) ? number(key) : fallback; }

std::size_t Config::count(const std::string& key) const {
  const double v = number(key);
  if (v < 0.0 || v != std::floor(v) || v > 1e15) throw bad_key(key, "must be a non-negative integer");
  return static_cast<std::size_t>(v);
}

std::size_t Config::count_or(const std::string& key, std::size_t fallback) const {
  return has(key) ? count(key) : fallback;
}

std::uint64_t Config::seed(const std::string& key) const {
  const auto& s = text(key);
  char* end = nullptr;
  errno = 0;
  const auto v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || s.front() == '-' || end != s.c_str() + s.size() || errno == ERANGE) {
    throw bad_key(key, "'" + s + "' is not an unsigned 64-bit integer");
  }
  return v;
}

std::filesystem::path Config::path(const std::string& key) const {
  std::filesystem::path p = text(key);
  if (p.is_relative()) p = base_ / p;
  if (!std::filesystem::exists(p)) throw bad_key(key, "file '" + p.string() + "' does not exist");
  return p;
}

void Config::reject_unknown(const std::set<std::string>& allowed) const {
  for (const auto& [key, value] : values_) {
    if (!allowed.count(key)) throw bad_key(key, "unknown key");
  }
}

// ---------------------------------------------------------------------------

namespace {

double positive(const Config& c, const std::string& key) {
  const double v = c.number(key);
  if (!(v > 0.0)) throw bad_key(key, "must be positive");
  return v;
}

double non_negative(const Config& c, const std::string& key, double fallback) {
  const double v = c.number_or(key, fallback);
  if (!(v >= 0.0)) throw bad_key(key, "must be >= 0");
  return v;
}

std::uint64_t required_seed(const Config& c) {
  if (!c.has("seed")) throw bad_key("seed", "required for stochastic commands");
  return c.seed("seed");
}

const std::set<std::string> kModelKeys{"family", "sill", "range", "nugget", "smoothness"};

CovarianceModel covariance_from(const Config& c, const std::string& prefix) {
  const auto k = [&](const char* name) { return prefix + name; };
  Family family;
  try {
    family = parse_family(c.text_or(k("family"), "exponential"));
  } catch (const Error&) {
    throw bad_key(k("family"), "unknown covariance family '" + c.text(k("family")) + "'");
  }
  const double sill = positive(c, k("sill"));
  const double range = positive(c, k("range"));
  const double nugget = non_negative(c, k("nugget"), 0.0);
  const double nu = c.has(k("smoothness")) ? positive(c, k("smoothness")) : 0.5;
  return CovarianceModel::make(family, sill, range, nugget, nu);
}

std::set<std::string> with_prefix(const std::string& prefix, const std::set<std::string>& keys) {
  std::set<std::string> out;
  for (const auto& k : keys) out.insert(prefix + k);
  return out;
}

Window window_from(const Config& c, const std::string& key) {
  std::istringstream in(c.text_or(key, "0 0 1 1"));
  std::vector<double> v;
  std::string tok;
  while (in >> tok) {
    char* end = nullptr;
    const double x = std::strtod(tok.c_str(), &end);
    if (end != tok.c_str() + tok.size() || !std::isfinite(x)) throw bad_key(key, "'" + tok + "' is not a number");
    v.push_back(x);
  }
  if (v.size() != 4) throw bad_key(key, "expected 'x0 y0 x1 y1'");
  if (!(v[2] > v[0]) || !(v[3] > v[1])) throw bad_key(key, "upper corner must exceed lower corner");
  return Window::box({v[0], v[1]}, {v[2], v[3]});
}

BauGrid grid_from(const Config& c, const Window& w, const std::string& prefix = "grid_") {
  const auto nx = c.count_or(prefix + "nx", 20);
  const auto ny = c.count_or(prefix + "ny", 20);
  if (nx == 0) throw bad_key(prefix + "nx", "must be >= 1");
  if (ny == 0) throw bad_key(prefix + "ny", "must be >= 1");
  return tessellate_baus(w, nx, ny);
}

// Errors raised while reading inputs and building models are the user's to fix.
template <class F>
auto validated(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConfigError) throw;
    throw Error(ErrorCode::ConfigError, e.what());
  }
}

std::string text_block(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::string out;
  for (const auto& [k, v] : rows) out += k + ": " + v + "\n";
  return out;
}

void add_map(io::OutputSet& out, const std::string& stem, const PredictionMap& map) {
  out.add(stem + ".csv", io::prediction_csv(map));
  out.add(stem + ".asc", io::raster_ascii(map.grid, map.predictions));
  out.add(stem + "_se.asc", io::raster_ascii(map.grid, map.standard_errors));
  out.add(stem + ".pgm", io::render_map(map.grid, map.predictions));
}

// --- commands --------------------------------------------------------------

io::OutputSet cmd_variogram(const Config& c) {
  std::set<std::string> allowed{"command", "data", "n_bins", "max_lag", "family", "smoothness"};
  c.reject_unknown(allowed);
  struct Setup {
    SpatialDataset data;
    std::size_t bins;
    double max_lag;
    std::optional<Family> family;
    double nu;
  };
  const auto s = validated([&] {
    auto data = io::read_dataset_csv(c.path("data"));
    const auto bins = c.count_or("n_bins", 15);
    if (bins == 0) throw bad_key("n_bins", "must be >= 1");
    std::optional<Family> family;
    if (c.has("family")) {
      try {
        family = parse_family(c.text("family"));
      } catch (const Error&) {
        throw bad_key("family", "unknown covariance family '" + c.text("family") + "'");
      }
    }
    const double nu = c.has("smoothness") ? positive(c, "smoothness") : 0.5;
    return Setup{std::move(data), bins, positive(c, "max_lag"), family, nu};
  });
  io::OutputSet out;
  const auto v = empirical_variogram(s.data, s.bins, s.max_lag);
  out.add("variogram.csv", io::variogram_csv(v));
  if (s.family) {
    const auto m = fit_variogram(v, *s.family, s.nu);
    out.add("variogram_fit.txt", text_block({{"family", to_string(m.family())},
                                             {"sill", io::format_number(m.sill())},
                                             {"range", io::format_number(m.range())},
                                             {"nugget", io::format_number(m.nugget())},
                                             {"smoothness", io::format_number(m.smoothness())}}));
  }
  return out;
}

io::OutputSet cmd_krige(const Config& c) {
  auto allowed = kModelKeys;
  allowed.insert({"command", "data", "noise", "trend", "mean", "window", "grid_nx", "grid_ny"});
  c.reject_unknown(allowed);
  struct Setup {
    SpatialDataset data;
    CovarianceModel model;
    double noise;
    std::string trend;
    double mean;
    BauGrid grid;
  };
  const auto s = validated([&] {
    auto data = io::read_dataset_csv(c.path("data"));
    auto model = covariance_from(c, "");
    const auto trend = c.text_or("trend", "constant");
    if (trend != "constant" && trend != "linear" && trend != "known") {
      throw bad_key("trend", "expected constant, linear or known");
    }
    if (trend == "known" && !c.has("mean")) throw bad_key("mean", "required when trend = known");
    if (trend != "known" && c.has("mean")) throw bad_key("mean", "only used when trend = known");
    const auto w = window_from(c, "window");
    return Setup{std::move(data), model, non_negative(c, "noise", 0.0), trend, c.number_or("mean", 0.0),
                 grid_from(c, w)};
  });
  PredictionMap map{s.grid, {}, {}};
  if (s.trend == "known") {
    const Eigen::VectorXd centred = s.data.values().array() - s.mean;
    const KrigingSystem sys(s.data.locations(), centred, s.model, Eigen::MatrixXd(s.data.size(), 0), s.noise);
    const auto targets = s.grid.centroids();
    for (const auto& r : kernels::predict_batch(sys, targets, Eigen::MatrixXd(targets.size(), 0))) {
      map.predictions.push_back(r.predictor + s.mean);
      map.standard_errors.push_back(r.standard_error());
    }
  } else {
    const auto trend = s.trend == "linear" ? TrendSpec::linear(s.data.dim()) : TrendSpec::intercept();
    map = kriging_map(s.data, s.model, trend, s.grid, s.noise);
  }
  io::OutputSet out;
  add_map(out, "prediction", map);
  return out;
}

NeighborhoodGraph lattice_from(const Config& c) {
  const auto nx = c.count("lattice_nx");
  const auto ny = c.count("lattice_ny");
  if (nx == 0) throw bad_key("lattice_nx", "must be >= 1");
  if (ny == 0) throw bad_key("lattice_ny", "must be >= 1");
  return build_grid_graph(nx, ny);
}

// Unit cells around the integer node coordinates, so rasters line up with nodes.
BauGrid lattice_cells(const NeighborhoodGraph& g) {
  const auto w = Window::box({0.5, 0.5}, {static_cast<double>(g.grid_width()) + 0.5,
                                          static_cast<double>(g.grid_height()) + 0.5});
  return tessellate_baus(w, g.grid_width(), g.grid_height());
}

std::vector<double> as_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

io::OutputSet cmd_car(const Config& c) {
  c.reject_unknown({"command", "lattice_nx", "lattice_ny", "rho", "tau2", "samples", "method", "burn_in", "thin",
                    "seed", "observations", "noise"});
  struct Setup {
    NeighborhoodGraph graph;
    CarModel model;
    std::size_t samples;
    SamplingMethod method;
    GibbsOptions gibbs;
    std::uint64_t seed;
    std::optional<LatticeObservations> obs;
  };
  const auto s = validated([&] {
    auto graph = lattice_from(c);
    const double rho = c.number("rho");
    const auto [lo, hi] = homogeneous_rho_bounds(graph);
    if (!(rho > lo && rho < hi)) {
      throw bad_key("rho", "must lie in (" + io::format_number(lo) + ", " + io::format_number(hi) + ")");
    }
    auto model = homogeneous_car(graph, rho, positive(c, "tau2"));
    const auto method_name = c.text_or("method", "exact");
    if (method_name != "exact" && method_name != "gibbs") throw bad_key("method", "expected exact or gibbs");
    GibbsOptions gibbs;
    gibbs.burn_in = c.count_or("burn_in", gibbs.burn_in);
    gibbs.thin = c.count_or("thin", gibbs.thin);
    if (gibbs.thin == 0) throw bad_key("thin", "must be >= 1");
    std::optional<LatticeObservations> obs;
    if (c.has("observations")) {
      const auto rows = io::parse_observations_csv(io::read_text(c.path("observations")));
      if (rows.size() != 1) throw bad_key("observations", "lattice observations must all have t = 1");
      const double noise = non_negative(c, "noise", 0.0);
      obs = LatticeObservations{rows[0].nodes, rows[0].values,
                                Eigen::VectorXd::Constant(rows[0].values.size(), noise)};
      for (auto node : obs->nodes) {
        if (node >= graph.size()) throw bad_key("observations", "node index " + std::to_string(node) + " out of range");
      }
    } else if (c.has("noise")) {
      throw bad_key("noise", "only used with observations");
    }
    return Setup{graph, model, c.count_or("samples", 1),
                 method_name == "exact" ? SamplingMethod::Exact : SamplingMethod::Gibbs, gibbs,
                 required_seed(c), obs};
  });
  io::OutputSet out;
  out.add("edges.csv", io::edge_list_csv(s.graph));
  const auto cells = lattice_cells(s.graph);
  if (s.samples > 0) {
    const Eigen::MatrixXd draws = sample_car(s.model, s.samples, s.seed, s.method, s.gibbs);
    out.add("samples.csv", io::matrix_csv(draws));
    out.add("sample.asc", io::raster_ascii(cells, as_vector(draws.row(0).transpose())));
  }
  if (s.obs) {
    std::vector<std::size_t> all(s.graph.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    const auto pred = car_predict(s.model, *s.obs, all);
    const Eigen::VectorXd sd = pred.variance.cwiseMax(0.0).cwiseSqrt();
    out.add("prediction.csv", io::node_values_csv(s.graph, pred.mean, sd));
    out.add("prediction.asc", io::raster_ascii(cells, as_vector(pred.mean)));
    out.add("loglik.txt", text_block({{"log_likelihood", io::format_number(car_log_likelihood(s.model, *s.obs))}}));
  }
  return out;
}

io::OutputSet cmd_simulate_pp(const Config& c) {
  c.reject_unknown({"command", "window", "lambda", "seed"});
  struct Setup {
    Window window;
    double lambda;
    std::uint64_t seed;
  };
  const auto s = validated([&] { return Setup{window_from(c, "window"), positive(c, "lambda"), required_seed(c)}; });
  io::OutputSet out;
  out.add("pattern.csv", io::pattern_csv(simulate_homogeneous_poisson(s.window, s.lambda, s.seed)));
  return out;
}

io::OutputSet cmd_csr_test(const Config& c) {
  c.reject_unknown({"command", "pattern", "n_sim", "statistic", "seed"});
  struct Setup {
    PointPattern pattern;
    std::size_t n_sim;
    CsrStatistic kind;
    std::uint64_t seed;
  };
  const auto s = validated([&] {
    auto pattern = io::parse_pattern_csv(io::read_text(c.path("pattern")));
    CsrStatistic kind;
    try {
      kind = parse_csr_statistic(c.text_or("statistic", "k-deviation"));
    } catch (const Error&) {
      throw bad_key("statistic", "expected k-deviation or quadrat-chi2");
    }
    const auto n_sim = c.count_or("n_sim", 99);
    if (n_sim < 39) throw bad_key("n_sim", "must be >= 39");
    return Setup{std::move(pattern), n_sim, kind, required_seed(c)};
  });
  io::OutputSet out;
  out.add("csr_report.txt", io::csr_report(csr_test(s.pattern, s.n_sim, s.seed, s.kind)));
  return out;
}

LinearMean mean_from(const Config& c, const std::string& prefix) {
  LinearMean m;
  m.intercept = c.number_or(prefix + "mean", 0.0);
  m.slope[0] = c.number_or(prefix + "slope_x", 0.0);
  m.slope[1] = c.number_or(prefix + "slope_y", 0.0);
  return m;
}

io::OutputSet cmd_cokrige(const Config& c) {
  std::set<std::string> allowed{"command", "data1", "data2", "target", "noise1", "noise2", "window", "grid_nx",
                                "grid_ny", "mesh_nx", "mesh_ny", "kernel", "kernel_amplitude", "kernel_shift_x",
                                "kernel_shift_y", "kernel_bandwidth", "y1_mean", "y1_slope_x", "y1_slope_y",
                                "y2_mean", "y2_slope_x", "y2_slope_y"};
  allowed.merge(with_prefix("c11_", kModelKeys));
  allowed.merge(with_prefix("c2_", kModelKeys));
  c.reject_unknown(allowed);
  struct Setup {
    SpatialDataset d1, d2;
    BivariateModel model;
    int target;
    double noise1, noise2;
    BauGrid grid;
  };
  const auto s = validated([&] {
    auto d1 = io::read_dataset_csv(c.path("data1"));
    auto d2 = io::read_dataset_csv(c.path("data2"));
    const auto w = window_from(c, "window");
    const auto mesh = grid_from(c, w, "mesh_");
    const auto kind = c.text_or("kernel", "zero");
    auto kernel = InteractionKernel::zero();
    if (kind == "gaussian") {
      kernel = InteractionKernel::shifted_gaussian(
          c.number("kernel_amplitude"), Location{c.number_or("kernel_shift_x", 0.0), c.number_or("kernel_shift_y", 0.0)},
          positive(c, "kernel_bandwidth"));
    } else if (kind == "local") {
      kernel = InteractionKernel::local_average(mesh, c.number("kernel_amplitude"));
    } else if (kind != "zero") {
      throw bad_key("kernel", "expected zero, local or gaussian");
    }
    const auto target = c.count_or("target", 2);
    if (target != 1 && target != 2) throw bad_key("target", "must be 1 or 2");
    BivariateModel model{mean_from(c, "y1_"), mean_from(c, "y2_"), covariance_from(c, "c11_"),
                         covariance_from(c, "c2_"), kernel, mesh};
    return Setup{std::move(d1), std::move(d2), model, static_cast<int>(target), non_negative(c, "noise1", 0.0),
                 non_negative(c, "noise2", 0.0), grid_from(c, w)};
  });
  PredictionMap map{s.grid, {}, {}};
  for (const auto& s0 : s.grid.centroids()) {
    const auto r = cokrige(s.model, s.d1.locations(), s.d1.values(), s.d2.locations(), s.d2.values(), s.target, s0,
                           s.noise1, s.noise2);
    map.predictions.push_back(r.mean);
    map.standard_errors.push_back(std::sqrt(r.variance));
  }
  io::OutputSet out;
  add_map(out, "cokriging", map);
  return out;
}

io::OutputSet cmd_vecchia_krige(const Config& c) {
  auto allowed = kModelKeys;
  allowed.insert({"command", "data", "noise", "mean", "q", "ordering", "window", "grid_nx", "grid_ny"});
  c.reject_unknown(allowed);
  struct Setup {
    SpatialDataset data;
    CovarianceModel model;
    double noise, mean;
    std::size_t q;
    OrderingStrategy ordering;
    BauGrid grid;
  };
  const auto s = validated([&] {
    auto data = io::read_dataset_csv(c.path("data"));
    auto model = covariance_from(c, "");
    OrderingStrategy ordering;
    try {
      ordering = parse_ordering(c.text_or("ordering", "maxmin"));
    } catch (const Error&) {
      throw bad_key("ordering", "expected maxmin or coordinate-sort");
    }
    const auto q = c.count_or("q", 10);
    if (q == 0) throw bad_key("q", "must be >= 1");
    return Setup{std::move(data), model, non_negative(c, "noise", 0.0), c.number_or("mean", 0.0), q, ordering,
                 grid_from(c, window_from(c, "window"))};
  });
  const auto ord = order_locations(s.data.locations(), s.ordering);
  const auto dag = select_neighbors(ord, s.data.locations(), s.q);
  const auto factor = build_vecchia_factor(ord, dag, s.model, s.data.locations(), s.noise, s.mean);
  const auto targets = s.grid.centroids();
  const auto pred = vecchia_krige(s.data, targets, s.model, s.q, s.noise, s.mean);
  PredictionMap map{s.grid, as_vector(pred.mean), {}};
  for (Eigen::Index i = 0; i < pred.variance.size(); ++i) map.standard_errors.push_back(std::sqrt(pred.variance(i)));
  io::OutputSet out;
  add_map(out, "prediction", map);
  out.add("dag.csv", io::dag_csv(dag));
  out.add("loglik.txt", text_block({{"q", std::to_string(s.q)},
                                    {"ordering", to_string(s.ordering)},
                                    {"log_likelihood", io::format_number(vecchia_loglik(factor, s.data.values()))}}));
  return out;
}

io::OutputSet cmd_kalman(const Config& c) {
  c.reject_unknown({"command", "lattice_nx", "lattice_ny", "alpha", "delta", "process_variance",
                    "observation_variance", "initial_variance", "initial_mean", "observations", "steps", "horizon",
                    "seed"});
  struct Setup {
    StateSpaceModel model;
    std::vector<Observation> obs;
    std::size_t horizon;
    bool simulated;
  };
  const auto s = validated([&] {
    const auto graph = lattice_from(c);
    const auto m = static_cast<Eigen::Index>(graph.size());
    StateSpaceModel model;
    model.transition = lattice_transition(graph, c.number("alpha"), c.number("delta"));
    model.process_noise = non_negative(c, "process_variance", 1.0) * Eigen::MatrixXd::Identity(m, m);
    model.observation_noise = Eigen::VectorXd::Constant(m, non_negative(c, "observation_variance", 1.0));
    model.initial.mean = Eigen::VectorXd::Constant(m, c.number_or("initial_mean", 0.0));
    model.initial.cov = positive(c, "initial_variance") * Eigen::MatrixXd::Identity(m, m);
    model.validate();
    std::vector<Observation> obs;
    bool simulated = false;
    if (c.has("observations")) {
      if (c.has("steps")) throw bad_key("steps", "only used when observations are simulated");
      obs = io::parse_observations_csv(io::read_text(c.path("observations")));
      for (const auto& o : obs) {
        for (auto node : o.nodes) {
          if (node >= graph.size()) throw bad_key("observations", "node index " + std::to_string(node) + " out of range");
        }
      }
    } else {
      const auto k = c.count("steps");
      if (k == 0) throw bad_key("steps", "must be >= 1");
      obs = simulate_dynamical(model, k, required_seed(c)).observations;
      simulated = true;
    }
    return Setup{model, std::move(obs), c.count_or("horizon", 0), simulated};
  });
  const auto f = kalman_filter(s.model, s.obs);
  const auto sm = kalman_smooth(s.model, f);
  io::OutputSet out;
  if (s.simulated) out.add("observations.csv", io::observations_csv(s.obs));
  out.add("filtered.csv", io::filter_csv(f.filtered_means, f.filtered_covs));
  out.add("smoothed.csv", io::filter_csv(sm.means, sm.covs));
  if (s.horizon > 0) {
    const auto fc = kalman_forecast(s.model, f, s.horizon);
    out.add("forecast.csv", io::filter_csv(fc.means, fc.covs, s.obs.size() + 1));
  }
  out.add("loglik.txt", text_block({{"log_likelihood", io::format_number(f.log_likelihood)}}));
  return out;
}

}  // namespace

io::OutputSet run_pipeline(const std::string& command, const Config& config) {
  static const std::map<std::string, std::function<io::OutputSet(const Config&)>> commands{
      {"variogram", cmd_variogram},   {"krige", cmd_krige},       {"car", cmd_car},
      {"simulate-pp", cmd_simulate_pp}, {"csr-test", cmd_csr_test}, {"cokrige", cmd_cokrige},
      {"vecchia-krige", cmd_vecchia_krige}, {"kalman", cmd_kalman}};
  const auto it = commands.find(command);
  if (it == commands.end()) throw bad_key("command", "unknown command '" + command + "'");
  if (config.has("command") && config.text("command") != command) {
    throw bad_key("command", "config is for '" + config.text("command") + "', not '" + command + "'");
  }
  return it->second(config);
}

RunResult run(const RunOptions& options) {
  RunResult result;
  io::OutputSet outputs;
  try {
    Config config = validated([&] { return Config::load(options.config); });
    if (options.seed) config.set("seed", std::to_string(*options.seed));
    const ThreadScope threads(options.threads);
    outputs = run_pipeline(options.command, config);
  } catch (const Error& e) {
    result.code = e.code() == ErrorCode::ConfigError ? ExitCode::ValidationError : ExitCode::NumericalError;
    result.message = e.what();
    return result;
  } catch (const std::exception& e) {
    result.code = ExitCode::NumericalError;
    result.message = e.what();
    return result;
  }
  try {
    outputs.commit(options.out_dir);
  } catch (const Error& e) {
    result.code = ExitCode::NumericalError;
    result.message = e.what();
    return result;
  }
  for (const auto& [name, contents] : outputs.files()) result.written.push_back(name);
  return result;
}

}  // namespace spatial
