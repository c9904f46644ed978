#include "spatial/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <system_error>

namespace spatial::io {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, sep)) out.push_back(trim(cell));
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

double parse_number(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::IoError, "line " + std::to_string(line) + ": '" + s + "' is not a finite number");
  }
  return v;
}

std::size_t parse_index(const std::string& s, std::size_t line) {
  const double v = parse_number(s, line);
  if (v < 0.0 || v != std::floor(v)) {
    throw Error(ErrorCode::IoError, "line " + std::to_string(line) + ": '" + s + "' is not a non-negative integer");
  }
  return static_cast<std::size_t>(v);
}

// Non-empty lines, paired with 1-based line numbers.
std::vector<std::pair<std::size_t, std::string>> lines_of(const std::string& text) {
  std::vector<std::pair<std::size_t, std::string>> out;
  std::istringstream in(text);
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    line = trim(line);
    if (!line.empty()) out.emplace_back(no, line);
  }
  return out;
}

std::string join(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  out += '\n';
  return out;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (v == 0.0) return "0";  // folds -0
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SpatialDataset parse_dataset_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw Error(ErrorCode::EmptyDataset, "dataset file is empty");
  const auto header = split(lines.front().second, ',');
  if (header.size() < 3 || header[0] != "x" || header[1] != "y") {
    throw Error(ErrorCode::IoError, "dataset header must start with x,y");
  }
  const std::size_t dim = header[2] == "z" ? 3 : 2;
  if (header.size() <= dim || header[dim] != "value") {
    throw Error(ErrorCode::IoError, "dataset header is missing the value column");
  }
  const std::size_t n_cov = header.size() - dim - 1;
  const auto n = static_cast<Eigen::Index>(lines.size() - 1);

  std::vector<Location> locs;
  Eigen::VectorXd values(n);
  Eigen::MatrixXd cov(n, static_cast<Eigen::Index>(n_cov + 1));
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& [no, line] = lines[static_cast<std::size_t>(r) + 1];
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::IoError, "line " + std::to_string(no) + ": expected " +
                                          std::to_string(header.size()) + " fields");
    }
    std::array<double, 3> c{};
    for (std::size_t a = 0; a < dim; ++a) c[a] = parse_number(cells[a], no);
    locs.emplace_back(std::span<const double>(c.data(), dim));
    values(r) = parse_number(cells[dim], no);
    cov(r, 0) = 1.0;
    for (std::size_t k = 0; k < n_cov; ++k) {
      cov(r, static_cast<Eigen::Index>(k + 1)) = parse_number(cells[dim + 1 + k], no);
    }
  }
  if (n_cov == 0) return build_dataset(std::move(locs), std::move(values));
  return build_dataset(std::move(locs), std::move(values), std::move(cov));
}

SpatialDataset read_dataset_csv(const std::filesystem::path& path) { return parse_dataset_csv(read_text(path)); }

std::string variogram_csv(const EmpiricalVariogram& v) {
  std::string out = "lag,count,semivariance\n";
  for (const auto& b : v.bins) {
    out += join({format_number(b.lag), std::to_string(b.count), format_number(b.semivariance)});
  }
  return out;
}

std::string prediction_csv(const PredictionMap& map) {
  std::string out = "cell_x,cell_y,prediction,standard_error\n";
  const auto& cells = map.grid.cells();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    out += join({format_number(cells[i].centroid[0]), format_number(cells[i].centroid[1]),
                 format_number(map.predictions[i]), format_number(map.standard_errors[i])});
  }
  return out;
}

std::string raster_ascii(const BauGrid& grid, const std::vector<double>& values, double nodata) {
  if (values.size() != grid.size()) throw Error(ErrorCode::DimensionMismatch, "raster values do not match the grid");
  const auto shape = grid.shape();
  std::string out;
  out += "ncols " + std::to_string(shape[0]) + "\n";
  out += "nrows " + std::to_string(shape[1]) + "\n";
  out += "xll " + format_number(grid.window().lower()[0]) + "\n";
  out += "yll " + format_number(grid.window().lower()[1]) + "\n";
  out += "cellsize " + format_number(grid.cell_width(0)) + "\n";
  out += "nodata " + format_number(nodata) + "\n";
  for (std::size_t row = 0; row < shape[1]; ++row) {
    const std::size_t iy = shape[1] - 1 - row;
    for (std::size_t ix = 0; ix < shape[0]; ++ix) {
      const auto c = grid.cell_at(ix, iy);
      const double v = c && std::isfinite(values[*c]) ? values[*c] : nodata;
      if (ix) out += ' ';
      out += format_number(v);
    }
    out += '\n';
  }
  return out;
}

std::string render_map(const BauGrid& grid, const std::vector<double>& values) {
  if (grid.size() == 0 || values.empty()) throw Error(ErrorCode::EmptyMap, "map has no cells");
  if (values.size() != grid.size()) throw Error(ErrorCode::DimensionMismatch, "map values do not match the grid");
  double lo = INFINITY, hi = -INFINITY;
  for (double v : values) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(lo <= hi)) throw Error(ErrorCode::EmptyMap, "map has no finite values");
  const auto shape = grid.shape();
  std::string out = "P5\n" + std::to_string(shape[0]) + " " + std::to_string(shape[1]) + "\n65535\n";
  for (std::size_t row = 0; row < shape[1]; ++row) {
    const std::size_t iy = shape[1] - 1 - row;
    for (std::size_t ix = 0; ix < shape[0]; ++ix) {
      const auto c = grid.cell_at(ix, iy);
      unsigned level = 0;
      if (c && std::isfinite(values[*c])) {
        level = hi == lo ? 32768u : static_cast<unsigned>(std::lround((values[*c] - lo) / (hi - lo) * 65535.0));
      }
      out += static_cast<char>((level >> 8) & 0xFF);
      out += static_cast<char>(level & 0xFF);
    }
  }
  return out;
}

std::string pattern_csv(const PointPattern& pattern) {
  const auto& w = pattern.window();
  std::string out = "# window: " + format_number(w.lower()[0]) + " " + format_number(w.lower()[1]) + " " +
                    format_number(w.upper()[0]) + " " + format_number(w.upper()[1]) + "\n";
  const bool marked = pattern.marks().has_value();
  out += marked ? "x,y,mark\n" : "x,y\n";
  for (std::size_t i = 0; i < pattern.size(); ++i) {
    std::vector<std::string> row{format_number(pattern.points()[i][0]), format_number(pattern.points()[i][1])};
    if (marked) row.push_back(format_number((*pattern.marks())[i]));
    out += join(row);
  }
  return out;
}

PointPattern parse_pattern_csv(const std::string& text) {
  const auto lines = lines_of(text);
  std::optional<Window> window;
  std::vector<std::string> header;
  std::vector<Location> pts;
  std::vector<double> marks;
  for (const auto& [no, line] : lines) {
    if (line.rfind("# window:", 0) == 0) {
      std::istringstream in(line.substr(9));
      std::string tok;
      std::vector<double> v;
      while (in >> tok) v.push_back(parse_number(tok, no));
      if (v.size() != 4) throw Error(ErrorCode::IoError, "line " + std::to_string(no) + ": window needs 4 numbers");
      window = Window::box({v[0], v[1]}, {v[2], v[3]});
      continue;
    }
    if (line.front() == '#') continue;
    if (header.empty()) {
      header = split(line, ',');
      if (header.size() < 2 || header.size() > 3 || header[0] != "x" || header[1] != "y" ||
          (header.size() == 3 && header[2] != "mark")) {
        throw Error(ErrorCode::IoError, "pattern header must be x,y[,mark]");
      }
      continue;
    }
    const auto cells = split(line, ',');
    if (cells.size() != header.size()) {
      throw Error(ErrorCode::IoError, "line " + std::to_string(no) + ": wrong field count");
    }
    pts.push_back(Location{parse_number(cells[0], no), parse_number(cells[1], no)});
    if (header.size() == 3) marks.push_back(parse_number(cells[2], no));
  }
  if (!window) throw Error(ErrorCode::IoError, "pattern file has no '# window:' line");
  if (header.size() == 3) return PointPattern(*window, std::move(pts), std::move(marks));
  return PointPattern(*window, std::move(pts));
}

std::string csr_report(const CsrTestResult& r) {
  std::string out;
  out += std::string("statistic_kind: ") + to_string(r.kind) + "\n";
  out += "statistic: " + format_number(r.statistic) + "\n";
  out += "p_value: " + format_number(r.p_value) + "\n";
  out += "n_sim: " + std::to_string(r.n_sim) + "\n";
  out += "seed: " + std::to_string(r.seed) + "\n";
  return out;
}

std::string edge_list_csv(const NeighborhoodGraph& graph) {
  std::string out = "i,j,w\n";
  const SparseMatrix& w = graph.weights();
  // Row-major order for readability.
  std::vector<std::tuple<Eigen::Index, Eigen::Index, double>> edges;
  for (Eigen::Index k = 0; k < w.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(w, k); it; ++it) edges.emplace_back(it.row(), it.col(), it.value());
  }
  std::sort(edges.begin(), edges.end());
  for (const auto& [i, j, v] : edges) out += join({std::to_string(i), std::to_string(j), format_number(v)});
  return out;
}

std::string node_values_csv(const NeighborhoodGraph& graph, const Eigen::VectorXd& mean, const Eigen::VectorXd& sd) {
  std::string out = "node_index,x,y,mean,sd\n";
  for (std::size_t i = 0; i < graph.size(); ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    out += join({std::to_string(i), format_number(graph.nodes()[i][0]), format_number(graph.nodes()[i][1]),
                 format_number(mean(ii)), format_number(sd(ii))});
  }
  return out;
}

std::string dag_csv(const NeighborDag& dag) {
  std::string out = "node_order,neighbor_order_indices\n";
  for (std::size_t k = 0; k < dag.neighbors.size(); ++k) {
    std::vector<std::string> row{std::to_string(k)};
    for (auto j : dag.neighbors[k]) row.push_back(std::to_string(j));
    out += join(row);
  }
  return out;
}

std::string matrix_csv(const Eigen::MatrixXd& m) {
  std::string out;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<std::string> row;
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(format_number(m(i, j)));
    out += join(row);
  }
  return out;
}

std::vector<Observation> parse_observations_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty() || split(lines.front().second, ',') != std::vector<std::string>{"t", "node_index", "value"}) {
    throw Error(ErrorCode::IoError, "observation header must be t,node_index,value");
  }
  std::map<std::size_t, std::vector<std::pair<std::size_t, double>>> by_t;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto& [no, line] = lines[r];
    const auto cells = split(line, ',');
    if (cells.size() != 3) throw Error(ErrorCode::IoError, "line " + std::to_string(no) + ": expected 3 fields");
    const auto t = parse_index(cells[0], no);
    if (t == 0) throw Error(ErrorCode::IoError, "line " + std::to_string(no) + ": t starts at 1");
    by_t[t].emplace_back(parse_index(cells[1], no), parse_number(cells[2], no));
  }
  if (by_t.empty()) throw Error(ErrorCode::TooFewObservations, "no observations");
  std::vector<Observation> out(by_t.rbegin()->first);
  for (auto& [t, rows] : by_t) {
    auto& o = out[t - 1];
    o.values.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t a = 0; a < rows.size(); ++a) {
      o.nodes.push_back(rows[a].first);
      o.values(static_cast<Eigen::Index>(a)) = rows[a].second;
    }
  }
  return out;
}

std::string observations_csv(const std::vector<Observation>& obs) {
  std::string out = "t,node_index,value\n";
  for (std::size_t t = 0; t < obs.size(); ++t) {
    for (std::size_t a = 0; a < obs[t].nodes.size(); ++a) {
      out += join({std::to_string(t + 1), std::to_string(obs[t].nodes[a]),
                   format_number(obs[t].values(static_cast<Eigen::Index>(a)))});
    }
  }
  return out;
}

std::string filter_csv(const std::vector<Eigen::VectorXd>& means, const std::vector<Eigen::MatrixXd>& covs,
                       std::size_t first_t) {
  std::string out = "t,node_index,filtered_mean,filtered_sd\n";
  for (std::size_t t = 0; t < means.size(); ++t) {
    for (Eigen::Index i = 0; i < means[t].size(); ++i) {
      out += join({std::to_string(first_t + t), std::to_string(i), format_number(means[t](i)),
                   format_number(std::sqrt(std::max(covs[t](i, i), 0.0)))});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void OutputSet::add(std::string name, std::string contents) {
  files_.emplace_back(std::move(name), std::move(contents));
}

void OutputSet::commit(const std::filesystem::path& dir) const {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());

  std::vector<fs::path> temps, finals;
  auto cleanup = [&] {
    std::error_code ignore;
    for (const auto& p : temps) fs::remove(p, ignore);
    for (const auto& p : finals) fs::remove(p, ignore);
  };
  for (const auto& [name, contents] : files_) {
    const fs::path tmp = dir / ("." + name + ".tmp");
    temps.push_back(tmp);
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.close();
    if (!out) {
      cleanup();
      throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    }
  }
  for (std::size_t i = 0; i < files_.size(); ++i) {
    const fs::path target = dir / files_[i].first;
    fs::rename(temps[i], target, ec);
    if (ec) {
      cleanup();
      throw Error(ErrorCode::IoError, "cannot publish " + target.string() + ": " + ec.message());
    }
    finals.push_back(target);
  }
}

}  // namespace spatial::io
