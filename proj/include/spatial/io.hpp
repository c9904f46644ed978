#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "spatial/core.hpp"
#include "spatial/covariance.hpp"
#include "spatial/kriging.hpp"
#include "spatial/lattice.hpp"
#include "spatial/multivariate.hpp"
#include "spatial/pointproc.hpp"
#include "spatial/spacetime.hpp"
#include "spatial/vecchia.hpp"

namespace spatial::io {

/// Fixed-precision decimal used by every writer, so outputs diff cleanly.
std::string format_number(double v);

std::string read_text(const std::filesystem::path& path);

/// Header `x,y[,z],value[,cov...]`. Extra columns become covariates with a
/// leading column of ones prepended.
SpatialDataset parse_dataset_csv(const std::string& text);
SpatialDataset read_dataset_csv(const std::filesystem::path& path);

std::string variogram_csv(const EmpiricalVariogram& v);
std::string prediction_csv(const PredictionMap& map);

/// Plain-text raster, north row first; clipped cells get the nodata value.
std::string raster_ascii(const BauGrid& grid, const std::vector<double>& values, double nodata = -9999.0);

/// Binary 16-bit PGM (P5), one pixel per grid cell, north up. Linear min-max
/// scaling; a constant map is mid-gray; NaN and clipped cells are 0.
std::string render_map(const BauGrid& grid, const std::vector<double>& values);

/// `x,y[,mark]` rows preceded by `# window: x0 y0 x1 y1`.
std::string pattern_csv(const PointPattern& pattern);
PointPattern parse_pattern_csv(const std::string& text);

std::string csr_report(const CsrTestResult& result);

std::string edge_list_csv(const NeighborhoodGraph& graph);
std::string node_values_csv(const NeighborhoodGraph& graph, const Eigen::VectorXd& mean,
                            const Eigen::VectorXd& sd);

/// Rows `node_order,neighbor_order_indices...`.
std::string dag_csv(const NeighborDag& dag);
std::string matrix_csv(const Eigen::MatrixXd& m);

/// `t,node_index,value` with t starting at 1 and 0-based nodes.
std::vector<Observation> parse_observations_csv(const std::string& text);
std::string observations_csv(const std::vector<Observation>& obs);
std::string filter_csv(const std::vector<Eigen::VectorXd>& means, const std::vector<Eigen::MatrixXd>& covs,
                       std::size_t first_t = 1);

/// Files staged in memory and published together: each is written to a
/// temporary name, then renamed. On any failure nothing is left behind.
class OutputSet {
 public:
  void add(std::string name, std::string contents);
  const std::vector<std::pair<std::string, std::string>>& files() const noexcept { return files_; }
  void commit(const std::filesystem::path& dir) const;

 private:
  std::vector<std::pair<std::string, std::string>> files_;
};

}  // namespace spatial::io
