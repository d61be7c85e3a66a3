#pragma once

// Latent-geometry diagnostics for a trained decoder: condition numbers,
// magnification factors, observation-space path lengths, graph geodesics,
// interpolation smoothness and planar grid fields.

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "fmvae/flatloss.hpp"
#include "fmvae/tensor.hpp"

namespace fmvae {

inline constexpr double kDegenerateMetricTolerance = 1e-12;
inline constexpr std::size_t kDefaultPathSteps = 100;

// S_max(G) / S_min(G). Throws DegenerateMetric when S_min <= 1e-12.
double condition_number(const Eigen::MatrixXd& metric);

// sqrt(det G), with a negative round-off determinant clamped to zero.
double magnification_factor(const Eigen::MatrixXd& metric);

// Each value divided by the list mean. Throws DegenerateMetric on a
// non-positive mean.
std::vector<double> normalised_mf(std::span<const double> mf);

struct LatentPath {
  std::vector<Eigen::VectorXd> waypoints;

  double latent_length() const;
};

LatentPath straight_line(const Eigen::VectorXd& from, const Eigen::VectorXd& to, std::size_t steps);

// Sum of ||f(w_{k+1}) - f(w_k)|| over consecutive waypoints.
double path_length_observation(const DecodeFn& decoder, const LatentPath& path);

struct BoundingBox {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  // Per-axis min/max of the rows of `z`, widened by `margin` times the extent
  // on each side.
  static BoundingBox around(const Tensor& z, double margin = 0.1);
};

struct GraphEdge {
  std::size_t to;
  double weight;
};

struct GeodesicGraph {
  Eigen::MatrixXd nodes;    // [n x N_z]
  Eigen::MatrixXd decoded;  // [n x N_x]; may be empty for hand-built graphs
  std::vector<std::vector<GraphEdge>> adjacency;
  std::size_t neighbour_count = 0;

  std::size_t node_count() const { return static_cast<std::size_t>(nodes.rows()); }
  std::size_t edge_count() const;
  std::size_t nearest_node(const Eigen::VectorXd& z) const;

  // Undirected graph from explicit weighted edges.
  static GeodesicGraph from_edges(Eigen::MatrixXd nodes,
                                  std::span<const std::pair<std::pair<std::size_t, std::size_t>, double>> edges);
};

// Uniform nodes in `box`, symmetric k-nearest-neighbour edges weighted by the
// observation-space chord ||f(z_a) - f(z_b)||. Throws GraphConnectivity when
// the result has more than one component.
GeodesicGraph build_geodesic_graph(const DecodeFn& decoder, const BoundingBox& box, std::size_t node_count,
                                   std::size_t neighbour_count, std::uint64_t seed);

struct ShortestPath {
  std::vector<std::size_t> nodes;
  double length = 0.0;
};

// Non-negative-weight shortest path between two graph nodes.
ShortestPath shortest_path(const GeodesicGraph& graph, std::size_t source, std::size_t target);

struct Geodesic {
  LatentPath path;  // endpoints included
  double length = 0.0;
};

// Endpoints are attached to their nearest nodes by chord edges.
Geodesic geodesic(const GeodesicGraph& graph, const DecodeFn& decoder, const Eigen::VectorXd& from,
                  const Eigen::VectorXd& to);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

MeanStd mean_std(std::span<const double> values);

using LatentPair = std::pair<Eigen::VectorXd, Eigen::VectorXd>;

struct RatioTable {
  std::vector<double> observation;  // straight-line length / geodesic length
  std::vector<double> latent;       // ||z_b - z_a|| / latent length of the geodesic
  MeanStd observation_stats;
  MeanStd latent_stats;
};

RatioTable ratio_table(const DecodeFn& decoder, const GeodesicGraph& graph, std::span<const LatentPair> pairs,
                       std::size_t steps = kDefaultPathSteps);

struct Smoothness {
  std::vector<double> mean;  // per output dimension
  std::vector<double> std;
  double overall_mean = 0.0;  // mean over dimensions of `mean`
};

// |second difference / dt^2| of decoded straight-line interpolations,
// aggregated per output dimension over pairs and interior waypoints.
Smoothness smoothness(const DecodeFn& decoder, std::span<const LatentPair> pairs, std::size_t steps = kDefaultPathSteps);

struct GridFields {
  std::size_t resolution = 0;
  std::vector<Eigen::Vector2d> points;               // cell centres, row-major (z2 major)
  std::vector<double> mf;                            // MF(z) per cell
  std::vector<std::array<double, 2>> vector_field;   // (||J_1||, ||J_2||) per cell
  std::vector<std::vector<double>> distance;         // one field per centre
};

// Fields on a resolution x resolution grid over `box`. Distance fields are
// shortest paths over the grid with edge weight sqrt(dz^T G(z_mid) dz); each
// cell links to the 8 adjacent cells plus the (2,1), (3,1), (3,2) offsets and
// their reflections, which keeps the flat-space error under 2%. Requires
// N_z = 2.
GridFields grid_fields(const DecodeFn& decoder, const BoundingBox& box, std::size_t resolution,
                       std::span<const Eigen::Vector2d> centres = {}, double h = kAnalysisJacobianStep);

// Writes `z1,z2,value` rows.
void write_field_csv(const std::filesystem::path& path, std::span<const Eigen::Vector2d> points,
                     std::span<const double> values);

struct BoxStats {
  std::size_t count = 0;
  double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0, mean = 0.0, std = 0.0;

  double iqr() const { return q3 - q1; }
};

BoxStats box_stats(std::span<const double> values);

struct AnalysisReport {
  std::vector<double> condition_numbers;
  std::vector<double> mf_values;
  std::vector<double> normalised_mf;
  std::size_t degenerate_samples = 0;
  std::optional<RatioTable> ratios;
  std::optional<Smoothness> smoothness;

  std::string to_json() const;
};

// Condition numbers and MFs at the rows of `z`. Degenerate metrics are
// counted rather than thrown.
AnalysisReport metric_report(const DecodeFn& decoder, const Tensor& z, double h = kAnalysisJacobianStep);

}  // namespace fmvae
