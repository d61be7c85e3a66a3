#include "fmvae/riemann.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>

#include <nlohmann/json.hpp>

#include "fmvae/errors.hpp"
#include "fmvae/random.hpp"

namespace fmvae {

namespace {

constexpr std::size_t kDecodeChunk = 2048;

Tensor rows_to_tensor(const Eigen::MatrixXd& z) {
  std::vector<double> v(static_cast<std::size_t>(z.size()));
  for (Eigen::Index r = 0; r < z.rows(); ++r)
    for (Eigen::Index c = 0; c < z.cols(); ++c) v[static_cast<std::size_t>(r * z.cols() + c)] = z(r, c);
  return Tensor::from({static_cast<std::size_t>(z.rows()), static_cast<std::size_t>(z.cols())}, std::move(v));
}

Eigen::MatrixXd tensor_to_rows(const Tensor& t) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows()), static_cast<Eigen::Index>(t.cols()));
  for (std::size_t r = 0; r < t.rows(); ++r)
    for (std::size_t c = 0; c < t.cols(); ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = t(r, c);
  return m;
}

// Decodes the rows of z without recording, in bounded chunks.
Eigen::MatrixXd decode_rows(const DecodeFn& decoder, const Eigen::MatrixXd& z) {
  NoGradGuard no_grad;
  Eigen::MatrixXd out;
  for (Eigen::Index start = 0; start < z.rows(); start += kDecodeChunk) {
    const Eigen::Index n = std::min<Eigen::Index>(kDecodeChunk, z.rows() - start);
    const Eigen::MatrixXd chunk = tensor_to_rows(decoder(rows_to_tensor(z.middleRows(start, n))));
    if (out.size() == 0) out.resize(z.rows(), chunk.cols());
    out.middleRows(start, n) = chunk;
  }
  return out;
}

Eigen::MatrixXd stack(const std::vector<Eigen::VectorXd>& points) {
  if (points.empty()) return {};
  Eigen::MatrixXd m(static_cast<Eigen::Index>(points.size()), points[0].size());
  for (std::size_t i = 0; i < points.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
  return m;
}

Eigen::MatrixXd decode_path(const DecodeFn& decoder, const LatentPath& path) {
  return decode_rows(decoder, stack(path.waypoints));
}

struct QueueItem {
  double dist;
  std::size_t node;
  bool operator>(const QueueItem& o) const { return dist > o.dist || (dist == o.dist && node > o.node); }
};

// Single-source distances and predecessors over an adjacency list.
void dijkstra(const std::vector<std::vector<GraphEdge>>& adjacency, std::size_t source, std::vector<double>& dist,
              std::vector<std::size_t>* pred, std::size_t stop_at = std::numeric_limits<std::size_t>::max()) {
  const std::size_t n = adjacency.size();
  dist.assign(n, std::numeric_limits<double>::infinity());
  if (pred) pred->assign(n, n);
  std::priority_queue<QueueItem, std::vector<QueueItem>, std::greater<>> queue;
  dist[source] = 0.0;
  queue.push({0.0, source});
  while (!queue.empty()) {
    const QueueItem cur = queue.top();
    queue.pop();
    if (cur.dist > dist[cur.node]) continue;
    if (cur.node == stop_at) break;
    for (const auto& e : adjacency[cur.node]) {
      const double nd = cur.dist + e.weight;
      if (nd < dist[e.to]) {
        dist[e.to] = nd;
        if (pred) (*pred)[e.to] = cur.node;
        queue.push({nd, e.to});
      }
    }
  }
}

std::size_t count_components(const std::vector<std::vector<GraphEdge>>& adjacency) {
  std::vector<char> seen(adjacency.size(), 0);
  std::size_t components = 0;
  std::vector<std::size_t> stack;
  for (std::size_t s = 0; s < adjacency.size(); ++s) {
    if (seen[s]) continue;
    ++components;
    seen[s] = 1;
    stack.push_back(s);
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (const auto& e : adjacency[u]) {
        if (!seen[e.to]) {
          seen[e.to] = 1;
          stack.push_back(e.to);
        }
      }
    }
  }
  return components;
}

double quantile_sorted(const std::vector<double>& s, double q) {
  const double pos = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

}  // namespace

// ---------------------------------------------------------------------------
// Pointwise metric statistics

double condition_number(const Eigen::MatrixXd& metric) {
  if (metric.rows() != metric.cols() || metric.rows() == 0) throw ContractViolation("condition_number: G must be square");
  double s_min = 0.0;
  double s_max = 0.0;
  if (metric.rows() == 2) {
    const double mid = 0.5 * (metric(0, 0) + metric(1, 1));
    const double half_gap = 0.5 * (metric(0, 0) - metric(1, 1));
    const double off = 0.5 * (metric(0, 1) + metric(1, 0));
    const double r = std::hypot(half_gap, off);
    s_max = mid + r;
    s_min = mid - r;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(metric, Eigen::EigenvaluesOnly);
    s_min = solver.eigenvalues().minCoeff();
    s_max = solver.eigenvalues().maxCoeff();
  }
  if (!(s_min > kDegenerateMetricTolerance)) {
    throw DegenerateMetric("condition_number: smallest eigenvalue " + std::to_string(s_min) + " is degenerate");
  }
  return s_max / s_min;
}

double magnification_factor(const Eigen::MatrixXd& metric) {
  if (metric.rows() != metric.cols()) throw ContractViolation("magnification_factor: G must be square");
  const double det = metric.rows() == 2 ? metric(0, 0) * metric(1, 1) - metric(0, 1) * metric(1, 0) : metric.determinant();
  return std::sqrt(std::max(det, 0.0));
}

std::vector<double> normalised_mf(std::span<const double> mf) {
  if (mf.empty()) throw ContractViolation("normalised_mf: empty list");
  const double mean = std::accumulate(mf.begin(), mf.end(), 0.0) / static_cast<double>(mf.size());
  if (!(mean > 0.0)) throw DegenerateMetric("normalised_mf: mean magnification factor is not positive");
  std::vector<double> out(mf.begin(), mf.end());
  for (double& v : out) v /= mean;
  return out;
}

// ---------------------------------------------------------------------------
// Paths

double LatentPath::latent_length() const {
  double total = 0.0;
  for (std::size_t k = 1; k < waypoints.size(); ++k) total += (waypoints[k] - waypoints[k - 1]).norm();
  return total;
}

LatentPath straight_line(const Eigen::VectorXd& from, const Eigen::VectorXd& to, std::size_t steps) {
  if (steps < 1) throw ContractViolation("straight_line: needs at least one step");
  if (from.size() != to.size()) throw ContractViolation("straight_line: endpoint dimensions differ");
  LatentPath path;
  path.waypoints.reserve(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) / static_cast<double>(steps);
    path.waypoints.push_back((1.0 - t) * from + t * to);
  }
  return path;
}

double path_length_observation(const DecodeFn& decoder, const LatentPath& path) {
  if (path.waypoints.size() < 2) throw ContractViolation("path_length_observation: needs at least two waypoints");
  const Eigen::MatrixXd y = decode_path(decoder, path);
  double total = 0.0;
  for (Eigen::Index k = 1; k < y.rows(); ++k) total += (y.row(k) - y.row(k - 1)).norm();
  return total;
}

// ---------------------------------------------------------------------------
// Graphs

BoundingBox BoundingBox::around(const Tensor& z, double margin) {
  if (z.rank() != 2 || z.shape()[0] == 0) throw ContractViolation("bounding box of an empty latent set");
  const Eigen::MatrixXd m = tensor_to_rows(z);
  BoundingBox box{m.colwise().minCoeff().transpose(), m.colwise().maxCoeff().transpose()};
  const Eigen::VectorXd pad = margin * (box.hi - box.lo);
  box.lo -= pad;
  box.hi += pad;
  return box;
}

std::size_t GeodesicGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& a : adjacency) n += a.size();
  return n / 2;
}

std::size_t GeodesicGraph::nearest_node(const Eigen::VectorXd& z) const {
  if (nodes.rows() == 0) throw ContractViolation("nearest_node on an empty graph");
  Eigen::Index best = 0;
  (nodes.rowwise() - z.transpose()).rowwise().squaredNorm().minCoeff(&best);
  return static_cast<std::size_t>(best);
}

GeodesicGraph GeodesicGraph::from_edges(Eigen::MatrixXd nodes,
                                        std::span<const std::pair<std::pair<std::size_t, std::size_t>, double>> edges) {
  GeodesicGraph g;
  g.adjacency.resize(static_cast<std::size_t>(nodes.rows()));
  for (const auto& [ends, w] : edges) {
    const auto [a, b] = ends;
    if (a >= g.adjacency.size() || b >= g.adjacency.size()) throw ContractViolation("graph edge endpoint out of range");
    if (w < 0.0) throw ContractViolation("graph edge weights must be non-negative");
    g.adjacency[a].push_back({b, w});
    g.adjacency[b].push_back({a, w});
  }
  g.nodes = std::move(nodes);
  return g;
}

GeodesicGraph build_geodesic_graph(const DecodeFn& decoder, const BoundingBox& box, std::size_t node_count,
                                   std::size_t neighbour_count, std::uint64_t seed) {
  if (node_count < 2) throw ContractViolation("geodesic graph needs at least 2 nodes");
  if (neighbour_count < 1 || neighbour_count >= node_count) {
    throw ContractViolation("neighbour count must lie in [1, node_count)");
  }
  const auto dim = box.lo.size();
  Rng rng(seed);
  GeodesicGraph g;
  g.neighbour_count = neighbour_count;
  g.nodes.resize(static_cast<Eigen::Index>(node_count), dim);
  for (Eigen::Index i = 0; i < g.nodes.rows(); ++i)
    for (Eigen::Index d = 0; d < dim; ++d) g.nodes(i, d) = rng.uniform(box.lo(d), box.hi(d));
  g.decoded = decode_rows(decoder, g.nodes);

  // symmetric union of k-nearest-neighbour links
  std::vector<std::pair<std::size_t, std::size_t>> links;
  links.reserve(node_count * neighbour_count);
  std::vector<std::pair<double, std::size_t>> cand(node_count);
  for (std::size_t i = 0; i < node_count; ++i) {
    const auto zi = g.nodes.row(static_cast<Eigen::Index>(i));
    for (std::size_t j = 0; j < node_count; ++j) {
      cand[j] = {j == i ? std::numeric_limits<double>::infinity()
                        : (g.nodes.row(static_cast<Eigen::Index>(j)) - zi).squaredNorm(),
                 j};
    }
    std::nth_element(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(neighbour_count - 1), cand.end());
    for (std::size_t k = 0; k < neighbour_count; ++k) links.emplace_back(std::min(i, cand[k].second), std::max(i, cand[k].second));
  }
  std::sort(links.begin(), links.end());
  links.erase(std::unique(links.begin(), links.end()), links.end());

  g.adjacency.assign(node_count, {});
  for (const auto& [a, b] : links) {
    const double w = (g.decoded.row(static_cast<Eigen::Index>(a)) - g.decoded.row(static_cast<Eigen::Index>(b))).norm();
    g.adjacency[a].push_back({b, w});
    g.adjacency[b].push_back({a, w});
  }
  const std::size_t components = count_components(g.adjacency);
  if (components != 1) {
    throw GraphConnectivity("geodesic graph is disconnected: " + std::to_string(components) + " components", components);
  }
  return g;
}

ShortestPath shortest_path(const GeodesicGraph& graph, std::size_t source, std::size_t target) {
  const std::size_t n = graph.adjacency.size();
  if (source >= n || target >= n) throw ContractViolation("shortest_path: node out of range");
  std::vector<double> dist;
  std::vector<std::size_t> pred;
  dijkstra(graph.adjacency, source, dist, &pred, target);
  if (!std::isfinite(dist[target])) {
    throw GraphConnectivity("no path between nodes " + std::to_string(source) + " and " + std::to_string(target),
                            count_components(graph.adjacency));
  }
  ShortestPath out;
  out.length = dist[target];
  for (std::size_t v = target; v != n; v = v == source ? n : pred[v]) out.nodes.push_back(v);
  std::reverse(out.nodes.begin(), out.nodes.end());
  return out;
}

Geodesic geodesic(const GeodesicGraph& graph, const DecodeFn& decoder, const Eigen::VectorXd& from,
                  const Eigen::VectorXd& to) {
  Geodesic out;
  if ((from - to).norm() == 0.0) {
    out.path.waypoints = {from, to};
    return out;
  }
  const std::size_t a = graph.nearest_node(from);
  const std::size_t b = graph.nearest_node(to);
  const ShortestPath inner = shortest_path(graph, a, b);

  Eigen::MatrixXd ends(2, from.size());
  ends.row(0) = from.transpose();
  ends.row(1) = to.transpose();
  const Eigen::MatrixXd y = decode_rows(decoder, ends);
  auto node_output = [&](std::size_t i) -> Eigen::RowVectorXd {
    if (graph.decoded.rows() > 0) return graph.decoded.row(static_cast<Eigen::Index>(i));
    return decode_rows(decoder, graph.nodes.row(static_cast<Eigen::Index>(i))).row(0);
  };

  out.length = (y.row(0) - node_output(a)).norm() + inner.length + (y.row(1) - node_output(b)).norm();
  out.path.waypoints.push_back(from);
  for (std::size_t v : inner.nodes) out.path.waypoints.push_back(graph.nodes.row(static_cast<Eigen::Index>(v)).transpose());
  out.path.waypoints.push_back(to);
  return out;
}

// ---------------------------------------------------------------------------
// Aggregate statistics

MeanStd mean_std(std::span<const double> values) {
  MeanStd s;
  if (values.empty()) return s;
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(ss / n);
  return s;
}

RatioTable ratio_table(const DecodeFn& decoder, const GeodesicGraph& graph, std::span<const LatentPair> pairs,
                       std::size_t steps) {
  if (pairs.empty()) throw ContractViolation("ratio_table: needs at least one pair");
  RatioTable t;
  for (const auto& [za, zb] : pairs) {
    const Geodesic geo = geodesic(graph, decoder, za, zb);
    const double straight = path_length_observation(decoder, straight_line(za, zb, steps));
    const double latent_geo = geo.path.latent_length();
    t.observation.push_back(geo.length > 0.0 ? straight / geo.length : 1.0);
    t.latent.push_back(latent_geo > 0.0 ? (zb - za).norm() / latent_geo : 1.0);
  }
  t.observation_stats = mean_std(t.observation);
  t.latent_stats = mean_std(t.latent);
  return t;
}

Smoothness smoothness(const DecodeFn& decoder, std::span<const LatentPair> pairs, std::size_t steps) {
  if (steps < 2) throw ContractViolation("smoothness: needs at least 2 steps");
  if (pairs.empty()) throw ContractViolation("smoothness: needs at least one pair");
  const double inv_dt2 = static_cast<double>(steps) * static_cast<double>(steps);
  Eigen::VectorXd acc;
  Eigen::VectorXd acc2;
  double count = 0.0;
  for (const auto& [za, zb] : pairs) {
    const Eigen::MatrixXd y = decode_path(decoder, straight_line(za, zb, steps));
    if (acc.size() == 0) {
      acc = Eigen::VectorXd::Zero(y.cols());
      acc2 = Eigen::VectorXd::Zero(y.cols());
    }
    for (Eigen::Index k = 1; k + 1 < y.rows(); ++k) {
      const Eigen::VectorXd d2 = ((y.row(k + 1) - 2.0 * y.row(k) + y.row(k - 1)) * inv_dt2).cwiseAbs().transpose();
      acc += d2;
      acc2 += d2.cwiseProduct(d2);
      count += 1.0;
    }
  }
  Smoothness s;
  s.mean.resize(static_cast<std::size_t>(acc.size()));
  s.std.resize(s.mean.size());
  for (Eigen::Index d = 0; d < acc.size(); ++d) {
    const double m = acc(d) / count;
    s.mean[static_cast<std::size_t>(d)] = m;
    s.std[static_cast<std::size_t>(d)] = std::sqrt(std::max(acc2(d) / count - m * m, 0.0));
  }
  s.overall_mean = mean_std(s.mean).mean;
  return s;
}

// ---------------------------------------------------------------------------
// Grid fields

GridFields grid_fields(const DecodeFn& decoder, const BoundingBox& box, std::size_t resolution,
                       std::span<const Eigen::Vector2d> centres, double h) {
  if (box.lo.size() != 2) {
    throw UnsupportedDimension("grid fields need a 2-dimensional latent space, got " + std::to_string(box.lo.size()));
  }
  if (resolution < 2) throw ContractViolation("grid_fields: resolution must be at least 2");
  const std::size_t res = resolution;
  // Half-step lattice: even indices are grid points, odd ones are the
  // midpoints of every stencil offset used below.
  const std::size_t fine = 2 * res - 1;
  const Eigen::Vector2d step = (box.hi - box.lo) / static_cast<double>(res - 1);
  auto fine_point = [&](std::size_t ix, std::size_t iy) {
    return Eigen::Vector2d(box.lo(0) + 0.5 * step(0) * static_cast<double>(ix),
                           box.lo(1) + 0.5 * step(1) * static_cast<double>(iy));
  };

  std::vector<Eigen::Matrix2d> metric(fine * fine);
  std::vector<std::array<double, 2>> col_norm(fine * fine);
  for (std::size_t start = 0; start < fine * fine; start += kDecodeChunk) {
    const std::size_t n = std::min(kDecodeChunk, fine * fine - start);
    std::vector<double> zs(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
      const Eigen::Vector2d p = fine_point((start + i) % fine, (start + i) / fine);
      zs[2 * i] = p(0);
      zs[2 * i + 1] = p(1);
    }
    for (std::size_t i = 0; auto& s : metric_samples(decoder, Tensor::from({n, 2}, std::move(zs)), h)) {
      metric[start + i] = s.metric;
      col_norm[start + i] = {s.jacobian.col(0).norm(), s.jacobian.col(1).norm()};
      ++i;
    }
  }

  GridFields out;
  out.resolution = res;
  auto fine_index = [fine](std::size_t ix, std::size_t iy) { return iy * fine + ix; };
  for (std::size_t iy = 0; iy < res; ++iy) {
    for (std::size_t ix = 0; ix < res; ++ix) {
      const std::size_t f = fine_index(2 * ix, 2 * iy);
      out.points.push_back(fine_point(2 * ix, 2 * iy));
      out.mf.push_back(magnification_factor(metric[f]));
      out.vector_field.push_back(col_norm[f]);
    }
  }
  if (centres.empty()) return out;

  static constexpr int kOffsets[][2] = {{1, 0}, {0, 1}, {1, 1}, {1, -1}, {2, 1}, {1, 2}, {2, -1}, {1, -2},
                                        {3, 1}, {1, 3}, {3, -1}, {1, -3}, {3, 2}, {2, 3}, {3, -2}, {2, -3}};
  std::vector<std::vector<GraphEdge>> adjacency(res * res);
  const auto ires = static_cast<int>(res);
  for (int iy = 0; iy < ires; ++iy) {
    for (int ix = 0; ix < ires; ++ix) {
      for (const auto& off : kOffsets) {
        const int jx = ix + off[0];
        const int jy = iy + off[1];
        if (jx < 0 || jy < 0 || jx >= ires || jy >= ires) continue;
        const Eigen::Vector2d dz(step(0) * off[0], step(1) * off[1]);
        const auto& g = metric[fine_index(static_cast<std::size_t>(ix + jx), static_cast<std::size_t>(iy + jy))];
        const double w = std::sqrt(std::max(dz.dot(g * dz), 0.0));
        const std::size_t a = static_cast<std::size_t>(iy) * res + static_cast<std::size_t>(ix);
        const std::size_t b = static_cast<std::size_t>(jy) * res + static_cast<std::size_t>(jx);
        adjacency[a].push_back({b, w});
        adjacency[b].push_back({a, w});
      }
    }
  }
  for (const auto& c : centres) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < out.points.size(); ++i) {
      const double d = (out.points[i] - c).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = i;
      }
    }
    std::vector<double> dist;
    dijkstra(adjacency, best, dist, nullptr);
    out.distance.push_back(std::move(dist));
  }
  return out;
}

void write_field_csv(const std::filesystem::path& path, std::span<const Eigen::Vector2d> points,
                     std::span<const double> values) {
  if (points.size() != values.size()) throw ContractViolation("write_field_csv: size mismatch");
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "z1,z2,value\n";
  char buf[128];
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", points[i](0), points[i](1), values[i]);
    out << buf;
  }
}

// ---------------------------------------------------------------------------
// Reports

BoxStats box_stats(std::span<const double> values) {
  BoxStats b;
  b.count = values.size();
  if (values.empty()) return b;
  std::vector<double> s(values.begin(), values.end());
  std::sort(s.begin(), s.end());
  b.min = s.front();
  b.max = s.back();
  b.q1 = quantile_sorted(s, 0.25);
  b.median = quantile_sorted(s, 0.5);
  b.q3 = quantile_sorted(s, 0.75);
  const MeanStd ms = mean_std(s);
  b.mean = ms.mean;
  b.std = ms.std;
  return b;
}

AnalysisReport metric_report(const DecodeFn& decoder, const Tensor& z, double h) {
  AnalysisReport r;
  for (std::size_t start = 0; start < z.rows(); start += kDecodeChunk) {
    const std::size_t n = std::min(kDecodeChunk, z.rows() - start);
    const Tensor chunk = slice(z.detach(), 0, start, start + n);
    for (const auto& s : metric_samples(decoder, chunk, h)) {
      r.mf_values.push_back(magnification_factor(s.metric));
      try {
        r.condition_numbers.push_back(condition_number(s.metric));
      } catch (const DegenerateMetric&) {
        ++r.degenerate_samples;
      }
    }
  }
  // an all-degenerate decoder has no meaningful normalisation
  const bool any_volume = std::any_of(r.mf_values.begin(), r.mf_values.end(), [](double m) { return m > 0.0; });
  if (any_volume) r.normalised_mf = normalised_mf(r.mf_values);
  return r;
}

std::string AnalysisReport::to_json() const {
  using nlohmann::json;
  auto box = [](std::span<const double> v) {
    const BoxStats b = box_stats(v);
    return json{{"count", b.count}, {"min", b.min},       {"q1", b.q1},     {"median", b.median},
                {"q3", b.q3},       {"max", b.max},       {"mean", b.mean}, {"std", b.std},
                {"iqr", b.iqr()}};
  };
  json j;
  j["condition_number"] = box(condition_numbers);
  j["condition_number"]["values"] = condition_numbers;
  j["magnification_factor"] = box(mf_values);
  j["magnification_factor"]["values"] = mf_values;
  j["normalised_mf"] = box(normalised_mf);
  j["normalised_mf"]["values"] = normalised_mf;
  j["degenerate_samples"] = degenerate_samples;
  if (ratios) {
    j["ratio_observation"] = {{"mean", ratios->observation_stats.mean},
                              {"std", ratios->observation_stats.std},
                              {"values", ratios->observation}};
    j["ratio_latent"] = {
        {"mean", ratios->latent_stats.mean}, {"std", ratios->latent_stats.std}, {"values", ratios->latent}};
  }
  if (smoothness) {
    j["smoothness"] = {{"overall_mean", smoothness->overall_mean},
                       {"mean", smoothness->mean},
                       {"std", smoothness->std}};
  }
  return j.dump(2);
}

}  // namespace fmvae
