#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "fmvae/errors.hpp"
#include "fmvae/random.hpp"
#include "fmvae/riemann.hpp"
#include "gradcheck.hpp"

using namespace fmvae;

namespace {

DecodeFn scaled_identity(double c) {
  return [c](const Tensor& z) { return scale(z, c); };
}

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

Eigen::VectorXd vec2(double a, double b) { return Eigen::Vector2d(a, b); }

BoundingBox unit_box() { return {vec2(0, 0), vec2(1, 1)}; }

}  // namespace

TEST_SUITE("riemann") {

TEST_CASE("condition number examples") {
  CHECK(condition_number(Eigen::MatrixXd::Identity(2, 2)) == 1.0);
  CHECK(condition_number(mat2(1, 0, 0, 4)) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(condition_number(mat2(2, 1, 1, 2)) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK_THROWS_AS((void)condition_number(mat2(1, 0, 0, 0)), DegenerateMetric);
  CHECK_THROWS_AS((void)condition_number(mat2(1e-13, 0, 0, 1e-13)), DegenerateMetric);
}

TEST_CASE("condition number is scale invariant and agrees with the eigensolver") {
  Rng rng(1);
  for (int i = 0; i < 50; ++i) {
    Eigen::MatrixXd j(5, 3);
    for (Eigen::Index r = 0; r < 5; ++r)
      for (Eigen::Index c = 0; c < 3; ++c) j(r, c) = rng.normal();
    const Eigen::MatrixXd g = j.transpose() * j;
    const double k = condition_number(g);
    CHECK(k >= 1.0);
    CHECK(condition_number(7.5 * g) == doctest::Approx(k).epsilon(1e-10));
    const Eigen::MatrixXd g2 = g.topLeftCorner(2, 2);
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(g2);
    CHECK(condition_number(g2) == doctest::Approx(svd.singularValues()(0) / svd.singularValues()(1)).epsilon(1e-10));
  }
}

TEST_CASE("magnification factor examples") {
  CHECK(magnification_factor(Eigen::MatrixXd::Identity(2, 2)) == 1.0);
  CHECK(magnification_factor(mat2(4, 0, 0, 9)) == 6.0);
  CHECK(magnification_factor(mat2(1, 1, 1, 1 - 1e-17)) == 0.0);
}

TEST_CASE("magnification factor is the product of singular values") {
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    Eigen::MatrixXd j(6, 2);
    for (Eigen::Index r = 0; r < 6; ++r)
      for (Eigen::Index c = 0; c < 2; ++c) j(r, c) = rng.normal();
    const Eigen::JacobiSVD<Eigen::MatrixXd> svd(j);
    CHECK(std::abs(magnification_factor(j.transpose() * j) - svd.singularValues().prod()) <= 1e-9);
  }
}

TEST_CASE("normalised magnification factors") {
  CHECK(normalised_mf(std::vector<double>{2, 2, 2}) == std::vector<double>{1, 1, 1});
  CHECK(normalised_mf(std::vector<double>{1, 3}) == std::vector<double>{0.5, 1.5});
  CHECK_THROWS_AS((void)normalised_mf(std::vector<double>{0, 0}), DegenerateMetric);
  Rng rng(3);
  std::vector<double> v(37);
  for (double& x : v) x = std::exp(rng.normal());
  const auto n = normalised_mf(v);
  CHECK(mean_std(n).mean == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("straight lines") {
  const LatentPath one = straight_line(vec2(0, 0), vec2(3, 4), 1);
  REQUIRE(one.waypoints.size() == 2);
  CHECK(one.waypoints[1] == vec2(3, 4));
  const LatentPath ten = straight_line(vec2(1, -1), vec2(3, 5), 10);
  CHECK(ten.waypoints[5].isApprox(vec2(2, 2), 1e-15));
  for (std::size_t m : {1, 3, 100}) CHECK(straight_line(vec2(0, 0), vec2(3, 4), m).latent_length() == doctest::Approx(5.0));
  CHECK_THROWS_AS((void)straight_line(vec2(0, 0), vec2(1, 1), 0), ContractViolation);
}

TEST_CASE("observation-space path lengths") {
  for (std::size_t m : {1, 7, 100})
    CHECK(path_length_observation(scaled_identity(2.0), straight_line(vec2(0, 0), vec2(0.6, 0.8), m)) ==
          doctest::Approx(2.0).epsilon(1e-12));
  CHECK(path_length_observation(scaled_identity(2.0), straight_line(vec2(1, 1), vec2(1, 1), 5)) == 0.0);
  LatentPath arc;
  for (int k = 0; k <= 1000; ++k) {
    const double t = 0.5 * std::numbers::pi * k / 1000.0;
    arc.waypoints.push_back(vec2(std::cos(t), std::sin(t)));
  }
  CHECK(std::abs(path_length_observation(scaled_identity(1.0), arc) - 0.5 * std::numbers::pi) <= 1e-4);
}

TEST_CASE("two-node graph") {
  const GeodesicGraph g = build_geodesic_graph(scaled_identity(3.0), unit_box(), 2, 1, 4);
  CHECK(g.edge_count() == 1);
  const double chord = 3.0 * (g.nodes.row(0) - g.nodes.row(1)).norm();
  CHECK(g.adjacency[0][0].weight == doctest::Approx(chord).epsilon(1e-14));
}

TEST_CASE("seeded graph builds are deterministic") {
  const GeodesicGraph a = build_geodesic_graph(scaled_identity(1.0), unit_box(), 200, 8, 5);
  const GeodesicGraph b = build_geodesic_graph(scaled_identity(1.0), unit_box(), 200, 8, 5);
  CHECK(a.nodes == b.nodes);
  CHECK(a.edge_count() == b.edge_count());
  for (std::size_t i = 0; i < a.adjacency.size(); ++i) {
    REQUIRE(a.adjacency[i].size() == b.adjacency[i].size());
    for (std::size_t e = 0; e < a.adjacency[i].size(); ++e) CHECK(a.adjacency[i][e].weight == b.adjacency[i][e].weight);
  }
  for (const auto& edges : a.adjacency)
    for (const auto& e : edges) {
      bool back = false;
      for (const auto& r : a.adjacency[e.to]) back = back || (&edges == &a.adjacency[r.to] && r.weight == e.weight);
      CHECK(back);
    }
}

TEST_CASE("flat-space graph distances are Euclidean") {
  const GeodesicGraph g = build_geodesic_graph(scaled_identity(1.0), unit_box(), 3600, 12, 6);
  const std::size_t a = g.nearest_node(vec2(0, 0));
  const std::size_t b = g.nearest_node(vec2(1, 1));
  const double euclid = (g.nodes.row(a) - g.nodes.row(b)).norm();
  CHECK(std::abs(shortest_path(g, a, b).length / euclid - 1.0) <= 0.05);
}

TEST_CASE("sparse graphs report their component count") {
  try {
    (void)build_geodesic_graph(scaled_identity(1.0), unit_box(), 400, 1, 7);
    FAIL("expected a connectivity error");
  } catch (const GraphConnectivity& e) {
    CHECK(e.components() > 1);
    CHECK(std::string(e.what()).find(std::to_string(e.components())) != std::string::npos);
  }
}

TEST_CASE("shortest path prefers two cheap hops") {
  Eigen::MatrixXd nodes(3, 2);
  nodes << 0, 0, 1, 0, 2, 0;
  const std::pair<std::pair<std::size_t, std::size_t>, double> edges[] = {{{0, 1}, 1.0}, {{1, 2}, 1.0}, {{0, 2}, 3.0}};
  const GeodesicGraph g = GeodesicGraph::from_edges(nodes, edges);
  const ShortestPath p = shortest_path(g, 0, 2);
  CHECK(p.length == 2.0);
  CHECK(p.nodes == std::vector<std::size_t>{0, 1, 2});

  Eigen::MatrixXd apart(2, 2);
  apart << 0, 0, 1, 1;
  const GeodesicGraph split = GeodesicGraph::from_edges(apart, {});
  CHECK_THROWS_AS((void)shortest_path(split, 0, 1), GraphConnectivity);
}

TEST_CASE("geodesics under a flat decoder") {
  const DecodeFn f = scaled_identity(2.5);
  const GeodesicGraph g = build_geodesic_graph(f, unit_box(), 3600, 12, 8);
  const Geodesic same = geodesic(g, f, vec2(0.3, 0.3), vec2(0.3, 0.3));
  CHECK(same.length == 0.0);
  const Geodesic geo = geodesic(g, f, vec2(0.1, 0.2), vec2(0.9, 0.7));
  const double expect = 2.5 * (vec2(0.9, 0.7) - vec2(0.1, 0.2)).norm();
  CHECK(std::abs(geo.length / expect - 1.0) <= 0.05);
  CHECK(geo.path.waypoints.front() == vec2(0.1, 0.2));
  CHECK(geo.path.waypoints.back() == vec2(0.9, 0.7));
}

TEST_CASE("ratio table under a flat decoder") {
  const DecodeFn f = scaled_identity(1.0);
  const GeodesicGraph g = build_geodesic_graph(f, unit_box(), 3600, 12, 9);
  Rng rng(10);
  std::vector<LatentPair> pairs;
  for (int i = 0; i < 20; ++i) pairs.emplace_back(vec2(rng.uniform(0, 1), rng.uniform(0, 1)), vec2(rng.uniform(0, 1), rng.uniform(0, 1)));
  const RatioTable t = ratio_table(f, g, pairs);
  // short pairs pay a relatively larger detour on a 3600-node random graph
  const double resolution = 0.1;
  CHECK(std::abs(t.observation_stats.mean - 1.0) <= resolution);
  CHECK(std::abs(t.latent_stats.mean - 1.0) <= resolution);
  for (double r : t.latent) CHECK((r > 0.0 && r <= 1.0));
}

TEST_CASE("latent ratio never exceeds one under a curved decoder") {
  const DecodeFn f = [](const Tensor& z) { return concat({z, scale(square(z), 3.0)}, 1); };
  const BoundingBox box{vec2(-1, -1), vec2(1, 1)};
  const GeodesicGraph g = build_geodesic_graph(f, box, 1500, 12, 11);
  Rng rng(12);
  std::vector<LatentPair> pairs;
  for (int i = 0; i < 20; ++i) pairs.emplace_back(vec2(rng.uniform(-1, 1), rng.uniform(-1, 1)), vec2(rng.uniform(-1, 1), rng.uniform(-1, 1)));
  for (double r : ratio_table(f, g, pairs).latent) CHECK((r > 0.0 && r <= 1.0));
}

TEST_CASE("smoothness") {
  const std::vector<LatentPair> pairs{{vec2(0, 0), vec2(1, 0.5)}, {vec2(-1, 2), vec2(0.5, 0.5)}};
  const Smoothness affine = smoothness([](const Tensor& z) { return add_scalar(scale(z, 3.0), 1.0); }, pairs);
  for (double m : affine.mean) CHECK(std::abs(m) <= 1e-9);

  const std::vector<LatentPair> unit{{Eigen::VectorXd::Constant(1, 0.0), Eigen::VectorXd::Constant(1, 1.0)}};
  for (std::size_t m : {2, 10, 100}) {
    const Smoothness q = smoothness([](const Tensor& z) { return square(z); }, unit, m);
    CHECK(q.mean[0] == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(q.std[0] <= 1e-6);
  }
  const DecodeFn curved = [](const Tensor& z) { return tanh(concat({z, square(z)}, 1)); };
  const Smoothness base = smoothness(curved, pairs);
  const Smoothness scaled = smoothness([&](const Tensor& z) { return scale(curved(z), 4.0); }, pairs);
  CHECK(scaled.overall_mean == doctest::Approx(4.0 * base.overall_mean).epsilon(1e-9));
  CHECK_THROWS_AS((void)smoothness(curved, pairs, 1), ContractViolation);
}

TEST_CASE("grid fields of flat decoders") {
  const BoundingBox box{vec2(-1, -1), vec2(1, 1)};
  const Eigen::Vector2d centre(0.0, 0.0);
  const GridFields id = grid_fields(scaled_identity(1.0), box, 41, std::span(&centre, 1));
  CHECK(id.points.size() == 41 * 41);
  for (double mf : id.mf) CHECK(mf == doctest::Approx(1.0).epsilon(1e-9));
  REQUIRE(id.distance.size() == 1);
  double worst = 0.0;
  for (std::size_t i = 0; i < id.points.size(); ++i) {
    const double r = id.points[i].norm();
    if (r == 0.0) {
      CHECK(id.distance[0][i] == 0.0);
      continue;
    }
    worst = std::max(worst, std::abs(id.distance[0][i] / r - 1.0));
  }
  CHECK(worst <= 0.02);

  const GridFields twice = grid_fields(scaled_identity(2.0), box, 9);
  for (const auto& v : twice.vector_field) {
    CHECK(v[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(v[1] == doctest::Approx(2.0).epsilon(1e-9));
  }
}

TEST_CASE("grid distance fields grow away from the centre") {
  const DecodeFn f = [](const Tensor& z) { return concat({z, square(z)}, 1); };
  const BoundingBox box{vec2(-1, -1), vec2(1, 1)};
  const Eigen::Vector2d centre(0.25, -0.5);
  const GridFields g = grid_fields(f, box, 21, std::span(&centre, 1));
  const auto& d = g.distance[0];
  const auto best = static_cast<std::size_t>(std::min_element(d.begin(), d.end()) - d.begin());
  CHECK(d[best] == 0.0);
  CHECK((g.points[best] - centre).norm() <= 0.1);
  // along each grid ray leaving the centre cell, distances do not decrease
  const std::size_t cx = best % 21;
  const std::size_t cy = best / 21;
  for (std::size_t x = cx + 1; x < 21; ++x) CHECK(d[cy * 21 + x] >= d[cy * 21 + x - 1]);
  for (std::size_t y = cy + 1; y < 21; ++y) CHECK(d[y * 21 + cx] >= d[(y - 1) * 21 + cx]);
}

TEST_CASE("grid fields need a planar latent space") {
  const BoundingBox box{Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(1, 1, 1)};
  CHECK_THROWS_AS((void)grid_fields(scaled_identity(1.0), box, 5), UnsupportedDimension);
}

TEST_CASE("box statistics") {
  const BoxStats b = box_stats(std::vector<double>{4, 1, 3, 2, 5});
  CHECK(b.count == 5);
  CHECK(b.min == 1.0);
  CHECK(b.q1 == 2.0);
  CHECK(b.median == 3.0);
  CHECK(b.q3 == 4.0);
  CHECK(b.max == 5.0);
  CHECK(b.iqr() == 2.0);
  CHECK(box_stats(std::vector<double>{1, 2}).median == 1.5);
}

TEST_CASE("reports and exports") {
  Rng rng(13);
  const Tensor z = rng.normal_tensor({30, 2});
  const AnalysisReport flat = metric_report(scaled_identity(1.0), z);
  CHECK(flat.condition_numbers.size() == 30);
  for (double k : flat.condition_numbers) CHECK(k == doctest::Approx(1.0).epsilon(1e-9));
  for (double m : flat.normalised_mf) CHECK(m == doctest::Approx(1.0).epsilon(1e-9));

  const AnalysisReport degenerate = metric_report([](const Tensor& x) { return concat({x, x}, 1) * 0.0; }, z);
  CHECK(degenerate.degenerate_samples == 30);
  CHECK(degenerate.normalised_mf.empty());

  const std::string json = flat.to_json();
  for (const char* key : {"condition_number", "magnification_factor", "normalised_mf", "median", "iqr"})
    CHECK(json.find(key) != std::string::npos);

  const auto path = std::filesystem::temp_directory_path() / "fmvae_field.csv";
  const std::vector<Eigen::Vector2d> pts{{0.5, -1.0}, {1.0, 2.0}};
  write_field_csv(path, pts, std::vector<double>{3.0, 4.25});
  std::ifstream in(path);
  std::string header;
  std::string first;
  std::getline(in, header);
  std::getline(in, first);
  CHECK(header == "z1,z2,value");
  CHECK(first == "0.5,-1,3");
  std::filesystem::remove(path);
}

TEST_CASE("analysis is repeatable") {
  const DecodeFn f = [](const Tensor& z) { return tanh(concat({z, square(z)}, 1)); };
  const BoundingBox box{vec2(-1, -1), vec2(1, 1)};
  const GeodesicGraph a = build_geodesic_graph(f, box, 300, 10, 14);
  const GeodesicGraph b = build_geodesic_graph(f, box, 300, 10, 14);
  const std::vector<LatentPair> pairs{{vec2(-0.8, -0.8), vec2(0.7, 0.9)}};
  CHECK(ratio_table(f, a, pairs).observation == ratio_table(f, b, pairs).observation);
}

}  // TEST_SUITE
