#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "tagrl/error.hpp"
#include "tagrl/graph.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>

using namespace tagrl;

namespace {

PhysicalTopology path3() { return PhysicalTopology(3, {{0, 1, {}}, {1, 2, {}}}); }

}  // namespace

TEST_CASE("adjacency of a 3-node path") {
  Eigen::MatrixXd expected(3, 3);
  expected << 0, 1, 0, 1, 0, 1, 0, 1, 0;
  CHECK(build_adjacency(path3()) == expected);
}

TEST_CASE("single node adjacency and normalization") {
  const PhysicalTopology one(1, {});
  CHECK(build_adjacency(one) == Eigen::MatrixXd::Zero(1, 1));
  CHECK(normalize_adjacency(build_adjacency(one))(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("4-cycle rows sum to 2") {
  const PhysicalTopology c4(4, {{0, 1, {}}, {1, 2, {}}, {2, 3, {}}, {0, 3, {}}});
  const auto a = build_adjacency(c4);
  for (int i = 0; i < 4; ++i) CHECK(a.row(i).sum() == 2.0);
}

TEST_CASE("normalized 3-node path matches the hand matrix") {
  const double r6 = 1.0 / std::sqrt(6.0);
  Eigen::MatrixXd expected(3, 3);
  expected << 0.5, r6, 0, r6, 1.0 / 3.0, r6, 0, r6, 0.5;
  const auto a_hat = normalize_adjacency(build_adjacency(path3()));
  CHECK((a_hat - expected).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("normalized adjacency matches the entrywise oracle and has spectral radius 1") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const int n = 2 + static_cast<int>(s % 9);
    const auto t = oracle::random_topology(n, 0.3, 100 + s);
    const auto a_hat = normalize_adjacency(build_adjacency(t));
    const auto ref = oracle::normalized_adjacency(t);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) CHECK(std::abs(a_hat(i, j) - ref[i][j]) < 1e-12);
    CHECK(std::abs(oracle::power_iteration(a_hat) - 1.0) < 1e-8);
  }
}

TEST_CASE("normalize_adjacency rejects malformed input") {
  Eigen::MatrixXd a(2, 2);
  a << 0, 1, 0, 0;
  CHECK_THROWS_AS(normalize_adjacency(a), ValidationError);
  a << 1, 1, 1, 0;
  CHECK_THROWS_AS(normalize_adjacency(a), ValidationError);
}

TEST_CASE("shortest paths") {
  CHECK(shortest_path_distances(path3())(0, 2) == 2);
  CHECK(shortest_path_distances(path3()).diameter == 2);

  std::vector<Edge> k4;
  for (int i = 0; i < 4; ++i)
    for (int j = i + 1; j < 4; ++j) k4.push_back({i, j, {}});
  const auto spd = shortest_path_distances(PhysicalTopology(4, k4));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(spd(i, j) == (i == j ? 0 : 1));

  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto t = oracle::random_topology(8, 0.15, 300 + s);
    const auto fw = oracle::floyd_warshall(t);
    const auto table = shortest_path_distances(t);
    int diameter = 0;
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) {
        CHECK(table(i, j) == fw[i][j]);
        diameter = std::max(diameter, fw[i][j]);
      }
    CHECK(table.diameter == diameter);
  }
}

TEST_CASE("topology validation") {
  CHECK_THROWS_WITH_AS(PhysicalTopology(3, {{0, 1, {}}, {2, 2, {}}}), doctest::Contains("self-loop"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(PhysicalTopology(3, {{0, 1, {}}, {1, 3, {}}}), doctest::Contains("out of range"),
                       ValidationError);
  CHECK_THROWS_WITH_AS(PhysicalTopology(3, {{0, 1, {}}, {1, 0, {}}, {1, 2, {}}}),
                       doctest::Contains("duplicate"), ValidationError);
  CHECK_THROWS_WITH_AS(PhysicalTopology(4, {{0, 1, {}}, {2, 3, {}}}), doctest::Contains("not connected"),
                       ValidationError);
  CHECK_THROWS_AS(PhysicalTopology(2, {{0, 1, {0.0, 1.0}}}), ValidationError);
  CHECK_THROWS_AS(PhysicalTopology(2, {{0, 1, {1.0, -1.0}}}), ValidationError);
}

TEST_CASE("generator defaults") {
  const auto t = generate_geant_like(7);
  CHECK(t.num_nodes() == 40);
  CHECK(t.num_edges() >= 100);
  CHECK(is_connected(t.num_nodes(), t.edge_set()));
  for (const auto& e : t.edges()) {
    CHECK(e.attrs.capacity >= 5.0);
    CHECK(e.attrs.capacity <= 15.0);
    CHECK(e.attrs.base_latency_ms >= 1.0);
    CHECK(e.attrs.base_latency_ms <= 10.0);
  }
}

TEST_CASE("generator minimal case and determinism") {
  GeneratorConfig cfg;
  cfg.n = 2;
  cfg.clusters = 2;
  cfg.min_edges = 1;
  const auto t = generate_geant_like(3, cfg);
  CHECK(t.num_edges() == 1);
  CHECK(t.has_edge(0, 1));
  CHECK(topology_to_json(generate_geant_like(7)) == topology_to_json(generate_geant_like(7)));
  CHECK(topology_to_json(generate_geant_like(7)) != topology_to_json(generate_geant_like(8)));
}

TEST_CASE("generator gives up when the edge floor is unreachable") {
  GeneratorConfig cfg;
  cfg.n = 4;
  cfg.clusters = 2;
  cfg.min_edges = 7;
  CHECK_THROWS_AS(generate_geant_like(1, cfg), ValidationError);
}

TEST_CASE("topology file round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "tagrl_graph_test";
  std::filesystem::create_directories(dir);
  const auto t = generate_geant_like(7);
  save_topology(t, dir / "g.json");
  const auto back = load_topology(dir / "g.json");
  CHECK(back == t);
  CHECK(topology_to_json(back) == topology_to_json(t));
  for (std::size_t k = 0; k < t.num_edges(); ++k) CHECK(back.edges()[k].attrs == t.edges()[k].attrs);
}

TEST_CASE("topology file validation") {
  CHECK_THROWS_WITH_AS(
      topology_from_json(R"({"n": 4, "edges": [{"u": 3, "v": 3, "capacity": 1, "base_latency_ms": 1}]})"),
      doctest::Contains("self-loop"), ValidationError);
  CHECK_THROWS_WITH_AS(
      topology_from_json(R"({"n": 4, "edges": [{"u": 0, "v": 4, "capacity": 1, "base_latency_ms": 1}]})"),
      doctest::Contains("out of range"), ValidationError);
  CHECK_THROWS_WITH_AS(topology_from_json(R"({"n": 3, "edges": [{"u": 0, "v": 1, "capacity": 1, "base_latency_ms": 1},)"
                                          R"({"u": 1, "v": 0, "capacity": 2, "base_latency_ms": 1}]})"),
                       doctest::Contains("duplicate"), ValidationError);
  CHECK_THROWS_WITH_AS(topology_from_json(R"({"n": 3, "edges": [{"u": 0, "v": 1, "capacity": 1, "base_latency_ms": 1}]})"),
                       doctest::Contains("not connected"), ValidationError);
  CHECK_THROWS_AS(topology_from_json("{not json"), ValidationError);
  CHECK_THROWS_AS(topology_from_json(R"({"edges": []})"), ValidationError);
}

TEST_CASE("logical graph adjacency and round trip") {
  const EdgeSet e{{0, 1}};
  const LogicalGraph g(3, e);
  const auto a = g.adjacency();
  CHECK(a(0, 1) == 1.0);
  CHECK(a(1, 0) == 1.0);
  CHECK(a.sum() == 2.0);
  CHECK(LogicalGraph(3, {}).adjacency() == Eigen::MatrixXd::Zero(3, 3));
  CHECK_THROWS_AS(LogicalGraph(3, EdgeSet{{1, 1}}), ValidationError);
  CHECK_THROWS_AS(LogicalGraph(3, EdgeSet{{0, 3}}), ValidationError);
}

TEST_CASE("spanning backbone") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto t = oracle::random_topology(9, 0.3, 500 + s);
    const auto mst = minimum_spanning_backbone(t);
    CHECK(mst.size() == 8);
    CHECK(is_connected(9, mst));
    // Total weight against a brute-force Prim.
    double kruskal = 0.0;
    for (const auto& [a, b] : mst) kruskal += t.link(a, b).base_latency_ms;
    std::vector<bool> in(9, false);
    in[0] = true;
    double prim = 0.0;
    for (int round = 1; round < 9; ++round) {
      double best = 1e18;
      int pick = -1;
      for (const auto& e : t.edges()) {
        if (in[e.u] != in[e.v] && e.attrs.base_latency_ms < best) {
          best = e.attrs.base_latency_ms;
          pick = in[e.u] ? e.v : e.u;
        }
      }
      in[pick] = true;
      prim += best;
    }
    CHECK(kruskal == doctest::Approx(prim).epsilon(1e-12));
  }
}

TEST_CASE("thinning keeps connectivity") {
  const auto t = generate_geant_like(7);
  CHECK(thin_topology(t, 1.0, 3) == t);
  for (double ratio : {0.2, 0.4, 0.6, 0.8}) {
    const auto thin = thin_topology(t, ratio, 3);
    CHECK(is_connected(thin.num_nodes(), thin.edge_set()));
    CHECK(thin.num_edges() < t.num_edges());
    CHECK(thin.num_edges() >= static_cast<std::size_t>(t.num_nodes() - 1));
    for (const auto& e : thin.edges()) CHECK(t.has_edge(e.u, e.v));
    CHECK(thin_topology(t, ratio, 3) == thin);
  }
  const auto tiny = thin_topology(t, 0.01, 4);
  CHECK(tiny.num_edges() == static_cast<std::size_t>(t.num_nodes() - 1));
  CHECK_THROWS_AS(thin_topology(t, 0.0, 1), ValidationError);
  CHECK_THROWS_AS(thin_topology(t, 1.5, 1), ValidationError);
}
