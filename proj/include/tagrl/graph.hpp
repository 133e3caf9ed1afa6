#pragma once

// Graph data structures shared by every other module: the immutable physical
// network, the rewirable logical graph used for message passing, and the
// adjacency / shortest-path helpers built on top of them.

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

namespace tagrl {

using NodeId = int;

// Undirected node pair, always stored with first < second.
using NodePair = std::pair<NodeId, NodeId>;
using EdgeSet = std::set<NodePair>;

inline NodePair canonical(NodeId a, NodeId b) {
  return a < b ? NodePair{a, b} : NodePair{b, a};
}

struct LinkAttrs {
  double capacity = 1.0;         // demand units per episode
  double base_latency_ms = 1.0;  // propagation latency of an idle link

  bool operator==(const LinkAttrs&) const = default;
};

struct Edge {
  NodeId u = 0;
  NodeId v = 0;
  LinkAttrs attrs;

  NodePair key() const { return canonical(u, v); }
  bool operator==(const Edge&) const = default;
};

// Connected, simple, undirected network. Edges are canonicalized (u < v) and
// kept sorted; construction throws ValidationError on any invariant breach.
class PhysicalTopology {
 public:
  PhysicalTopology(int n, std::vector<Edge> edges, std::string name = {});

  int num_nodes() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  const std::vector<Edge>& edges() const { return edges_; }
  const std::string& name() const { return name_; }

  // Sorted ascending.
  const std::vector<NodeId>& neighbors(NodeId i) const { return adj_.at(i); }
  int degree(NodeId i) const { return static_cast<int>(adj_.at(i).size()); }

  bool has_edge(NodeId a, NodeId b) const { return edge_index(a, b) >= 0; }
  // Position in edges(), or -1.
  int edge_index(NodeId a, NodeId b) const;
  const LinkAttrs& link(NodeId a, NodeId b) const;

  EdgeSet edge_set() const;

  // Name is a label only and does not take part in equality.
  bool operator==(const PhysicalTopology& other) const {
    return n_ == other.n_ && edges_ == other.edges_;
  }

 private:
  int n_;
  std::vector<Edge> edges_;
  std::string name_;
  std::vector<std::vector<NodeId>> adj_;
  std::vector<int> index_;  // n*n, -1 where absent
};

// Message-passing graph over the physical node set. Starts as a copy of the
// physical edges and is rewired between episodes; may hold virtual pairs that
// have no physical link.
class LogicalGraph {
 public:
  explicit LogicalGraph(int n = 0) : n_(n), adj_(static_cast<std::size_t>(n)) {}
  LogicalGraph(int n, EdgeSet edges);
  static LogicalGraph from_topology(const PhysicalTopology& topology);

  int num_nodes() const { return n_; }
  std::size_t num_edges() const { return edges_.size(); }
  const EdgeSet& edges() const { return edges_; }
  bool contains(NodeId a, NodeId b) const { return edges_.count(canonical(a, b)) > 0; }
  const std::vector<NodeId>& neighbors(NodeId i) const { return adj_.at(i); }

  Eigen::MatrixXd adjacency() const;

  bool operator==(const LogicalGraph& other) const {
    return n_ == other.n_ && edges_ == other.edges_;
  }

 private:
  int n_;
  EdgeSet edges_;
  std::vector<std::vector<NodeId>> adj_;
};

// Binary symmetric adjacency, zero diagonal.
Eigen::MatrixXd build_adjacency(const PhysicalTopology& topology);
Eigen::MatrixXd adjacency_from_edges(const EdgeSet& edges, int n);

// D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I.
Eigen::MatrixXd normalize_adjacency(const Eigen::MatrixXd& adjacency);

struct ShortestPathTable {
  int n = 0;
  std::vector<int> dist;  // row-major n*n hop counts
  int diameter = 0;

  int operator()(NodeId i, NodeId j) const { return dist[static_cast<std::size_t>(i) * n + j]; }
};

// Unweighted BFS from every node. Throws "topology not connected".
ShortestPathTable shortest_path_distances(const PhysicalTopology& topology);

bool is_connected(int n, const EdgeSet& edges);

// Kruskal over base latency, ties broken by (u, v). Returned sorted.
EdgeSet minimum_spanning_backbone(const PhysicalTopology& topology);

// Clustered generator mimicking a research WAN: dense regional clusters,
// sparse cross-cluster links, plus a cross-cluster chain so no cluster is
// stranded.
struct GeneratorConfig {
  int n = 40;
  int clusters = 5;
  double p_intra = 0.6;
  double p_inter = 0.06;
  int min_edges = 100;
  double capacity_lo = 5.0;
  double capacity_hi = 15.0;
  double latency_lo_ms = 1.0;
  double latency_hi_ms = 10.0;
  int max_attempts = 100;
};

PhysicalTopology generate_geant_like(std::uint64_t seed, const GeneratorConfig& config = {});

// Keeps a uniformly seeded spanning tree and removes round((1 - ratio) * |E|)
// of the remaining edges at random (fewer if the tree is all that is left).
PhysicalTopology thin_topology(const PhysicalTopology& topology, double retention_ratio,
                               std::uint64_t seed);

// JSON: {"n": int, "edges": [{"u","v","capacity","base_latency_ms"}]}, edges in
// canonical sorted order so the text is byte-stable.
std::string topology_to_json(const PhysicalTopology& topology);
PhysicalTopology topology_from_json(const std::string& text, std::string name = {});
void save_topology(const PhysicalTopology& topology, const std::filesystem::path& path);
PhysicalTopology load_topology(const std::filesystem::path& path);

}  // namespace tagrl
