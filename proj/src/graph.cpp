#include "tagrl/graph.hpp"

#include "tagrl/error.hpp"
#include "tagrl/rng.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numeric>
#include <sstream>

namespace tagrl {

namespace {

using json = nlohmann::json;

// Union-find for Kruskal and spanning-tree sampling.
class DisjointSets {
 public:
  explicit DisjointSets(int n) : parent_(static_cast<std::size_t>(n)) {
    std::iota(parent_.begin(), parent_.end(), 0);
  }
  int find(int x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[b] = a;
    return true;
  }

 private:
  std::vector<int> parent_;
};

std::vector<std::vector<NodeId>> neighbor_lists(int n, const EdgeSet& edges) {
  std::vector<std::vector<NodeId>> adj(static_cast<std::size_t>(n));
  for (const auto& [a, b] : edges) {
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

std::vector<int> bfs_from(const std::vector<std::vector<NodeId>>& adj, NodeId source) {
  std::vector<int> dist(adj.size(), -1);
  std::deque<NodeId> queue{source};
  dist[source] = 0;
  while (!queue.empty()) {
    NodeId cur = queue.front();
    queue.pop_front();
    for (NodeId next : adj[cur]) {
      if (dist[next] < 0) {
        dist[next] = dist[cur] + 1;
        queue.push_back(next);
      }
    }
  }
  return dist;
}

}  // namespace

PhysicalTopology::PhysicalTopology(int n, std::vector<Edge> edges, std::string name)
    : n_(n), edges_(std::move(edges)), name_(std::move(name)) {
  if (n_ < 1) throw ValidationError("topology must have at least one node");
  for (auto& e : edges_) {
    if (e.u < 0 || e.u >= n_ || e.v < 0 || e.v >= n_) {
      std::ostringstream msg;
      msg << "node index out of range in edge (" << e.u << ", " << e.v << "), n = " << n_;
      throw ValidationError(msg.str());
    }
    if (e.u == e.v) throw ValidationError("self-loop at node " + std::to_string(e.u));
    if (!(e.attrs.capacity > 0.0) || !std::isfinite(e.attrs.capacity))
      throw ValidationError("link capacity must be positive and finite");
    if (!(e.attrs.base_latency_ms > 0.0) || !std::isfinite(e.attrs.base_latency_ms))
      throw ValidationError("link latency must be positive and finite");
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges_.begin(), edges_.end(),
            [](const Edge& a, const Edge& b) { return a.key() < b.key(); });

  index_.assign(static_cast<std::size_t>(n_) * n_, -1);
  adj_.assign(static_cast<std::size_t>(n_), {});
  for (std::size_t k = 0; k < edges_.size(); ++k) {
    const auto& e = edges_[k];
    auto& slot = index_[static_cast<std::size_t>(e.u) * n_ + e.v];
    if (slot >= 0) {
      std::ostringstream msg;
      msg << "duplicate edge (" << e.u << ", " << e.v << ")";
      throw ValidationError(msg.str());
    }
    slot = static_cast<int>(k);
    index_[static_cast<std::size_t>(e.v) * n_ + e.u] = static_cast<int>(k);
    adj_[e.u].push_back(e.v);
    adj_[e.v].push_back(e.u);
  }
  for (auto& row : adj_) std::sort(row.begin(), row.end());

  if (std::ranges::any_of(bfs_from(adj_, 0), [](int d) { return d < 0; }))
    throw ValidationError("topology not connected");
}

int PhysicalTopology::edge_index(NodeId a, NodeId b) const {
  if (a < 0 || b < 0 || a >= n_ || b >= n_) return -1;
  return index_[static_cast<std::size_t>(a) * n_ + b];
}

const LinkAttrs& PhysicalTopology::link(NodeId a, NodeId b) const {
  int k = edge_index(a, b);
  if (k < 0) throw ContractViolation("no physical link between the given nodes");
  return edges_[k].attrs;
}

EdgeSet PhysicalTopology::edge_set() const {
  EdgeSet out;
  for (const auto& e : edges_) out.insert(e.key());
  return out;
}

LogicalGraph::LogicalGraph(int n, EdgeSet edges) : n_(n), edges_(std::move(edges)) {
  for (const auto& [a, b] : edges_) {
    if (a < 0 || b >= n_ || a >= b) throw ValidationError("invalid logical edge");
  }
  adj_ = neighbor_lists(n_, edges_);
}

LogicalGraph LogicalGraph::from_topology(const PhysicalTopology& topology) {
  return LogicalGraph(topology.num_nodes(), topology.edge_set());
}

Eigen::MatrixXd LogicalGraph::adjacency() const { return adjacency_from_edges(edges_, n_); }

Eigen::MatrixXd adjacency_from_edges(const EdgeSet& edges, int n) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  for (const auto& [i, j] : edges) {
    a(i, j) = 1.0;
    a(j, i) = 1.0;
  }
  return a;
}

Eigen::MatrixXd build_adjacency(const PhysicalTopology& topology) {
  return adjacency_from_edges(topology.edge_set(), topology.num_nodes());
}

Eigen::MatrixXd normalize_adjacency(const Eigen::MatrixXd& adjacency) {
  const auto n = adjacency.rows();
  if (adjacency.cols() != n) throw ValidationError("adjacency must be square");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (adjacency(i, i) != 0.0) throw ValidationError("adjacency must have zero diagonal");
    for (Eigen::Index j = 0; j < n; ++j) {
      double v = adjacency(i, j);
      if ((v != 0.0 && v != 1.0) || v != adjacency(j, i))
        throw ValidationError("adjacency must be symmetric 0/1");
    }
  }
  Eigen::MatrixXd with_loops = adjacency + Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd inv_sqrt_deg = with_loops.rowwise().sum().array().rsqrt();
  return inv_sqrt_deg.asDiagonal() * with_loops * inv_sqrt_deg.asDiagonal();
}

ShortestPathTable shortest_path_distances(const PhysicalTopology& topology) {
  const int n = topology.num_nodes();
  std::vector<std::vector<NodeId>> adj(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) adj[i] = topology.neighbors(i);

  ShortestPathTable table;
  table.n = n;
  table.dist.resize(static_cast<std::size_t>(n) * n);
  for (int s = 0; s < n; ++s) {
    auto row = bfs_from(adj, s);
    for (int t = 0; t < n; ++t) {
      if (row[t] < 0) throw ValidationError("topology not connected");
      table.dist[static_cast<std::size_t>(s) * n + t] = row[t];
      table.diameter = std::max(table.diameter, row[t]);
    }
  }
  return table;
}

bool is_connected(int n, const EdgeSet& edges) {
  if (n <= 1) return true;
  auto dist = bfs_from(neighbor_lists(n, edges), 0);
  return std::ranges::none_of(dist, [](int d) { return d < 0; });
}

EdgeSet minimum_spanning_backbone(const PhysicalTopology& topology) {
  std::vector<const Edge*> order;
  for (const auto& e : topology.edges()) order.push_back(&e);
  std::stable_sort(order.begin(), order.end(), [](const Edge* a, const Edge* b) {
    return a->attrs.base_latency_ms < b->attrs.base_latency_ms;
  });
  DisjointSets sets(topology.num_nodes());
  EdgeSet tree;
  for (const Edge* e : order) {
    if (sets.unite(e->u, e->v)) tree.insert(e->key());
  }
  return tree;
}

PhysicalTopology generate_geant_like(std::uint64_t seed, const GeneratorConfig& config) {
  const int n = config.n;
  const int clusters = config.clusters;
  if (clusters < 2 || n < clusters)
    throw ValidationError("generator requires n >= clusters >= 2");
  if (config.p_intra < 0 || config.p_intra > 1 || config.p_inter < 0 || config.p_inter > 1)
    throw ValidationError("edge probabilities must lie in [0, 1]");
  if (!(config.capacity_lo > 0) || config.capacity_hi < config.capacity_lo ||
      !(config.latency_lo_ms > 0) || config.latency_hi_ms < config.latency_lo_ms)
    throw ValidationError("invalid capacity or latency range");

  // Contiguous, near-equal cluster blocks.
  std::vector<int> cluster_of(static_cast<std::size_t>(n));
  std::vector<std::vector<NodeId>> members(static_cast<std::size_t>(clusters));
  for (int i = 0; i < n; ++i) {
    cluster_of[i] = static_cast<int>(static_cast<long long>(i) * clusters / n);
    members[cluster_of[i]].push_back(i);
  }

  for (int attempt = 0; attempt < config.max_attempts; ++attempt) {
    Rng rng(mix_seed(seed, static_cast<std::uint64_t>(attempt)));
    EdgeSet pairs;
    for (int i = 0; i < n; ++i) {
      for (int j = i + 1; j < n; ++j) {
        double p = cluster_of[i] == cluster_of[j] ? config.p_intra : config.p_inter;
        if (uniform01(rng) < p) pairs.insert({i, j});
      }
    }
    // Cross-cluster chain: one random link between consecutive clusters.
    for (int c = 0; c + 1 < clusters; ++c) {
      NodeId a = members[c][uniform_index(rng, members[c].size())];
      NodeId b = members[c + 1][uniform_index(rng, members[c + 1].size())];
      pairs.insert(canonical(a, b));
    }
    if (!is_connected(n, pairs) || static_cast<int>(pairs.size()) < config.min_edges) continue;

    std::vector<Edge> edges;
    edges.reserve(pairs.size());
    for (const auto& [a, b] : pairs) {
      LinkAttrs attrs;
      attrs.capacity = uniform_real(rng, config.capacity_lo, config.capacity_hi);
      attrs.base_latency_ms = uniform_real(rng, config.latency_lo_ms, config.latency_hi_ms);
      edges.push_back({a, b, attrs});
    }
    return PhysicalTopology(n, std::move(edges), "geant-like-" + std::to_string(seed));
  }
  throw ValidationError("generator could not produce a connected topology meeting the edge floor after " +
                        std::to_string(config.max_attempts) + " attempts");
}

PhysicalTopology thin_topology(const PhysicalTopology& topology, double retention_ratio,
                               std::uint64_t seed) {
  if (!(retention_ratio > 0.0) || retention_ratio > 1.0)
    throw ValidationError("retention ratio must lie in (0, 1]");
  if (retention_ratio == 1.0) return topology;

  Rng rng(seed);
  std::vector<std::size_t> order(topology.num_edges());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order, rng);

  DisjointSets sets(topology.num_nodes());
  std::vector<bool> in_tree(topology.num_edges(), false);
  std::vector<std::size_t> removable;
  for (std::size_t k : order) {
    const auto& e = topology.edges()[k];
    if (sets.unite(e.u, e.v)) {
      in_tree[k] = true;
    } else {
      removable.push_back(k);
    }
  }
  auto target = static_cast<std::size_t>(
      std::llround((1.0 - retention_ratio) * static_cast<double>(topology.num_edges())));
  target = std::min(target, removable.size());
  std::vector<bool> drop(topology.num_edges(), false);
  for (std::size_t r = 0; r < target; ++r) drop[removable[r]] = true;

  std::vector<Edge> kept;
  for (std::size_t k = 0; k < topology.num_edges(); ++k) {
    if (!drop[k]) kept.push_back(topology.edges()[k]);
  }
  return PhysicalTopology(topology.num_nodes(), std::move(kept), topology.name());
}

std::string topology_to_json(const PhysicalTopology& topology) {
  json doc;
  doc["n"] = topology.num_nodes();
  doc["edges"] = json::array();
  for (const auto& e : topology.edges()) {
    json edge;
    edge["u"] = e.u;
    edge["v"] = e.v;
    edge["capacity"] = e.attrs.capacity;
    edge["base_latency_ms"] = e.attrs.base_latency_ms;
    doc["edges"].push_back(std::move(edge));
  }
  return doc.dump(2) + "\n";
}

PhysicalTopology topology_from_json(const std::string& text, std::string name) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed topology file: ") + e.what());
  }
  try {
    if (!doc.is_object() || !doc.contains("n") || !doc.contains("edges") ||
        !doc["n"].is_number_integer() || !doc["edges"].is_array())
      throw ValidationError("malformed topology file: expected {\"n\": int, \"edges\": [...]}");
    const int n = doc["n"].get<int>();
    std::vector<Edge> edges;
    for (const auto& item : doc["edges"]) {
      if (!item.is_object()) throw ValidationError("malformed topology file: edge is not an object");
      Edge e;
      e.u = item.at("u").get<int>();
      e.v = item.at("v").get<int>();
      e.attrs.capacity = item.at("capacity").get<double>();
      e.attrs.base_latency_ms = item.at("base_latency_ms").get<double>();
      edges.push_back(e);
    }
    return PhysicalTopology(n, std::move(edges), std::move(name));
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed topology file: ") + e.what());
  }
}

void save_topology(const PhysicalTopology& topology, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write topology file: " + path.string());
  out << topology_to_json(topology);
}

PhysicalTopology load_topology(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open topology file: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return topology_from_json(buf.str(), path.stem().string());
}

}  // namespace tagrl
