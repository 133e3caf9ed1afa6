#include "tagrl/routing_env.hpp"

#include "tagrl/error.hpp"
#include "tagrl/rng.hpp"

#include <algorithm>
#include <limits>
#include <queue>

namespace tagrl {

namespace {

struct HopCost {
  double latency_ms;
  double reward;
};

// Cost of pushing one more flow over a link, evaluated at the load seen
// before the hop.
HopCost hop_cost(const LinkAttrs& link, double load_before, const EnvConfig& config) {
  const double util = load_before / link.capacity;
  HopCost cost;
  cost.latency_ms = link.base_latency_ms * (1.0 + config.congestion_gain * std::min(util, config.util_cap));
  cost.reward = -config.hop_cost - config.overload_coef * std::max(0.0, util - 1.0);
  return cost;
}

double max_utilization(const PhysicalTopology& topology, const std::vector<double>& loads) {
  double best = 0.0;
  for (std::size_t k = 0; k < loads.size(); ++k)
    best = std::max(best, loads[k] / topology.edges()[k].attrs.capacity);
  return best;
}

EpisodeMetrics summarize(const PhysicalTopology& topology, const EnvConfig& config, int ttl_max,
                         const std::vector<FlowRequest>& flows, const std::vector<double>& loads,
                         std::vector<int> traversals, std::vector<std::vector<NodeId>> paths,
                         std::vector<double> latencies, double delivered_demand, int total_hops) {
  EpisodeMetrics m;
  m.offered_flows = static_cast<int>(flows.size());
  for (const auto& f : flows) m.offered_demand += f.demand;
  m.delivered_flows = static_cast<int>(latencies.size());
  m.delivered_demand = delivered_demand;
  m.avg_throughput = delivered_demand;
  if (latencies.empty()) {
    m.avg_latency_ms = 2.0 * ttl_max * 10.0;
  } else {
    double sum = 0.0;
    for (double l : latencies) sum += l;
    m.avg_latency_ms = sum / static_cast<double>(latencies.size());
  }
  m.max_link_utilization_pct = 100.0 * max_utilization(topology, loads);
  m.total_hops = total_hops;
  m.traversals = std::move(traversals);
  m.final_loads = loads;
  m.paths = std::move(paths);
  m.delivered_latencies_ms = std::move(latencies);
  m.reward = episode_reward(m, config);
  return m;
}

void check_loads(std::span<const double> loads, std::size_t edges) {
  if (!loads.empty() && loads.size() != edges)
    throw ValidationError("initial load vector does not match the edge count");
}

}  // namespace

std::vector<FlowRequest> sample_flows(std::uint64_t seed, int n, int count, const EnvConfig& config) {
  if (count < 1) throw ValidationError("flows per episode must be at least 1");
  if (n < 2) throw ValidationError("flows need at least two nodes");
  std::vector<NodePair> pool;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) pool.emplace_back(i, j);

  Rng rng(seed);
  std::vector<FlowRequest> flows;
  std::size_t cursor = pool.size();
  for (int f = 0; f < count; ++f) {
    if (cursor == pool.size()) {
      shuffle(pool, rng);
      cursor = 0;
    }
    auto [a, b] = pool[cursor++];
    if (uniform01(rng) < 0.5) std::swap(a, b);
    flows.push_back({a, b, uniform_real(rng, config.demand_lo, config.demand_hi)});
  }
  return flows;
}

double episode_reward(const EpisodeMetrics& metrics, const EnvConfig& config) {
  const double fraction =
      metrics.offered_demand > 0.0 ? metrics.delivered_demand / metrics.offered_demand : 0.0;
  return config.w_throughput * fraction - config.w_latency * metrics.avg_latency_ms -
         config.w_util * metrics.max_link_utilization_pct / 100.0;
}

RoutingEnv::RoutingEnv(const PhysicalTopology& topology, EnvConfig config)
    : topology_(&topology), config_(config) {
  ttl_max_ = config_.ttl_factor * shortest_path_distances(topology).diameter;
  if (ttl_max_ < 1) ttl_max_ = 1;
}

void RoutingEnv::reset(std::uint64_t seed, std::span<const double> initial_loads) {
  reset_with_flows(sample_flows(seed, topology_->num_nodes(), config_.flows_per_episode, config_),
                   initial_loads);
}

void RoutingEnv::reset_with_flows(std::vector<FlowRequest> flows, std::span<const double> initial_loads) {
  if (flows.empty()) throw ValidationError("flows per episode must be at least 1");
  const int n = topology_->num_nodes();
  for (const auto& f : flows) {
    if (f.src < 0 || f.src >= n || f.dst < 0 || f.dst >= n || f.src == f.dst || !(f.demand > 0.0))
      throw ValidationError("invalid flow request");
  }
  check_loads(initial_loads, topology_->num_edges());
  flows_ = std::move(flows);
  loads_.assign(topology_->num_edges(), 0.0);
  if (!initial_loads.empty()) std::copy(initial_loads.begin(), initial_loads.end(), loads_.begin());
  traversals_.assign(topology_->num_edges(), 0);
  paths_.clear();
  delivered_latencies_.clear();
  delivered_demand_ = 0.0;
  total_hops_ = 0;
  activate(0);
}

void RoutingEnv::activate(std::size_t index) {
  next_flow_ = index + 1;
  if (index >= flows_.size()) {
    active_.reset();
    return;
  }
  ActiveFlow a;
  a.flow = flows_[index];
  a.current = a.flow.src;
  a.visited.assign(static_cast<std::size_t>(topology_->num_nodes()), false);
  a.visited[a.current] = true;
  a.path.push_back(a.current);
  active_ = std::move(a);
}

std::vector<NodeId> RoutingEnv::feasible_actions() const {
  std::vector<NodeId> out;
  if (!active_) return out;
  for (NodeId j : topology_->neighbors(active_->current))
    if (!active_->visited[j]) out.push_back(j);
  return out;
}

std::optional<FlowContext> RoutingEnv::flow_context() const {
  if (!active_) return std::nullopt;
  FlowContext ctx;
  ctx.current = active_->current;
  ctx.destination = active_->flow.dst;
  ctx.ttl_fraction = static_cast<double>(ttl_max_ - active_->hops) / ttl_max_;
  return ctx;
}

Eigen::MatrixXd RoutingEnv::raw_features() const {
  return compute_raw_features(*topology_, loads_, flow_context());
}

StepOutcome RoutingEnv::step(NodeId action) {
  if (!active_) throw ContractViolation("step called with no active flow");
  auto& a = *active_;
  if (action < 0 || action >= topology_->num_nodes() || a.visited[action] ||
      !topology_->has_edge(a.current, action))
    throw ContractViolation("action is not a feasible next hop");

  const int k = topology_->edge_index(a.current, action);
  const HopCost cost = hop_cost(topology_->edges()[k].attrs, loads_[k], config_);
  loads_[k] += a.flow.demand;
  ++traversals_[k];
  ++total_hops_;
  ++a.hops;
  a.latency_ms += cost.latency_ms;
  a.current = action;
  a.visited[action] = true;
  a.path.push_back(action);

  StepOutcome out;
  out.reward = cost.reward;
  if (action == a.flow.dst) {
    out.event = StepEvent::delivered;
    out.reward += config_.deliver_bonus;
  } else if (a.hops >= ttl_max_ || feasible_actions().empty()) {
    out.event = StepEvent::dropped;
    out.reward -= config_.drop_penalty;
  }
  if (out.event != StepEvent::advanced) {
    out.done_flow = true;
    finish_flow(out.event == StepEvent::delivered);
    out.done_episode = done();
  }
  return out;
}

void RoutingEnv::finish_flow(bool delivered) {
  auto& a = *active_;
  if (delivered) {
    delivered_demand_ += a.flow.demand;
    delivered_latencies_.push_back(a.latency_ms);
  }
  paths_.push_back(std::move(a.path));
  activate(next_flow_);
}

EpisodeMetrics RoutingEnv::metrics() const {
  return summarize(*topology_, config_, ttl_max_, flows_, loads_, traversals_, paths_,
                   delivered_latencies_, delivered_demand_, total_hops_);
}

std::vector<NodeId> min_latency_path(const PhysicalTopology& topology, NodeId src, NodeId dst) {
  const int n = topology.num_nodes();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(static_cast<std::size_t>(n), inf);
  std::vector<NodeId> parent(static_cast<std::size_t>(n), -1);
  using Item = std::pair<double, NodeId>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  dist[src] = 0.0;
  heap.emplace(0.0, src);
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > dist[u]) continue;
    if (u == dst) break;
    for (NodeId v : topology.neighbors(u)) {
      double nd = d + topology.link(u, v).base_latency_ms;
      if (nd < dist[v]) {
        dist[v] = nd;
        parent[v] = u;
        heap.emplace(nd, v);
      }
    }
  }
  std::vector<NodeId> path;
  for (NodeId v = dst; v != -1; v = parent[v]) path.push_back(v);
  std::reverse(path.begin(), path.end());
  return path;
}

EpisodeMetrics shortest_path_baseline(const PhysicalTopology& topology,
                                      const std::vector<FlowRequest>& flows,
                                      const EnvConfig& config) {
  const int ttl_max = std::max(1, config.ttl_factor * shortest_path_distances(topology).diameter);
  std::vector<double> loads(topology.num_edges(), 0.0);
  std::vector<int> traversals(topology.num_edges(), 0);
  std::vector<std::vector<NodeId>> paths;
  std::vector<double> latencies;
  double delivered = 0.0;
  int hops = 0;
  for (const auto& flow : flows) {
    auto path = min_latency_path(topology, flow.src, flow.dst);
    double latency = 0.0;
    for (std::size_t h = 0; h + 1 < path.size(); ++h) {
      const int k = topology.edge_index(path[h], path[h + 1]);
      latency += hop_cost(topology.edges()[k].attrs, loads[k], config).latency_ms;
      loads[k] += flow.demand;
      ++traversals[k];
      ++hops;
    }
    latencies.push_back(latency);
    delivered += flow.demand;
    paths.push_back(std::move(path));
  }
  return summarize(topology, config, ttl_max, flows, loads, std::move(traversals), std::move(paths),
                   std::move(latencies), delivered, hops);
}

}  // namespace tagrl
