#pragma once

// Hop-by-hop routing MDP. Flows of an episode are served one at a time; the
// agent picks the next physical hop for the active flow until it is delivered
// or dropped. Link loads accumulate over the episode.

#include "tagrl/graph.hpp"
#include "tagrl/sase.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace tagrl {

struct FlowRequest {
  NodeId src = 0;
  NodeId dst = 0;
  double demand = 1.0;

  bool operator==(const FlowRequest&) const = default;
};

struct EnvConfig {
  int flows_per_episode = 8;
  double demand_lo = 0.5;
  double demand_hi = 1.5;
  int ttl_factor = 2;  // ttl_max = ttl_factor * hop diameter

  // Reward shaping.
  double hop_cost = 0.01;
  double overload_coef = 0.05;
  double deliver_bonus = 1.0;
  double drop_penalty = 1.0;

  // Congestion latency: base * (1 + congestion_gain * min(util, util_cap)).
  double congestion_gain = 2.0;
  double util_cap = 2.0;

  // Episode reward r = w_tp * delivered_fraction - w_lat * latency_ms - w_util * max_util.
  double w_throughput = 10.0;
  double w_latency = 0.05;
  double w_util = 2.0;

  // When set, an episode starts from the previous episode's final loads.
  bool carry_loads = false;
};

enum class StepEvent { advanced, delivered, dropped };

struct StepOutcome {
  double reward = 0.0;
  bool done_flow = false;
  bool done_episode = false;
  StepEvent event = StepEvent::advanced;
};

struct EpisodeMetrics {
  double avg_throughput = 0.0;   // delivered demand units
  double avg_latency_ms = 0.0;   // mean over delivered flows, or the penalty value
  double max_link_utilization_pct = 0.0;
  double reward = 0.0;           // episode reward r
  double offered_demand = 0.0;
  double delivered_demand = 0.0;
  int offered_flows = 0;
  int delivered_flows = 0;
  int total_hops = 0;
  std::vector<int> traversals;                 // per physical edge index
  std::vector<double> final_loads;             // per physical edge index
  std::vector<std::vector<NodeId>> paths;      // every routed path, delivered or not
  std::vector<double> delivered_latencies_ms;  // per delivered flow, in service order
};

// Flow list for one episode: unordered pairs drawn without replacement
// (pool refilled once exhausted), random orientation, uniform demand.
std::vector<FlowRequest> sample_flows(std::uint64_t seed, int n, int count, const EnvConfig& config);

double episode_reward(const EpisodeMetrics& metrics, const EnvConfig& config);

class RoutingEnv {
 public:
  struct ActiveFlow {
    FlowRequest flow;
    NodeId current = 0;
    std::vector<bool> visited;
    int hops = 0;
    double latency_ms = 0.0;
    std::vector<NodeId> path;
  };

  RoutingEnv(const PhysicalTopology& topology, EnvConfig config);

  // Samples config.flows_per_episode flows from seed and activates the first.
  void reset(std::uint64_t seed, std::span<const double> initial_loads = {});
  void reset_with_flows(std::vector<FlowRequest> flows, std::span<const double> initial_loads = {});

  // Unvisited physical neighbors of the active flow's current node.
  std::vector<NodeId> feasible_actions() const;

  // Throws ContractViolation for actions outside feasible_actions().
  StepOutcome step(NodeId action);

  bool done() const { return !active_.has_value(); }
  const std::optional<ActiveFlow>& active() const { return active_; }
  const std::vector<FlowRequest>& flows() const { return flows_; }
  const std::vector<double>& loads() const { return loads_; }
  int ttl_max() const { return ttl_max_; }
  const PhysicalTopology& topology() const { return *topology_; }
  const EnvConfig& config() const { return config_; }

  std::optional<FlowContext> flow_context() const;
  Eigen::MatrixXd raw_features() const;

  EpisodeMetrics metrics() const;

 private:
  void activate(std::size_t index);
  void finish_flow(bool delivered);

  const PhysicalTopology* topology_;
  EnvConfig config_;
  int ttl_max_;
  std::vector<FlowRequest> flows_;
  std::size_t next_flow_ = 0;
  std::optional<ActiveFlow> active_;
  std::vector<double> loads_;
  std::vector<int> traversals_;
  std::vector<std::vector<NodeId>> paths_;
  std::vector<double> delivered_latencies_;
  double delivered_demand_ = 0.0;
  int total_hops_ = 0;
};

// Static minimum-latency (Dijkstra on base latency) routing of every flow with
// the same load and latency bookkeeping as RoutingEnv::step.
EpisodeMetrics shortest_path_baseline(const PhysicalTopology& topology,
                                      const std::vector<FlowRequest>& flows,
                                      const EnvConfig& config);

// Minimum base-latency path from src to dst, ties broken towards lower ids.
std::vector<NodeId> min_latency_path(const PhysicalTopology& topology, NodeId src, NodeId dst);

}  // namespace tagrl
