#pragma once

// Policy-adaptive graph update: a behavior-shift trigger, reward-weighted edge
// importance over a sliding episode window, candidate scoring from encoded
// states, thresholded rewiring of the logical edge set, and the edge-count
// guardrail relative to the initial graph.

#include "tagrl/graph.hpp"

#include <Eigen/Dense>

#include <deque>
#include <map>
#include <string>
#include <vector>

namespace tagrl {

struct UpdateConfig {
  double deviation_threshold = 0.1;
  double tau_retain = 0.6;
  double gamma_add = 0.4;
  int window = 10;
  double guard_lo = 0.9;
  double guard_hi = 1.1;
  int probe_states = 64;
  double epsilon = 1e-6;
  double candidate_cap_factor = 3.0;  // 2-hop candidates kept: factor * |E_0|

  void validate() const;
};

using EdgeScores = std::map<NodePair, double>;

// Total variation 0.5 * sum |p - q| between two distributions on one support.
double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q);

// Mean total variation over paired distributions (same probe states, same
// masks). Throws on empty or mismatched input.
double policy_deviation(const std::vector<Eigen::VectorXd>& current,
                        const std::vector<Eigen::VectorXd>& previous);

// Per-episode usage: traversal counts on physical edges plus, for every
// non-adjacent pair that co-occurred on one routed path, a count of 1.
EdgeScores episode_usage(const PhysicalTopology& topology, const std::vector<int>& traversals,
                         const std::vector<std::vector<NodeId>>& paths);

class ImportanceLedger {
 public:
  explicit ImportanceLedger(int window = 10);

  void record(EdgeScores usage, double reward);
  bool empty() const { return entries_.empty(); }
  std::size_t size() const { return entries_.size(); }
  int window() const { return window_; }

  // raw_ij = sum_e f_ij^(e) * max(r_e - min_window_r, epsilon).
  double raw_score(const NodePair& edge, double epsilon) const;

  struct Entry {
    EdgeScores usage;
    double reward = 0.0;
  };
  const std::deque<Entry>& entries() const { return entries_; }

 private:
  int window_;
  std::deque<Entry> entries_;
};

// Normalized importance over edges; uniform when every raw score is zero.
EdgeScores edge_importance(const ImportanceLedger& ledger, const EdgeSet& edges,
                           double epsilon = 1e-6);

// (1 + cos(z_i, z_j)) / 2 for each candidate pair.
double relevance(const Eigen::MatrixXd& z, const NodePair& pair);
EdgeScores score_candidates(const Eigen::MatrixXd& z, const std::vector<NodePair>& candidates);

// Physical edges missing from current, plus physical 2-hop pairs not in
// current, the latter capped at the cap_count most relevant.
std::vector<NodePair> candidate_pairs(const PhysicalTopology& topology, const ShortestPathTable& spd,
                                      const EdgeSet& current, const Eigen::MatrixXd& z,
                                      std::size_t cap_count);

struct EdgeProposal {
  EdgeSet edges;
  std::vector<NodePair> removed;
  std::vector<NodePair> added;
};

// Floor/ceiling on |E| from the initial edge count.
std::size_t guardrail_floor(std::size_t initial_edges, double lo);
std::size_t guardrail_ceiling(std::size_t initial_edges, double hi);

// Retain e in current iff w_e >= tau * max w (backbone edges always kept);
// add candidates with phi >= gamma_add, best first, up to ceiling headroom.
EdgeProposal update_edge_set(const EdgeSet& current, const EdgeScores& importance,
                             const EdgeScores& relevance_scores, const EdgeSet& backbone,
                             std::size_t initial_edges, const UpdateConfig& config);

// Restore removed edges by descending w until the floor holds, then drop
// added edges by ascending phi until the ceiling holds. Ties by (i, j).
EdgeSet enforce_guardrail(const EdgeProposal& proposal, std::size_t initial_edges,
                          const EdgeScores& importance, const EdgeScores& relevance_scores,
                          const UpdateConfig& config);

Eigen::MatrixXd rebuild_adjacency(const EdgeSet& edges, int n);

struct GraphUpdateRecord {
  int epoch = 0;
  double delta = 0.0;
  std::vector<NodePair> removed;
  std::vector<NodePair> added;
  std::size_t edge_count = 0;

  // One JSON line: {"epoch","delta","removed","added","edge_count"}.
  std::string to_json_line() const;
};

// One full rewiring pass given an already-triggered deviation.
struct RewireResult {
  EdgeSet edges;
  std::vector<NodePair> removed;  // relative to the input edge set
  std::vector<NodePair> added;
};

RewireResult rewire(const PhysicalTopology& topology, const ShortestPathTable& spd,
                    const EdgeSet& current, const EdgeSet& backbone, std::size_t initial_edges,
                    const ImportanceLedger& ledger, const Eigen::MatrixXd& z,
                    const UpdateConfig& config);

}  // namespace tagrl
