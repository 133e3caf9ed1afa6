#include "tagrl/pagu.hpp"

#include "tagrl/error.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace tagrl {

void UpdateConfig::validate() const {
  auto unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!unit(deviation_threshold) || !unit(tau_retain) || !unit(gamma_add))
    throw ValidationError("graph update thresholds must lie in [0, 1]");
  if (!(guard_lo < guard_hi) || guard_lo <= 0.0) throw ValidationError("guardrail requires 0 < lo < hi");
  if (window < 1) throw ValidationError("importance window must be at least 1");
  if (probe_states < 1) throw ValidationError("probe state count must be at least 1");
  if (!(epsilon > 0.0)) throw ValidationError("importance epsilon must be positive");
  if (candidate_cap_factor < 0.0) throw ValidationError("candidate cap factor must be nonnegative");
}

double total_variation(const Eigen::VectorXd& p, const Eigen::VectorXd& q) {
  if (p.size() != q.size()) throw ValidationError("distributions have different supports");
  return 0.5 * (p - q).cwiseAbs().sum();
}

double policy_deviation(const std::vector<Eigen::VectorXd>& current,
                        const std::vector<Eigen::VectorXd>& previous) {
  if (current.empty() || current.size() != previous.size())
    throw ValidationError("deviation needs matching, nonempty probe sets");
  double sum = 0.0;
  for (std::size_t i = 0; i < current.size(); ++i) sum += total_variation(current[i], previous[i]);
  return sum / static_cast<double>(current.size());
}

EdgeScores episode_usage(const PhysicalTopology& topology, const std::vector<int>& traversals,
                         const std::vector<std::vector<NodeId>>& paths) {
  EdgeScores usage;
  for (std::size_t k = 0; k < traversals.size(); ++k) {
    if (traversals[k] > 0) usage[topology.edges()[k].key()] = traversals[k];
  }
  for (const auto& path : paths) {
    for (std::size_t a = 0; a < path.size(); ++a) {
      for (std::size_t b = a + 1; b < path.size(); ++b) {
        if (path[a] == path[b] || topology.has_edge(path[a], path[b])) continue;
        usage[canonical(path[a], path[b])] = 1.0;
      }
    }
  }
  return usage;
}

ImportanceLedger::ImportanceLedger(int window) : window_(window) {
  if (window_ < 1) throw ValidationError("importance window must be at least 1");
}

void ImportanceLedger::record(EdgeScores usage, double reward) {
  entries_.push_back({std::move(usage), reward});
  while (entries_.size() > static_cast<std::size_t>(window_)) entries_.pop_front();
}

double ImportanceLedger::raw_score(const NodePair& edge, double epsilon) const {
  double min_reward = std::numeric_limits<double>::infinity();
  for (const auto& e : entries_) min_reward = std::min(min_reward, e.reward);
  double raw = 0.0;
  for (const auto& e : entries_) {
    auto it = e.usage.find(edge);
    if (it != e.usage.end()) raw += it->second * std::max(e.reward - min_reward, epsilon);
  }
  return raw;
}

EdgeScores edge_importance(const ImportanceLedger& ledger, const EdgeSet& edges, double epsilon) {
  if (ledger.empty()) throw ValidationError("edge importance needs a nonempty window");
  EdgeScores w;
  double total = 0.0;
  for (const auto& e : edges) {
    double raw = ledger.raw_score(e, epsilon);
    w[e] = raw;
    total += raw;
  }
  if (edges.empty()) return w;
  if (total > 0.0) {
    for (auto& [e, v] : w) v /= total;
  } else {
    for (auto& [e, v] : w) v = 1.0 / static_cast<double>(edges.size());
  }
  return w;
}

double relevance(const Eigen::MatrixXd& z, const NodePair& pair) {
  const auto zi = z.row(pair.first);
  const auto zj = z.row(pair.second);
  const double denom = zi.norm() * zj.norm();
  const double cosine = denom > 0.0 ? zi.dot(zj) / denom : 0.0;
  return std::clamp((1.0 + cosine) / 2.0, 0.0, 1.0);
}

EdgeScores score_candidates(const Eigen::MatrixXd& z, const std::vector<NodePair>& candidates) {
  EdgeScores out;
  for (const auto& c : candidates) out[c] = relevance(z, c);
  return out;
}

std::vector<NodePair> candidate_pairs(const PhysicalTopology& topology, const ShortestPathTable& spd,
                                      const EdgeSet& current, const Eigen::MatrixXd& z,
                                      std::size_t cap_count) {
  std::vector<NodePair> out;
  for (const auto& e : topology.edges())
    if (!current.count(e.key())) out.push_back(e.key());

  std::vector<std::pair<double, NodePair>> two_hop;
  const int n = topology.num_nodes();
  for (NodeId i = 0; i < n; ++i)
    for (NodeId j = i + 1; j < n; ++j)
      if (spd(i, j) == 2 && !current.count({i, j})) two_hop.emplace_back(relevance(z, {i, j}), NodePair{i, j});
  std::stable_sort(two_hop.begin(), two_hop.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  if (two_hop.size() > cap_count) two_hop.resize(cap_count);
  for (const auto& [score, pair] : two_hop) out.push_back(pair);
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t guardrail_floor(std::size_t initial_edges, double lo) {
  return static_cast<std::size_t>(std::ceil(lo * static_cast<double>(initial_edges) - 1e-9));
}

std::size_t guardrail_ceiling(std::size_t initial_edges, double hi) {
  return static_cast<std::size_t>(std::floor(hi * static_cast<double>(initial_edges) + 1e-9));
}

namespace {

double lookup(const EdgeScores& scores, const NodePair& e) {
  auto it = scores.find(e);
  return it == scores.end() ? 0.0 : it->second;
}

}  // namespace

EdgeProposal update_edge_set(const EdgeSet& current, const EdgeScores& importance,
                             const EdgeScores& relevance_scores, const EdgeSet& backbone,
                             std::size_t initial_edges, const UpdateConfig& config) {
  double max_w = 0.0;
  for (const auto& e : current) max_w = std::max(max_w, lookup(importance, e));
  const double keep_at = config.tau_retain * max_w;

  EdgeProposal out;
  for (const auto& e : current) {
    if (backbone.count(e) || lookup(importance, e) >= keep_at) {
      out.edges.insert(e);
    } else {
      out.removed.push_back(e);
    }
  }

  const std::size_t ceiling = guardrail_ceiling(initial_edges, config.guard_hi);
  std::size_t headroom = ceiling > out.edges.size() ? ceiling - out.edges.size() : 0;
  std::vector<std::pair<double, NodePair>> eligible;
  for (const auto& [pair, phi] : relevance_scores) {
    if (!current.count(pair) && phi >= config.gamma_add) eligible.emplace_back(phi, pair);
  }
  // Map order is lexicographic, so stable_sort leaves ties in (i, j) order.
  std::stable_sort(eligible.begin(), eligible.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (const auto& [phi, pair] : eligible) {
    if (headroom == 0) break;
    out.edges.insert(pair);
    out.added.push_back(pair);
    --headroom;
  }
  return out;
}

EdgeSet enforce_guardrail(const EdgeProposal& proposal, std::size_t initial_edges,
                          const EdgeScores& importance, const EdgeScores& relevance_scores,
                          const UpdateConfig& config) {
  EdgeSet edges = proposal.edges;
  const std::size_t floor = guardrail_floor(initial_edges, config.guard_lo);
  const std::size_t ceiling = guardrail_ceiling(initial_edges, config.guard_hi);

  if (edges.size() < floor) {
    std::vector<NodePair> restore = proposal.removed;
    std::sort(restore.begin(), restore.end(), [&](const NodePair& a, const NodePair& b) {
      const double wa = lookup(importance, a);
      const double wb = lookup(importance, b);
      return wa != wb ? wa > wb : a < b;
    });
    for (const auto& e : restore) {
      if (edges.size() >= floor) break;
      edges.insert(e);
    }
  }
  if (edges.size() > ceiling) {
    std::vector<NodePair> drop = proposal.added;
    std::sort(drop.begin(), drop.end(), [&](const NodePair& a, const NodePair& b) {
      const double pa = lookup(relevance_scores, a);
      const double pb = lookup(relevance_scores, b);
      return pa != pb ? pa < pb : a < b;
    });
    for (const auto& e : drop) {
      if (edges.size() <= ceiling) break;
      edges.erase(e);
    }
  }
  return edges;
}

Eigen::MatrixXd rebuild_adjacency(const EdgeSet& edges, int n) { return adjacency_from_edges(edges, n); }

std::string GraphUpdateRecord::to_json_line() const {
  nlohmann::ordered_json line;
  line["epoch"] = epoch;
  line["delta"] = delta;
  auto pairs = [](const std::vector<NodePair>& v) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& [a, b] : v) arr.push_back({a, b});
    return arr;
  };
  line["removed"] = pairs(removed);
  line["added"] = pairs(added);
  line["edge_count"] = edge_count;
  return line.dump();
}

RewireResult rewire(const PhysicalTopology& topology, const ShortestPathTable& spd,
                    const EdgeSet& current, const EdgeSet& backbone, std::size_t initial_edges,
                    const ImportanceLedger& ledger, const Eigen::MatrixXd& z,
                    const UpdateConfig& config) {
  const EdgeScores w = edge_importance(ledger, current, config.epsilon);
  const auto cap = static_cast<std::size_t>(config.candidate_cap_factor * static_cast<double>(initial_edges));
  const EdgeScores phi = score_candidates(z, candidate_pairs(topology, spd, current, z, cap));
  const EdgeProposal proposal = update_edge_set(current, w, phi, backbone, initial_edges, config);

  RewireResult out;
  out.edges = enforce_guardrail(proposal, initial_edges, w, phi, config);
  std::set_difference(current.begin(), current.end(), out.edges.begin(), out.edges.end(),
                      std::back_inserter(out.removed));
  std::set_difference(out.edges.begin(), out.edges.end(), current.begin(), current.end(),
                      std::back_inserter(out.added));
  return out;
}

}  // namespace tagrl
