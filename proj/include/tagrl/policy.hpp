#pragma once

// Routing policy: the structure-aware encoder followed by a one-hidden-layer
// scoring head evaluated per feasible next hop, softmaxed over candidates.

#include "tagrl/graph.hpp"
#include "tagrl/sase.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <string_view>
#include <vector>

namespace tagrl {

struct ModelConfig {
  EncoderDims encoder;
  int head_hidden = 128;

  int head_input() const { return 3 * encoder.state_width() + 2; }
};

struct PolicyParams {
  EncoderParams encoder;
  Eigen::MatrixXd head_w1;  // head_input x head_hidden
  Eigen::MatrixXd head_b1;  // head_hidden x 1
  Eigen::MatrixXd head_w2;  // head_hidden x 1
  Eigen::MatrixXd head_b2;  // 1 x 1

  static PolicyParams zeros(const ModelConfig& config);

  template <typename F>
  void visit(F&& f) {
    f(std::string_view{"w_in"}, encoder.w_in);
    f(std::string_view{"w0"}, encoder.w0);
    f(std::string_view{"w1"}, encoder.w1);
    f(std::string_view{"att_w"}, encoder.att_w);
    f(std::string_view{"att_a"}, encoder.att_a);
    f(std::string_view{"head_w1"}, head_w1);
    f(std::string_view{"head_b1"}, head_b1);
    f(std::string_view{"head_w2"}, head_w2);
    f(std::string_view{"head_b2"}, head_b2);
  }
  template <typename F>
  void visit(F&& f) const {
    const_cast<PolicyParams*>(this)->visit(
        [&](std::string_view name, Eigen::MatrixXd& m) { f(name, static_cast<const Eigen::MatrixXd&>(m)); });
  }

  Eigen::Index size() const;
  bool all_finite() const;
  double squared_norm() const;

  bool operator==(const PolicyParams& other) const;
};

PolicyParams init_policy(const ModelConfig& config, std::uint64_t seed);

Eigen::VectorXd flatten(const PolicyParams& params);
void unflatten(const Eigen::VectorXd& flat, PolicyParams& params);

// One routing decision, self-contained so it can be replayed for the loss.
struct DecisionContext {
  std::shared_ptr<const EncoderGraph> graph;
  Eigen::MatrixXd x_raw;
  NodeId current = 0;
  std::vector<NodeId> candidates;  // feasible next hops, ascending
  double ttl_fraction = 0.0;
  double demand_norm = 0.0;
};

struct ActionDistribution {
  Eigen::VectorXd probs;  // aligned with DecisionContext::candidates
  Eigen::VectorXd log_probs;
  double entropy = 0.0;
};

struct PolicyCache {
  EncoderCache encoder;
  AggregateCache aggregate;
  Eigen::MatrixXd z;
  Eigen::MatrixXd inputs;  // candidates x head_input
  Eigen::MatrixXd pre;     // candidates x head_hidden
};

// Throws ContractViolation when the candidate set is empty.
ActionDistribution policy_forward(const PolicyParams& params, const ModelConfig& config,
                                  const DecisionContext& context, PolicyCache* cache = nullptr);

// d_scores is dL/dscore per candidate; accumulates into grads.
void policy_backward(const PolicyParams& params, const ModelConfig& config,
                     const DecisionContext& context, const PolicyCache& cache,
                     const Eigen::VectorXd& d_scores, PolicyParams& grads);

}  // namespace tagrl
