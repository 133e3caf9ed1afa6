#pragma once

// Structure-aware state encoding: raw node features, two GCN layers over the
// logical graph, landmark positional embeddings from the physical graph, row
// normalization, and additive attention over logical neighbors.
//
// Every forward routine that training relies on has a cached variant and a
// matching backward pass; gradients are accumulated (+=) into an
// EncoderParams-shaped buffer.

#include "tagrl/graph.hpp"
#include "tagrl/rng.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace tagrl {

inline constexpr int kRawFeatureDim = 8;
inline constexpr double kAttentionLeakySlope = 0.2;

struct EncoderDims {
  int raw = kRawFeatureDim;
  int feature = 64;  // width of the learned input projection
  int hidden = 128;
  int positional = 16;
  bool use_positional = true;  // concatenate landmark embeddings into z_i
  bool use_attention = true;   // attention aggregation; neighbor mean otherwise

  int positional_width() const { return use_positional ? positional : 0; }
  int state_width() const { return hidden + positional_width(); }
};

struct EncoderParams {
  Eigen::MatrixXd w_in;   // raw x feature
  Eigen::MatrixXd w0;     // feature x hidden
  Eigen::MatrixXd w1;     // hidden x hidden
  Eigen::MatrixXd att_w;  // state x state
  Eigen::MatrixXd att_a;  // 2*state x 1

  static EncoderParams zeros(const EncoderDims& dims);
};

// Glorot-uniform init. Parameters for a reduced variant (no positional part)
// are carved out of the full-shape draw, so shared entries match exactly.
EncoderParams init_encoder(const EncoderDims& dims, Rng& rng);

Eigen::MatrixXd glorot_uniform(int rows, int cols, Rng& rng);

// Per-decision context of the active flow, folded into the raw features.
struct FlowContext {
  NodeId current = 0;
  NodeId destination = 0;
  double ttl_fraction = 0.0;  // remaining hops / ttl_max
};

// n x 8: [degree/n, mean incident util, max incident util, mean incident
// latency / 10 ms, residual/total incident capacity, is-current,
// is-destination, remaining TTL fraction]. Utilization is clipped to [0, 1].
Eigen::MatrixXd compute_raw_features(const PhysicalTopology& topology,
                                     std::span<const double> loads,
                                     const std::optional<FlowContext>& flow);

// activation(a_hat * h * w). Throws ValidationError on shape mismatch.
enum class Activation { identity, relu };
Eigen::MatrixXd gcn_layer(const Eigen::MatrixXd& h, const Eigen::MatrixXd& a_hat,
                          const Eigen::MatrixXd& w, Activation activation);

struct PositionalEmbedding {
  Eigen::MatrixXd p;            // n x k, entries in [0, 1]
  std::vector<NodeId> anchors;  // highest degree first, ties by id
};

PositionalEmbedding positional_embeddings(const PhysicalTopology& topology,
                                          const ShortestPathTable& spd, int k);

// Everything the encoder needs about the graph for one stretch of episodes.
struct EncoderGraph {
  LogicalGraph logical;
  Eigen::MatrixXd a_hat;      // normalized logical adjacency
  Eigen::MatrixXd positions;  // n x positional_width

  EncoderGraph(LogicalGraph graph, Eigen::MatrixXd positions);
};

struct EncoderCache {
  Eigen::MatrixXd x, y0, m1, h1, y1, m2, u, z;
  Eigen::VectorXd norms;
};

// Z rows = L2-normalize([relu(A relu(A X W0) W1) || P]), X = X_raw W_in.
Eigen::MatrixXd encode_states(const Eigen::MatrixXd& x_raw, const EncoderGraph& graph,
                              const EncoderParams& params, const EncoderDims& dims,
                              EncoderCache* cache = nullptr);

// Accumulates into grads given dL/dZ.
void encode_states_backward(const Eigen::MatrixXd& x_raw, const EncoderGraph& graph,
                            const EncoderParams& params, const EncoderDims& dims,
                            const EncoderCache& cache, const Eigen::MatrixXd& d_z,
                            EncoderParams& grads);

struct AggregatedState {
  Eigen::MatrixXd s;      // n x state
  Eigen::MatrixXd alpha;  // n x n, zero off the logical edge set
};

AggregatedState attention_aggregate(const Eigen::MatrixXd& z, const LogicalGraph& graph,
                                    const EncoderParams& params);

// Single-row aggregation used by the policy head: s_i for one node.
struct AggregateCache {
  NodeId node = 0;
  std::vector<NodeId> neighbors;
  Eigen::VectorXd t_self;  // att_w z_i
  Eigen::MatrixXd t_nbr;   // state x |N(i)|
  Eigen::VectorXd pre;     // pre-activation logits
  Eigen::VectorXd alpha;
};

Eigen::VectorXd aggregate_row(const Eigen::MatrixXd& z, const LogicalGraph& graph, NodeId node,
                              const EncoderParams& params, const EncoderDims& dims,
                              AggregateCache* cache = nullptr);

// Accumulates dL/dZ into d_z and parameter gradients into grads.
void aggregate_row_backward(const Eigen::MatrixXd& z, const EncoderParams& params,
                            const EncoderDims& dims, const AggregateCache& cache,
                            const Eigen::VectorXd& d_s, Eigen::MatrixXd& d_z,
                            EncoderParams& grads);

}  // namespace tagrl
