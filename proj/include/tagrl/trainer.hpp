#pragma once

// REINFORCE with an entropy bonus and a moving-average baseline, optimized
// with Adam on a step learning-rate schedule. The Trainer owns one run:
// rollouts, updates, and the between-epoch graph rewiring.

#include "tagrl/gradcheck.hpp"
#include "tagrl/graph.hpp"
#include "tagrl/pagu.hpp"
#include "tagrl/policy.hpp"
#include "tagrl/routing_env.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tagrl {

// Ablation variants: encoder (full vs. no positional part and mean
// aggregation) crossed with graph updates on/off.
enum class Variant { baseline, sase, pagu, full };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view text);
bool uses_full_encoder(Variant v);
bool uses_graph_updates(Variant v);

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 5e-5;
  double lr_decay = 0.5;
  int lr_decay_every = 200;
  double entropy_coef = 0.01;
  double gamma = 0.95;
  int batch = 32;
  int epochs = 1000;
  double baseline_decay = 0.99;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void validate() const;
};

// lr * lr_decay^floor(epoch / lr_decay_every).
double scheduled_lr(const TrainConfig& config, int epoch);

// G_t = r_t + gamma * G_{t+1}, with G = 0 past the last step.
std::vector<double> discounted_returns(std::span<const double> rewards, double gamma);

struct StepRecord {
  DecisionContext context;
  int action = 0;  // index into context.candidates
  double log_prob = 0.0;
  double reward = 0.0;
};

struct Trajectory {
  std::vector<StepRecord> steps;
  EpisodeMetrics metrics;
};

struct LossBreakdown {
  double total = 0.0;
  double policy = 0.0;        // -(1/B) sum log pi * (G - b)
  double entropy = 0.0;       // mean per-step entropy
  double weight = 0.0;        // weight_decay * |theta|^2
  double mean_return = 0.0;   // mean G_t over all steps
};

// Loss over a frozen batch. When grads is given it is overwritten with dL/dtheta.
LossBreakdown policy_loss(const PolicyParams& params, const ModelConfig& model,
                          const std::vector<Trajectory>& batch, double baseline,
                          const TrainConfig& config, PolicyParams* grads = nullptr);

class AdamOptimizer {
 public:
  AdamOptimizer() = default;
  AdamOptimizer(const PolicyParams& like, double beta1, double beta2, double eps);

  void step(PolicyParams& params, const PolicyParams& grads, double lr);

  long step_count() const { return step_count_; }
  const PolicyParams& first_moment() const { return m_; }
  const PolicyParams& second_moment() const { return v_; }

  nlohmann::json to_json() const;
  static AdamOptimizer from_json(const nlohmann::json& j);

 private:
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  long step_count_ = 0;
  PolicyParams m_;
  PolicyParams v_;
};

// One optimizer step on the batch; throws NumericError on a non-finite loss
// or gradient, leaving params untouched.
LossBreakdown policy_gradient_update(const std::vector<Trajectory>& batch, PolicyParams& params,
                                     AdamOptimizer& optimizer, double baseline,
                                     const ModelConfig& model, const TrainConfig& config, double lr);

struct RunConfig {
  TrainConfig train;
  EnvConfig env;
  UpdateConfig update;
  ModelConfig model;
  Variant variant = Variant::full;

  // Model config with the variant's encoder switches applied.
  ModelConfig effective_model() const;
  void validate(const PhysicalTopology& topology) const;
};

struct EpochRecord {
  int epoch = 0;
  double avg_throughput = 0.0;
  double avg_latency_ms = 0.0;
  double max_link_utilization_pct = 0.0;
  double reward = 0.0;
  double delta = 0.0;  // behavior deviation at this epoch's check, 0 when unchecked
  std::size_t edge_count = 0;
  double lr = 0.0;
  double loss = 0.0;
  double entropy = 0.0;
};

// epoch,seed,avg_throughput,avg_latency_ms,max_link_utilization_pct,reward,delta,edge_count,lr
std::string metrics_csv_header();
std::string metrics_csv_row(const EpochRecord& r, std::uint64_t seed);

class Trainer {
 public:
  Trainer(PhysicalTopology topology, RunConfig config, std::uint64_t seed);

  // Rollouts, update, then the deviation check and (maybe) a graph update.
  const EpochRecord& run_epoch();
  // Runs until config.train.epochs epochs are done.
  void train();

  std::vector<Trajectory> rollout_batch(int epoch) const;
  Trajectory rollout_episode(std::uint64_t flow_seed, std::uint64_t action_seed,
                             std::span<const double> initial_loads = {}) const;

  // Action distributions on the snapshot's probe states.
  std::vector<Eigen::VectorXd> probe_distributions(const PolicyParams& params) const;

  const PhysicalTopology& topology() const { return topology_; }
  const RunConfig& config() const { return config_; }
  const ModelConfig& model() const { return model_; }
  std::uint64_t seed() const { return seed_; }
  int epoch() const { return epoch_; }
  const PolicyParams& params() const { return params_; }
  const AdamOptimizer& optimizer() const { return optimizer_; }
  const LogicalGraph& logical_graph() const { return graph_->logical; }
  const std::shared_ptr<const EncoderGraph>& encoder_graph() const { return graph_; }
  std::size_t initial_edge_count() const { return initial_edges_; }
  const std::vector<EpochRecord>& history() const { return history_; }
  const std::vector<GraphUpdateRecord>& update_log() const { return updates_; }
  int graph_update_calls() const { return graph_update_calls_; }
  double baseline() const { return baseline_; }

  nlohmann::json checkpoint() const;
  static Trainer from_checkpoint(const nlohmann::json& j);
  void save_checkpoint(const std::filesystem::path& path) const;
  static Trainer load_checkpoint(const std::filesystem::path& path);

 private:
  struct Snapshot {
    PolicyParams params;
    std::vector<DecisionContext> probes;
    std::vector<Eigen::VectorXd> reference;  // snapshot policy on the probes
  };

  void take_snapshot(const std::vector<Trajectory>& batch, int epoch);
  void set_graph(LogicalGraph graph);
  Eigen::MatrixXd relevance_states(const std::vector<Trajectory>& batch) const;

  PhysicalTopology topology_;
  RunConfig config_;
  ModelConfig model_;
  std::uint64_t seed_;
  ShortestPathTable spd_;
  Eigen::MatrixXd positions_;
  EdgeSet backbone_;
  std::size_t initial_edges_;
  std::shared_ptr<const EncoderGraph> graph_;

  PolicyParams params_;
  AdamOptimizer optimizer_;
  double baseline_ = 0.0;
  bool baseline_ready_ = false;
  ImportanceLedger ledger_;
  std::optional<Snapshot> snapshot_;
  std::vector<double> carried_loads_;

  int epoch_ = 0;
  int graph_update_calls_ = 0;
  std::vector<EpochRecord> history_;
  std::vector<GraphUpdateRecord> updates_;
};

struct TrainResult {
  PolicyParams params;
  std::vector<EpochRecord> history;
  std::vector<GraphUpdateRecord> updates;
};

TrainResult train(const RunConfig& config, const PhysicalTopology& topology, std::uint64_t seed);

// Gradient check of the full loss on a small frozen instance: a 6-node
// topology, episodes of 2 flows, batch 2, variant full.
struct GradCheckInstance {
  RunConfig config;
  ModelConfig model;
  PolicyParams params;
  std::vector<Trajectory> batch;
  double baseline = 0.0;
};

GradCheckInstance make_gradcheck_instance(std::uint64_t seed);

// With corrupt set, the analytic gradient of the sampled coordinate with the
// largest magnitude is scaled by 1.01 before comparison.
GradCheckReport check_policy_gradient(std::uint64_t seed, int samples = 200, bool corrupt = false);

// JSON forms used by checkpoints and experiment manifests. Unknown keys are
// rejected with ValidationError.
nlohmann::json to_json(const TrainConfig& c);
nlohmann::json to_json(const EnvConfig& c);
nlohmann::json to_json(const UpdateConfig& c);
nlohmann::json to_json(const ModelConfig& c);
nlohmann::json to_json(const RunConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void from_json(const nlohmann::json& j, EnvConfig& c);
void from_json(const nlohmann::json& j, UpdateConfig& c);
void from_json(const nlohmann::json& j, ModelConfig& c);
void from_json(const nlohmann::json& j, RunConfig& c);

nlohmann::json params_to_json(const PolicyParams& params);
PolicyParams params_from_json(const nlohmann::json& j);

}  // namespace tagrl
