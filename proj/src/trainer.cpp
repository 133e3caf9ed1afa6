#include "tagrl/trainer.hpp"

#include "tagrl/error.hpp"
#include "tagrl/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace tagrl {

using json = nlohmann::json;

namespace {

// Independent RNG streams derived from the run seed.
constexpr std::uint64_t kInitStream = 0x1;
constexpr std::uint64_t kActionStream = 0x2;
constexpr std::uint64_t kProbeStream = 0x3;

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::baseline: return "baseline";
    case Variant::sase: return "sase";
    case Variant::pagu: return "pagu";
    case Variant::full: return "full";
  }
  return "full";
}

Variant parse_variant(std::string_view text) {
  if (text == "baseline") return Variant::baseline;
  if (text == "sase") return Variant::sase;
  if (text == "pagu") return Variant::pagu;
  if (text == "full") return Variant::full;
  throw ValidationError("unknown variant: " + std::string(text));
}

bool uses_full_encoder(Variant v) { return v == Variant::sase || v == Variant::full; }
bool uses_graph_updates(Variant v) { return v == Variant::pagu || v == Variant::full; }

void TrainConfig::validate() const {
  if (!(lr > 0.0) || !(lr_decay > 0.0) || !(entropy_coef >= 0.0) || !(weight_decay >= 0.0))
    throw ValidationError("learning rate and decay factors must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("gamma must lie in [0, 1)");
  if (batch < 1) throw ValidationError("batch must be at least 1");
  if (epochs < 0) throw ValidationError("epochs must be nonnegative");
  if (lr_decay_every < 1) throw ValidationError("lr_decay_every must be at least 1");
  if (!(baseline_decay >= 0.0 && baseline_decay < 1.0)) throw ValidationError("baseline decay must lie in [0, 1)");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0) || !(adam_eps > 0.0))
    throw ValidationError("invalid Adam hyperparameters");
}

double scheduled_lr(const TrainConfig& config, int epoch) {
  return config.lr * std::pow(config.lr_decay, epoch / config.lr_decay_every);
}

std::vector<double> discounted_returns(std::span<const double> rewards, double gamma) {
  std::vector<double> out(rewards.size());
  double running = 0.0;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    running = rewards[t] + gamma * running;
    out[t] = running;
  }
  return out;
}

namespace {

std::vector<double> rewards_of(const Trajectory& traj) {
  std::vector<double> r;
  r.reserve(traj.steps.size());
  for (const auto& s : traj.steps) r.push_back(s.reward);
  return r;
}

double mean_return(const std::vector<Trajectory>& batch, double gamma) {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& traj : batch) {
    for (double g : discounted_returns(rewards_of(traj), gamma)) sum += g;
    count += traj.steps.size();
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

}  // namespace

LossBreakdown policy_loss(const PolicyParams& params, const ModelConfig& model,
                          const std::vector<Trajectory>& batch, double baseline,
                          const TrainConfig& config, PolicyParams* grads) {
  LossBreakdown out;
  if (grads) *grads = PolicyParams::zeros(model);
  const double b_count = static_cast<double>(batch.size());
  std::size_t total_steps = 0;
  for (const auto& traj : batch) total_steps += traj.steps.size();
  if (batch.empty() || total_steps == 0) {
    out.weight = config.weight_decay * params.squared_norm();
    out.total = out.weight;
    return out;
  }
  const double n_steps = static_cast<double>(total_steps);

  PolicyCache cache;
  double entropy_sum = 0.0;
  double return_sum = 0.0;
  for (const auto& traj : batch) {
    const auto returns = discounted_returns(rewards_of(traj), config.gamma);
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
      const auto& step = traj.steps[t];
      const auto dist = policy_forward(params, model, step.context, grads ? &cache : nullptr);
      const double advantage = returns[t] - baseline;
      out.policy -= dist.log_probs(step.action) * advantage / b_count;
      entropy_sum += dist.entropy;
      return_sum += returns[t];
      if (grads) {
        // d(-lp*A/B)/ds = -(A/B)(onehot - p);  d(-c*H/N)/ds = (c/N) p (log p + H).
        Eigen::VectorXd d_scores = (advantage / b_count) * dist.probs;
        d_scores(step.action) -= advantage / b_count;
        d_scores.array() += (config.entropy_coef / n_steps) * dist.probs.array() *
                            (dist.log_probs.array() + dist.entropy);
        policy_backward(params, model, step.context, cache, d_scores, *grads);
      }
    }
  }
  out.entropy = entropy_sum / n_steps;
  out.mean_return = return_sum / n_steps;
  out.weight = config.weight_decay * params.squared_norm();
  out.total = out.policy - config.entropy_coef * out.entropy + out.weight;
  if (grads && config.weight_decay > 0.0) {
    auto src = flatten(params);
    auto g = flatten(*grads);
    g += 2.0 * config.weight_decay * src;
    unflatten(g, *grads);
  }
  return out;
}

AdamOptimizer::AdamOptimizer(const PolicyParams& like, double beta1, double beta2, double eps)
    : beta1_(beta1), beta2_(beta2), eps_(eps), m_(like), v_(like) {
  m_.visit([](std::string_view, Eigen::MatrixXd& m) { m.setZero(); });
  v_.visit([](std::string_view, Eigen::MatrixXd& m) { m.setZero(); });
}

void AdamOptimizer::step(PolicyParams& params, const PolicyParams& grads, double lr) {
  ++step_count_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(step_count_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(step_count_));
  Eigen::VectorXd theta = flatten(params);
  Eigen::VectorXd g = flatten(grads);
  Eigen::VectorXd m = flatten(m_);
  Eigen::VectorXd v = flatten(v_);
  m = beta1_ * m + (1.0 - beta1_) * g;
  v = beta2_ * v + (1.0 - beta2_) * g.cwiseAbs2();
  theta.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + eps_);
  unflatten(theta, params);
  unflatten(m, m_);
  unflatten(v, v_);
}

json AdamOptimizer::to_json() const {
  json j;
  j["beta1"] = beta1_;
  j["beta2"] = beta2_;
  j["eps"] = eps_;
  j["step"] = step_count_;
  j["m"] = params_to_json(m_);
  j["v"] = params_to_json(v_);
  return j;
}

AdamOptimizer AdamOptimizer::from_json(const json& j) {
  AdamOptimizer a;
  a.beta1_ = j.at("beta1").get<double>();
  a.beta2_ = j.at("beta2").get<double>();
  a.eps_ = j.at("eps").get<double>();
  a.step_count_ = j.at("step").get<long>();
  a.m_ = params_from_json(j.at("m"));
  a.v_ = params_from_json(j.at("v"));
  return a;
}

LossBreakdown policy_gradient_update(const std::vector<Trajectory>& batch, PolicyParams& params,
                                     AdamOptimizer& optimizer, double baseline,
                                     const ModelConfig& model, const TrainConfig& config, double lr) {
  PolicyParams grads;
  LossBreakdown loss = policy_loss(params, model, batch, baseline, config, &grads);
  if (!std::isfinite(loss.total)) {
    std::ostringstream msg;
    msg << "non-finite loss (policy " << loss.policy << ", entropy " << loss.entropy << ", weight "
        << loss.weight << ")";
    throw NumericError(msg.str());
  }
  if (!grads.all_finite()) throw NumericError("non-finite gradient");
  PolicyParams next = params;
  optimizer.step(next, grads, lr);
  if (!next.all_finite()) throw NumericError("non-finite parameters after the optimizer step");
  params = std::move(next);
  return loss;
}

ModelConfig RunConfig::effective_model() const {
  ModelConfig m = model;
  m.encoder.use_positional = uses_full_encoder(variant);
  m.encoder.use_attention = uses_full_encoder(variant);
  return m;
}

void RunConfig::validate(const PhysicalTopology& topology) const {
  train.validate();
  update.validate();
  if (env.flows_per_episode < 1) throw ValidationError("flows per episode must be at least 1");
  if (topology.num_nodes() < 2) throw ValidationError("training needs at least two nodes");
  const auto m = effective_model();
  if (m.encoder.feature < 1 || m.encoder.hidden < 1 || m.head_hidden < 1 || m.encoder.positional < 0)
    throw ValidationError("model dimensions must be positive");
  if (m.encoder.raw != kRawFeatureDim) throw ValidationError("raw feature width is fixed at 8");
  if (m.encoder.positional > topology.num_nodes())
    throw ValidationError("positional dimension exceeds the node count");
}

std::string metrics_csv_header() {
  return "epoch,seed,avg_throughput,avg_latency_ms,max_link_utilization_pct,reward,delta,edge_count,lr";
}

std::string metrics_csv_row(const EpochRecord& r, std::uint64_t seed) {
  char buf[512];
  std::snprintf(buf, sizeof buf, "%d,%llu,%.6f,%.6f,%.6f,%.6f,%.6f,%zu,%.6e", r.epoch,
                static_cast<unsigned long long>(seed), r.avg_throughput, r.avg_latency_ms,
                r.max_link_utilization_pct, r.reward, r.delta, r.edge_count, r.lr);
  return buf;
}

Trainer::Trainer(PhysicalTopology topology, RunConfig config, std::uint64_t seed)
    : topology_(std::move(topology)),
      config_(std::move(config)),
      seed_(seed),
      ledger_(config_.update.window) {
  config_.validate(topology_);
  model_ = config_.effective_model();
  spd_ = shortest_path_distances(topology_);
  const int k = model_.encoder.positional_width();
  positions_ = k > 0 ? positional_embeddings(topology_, spd_, k).p
                     : Eigen::MatrixXd(topology_.num_nodes(), 0);
  backbone_ = minimum_spanning_backbone(topology_);
  initial_edges_ = topology_.num_edges();
  set_graph(LogicalGraph::from_topology(topology_));
  params_ = init_policy(model_, mix_seed(seed_, kInitStream));
  const auto& t = config_.train;
  optimizer_ = AdamOptimizer(params_, t.adam_beta1, t.adam_beta2, t.adam_eps);
}

void Trainer::set_graph(LogicalGraph graph) {
  graph_ = std::make_shared<const EncoderGraph>(std::move(graph), positions_);
}

Trajectory Trainer::rollout_episode(std::uint64_t flow_seed, std::uint64_t action_seed,
                                    std::span<const double> initial_loads) const {
  RoutingEnv env(topology_, config_.env);
  env.reset(flow_seed, initial_loads);
  Rng rng(action_seed);
  Trajectory traj;
  while (!env.done()) {
    const auto& active = *env.active();
    StepRecord rec;
    rec.context.graph = graph_;
    rec.context.x_raw = env.raw_features();
    rec.context.current = active.current;
    rec.context.candidates = env.feasible_actions();
    rec.context.ttl_fraction = env.flow_context()->ttl_fraction;
    rec.context.demand_norm = active.flow.demand / config_.env.demand_hi;

    const auto dist = policy_forward(params_, model_, rec.context);
    const double u = uniform01(rng);
    double cumulative = 0.0;
    int choice = static_cast<int>(dist.probs.size()) - 1;
    for (Eigen::Index a = 0; a < dist.probs.size(); ++a) {
      cumulative += dist.probs(a);
      if (u < cumulative) {
        choice = static_cast<int>(a);
        break;
      }
    }
    rec.action = choice;
    rec.log_prob = dist.log_probs(choice);
    rec.reward = env.step(rec.context.candidates[choice]).reward;
    traj.steps.push_back(std::move(rec));
  }
  traj.metrics = env.metrics();
  return traj;
}

std::vector<Trajectory> Trainer::rollout_batch(int epoch) const {
  std::vector<Trajectory> batch;
  batch.reserve(static_cast<std::size_t>(config_.train.batch));
  std::vector<double> loads = carried_loads_;
  const auto ep = static_cast<std::uint64_t>(epoch);
  for (int e = 0; e < config_.train.batch; ++e) {
    const auto idx = static_cast<std::uint64_t>(e);
    auto traj = rollout_episode(mix_seed(seed_, ep, idx), mix_seed(seed_ ^ kActionStream, ep, idx),
                                config_.env.carry_loads ? std::span<const double>(loads)
                                                        : std::span<const double>());
    if (config_.env.carry_loads) loads = traj.metrics.final_loads;
    batch.push_back(std::move(traj));
  }
  return batch;
}

namespace {

constexpr const char* kCheckpointFormat = "tagrl-checkpoint-1";

std::vector<const DecisionContext*> all_contexts(const std::vector<Trajectory>& batch) {
  std::vector<const DecisionContext*> out;
  for (const auto& traj : batch)
    for (const auto& step : traj.steps) out.push_back(&step.context);
  return out;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  if (rows < 0 || cols < 0 || data.size() != static_cast<std::size_t>(rows * cols))
    throw ValidationError("matrix shape header does not match its data");
  Eigen::MatrixXd m(rows, cols);
  std::size_t at = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = data[at++].get<double>();
  return m;
}

json pairs_to_json(const std::vector<NodePair>& pairs) {
  json arr = json::array();
  for (const auto& [a, b] : pairs) arr.push_back({a, b});
  return arr;
}

std::vector<NodePair> pairs_from_json(const json& j) {
  std::vector<NodePair> out;
  for (const auto& item : j) out.emplace_back(item.at(0).get<int>(), item.at(1).get<int>());
  return out;
}

json record_to_json(const EpochRecord& r) {
  return {{"epoch", r.epoch},
          {"avg_throughput", r.avg_throughput},
          {"avg_latency_ms", r.avg_latency_ms},
          {"max_link_utilization_pct", r.max_link_utilization_pct},
          {"reward", r.reward},
          {"delta", r.delta},
          {"edge_count", r.edge_count},
          {"lr", r.lr},
          {"loss", r.loss},
          {"entropy", r.entropy}};
}

EpochRecord record_from_json(const json& j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<int>();
  r.avg_throughput = j.at("avg_throughput").get<double>();
  r.avg_latency_ms = j.at("avg_latency_ms").get<double>();
  r.max_link_utilization_pct = j.at("max_link_utilization_pct").get<double>();
  r.reward = j.at("reward").get<double>();
  r.delta = j.at("delta").get<double>();
  r.edge_count = j.at("edge_count").get<std::size_t>();
  r.lr = j.at("lr").get<double>();
  r.loss = j.at("loss").get<double>();
  r.entropy = j.at("entropy").get<double>();
  return r;
}

}  // namespace

std::vector<Eigen::VectorXd> Trainer::probe_distributions(const PolicyParams& params) const {
  std::vector<Eigen::VectorXd> out;
  if (!snapshot_) return out;
  out.reserve(snapshot_->probes.size());
  for (const auto& ctx : snapshot_->probes) out.push_back(policy_forward(params, model_, ctx).probs);
  return out;
}

void Trainer::take_snapshot(const std::vector<Trajectory>& batch, int epoch) {
  const auto contexts = all_contexts(batch);
  Snapshot snap;
  snap.params = params_;
  Rng rng(mix_seed(seed_, static_cast<std::uint64_t>(epoch), kProbeStream));
  std::vector<std::size_t> order(contexts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  shuffle(order, rng);
  order.resize(std::min(order.size(), static_cast<std::size_t>(config_.update.probe_states)));
  std::sort(order.begin(), order.end());
  for (std::size_t i : order) {
    DecisionContext ctx = *contexts[i];
    ctx.graph = graph_;
    snap.probes.push_back(std::move(ctx));
  }
  snapshot_ = std::move(snap);
  snapshot_->reference = probe_distributions(snapshot_->params);
}

Eigen::MatrixXd Trainer::relevance_states(const std::vector<Trajectory>& batch) const {
  const auto contexts = all_contexts(batch);
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(topology_.num_nodes(), kRawFeatureDim);
  for (const auto* ctx : contexts) mean += ctx->x_raw;
  if (!contexts.empty()) mean /= static_cast<double>(contexts.size());
  return encode_states(mean, *graph_, params_.encoder, model_.encoder);
}

const EpochRecord& Trainer::run_epoch() {
  const int e = epoch_;
  const double lr = scheduled_lr(config_.train, e);
  const auto batch = rollout_batch(e);
  const bool graph_updates = uses_graph_updates(config_.variant);

  if (graph_updates) {
    for (const auto& traj : batch)
      ledger_.record(episode_usage(topology_, traj.metrics.traversals, traj.metrics.paths),
                     traj.metrics.reward);
    if (!snapshot_) take_snapshot(batch, e);
  }
  if (!baseline_ready_) {
    baseline_ = mean_return(batch, config_.train.gamma);
    baseline_ready_ = true;
  }

  const LossBreakdown loss =
      policy_gradient_update(batch, params_, optimizer_, baseline_, model_, config_.train, lr);
  const double decay = config_.train.baseline_decay;
  baseline_ = decay * baseline_ + (1.0 - decay) * loss.mean_return;

  EpochRecord rec;
  rec.epoch = e;
  rec.lr = lr;
  rec.loss = loss.total;
  rec.entropy = loss.entropy;
  for (const auto& traj : batch) {
    rec.avg_throughput += traj.metrics.avg_throughput;
    rec.avg_latency_ms += traj.metrics.avg_latency_ms;
    rec.max_link_utilization_pct += traj.metrics.max_link_utilization_pct;
    rec.reward += traj.metrics.reward;
  }
  const double b = static_cast<double>(batch.size());
  rec.avg_throughput /= b;
  rec.avg_latency_ms /= b;
  rec.max_link_utilization_pct /= b;
  rec.reward /= b;

  if (graph_updates) {
    rec.delta = policy_deviation(probe_distributions(params_), snapshot_->reference);
    if (rec.delta >= config_.update.deviation_threshold) {
      ++graph_update_calls_;
      const auto result = rewire(topology_, spd_, graph_->logical.edges(), backbone_, initial_edges_,
                                 ledger_, relevance_states(batch), config_.update);
      set_graph(LogicalGraph(topology_.num_nodes(), result.edges));
      GraphUpdateRecord log;
      log.epoch = e;
      log.delta = rec.delta;
      log.removed = result.removed;
      log.added = result.added;
      log.edge_count = result.edges.size();
      updates_.push_back(std::move(log));
      take_snapshot(batch, e);
    }
  }
  rec.edge_count = graph_->logical.num_edges();

  if (config_.env.carry_loads && !batch.empty()) carried_loads_ = batch.back().metrics.final_loads;
  history_.push_back(rec);
  ++epoch_;
  return history_.back();
}

void Trainer::train() {
  while (epoch_ < config_.train.epochs) run_epoch();
}

TrainResult train(const RunConfig& config, const PhysicalTopology& topology, std::uint64_t seed) {
  Trainer trainer(topology, config, seed);
  trainer.train();
  return {trainer.params(), trainer.history(), trainer.update_log()};
}

json params_to_json(const PolicyParams& params) {
  json j = json::object();
  params.visit([&](std::string_view name, const Eigen::MatrixXd& m) { j[std::string(name)] = matrix_to_json(m); });
  return j;
}

PolicyParams params_from_json(const json& j) {
  PolicyParams p;
  try {
    p.visit([&](std::string_view name, Eigen::MatrixXd& m) { m = matrix_from_json(j.at(std::string(name))); });
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed parameters: ") + e.what());
  }
  return p;
}

json Trainer::checkpoint() const {
  json j;
  j["format"] = kCheckpointFormat;
  j["seed"] = seed_;
  j["epoch"] = epoch_;
  // Every random draw derives from (seed, epoch, index), so this is the whole RNG state.
  j["rng"] = {{"seed", seed_}, {"next_epoch", epoch_}};
  j["config"] = to_json(config_);
  j["topology"] = json::parse(topology_to_json(topology_));
  j["params"] = params_to_json(params_);
  j["optimizer"] = optimizer_.to_json();
  j["baseline"] = {{"value", baseline_}, {"ready", baseline_ready_}};
  const auto& edges = graph_->logical.edges();
  j["logical_edges"] = pairs_to_json({edges.begin(), edges.end()});
  j["graph_update_calls"] = graph_update_calls_;
  j["carried_loads"] = carried_loads_;

  json ledger = json::array();
  for (const auto& entry : ledger_.entries()) {
    json usage = json::array();
    for (const auto& [pair, count] : entry.usage) usage.push_back({pair.first, pair.second, count});
    ledger.push_back({{"usage", std::move(usage)}, {"reward", entry.reward}});
  }
  j["ledger"] = std::move(ledger);

  if (snapshot_) {
    json probes = json::array();
    for (const auto& ctx : snapshot_->probes) {
      probes.push_back({{"x_raw", matrix_to_json(ctx.x_raw)},
                        {"current", ctx.current},
                        {"candidates", ctx.candidates},
                        {"ttl_fraction", ctx.ttl_fraction},
                        {"demand_norm", ctx.demand_norm}});
    }
    j["snapshot"] = {{"params", params_to_json(snapshot_->params)}, {"probes", std::move(probes)}};
  } else {
    j["snapshot"] = nullptr;
  }

  json history = json::array();
  for (const auto& r : history_) history.push_back(record_to_json(r));
  j["history"] = std::move(history);
  json updates = json::array();
  for (const auto& u : updates_) updates.push_back(json::parse(u.to_json_line()));
  j["updates"] = std::move(updates);
  return j;
}

Trainer Trainer::from_checkpoint(const json& j) {
  try {
    if (!j.is_object() || j.value("format", std::string{}) != kCheckpointFormat)
      throw ValidationError("not a training checkpoint");
    RunConfig config;
    from_json(j.at("config"), config);
    Trainer t(topology_from_json(j.at("topology").dump()), config, j.at("seed").get<std::uint64_t>());
    t.epoch_ = j.at("epoch").get<int>();
    t.params_ = params_from_json(j.at("params"));
    t.optimizer_ = AdamOptimizer::from_json(j.at("optimizer"));
    t.baseline_ = j.at("baseline").at("value").get<double>();
    t.baseline_ready_ = j.at("baseline").at("ready").get<bool>();
    const auto edges = pairs_from_json(j.at("logical_edges"));
    t.set_graph(LogicalGraph(t.topology_.num_nodes(), EdgeSet(edges.begin(), edges.end())));
    t.graph_update_calls_ = j.at("graph_update_calls").get<int>();
    t.carried_loads_ = j.at("carried_loads").get<std::vector<double>>();

    for (const auto& entry : j.at("ledger")) {
      EdgeScores usage;
      for (const auto& u : entry.at("usage"))
        usage[{u.at(0).get<int>(), u.at(1).get<int>()}] = u.at(2).get<double>();
      t.ledger_.record(std::move(usage), entry.at("reward").get<double>());
    }
    if (!j.at("snapshot").is_null()) {
      Snapshot snap;
      snap.params = params_from_json(j.at("snapshot").at("params"));
      for (const auto& p : j.at("snapshot").at("probes")) {
        DecisionContext ctx;
        ctx.graph = t.graph_;
        ctx.x_raw = matrix_from_json(p.at("x_raw"));
        ctx.current = p.at("current").get<int>();
        ctx.candidates = p.at("candidates").get<std::vector<int>>();
        ctx.ttl_fraction = p.at("ttl_fraction").get<double>();
        ctx.demand_norm = p.at("demand_norm").get<double>();
        snap.probes.push_back(std::move(ctx));
      }
      t.snapshot_ = std::move(snap);
      t.snapshot_->reference = t.probe_distributions(t.snapshot_->params);
    }
    for (const auto& r : j.at("history")) t.history_.push_back(record_from_json(r));
    for (const auto& u : j.at("updates")) {
      GraphUpdateRecord rec;
      rec.epoch = u.at("epoch").get<int>();
      rec.delta = u.at("delta").get<double>();
      rec.removed = pairs_from_json(u.at("removed"));
      rec.added = pairs_from_json(u.at("added"));
      rec.edge_count = u.at("edge_count").get<std::size_t>();
      t.updates_.push_back(std::move(rec));
    }
    return t;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
}

void Trainer::save_checkpoint(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write checkpoint: " + path.string());
  out << checkpoint().dump() << "\n";
}

Trainer Trainer::load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open checkpoint: " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("malformed checkpoint: ") + e.what());
  }
  return from_checkpoint(j);
}

}  // namespace tagrl
