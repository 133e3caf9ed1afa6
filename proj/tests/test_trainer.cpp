#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tagrl/error.hpp"
#include "tagrl/trainer.hpp"

#include <cmath>
#include <filesystem>

using namespace tagrl;

namespace {

PhysicalTopology small_topology() {
  GeneratorConfig g;
  g.n = 8;
  g.clusters = 2;
  g.min_edges = 10;
  return generate_geant_like(4, g);
}

RunConfig small_run(Variant v, int epochs) {
  RunConfig rc;
  rc.variant = v;
  rc.model.encoder.feature = 8;
  rc.model.encoder.hidden = 8;
  rc.model.encoder.positional = 4;
  rc.model.head_hidden = 8;
  rc.env.flows_per_episode = 4;
  rc.train.batch = 4;
  rc.train.epochs = epochs;
  rc.update.deviation_threshold = 0.02;
  return rc;
}

std::string csv_of(const std::vector<EpochRecord>& h, std::uint64_t seed) {
  std::string out = metrics_csv_header() + "\n";
  for (const auto& r : h) out += metrics_csv_row(r, seed) + "\n";
  return out;
}

double max_abs_diff(const PolicyParams& a, const PolicyParams& b) {
  return (flatten(a) - flatten(b)).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("discounted returns") {
  const std::vector<double> r{1, 1, 1};
  CHECK(discounted_returns(r, 0.5) == std::vector<double>{1.75, 1.5, 1.0});
  const std::vector<double> mixed{0.3, -1.0, 2.5};
  CHECK(discounted_returns(mixed, 0.0) == mixed);
  const std::vector<double> zeros(4, 0.0);
  CHECK(discounted_returns(zeros, 0.9) == zeros);
  CHECK(discounted_returns({}, 0.9).empty());
}

TEST_CASE("learning rate schedule") {
  TrainConfig c;
  CHECK(scheduled_lr(c, 0) == 1e-3);
  CHECK(scheduled_lr(c, 199) == 1e-3);
  CHECK(scheduled_lr(c, 200) == 5e-4);
  CHECK(scheduled_lr(c, 400) == 2.5e-4);
  for (int e = 0; e < 1000; e += 37) CHECK(scheduled_lr(c, e) == 1e-3 * std::pow(0.5, e / 200));
}

TEST_CASE("train config validation") {
  TrainConfig c;
  c.gamma = 1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.lr = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.batch = 0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.gamma = 0.0;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("finite differences on a quadratic") {
  const Eigen::VectorXd theta = Eigen::VectorXd::LinSpaced(200, 0.5, 1.5);
  const LossClosure sq = [](const Eigen::VectorXd& x, Eigen::VectorXd* g) {
    if (g) *g = 2.0 * x;
    return x.squaredNorm();
  };
  const auto report = finite_difference_check(theta, sq);
  CHECK(report.coordinates.size() == 200);
  CHECK(report.max_rel_error < 1e-8);
  const auto coords = sample_coordinates(10, 200, 1);
  CHECK(coords.size() == 10);
}

TEST_CASE("full loss gradient matches finite differences") {
  const auto report = check_policy_gradient(1);
  CHECK(report.coordinates.size() == 200);
  CHECK(report.max_rel_error < 1e-4);
}

TEST_CASE("corrupted gradient fails the check") {
  CHECK(check_policy_gradient(1, 200, true).max_rel_error > 1e-4);
}

TEST_CASE("zero advantage and no regularizers leave params unchanged") {
  const auto topo = small_topology();
  auto rc = small_run(Variant::full, 1);
  rc.train.entropy_coef = 0.0;
  rc.train.weight_decay = 0.0;
  rc.train.gamma = 0.0;
  Trainer trainer(topo, rc, 3);
  auto batch = trainer.rollout_batch(0);
  // With gamma = 0 each return is its own reward; make every reward equal to b.
  for (auto& traj : batch)
    for (auto& s : traj.steps) s.reward = 0.5;
  PolicyParams grads;
  policy_loss(trainer.params(), trainer.model(), batch, 0.5, rc.train, &grads);
  CHECK(flatten(grads).cwiseAbs().maxCoeff() == 0.0);
  PolicyParams params = trainer.params();
  AdamOptimizer opt(params, 0.9, 0.999, 1e-8);
  policy_gradient_update(batch, params, opt, 0.5, trainer.model(), rc.train, 1e-3);
  CHECK(params == trainer.params());
}

TEST_CASE("non-finite loss aborts with a diagnostic") {
  const auto topo = small_topology();
  const auto rc = small_run(Variant::full, 1);
  Trainer trainer(topo, rc, 3);
  auto batch = trainer.rollout_batch(0);
  batch[0].steps[0].reward = std::nan("");
  PolicyParams params = trainer.params();
  AdamOptimizer opt(params, 0.9, 0.999, 1e-8);
  CHECK_THROWS_AS(policy_gradient_update(batch, params, opt, 0.0, trainer.model(), rc.train, 1e-3),
                  NumericError);
  CHECK(params == trainer.params());
}

TEST_CASE("update is deterministic") {
  const auto topo = small_topology();
  const auto rc = small_run(Variant::full, 1);
  Trainer trainer(topo, rc, 5);
  const auto batch = trainer.rollout_batch(0);
  PolicyParams a = trainer.params(), b = trainer.params();
  AdamOptimizer oa(a, 0.9, 0.999, 1e-8), ob(b, 0.9, 0.999, 1e-8);
  policy_gradient_update(batch, a, oa, 0.1, trainer.model(), rc.train, 1e-3);
  policy_gradient_update(batch, b, ob, 0.1, trainer.model(), rc.train, 1e-3);
  CHECK(a == b);
  CHECK_FALSE(a == trainer.params());
}

TEST_CASE("loss terms") {
  const auto topo = small_topology();
  const auto rc = small_run(Variant::full, 1);
  Trainer trainer(topo, rc, 6);
  const auto batch = trainer.rollout_batch(0);
  const auto l = policy_loss(trainer.params(), trainer.model(), batch, 0.0, rc.train);
  CHECK(l.weight == doctest::Approx(rc.train.weight_decay * trainer.params().squared_norm()));
  CHECK(l.total == doctest::Approx(l.policy - rc.train.entropy_coef * l.entropy + l.weight));
  double ret = 0.0;
  std::size_t steps = 0;
  for (const auto& traj : batch) {
    std::vector<double> r;
    for (const auto& s : traj.steps) r.push_back(s.reward);
    for (double g : discounted_returns(r, rc.train.gamma)) ret += g;
    steps += r.size();
  }
  CHECK(l.mean_return == doctest::Approx(ret / steps));
}

TEST_CASE("trajectories are consistent with the environment") {
  const auto topo = small_topology();
  const auto rc = small_run(Variant::full, 1);
  Trainer trainer(topo, rc, 8);
  for (const auto& traj : trainer.rollout_batch(0)) {
    double total = 0.0;
    for (const auto& s : traj.steps) {
      CHECK(std::isfinite(s.log_prob));
      CHECK(s.log_prob <= 0.0);
      const auto d = policy_forward(trainer.params(), trainer.model(), s.context);
      CHECK(d.log_probs(s.action) == s.log_prob);
      CHECK(std::abs(d.probs.sum() - 1.0) < 1e-12);
      total += s.reward;
    }
    CHECK(traj.metrics.offered_flows == rc.env.flows_per_episode);
    CHECK(std::isfinite(total));
  }
  // Replaying the recorded actions reproduces the rewards exactly.
  const auto ep = trainer.rollout_episode(77, 78);
  RoutingEnv env(topo, rc.env);
  env.reset(77);
  for (const auto& s : ep.steps) {
    CHECK(env.feasible_actions() == s.context.candidates);
    CHECK(env.step(s.context.candidates[s.action]).reward == s.reward);
  }
  CHECK(env.done());
}

TEST_CASE("zero epochs is a no-op") {
  const auto topo = small_topology();
  const auto rc = small_run(Variant::full, 0);
  const auto result = train(rc, topo, 4);
  CHECK(result.history.empty());
  CHECK(result.params == Trainer(topo, rc, 4).params());
}

TEST_CASE("same seed gives byte-identical logs") {
  const auto topo = small_topology();
  const auto rc = small_run(Variant::full, 12);
  const auto a = train(rc, topo, 21);
  const auto b = train(rc, topo, 21);
  CHECK(csv_of(a.history, 21) == csv_of(b.history, 21));
  std::string la, lb;
  for (const auto& u : a.updates) la += u.to_json_line() + "\n";
  for (const auto& u : b.updates) lb += u.to_json_line() + "\n";
  CHECK(la == lb);
  CHECK(a.params == b.params);
  CHECK(csv_of(train(rc, topo, 22).history, 21) != csv_of(a.history, 21));
}

TEST_CASE("variant wiring") {
  const auto topo = small_topology();
  for (Variant v : {Variant::baseline, Variant::sase}) {
    Trainer t(topo, small_run(v, 10), 2);
    t.train();
    CHECK(t.graph_update_calls() == 0);
    CHECK(t.update_log().empty());
    CHECK(t.logical_graph().edges() == topo.edge_set());
  }
  auto always = small_run(Variant::full, 10);
  always.update.deviation_threshold = 0.0;
  Trainer full(topo, always, 2);
  full.train();
  CHECK(full.graph_update_calls() == 10);
  CHECK(full.graph_update_calls() == static_cast<int>(full.update_log().size()));
  CHECK(full.model().encoder.use_attention);
  Trainer base(topo, small_run(Variant::baseline, 0), 2);
  CHECK_FALSE(base.model().encoder.use_attention);
  CHECK_FALSE(base.model().encoder.use_positional);
  CHECK(base.params().head_w1.rows() == 3 * 8 + 2);
}

TEST_CASE("graph updates respect the guardrail during training") {
  const auto topo = small_topology();
  auto rc = small_run(Variant::pagu, 30);
  rc.update.deviation_threshold = 0.0;
  Trainer t(topo, rc, 9);
  t.train();
  CHECK(t.update_log().size() == 30);
  const auto lo = guardrail_floor(topo.num_edges(), 0.9);
  const auto hi = guardrail_ceiling(topo.num_edges(), 1.1);
  for (const auto& r : t.history()) {
    CHECK(r.edge_count >= lo);
    CHECK(r.edge_count <= hi);
  }
  for (const auto& u : t.update_log()) CHECK(u.delta >= 0.0);
}

TEST_CASE("checkpoint resume is exact") {
  const auto topo = small_topology();
  const auto rc = small_run(Variant::full, 10);
  Trainer straight(topo, rc, 13);
  straight.train();

  Trainer first(topo, rc, 13);
  for (int e = 0; e < 5; ++e) first.run_epoch();
  const auto path = std::filesystem::temp_directory_path() / "tagrl_ckpt_test.json";
  first.save_checkpoint(path);
  Trainer resumed = Trainer::load_checkpoint(path);
  CHECK(resumed.checkpoint() == first.checkpoint());
  resumed.train();
  CHECK(csv_of(resumed.history(), 13) == csv_of(straight.history(), 13));
  CHECK(resumed.params() == straight.params());
  CHECK(resumed.logical_graph() == straight.logical_graph());
  CHECK(resumed.checkpoint().dump() == straight.checkpoint().dump());
}

TEST_CASE("parameter JSON round trip is bitwise") {
  const auto p = init_policy(ModelConfig{}, 17);
  const auto text = params_to_json(p).dump();
  CHECK(params_from_json(nlohmann::json::parse(text)) == p);
  CHECK_THROWS_AS(params_from_json(nlohmann::json::parse(R"({"w_in": {"rows": 2, "cols": 2, "data": [1]}})")),
                  ValidationError);
}

TEST_CASE("malformed checkpoints are validation errors") {
  CHECK_THROWS_AS(Trainer::from_checkpoint(nlohmann::json::parse("{}")), ValidationError);
  CHECK_THROWS_AS(Trainer::from_checkpoint(nlohmann::json::parse(R"({"format": "tagrl-checkpoint-1"})")),
                  ValidationError);
  CHECK_THROWS_AS(Trainer::load_checkpoint("/nonexistent/ckpt.json"), ValidationError);
}

TEST_CASE("run config JSON rejects unknown keys") {
  RunConfig rc = small_run(Variant::pagu, 7);
  RunConfig back;
  from_json(to_json(rc), back);
  CHECK(to_json(back) == to_json(rc));
  auto j = to_json(rc);
  j["train"]["learning_rate"] = 0.1;
  CHECK_THROWS_AS(from_json(j, back), ValidationError);
  j = to_json(rc);
  j["extra"] = 1;
  CHECK_THROWS_AS(from_json(j, back), ValidationError);
  j = to_json(rc);
  j["variant"] = "everything";
  CHECK_THROWS_AS(from_json(j, back), ValidationError);
}

TEST_CASE("higher entropy coefficient keeps the policy more random") {
  const auto topo = small_topology();
  auto rc = small_run(Variant::sase, 60);
  rc.train.lr = 1e-2;
  rc.train.entropy_coef = 0.0;
  Trainer plain(topo, rc, 31);
  plain.train();
  rc.train.entropy_coef = 1.0;
  Trainer explore(topo, rc, 31);
  explore.train();
  // Probe on a fixed batch from an untrained trainer.
  const auto probes = Trainer(topo, rc, 99).rollout_batch(0);
  double h_plain = 0.0, h_explore = 0.0;
  for (const auto& traj : probes)
    for (const auto& s : traj.steps) {
      h_plain += policy_forward(plain.params(), plain.model(), s.context).entropy;
      h_explore += policy_forward(explore.params(), explore.model(), s.context).entropy;
    }
  CHECK(h_explore > h_plain);
}
