#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "oracles.hpp"
#include "tagrl/error.hpp"
#include "tagrl/policy.hpp"
#include "tagrl/routing_env.hpp"

#include <cmath>
#include <memory>

using namespace tagrl;

namespace {

ModelConfig small_model(int k) {
  ModelConfig m;
  m.encoder.feature = 6;
  m.encoder.hidden = 5;
  m.encoder.positional = k;
  m.head_hidden = 7;
  return m;
}

DecisionContext context_for(const PhysicalTopology& t, const ModelConfig& model, NodeId current,
                            NodeId dst, std::uint64_t seed) {
  const auto spd = shortest_path_distances(t);
  DecisionContext ctx;
  ctx.graph = std::make_shared<const EncoderGraph>(
      LogicalGraph::from_topology(t), positional_embeddings(t, spd, model.encoder.positional_width()).p);
  std::vector<double> loads(t.num_edges());
  Rng rng(seed);
  for (auto& l : loads) l = uniform_real(rng, 0.0, 8.0);
  ctx.x_raw = compute_raw_features(t, loads, FlowContext{current, dst, 0.75});
  ctx.current = current;
  ctx.candidates = t.neighbors(current);
  ctx.ttl_fraction = 0.75;
  ctx.demand_norm = 0.6;
  return ctx;
}

}  // namespace

TEST_CASE("head input width") {
  CHECK(ModelConfig{}.head_input() == 3 * (128 + 16) + 2);
  const auto p = init_policy(ModelConfig{}, 1);
  CHECK(p.head_w1.rows() == 434);
  CHECK(p.head_w1.cols() == 128);
  CHECK(p.head_b1.size() == 128);
  CHECK(p.head_w2.size() == 128);
  CHECK(p.head_b2.size() == 1);
}

TEST_CASE("single candidate has probability one") {
  const PhysicalTopology t(3, {{0, 1, {}}, {1, 2, {}}});
  const auto model = small_model(2);
  const auto p = init_policy(model, 3);
  auto ctx = context_for(t, model, 0, 2, 1);
  REQUIRE(ctx.candidates.size() == 1);
  const auto d = policy_forward(p, model, ctx);
  CHECK(d.probs(0) == 1.0);
  CHECK(d.log_probs(0) == 0.0);
  CHECK(d.entropy == 0.0);
}

TEST_CASE("zero head weights give a uniform distribution") {
  const auto t = oracle::random_topology(8, 0.4, 2);
  const auto model = small_model(3);
  auto p = init_policy(model, 3);
  p.head_w2.setZero();
  NodeId hub = 0;
  for (NodeId i = 0; i < 8; ++i)
    if (t.degree(i) > t.degree(hub)) hub = i;
  const auto ctx = context_for(t, model, hub, (hub + 1) % 8, 4);
  const auto d = policy_forward(p, model, ctx);
  const double u = 1.0 / static_cast<double>(ctx.candidates.size());
  for (Eigen::Index a = 0; a < d.probs.size(); ++a) CHECK(d.probs(a) == doctest::Approx(u).epsilon(1e-14));
  CHECK(d.entropy == doctest::Approx(std::log(static_cast<double>(ctx.candidates.size()))));
}

TEST_CASE("empty candidate set is a contract violation") {
  const PhysicalTopology t(2, {{0, 1, {}}});
  const auto model = small_model(2);
  auto ctx = context_for(t, model, 0, 1, 1);
  ctx.candidates.clear();
  CHECK_THROWS_AS(policy_forward(init_policy(model, 1), model, ctx), ContractViolation);
}

TEST_CASE("scores match a direct evaluation of the head") {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto t = oracle::random_topology(7, 0.4, 40 + s);
    const auto model = small_model(3);
    const auto p = init_policy(model, s);
    const NodeId cur = static_cast<NodeId>(s % 7);
    const auto ctx = context_for(t, model, cur, (cur + 3) % 7, s);
    const auto d = policy_forward(p, model, ctx);

    const auto z = encode_states(ctx.x_raw, *ctx.graph, p.encoder, model.encoder);
    const auto s_cur = aggregate_row(z, ctx.graph->logical, cur, p.encoder, model.encoder);
    std::vector<double> scores;
    for (NodeId u : ctx.candidates) {
      std::vector<double> in;
      for (int c = 0; c < z.cols(); ++c) in.push_back(z(cur, c));
      for (int c = 0; c < z.cols(); ++c) in.push_back(s_cur(c));
      for (int c = 0; c < z.cols(); ++c) in.push_back(z(u, c));
      in.push_back(ctx.ttl_fraction);
      in.push_back(ctx.demand_norm);
      double score = p.head_b2(0, 0);
      for (int h = 0; h < model.head_hidden; ++h) {
        double pre = p.head_b1(h, 0);
        for (std::size_t r = 0; r < in.size(); ++r) pre += p.head_w1(static_cast<Eigen::Index>(r), h) * in[r];
        score += p.head_w2(h, 0) * std::max(0.0, pre);
      }
      scores.push_back(score);
    }
    const auto ref = oracle::softmax(scores);
    REQUIRE(d.probs.size() == static_cast<Eigen::Index>(ctx.candidates.size()));
    for (std::size_t a = 0; a < ref.size(); ++a) CHECK(std::abs(d.probs(a) - ref[a]) < 1e-12);
  }
}

TEST_CASE("distributions are valid on fuzzed instances") {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const int n = 3 + static_cast<int>(s % 8);
    const auto t = oracle::random_topology(n, 0.35, 90 + s);
    const auto model = small_model(std::min(3, n));
    const auto p = init_policy(model, s);
    const NodeId cur = static_cast<NodeId>(s % n);
    auto ctx = context_for(t, model, cur, (cur + 1) % n, s);
    const auto d = policy_forward(p, model, ctx);
    CHECK(std::abs(d.probs.sum() - 1.0) < 1e-12);
    CHECK(d.probs.minCoeff() >= 0.0);
    CHECK(d.log_probs.maxCoeff() <= 0.0);
    for (Eigen::Index a = 0; a < d.probs.size(); ++a)
      CHECK(std::abs(std::exp(d.log_probs(a)) - d.probs(a)) < 1e-12);
  }
}

TEST_CASE("parameter flattening round trip") {
  const auto model = small_model(3);
  const auto p = init_policy(model, 8);
  const auto flat = flatten(p);
  CHECK(flat.size() == p.size());
  auto q = PolicyParams::zeros(model);
  unflatten(flat, q);
  CHECK(q == p);
  CHECK_THROWS(unflatten(Eigen::VectorXd::Zero(3), q));
}

TEST_CASE("baseline head shares the full initial draw") {
  ModelConfig full = small_model(3);
  ModelConfig reduced = full;
  reduced.encoder.use_positional = false;
  reduced.encoder.use_attention = false;
  const auto pf = init_policy(full, 11);
  const auto pr = init_policy(reduced, 11);
  CHECK(pf.encoder.w_in == pr.encoder.w_in);
  CHECK(pf.encoder.w1 == pr.encoder.w1);
  const int h = full.encoder.hidden, m = full.encoder.state_width();
  // Head input blocks: [z_c (m) | s_c (m) | z_u (m) | ttl | demand]; the
  // reduced model keeps the first h rows of each state block.
  for (int block = 0; block < 3; ++block)
    CHECK(Eigen::MatrixXd(pf.head_w1.middleRows(block * m, h)) ==
          Eigen::MatrixXd(pr.head_w1.middleRows(block * h, h)));
  CHECK(Eigen::MatrixXd(pf.head_w1.bottomRows(2)) == Eigen::MatrixXd(pr.head_w1.bottomRows(2)));
  CHECK(pf.head_w2 == pr.head_w2);
}
