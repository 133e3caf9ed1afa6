#include "tagrl/policy.hpp"

#include "tagrl/error.hpp"
#include "tagrl/rng.hpp"

#include <cmath>

namespace tagrl {

PolicyParams PolicyParams::zeros(const ModelConfig& config) {
  PolicyParams p;
  p.encoder = EncoderParams::zeros(config.encoder);
  p.head_w1 = Eigen::MatrixXd::Zero(config.head_input(), config.head_hidden);
  p.head_b1 = Eigen::MatrixXd::Zero(config.head_hidden, 1);
  p.head_w2 = Eigen::MatrixXd::Zero(config.head_hidden, 1);
  p.head_b2 = Eigen::MatrixXd::Zero(1, 1);
  return p;
}

Eigen::Index PolicyParams::size() const {
  Eigen::Index total = 0;
  visit([&](std::string_view, const Eigen::MatrixXd& m) { total += m.size(); });
  return total;
}

bool PolicyParams::all_finite() const {
  bool ok = true;
  visit([&](std::string_view, const Eigen::MatrixXd& m) { ok = ok && m.allFinite(); });
  return ok;
}

double PolicyParams::squared_norm() const {
  double total = 0.0;
  visit([&](std::string_view, const Eigen::MatrixXd& m) { total += m.squaredNorm(); });
  return total;
}

bool PolicyParams::operator==(const PolicyParams& other) const {
  Eigen::VectorXd a = flatten(*this);
  Eigen::VectorXd b = flatten(other);
  return a.size() == b.size() && (a.array() == b.array()).all();
}

PolicyParams init_policy(const ModelConfig& config, std::uint64_t seed) {
  Rng rng(seed);
  PolicyParams p;
  p.encoder = init_encoder(config.encoder, rng);

  // The head is drawn at full width; without positional columns the rows
  // belonging to them are dropped.
  const auto& dims = config.encoder;
  const int full = dims.hidden + dims.positional;
  Eigen::MatrixXd w1 = glorot_uniform(3 * full + 2, config.head_hidden, rng);
  if (dims.use_positional) {
    p.head_w1 = std::move(w1);
  } else {
    const int h = dims.hidden;
    p.head_w1.resize(3 * h + 2, config.head_hidden);
    for (int block = 0; block < 3; ++block)
      p.head_w1.middleRows(block * h, h) = w1.middleRows(block * full, h);
    p.head_w1.bottomRows(2) = w1.bottomRows(2);
  }
  p.head_b1 = Eigen::MatrixXd::Zero(config.head_hidden, 1);
  p.head_w2 = glorot_uniform(config.head_hidden, 1, rng);
  p.head_b2 = Eigen::MatrixXd::Zero(1, 1);
  return p;
}

Eigen::VectorXd flatten(const PolicyParams& params) {
  Eigen::VectorXd flat(params.size());
  Eigen::Index at = 0;
  params.visit([&](std::string_view, const Eigen::MatrixXd& m) {
    flat.segment(at, m.size()) = m.reshaped();
    at += m.size();
  });
  return flat;
}

void unflatten(const Eigen::VectorXd& flat, PolicyParams& params) {
  if (flat.size() != params.size()) throw ValidationError("flat parameter vector has the wrong length");
  Eigen::Index at = 0;
  params.visit([&](std::string_view, Eigen::MatrixXd& m) {
    m.reshaped() = flat.segment(at, m.size());
    at += m.size();
  });
}

ActionDistribution policy_forward(const PolicyParams& params, const ModelConfig& config,
                                  const DecisionContext& context, PolicyCache* cache) {
  if (context.candidates.empty()) throw ContractViolation("policy evaluated with no feasible action");
  PolicyCache local;
  PolicyCache& c = cache ? *cache : local;
  const auto& dims = config.encoder;
  const int m = dims.state_width();

  c.z = encode_states(context.x_raw, *context.graph, params.encoder, dims, &c.encoder);
  Eigen::VectorXd s = aggregate_row(c.z, context.graph->logical, context.current, params.encoder, dims,
                                    &c.aggregate);

  const auto count = static_cast<Eigen::Index>(context.candidates.size());
  c.inputs.resize(count, config.head_input());
  for (Eigen::Index u = 0; u < count; ++u) {
    c.inputs.row(u).segment(0, m) = c.z.row(context.current);
    c.inputs.row(u).segment(m, m) = s.transpose();
    c.inputs.row(u).segment(2 * m, m) = c.z.row(context.candidates[u]);
    c.inputs(u, 3 * m) = context.ttl_fraction;
    c.inputs(u, 3 * m + 1) = context.demand_norm;
  }
  c.pre = c.inputs * params.head_w1;
  c.pre.rowwise() += params.head_b1.col(0).transpose();
  Eigen::VectorXd scores = c.pre.cwiseMax(0.0) * params.head_w2.col(0);
  scores.array() += params.head_b2(0, 0);

  ActionDistribution out;
  const double top = scores.maxCoeff();
  Eigen::VectorXd shifted = scores.array() - top;
  const double log_z = std::log(shifted.array().exp().sum());
  out.log_probs = shifted.array() - log_z;
  out.probs = out.log_probs.array().exp();
  out.entropy = -(out.probs.array() * out.log_probs.array()).sum();
  return out;
}

void policy_backward(const PolicyParams& params, const ModelConfig& config,
                     const DecisionContext& context, const PolicyCache& c,
                     const Eigen::VectorXd& d_scores, PolicyParams& grads) {
  const auto& dims = config.encoder;
  const int m = dims.state_width();
  const auto count = static_cast<Eigen::Index>(context.candidates.size());

  Eigen::MatrixXd hidden = c.pre.cwiseMax(0.0);
  grads.head_w2.col(0).noalias() += hidden.transpose() * d_scores;
  grads.head_b2(0, 0) += d_scores.sum();
  Eigen::MatrixXd d_pre = (d_scores * params.head_w2.col(0).transpose())
                              .cwiseProduct((c.pre.array() > 0.0).cast<double>().matrix());
  grads.head_w1.noalias() += c.inputs.transpose() * d_pre;
  grads.head_b1.col(0) += d_pre.colwise().sum().transpose();
  Eigen::MatrixXd d_inputs = d_pre * params.head_w1.transpose();

  Eigen::MatrixXd d_z = Eigen::MatrixXd::Zero(c.z.rows(), m);
  Eigen::VectorXd d_s = Eigen::VectorXd::Zero(m);
  for (Eigen::Index u = 0; u < count; ++u) {
    d_z.row(context.current) += d_inputs.row(u).segment(0, m);
    d_s += d_inputs.row(u).segment(m, m).transpose();
    d_z.row(context.candidates[u]) += d_inputs.row(u).segment(2 * m, m);
  }
  aggregate_row_backward(c.z, params.encoder, dims, c.aggregate, d_s, d_z, grads.encoder);
  encode_states_backward(context.x_raw, *context.graph, params.encoder, dims, c.encoder, d_z,
                         grads.encoder);
}

}  // namespace tagrl
