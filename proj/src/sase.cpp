#include "tagrl/sase.hpp"

#include "tagrl/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace tagrl {

namespace {

void require_shape(bool ok, const char* what) {
  if (!ok) throw ValidationError(std::string("shape mismatch: ") + what);
}

Eigen::MatrixXd relu(const Eigen::MatrixXd& m) { return m.cwiseMax(0.0); }

Eigen::MatrixXd relu_mask(const Eigen::MatrixXd& pre) {
  return (pre.array() > 0.0).cast<double>().matrix();
}

}  // namespace

EncoderParams EncoderParams::zeros(const EncoderDims& dims) {
  const int m = dims.state_width();
  EncoderParams p;
  p.w_in = Eigen::MatrixXd::Zero(dims.raw, dims.feature);
  p.w0 = Eigen::MatrixXd::Zero(dims.feature, dims.hidden);
  p.w1 = Eigen::MatrixXd::Zero(dims.hidden, dims.hidden);
  p.att_w = Eigen::MatrixXd::Zero(m, m);
  p.att_a = Eigen::MatrixXd::Zero(2 * m, 1);
  return p;
}

Eigen::MatrixXd glorot_uniform(int rows, int cols, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Eigen::MatrixXd m(rows, cols);
  // Row-major draw order keeps the stream independent of storage order.
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = uniform_real(rng, -bound, bound);
  return m;
}

EncoderParams init_encoder(const EncoderDims& dims, Rng& rng) {
  const int h = dims.hidden;
  const int full = h + dims.positional;
  EncoderParams p;
  p.w_in = glorot_uniform(dims.raw, dims.feature, rng);
  p.w0 = glorot_uniform(dims.feature, h, rng);
  p.w1 = glorot_uniform(h, h, rng);
  Eigen::MatrixXd att_w = glorot_uniform(full, full, rng);
  Eigen::MatrixXd att_a = glorot_uniform(2 * full, 1, rng);
  if (dims.use_positional) {
    p.att_w = std::move(att_w);
    p.att_a = std::move(att_a);
  } else {
    p.att_w = att_w.topLeftCorner(h, h);
    p.att_a.resize(2 * h, 1);
    p.att_a.topRows(h) = att_a.topRows(h);
    p.att_a.bottomRows(h) = att_a.middleRows(full, h);
  }
  return p;
}

Eigen::MatrixXd compute_raw_features(const PhysicalTopology& topology,
                                     std::span<const double> loads,
                                     const std::optional<FlowContext>& flow) {
  const int n = topology.num_nodes();
  if (loads.size() != topology.num_edges())
    throw ValidationError("load vector does not match the edge count");
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(n, kRawFeatureDim);
  for (NodeId i = 0; i < n; ++i) {
    const auto& nbrs = topology.neighbors(i);
    x(i, 0) = static_cast<double>(nbrs.size()) / n;
    if (!nbrs.empty()) {
      double util_sum = 0.0;
      double util_max = 0.0;
      double lat_sum = 0.0;
      double residual = 0.0;
      double total = 0.0;
      for (NodeId j : nbrs) {
        int k = topology.edge_index(i, j);
        const auto& link = topology.edges()[k].attrs;
        double util = std::clamp(loads[k] / link.capacity, 0.0, 1.0);
        util_sum += util;
        util_max = std::max(util_max, util);
        lat_sum += link.base_latency_ms;
        residual += std::max(0.0, link.capacity - loads[k]);
        total += link.capacity;
      }
      const double deg = static_cast<double>(nbrs.size());
      x(i, 1) = util_sum / deg;
      x(i, 2) = util_max;
      x(i, 3) = std::clamp(lat_sum / deg / 10.0, 0.0, 1.0);
      x(i, 4) = residual / total;
    }
  }
  if (flow) {
    x(flow->current, 5) = 1.0;
    x(flow->destination, 6) = 1.0;
    x.col(7).setConstant(std::clamp(flow->ttl_fraction, 0.0, 1.0));
  }
  return x;
}

Eigen::MatrixXd gcn_layer(const Eigen::MatrixXd& h, const Eigen::MatrixXd& a_hat,
                          const Eigen::MatrixXd& w, Activation activation) {
  require_shape(a_hat.rows() == a_hat.cols(), "adjacency must be square");
  require_shape(a_hat.cols() == h.rows(), "adjacency and features disagree on n");
  require_shape(h.cols() == w.rows(), "feature width and weight rows disagree");
  Eigen::MatrixXd out = a_hat * (h * w);
  return activation == Activation::relu ? relu(out) : out;
}

PositionalEmbedding positional_embeddings(const PhysicalTopology& topology,
                                          const ShortestPathTable& spd, int k) {
  const int n = topology.num_nodes();
  if (k < 0 || k > n) {
    std::ostringstream msg;
    msg << "positional dimension k = " << k << " exceeds node count " << n;
    throw ValidationError(msg.str());
  }
  std::vector<NodeId> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
    return topology.degree(a) > topology.degree(b);
  });
  PositionalEmbedding out;
  out.anchors.assign(order.begin(), order.begin() + k);
  out.p = Eigen::MatrixXd::Zero(n, k);
  if (spd.diameter > 0) {
    for (NodeId i = 0; i < n; ++i)
      for (int a = 0; a < k; ++a)
        out.p(i, a) = static_cast<double>(spd(i, out.anchors[a])) / spd.diameter;
  }
  return out;
}

EncoderGraph::EncoderGraph(LogicalGraph graph, Eigen::MatrixXd positions_in)
    : logical(std::move(graph)),
      a_hat(normalize_adjacency(logical.adjacency())),
      positions(std::move(positions_in)) {
  if (positions.rows() != logical.num_nodes())
    throw ValidationError("positional embedding rows must equal node count");
}

Eigen::MatrixXd encode_states(const Eigen::MatrixXd& x_raw, const EncoderGraph& graph,
                              const EncoderParams& params, const EncoderDims& dims,
                              EncoderCache* cache) {
  const auto n = graph.a_hat.rows();
  require_shape(x_raw.rows() == n && x_raw.cols() == params.w_in.rows(), "raw features");
  require_shape(graph.positions.cols() == dims.positional_width(), "positional width");
  require_shape(params.w1.cols() == dims.hidden, "hidden width");

  EncoderCache local;
  EncoderCache& c = cache ? *cache : local;
  c.x = x_raw * params.w_in;
  c.y0 = graph.a_hat * c.x;
  c.m1 = c.y0 * params.w0;
  c.h1 = relu(c.m1);
  c.y1 = graph.a_hat * c.h1;
  c.m2 = c.y1 * params.w1;

  const int h = dims.hidden;
  c.u.resize(n, dims.state_width());
  c.u.leftCols(h) = relu(c.m2);
  if (dims.use_positional) c.u.rightCols(dims.positional) = graph.positions;
  c.norms = c.u.rowwise().norm();
  c.z = c.u;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (c.norms(i) > 0.0) c.z.row(i) /= c.norms(i);
  }
  return c.z;
}

void encode_states_backward(const Eigen::MatrixXd& x_raw, const EncoderGraph& graph,
                            const EncoderParams& params, const EncoderDims& dims,
                            const EncoderCache& c, const Eigen::MatrixXd& d_z,
                            EncoderParams& grads) {
  const auto n = c.z.rows();
  const int h = dims.hidden;
  // Row normalization: dU = (dZ - z (z . dZ)) / |u|.
  Eigen::MatrixXd d_h2(n, h);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (c.norms(i) > 0.0) {
      const double proj = c.z.row(i).dot(d_z.row(i));
      d_h2.row(i) = (d_z.row(i).leftCols(h) - proj * c.z.row(i).leftCols(h)) / c.norms(i);
    } else {
      d_h2.row(i).setZero();
    }
  }
  Eigen::MatrixXd d_m2 = d_h2.cwiseProduct(relu_mask(c.m2));
  grads.w1.noalias() += c.y1.transpose() * d_m2;
  // a_hat is symmetric.
  Eigen::MatrixXd d_h1 = graph.a_hat * (d_m2 * params.w1.transpose());
  Eigen::MatrixXd d_m1 = d_h1.cwiseProduct(relu_mask(c.m1));
  grads.w0.noalias() += c.y0.transpose() * d_m1;
  Eigen::MatrixXd d_x = graph.a_hat * (d_m1 * params.w0.transpose());
  grads.w_in.noalias() += x_raw.transpose() * d_x;
}

namespace {

double leaky(double x) { return x > 0.0 ? x : kAttentionLeakySlope * x; }
double leaky_grad(double x) { return x > 0.0 ? 1.0 : kAttentionLeakySlope; }

}  // namespace

Eigen::VectorXd aggregate_row(const Eigen::MatrixXd& z, const LogicalGraph& graph, NodeId node,
                              const EncoderParams& params, const EncoderDims& dims,
                              AggregateCache* cache) {
  const auto m = z.cols();
  const auto& nbrs = graph.neighbors(node);
  AggregateCache local;
  AggregateCache& c = cache ? *cache : local;
  c.node = node;
  c.neighbors = nbrs;
  Eigen::VectorXd s = Eigen::VectorXd::Zero(m);
  if (nbrs.empty()) return s;

  const auto deg = static_cast<Eigen::Index>(nbrs.size());
  if (!dims.use_attention) {
    c.alpha = Eigen::VectorXd::Constant(deg, 1.0 / static_cast<double>(deg));
    for (Eigen::Index j = 0; j < deg; ++j) s += c.alpha(j) * z.row(nbrs[j]).transpose();
    return s;
  }

  require_shape(params.att_w.rows() == m && params.att_a.rows() == 2 * m, "attention params");
  c.t_self = params.att_w * z.row(node).transpose();
  c.t_nbr.resize(m, deg);
  for (Eigen::Index j = 0; j < deg; ++j) c.t_nbr.col(j) = params.att_w * z.row(nbrs[j]).transpose();

  const double self_term = params.att_a.topRows(m).col(0).dot(c.t_self);
  c.pre = (params.att_a.bottomRows(m).transpose() * c.t_nbr).transpose();
  c.pre.array() += self_term;
  Eigen::VectorXd logits = c.pre.unaryExpr(&leaky);
  const double top = logits.maxCoeff();
  c.alpha = (logits.array() - top).exp();
  c.alpha /= c.alpha.sum();
  for (Eigen::Index j = 0; j < deg; ++j) s += c.alpha(j) * z.row(nbrs[j]).transpose();
  return s;
}

void aggregate_row_backward(const Eigen::MatrixXd& z, const EncoderParams& params,
                            const EncoderDims& dims, const AggregateCache& c,
                            const Eigen::VectorXd& d_s, Eigen::MatrixXd& d_z,
                            EncoderParams& grads) {
  if (c.neighbors.empty()) return;
  const auto m = z.cols();
  const auto deg = static_cast<Eigen::Index>(c.neighbors.size());
  for (Eigen::Index j = 0; j < deg; ++j) d_z.row(c.neighbors[j]) += c.alpha(j) * d_s.transpose();
  if (!dims.use_attention) return;

  // Softmax backward.
  Eigen::VectorXd d_alpha(deg);
  for (Eigen::Index j = 0; j < deg; ++j) d_alpha(j) = z.row(c.neighbors[j]).dot(d_s);
  const double mean = c.alpha.dot(d_alpha);
  Eigen::VectorXd d_pre(deg);
  for (Eigen::Index j = 0; j < deg; ++j)
    d_pre(j) = c.alpha(j) * (d_alpha(j) - mean) * leaky_grad(c.pre(j));

  const auto a_self = params.att_a.topRows(m).col(0);
  const auto a_nbr = params.att_a.bottomRows(m).col(0);
  const double d_pre_sum = d_pre.sum();
  grads.att_a.topRows(m).col(0) += d_pre_sum * c.t_self;
  grads.att_a.bottomRows(m).col(0) += c.t_nbr * d_pre;

  Eigen::VectorXd d_t_self = d_pre_sum * a_self;
  grads.att_w.noalias() += d_t_self * z.row(c.node);
  d_z.row(c.node) += (params.att_w.transpose() * d_t_self).transpose();
  for (Eigen::Index j = 0; j < deg; ++j) {
    Eigen::VectorXd d_t = d_pre(j) * a_nbr;
    grads.att_w.noalias() += d_t * z.row(c.neighbors[j]);
    d_z.row(c.neighbors[j]) += (params.att_w.transpose() * d_t).transpose();
  }
}

AggregatedState attention_aggregate(const Eigen::MatrixXd& z, const LogicalGraph& graph,
                                    const EncoderParams& params) {
  const auto n = z.rows();
  if (graph.num_nodes() != n) throw ValidationError("state rows must equal node count");
  EncoderDims dims;
  dims.use_attention = true;
  AggregatedState out;
  out.s = Eigen::MatrixXd::Zero(n, z.cols());
  out.alpha = Eigen::MatrixXd::Zero(n, n);
  AggregateCache cache;
  for (NodeId i = 0; i < n; ++i) {
    out.s.row(i) = aggregate_row(z, graph, i, params, dims, &cache).transpose();
    for (std::size_t j = 0; j < cache.neighbors.size(); ++j)
      out.alpha(i, cache.neighbors[j]) = cache.alpha(static_cast<Eigen::Index>(j));
  }
  return out;
}

}  // namespace tagrl
