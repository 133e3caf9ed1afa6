#pragma once

// Brute-force reference implementations used by the tests. Nothing here calls
// into the library's own algorithms.

#include "tagrl/graph.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>
#include <random>
#include <vector>

namespace oracle {

// Connected random graph: a random tree plus extra edges with probability p.
inline tagrl::PhysicalTopology random_topology(int n, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::vector<bool>> has(n, std::vector<bool>(n, false));
  std::vector<tagrl::Edge> edges;
  auto add = [&](int a, int b) {
    if (a == b || has[a][b]) return;
    has[a][b] = has[b][a] = true;
    edges.push_back({a, b, {1.0 + 9.0 * u(rng), 1.0 + 9.0 * u(rng)}});
  };
  for (int i = 1; i < n; ++i) add(i, static_cast<int>(u(rng) * i));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (u(rng) < p) add(i, j);
  return tagrl::PhysicalTopology(n, edges);
}

inline Eigen::MatrixXd random_matrix(int rows, int cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = u(rng);
  return m;
}

inline std::vector<std::vector<double>> to_rows(const Eigen::MatrixXd& m) {
  std::vector<std::vector<double>> r(m.rows(), std::vector<double>(m.cols()));
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) r[i][j] = m(i, j);
  return r;
}

inline std::vector<std::vector<double>> matmul(const std::vector<std::vector<double>>& a,
                                               const std::vector<std::vector<double>>& b) {
  const std::size_t n = a.size(), k = b.size(), m = b.empty() ? 0 : b[0].size();
  std::vector<std::vector<double>> c(n, std::vector<double>(m, 0.0));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t t = 0; t < k; ++t) c[i][j] += a[i][t] * b[t][j];
  return c;
}

// D^-1/2 (A + I) D^-1/2 entry by entry.
inline std::vector<std::vector<double>> normalized_adjacency(const tagrl::PhysicalTopology& t) {
  const int n = t.num_nodes();
  std::vector<std::vector<double>> a(n, std::vector<double>(n, 0.0));
  std::vector<double> deg(n, 1.0);
  for (const auto& e : t.edges()) {
    a[e.u][e.v] = a[e.v][e.u] = 1.0;
    deg[e.u] += 1.0;
    deg[e.v] += 1.0;
  }
  for (int i = 0; i < n; ++i) a[i][i] = 1.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i][j] /= std::sqrt(deg[i] * deg[j]);
  return a;
}

inline std::vector<std::vector<int>> floyd_warshall(const tagrl::PhysicalTopology& t) {
  const int n = t.num_nodes();
  const int inf = 1 << 28;
  std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
  for (int i = 0; i < n; ++i) d[i][i] = 0;
  for (const auto& e : t.edges()) d[e.u][e.v] = d[e.v][e.u] = 1;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  return d;
}

// Largest eigenvalue magnitude of a symmetric matrix.
inline double power_iteration(const Eigen::MatrixXd& m, int iters = 5000) {
  Eigen::VectorXd v = Eigen::VectorXd::Ones(m.rows()) + 0.01 * Eigen::VectorXd::LinSpaced(m.rows(), 0, 1);
  double lambda = 0.0;
  for (int i = 0; i < iters; ++i) {
    Eigen::VectorXd w = m * v;
    lambda = w.norm() / v.norm();
    v = w / w.norm();
  }
  return lambda;
}

inline std::vector<double> softmax(const std::vector<double>& x) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double v : x) mx = std::max(mx, v);
  std::vector<double> out(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) sum += out[i] = std::exp(x[i] - mx);
  for (double& v : out) v /= sum;
  return out;
}

// Array-scan Dijkstra over an arbitrary weight function w(u, v).
template <class Weight>
std::vector<int> dijkstra_path(const tagrl::PhysicalTopology& t, int src, int dst, Weight w) {
  const int n = t.num_nodes();
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  std::vector<int> parent(n, -1);
  std::vector<bool> done(n, false);
  dist[src] = 0.0;
  for (int round = 0; round < n; ++round) {
    int u = -1;
    for (int i = 0; i < n; ++i)
      if (!done[i] && (u < 0 || dist[i] < dist[u])) u = i;
    if (u < 0 || !std::isfinite(dist[u])) break;
    done[u] = true;
    for (int v = 0; v < n; ++v) {
      if (!t.has_edge(u, v)) continue;
      const double nd = dist[u] + w(u, v);
      if (nd < dist[v]) {
        dist[v] = nd;
        parent[v] = u;
      }
    }
  }
  std::vector<int> path;
  for (int v = dst; v != -1; v = parent[v]) path.insert(path.begin(), v);
  return path;
}

}  // namespace oracle
