#include "fpsis/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

namespace fpsis {

MixingDiagnostic walk_mixing_diagnostic(const Graph& g, std::size_t steps, std::size_t replicas, std::uint64_t seed) {
  MixingDiagnostic d;
  d.replicas = replicas;
  d.steps = steps;
  d.bipartite = g.is_bipartite();
  if (replicas == 0) return d;

  const int D = g.max_degree();
  std::vector<double> hist(D + 1, 0.0), q(D + 1, 0.0);
  Rng rng(seed);
  for (std::size_t r = 0; r < replicas; ++r) {
    const Node end = random_walk(g, sample_uniform_node(g, rng), steps, rng);
    hist[g.degree(end)] += 1.0;
  }
  const double ends = static_cast<double>(g.adjacency().size());
  for (Node v = 0; v < static_cast<Node>(g.node_count()); ++v) q[g.degree(v)] += g.degree(v) / ends;
  double tv = 0.0;
  for (int k = 0; k <= D; ++k) tv += std::abs(hist[k] / replicas - q[k]);
  d.tv_distance = 0.5 * tv;
  return d;
}

namespace {

void check_weights(const Graph& g, const EdgeWeights& w) {
  if (w.empty()) return;
  const auto adj = g.adjacency();
  const auto off = g.offsets();
  if (w.size() != adj.size()) throw std::invalid_argument("edge weights: expected one weight per edge-end");
  for (Node u = 0; u < static_cast<Node>(g.node_count()); ++u)
    for (std::size_t i = off[u]; i < off[u + 1]; ++i) {
      if (!(w[i] > 0.0)) throw std::invalid_argument("edge weights must be positive");
      const Node v = adj[i];
      const auto nb = g.neighbors(v);
      const std::size_t j = off[v] + (std::lower_bound(nb.begin(), nb.end(), u) - nb.begin());
      if (w[j] != w[i]) throw std::invalid_argument("edge weights must be symmetric");
    }
}

Node weighted_step(const Graph& g, const EdgeWeights& w, const std::vector<double>& strength, Node v, Rng& rng) {
  if (w.empty()) return uniform_neighbor(g, v, rng);
  const auto off = g.offsets();
  const auto adj = g.adjacency();
  double u = uniform01(rng) * strength[v];
  for (std::size_t i = off[v]; i + 1 < off[v + 1]; ++i) {
    u -= w[i];
    if (u < 0.0) return adj[i];
  }
  return adj[off[v + 1] - 1];
}

}  // namespace

std::vector<double> node_strengths(const Graph& g, const EdgeWeights& w) {
  std::vector<double> s(g.node_count());
  const auto off = g.offsets();
  for (Node v = 0; v < static_cast<Node>(g.node_count()); ++v) {
    if (w.empty()) {
      s[v] = g.degree(v);
    } else {
      double acc = 0.0;
      for (std::size_t i = off[v]; i < off[v + 1]; ++i) acc += w[i];
      s[v] = acc;
    }
  }
  return s;
}

std::vector<Node> rds_chain(const Graph& g, const EdgeWeights& w, std::size_t length, Node start, Rng& rng) {
  check_weights(g, w);
  const auto strength = node_strengths(g, w);
  std::vector<Node> chain;
  chain.reserve(length);
  Node v = start;
  for (std::size_t l = 0; l < length; ++l) {
    chain.push_back(v);
    v = weighted_step(g, w, strength, v, rng);
  }
  return chain;
}

RdsResult rds_estimate(const Graph& g, const EdgeWeights& w, std::size_t chain_length, std::uint64_t seed,
                       std::span<const double> statistic) {
  if (statistic.size() != g.node_count()) throw std::invalid_argument("rds_estimate: statistic size mismatch");
  if (chain_length == 0) throw std::invalid_argument("rds_estimate: chain_length must be positive");
  const auto strength = node_strengths(g, w);
  double total = 0.0;
  for (double s : strength) total += s;
  if (!(total > 0.0)) throw std::invalid_argument("rds_estimate: zero total weight");

  Rng rng(seed);
  const Node start = sample_uniform_node(g, rng);
  const auto chain = rds_chain(g, w, chain_length, start, rng);
  double num = 0.0, den = 0.0;
  for (Node m : chain) {
    const double inv_pi = total / strength[m];
    num += statistic[m] * inv_pi;
    den += inv_pi;
  }
  return {num / den, chain_length, g.is_bipartite()};
}

ParadoxReport verify_friendship_paradox(const Graph& g) {
  ParadoxReport r;
  const int D = g.max_degree();
  const auto M = static_cast<double>(g.node_count());
  const auto ends = static_cast<double>(g.adjacency().size());
  r.max_degree = D;
  r.pmf_dX.assign(D, 0.0);
  r.pmf_dY.assign(D, 0.0);
  r.pmf_dZ.assign(D, 0.0);

  std::vector<double> node_count(D + 1, 0.0);
  for (Node v = 0; v < static_cast<Node>(g.node_count()); ++v) node_count[g.degree(v)] += 1.0;
  std::vector<double> z_mass(D + 1, 0.0);
  for (Node u = 0; u < static_cast<Node>(g.node_count()); ++u) {
    const double share = 1.0 / g.degree(u);
    for (Node v : g.neighbors(u)) z_mass[g.degree(v)] += share;
  }
  for (int k = 1; k <= D; ++k) {
    r.pmf_dX[k - 1] = node_count[k] / M;
    r.pmf_dY[k - 1] = k * node_count[k] / ends;
    r.pmf_dZ[k - 1] = z_mass[k] / M;
    r.mean_dX += k * r.pmf_dX[k - 1];
    r.mean_dY += k * r.pmf_dY[k - 1];
    r.mean_dZ += k * r.pmf_dZ[k - 1];
  }

  auto cumulate = [](const std::vector<double>& p) {
    std::vector<double> c(p.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) c[i] = acc += p[i];
    return c;
  };
  r.cdf_dX = cumulate(r.pmf_dX);
  r.cdf_dY = cumulate(r.pmf_dY);
  r.cdf_dZ = cumulate(r.pmf_dZ);

  constexpr double slack = 1e-12;
  r.mean_YX_holds = r.mean_dY >= r.mean_dX - slack;
  r.fosd_ZX_holds = true;
  for (int i = 0; i < D; ++i)
    if (r.cdf_dZ[i] > r.cdf_dX[i] + slack) r.fosd_ZX_holds = false;

  // f_Y(k)/f_X(k) over the support of d(X)
  r.lr_YX_monotone = true;
  double prev = -1.0;
  for (int k = 1; k <= D; ++k) {
    if (r.pmf_dX[k - 1] == 0.0) continue;
    const double ratio = r.pmf_dY[k - 1] / r.pmf_dX[k - 1];
    if (ratio < prev - slack) r.lr_YX_monotone = false;
    prev = ratio;
  }
  return r;
}

void write_paradox_csv(const ParadoxReport& r, std::ostream& out) {
  out << "degree,cdf_X,cdf_Y,cdf_Z\n";
  const auto old = out.precision(17);
  for (int k = 1; k <= r.max_degree; ++k)
    out << k << ',' << r.cdf_dX[k - 1] << ',' << r.cdf_dY[k - 1] << ',' << r.cdf_dZ[k - 1] << '\n';
  out.precision(old);
}

}  // namespace fpsis
