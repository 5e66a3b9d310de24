#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "fpsis/graph.hpp"
#include "fpsis/random.hpp"

namespace fpsis {

/// X: uniform node.
inline Node sample_uniform_node(const Graph& g, Rng& rng) {
  return static_cast<Node>(uniform_index(rng, g.node_count()));
}

/// Y: node at a uniform edge-end, P(v) = d(v)/2|E|.
inline Node sample_random_friend(const Graph& g, Rng& rng) {
  const auto adj = g.adjacency();
  return adj[uniform_index(rng, adj.size())];
}

inline Node uniform_neighbor(const Graph& g, Node v, Rng& rng) {
  const auto nb = g.neighbors(v);
  return nb[uniform_index(rng, nb.size())];
}

/// Z: uniform neighbor of a uniform node.
inline Node sample_friend_of_random_node(const Graph& g, Rng& rng) {
  return uniform_neighbor(g, sample_uniform_node(g, rng), rng);
}

/// Position after `steps` uniform-neighbor moves.
inline Node random_walk(const Graph& g, Node start, std::size_t steps, Rng& rng) {
  Node v = start;
  for (std::size_t i = 0; i < steps; ++i) v = uniform_neighbor(g, v, rng);
  return v;
}

/// Total-variation distance between the degree histogram of walk endpoints
/// (uniform starts) and q(k).
struct MixingDiagnostic {
  double tv_distance = 0.0;
  std::size_t replicas = 0;
  std::size_t steps = 0;
  bool bipartite = false;  // walk is periodic; endpoints never mix
};

MixingDiagnostic walk_mixing_diagnostic(const Graph& g, std::size_t steps, std::size_t replicas, std::uint64_t seed);

/// Symmetric positive edge weights stored per edge-end, aligned with
/// Graph::adjacency(). An empty vector means W = 1 on every edge.
using EdgeWeights = std::vector<double>;

struct RdsResult {
  double estimate = 0.0;
  std::size_t chain_length = 0;
  bool bipartite_warning = false;
};

/// Weighted random-walk chain of `length` visited nodes starting at `start`.
std::vector<Node> rds_chain(const Graph& g, const EdgeWeights& w, std::size_t length, Node start, Rng& rng);

/// Node strengths sum_j W_ij (proportional to the chain's stationary law).
std::vector<double> node_strengths(const Graph& g, const EdgeWeights& w);

/// Importance-reweighted chain average sum_l s(m_l)/pi(m_l) / sum_l 1/pi(m_l).
/// The chain starts at a uniform node.
RdsResult rds_estimate(const Graph& g, const EdgeWeights& w, std::size_t chain_length, std::uint64_t seed,
                       std::span<const double> statistic);

/// Census distributions of d(X), d(Y), d(Z) over degrees 1..D.
struct ParadoxReport {
  int max_degree = 0;
  double mean_dX = 0.0;
  double mean_dY = 0.0;
  double mean_dZ = 0.0;
  std::vector<double> pmf_dX, pmf_dY, pmf_dZ;  // index k-1
  std::vector<double> cdf_dX, cdf_dY, cdf_dZ;  // index n-1, F(n) = P(d <= n)
  bool mean_YX_holds = false;
  bool fosd_ZX_holds = false;
  bool lr_YX_monotone = false;
};

/// Exact by enumeration. Dominance checks allow 1e-12 of rounding slack.
ParadoxReport verify_friendship_paradox(const Graph& g);

/// Rows (degree, cdf_X, cdf_Y, cdf_Z).
void write_paradox_csv(const ParadoxReport& r, std::ostream& out);

}  // namespace fpsis
