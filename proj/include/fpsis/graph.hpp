#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "fpsis/errors.hpp"

namespace fpsis {

using Node = std::int32_t;

struct Edge {
  Node u;
  Node v;
};

/// Immutable simple undirected graph in CSR form with one binary label per
/// node. Every node has degree >= 1. Copies share the adjacency structure.
class Graph {
 public:
  Graph() = default;

  /// Builds and validates. Throws GraphError on self-loops, parallel edges,
  /// out-of-range endpoints, isolated nodes or malformed labels.
  static Graph from_edges(std::size_t node_count, std::span<const Edge> edges,
                          std::vector<std::uint8_t> labels = {});

  std::size_t node_count() const { return topo_ ? topo_->offsets.size() - 1 : 0; }
  std::size_t edge_count() const { return topo_ ? topo_->adjacency.size() / 2 : 0; }
  int max_degree() const { return topo_ ? topo_->max_degree : 0; }

  int degree(Node v) const {
    return static_cast<int>(topo_->offsets[v + 1] - topo_->offsets[v]);
  }
  std::span<const Node> neighbors(Node v) const {
    return {topo_->adjacency.data() + topo_->offsets[v], topo_->adjacency.data() + topo_->offsets[v + 1]};
  }
  /// All 2|E| edge-ends; entry i belongs to the node owning offset range i.
  std::span<const Node> adjacency() const { return topo_->adjacency; }
  std::span<const std::size_t> offsets() const { return topo_->offsets; }

  std::uint8_t label(Node v) const { return labels_[v]; }
  std::span<const std::uint8_t> labels() const { return labels_; }
  std::size_t infected_count() const;

  /// Same adjacency, new labels.
  Graph with_labels(std::vector<std::uint8_t> labels) const;

  /// Undirected edges with u < v, sorted lexicographically.
  std::vector<Edge> edges() const;
  std::vector<int> degree_sequence() const;
  /// Order-independent hash of the edge set (labels excluded).
  std::uint64_t edge_set_hash() const;

  bool is_connected() const;
  bool is_bipartite() const;

 private:
  struct Topology {
    std::vector<std::size_t> offsets;
    std::vector<Node> adjacency;
    int max_degree = 0;
  };
  std::shared_ptr<const Topology> topo_;
  std::vector<std::uint8_t> labels_;
};

/// Degree classes present in a graph: ascending degrees with their sizes.
struct DegreeClasses {
  std::vector<int> degree;        // support, ascending
  std::vector<int> index_of;      // degree -> class index, -1 if absent (size D+1)
  Eigen::VectorXi size;           // M(k)

  static DegreeClasses of(const Graph& g);
  int count() const { return static_cast<int>(degree.size()); }
  int index(int k) const { return k < static_cast<int>(index_of.size()) ? index_of[k] : -1; }
};

/// Census statistics of a graph, all indexed by degree class (see `classes`).
struct DegreeStats {
  DegreeClasses classes;
  std::size_t node_count = 0;
  std::size_t edge_count = 0;

  Eigen::VectorXd P;            // degree distribution
  Eigen::VectorXd q;            // edge-end (random friend) degree distribution
  Eigen::MatrixXd joint;        // e(k,k') over directed edge-ends, symmetric
  Eigen::MatrixXd conditional;  // P(k|k') = e(k,k')/q(k'), columns sum to one
  Eigen::VectorXd z_dist;       // P(d(Z) = k) = sum_k' P(k') P(k|k')

  double mean_degree = 0.0;
  int max_degree = 0;
  double sigma_q = 0.0;
  double sigma_k = 0.0;
  double sigma_s = 0.0;
  double rkk = 0.0;
  bool rkk_degenerate = false;

  double infected_fraction = 0.0;
  double degree_label_cov = 0.0;
  double pks = 0.0;
  bool pks_degenerate = false;

  /// Degrees as a double vector aligned with the class index.
  Eigen::VectorXd k() const;
  double mean_degree_y() const { return q.dot(k()); }
  double mean_degree_z() const { return z_dist.dot(k()); }

  /// Completes every field from a degree support, P(k) and the joint e(k,k').
  /// Label statistics are left degenerate. Used for synthetic (model) graphs.
  static DegreeStats from_joint(std::vector<int> degrees, Eigen::VectorXd P, Eigen::MatrixXd joint);
};

DegreeStats degree_stats(const Graph& g);

/// Pearson-form assortativity from the undirected edge list:
/// r = (S/E - mu_q^2) / sigma_q^2 with S = sum over edges of d(u) d(v).
double assortativity(const Graph& g);

// Generators ---------------------------------------------------------------

/// i.i.d. degrees from P(k) ~ k^-alpha on [d_min, d_max]; an odd stub sum is
/// fixed by incrementing one uniformly chosen node below d_max.
std::vector<int> sample_power_law_degrees(std::size_t n, double alpha, int d_min, int d_max, std::uint64_t seed);

/// Stub matching with rematch of offending stubs against random existing
/// edges; full restart after a bounded number of failed rematches.
Graph configuration_model(std::vector<int> degrees, std::uint64_t seed);

Graph generate_configuration_model(std::size_t n, double alpha, int d_min, int d_max, std::uint64_t seed);

/// G(n,p) with p = avg_degree/(n-1); isolated nodes are dropped and the
/// remaining nodes renumbered in order.
Graph generate_erdos_renyi(std::size_t n, double avg_degree, std::uint64_t seed);

struct RewireResult {
  Graph graph;
  double achieved_rkk = 0.0;
  bool converged = false;
  std::size_t accepted_swaps = 0;
  std::size_t proposals = 0;
};

/// Induced subgraph on the largest connected component (ties: lowest node id),
/// nodes renumbered in order, labels kept. Degrees are unchanged.
Graph largest_component(const Graph& g);

/// Greedy degree-preserving double-edge swaps toward target_rkk. Labels are kept.
RewireResult rewire_to_assortativity(const Graph& g, double target_rkk, double tol, std::size_t max_steps,
                                     std::uint64_t seed);

struct LabelResult {
  Graph graph;
  double achieved_pks = 0.0;
  bool converged = false;
  bool degenerate = false;
};

/// Labels exactly round(fraction*M) nodes, then hill-climbs p_ks toward the
/// target by swapping labels of (1,0) pairs. max_steps = 0 picks a default.
LabelResult assign_labels(const Graph& g, double fraction, double target_pks, double tol, std::uint64_t seed,
                          std::size_t max_steps = 0);

// Small named graphs --------------------------------------------------------

Graph make_star(int leaves);
Graph make_path(int nodes);
Graph make_cycle(int nodes);
Graph make_complete(int nodes);

// Edge-list IO --------------------------------------------------------------

void write_edge_list(const Graph& g, std::ostream& out);
void write_labels(const Graph& g, std::ostream& out);
/// Reads "u v" lines (0-indexed) and optional "v s" label lines. Node count is
/// one past the largest id seen. Lines starting with '#' are ignored.
Graph read_graph(std::istream& edges, std::istream* labels = nullptr);
Graph load_graph(const std::filesystem::path& edges, const std::filesystem::path& labels = {});
void save_graph(const Graph& g, const std::filesystem::path& edges, const std::filesystem::path& labels);

}  // namespace fpsis
