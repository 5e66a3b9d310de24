#pragma once

#include <Eigen/Dense>

#include <functional>
#include <vector>

#include "fpsis/graph.hpp"
#include "fpsis/meanfield.hpp"
#include "fpsis/sis.hpp"

namespace fpsis {

/// Maps a population state (indexed by degree class) to an N x N
/// row-stochastic transition matrix over the graph space.
using TransitionKernel = std::function<Eigen::MatrixXd(const Eigen::VectorXd& x)>;

/// Unique stationary law of an irreducible row-stochastic P: solves
/// (P' - I) pi = 0 with sum(pi) = 1 directly. Throws std::invalid_argument if P
/// is not row-stochastic or not irreducible, NumericalError if the residual
/// ||P' pi - pi||_1 exceeds tol.
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P, double tol = 1e-12);

bool is_irreducible(const Eigen::MatrixXd& P);

/// Logistic blend (1 - s) P_low + s P_high with s = sigmoid(slope (rho(x) - midpoint))
/// and rho(x) = sum_k P(k) x(k).
TransitionKernel logistic_kernel(Eigen::MatrixXd low, Eigen::MatrixXd high, double slope, double midpoint,
                                 Eigen::VectorXd degree_dist);

/// Finite graph space over one node set. Every graph gives every node the same
/// degree, so population states are comparable across switches.
class ReactiveNetwork {
 public:
  /// Validates shared degrees, and row-stochasticity plus irreducibility of the
  /// kernel at constant states x = i / (grid - 1), i = 0..grid-1.
  ReactiveNetwork(std::vector<Graph> graphs, TransitionKernel kernel, int grid = 11);

  std::size_t size() const { return graphs_.size(); }
  const Graph& graph(std::size_t i) const { return graphs_[i]; }
  const DegreeStats& stats(std::size_t i) const { return stats_[i]; }
  const DegreeClasses& classes() const { return stats_.front().classes; }
  Eigen::MatrixXd transition(const Eigen::VectorXd& x) const;

 private:
  std::vector<Graph> graphs_;
  std::vector<DegreeStats> stats_;
  TransitionKernel kernel_;
};

struct JointTrajectory {
  std::vector<std::size_t> tick;
  std::vector<std::size_t> graph_index;
  std::vector<PopulationState> state;
  std::vector<std::size_t> occupancy;  // ticks spent on each graph after each transition
};

/// Per tick: G_{n+1} ~ P_x(G_n, .) from a dedicated stream, then one SIS tick on
/// G_{n+1}. The SIS stream is seeded with `seed` exactly as in simulate(), so a
/// one-graph space reproduces the static chain. Labels come from graph g_init.
JointTrajectory simulate_joint(const ReactiveNetwork& rn, const SisConfig& cfg, std::size_t g_init, std::size_t ticks,
                               std::uint64_t seed, std::size_t every = 1);

struct ConstrainedOdeState {
  Eigen::VectorXd x;
  Eigen::VectorXd pi;
  double residual = 0.0;  // ||P_x' pi - pi||_1
};

/// x <- x + (1/M) sum_i pi_x(i) H(x, G_i), emitted once per sweep (sweeps + 1 points).
std::vector<ConstrainedOdeState> constrained_ode_trajectory(const ReactiveNetwork& rn, const MfdParams& params,
                                                            const Eigen::VectorXd& x0, std::size_t sweeps);

}  // namespace fpsis
