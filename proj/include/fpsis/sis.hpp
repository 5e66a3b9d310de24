#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "fpsis/graph.hpp"
#include "fpsis/random.hpp"

namespace fpsis {

enum class Activation { X, Y, Z };
enum class Rule { NonMonophilic, Monophilic };
enum class NeighborMode { Graph, UnbiasedDegree };

std::string_view to_string(Activation a);
std::string_view to_string(Rule r);
std::string_view to_string(NeighborMode m);
Activation parse_activation(std::string_view s);
Rule parse_rule(std::string_view s);
NeighborMode parse_neighbor_mode(std::string_view s);

struct SisConfig {
  double nu = 0.5;
  double delta = 0.5;
  Activation activation = Activation::X;
  Rule rule = Rule::NonMonophilic;
  NeighborMode neighbor_mode = NeighborMode::Graph;
  /// Unbiased-degree mode only: may node m draw itself as an observation target.
  bool self_observation = true;

  double lambda() const { return nu / delta; }
  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Infected fraction per degree class (indexed like DegreeClasses::of(g)).
struct PopulationState {
  Eigen::VectorXd x;
  Eigen::VectorXi infected;
};

PopulationState population_state(const Graph& g);
PopulationState population_state(const DegreeClasses& classes, const Graph& g, std::span<const std::uint8_t> states);

/// Step 1: draw the activated node.
Node activate(const Graph& g, Activation a, Rng& rng);

/// Number of infected observation targets a^X_m or a^Z_m for node m.
int observed_infected(std::span<const std::uint8_t> states, const Graph& g, const SisConfig& cfg, Node m, Rng& rng);

/// Step 2 for node m. Returns true iff m changed state.
bool update_node(std::vector<std::uint8_t>& states, const Graph& g, const SisConfig& cfg, Node m, Rng& rng);

struct StepOutcome {
  Node node;
  bool changed;
};

/// One model tick: activation followed by the update of the activated node.
StepOutcome sis_step(std::vector<std::uint8_t>& states, const Graph& g, const SisConfig& cfg, Rng& rng);

/// Node states plus per-class infected counts maintained incrementally.
class SisSimulator {
 public:
  SisSimulator(const Graph& g, SisConfig cfg, std::uint64_t seed);

  StepOutcome step();
  void run(std::size_t ticks);

  /// Switch the topology. The new graph must give every node the same degree;
  /// check = false skips the O(M) verification for callers that validated it.
  void set_graph(const Graph& g, bool check = true);

  const Graph& graph() const { return graph_; }
  const DegreeClasses& classes() const { return classes_; }
  const std::vector<std::uint8_t>& states() const { return states_; }
  PopulationState population() const;
  double infected_fraction() const;
  Rng& rng() { return rng_; }

 private:
  Graph graph_;
  SisConfig cfg_;
  DegreeClasses classes_;
  std::vector<std::uint8_t> states_;
  Eigen::VectorXi infected_;
  Rng rng_;
};

struct Trajectory {
  std::vector<std::size_t> tick;
  std::vector<PopulationState> state;
};

/// Population states at ticks 0, every, 2*every, ..., T (T always included).
/// State 0 is the census of g's labels.
Trajectory simulate(const Graph& g, const SisConfig& cfg, std::size_t ticks, std::uint64_t seed, std::size_t every = 1);

/// CSV (sweep, k, x_k); the header comment records config and seed.
void write_trajectory_csv(const Trajectory& t, const DegreeClasses& classes, std::size_t ticks_per_sweep,
                          const SisConfig& cfg, std::uint64_t seed, std::ostream& out);

}  // namespace fpsis
