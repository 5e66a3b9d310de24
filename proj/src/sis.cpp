#include "fpsis/sis.hpp"

#include <cassert>
#include <ostream>
#include <stdexcept>

#include "fpsis/sampling.hpp"

namespace fpsis {

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::X: return "X";
    case Activation::Y: return "Y";
    case Activation::Z: return "Z";
  }
  return "?";
}

std::string_view to_string(Rule r) { return r == Rule::Monophilic ? "monophilic" : "non-monophilic"; }

std::string_view to_string(NeighborMode m) { return m == NeighborMode::Graph ? "graph" : "unbiased-degree"; }

Activation parse_activation(std::string_view s) {
  if (s == "X" || s == "uniform") return Activation::X;
  if (s == "Y" || s == "random-friend") return Activation::Y;
  if (s == "Z" || s == "friend-of-node") return Activation::Z;
  throw std::invalid_argument("activation: expected X, Y or Z, got '" + std::string(s) + "'");
}

Rule parse_rule(std::string_view s) {
  if (s == "non-monophilic") return Rule::NonMonophilic;
  if (s == "monophilic") return Rule::Monophilic;
  throw std::invalid_argument("rule: expected monophilic or non-monophilic, got '" + std::string(s) + "'");
}

NeighborMode parse_neighbor_mode(std::string_view s) {
  if (s == "graph") return NeighborMode::Graph;
  if (s == "unbiased-degree") return NeighborMode::UnbiasedDegree;
  throw std::invalid_argument("neighbor_mode: expected graph or unbiased-degree, got '" + std::string(s) + "'");
}

void SisConfig::validate() const {
  if (!(nu >= 0.0 && nu <= 1.0)) throw std::invalid_argument("nu must lie in [0, 1]");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must lie in (0, 1]");
}

PopulationState population_state(const DegreeClasses& classes, const Graph& g, std::span<const std::uint8_t> states) {
  PopulationState p;
  p.infected = Eigen::VectorXi::Zero(classes.count());
  for (Node v = 0; v < static_cast<Node>(g.node_count()); ++v)
    if (states[v]) ++p.infected(classes.index(g.degree(v)));
  p.x = p.infected.cast<double>().cwiseQuotient(classes.size.cast<double>());
  return p;
}

PopulationState population_state(const Graph& g) { return population_state(DegreeClasses::of(g), g, g.labels()); }

Node activate(const Graph& g, Activation a, Rng& rng) {
  switch (a) {
    case Activation::X: return sample_uniform_node(g, rng);
    case Activation::Y: return sample_random_friend(g, rng);
    case Activation::Z: return sample_friend_of_random_node(g, rng);
  }
  return 0;
}

int observed_infected(std::span<const std::uint8_t> states, const Graph& g, const SisConfig& cfg, Node m, Rng& rng) {
  const bool mono = cfg.rule == Rule::Monophilic;
  int a = 0;
  if (cfg.neighbor_mode == NeighborMode::Graph) {
    for (Node t : g.neighbors(m)) a += states[mono ? uniform_neighbor(g, t, rng) : t];
    return a;
  }
  const int draws = g.degree(m);
  for (int i = 0; i < draws; ++i) {
    Node t = sample_uniform_node(g, rng);
    while (!cfg.self_observation && t == m) t = sample_uniform_node(g, rng);
    a += states[mono ? uniform_neighbor(g, t, rng) : t];
  }
  return a;
}

bool update_node(std::vector<std::uint8_t>& states, const Graph& g, const SisConfig& cfg, Node m, Rng& rng) {
  if (states[m]) {
    if (bernoulli(rng, cfg.delta)) {
      states[m] = 0;
      return true;
    }
    return false;
  }
  const int a = observed_infected(states, g, cfg, m, rng);
  const double p = cfg.nu * a / g.max_degree();
  assert(p <= 1.0);
  if (bernoulli(rng, p)) {
    states[m] = 1;
    return true;
  }
  return false;
}

StepOutcome sis_step(std::vector<std::uint8_t>& states, const Graph& g, const SisConfig& cfg, Rng& rng) {
  const Node m = activate(g, cfg.activation, rng);
  return {m, update_node(states, g, cfg, m, rng)};
}

SisSimulator::SisSimulator(const Graph& g, SisConfig cfg, std::uint64_t seed)
    : graph_(g),
      cfg_(cfg),
      classes_(DegreeClasses::of(g)),
      states_(g.labels().begin(), g.labels().end()),
      rng_(seed) {
  cfg_.validate();
  infected_ = population_state(classes_, graph_, states_).infected;
}

StepOutcome SisSimulator::step() {
  const StepOutcome o = sis_step(states_, graph_, cfg_, rng_);
  if (o.changed) infected_(classes_.index(graph_.degree(o.node))) += states_[o.node] ? 1 : -1;
  return o;
}

void SisSimulator::run(std::size_t ticks) {
  for (std::size_t i = 0; i < ticks; ++i) step();
}

void SisSimulator::set_graph(const Graph& g, bool check) {
  if (g.node_count() != graph_.node_count()) throw GraphError("set_graph: node count differs");
  if (check)
    for (Node v = 0; v < static_cast<Node>(g.node_count()); ++v)
      if (g.degree(v) != graph_.degree(v)) throw GraphError("set_graph: node degrees differ");
  graph_ = g;
}

PopulationState SisSimulator::population() const {
  return {infected_.cast<double>().cwiseQuotient(classes_.size.cast<double>()), infected_};
}

double SisSimulator::infected_fraction() const {
  return static_cast<double>(infected_.sum()) / static_cast<double>(graph_.node_count());
}

Trajectory simulate(const Graph& g, const SisConfig& cfg, std::size_t ticks, std::uint64_t seed, std::size_t every) {
  if (every == 0) throw std::invalid_argument("simulate: recording interval must be positive");
  SisSimulator sim(g, cfg, seed);
  Trajectory t;
  t.tick.push_back(0);
  t.state.push_back(sim.population());
  for (std::size_t n = 1; n <= ticks; ++n) {
    sim.step();
    if (n % every == 0 || n == ticks) {
      t.tick.push_back(n);
      t.state.push_back(sim.population());
    }
  }
  return t;
}

void write_trajectory_csv(const Trajectory& t, const DegreeClasses& classes, std::size_t ticks_per_sweep,
                          const SisConfig& cfg, std::uint64_t seed, std::ostream& out) {
  const auto old = out.precision(17);
  out << "# nu=" << cfg.nu << " delta=" << cfg.delta << " activation=" << to_string(cfg.activation)
      << " rule=" << to_string(cfg.rule) << " neighbor_mode=" << to_string(cfg.neighbor_mode)
      << " self_observation=" << cfg.self_observation << " seed=" << seed << '\n';
  out << "sweep,k,x_k\n";
  for (std::size_t i = 0; i < t.tick.size(); ++i) {
    const double sweep = static_cast<double>(t.tick[i]) / static_cast<double>(ticks_per_sweep);
    for (int c = 0; c < classes.count(); ++c) out << sweep << ',' << classes.degree[c] << ',' << t.state[i].x(c) << '\n';
  }
  out.precision(old);
}

}  // namespace fpsis
