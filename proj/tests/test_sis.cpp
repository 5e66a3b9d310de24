#include "doctest.h"

#include <cmath>
#include <numeric>
#include <sstream>

#include "fpsis/meanfield.hpp"
#include "fpsis/sis.hpp"

using namespace fpsis;

namespace {

// Hub 0 joined to 1..19, plus the cycle 1-2-...-19-1. Degrees: 19 and 3.
Graph wheel20() {
  std::vector<Edge> e;
  for (Node v = 1; v < 20; ++v) e.push_back({0, v});
  for (Node v = 1; v < 19; ++v) e.push_back({v, v + 1});
  e.push_back({19, 1});
  return Graph::from_edges(20, e);
}

double chi_square(const std::vector<double>& counts, const std::vector<double>& p) {
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  double chi = 0;
  for (std::size_t i = 0; i < counts.size(); ++i) chi += std::pow(counts[i] - n * p[i], 2) / (n * p[i]);
  return chi;
}

constexpr double kChi2Df19At1Percent = 36.191;

std::vector<std::uint8_t> with_infected(std::size_t n, std::initializer_list<Node> inf) {
  std::vector<std::uint8_t> s(n, 0);
  for (Node v : inf) s[v] = 1;
  return s;
}

}  // namespace

TEST_CASE("config validation and names") {
  SisConfig c;
  c.nu = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.nu = 0.2;
  c.delta = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c.delta = 0.4;
  CHECK_NOTHROW(c.validate());
  CHECK(c.lambda() == doctest::Approx(0.5));
  CHECK(parse_activation("Z") == Activation::Z);
  CHECK(parse_rule(to_string(Rule::Monophilic)) == Rule::Monophilic);
  CHECK(parse_neighbor_mode("unbiased-degree") == NeighborMode::UnbiasedDegree);
  CHECK_THROWS(parse_rule("persuasive"));
}

TEST_CASE("population_state") {
  CHECK(population_state(make_star(4)).x.isZero());

  const Graph star = make_star(4).with_labels({1, 0, 0, 0, 0});
  const auto p = population_state(star);
  REQUIRE(p.x.size() == 2);
  CHECK(p.x(0) == 0.0);  // degree 1
  CHECK(p.x(1) == 1.0);  // degree 4

  const Graph g = assign_labels(generate_configuration_model(3000, 2.1, 1, 54, 3), 0.5, 0.0, 0.02, 4).graph;
  const auto s = degree_stats(g);
  CHECK(std::abs(s.P.dot(population_state(g).x) - 0.5) < 1e-15);
}

TEST_CASE("single-node update rules") {
  Rng rng(1);
  SisConfig cfg{1.0, 0.5, Activation::X, Rule::NonMonophilic, NeighborMode::Graph};

  SUBCASE("no infection anywhere: susceptible nodes stay susceptible") {
    const Graph g = generate_configuration_model(500, 2.1, 1, 22, 2);
    std::vector<std::uint8_t> s(g.node_count(), 0);
    for (auto mode : {NeighborMode::Graph, NeighborMode::UnbiasedDegree})
      for (auto rule : {Rule::NonMonophilic, Rule::Monophilic}) {
        cfg.neighbor_mode = mode;
        cfg.rule = rule;
        for (int i = 0; i < 5000; ++i) CHECK_FALSE(sis_step(s, g, cfg, rng).changed);
      }
  }
  SUBCASE("everyone else infected, d(m) = D, nu = 1: certain infection") {
    const Graph k5 = make_complete(5);
    for (int i = 0; i < 1000; ++i) {
      auto s = with_infected(5, {1, 2, 3, 4});
      CHECK(observed_infected(s, k5, cfg, 0, rng) == 4);
      CHECK(update_node(s, k5, cfg, 0, rng));
    }
  }
  SUBCASE("star with infected hub: leaf infection probability 1/4") {
    const Graph star = make_star(4);
    auto s0 = with_infected(5, {0});
    CHECK(observed_infected(s0, star, cfg, 3, rng) == 1);
    int hits = 0;
    for (int i = 0; i < 100000; ++i) {
      auto s = s0;
      hits += update_node(s, star, cfg, 3, rng);
    }
    CHECK(std::abs(hits / 1e5 - 0.25) < 0.01);
  }
  SUBCASE("monophilic rule looks two hops out") {
    const Graph star = make_star(4);
    cfg.rule = Rule::Monophilic;
    // leaf -> hub -> random leaf; only the hub is infected, so nothing is seen
    auto s = with_infected(5, {0});
    for (int i = 0; i < 100; ++i) CHECK(observed_infected(s, star, cfg, 1, rng) == 0);
    // all other leaves infected: leaf 1 sees an infected leaf w.p. 3/4
    s = with_infected(5, {2, 3, 4});
    double sum = 0;
    for (int i = 0; i < 100000; ++i) sum += observed_infected(s, star, cfg, 1, rng);
    CHECK(std::abs(sum / 1e5 - 0.75) < 0.01);
  }
  SUBCASE("unbiased-degree targets are uniform nodes") {
    const Graph g = generate_configuration_model(1000, 2.1, 1, 31, 5);
    std::vector<std::uint8_t> s(g.node_count(), 0);
    for (std::size_t v = 0; v < s.size(); v += 4) s[v] = 1;  // a quarter infected
    cfg.neighbor_mode = NeighborMode::UnbiasedDegree;
    Node hub = 0;
    for (Node v = 0; v < static_cast<Node>(g.node_count()); ++v)
      if (g.degree(v) == g.max_degree()) hub = v;
    double sum = 0;
    for (int i = 0; i < 20000; ++i) sum += observed_infected(s, g, cfg, hub, rng);
    CHECK(std::abs(sum / 20000 / g.degree(hub) - 0.25) < 0.01);
  }
  SUBCASE("self-observation can be switched off") {
    const Graph k2 = make_complete(2);
    cfg.neighbor_mode = NeighborMode::UnbiasedDegree;
    cfg.self_observation = false;
    auto s = with_infected(2, {1});
    for (int i = 0; i < 100; ++i) CHECK(observed_infected(s, k2, cfg, 0, rng) == 1);
  }
}

TEST_CASE("simulate") {
  const Graph base = generate_configuration_model(1000, 2.1, 1, 31, 6);

  SUBCASE("records T+1 states starting from the label census") {
    const Graph g = assign_labels(base, 0.3, 0.0, 0.05, 7).graph;
    const auto t = simulate(g, SisConfig{}, 250, 8);
    CHECK(t.state.size() == 251);
    CHECK(t.state.front().x == population_state(g).x);
    const auto sparse = simulate(g, SisConfig{}, 250, 8, 100);
    CHECK(sparse.tick == std::vector<std::size_t>{0, 100, 200, 250});
    CHECK(sparse.state[3].x == t.state[250].x);  // same seed, same chain
  }
  SUBCASE("one state change per tick, and only through the activated node") {
    const Graph g = assign_labels(base, 0.5, 0.0, 0.05, 9).graph;
    SisSimulator sim(g, SisConfig{0.8, 0.3, Activation::Y, Rule::Monophilic, NeighborMode::Graph}, 10);
    auto prev = sim.states();
    for (int i = 0; i < 5000; ++i) {
      const auto o = sim.step();
      int diff = 0;
      for (std::size_t v = 0; v < prev.size(); ++v) diff += prev[v] != sim.states()[v];
      CHECK(diff == (o.changed ? 1 : 0));
      if (o.changed) CHECK(prev[o.node] != sim.states()[o.node]);
      prev = sim.states();
      const auto p = sim.population();
      CHECK(p.x.minCoeff() >= 0.0);
      CHECK(p.x.maxCoeff() <= 1.0);
    }
    CHECK(sim.population().x == population_state(sim.classes(), sim.graph(), sim.states()).x);
  }
  SUBCASE("nu = 0: pure recovery") {
    const Graph g = assign_labels(base, 0.6, 0.0, 0.05, 11).graph;
    const SisConfig cfg{0.0, 0.2, Activation::X, Rule::NonMonophilic, NeighborMode::Graph};
    const auto s = degree_stats(g);
    const auto t = simulate(g, cfg, 60000, 12, 1000);
    for (std::size_t i = 1; i < t.state.size(); ++i)
      CHECK(s.P.dot(t.state[i].x) <= s.P.dot(t.state[i - 1].x) + 1e-15);
    CHECK(t.state.back().x.isZero());
  }
  SUBCASE("delta = 1, nu = 0: an activated infected node recovers") {
    const Graph g = base.with_labels(std::vector<std::uint8_t>(base.node_count(), 1));
    SisSimulator sim(g, SisConfig{0.0, 1.0}, 13);
    const auto o = sim.step();
    CHECK(o.changed);
    CHECK(sim.states()[o.node] == 0);
    CHECK(sim.population().infected.sum() == static_cast<int>(g.node_count()) - 1);
  }
  SUBCASE("set_graph requires identical node degrees") {
    SisSimulator sim(base, SisConfig{}, 14);
    CHECK_NOTHROW(sim.set_graph(rewire_to_assortativity(base, -0.1, 0.02, 100000, 15).graph));
    CHECK_THROWS_AS(sim.set_graph(generate_configuration_model(1000, 2.1, 1, 31, 16)), GraphError);
  }
}

TEST_CASE("activation frequencies") {
  const Graph g = wheel20();
  std::vector<double> deg(20), pz(20, 0.0);
  for (Node v = 0; v < 20; ++v) deg[v] = g.degree(v);
  for (Node u = 0; u < 20; ++u)
    for (Node v : g.neighbors(u)) pz[v] += 1.0 / (20.0 * g.degree(u));
  const double ends = 2.0 * g.edge_count();

  auto counts_for = [&](Activation a) {
    // keep everything susceptible so the chain itself is stationary
    SisSimulator sim(g, SisConfig{0.0, 1.0, a}, 17 + static_cast<int>(a));
    std::vector<double> c(20, 0.0);
    for (int i = 0; i < 1000000; ++i) c[sim.step().node] += 1.0;
    return c;
  };
  std::vector<double> px(20, 1.0 / 20), py(20);
  for (int v = 0; v < 20; ++v) py[v] = deg[v] / ends;
  CHECK(chi_square(counts_for(Activation::X), px) < kChi2Df19At1Percent);
  CHECK(chi_square(counts_for(Activation::Y), py) < kChi2Df19At1Percent);
  CHECK(chi_square(counts_for(Activation::Z), pz) < kChi2Df19At1Percent);
  // and the alternatives are rejected
  CHECK(chi_square(counts_for(Activation::X), py) > kChi2Df19At1Percent);
}

TEST_CASE("long-run simulation agrees with the mean-field stationary fraction") {
  const Graph g0 = generate_configuration_model(2000, 2.1, 1, 10, 21);
  const auto s = degree_stats(g0);
  const SisConfig cfg{1.0, 0.1, Activation::X, Rule::NonMonophilic, NeighborMode::UnbiasedDegree};
  const double lstar = critical_threshold(s, Rule::NonMonophilic).lambda_star;
  REQUIRE(cfg.lambda() > lstar);
  const double rho = stationary_fraction(MfdParams::from(s, cfg));
  REQUIRE(rho > 0.1);

  const Graph g = assign_labels(g0, 0.5, 0.0, 0.05, 22).graph;
  SisSimulator sim(g, cfg, 23);
  sim.run(150 * g.node_count());
  double avg = 0;
  for (int i = 0; i < 200; ++i) {
    sim.run(g.node_count());
    avg += sim.infected_fraction();
  }
  CHECK(std::abs(avg / 200 - rho) < 0.05);
}

TEST_CASE("trajectory CSV") {
  const Graph g = make_star(2).with_labels({1, 0, 0});
  const auto t = simulate(g, SisConfig{0.0, 1.0}, 3, 5, 3);
  std::ostringstream out;
  write_trajectory_csv(t, DegreeClasses::of(g), 3, SisConfig{0.0, 1.0}, 5, out);
  const std::string csv = out.str();
  CHECK(csv.rfind("# nu=0 delta=1 activation=X rule=non-monophilic neighbor_mode=graph", 0) == 0);
  CHECK(csv.find("sweep,k,x_k\n0,1,0\n0,2,1\n1,1,0\n") != std::string::npos);
}
