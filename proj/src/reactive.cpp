#include "fpsis/reactive.hpp"

#include <Eigen/LU>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace fpsis {

namespace {

void check_row_stochastic(const Eigen::MatrixXd& P) {
  if (P.rows() == 0 || P.rows() != P.cols()) throw std::invalid_argument("transition matrix must be square and non-empty");
  if (P.minCoeff() < 0.0) throw std::invalid_argument("transition matrix has negative entries");
  const double worst = (P.rowwise().sum().array() - 1.0).abs().maxCoeff();
  if (!(worst <= 1e-12 * P.rows())) throw std::invalid_argument("transition matrix is not row-stochastic");
}

std::vector<bool> reachable(const Eigen::MatrixXd& P, bool forward) {
  const Eigen::Index n = P.rows();
  std::vector<bool> seen(n, false);
  std::vector<Eigen::Index> stack{0};
  seen[0] = true;
  while (!stack.empty()) {
    const Eigen::Index i = stack.back();
    stack.pop_back();
    for (Eigen::Index j = 0; j < n; ++j)
      if (!seen[j] && (forward ? P(i, j) : P(j, i)) > 0.0) {
        seen[j] = true;
        stack.push_back(j);
      }
  }
  return seen;
}

}  // namespace

bool is_irreducible(const Eigen::MatrixXd& P) {
  for (bool forward : {true, false})
    for (bool b : reachable(P, forward))
      if (!b) return false;
  return true;
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd& P, double tol) {
  check_row_stochastic(P);
  if (!is_irreducible(P))
    throw std::invalid_argument("transition matrix is reducible: a unique stationary distribution is not guaranteed");
  const Eigen::Index n = P.rows();
  if (n == 1) return Eigen::VectorXd::Ones(1);

  Eigen::MatrixXd A = P.transpose() - Eigen::MatrixXd::Identity(n, n);
  A.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  Eigen::VectorXd pi = lu.solve(b);
  pi -= lu.solve(A * pi - b);  // one refinement step
  pi /= pi.sum();

  const double residual = (P.transpose() * pi - pi).lpNorm<1>();
  if (!(residual < tol) || pi.minCoeff() < -tol) {
    std::ostringstream msg;
    msg << "stationary distribution residual " << residual << " exceeds tolerance " << tol;
    throw NumericalError(msg.str());
  }
  return pi;
}

TransitionKernel logistic_kernel(Eigen::MatrixXd low, Eigen::MatrixXd high, double slope, double midpoint,
                                 Eigen::VectorXd degree_dist) {
  if (low.rows() != high.rows() || low.cols() != high.cols())
    throw std::invalid_argument("logistic kernel: P_low and P_high differ in shape");
  check_row_stochastic(low);
  check_row_stochastic(high);
  return [low = std::move(low), high = std::move(high), slope, midpoint,
          P = std::move(degree_dist)](const Eigen::VectorXd& x) -> Eigen::MatrixXd {
    const double s = 1.0 / (1.0 + std::exp(-slope * (P.dot(x) - midpoint)));
    return (1.0 - s) * low + s * high;
  };
}

ReactiveNetwork::ReactiveNetwork(std::vector<Graph> graphs, TransitionKernel kernel, int grid)
    : graphs_(std::move(graphs)), kernel_(std::move(kernel)) {
  if (graphs_.empty()) throw std::invalid_argument("reactive network needs at least one graph");
  if (grid < 2) throw std::invalid_argument("kernel validation grid needs at least two points");
  const auto deg = graphs_.front().degree_sequence();
  for (std::size_t i = 1; i < graphs_.size(); ++i)
    if (graphs_[i].degree_sequence() != deg)
      throw GraphError("reactive network: graph " + std::to_string(i) + " does not share node degrees with graph 0");
  for (const Graph& g : graphs_) stats_.push_back(degree_stats(g));

  const Eigen::Index d = stats_.front().classes.count();
  for (int i = 0; i < grid; ++i) {
    const double level = static_cast<double>(i) / (grid - 1);
    const Eigen::MatrixXd P = transition(Eigen::VectorXd::Constant(d, level));
    try {
      check_row_stochastic(P);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string("kernel at x = ") + std::to_string(level) + ": " + e.what());
    }
    if (!is_irreducible(P))
      throw std::invalid_argument("kernel at x = " + std::to_string(level) +
                                  " is reducible (stationary law not unique)");
  }
}

Eigen::MatrixXd ReactiveNetwork::transition(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd P = kernel_(x);
  if (P.rows() != static_cast<Eigen::Index>(graphs_.size()) || P.cols() != P.rows())
    throw std::invalid_argument("kernel returned a matrix of the wrong size");
  return P;
}

JointTrajectory simulate_joint(const ReactiveNetwork& rn, const SisConfig& cfg, std::size_t g_init, std::size_t ticks,
                               std::uint64_t seed, std::size_t every) {
  if (cfg.rule != Rule::Monophilic) throw std::invalid_argument("simulate_joint: rule must be monophilic");
  if (g_init >= rn.size()) throw std::invalid_argument("simulate_joint: initial graph index out of range");
  if (every == 0) throw std::invalid_argument("simulate_joint: recording interval must be positive");

  SisSimulator sim(rn.graph(g_init), cfg, seed);
  Rng graph_rng(derive_seed(seed, {0x7265616374ULL}));
  std::size_t cur = g_init;

  JointTrajectory t;
  t.occupancy.assign(rn.size(), 0);
  t.tick.push_back(0);
  t.graph_index.push_back(cur);
  t.state.push_back(sim.population());
  for (std::size_t n = 1; n <= ticks; ++n) {
    const Eigen::MatrixXd P = rn.transition(sim.population().x);
    double u = uniform01(graph_rng);
    std::size_t next = rn.size() - 1;
    for (std::size_t j = 0; j < rn.size(); ++j) {
      u -= P(cur, j);
      if (u < 0.0) {
        next = j;
        break;
      }
    }
    if (next != cur) {
#ifndef NDEBUG
      sim.set_graph(rn.graph(next), true);
#else
      sim.set_graph(rn.graph(next), false);
#endif
      cur = next;
    }
    ++t.occupancy[cur];
    sim.step();
    if (n % every == 0 || n == ticks) {
      t.tick.push_back(n);
      t.graph_index.push_back(cur);
      t.state.push_back(sim.population());
    }
  }
  return t;
}

std::vector<ConstrainedOdeState> constrained_ode_trajectory(const ReactiveNetwork& rn, const MfdParams& params,
                                                            const Eigen::VectorXd& x0, std::size_t sweeps) {
  if (params.rule != Rule::Monophilic) throw std::invalid_argument("constrained ODE: rule must be monophilic");
  if (x0.size() != rn.classes().count()) throw std::invalid_argument("x0 dimension does not match degree classes");

  std::vector<MfdModel> models;
  for (std::size_t i = 0; i < rn.size(); ++i) {
    MfdParams p = params;
    p.stats = rn.stats(i);
    models.push_back(MfdModel::from(p));
  }
  const double h = models.front().h;
  const std::size_t per = ticks_per_sweep(params.M);

  auto constrained = [&](const Eigen::VectorXd& x) {
    const Eigen::MatrixXd P = rn.transition(x);
    ConstrainedOdeState s{x, stationary_distribution(P, 1e-10), 0.0};
    s.residual = (P.transpose() * s.pi - s.pi).lpNorm<1>();
    return s;
  };

  std::vector<ConstrainedOdeState> out{constrained(x0)};
  Eigen::VectorXd x = x0;
  for (std::size_t sweep = 1; sweep <= sweeps; ++sweep) {
    for (std::size_t n = 0; n < per; ++n) {
      const Eigen::VectorXd pi = stationary_distribution(rn.transition(x), 1e-10);
      Eigen::VectorXd acc = Eigen::VectorXd::Zero(x.size());
      for (std::size_t i = 0; i < rn.size(); ++i) acc += pi(i) * models[i].drift(x);
      x = x + h * acc;
      if (x.minCoeff() < -1e-12 || x.maxCoeff() > 1.0 + 1e-12)
        throw NumericalError("constrained ODE iterate left [0,1]; step size 1/M too large for these rates");
    }
    out.push_back(constrained(x));
  }
  return out;
}

}  // namespace fpsis
