#include "fpsis/polling.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "fpsis/sampling.hpp"

namespace fpsis {

std::string_view to_string(Estimator e) {
  switch (e) {
    case Estimator::Intent: return "intent";
    case Estimator::NepUniform: return "nep-uniform";
    case Estimator::NepRandomWalk: return "nep-random-walk";
    case Estimator::NepFriendOfNode: return "nep-friend-of-node";
  }
  return "?";
}

Estimator parse_estimator(std::string_view s) {
  for (Estimator e : {Estimator::Intent, Estimator::NepUniform, Estimator::NepRandomWalk, Estimator::NepFriendOfNode})
    if (s == to_string(e)) return e;
  throw std::invalid_argument("unknown estimator '" + std::string(s) +
                              "' (expected intent, nep-uniform, nep-random-walk or nep-friend-of-node)");
}

double nep_response(const Graph& g, Node s) {
  int hits = 0;
  for (Node v : g.neighbors(s)) hits += g.label(v);
  return static_cast<double>(hits) / g.degree(s);
}

Poller::Poller(const Graph& g) : g_(g), q_(g.node_count()), connected_(g.is_connected()) {
  for (Node v = 0; v < static_cast<Node>(g.node_count()); ++v) q_[v] = nep_response(g, v);
  truth_ = static_cast<double>(g.infected_count()) / static_cast<double>(g.node_count());
}

namespace {

void check_budget(std::size_t b) {
  if (b == 0) throw std::invalid_argument("sampling budget must be at least 1");
}

}  // namespace

PollResult Poller::intent(std::size_t b, std::uint64_t seed) const {
  check_budget(b);
  Rng rng(seed);
  double sum = 0.0;
  for (std::size_t i = 0; i < b; ++i) sum += g_.label(sample_uniform_node(g_, rng));
  return {sum / b, Estimator::Intent, b, 0, seed};
}

PollResult Poller::nep_uniform(std::size_t b, std::uint64_t seed) const {
  check_budget(b);
  Rng rng(seed);
  double sum = 0.0;
  for (std::size_t i = 0; i < b; ++i) sum += q_[sample_uniform_node(g_, rng)];
  return {sum / b, Estimator::NepUniform, b, 0, seed};
}

PollResult Poller::nep_random_walk(std::size_t b, std::size_t N, std::uint64_t seed) const {
  check_budget(b);
  if (!connected_) throw std::invalid_argument("nep_random_walk: graph is disconnected; the walk has no unique stationary law");
  Rng rng(seed);
  double sum = 0.0;
  for (std::size_t i = 0; i < b; ++i) sum += q_[random_walk(g_, sample_uniform_node(g_, rng), N, rng)];
  return {sum / b, Estimator::NepRandomWalk, b, N, seed};
}

PollResult Poller::nep_friend_of_node(std::size_t b, std::uint64_t seed) const {
  check_budget(b);
  Rng rng(seed);
  double sum = 0.0;
  for (std::size_t i = 0; i < b; ++i) sum += q_[sample_friend_of_random_node(g_, rng)];
  return {sum / b, Estimator::NepFriendOfNode, b, 0, seed};
}

PollResult Poller::run(Estimator e, std::size_t b, std::size_t N, std::uint64_t seed) const {
  switch (e) {
    case Estimator::Intent: return intent(b, seed);
    case Estimator::NepUniform: return nep_uniform(b, seed);
    case Estimator::NepRandomWalk: return nep_random_walk(b, N, seed);
    case Estimator::NepFriendOfNode: return nep_friend_of_node(b, seed);
  }
  throw std::invalid_argument("unknown estimator");
}

PollResult intent_poll(const Graph& g, std::size_t b, std::uint64_t seed) { return Poller(g).intent(b, seed); }
PollResult nep_uniform(const Graph& g, std::size_t b, std::uint64_t seed) { return Poller(g).nep_uniform(b, seed); }
PollResult nep_random_walk(const Graph& g, std::size_t b, std::size_t N, std::uint64_t seed) {
  return Poller(g).nep_random_walk(b, N, seed);
}
PollResult nep_friend_of_node(const Graph& g, std::size_t b, std::uint64_t seed) {
  return Poller(g).nep_friend_of_node(b, seed);
}

RwBias exact_bias_rw(const Graph& g) {
  if (!g.is_connected()) throw std::invalid_argument("exact_bias_rw: graph must be connected");
  const auto M = static_cast<double>(g.node_count());
  const auto ends = static_cast<double>(g.adjacency().size());
  double s_sum = 0.0, d_sum = 0.0, ds_sum = 0.0;
  for (Node v = 0; v < static_cast<Node>(g.node_count()); ++v) {
    const double s = g.label(v), d = g.degree(v);
    s_sum += s;
    d_sum += d;
    ds_sum += d * s;
  }
  RwBias r;
  r.via_mean_difference = ds_sum / ends - s_sum / M;
  const double mean_d = d_sum / M;
  r.via_covariance = (ds_sum / M - mean_d * (s_sum / M)) / mean_d;
  if (std::abs(r.via_mean_difference - r.via_covariance) > 1e-12) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "bias forms disagree: " << r.via_mean_difference << " vs " << r.via_covariance;
    throw NumericalError(msg.str());
  }
  return r;
}

double exact_var_rw(const Graph& g, std::size_t b) {
  check_budget(b);
  if (!g.is_connected()) throw std::invalid_argument("exact_var_rw: graph must be connected");
  const Poller p(g);
  const auto q = p.responses();
  const auto ends = static_cast<double>(g.adjacency().size());
  double sy = 0.0, qu = 0.0, sq = 0.0;
  for (Node u = 0; u < static_cast<Node>(g.node_count()); ++u)
    for (Node y : g.neighbors(u)) {
      sy += g.label(y);
      qu += q[u];
      sq += g.label(y) * q[u];
    }
  return (sq / ends - (sy / ends) * (qu / ends)) / static_cast<double>(b);
}

SmallBudgetCondition small_budget_condition(const Graph& g) {
  SmallBudgetCondition c;
  double n1 = 0, n0 = 0, d1 = 0, d0 = 0;
  for (Node v = 0; v < static_cast<Node>(g.node_count()); ++v) {
    if (g.label(v)) {
      n1 += 1;
      d1 += g.degree(v);
    } else {
      n0 += 1;
      d0 += g.degree(v);
    }
  }
  c.fraction = n1 / (n0 + n1);
  c.mean_degree = (d0 + d1) / (n0 + n1);
  c.determinate = n1 > 0 && n0 > 0;
  if (!c.determinate) return c;
  c.mean_degree_label1 = d1 / n1;
  c.mean_degree_label0 = d0 / n0;
  c.first = c.mean_degree_label1 <= c.mean_degree_label0 && c.fraction <= 0.5;
  c.second = c.mean_degree_label1 >= c.mean_degree_label0 && c.fraction >= 0.5;
  c.holds = c.first || c.second;
  return c;
}

const MseRow& MseTable::at(Estimator e, std::size_t b) const {
  for (const auto& r : rows)
    if (r.estimator == e && r.budget == b) return r;
  throw std::out_of_range("no MSE row for " + std::string(to_string(e)) + " at budget " + std::to_string(b));
}

MseTable mse_experiment(const Graph& g, std::span<const Estimator> estimators, std::span<const std::size_t> budgets,
                        std::size_t trials, std::uint64_t seed, const MseOptions& opt) {
  if (trials < 100) throw std::invalid_argument("mse_experiment: need at least 100 trials");
  const Poller poller(g);
  MseTable table;
  table.true_fraction = poller.true_fraction();

  for (Estimator e : estimators)
    for (std::size_t b : budgets) {
      std::vector<double> est(trials);
      auto work = [&](std::size_t begin, std::size_t end) {
        for (std::size_t t = begin; t < end; ++t) {
          const std::uint64_t s = opt.paired ? derive_seed(seed, {b, t})
                                             : derive_seed(seed, {static_cast<std::uint64_t>(e), b, t});
          est[t] = poller.run(e, b, opt.walk_length, s).estimate;
        }
      };
      const unsigned threads = std::max(1u, std::min<unsigned>(opt.threads, static_cast<unsigned>(trials)));
      if (threads == 1) {
        work(0, trials);
      } else {
        std::vector<std::jthread> pool;
        for (unsigned k = 0; k < threads; ++k) pool.emplace_back(work, trials * k / threads, trials * (k + 1) / threads);
      }

      const double n = static_cast<double>(trials);
      double sum = 0.0, sum2 = 0.0, sum4 = 0.0;
      for (double v : est) {
        const double err = v - table.true_fraction;
        sum += err;
        sum2 += err * err;
        sum4 += err * err * err * err;
      }
      MseRow row;
      row.estimator = e;
      row.budget = b;
      row.walk_length = e == Estimator::NepRandomWalk ? opt.walk_length : 0;
      row.trials = trials;
      row.bias = sum / n;
      row.mse = sum2 / n;
      row.variance = (sum2 - n * row.bias * row.bias) / (n - 1);
      row.bias_se = std::sqrt(std::max(0.0, row.variance) / n);
      row.mse_se = std::sqrt(std::max(0.0, (sum4 / n - row.mse * row.mse) / (n - 1)));
      table.rows.push_back(row);
    }
  return table;
}

void write_mse_csv_header(std::ostream& out) {
  out << "graph_id,alpha_or_model,r_kk,p_ks,estimator,budget,mse,bias,var,trials\n";
}

void write_mse_csv_rows(const MseTable& t, const std::string& graph_id, const std::string& model, double rkk,
                        double pks, std::ostream& out) {
  const auto old = out.precision(17);
  for (const auto& r : t.rows)
    out << graph_id << ',' << model << ',' << rkk << ',' << pks << ',' << to_string(r.estimator) << ',' << r.budget
        << ',' << r.mse << ',' << r.bias << ',' << r.variance << ',' << r.trials << '\n';
  out.precision(old);
}

}  // namespace fpsis
