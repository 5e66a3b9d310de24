#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fpsis/graph.hpp"
#include "fpsis/random.hpp"

namespace fpsis {

enum class Estimator { Intent, NepUniform, NepRandomWalk, NepFriendOfNode };

std::string_view to_string(Estimator e);
Estimator parse_estimator(std::string_view s);

struct PollResult {
  double estimate = 0.0;
  Estimator estimator = Estimator::Intent;
  std::size_t budget = 0;
  std::size_t walk_length = 0;  // random walk only
  std::uint64_t seed = 0;
};

/// Fraction of N(s) labeled 1.
double nep_response(const Graph& g, Node s);

/// Precomputes q(v) for every node and the census truth; estimators drawn
/// through one Poller share that work.
class Poller {
 public:
  explicit Poller(const Graph& g);

  const Graph& graph() const { return g_; }
  double true_fraction() const { return truth_; }
  std::span<const double> responses() const { return q_; }
  bool connected() const { return connected_; }

  PollResult intent(std::size_t b, std::uint64_t seed) const;
  PollResult nep_uniform(std::size_t b, std::uint64_t seed) const;
  /// Throws std::invalid_argument on a disconnected graph.
  PollResult nep_random_walk(std::size_t b, std::size_t N, std::uint64_t seed) const;
  PollResult nep_friend_of_node(std::size_t b, std::uint64_t seed) const;
  PollResult run(Estimator e, std::size_t b, std::size_t N, std::uint64_t seed) const;

 private:
  Graph g_;
  std::vector<double> q_;
  double truth_ = 0.0;
  bool connected_ = false;
};

PollResult intent_poll(const Graph& g, std::size_t b, std::uint64_t seed);
PollResult nep_uniform(const Graph& g, std::size_t b, std::uint64_t seed);
PollResult nep_random_walk(const Graph& g, std::size_t b, std::size_t N, std::uint64_t seed);
PollResult nep_friend_of_node(const Graph& g, std::size_t b, std::uint64_t seed);

struct RwBias {
  double via_mean_difference = 0.0;  // E[s(Y)] - E[s(X)]
  double via_covariance = 0.0;       // cov(s(X), d(X)) / E[d(X)]
  double value() const { return via_mean_difference; }
};

/// Large-N bias of the random-walk estimator by census. Throws NumericalError
/// if the two forms differ by more than 1e-12.
RwBias exact_bias_rw(const Graph& g);

/// (1/b) cov(s(Y), q(U)) over directed edge-ends (U, Y).
double exact_var_rw(const Graph& g, std::size_t b);

struct SmallBudgetCondition {
  bool holds = false;
  bool determinate = false;  // false when a label class is empty
  bool first = false;        // E[d|1] <= E[d|0] and truth <= 1/2
  bool second = false;       // E[d|1] >= E[d|0] and truth >= 1/2
  double mean_degree_label1 = 0.0;
  double mean_degree_label0 = 0.0;
  double fraction = 0.0;
  double mean_degree = 0.0;
};

SmallBudgetCondition small_budget_condition(const Graph& g);

struct MseRow {
  Estimator estimator = Estimator::Intent;
  std::size_t budget = 0;
  std::size_t walk_length = 0;
  double mse = 0.0;
  double bias = 0.0;
  double variance = 0.0;  // sample variance, 1/(n-1)
  std::size_t trials = 0;
  double mse_se = 0.0;
  double bias_se = 0.0;
};

struct MseTable {
  double true_fraction = 0.0;
  std::vector<MseRow> rows;
  const MseRow& at(Estimator e, std::size_t b) const;
};

struct MseOptions {
  std::size_t walk_length = 1000;
  /// Paired mode: every estimator sees the same seed for a given (b, trial).
  bool paired = false;
  unsigned threads = 1;
};

/// Per (estimator, b): empirical MSE, bias and variance over `trials`
/// independent polls against the census truth. Seeds are derived from
/// (seed, estimator, b, trial), so results do not depend on threads.
MseTable mse_experiment(const Graph& g, std::span<const Estimator> estimators, std::span<const std::size_t> budgets,
                        std::size_t trials, std::uint64_t seed, const MseOptions& opt = {});

/// Columns graph_id, alpha_or_model, r_kk, p_ks, estimator, budget, mse, bias, var, trials.
void write_mse_csv_header(std::ostream& out);
void write_mse_csv_rows(const MseTable& t, const std::string& graph_id, const std::string& model, double rkk,
                        double pks, std::ostream& out);

/// MSE(a) <= MSE(b) up to `sigmas` combined standard errors.
inline bool mse_less(const MseRow& a, const MseRow& b, double sigmas = 3.0) {
  return a.mse <= b.mse + sigmas * std::hypot(a.mse_se, b.mse_se);
}

}  // namespace fpsis
