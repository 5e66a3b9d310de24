#include "fpsis/meanfield.hpp"

#include <sstream>
#include <stdexcept>

namespace fpsis {

void MfdParams::validate() const {
  SisConfig{nu, delta, activation, rule, NeighborMode::UnbiasedDegree}.validate();
  if (!(M >= 1.0)) throw std::invalid_argument("M must be at least 1");
  if (stats.classes.count() == 0) throw std::invalid_argument("degree statistics are empty");
}

MfdParams MfdParams::from(const DegreeStats& stats, const SisConfig& cfg) {
  MfdParams p;
  p.nu = cfg.nu;
  p.delta = cfg.delta;
  p.M = static_cast<double>(stats.node_count);
  p.activation = cfg.activation;
  p.rule = cfg.rule;
  p.stats = stats;
  return p;
}

Eigen::VectorXd contagion_weights(const DegreeStats& s, Rule rule) {
  return rule == Rule::NonMonophilic ? s.P : s.z_dist;
}

Eigen::VectorXd activation_multipliers(const DegreeStats& s, Activation a) {
  switch (a) {
    case Activation::X: return Eigen::VectorXd::Ones(s.P.size());
    case Activation::Y: return s.k() / s.mean_degree;
    case Activation::Z: return s.z_dist.cwiseQuotient(s.P);
  }
  return {};
}

double theta_X(const Eigen::VectorXd& x, const DegreeStats& s) { return s.P.dot(x); }
double theta_Z(const Eigen::VectorXd& x, const DegreeStats& s) { return s.z_dist.dot(x); }

MfdModel MfdModel::from(const MfdParams& p) {
  MfdModel m;
  m.k = p.stats.k();
  m.w = contagion_weights(p.stats, p.rule);
  m.c = activation_multipliers(p.stats, p.activation);
  m.nu = p.nu;
  m.delta = p.delta;
  m.D = p.D();
  m.h = 1.0 / p.M;
  return m;
}

namespace {

void check_unit_box(const Eigen::VectorXd& x) {
  constexpr double eps = 1e-12;
  if (x.minCoeff() < -eps || x.maxCoeff() > 1.0 + eps) {
    std::ostringstream msg;
    msg << "mean-field iterate left [0,1] (min " << x.minCoeff() << ", max " << x.maxCoeff()
        << "); step size 1/M too large for these rates";
    throw NumericalError(msg.str());
  }
}

}  // namespace

Eigen::VectorXd mfd_step(const MfdParams& p, const Eigen::VectorXd& x) {
  Eigen::VectorXd next = MfdModel::from(p).step(x);
  check_unit_box(next);
  return next;
}

std::size_t ticks_per_sweep(double M) { return static_cast<std::size_t>(std::llround(M)); }

std::vector<Eigen::VectorXd> mfd_ticks(const MfdParams& p, const Eigen::VectorXd& x0, std::size_t ticks,
                                       std::size_t every) {
  if (every == 0) throw std::invalid_argument("mfd_ticks: recording interval must be positive");
  if (x0.size() != p.stats.classes.count()) throw std::invalid_argument("x0 dimension does not match degree classes");
  check_unit_box(x0);
  const MfdModel model = MfdModel::from(p);
  std::vector<Eigen::VectorXd> out{x0};
  Eigen::VectorXd x = x0;
  for (std::size_t n = 1; n <= ticks; ++n) {
    x = model.step(x);
    check_unit_box(x);
    if (n % every == 0 || n == ticks) out.push_back(x);
  }
  return out;
}

std::vector<Eigen::VectorXd> mfd_trajectory(const MfdParams& p, const Eigen::VectorXd& x0, std::size_t sweeps) {
  const std::size_t per = ticks_per_sweep(p.M);
  return mfd_ticks(p, x0, sweeps * per, per);
}

ThresholdResult critical_threshold(const DegreeStats& s, Rule rule) {
  const double mean = contagion_weights(s, rule).dot(s.k());
  return {s.max_degree / mean, rule};
}

StationaryPoint stationary_point(const DegreeStats& s, Rule rule, double lambda) {
  const Eigen::VectorXd w = contagion_weights(s, rule);
  const Eigen::ArrayXd a = s.k().array() * (lambda / s.max_degree);
  StationaryPoint out;
  out.x = Eigen::VectorXd::Zero(w.size());
  if (!(lambda > critical_threshold(s, rule).lambda_star)) return out;

  auto xstar = [&](double theta) -> Eigen::ArrayXd { return (a * theta) / (1.0 + a * theta); };
  auto g = [&](double theta) { return w.dot(xstar(theta).matrix()) - theta; };

  double lo = 0.0, hi = 1.0;
  int it = 0;
  for (; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (g(mid) > 0.0 ? lo : hi) = mid;
  }
  const double theta = 0.5 * (lo + hi);
  if (hi - lo > 1e-12 || std::abs(g(theta)) > 1e-10) {
    std::ostringstream msg;
    msg << "stationary solve did not converge: lambda=" << lambda << " theta=" << theta << " bracket=" << hi - lo
        << " residual=" << g(theta);
    throw NumericalError(msg.str());
  }
  out.theta = theta;
  out.x = xstar(theta).matrix();
  out.rho = s.P.dot(out.x);
  out.iterations = it;
  return out;
}

double stationary_fraction(const MfdParams& p) { return stationary_point(p.stats, p.rule, p.lambda()).rho; }

std::vector<BifurcationPoint> bifurcation_scan(const DegreeStats& s, Rule rule, std::span<const double> grid) {
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (grid[i] < grid[i - 1]) throw std::invalid_argument("bifurcation grid must be ascending");
  std::vector<BifurcationPoint> out;
  out.reserve(grid.size());
  for (double l : grid) out.push_back({l, stationary_point(s, rule, l).rho});
  return out;
}

}  // namespace fpsis
