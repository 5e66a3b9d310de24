#include "fpsis/tracking.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "fpsis/errors.hpp"

namespace fpsis {

Eigen::VectorXd PolynomialDynamics::operator()(const Eigen::VectorXd& x) const {
  Eigen::VectorXd out = A0 + A1 * x;
  for (std::size_t i = 0; i < A2.size(); ++i) out(i) += x.dot(A2[i] * x);
  return out;
}

void PolynomialDynamics::validate() const {
  const Eigen::Index d = A1.rows();
  if (d == 0 || A1.cols() != d || A0.size() != d) throw std::invalid_argument("polynomial dynamics: inconsistent A0/A1");
  if (!A2.empty()) {
    if (static_cast<Eigen::Index>(A2.size()) != d) throw std::invalid_argument("polynomial dynamics: A2 needs D slices");
    for (const auto& B : A2)
      if (B.rows() != d || B.cols() != d) throw std::invalid_argument("polynomial dynamics: A2 slice is not D x D");
  }
}

PolynomialDynamics build_dynamics(const MfdParams& p, double h) {
  p.validate();
  if (!(h > 0.0)) throw std::invalid_argument("build_dynamics: step must be positive");
  const MfdModel m = MfdModel::from(p);
  const Eigen::Index d = m.k.size();
  const Eigen::VectorXd a = h * m.c.cwiseProduct(m.k) * (m.nu / m.D);  // theta coefficient per class

  PolynomialDynamics f;
  f.A0 = Eigen::VectorXd::Zero(d);
  f.A1 = a * m.w.transpose();
  f.A1.diagonal().array() += 1.0 - h * m.delta * m.c.array();
  if (m.nu > 0.0) {
    f.A2.assign(d, Eigen::MatrixXd::Zero(d, d));
    for (Eigen::Index i = 0; i < d; ++i) f.A2[i].row(i) = -a(i) * m.w.transpose();
  }
  if (!maps_unit_cube(f)) throw NumericalError("build_dynamics: step leaves [0,1]^D; use more substeps per sweep");
  return f;
}

PolynomialDynamics build_dynamics(const MfdParams& p) { return build_dynamics(p, 1.0 / p.M); }

bool maps_unit_cube(const PolynomialDynamics& f, std::size_t random_points, std::uint64_t seed) {
  const Eigen::Index d = f.dim();
  constexpr double slack = 1e-12;
  auto inside = [&](const Eigen::VectorXd& x) {
    const Eigen::VectorXd y = f(x);
    return y.minCoeff() >= -slack && y.maxCoeff() <= 1.0 + slack;
  };
  if (d <= 12) {
    for (std::uint64_t mask = 0; mask < (1ULL << d); ++mask) {
      Eigen::VectorXd x(d);
      for (Eigen::Index i = 0; i < d; ++i) x(i) = (mask >> i) & 1ULL;
      if (!inside(x)) return false;
    }
  } else {
    if (!inside(Eigen::VectorXd::Zero(d)) || !inside(Eigen::VectorXd::Ones(d))) return false;
    for (Eigen::Index i = 0; i < d; ++i) {
      Eigen::VectorXd x = Eigen::VectorXd::Ones(d);
      x(i) = 0.0;
      if (!inside(x) || !inside(Eigen::VectorXd::Unit(d, i))) return false;
    }
  }
  Rng rng(seed);
  for (std::size_t n = 0; n < random_points; ++n) {
    Eigen::VectorXd corner(d), interior(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      corner(i) = bernoulli(rng, 0.5) ? 1.0 : 0.0;
      interior(i) = uniform01(rng);
    }
    if (!inside(corner) || !inside(interior)) return false;
  }
  return true;
}

int substeps_per_sweep(const MfdParams& p) {
  const double worst = activation_multipliers(p.stats, p.activation).maxCoeff() * (p.nu + p.delta);
  return std::max(1, static_cast<int>(std::ceil(worst - 1e-12)));
}

GaussianMoments gaussian_quadratic_moments(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                           const PolynomialDynamics& f) {
  f.validate();
  const Eigen::Index d = f.dim();
  if (mean.size() != d || cov.rows() != d || cov.cols() != d)
    throw std::invalid_argument("gaussian_quadratic_moments: dimension mismatch");

  // Around the mean, f_i = f_i(mu) + g_i'e + e'B_i e with e ~ N(0, cov).
  // Odd central moments vanish; Isserlis gives cov(e'B_i e, e'B_j e) = 2 tr(B_i S B_j S).
  GaussianMoments m;
  const Eigen::VectorXd f_mu = f(mean);
  Eigen::MatrixXd G = f.A1;  // rows g_i'
  m.mean = f_mu;
  Eigen::MatrixXd cov_f = Eigen::MatrixXd::Zero(d, d);
  if (!f.linear()) {
    std::vector<Eigen::MatrixXd> BS(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      const Eigen::MatrixXd B = 0.5 * (f.A2[i] + f.A2[i].transpose());
      G.row(i) += 2.0 * (B * mean).transpose();
      BS[i] = B * cov;
      m.mean(i) += BS[i].trace();
    }
    for (Eigen::Index i = 0; i < d; ++i)
      for (Eigen::Index j = 0; j <= i; ++j) {
        const double t = 2.0 * BS[i].cwiseProduct(BS[j].transpose()).sum();
        cov_f(i, j) = t;
        cov_f(j, i) = t;
      }
  }
  cov_f += G * cov * G.transpose();
  m.second = cov_f + m.mean * m.mean.transpose();
  return m;
}

Eigen::MatrixXd psd_repair(const Eigen::MatrixXd& H, double tol) {
  const Eigen::MatrixXd S = 0.5 * (H + H.transpose());
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(S);
  if (es.info() != Eigen::Success) throw NumericalError("covariance eigendecomposition failed");
  const double lo = es.eigenvalues().minCoeff();
  if (lo >= 0.0) return S;
  if (lo < -tol) {
    std::ostringstream msg;
    msg << "covariance has eigenvalue " << lo << " below -" << tol;
    throw NumericalError(msg.str());
  }
  const Eigen::VectorXd ev = es.eigenvalues().cwiseMax(0.0);
  Eigen::MatrixXd out = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
  return 0.5 * (out + out.transpose());
}

FilterState predict(const FilterState& s, const PolynomialDynamics& f, const Eigen::MatrixXd& Q) {
  const GaussianMoments m = gaussian_quadratic_moments(s.mean, s.cov, f);
  return {m.mean, psd_repair(m.covariance() + Q)};
}

FilterState update(const FilterState& prior, const Eigen::VectorXd& y, const Eigen::MatrixXd& C,
                   const Eigen::MatrixXd& R, Innovation* info) {
  const Eigen::Index d = prior.mean.size();
  if (C.cols() != d || C.rows() != y.size() || R.rows() != y.size() || R.cols() != y.size())
    throw std::invalid_argument("update: dimension mismatch");
  if (y.size() == 0) {
    if (info) *info = {};
    return prior;
  }
  const Eigen::MatrixXd HCt = prior.cov * C.transpose();
  const Eigen::MatrixXd S = 0.5 * (C * HCt + (C * HCt).transpose()) + R;
  const Eigen::LLT<Eigen::MatrixXd> llt(S);
  if (llt.info() != Eigen::Success) throw NumericalError("update: innovation covariance is not positive definite");
  const Eigen::MatrixXd K = llt.solve(HCt.transpose()).transpose();
  const Eigen::VectorXd r = y - C * prior.mean;

  FilterState post;
  post.mean = prior.mean + K * r;
  const Eigen::MatrixXd IKC = Eigen::MatrixXd::Identity(d, d) - K * C;
  post.cov = psd_repair(IKC * prior.cov * IKC.transpose() + K * R * K.transpose());
  if (info) {
    info->residual = r;
    info->S = S;
    info->nis = r.dot(llt.solve(r));
  }
  return post;
}

std::string_view to_string(ObservationMode m) { return m == ObservationMode::Uniform ? "uniform" : "rds"; }

ObservationMode parse_observation_mode(std::string_view s) {
  if (s == "uniform") return ObservationMode::Uniform;
  if (s == "rds") return ObservationMode::Rds;
  throw std::invalid_argument("observation mode: expected uniform or rds, got '" + std::string(s) + "'");
}

void ObservationPlan::validate(const DegreeClasses& classes) const {
  if (samples.size() != 1 && samples.size() != static_cast<std::size_t>(classes.count()))
    throw std::invalid_argument("observation plan: samples must have one entry or one per degree class");
  for (int s : samples)
    if (s < 1) throw std::invalid_argument("observation plan: every tracked class needs at least one sample");
  if (mode == ObservationMode::Rds && rds_length == 0)
    throw std::invalid_argument("observation plan: rds mode needs a positive chain length");
  if (!(epsilon > 0.0)) throw std::invalid_argument("observation plan: epsilon must be positive");
}

Observer::Observer(const Graph& g, ObservationPlan plan)
    : g_(g), plan_(std::move(plan)), classes_(DegreeClasses::of(g)), members_(classes_.count()) {
  plan_.validate(classes_);
  for (Node v = 0; v < static_cast<Node>(g.node_count()); ++v) members_[classes_.index(g.degree(v))].push_back(v);
  if (plan_.mode == ObservationMode::Rds) strength_ = node_strengths(g, plan_.rds_weights);
}

Observation Observer::observe(std::span<const std::uint8_t> states, const Eigen::VectorXd& prior_mean,
                              Rng& rng) const {
  const int d = classes_.count();
  if (states.size() != g_.node_count() || prior_mean.size() != d)
    throw std::invalid_argument("observe: dimension mismatch");
  Eigen::VectorXd hits = Eigen::VectorXd::Zero(d), weight = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd n = Eigen::VectorXd::Zero(d);

  if (plan_.mode == ObservationMode::Uniform) {
    for (int c = 0; c < d; ++c) {
      const auto& mem = members_[c];
      const int draws = plan_.samples_for(c);
      for (int i = 0; i < draws; ++i) hits(c) += states[mem[uniform_index(rng, mem.size())]];
      weight(c) = n(c) = draws;
    }
  } else {
    const Node start = sample_uniform_node(g_, rng);
    for (Node v : rds_chain(g_, plan_.rds_weights, plan_.rds_length, start, rng)) {
      const int c = classes_.index(g_.degree(v));
      hits(c) += states[v] / strength_[v];
      weight(c) += 1.0 / strength_[v];
      n(c) += 1.0;
    }
  }

  Observation o;
  o.raw = Eigen::VectorXd::Constant(d, std::numeric_limits<double>::quiet_NaN());
  for (int c = 0; c < d; ++c)
    if (n(c) > 0) {
      o.raw(c) = hits(c) / weight(c);
      o.observed.push_back(c);
    }
  const auto m = static_cast<Eigen::Index>(o.observed.size());
  o.y.resize(m);
  o.C = Eigen::MatrixXd::Zero(m, d);
  o.R = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index r = 0; r < m; ++r) {
    const int c = o.observed[r];
    const double p = std::clamp(prior_mean(c), 0.0, 1.0);
    o.y(r) = o.raw(c);
    o.C(r, c) = 1.0;
    o.R(r, r) = std::max(p * (1.0 - p), plan_.epsilon) / n(c);
  }
  return o;
}

Observation observe(const Graph& g, const ObservationPlan& plan, const Eigen::VectorXd& prior_mean,
                    std::uint64_t seed) {
  Rng rng(seed);
  return Observer(g, plan).observe(g.labels(), prior_mean, rng);
}

Eigen::MatrixXd process_noise(const MfdParams& p, const DegreeClasses& classes, const Eigen::VectorXd& x,
                              double scale) {
  const MfdModel m = MfdModel::from(p);
  const Eigen::VectorXd xc = x.cwiseMax(0.0).cwiseMin(1.0);
  const double theta = m.w.dot(xc);
  const Eigen::ArrayXd flip =
      m.c.array() * ((1.0 - xc.array()) * m.k.array() * (m.nu * theta / m.D) + m.delta * xc.array());
  return (scale * flip / classes.size.cast<double>().array()).matrix().asDiagonal();
}

namespace {

Eigen::VectorXd clip01(const Eigen::VectorXd& x) { return x.cwiseMax(0.0).cwiseMin(1.0); }

double weighted_rmse(const Eigen::VectorXd& est, const Eigen::VectorXd& truth, const Eigen::VectorXd& P) {
  double num = 0.0, den = 0.0;
  for (Eigen::Index k = 0; k < est.size(); ++k)
    if (!std::isnan(est(k))) {
      num += P(k) * (est(k) - truth(k)) * (est(k) - truth(k));
      den += P(k);
    }
  return den > 0.0 ? std::sqrt(num / den) : 0.0;
}

}  // namespace

TrackingResult track(const Graph& g, const SisConfig& cfg, const TrackingOptions& opt, std::uint64_t seed) {
  if (opt.sweeps == 0) throw std::invalid_argument("track: need at least one sweep");
  if (!(opt.q_scale >= 0.0)) throw std::invalid_argument("track: q_scale must be non-negative");
  const DegreeStats stats = degree_stats(g);
  const MfdParams params = MfdParams::from(stats, cfg);
  const Observer observer(g, opt.plan);

  TrackingResult res;
  res.classes = stats.classes;
  res.P = stats.P;
  res.substeps = opt.substeps > 0 ? opt.substeps : substeps_per_sweep(params);
  const PolynomialDynamics f = build_dynamics(params, 1.0 / res.substeps);
  const std::size_t ticks = ticks_per_sweep(params.M);

  SisSimulator sim(g, cfg, derive_seed(seed, {0}));
  Rng obs_rng(derive_seed(seed, {1}));

  const double rho0 = stats.infected_fraction;
  FilterState filt{Eigen::VectorXd::Constant(stats.classes.count(), rho0),
                   Eigen::VectorXd((rho0 * (1.0 - rho0)) / stats.classes.size.cast<double>().array()).asDiagonal()};
  FilterState open = filt;

  double nis_sum = 0.0, nis_dim = 0.0;
  for (std::size_t sweep = 1; sweep <= opt.sweeps; ++sweep) {
    sim.run(ticks);
    for (int s = 0; s < res.substeps; ++s) {
      const Eigen::MatrixXd Qf = process_noise(params, stats.classes, filt.mean, opt.q_scale / res.substeps);
      const Eigen::MatrixXd Qo = process_noise(params, stats.classes, open.mean, opt.q_scale / res.substeps);
      filt = predict(filt, f, Qf);
      open = predict(open, f, Qo);
    }
    const Observation o = observer.observe(sim.states(), filt.mean, obs_rng);
    Innovation inn;
    filt = update(filt, o.y, o.C, o.R, &inn);

    TrackPoint pt;
    pt.sweep = sweep;
    pt.truth = sim.population().x;
    pt.observation = o.raw;
    pt.filtered = filt;
    pt.prediction_only = open.mean;
    pt.nis = inn.nis;
    pt.observed = static_cast<int>(o.observed.size());
    nis_sum += inn.nis;
    nis_dim += pt.observed;

    res.rmse_filter += weighted_rmse(clip01(filt.mean), pt.truth, stats.P);
    res.rmse_prediction += weighted_rmse(clip01(open.mean), pt.truth, stats.P);
    res.rmse_observation += weighted_rmse(o.raw, pt.truth, stats.P);
    res.points.push_back(std::move(pt));
  }
  const double T = static_cast<double>(opt.sweeps);
  res.rmse_filter /= T;
  res.rmse_prediction /= T;
  res.rmse_observation /= T;
  res.mean_nis = nis_sum / T;
  res.expected_nis = nis_dim / T;
  return res;
}

void write_tracking_csv(const TrackingResult& r, std::ostream& out) {
  const auto old = out.precision(17);
  out << "sweep,k,truth,observation,filtered_mean,filtered_std\n";
  for (const auto& p : r.points)
    for (int c = 0; c < r.classes.count(); ++c) {
      out << p.sweep << ',' << r.classes.degree[c] << ',' << p.truth(c) << ',';
      if (!std::isnan(p.observation(c))) out << p.observation(c);
      out << ',' << std::clamp(p.filtered.mean(c), 0.0, 1.0) << ',' << std::sqrt(std::max(0.0, p.filtered.cov(c, c)))
          << '\n';
    }
  out.precision(old);
}

}  // namespace fpsis
