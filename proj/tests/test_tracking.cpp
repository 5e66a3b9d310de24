#include "doctest.h"

#include <Eigen/Cholesky>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fpsis/tracking.hpp"

using namespace fpsis;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i)
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = 2.0 * uniform01(rng) - 1.0;
  return m;
}

Eigen::MatrixXd random_spd(Eigen::Index d, double scale, Rng& rng) {
  const Eigen::MatrixXd L = random_matrix(d, d, rng);
  return scale * (L * L.transpose() + 0.1 * Eigen::MatrixXd::Identity(d, d));
}

PolynomialDynamics random_quadratic(Eigen::Index d, Rng& rng) {
  PolynomialDynamics f;
  f.A0 = random_matrix(d, 1, rng);
  f.A1 = random_matrix(d, d, rng);
  for (Eigen::Index i = 0; i < d; ++i) f.A2.push_back(random_matrix(d, d, rng));
  return f;
}

// Noncentral Gaussian product moment E[x_{i1} ... x_{in}] by the recursion
// E[x_a R] = mu_a E[R] + sum_{b in R} S_ab E[R \ b].
double product_moment(std::vector<int> idx, const Eigen::VectorXd& mu, const Eigen::MatrixXd& S) {
  if (idx.empty()) return 1.0;
  const int a = idx.back();
  idx.pop_back();
  double out = mu(a) * product_moment(idx, mu, S);
  for (std::size_t j = 0; j < idx.size(); ++j) {
    std::vector<int> rest = idx;
    rest.erase(rest.begin() + static_cast<long>(j));
    out += S(a, idx[j]) * product_moment(rest, mu, S);
  }
  return out;
}

struct Monomial {
  double coef;
  std::vector<int> idx;
};

std::vector<Monomial> monomials(const PolynomialDynamics& f, int i) {
  std::vector<Monomial> m{{f.A0(i), {}}};
  const int d = static_cast<int>(f.dim());
  for (int a = 0; a < d; ++a) m.push_back({f.A1(i, a), {a}});
  if (!f.linear())
    for (int a = 0; a < d; ++a)
      for (int b = 0; b < d; ++b) m.push_back({f.A2[i](a, b), {a, b}});
  return m;
}

GaussianMoments isserlis_oracle(const Eigen::VectorXd& mu, const Eigen::MatrixXd& S, const PolynomialDynamics& f) {
  const int d = static_cast<int>(f.dim());
  GaussianMoments g{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d)};
  for (int i = 0; i < d; ++i) {
    const auto mi = monomials(f, i);
    for (const auto& t : mi) g.mean(i) += t.coef * product_moment(t.idx, mu, S);
    for (int j = 0; j < d; ++j)
      for (const auto& t : mi)
        for (const auto& u : monomials(f, j)) {
          std::vector<int> idx = t.idx;
          idx.insert(idx.end(), u.idx.begin(), u.idx.end());
          g.second(i, j) += t.coef * u.coef * product_moment(idx, mu, S);
        }
  }
  return g;
}

MfdParams params_for(const Graph& g, double nu, double delta, Activation a, Rule r) {
  return MfdParams::from(degree_stats(g), SisConfig{nu, delta, a, r, NeighborMode::Graph});
}

Graph labeled_power_law(std::size_t n, std::uint64_t seed, double fraction) {
  return assign_labels(largest_component(generate_configuration_model(n, 2.1, 1, 20, seed)), fraction, 0.0, 1.0,
                       seed + 1)
      .graph;
}

}  // namespace

TEST_CASE("dynamics built from the mean-field map") {
  const Graph g = labeled_power_law(1500, 1, 0.2);
  Rng rng(2);
  for (Rule r : {Rule::NonMonophilic, Rule::Monophilic})
    for (Activation a : {Activation::X, Activation::Y, Activation::Z}) {
      const MfdParams p = params_for(g, 0.8, 0.3, a, r);
      const PolynomialDynamics f = build_dynamics(p);
      CHECK(f(Eigen::VectorXd::Zero(f.dim())).cwiseAbs().maxCoeff() == 0.0);
      const MfdModel m = MfdModel::from(p);
      for (int t = 0; t < 5; ++t) {
        Eigen::VectorXd x(f.dim());
        for (auto& v : x) v = uniform01(rng);
        if (a == Activation::X) CHECK((f(x) - mfd_step(p, x)).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((f(x) - m.step(x)).cwiseAbs().maxCoeff() < 1e-14);
        const int S = substeps_per_sweep(p);
        MfdModel sub = m;
        sub.h = 1.0 / S;
        CHECK((build_dynamics(p, 1.0 / S)(x) - sub.step(x)).cwiseAbs().maxCoeff() < 1e-14);
      }
    }

  SUBCASE("no contagion is linear decay") {
    const MfdParams p = params_for(g, 0.0, 0.4, Activation::X, Rule::NonMonophilic);
    const PolynomialDynamics f = build_dynamics(p);
    CHECK(f.linear());
    const Eigen::VectorXd x = Eigen::VectorXd::Constant(f.dim(), 0.7);
    CHECK((f(x) - (1.0 - 0.4 / p.M) * x).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("oversized step is rejected") {
    const MfdParams p = params_for(g, 1.0, 1.0, Activation::X, Rule::NonMonophilic);
    CHECK(substeps_per_sweep(p) == 2);
    CHECK_NOTHROW(build_dynamics(p, 0.5));
    CHECK_THROWS_AS(build_dynamics(p, 1.0 / 0.4), NumericalError);
  }
}

TEST_CASE("gaussian quadratic moments") {
  SUBCASE("scalar square") {
    PolynomialDynamics f{Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Zero(1, 1), {Eigen::MatrixXd::Ones(1, 1)}};
    const double mu = 0.7, s2 = 0.3;
    const auto m = gaussian_quadratic_moments(Eigen::VectorXd::Constant(1, mu), Eigen::MatrixXd::Constant(1, 1, s2), f);
    CHECK(m.mean(0) == doctest::Approx(mu * mu + s2).epsilon(1e-15));
    CHECK(m.second(0, 0) == doctest::Approx(std::pow(mu, 4) + 6 * mu * mu * s2 + 3 * s2 * s2).epsilon(1e-14));
  }
  SUBCASE("degenerate gaussian") {
    Rng rng(3);
    const auto f = random_quadratic(3, rng);
    const Eigen::VectorXd mu = random_matrix(3, 1, rng);
    const auto m = gaussian_quadratic_moments(mu, Eigen::MatrixXd::Zero(3, 3), f);
    CHECK((m.mean - f(mu)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((m.second - f(mu) * f(mu).transpose()).cwiseAbs().maxCoeff() < 1e-14);
  }
  SUBCASE("isserlis enumeration") {
    Rng rng(4);
    for (int d = 1; d <= 4; ++d)
      for (int rep = 0; rep < 5; ++rep) {
        const auto f = random_quadratic(d, rng);
        const Eigen::VectorXd mu = random_matrix(d, 1, rng);
        const Eigen::MatrixXd S = random_spd(d, 0.3, rng);
        const auto m = gaussian_quadratic_moments(mu, S, f);
        const auto o = isserlis_oracle(mu, S, f);
        CHECK((m.mean - o.mean).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((m.second - o.second).cwiseAbs().maxCoeff() < 1e-10);
      }
  }
  SUBCASE("monte carlo") {
    Rng rng(5);
    const auto f = random_quadratic(3, rng);
    const Eigen::VectorXd mu = random_matrix(3, 1, rng);
    const Eigen::MatrixXd S = random_spd(3, 0.2, rng);
    const Eigen::MatrixXd L = S.llt().matrixL();
    const auto m = gaussian_quadratic_moments(mu, S, f);

    const int n = 1'000'000;
    Eigen::VectorXd s1 = Eigen::VectorXd::Zero(3);
    Eigen::MatrixXd s2 = Eigen::MatrixXd::Zero(3, 3), s4 = Eigen::MatrixXd::Zero(3, 3);
    Eigen::VectorXd sq = Eigen::VectorXd::Zero(3);
    for (int t = 0; t < n; ++t) {
      Eigen::VectorXd z(3);
      for (auto& v : z) v = standard_normal(rng);
      const Eigen::VectorXd y = f(mu + L * z);
      s1 += y;
      sq += y.cwiseProduct(y);
      const Eigen::MatrixXd yy = y * y.transpose();
      s2 += yy;
      s4 += yy.cwiseProduct(yy);
    }
    for (int i = 0; i < 3; ++i) {
      const double se = std::sqrt((sq(i) / n - std::pow(s1(i) / n, 2)) / n);
      CHECK(std::abs(s1(i) / n - m.mean(i)) < 3 * se);
      for (int j = 0; j < 3; ++j) {
        const double e = s2(i, j) / n;
        const double se2 = std::sqrt((s4(i, j) / n - e * e) / n);
        CHECK(std::abs(e - m.second(i, j)) < 3 * se2);
      }
    }
  }
}

TEST_CASE("predict") {
  Rng rng(6);
  SUBCASE("linear dynamics give the linear predictor") {
    PolynomialDynamics f{random_matrix(4, 1, rng), random_matrix(4, 4, rng), {}};
    const FilterState s{random_matrix(4, 1, rng), random_spd(4, 0.5, rng)};
    const Eigen::MatrixXd Q = random_spd(4, 0.1, rng);
    const FilterState p = predict(s, f, Q);
    CHECK((p.mean - (f.A0 + f.A1 * s.mean)).cwiseAbs().maxCoeff() < 1e-14);
    CHECK((p.cov - (f.A1 * s.cov * f.A1.transpose() + Q)).cwiseAbs().maxCoeff() < 1e-13);
  }
  SUBCASE("no uncertainty follows the map") {
    const Graph g = labeled_power_law(800, 7, 0.3);
    const MfdParams p = params_for(g, 0.9, 0.2, Activation::X, Rule::Monophilic);
    const PolynomialDynamics f = build_dynamics(p);
    const Eigen::Index d = f.dim();
    FilterState s{Eigen::VectorXd::Constant(d, 0.3), Eigen::MatrixXd::Zero(d, d)};
    Eigen::VectorXd x = s.mean;
    for (int t = 0; t < 50; ++t) {
      s = predict(s, f, Eigen::MatrixXd::Zero(d, d));
      x = mfd_step(p, x);
    }
    CHECK((s.mean - x).cwiseAbs().maxCoeff() < 1e-14);
    CHECK(s.cov.cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("quadratic push-forward against sampling") {
    const auto f = random_quadratic(2, rng);
    const FilterState s{random_matrix(2, 1, rng), random_spd(2, 0.2, rng)};
    const Eigen::MatrixXd Q = random_spd(2, 0.05, rng);
    const FilterState p = predict(s, f, Q);
    const Eigen::MatrixXd L = s.cov.llt().matrixL(), LQ = Q.llt().matrixL();
    const int n = 1'000'000;
    std::vector<Eigen::Vector2d> ys(n);
    Eigen::Vector2d mean = Eigen::Vector2d::Zero();
    for (int t = 0; t < n; ++t) {
      Eigen::Vector2d z(standard_normal(rng), standard_normal(rng)), w(standard_normal(rng), standard_normal(rng));
      ys[t] = f(s.mean + L * z) + LQ * w;
      mean += ys[t];
    }
    mean /= n;
    Eigen::Matrix2d c = Eigen::Matrix2d::Zero(), c2 = Eigen::Matrix2d::Zero();
    for (const auto& y : ys) {
      const Eigen::Matrix2d e = (y - mean) * (y - mean).transpose();
      c += e;
      c2 += e.cwiseProduct(e);
    }
    c /= n;
    c2 /= n;
    for (int i = 0; i < 2; ++i) {
      CHECK(std::abs(mean(i) - p.mean(i)) < 3 * std::sqrt(c(i, i) / n));
      for (int j = 0; j < 2; ++j) CHECK(std::abs(c(i, j) - p.cov(i, j)) < 3 * std::sqrt((c2(i, j) - c(i, j) * c(i, j)) / n));
    }
  }
}

TEST_CASE("psd repair") {
  Eigen::Matrix2d H;
  H << 1.0, 0.0, 0.0, -1e-10;
  const Eigen::MatrixXd r = psd_repair(H);
  CHECK(r(1, 1) >= 0.0);
  CHECK(r(0, 0) == doctest::Approx(1.0));
  H(1, 1) = -1e-6;
  CHECK_THROWS_AS(psd_repair(H), NumericalError);
  Eigen::Matrix2d A;
  A << 2.0, 1.0, 0.0, 2.0;
  const Eigen::MatrixXd s = psd_repair(A);
  CHECK(s(0, 1) == s(1, 0));
}

TEST_CASE("update") {
  SUBCASE("scalar hand algebra") {
    const FilterState prior{Eigen::VectorXd::Ones(1), Eigen::MatrixXd::Ones(1, 1)};
    Innovation inn;
    const FilterState post = update(prior, Eigen::VectorXd::Zero(1), Eigen::MatrixXd::Ones(1, 1),
                                    Eigen::MatrixXd::Ones(1, 1), &inn);
    CHECK(post.mean(0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(post.cov(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(inn.nis == doctest::Approx(0.5).epsilon(1e-15));
  }
  Rng rng(8);
  const FilterState prior{random_matrix(3, 1, rng), random_spd(3, 0.5, rng)};
  const Eigen::VectorXd y = random_matrix(3, 1, rng);
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  SUBCASE("uninformative observation") {
    const FilterState post = update(prior, y, I, 1e14 * I);
    CHECK((post.mean - prior.mean).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((post.cov - prior.cov).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("exact observation") {
    const FilterState post = update(prior, y, I, 1e-14 * I);
    CHECK((post.mean - y).cwiseAbs().maxCoeff() < 1e-10);
  }
  SUBCASE("empty observation") {
    const FilterState post = update(prior, Eigen::VectorXd(0), Eigen::MatrixXd(0, 3), Eigen::MatrixXd(0, 0));
    CHECK(post.mean == prior.mean);
  }
  SUBCASE("singular innovation covariance") {
    const FilterState flat{prior.mean, Eigen::MatrixXd::Zero(3, 3)};
    CHECK_THROWS_AS(update(flat, y, I, Eigen::MatrixXd::Zero(3, 3)), NumericalError);
  }
}

TEST_CASE("linear dynamics reproduce a textbook Kalman filter") {
  Rng rng(9);
  const int d = 4, m = 3;
  PolynomialDynamics f{random_matrix(d, 1, rng), 0.5 * random_matrix(d, d, rng), {}};
  const Eigen::MatrixXd Q = random_spd(d, 0.05, rng), R = random_spd(m, 0.1, rng);
  const Eigen::MatrixXd C = random_matrix(m, d, rng);

  FilterState s{Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Identity(d, d)};
  Eigen::VectorXd x = s.mean;
  Eigen::MatrixXd P = s.cov;
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Eigen::VectorXd y = random_matrix(m, 1, rng);
    s = update(predict(s, f, Q), y, C, R);

    x = f.A0 + f.A1 * x;
    P = f.A1 * P * f.A1.transpose() + Q;
    const Eigen::MatrixXd K = P * C.transpose() * (C * P * C.transpose() + R).inverse();
    x = x + K * (y - C * x);
    P = (Eigen::MatrixXd::Identity(d, d) - K * C) * P;

    worst = std::max({worst, (s.mean - x).cwiseAbs().maxCoeff(), (s.cov - P).cwiseAbs().maxCoeff()});
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("observations") {
  // one degree class of 1000 nodes, 300 infected
  std::vector<std::uint8_t> lab(1000, 0);
  for (int i = 0; i < 300; ++i) lab[i * 3] = 1;
  const Graph g = make_cycle(1000).with_labels(lab);
  const Eigen::VectorXd prior = Eigen::VectorXd::Constant(1, 0.3);

  SUBCASE("binomial spread") {
    ObservationPlan plan;
    plan.samples = {100};
    const Observer obs(g, plan);
    Rng rng(10);
    const int n = 10000;
    double s = 0, s2 = 0;
    for (int t = 0; t < n; ++t) {
      const Observation o = obs.observe(g.labels(), prior, rng);
      s += o.y(0);
      s2 += o.y(0) * o.y(0);
    }
    const double var = (s2 - s * s / n) / (n - 1);
    CHECK(std::abs(var / 0.0021 - 1.0) < 0.1);
    const Observation o = obs.observe(g.labels(), prior, rng);
    CHECK(o.R(0, 0) == doctest::Approx(0.0021).epsilon(1e-14));
    CHECK(o.C(0, 0) == 1.0);
  }
  SUBCASE("large samples converge; saturated classes are exact") {
    ObservationPlan plan;
    plan.samples = {200000};
    CHECK(std::abs(observe(g, plan, prior, 11).y(0) - 0.3) < 0.01);
    plan.samples = {3};
    const Graph all = g.with_labels(std::vector<std::uint8_t>(1000, 1));
    const Observation o = observe(all, plan, Eigen::VectorXd::Ones(1), 12);
    CHECK(o.y(0) == 1.0);
    CHECK(o.R(0, 0) == doctest::Approx(1e-4 / 3));
  }
  SUBCASE("rds chain") {
    const Graph h = labeled_power_law(3000, 13, 0.3);
    const DegreeStats st = degree_stats(h);
    ObservationPlan plan;
    plan.mode = ObservationMode::Rds;
    plan.rds_length = 200000;
    const Observation o = observe(h, plan, st.P, 14);
    CHECK(o.observed.size() >= 2);
    const Eigen::VectorXd x = population_state(h).x;
    for (std::size_t r = 0; r < o.observed.size(); ++r) {
      const int c = o.observed[r];
      if (st.classes.size(c) >= 200) CHECK(std::abs(o.y(r) - x(c)) < 0.05);
    }
    plan.rds_length = 5;
    const Observation few = observe(h, plan, st.P, 15);
    CHECK(few.observed.size() <= 5);
    CHECK(few.C.rows() == static_cast<Eigen::Index>(few.observed.size()));
  }
  SUBCASE("plan validation") {
    ObservationPlan plan;
    plan.samples = {0};
    CHECK_THROWS_AS(Observer(g, plan), std::invalid_argument);
    plan.samples = {5, 5};
    CHECK_THROWS_AS(Observer(g, plan), std::invalid_argument);
    plan.samples = {5};
    plan.mode = ObservationMode::Rds;
    CHECK_THROWS_AS(Observer(g, plan), std::invalid_argument);
    CHECK(parse_observation_mode(to_string(ObservationMode::Rds)) == ObservationMode::Rds);
  }
}

TEST_CASE("process noise") {
  const Graph g = labeled_power_law(800, 16, 0.3);
  const DegreeStats st = degree_stats(g);
  const MfdParams p = params_for(g, 0.7, 0.2, Activation::X, Rule::NonMonophilic);
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(st.classes.count(), 0.25);
  const Eigen::MatrixXd Q = process_noise(p, st.classes, x, 2.0);
  const double theta = st.P.dot(x);
  for (int c = 0; c < st.classes.count(); ++c) {
    const double k = st.classes.degree[c];
    const double flip = 0.75 * 0.7 * k * theta / st.max_degree + 0.2 * 0.25;
    CHECK(Q(c, c) == doctest::Approx(2.0 * flip / st.classes.size(c)).epsilon(1e-14));
  }
  CHECK((Q - Eigen::MatrixXd(Q.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("tracking an SIS run") {
  const SisConfig cfg{1.0, 0.05, Activation::X, Rule::NonMonophilic, NeighborMode::Graph};

  SUBCASE("filter beats its observations and the open-loop prediction") {
    double nis = 0.0;
    for (std::uint64_t s = 0; s < 5; ++s) {
      const Graph g = labeled_power_law(1000, 20 + s, 0.1);
      TrackingOptions opt;
      opt.sweeps = 40;
      const TrackingResult r = track(g, cfg, opt, 30 + s);
      CHECK(r.points.size() == 40);
      CHECK(r.rmse_filter < r.rmse_observation);
      CHECK(r.rmse_filter < r.rmse_prediction);
      nis += r.mean_nis / r.expected_nis;
    }
    CHECK(nis / 5 > 0.5);
    CHECK(nis / 5 < 2.0);
  }
  SUBCASE("very precise observations lock the estimate to the truth") {
    const Graph g = labeled_power_law(400, 40, 0.2);
    TrackingOptions opt;
    opt.sweeps = 5;
    opt.plan.samples = {400000};
    opt.plan.epsilon = 1e-12;
    const TrackingResult r = track(g, cfg, opt, 41);
    for (const auto& pt : r.points) CHECK((pt.filtered.mean - pt.truth).cwiseAbs().maxCoeff() < 0.01);
  }
  SUBCASE("same seed, same log") {
    const Graph g = labeled_power_law(500, 50, 0.1);
    TrackingOptions opt;
    opt.sweeps = 6;
    std::ostringstream a, b;
    write_tracking_csv(track(g, cfg, opt, 51), a);
    write_tracking_csv(track(g, cfg, opt, 51), b);
    CHECK(a.str() == b.str());
    std::istringstream in(a.str());
    std::string header;
    std::getline(in, header);
    CHECK(header == "sweep,k,truth,observation,filtered_mean,filtered_std");
    const std::string text = a.str();
    const auto lines = std::count(text.begin(), text.end(), '\n');
    CHECK(lines == 1 + 6 * DegreeClasses::of(g).count());
  }
}
