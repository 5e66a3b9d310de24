#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "fpsis/errors.hpp"
#include "fpsis/graph.hpp"
#include "fpsis/sis.hpp"

namespace fpsis {

struct MfdParams {
  double nu = 0.5;
  double delta = 0.5;
  double M = 1.0;  // network size; one tick advances by 1/M
  Activation activation = Activation::X;
  Rule rule = Rule::NonMonophilic;
  DegreeStats stats;

  double lambda() const { return nu / delta; }
  int D() const { return stats.max_degree; }
  void validate() const;

  static MfdParams from(const DegreeStats& stats, const SisConfig& cfg);
};

/// Contagion weights w: theta = w . x. P(k) for non-monophilic, P(d(Z)=k) for monophilic.
Eigen::VectorXd contagion_weights(const DegreeStats& s, Rule rule);

/// Activation multipliers c_k: 1 (X), k/kbar (Y), P(d(Z)=k)/P(k) (Z).
Eigen::VectorXd activation_multipliers(const DegreeStats& s, Activation a);

double theta_X(const Eigen::VectorXd& x, const DegreeStats& s);
double theta_Z(const Eigen::VectorXd& x, const DegreeStats& s);

/// Degree-class mean-field map for the viral rules, templated on the scalar.
/// drift_k(x) = c_k [ (1 - x_k) nu k theta(x) / D - delta x_k ],  theta = w . x.
struct MfdModel {
  Eigen::VectorXd k;
  Eigen::VectorXd w;
  Eigen::VectorXd c;
  double nu = 0.0;
  double delta = 0.0;
  double D = 1.0;
  double h = 1.0;

  static MfdModel from(const MfdParams& p);

  template <typename Derived>
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> drift(const Eigen::MatrixBase<Derived>& x) const {
    using S = typename Derived::Scalar;
    const S theta = w.cast<S>().dot(x);
    return (c.cast<S>().array() *
            ((S(1) - x.array()) * k.cast<S>().array() * (S(nu) * theta / S(D)) - S(delta) * x.array()))
        .matrix();
  }

  template <typename Derived>
  Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> step(const Eigen::MatrixBase<Derived>& x) const {
    using S = typename Derived::Scalar;
    return x + S(h) * drift(x);
  }
};

/// Generic two-state mean-field step x_k += h c_k [(1 - x_k) P01_k(x) - x_k P10_k(x)]
/// for user-supplied scaled transition probabilities.
template <typename Derived, typename F01, typename F10>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> generic_mfd_step(const Eigen::MatrixBase<Derived>& x,
                                                                            const Eigen::VectorXd& c, double h,
                                                                            F01&& p01, F10&& p10) {
  using S = typename Derived::Scalar;
  Eigen::Matrix<S, Eigen::Dynamic, 1> out = x;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    out(i) += S(h) * S(c(i)) * ((S(1) - x(i)) * p01(x, i) - x(i) * p10(x, i));
  return out;
}

/// One tick. Throws NumericalError if any component leaves [0,1] by more than 1e-12.
Eigen::VectorXd mfd_step(const MfdParams& p, const Eigen::VectorXd& x);

/// Iterates recorded at ticks 0, every, ..., ticks.
std::vector<Eigen::VectorXd> mfd_ticks(const MfdParams& p, const Eigen::VectorXd& x0, std::size_t ticks,
                                       std::size_t every = 1);

/// Iterates at sweeps 0..T, one sweep = round(M) ticks.
std::vector<Eigen::VectorXd> mfd_trajectory(const MfdParams& p, const Eigen::VectorXd& x0, std::size_t sweeps);

std::size_t ticks_per_sweep(double M);

struct ThresholdResult {
  double lambda_star = 0.0;
  Rule rule = Rule::NonMonophilic;
};

/// D / E[d(X)] or D / E[d(Z)].
ThresholdResult critical_threshold(const DegreeStats& s, Rule rule);

struct StationaryPoint {
  double rho = 0.0;
  double theta = 0.0;
  Eigen::VectorXd x;
  int iterations = 0;
};

/// Positive fixed point by bisection on theta; the zero point when lambda <= lambda*.
StationaryPoint stationary_point(const DegreeStats& s, Rule rule, double lambda);
double stationary_fraction(const MfdParams& p);

struct BifurcationPoint {
  double lambda = 0.0;
  double rho = 0.0;
};

/// Grid must be ascending.
std::vector<BifurcationPoint> bifurcation_scan(const DegreeStats& s, Rule rule, std::span<const double> grid);

}  // namespace fpsis
