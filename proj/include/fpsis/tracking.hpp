#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "fpsis/graph.hpp"
#include "fpsis/meanfield.hpp"
#include "fpsis/random.hpp"
#include "fpsis/sampling.hpp"
#include "fpsis/sis.hpp"

namespace fpsis {

/// f_i(x) = A0_i + A1.row(i) x + x' A2[i] x.
struct PolynomialDynamics {
  Eigen::VectorXd A0;
  Eigen::MatrixXd A1;
  std::vector<Eigen::MatrixXd> A2;  // empty: linear map

  Eigen::Index dim() const { return A1.rows(); }
  bool linear() const { return A2.empty(); }
  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const;
  void validate() const;
};

/// One Euler step of length h (sweep units) of the mean-field drift:
/// x_k + h c_k [(1 - x_k) nu k theta / D - delta x_k], theta = w.x.
/// h = 1/M gives a single tick. Throws NumericalError if the map leaves
/// [0,1]^D on the probe points of maps_unit_cube.
PolynomialDynamics build_dynamics(const MfdParams& p, double h);
PolynomialDynamics build_dynamics(const MfdParams& p);

/// Probes corners (all of them for D <= 12, else random ones) and interior points.
bool maps_unit_cube(const PolynomialDynamics& f, std::size_t random_points = 256, std::uint64_t seed = 1);

/// Smallest substep count per sweep that keeps each substep inside [0,1]^D:
/// max(1, ceil(max_k c_k (nu + delta))).
int substeps_per_sweep(const MfdParams& p);

struct GaussianMoments {
  Eigen::VectorXd mean;    // E[f(x)]
  Eigen::MatrixXd second;  // E[f(x) f(x)']
  Eigen::MatrixXd covariance() const { return second - mean * mean.transpose(); }
};

/// Closed-form moments of f(x) for x ~ N(mean, cov) and quadratic f.
GaussianMoments gaussian_quadratic_moments(const Eigen::VectorXd& mean, const Eigen::MatrixXd& cov,
                                           const PolynomialDynamics& f);

struct FilterState {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
};

/// Symmetrizes, then floors negative eigenvalues to zero. Throws
/// NumericalError if the smallest eigenvalue is below -tol.
Eigen::MatrixXd psd_repair(const Eigen::MatrixXd& H, double tol = 1e-8);

FilterState predict(const FilterState& s, const PolynomialDynamics& f, const Eigen::MatrixXd& Q);

struct Innovation {
  Eigen::VectorXd residual;
  Eigen::MatrixXd S;
  double nis = 0.0;
};

/// Kalman update with the Joseph-form covariance. Throws NumericalError if
/// R + C H C' is not positive definite.
FilterState update(const FilterState& prior, const Eigen::VectorXd& y, const Eigen::MatrixXd& C,
                   const Eigen::MatrixXd& R, Innovation* info = nullptr);

enum class ObservationMode { Uniform, Rds };
std::string_view to_string(ObservationMode m);
ObservationMode parse_observation_mode(std::string_view s);

struct ObservationPlan {
  ObservationMode mode = ObservationMode::Uniform;
  /// Per-class sample counts, aligned with DegreeClasses. One entry applies to every class.
  std::vector<int> samples{50};
  EdgeWeights rds_weights;
  std::size_t rds_length = 0;
  double epsilon = 1e-4;  // floor on the plug-in binomial variance

  void validate(const DegreeClasses& classes) const;
  int samples_for(int cls) const { return samples.size() == 1 ? samples.front() : samples[cls]; }
};

struct Observation {
  Eigen::VectorXd y;
  Eigen::MatrixXd C;
  Eigen::MatrixXd R;
  std::vector<int> observed;  // class index of each row
  Eigen::VectorXd raw;        // per class, NaN where unobserved
};

/// Caches the class membership lists used by uniform sampling.
class Observer {
 public:
  Observer(const Graph& g, ObservationPlan plan);

  const DegreeClasses& classes() const { return classes_; }
  const ObservationPlan& plan() const { return plan_; }

  /// `prior_mean` supplies the plug-in infection probability for R.
  Observation observe(std::span<const std::uint8_t> states, const Eigen::VectorXd& prior_mean, Rng& rng) const;

 private:
  Graph g_;
  ObservationPlan plan_;
  DegreeClasses classes_;
  std::vector<std::vector<Node>> members_;
  std::vector<double> strength_;
};

Observation observe(const Graph& g, const ObservationPlan& plan, const Eigen::VectorXd& prior_mean,
                    std::uint64_t seed);

struct TrackingOptions {
  ObservationPlan plan;
  std::size_t sweeps = 100;
  double q_scale = 1.0;
  int substeps = 0;  // 0: substeps_per_sweep
};

struct TrackPoint {
  std::size_t sweep = 0;
  Eigen::VectorXd truth;
  Eigen::VectorXd observation;  // raw per class, NaN where unobserved
  FilterState filtered;
  Eigen::VectorXd prediction_only;
  double nis = 0.0;
  int observed = 0;
};

struct TrackingResult {
  DegreeClasses classes;
  Eigen::VectorXd P;
  std::vector<TrackPoint> points;  // sweeps 1..T
  double rmse_filter = 0.0;
  double rmse_observation = 0.0;
  double rmse_prediction = 0.0;
  double mean_nis = 0.0;
  double expected_nis = 0.0;
  int substeps = 0;
};

/// Diagonal per-sweep process noise q_k = scale * r_k / M(k), with r_k the
/// per-activation flip probability of class k at x (clipped to [0,1]).
Eigen::MatrixXd process_noise(const MfdParams& p, const DegreeClasses& classes, const Eigen::VectorXd& x, double scale);

/// Runs the SIS chain from g's labels; after each sweep of M ticks: S
/// predict substeps, one observation, one update. RMSEs are P(k)-weighted
/// per sweep and averaged over sweeps; means are clipped to [0,1] only here.
/// The observation RMSE covers observed classes only.
TrackingResult track(const Graph& g, const SisConfig& cfg, const TrackingOptions& opt, std::uint64_t seed);

/// Columns sweep, k, truth, observation, filtered_mean, filtered_std.
void write_tracking_csv(const TrackingResult& r, std::ostream& out);

}  // namespace fpsis
