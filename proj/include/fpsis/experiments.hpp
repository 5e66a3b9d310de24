#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpsis/polling.hpp"
#include "fpsis/sis.hpp"
#include "fpsis/tracking.hpp"

namespace fpsis {

/// Invalid experiment config. The message starts with the offending field path.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

enum class ExperimentKind { ParadoxCdfs, Bifurcation, MseGrid, ReactiveCompare, Tracking };

std::string_view to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(std::string_view s);

struct GraphSpec {
  std::string model = "power-law";  // power-law | erdos-renyi | file
  std::size_t n = 2000;
  double alpha = 2.1;
  double avg_degree = 50.0;
  int d_min = 1;
  int d_max = 100;
  std::string file;  // edge list for model "file"
  /// Rewiring targets; null skips rewiring for that entry.
  std::vector<std::optional<double>> r_kk{std::nullopt};
  std::vector<double> p_ks{0.0};
  double rho0 = 0.1;
  double tolerance = 0.02;
};

struct DynamicsSpec {
  double nu = 0.5;
  double delta = 0.5;
  Rule rule = Rule::NonMonophilic;
  std::vector<Rule> rules{Rule::NonMonophilic, Rule::Monophilic};
  Activation activation = Activation::X;
  NeighborMode neighbor_mode = NeighborMode::Graph;
  std::size_t sweeps = 100;
  double lambda_min = 0.0;
  double lambda_max = 10.0;
  std::size_t lambda_points = 101;
};

struct PollingSpec {
  std::vector<Estimator> estimators{Estimator::Intent, Estimator::NepUniform, Estimator::NepRandomWalk,
                                    Estimator::NepFriendOfNode};
  std::vector<std::size_t> budgets{1, 5, 10, 30};
  std::size_t trials = 1000;
  std::size_t walk_length = 1000;
  bool paired = false;
};

struct TrackingSpec {
  std::vector<int> samples{50};
  ObservationMode mode = ObservationMode::Uniform;
  std::size_t rds_length = 0;
  double q_scale = 1.0;
  double epsilon = 1e-4;
  std::size_t runs = 1;
};

struct ReactiveSpec {
  std::vector<std::vector<double>> p_low{{0.9, 0.1}, {0.6, 0.4}};
  std::vector<std::vector<double>> p_high{{0.3, 0.7}, {0.1, 0.9}};
  double slope = 12.0;
  double midpoint = 0.3;
  std::size_t runs = 1;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::ParadoxCdfs;
  std::uint64_t seed = 1;
  std::string output_dir = "out";
  unsigned threads = 1;
  GraphSpec graph;
  DynamicsSpec dynamics;
  PollingSpec polling;
  TrackingSpec tracking;
  ReactiveSpec reactive;

  void validate() const;
};

/// Parses and validates. Unknown keys are errors; missing keys take defaults.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Every field the experiment kind reads, with defaults filled in.
/// Excludes output_dir and threads.
nlohmann::json canonical_json(const ExperimentConfig& c);
/// FNV-1a 64 over canonical_json(c).dump().
std::uint64_t config_hash(const ExperimentConfig& c);

/// Config schema with defaults and allowed values, for `describe`.
nlohmann::json config_schema();

/// Child seed for (kind, panel, trial).
std::uint64_t experiment_seed(std::uint64_t base, ExperimentKind kind, std::uint64_t panel, std::uint64_t trial);

struct Artifact {
  std::string path;  // relative to output_dir
  std::uintmax_t bytes = 0;
  std::uint64_t fnv1a = 0;
};

struct RunReport {
  std::filesystem::path output_dir;
  std::uint64_t config_hash = 0;
  std::vector<Artifact> artifacts;  // manifest.json excluded
};

/// Writes into a staging directory next to output_dir and moves the files in
/// only on success; on failure the staging directory is removed.
RunReport run_experiment(const ExperimentConfig& c);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace fpsis
