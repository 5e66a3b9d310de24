#include "fpsis/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "fpsis/graph.hpp"
#include "fpsis/meanfield.hpp"
#include "fpsis/reactive.hpp"
#include "fpsis/sampling.hpp"
#include "fpsis/svg.hpp"

namespace fpsis {

using nlohmann::json;

std::string_view to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::ParadoxCdfs: return "paradox-cdfs";
    case ExperimentKind::Bifurcation: return "bifurcation";
    case ExperimentKind::MseGrid: return "mse-grid";
    case ExperimentKind::ReactiveCompare: return "reactive-compare";
    case ExperimentKind::Tracking: return "tracking";
  }
  return "?";
}

ExperimentKind parse_experiment_kind(std::string_view s) {
  for (auto k : {ExperimentKind::ParadoxCdfs, ExperimentKind::Bifurcation, ExperimentKind::MseGrid,
                 ExperimentKind::ReactiveCompare, ExperimentKind::Tracking})
    if (s == to_string(k)) return k;
  throw std::invalid_argument("expected paradox-cdfs, bifurcation, mse-grid, reactive-compare or tracking, got '" +
                              std::string(s) + "'");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t experiment_seed(std::uint64_t base, ExperimentKind kind, std::uint64_t panel, std::uint64_t trial) {
  return derive_seed(base, {static_cast<std::uint64_t>(kind) + 1, panel, trial});
}

// Parsing -------------------------------------------------------------------

namespace {

double as_double(const json& j) {
  if (!j.is_number()) throw std::invalid_argument("expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw std::invalid_argument("must be finite");
  return v;
}

std::uint64_t as_u64(const json& j) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) {
    if (j.get<std::int64_t>() < 0) throw std::invalid_argument("must be non-negative");
    return static_cast<std::uint64_t>(j.get<std::int64_t>());
  }
  throw std::invalid_argument("expected a non-negative integer");
}

int as_int(const json& j) {
  if (!j.is_number_integer()) throw std::invalid_argument("expected an integer");
  return j.get<int>();
}

std::string as_string(const json& j) {
  if (!j.is_string()) throw std::invalid_argument("expected a string");
  return j.get<std::string>();
}

bool as_bool(const json& j) {
  if (!j.is_boolean()) throw std::invalid_argument("expected true or false");
  return j.get<bool>();
}

template <typename F>
auto as_list(const json& j, F&& each) {
  if (!j.is_array()) throw std::invalid_argument("expected an array");
  std::vector<decltype(each(j))> out;
  for (const auto& v : j) out.push_back(each(v));
  return out;
}

std::vector<std::vector<double>> as_matrix(const json& j) {
  return as_list(j, [](const json& row) { return as_list(row, as_double); });
}

class Obj {
 public:
  Obj(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j.is_object()) throw ConfigError(path_.empty() ? "config" : path_, "expected an object");
  }
  std::string field(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

  template <typename F>
  void get(const std::string& k, F&& assign) {
    seen_.insert(k);
    const auto it = j_.find(k);
    if (it == j_.end()) return;
    try {
      assign(*it);
    } catch (const ConfigError&) {
      throw;
    } catch (const std::exception& e) {
      throw ConfigError(field(k), e.what());
    }
  }
  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!seen_.count(k)) throw ConfigError(field(k), "unknown field");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void parse_graph(const json& j, GraphSpec& g) {
  Obj o(j, "graph");
  o.get("model", [&](const json& v) { g.model = as_string(v); });
  o.get("n", [&](const json& v) { g.n = as_u64(v); });
  o.get("alpha", [&](const json& v) { g.alpha = as_double(v); });
  o.get("avg_degree", [&](const json& v) { g.avg_degree = as_double(v); });
  o.get("d_min", [&](const json& v) { g.d_min = as_int(v); });
  o.get("d_max", [&](const json& v) { g.d_max = as_int(v); });
  o.get("file", [&](const json& v) { g.file = as_string(v); });
  o.get("r_kk", [&](const json& v) {
    g.r_kk = as_list(v, [](const json& x) -> std::optional<double> {
      if (x.is_null()) return std::nullopt;
      return as_double(x);
    });
  });
  o.get("p_ks", [&](const json& v) { g.p_ks = as_list(v, as_double); });
  o.get("rho0", [&](const json& v) { g.rho0 = as_double(v); });
  o.get("tolerance", [&](const json& v) { g.tolerance = as_double(v); });
  o.finish();
}

void parse_dynamics(const json& j, DynamicsSpec& d) {
  Obj o(j, "dynamics");
  o.get("nu", [&](const json& v) { d.nu = as_double(v); });
  o.get("delta", [&](const json& v) { d.delta = as_double(v); });
  o.get("rule", [&](const json& v) { d.rule = parse_rule(as_string(v)); });
  o.get("rules", [&](const json& v) { d.rules = as_list(v, [](const json& x) { return parse_rule(as_string(x)); }); });
  o.get("activation", [&](const json& v) { d.activation = parse_activation(as_string(v)); });
  o.get("neighbor_mode", [&](const json& v) { d.neighbor_mode = parse_neighbor_mode(as_string(v)); });
  o.get("sweeps", [&](const json& v) { d.sweeps = as_u64(v); });
  o.get("lambda_min", [&](const json& v) { d.lambda_min = as_double(v); });
  o.get("lambda_max", [&](const json& v) { d.lambda_max = as_double(v); });
  o.get("lambda_points", [&](const json& v) { d.lambda_points = as_u64(v); });
  o.finish();
}

void parse_polling(const json& j, PollingSpec& p) {
  Obj o(j, "polling");
  o.get("estimators", [&](const json& v) {
    p.estimators = as_list(v, [](const json& x) { return parse_estimator(as_string(x)); });
  });
  o.get("budgets", [&](const json& v) {
    p.budgets = as_list(v, [](const json& x) { return static_cast<std::size_t>(as_u64(x)); });
  });
  o.get("trials", [&](const json& v) { p.trials = as_u64(v); });
  o.get("walk_length", [&](const json& v) { p.walk_length = as_u64(v); });
  o.get("paired", [&](const json& v) { p.paired = as_bool(v); });
  o.finish();
}

void parse_tracking(const json& j, TrackingSpec& t) {
  Obj o(j, "tracking");
  o.get("samples", [&](const json& v) { t.samples = as_list(v, as_int); });
  o.get("mode", [&](const json& v) { t.mode = parse_observation_mode(as_string(v)); });
  o.get("rds_length", [&](const json& v) { t.rds_length = as_u64(v); });
  o.get("q_scale", [&](const json& v) { t.q_scale = as_double(v); });
  o.get("epsilon", [&](const json& v) { t.epsilon = as_double(v); });
  o.get("runs", [&](const json& v) { t.runs = as_u64(v); });
  o.finish();
}

void parse_reactive(const json& j, ReactiveSpec& r) {
  Obj o(j, "reactive");
  o.get("p_low", [&](const json& v) { r.p_low = as_matrix(v); });
  o.get("p_high", [&](const json& v) { r.p_high = as_matrix(v); });
  o.get("slope", [&](const json& v) { r.slope = as_double(v); });
  o.get("midpoint", [&](const json& v) { r.midpoint = as_double(v); });
  o.get("runs", [&](const json& v) { r.runs = as_u64(v); });
  o.finish();
}

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ConfigError(field, what);
}

void check_stochastic(const std::vector<std::vector<double>>& m, std::size_t n, const std::string& field) {
  require(m.size() == n, field, "needs " + std::to_string(n) + " rows, one per graph (r_kk entry)");
  for (std::size_t i = 0; i < n; ++i) {
    const std::string row = field + "[" + std::to_string(i) + "]";
    require(m[i].size() == n, row, "needs " + std::to_string(n) + " entries");
    double sum = 0.0;
    for (double v : m[i]) {
      require(v >= 0.0, row, "entries must be non-negative");
      sum += v;
    }
    require(std::abs(sum - 1.0) <= 1e-9, row, "must sum to 1");
  }
}

bool uses_labels(ExperimentKind k) {
  return k == ExperimentKind::MseGrid || k == ExperimentKind::ReactiveCompare || k == ExperimentKind::Tracking;
}

}  // namespace

void ExperimentConfig::validate() const {
  const GraphSpec& g = graph;
  require(g.model == "power-law" || g.model == "erdos-renyi" || g.model == "file", "graph.model",
          "expected power-law, erdos-renyi or file, got '" + g.model + "'");
  if (g.model == "power-law") {
    require(g.n >= 10, "graph.n", "must be at least 10");
    require(g.alpha > 1.0, "graph.alpha", "must exceed 1");
    require(g.d_min >= 1, "graph.d_min", "must be at least 1");
    require(g.d_max >= g.d_min, "graph.d_max", "must be at least d_min");
    require(static_cast<std::size_t>(g.d_max) < g.n, "graph.d_max", "must be below n");
  } else if (g.model == "erdos-renyi") {
    require(g.n >= 10, "graph.n", "must be at least 10");
    require(g.avg_degree > 0.0 && g.avg_degree < static_cast<double>(g.n - 1), "graph.avg_degree",
            "must lie in (0, n-1)");
  } else {
    require(!g.file.empty(), "graph.file", "required for model 'file'");
  }
  require(!g.r_kk.empty(), "graph.r_kk", "needs at least one entry (null keeps the generated graph)");
  for (const auto& r : g.r_kk) require(!r || (*r >= -1.0 && *r <= 1.0), "graph.r_kk", "targets must lie in [-1, 1]");
  require(g.tolerance > 0.0, "graph.tolerance", "must be positive");
  if (uses_labels(kind)) {
    require(!g.p_ks.empty(), "graph.p_ks", "needs at least one entry");
    for (double p : g.p_ks) require(p >= -1.0 && p <= 1.0, "graph.p_ks", "targets must lie in [-1, 1]");
    require(g.rho0 >= 0.0 && g.rho0 <= 1.0, "graph.rho0", "must lie in [0, 1]");
  }

  const DynamicsSpec& d = dynamics;
  if (kind == ExperimentKind::ReactiveCompare || kind == ExperimentKind::Tracking) {
    require(d.nu >= 0.0 && d.nu <= 1.0, "dynamics.nu", "must lie in [0, 1]");
    require(d.delta > 0.0 && d.delta <= 1.0, "dynamics.delta", "must lie in (0, 1]");
    require(d.sweeps >= 1, "dynamics.sweeps", "must be at least 1");
  }
  if (kind == ExperimentKind::Bifurcation) {
    require(!d.rules.empty(), "dynamics.rules", "needs at least one rule");
    require(d.lambda_min >= 0.0, "dynamics.lambda_min", "must be non-negative");
    require(d.lambda_max > d.lambda_min, "dynamics.lambda_max", "must exceed lambda_min");
    require(d.lambda_points >= 2, "dynamics.lambda_points", "must be at least 2");
  }

  if (kind == ExperimentKind::MseGrid) {
    const PollingSpec& p = polling;
    require(!p.estimators.empty(), "polling.estimators", "needs at least one estimator");
    require(!p.budgets.empty(), "polling.budgets", "needs at least one budget");
    for (std::size_t b : p.budgets) require(b >= 1, "polling.budgets", "budgets must be at least 1");
    require(p.trials >= 100, "polling.trials", "must be at least 100");
  }

  if (kind == ExperimentKind::Tracking) {
    const TrackingSpec& t = tracking;
    require(!t.samples.empty(), "tracking.samples", "needs one entry or one per degree class");
    for (int s : t.samples) require(s >= 1, "tracking.samples", "every class needs at least one sample");
    require(t.mode != ObservationMode::Rds || t.rds_length > 0, "tracking.rds_length", "must be positive in rds mode");
    require(t.q_scale >= 0.0, "tracking.q_scale", "must be non-negative");
    require(t.epsilon > 0.0, "tracking.epsilon", "must be positive");
    require(t.runs >= 1, "tracking.runs", "must be at least 1");
  }

  if (kind == ExperimentKind::ReactiveCompare) {
    const ReactiveSpec& r = reactive;
    check_stochastic(r.p_low, g.r_kk.size(), "reactive.p_low");
    check_stochastic(r.p_high, g.r_kk.size(), "reactive.p_high");
    require(r.runs >= 1, "reactive.runs", "must be at least 1");
  }
  require(threads >= 1, "threads", "must be at least 1");
}

ExperimentConfig parse_config(const json& j) {
  ExperimentConfig c;
  Obj o(j, "");
  bool has_kind = false;
  o.get("kind", [&](const json& v) {
    c.kind = parse_experiment_kind(as_string(v));
    has_kind = true;
  });
  if (!has_kind) throw ConfigError("kind", "required");
  o.get("seed", [&](const json& v) { c.seed = as_u64(v); });
  o.get("output_dir", [&](const json& v) { c.output_dir = as_string(v); });
  o.get("threads", [&](const json& v) { c.threads = static_cast<unsigned>(as_u64(v)); });
  o.get("graph", [&](const json& v) { parse_graph(v, c.graph); });
  o.get("dynamics", [&](const json& v) { parse_dynamics(v, c.dynamics); });
  o.get("polling", [&](const json& v) { parse_polling(v, c.polling); });
  o.get("tracking", [&](const json& v) { parse_tracking(v, c.tracking); });
  o.get("reactive", [&](const json& v) { parse_reactive(v, c.reactive); });
  o.finish();
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("invalid JSON: ") + e.what());
  }
  return parse_config(j);
}

json canonical_json(const ExperimentConfig& c) {
  json j;
  j["kind"] = to_string(c.kind);
  j["seed"] = c.seed;

  const GraphSpec& g = c.graph;
  json gj;
  gj["model"] = g.model;
  if (g.model == "power-law") {
    gj["n"] = g.n;
    gj["alpha"] = g.alpha;
    gj["d_min"] = g.d_min;
    gj["d_max"] = g.d_max;
  } else if (g.model == "erdos-renyi") {
    gj["n"] = g.n;
    gj["avg_degree"] = g.avg_degree;
  } else {
    gj["file"] = g.file;
  }
  json r = json::array();
  bool rewires = false;
  for (const auto& t : g.r_kk) {
    r.push_back(t ? json(*t) : json(nullptr));
    rewires = rewires || t.has_value();
  }
  gj["r_kk"] = r;
  if (uses_labels(c.kind)) {
    gj["p_ks"] = g.p_ks;
    gj["rho0"] = g.rho0;
  }
  if (rewires || uses_labels(c.kind)) gj["tolerance"] = g.tolerance;
  j["graph"] = gj;

  const DynamicsSpec& d = c.dynamics;
  if (c.kind == ExperimentKind::Bifurcation) {
    json rules = json::array();
    for (Rule x : d.rules) rules.push_back(to_string(x));
    j["dynamics"] = {{"rules", rules},
                     {"lambda_min", d.lambda_min},
                     {"lambda_max", d.lambda_max},
                     {"lambda_points", d.lambda_points}};
  } else if (c.kind == ExperimentKind::ReactiveCompare || c.kind == ExperimentKind::Tracking) {
    json dj = {{"nu", d.nu},
               {"delta", d.delta},
               {"activation", to_string(d.activation)},
               {"neighbor_mode", to_string(d.neighbor_mode)},
               {"sweeps", d.sweeps}};
    if (c.kind == ExperimentKind::Tracking) dj["rule"] = to_string(d.rule);
    j["dynamics"] = dj;
  }

  if (c.kind == ExperimentKind::MseGrid) {
    json est = json::array();
    for (Estimator e : c.polling.estimators) est.push_back(to_string(e));
    j["polling"] = {{"estimators", est},
                    {"budgets", c.polling.budgets},
                    {"trials", c.polling.trials},
                    {"walk_length", c.polling.walk_length},
                    {"paired", c.polling.paired}};
  }
  if (c.kind == ExperimentKind::Tracking) {
    const TrackingSpec& t = c.tracking;
    json tj = {{"samples", t.samples},
               {"mode", to_string(t.mode)},
               {"q_scale", t.q_scale},
               {"epsilon", t.epsilon},
               {"runs", t.runs}};
    if (t.mode == ObservationMode::Rds) tj["rds_length"] = t.rds_length;
    j["tracking"] = tj;
  }
  if (c.kind == ExperimentKind::ReactiveCompare) {
    const ReactiveSpec& rs = c.reactive;
    j["reactive"] = {{"p_low", rs.p_low},
                     {"p_high", rs.p_high},
                     {"slope", rs.slope},
                     {"midpoint", rs.midpoint},
                     {"runs", rs.runs}};
  }
  return j;
}

std::uint64_t config_hash(const ExperimentConfig& c) { return fnv1a64(canonical_json(c).dump()); }

json config_schema() {
  const ExperimentConfig d;
  return {
      {"kind", {{"required", true},
                {"values", {"paradox-cdfs", "bifurcation", "mse-grid", "reactive-compare", "tracking"}}}},
      {"seed", {{"default", d.seed}, {"doc", "base seed; child seed = hash(seed, kind, panel, trial)"}}},
      {"output_dir", {{"default", d.output_dir}, {"doc", "not part of the config hash"}}},
      {"threads", {{"default", d.threads}, {"doc", "worker threads; not part of the config hash"}}},
      {"graph",
       {{"model", {{"default", d.graph.model}, {"values", {"power-law", "erdos-renyi", "file"}}}},
        {"n", d.graph.n},
        {"alpha", d.graph.alpha},
        {"avg_degree", d.graph.avg_degree},
        {"d_min", d.graph.d_min},
        {"d_max", d.graph.d_max},
        {"file", {{"default", ""}, {"doc", "edge list 'u v' per line, model file only"}}},
        {"r_kk", {{"default", json::array({nullptr})}, {"doc", "rewiring targets, one graph each; null = no rewiring"}}},
        {"p_ks", {{"default", d.graph.p_ks}, {"doc", "degree-label correlation targets, one labeling each"}}},
        {"rho0", {{"default", d.graph.rho0}, {"doc", "fraction of nodes labeled 1"}}},
        {"tolerance", {{"default", d.graph.tolerance}, {"doc", "for r_kk and p_ks targets"}}}}},
      {"dynamics",
       {{"nu", d.dynamics.nu},
        {"delta", d.dynamics.delta},
        {"rule", {{"default", "non-monophilic"}, {"values", {"non-monophilic", "monophilic"}}}},
        {"rules", {{"default", {"non-monophilic", "monophilic"}}, {"doc", "bifurcation only"}}},
        {"activation", {{"default", "X"}, {"values", {"X", "Y", "Z"}}}},
        {"neighbor_mode", {{"default", "graph"}, {"values", {"graph", "unbiased-degree"}}}},
        {"sweeps", d.dynamics.sweeps},
        {"lambda_min", d.dynamics.lambda_min},
        {"lambda_max", d.dynamics.lambda_max},
        {"lambda_points", d.dynamics.lambda_points}}},
      {"polling",
       {{"estimators",
         {{"default", {"intent", "nep-uniform", "nep-random-walk", "nep-friend-of-node"}},
          {"values", {"intent", "nep-uniform", "nep-random-walk", "nep-friend-of-node"}}}},
        {"budgets", d.polling.budgets},
        {"trials", {{"default", d.polling.trials}, {"minimum", 100}}},
        {"walk_length", d.polling.walk_length},
        {"paired", d.polling.paired}}},
      {"tracking",
       {{"samples", {{"default", d.tracking.samples}, {"doc", "one entry, or one per degree class"}}},
        {"mode", {{"default", "uniform"}, {"values", {"uniform", "rds"}}}},
        {"rds_length", d.tracking.rds_length},
        {"q_scale", d.tracking.q_scale},
        {"epsilon", d.tracking.epsilon},
        {"runs", d.tracking.runs}}},
      {"reactive",
       {{"p_low", {{"default", d.reactive.p_low}, {"doc", "graph transition matrix at low prevalence"}}},
        {"p_high", {{"default", d.reactive.p_high}, {"doc", "graph transition matrix at high prevalence"}}},
        {"slope", d.reactive.slope},
        {"midpoint", d.reactive.midpoint},
        {"runs", d.reactive.runs}}},
  };
}

// Running -------------------------------------------------------------------

namespace {

constexpr std::uint64_t kGraphSlot = ~0ULL;
constexpr std::uint64_t kLabelSlot = ~1ULL;
constexpr std::uint64_t kRewireSlot = ~2ULL;

struct BuiltGraph {
  std::string id;
  std::size_t panel = 0;
  std::optional<double> target_rkk;
  std::optional<double> target_pks;
  Graph graph;
  DegreeStats stats;
};

template <typename F>
void parallel_for(std::size_t n, unsigned threads, F&& fn) {
  const unsigned t = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (t == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(t);
  {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < t; ++w)
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < n; i += t) fn(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

Graph base_graph(const ExperimentConfig& c) {
  const GraphSpec& g = c.graph;
  const std::uint64_t s = experiment_seed(c.seed, c.kind, 0, kGraphSlot);
  if (g.model == "power-law") return largest_component(generate_configuration_model(g.n, g.alpha, g.d_min, g.d_max, s));
  if (g.model == "erdos-renyi") return largest_component(generate_erdos_renyi(g.n, g.avg_degree, s));
  try {
    return largest_component(load_graph(g.file));
  } catch (const std::exception& e) {
    throw ConfigError("graph.file", e.what());
  }
}

/// Panels in r_kk-major order. Labels depend only on degrees and the p_ks
/// seed, so every r_kk variant of a p_ks column carries the same labels.
/// With `connected`, each panel is cut to its largest component after
/// labelling; rewiring can split off small pieces.
std::vector<BuiltGraph> build_graphs(const ExperimentConfig& c, bool labeled, bool connected = false) {
  const Graph base = base_graph(c);
  std::vector<Graph> rewired;
  for (std::size_t i = 0; i < c.graph.r_kk.size(); ++i) {
    const auto& t = c.graph.r_kk[i];
    if (!t) {
      rewired.push_back(base);
      continue;
    }
    const std::size_t steps = 200 * base.edges().size();
    rewired.push_back(
        rewire_to_assortativity(base, *t, c.graph.tolerance, steps, experiment_seed(c.seed, c.kind, i, kRewireSlot))
            .graph);
  }

  std::vector<BuiltGraph> out;
  const std::size_t np = labeled ? c.graph.p_ks.size() : 1;
  for (std::size_t i = 0; i < rewired.size(); ++i)
    for (std::size_t p = 0; p < np; ++p) {
      BuiltGraph b;
      b.panel = out.size();
      b.id = "panel" + std::to_string(b.panel);
      b.target_rkk = c.graph.r_kk[i];
      if (labeled) {
        b.target_pks = c.graph.p_ks[p];
        b.graph = assign_labels(rewired[i], c.graph.rho0, c.graph.p_ks[p], c.graph.tolerance,
                                experiment_seed(c.seed, c.kind, p, kLabelSlot))
                      .graph;
      } else {
        b.graph = rewired[i];
      }
      if (connected && !b.graph.is_connected()) b.graph = largest_component(b.graph);
      b.stats = degree_stats(b.graph);
      out.push_back(std::move(b));
    }
  return out;
}

std::string fmt(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream s;
  s.precision(17);
  s << *v;
  return s.str();
}

std::string graphs_csv(const ExperimentConfig& c, const std::vector<BuiltGraph>& gs) {
  std::ostringstream out;
  out.precision(17);
  out << "graph_id,model,nodes,edges,target_r_kk,r_kk,target_p_ks,p_ks,infected_fraction,mean_degree\n";
  for (const auto& b : gs)
    out << b.id << ',' << c.graph.model << ',' << b.stats.node_count << ',' << b.stats.edge_count << ','
        << fmt(b.target_rkk) << ',' << b.stats.rkk << ',' << fmt(b.target_pks) << ',' << b.stats.pks << ','
        << b.stats.infected_fraction << ',' << b.stats.mean_degree << '\n';
  return out.str();
}

std::string svg(const PlotSpec& spec, const std::vector<Series>& series) {
  std::ostringstream out;
  write_svg_plot(spec, series, out);
  return out.str();
}

std::string model_label(const GraphSpec& g) {
  if (g.model == "power-law") return fmt(g.alpha);
  return g.model;
}

using Files = std::map<std::string, std::string>;

void run_paradox(const ExperimentConfig& c, Files& files) {
  const auto gs = build_graphs(c, false);
  files["graphs.csv"] = graphs_csv(c, gs);
  std::ostringstream summary;
  summary.precision(17);
  summary << "graph_id,r_kk,mean_dX,mean_dY,mean_dZ,mean_YX_holds,fosd_ZX_holds\n";
  std::vector<Series> series;
  for (const auto& b : gs) {
    const ParadoxReport r = verify_friendship_paradox(b.graph);
    std::ostringstream csv;
    write_paradox_csv(r, csv);
    files["paradox_" + b.id + ".csv"] = csv.str();
    summary << b.id << ',' << b.stats.rkk << ',' << r.mean_dX << ',' << r.mean_dY << ',' << r.mean_dZ << ','
            << r.mean_YX_holds << ',' << r.fosd_ZX_holds << '\n';
    std::vector<double> deg(r.cdf_dX.size());
    for (std::size_t i = 0; i < deg.size(); ++i) deg[i] = static_cast<double>(i + 1);
    if (series.empty()) {
      series.push_back({"d(X)", deg, r.cdf_dX});
      series.push_back({"d(Y)", deg, r.cdf_dY});
    }
    std::ostringstream label;
    label.precision(3);
    label << "d(Z), r_kk=" << b.stats.rkk;
    series.push_back({label.str(), deg, r.cdf_dZ});
  }
  files["paradox_summary.csv"] = summary.str();
  files["paradox.svg"] = svg({"Degree CDFs of X, Y and Z", "degree", "CDF"}, series);
}

void run_bifurcation(const ExperimentConfig& c, Files& files) {
  const auto gs = build_graphs(c, false);
  files["graphs.csv"] = graphs_csv(c, gs);
  const DynamicsSpec& d = c.dynamics;
  std::vector<double> grid(d.lambda_points);
  for (std::size_t i = 0; i < grid.size(); ++i)
    grid[i] = d.lambda_min + (d.lambda_max - d.lambda_min) * static_cast<double>(i) / (grid.size() - 1);

  std::ostringstream curve, thr;
  curve.precision(17);
  thr.precision(17);
  curve << "graph_id,r_kk,rule,lambda,rho\n";
  thr << "graph_id,r_kk,rule,lambda_star\n";
  std::vector<Series> series;
  for (const auto& b : gs)
    for (Rule rule : d.rules) {
      const auto pts = bifurcation_scan(b.stats, rule, grid);
      Series s;
      std::ostringstream label;
      label.precision(3);
      label << to_string(rule) << ", r_kk=" << b.stats.rkk;
      s.label = label.str();
      for (const auto& p : pts) {
        curve << b.id << ',' << b.stats.rkk << ',' << to_string(rule) << ',' << p.lambda << ',' << p.rho << '\n';
        s.x.push_back(p.lambda);
        s.y.push_back(p.rho);
      }
      thr << b.id << ',' << b.stats.rkk << ',' << to_string(rule) << ','
          << critical_threshold(b.stats, rule).lambda_star << '\n';
      series.push_back(std::move(s));
    }
  files["bifurcation.csv"] = curve.str();
  files["thresholds.csv"] = thr.str();
  files["bifurcation.svg"] = svg({"Stationary infected fraction", "lambda = nu/delta", "rho"}, series);
}

void run_mse_grid(const ExperimentConfig& c, Files& files) {
  const auto gs = build_graphs(c, true, true);
  files["graphs.csv"] = graphs_csv(c, gs);
  const PollingSpec& p = c.polling;
  MseOptions opt;
  opt.walk_length = p.walk_length;
  opt.paired = p.paired;
  opt.threads = c.threads;
  for (const auto& b : gs) {
    const MseTable t = mse_experiment(b.graph, p.estimators, p.budgets, p.trials,
                                      experiment_seed(c.seed, c.kind, b.panel, 0), opt);
    std::ostringstream csv;
    write_mse_csv_header(csv);
    write_mse_csv_rows(t, b.id, model_label(c.graph), b.stats.rkk, b.stats.pks, csv);
    files["mse_" + b.id + ".csv"] = csv.str();

    std::vector<Series> series;
    for (Estimator e : p.estimators) {
      Series s{std::string(to_string(e)), {}, {}};
      for (std::size_t bud : p.budgets) {
        s.x.push_back(static_cast<double>(bud));
        s.y.push_back(t.at(e, bud).mse);
      }
      series.push_back(std::move(s));
    }
    std::ostringstream title;
    title.precision(3);
    title << "MSE vs budget, r_kk=" << b.stats.rkk << ", p_ks=" << b.stats.pks;
    PlotSpec spec{title.str(), "sampling budget b", "MSE"};
    spec.log_y = true;
    files["mse_" + b.id + ".svg"] = svg(spec, series);
  }
}

void run_reactive(const ExperimentConfig& c, Files& files) {
  ExperimentConfig one = c;
  one.graph.p_ks.resize(1);
  const auto gs = build_graphs(one, true);
  files["graphs.csv"] = graphs_csv(c, gs);

  std::vector<Graph> graphs;
  for (const auto& b : gs) graphs.push_back(b.graph);
  const auto n = static_cast<Eigen::Index>(graphs.size());
  Eigen::MatrixXd low(n, n), high(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      low(i, j) = c.reactive.p_low[i][j];
      high(i, j) = c.reactive.p_high[i][j];
    }
  const DegreeStats& s0 = gs.front().stats;
  const ReactiveNetwork rn(graphs, logistic_kernel(low, high, c.reactive.slope, c.reactive.midpoint, s0.P));

  const DynamicsSpec& d = c.dynamics;
  const SisConfig cfg{d.nu, d.delta, d.activation, Rule::Monophilic, d.neighbor_mode};
  const MfdParams params = MfdParams::from(s0, cfg);
  const auto ode = constrained_ode_trajectory(rn, params, population_state(graphs.front()).x, d.sweeps);

  const std::size_t M = graphs.front().node_count();
  std::vector<JointTrajectory> sims(c.reactive.runs);
  parallel_for(sims.size(), c.threads, [&](std::size_t r) {
    sims[r] = simulate_joint(rn, cfg, 0, d.sweeps * M, experiment_seed(c.seed, c.kind, 0, r), M);
  });

  std::ostringstream o, sim, gap;
  o.precision(17);
  sim.precision(17);
  gap.precision(17);
  o << "sweep,prevalence,residual";
  for (Eigen::Index i = 0; i < n; ++i) o << ",pi_" << i;
  o << '\n';
  Series ode_s{"constrained ODE", {}, {}};
  for (std::size_t t = 0; t < ode.size(); ++t) {
    const double prev = s0.P.dot(ode[t].x);
    o << t << ',' << prev << ',' << ode[t].residual;
    for (Eigen::Index i = 0; i < n; ++i) o << ',' << ode[t].pi(i);
    o << '\n';
    ode_s.x.push_back(static_cast<double>(t));
    ode_s.y.push_back(prev);
  }
  sim << "run,sweep,prevalence,graph_index\n";
  gap << "run,sup_gap\n";
  std::vector<Series> series{ode_s};
  Series mean_s{"simulation mean", ode_s.x, std::vector<double>(ode.size(), 0.0)};
  for (std::size_t r = 0; r < sims.size(); ++r) {
    double g = 0.0;
    for (std::size_t t = 0; t < sims[r].state.size(); ++t) {
      const double prev = s0.P.dot(sims[r].state[t].x);
      sim << r << ',' << t << ',' << prev << ',' << sims[r].graph_index[t] << '\n';
      mean_s.y[t] += prev / static_cast<double>(sims.size());
      g = std::max(g, (sims[r].state[t].x - ode[t].x).cwiseAbs().maxCoeff());
    }
    gap << r << ',' << g << '\n';
  }
  series.push_back(std::move(mean_s));
  files["reactive_ode.csv"] = o.str();
  files["reactive_sim.csv"] = sim.str();
  files["reactive_gap.csv"] = gap.str();
  files["reactive.svg"] = svg({"Reactive network: ODE vs joint simulation", "sweep", "infected fraction"}, series);
}

void run_tracking(const ExperimentConfig& c, Files& files) {
  ExperimentConfig one = c;
  one.graph.r_kk.resize(1);
  one.graph.p_ks.resize(1);
  const auto gs = build_graphs(one, true);
  files["graphs.csv"] = graphs_csv(c, gs);
  const Graph& g = gs.front().graph;
  const DynamicsSpec& d = c.dynamics;
  const SisConfig cfg{d.nu, d.delta, d.activation, d.rule, d.neighbor_mode};

  TrackingOptions opt;
  opt.sweeps = d.sweeps;
  opt.q_scale = c.tracking.q_scale;
  opt.plan.mode = c.tracking.mode;
  opt.plan.samples = c.tracking.samples;
  opt.plan.rds_length = c.tracking.rds_length;
  opt.plan.epsilon = c.tracking.epsilon;
  try {
    opt.plan.validate(gs.front().stats.classes);
  } catch (const std::invalid_argument& e) {
    throw ConfigError("tracking.samples", e.what());
  }

  std::vector<TrackingResult> runs(c.tracking.runs);
  parallel_for(runs.size(), c.threads,
               [&](std::size_t r) { runs[r] = track(g, cfg, opt, experiment_seed(c.seed, c.kind, 0, r)); });

  std::ostringstream summary;
  summary.precision(17);
  summary << "run,rmse_filter,rmse_observation,rmse_prediction,mean_nis,expected_nis\n";
  for (std::size_t r = 0; r < runs.size(); ++r) {
    std::ostringstream csv;
    write_tracking_csv(runs[r], csv);
    files["tracking_run" + std::to_string(r) + ".csv"] = csv.str();
    summary << r << ',' << runs[r].rmse_filter << ',' << runs[r].rmse_observation << ',' << runs[r].rmse_prediction
            << ',' << runs[r].mean_nis << ',' << runs[r].expected_nis << '\n';
  }
  files["tracking_summary.csv"] = summary.str();

  const TrackingResult& r0 = runs.front();
  Series truth{"truth", {}, {}}, obs{"observation", {}, {}}, filt{"filtered", {}, {}}, open{"prediction only", {}, {}};
  for (const auto& pt : r0.points) {
    const double t = static_cast<double>(pt.sweep);
    double ob = 0.0, w = 0.0;
    for (Eigen::Index k = 0; k < pt.observation.size(); ++k)
      if (!std::isnan(pt.observation(k))) {
        ob += r0.P(k) * pt.observation(k);
        w += r0.P(k);
      }
    truth.x.push_back(t);
    truth.y.push_back(r0.P.dot(pt.truth));
    obs.x.push_back(t);
    obs.y.push_back(w > 0 ? ob / w : std::nan(""));
    filt.x.push_back(t);
    filt.y.push_back(r0.P.dot(pt.filtered.mean.cwiseMax(0.0).cwiseMin(1.0)));
    open.x.push_back(t);
    open.y.push_back(r0.P.dot(pt.prediction_only.cwiseMax(0.0).cwiseMin(1.0)));
  }
  files["tracking.svg"] =
      svg({"Tracking the infected fraction (run 0)", "sweep", "infected fraction"}, {truth, obs, filt, open});
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

RunReport run_experiment(const ExperimentConfig& c) {
  c.validate();
  namespace fs = std::filesystem;
  Files files;
  switch (c.kind) {
    case ExperimentKind::ParadoxCdfs: run_paradox(c, files); break;
    case ExperimentKind::Bifurcation: run_bifurcation(c, files); break;
    case ExperimentKind::MseGrid: run_mse_grid(c, files); break;
    case ExperimentKind::ReactiveCompare: run_reactive(c, files); break;
    case ExperimentKind::Tracking: run_tracking(c, files); break;
  }

  RunReport rep;
  rep.output_dir = c.output_dir;
  rep.config_hash = config_hash(c);
  json artifacts = json::array();
  for (const auto& [name, body] : files) {
    rep.artifacts.push_back({name, body.size(), fnv1a64(body)});
    artifacts.push_back({{"path", name}, {"bytes", body.size()}, {"fnv1a", hex(fnv1a64(body))}});
  }
  const json manifest = {{"config_hash", hex(rep.config_hash)},
                         {"kind", to_string(c.kind)},
                         {"seed", c.seed},
                         {"config", canonical_json(c)},
                         {"artifacts", artifacts}};
  files["manifest.json"] = manifest.dump(2) + "\n";

  const fs::path out = fs::absolute(c.output_dir).lexically_normal();
  const fs::path staging = out.parent_path() / (out.filename().string() + ".staging");
  try {
    fs::remove_all(staging);
    fs::create_directories(staging);
    for (const auto& [name, body] : files) {
      std::ofstream f(staging / name, std::ios::binary);
      f << body;
      if (!f) throw std::runtime_error("cannot write " + (staging / name).string());
    }
    fs::create_directories(out);
    for (const auto& [name, body] : files) fs::rename(staging / name, out / name);
    fs::remove_all(staging);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(staging, ec);
    throw;
  }
  return rep;
}

}  // namespace fpsis
