#include "doctest.h"

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "fpsis/experiments.hpp"
#include "fpsis/svg.hpp"

using namespace fpsis;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fpsis_exp_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::directory_iterator(dir)) out[e.path().filename().string()] = slurp(e.path());
  return out;
}

json small(const std::string& kind) {
  json j = {{"kind", kind},
            {"seed", 11},
            {"graph", {{"model", "power-law"}, {"n", 600}, {"alpha", 2.1}, {"d_min", 1}, {"d_max", 20}}}};
  if (kind == "paradox-cdfs" || kind == "bifurcation") j["graph"]["r_kk"] = {-0.1, nullptr, 0.1};
  if (kind == "bifurcation") j["dynamics"] = {{"lambda_min", 0}, {"lambda_max", 20}, {"lambda_points", 21}};
  if (kind == "mse-grid") {
    j["graph"]["d_min"] = 3;  // stays connected under rewiring, so no panel is cut
    j["graph"]["r_kk"] = {nullptr, 0.1};
    j["graph"]["p_ks"] = {0.0, 0.2};
    j["graph"]["rho0"] = 0.3;
    j["polling"] = {{"budgets", {1, 5}}, {"trials", 200}, {"walk_length", 50}};
  }
  if (kind == "reactive-compare") {
    j["graph"] = {{"model", "power-law"}, {"n", 600}, {"alpha", 2.1}, {"d_min", 2}, {"d_max", 8},
                  {"r_kk", {nullptr, 0.2}}, {"rho0", 0.05}};
    j["dynamics"] = {{"nu", 1.0}, {"delta", 0.2}, {"sweeps", 10}, {"neighbor_mode", "unbiased-degree"}};
    j["reactive"] = {{"runs", 2}};
  }
  if (kind == "tracking") {
    j["graph"]["rho0"] = 0.1;
    j["dynamics"] = {{"nu", 1.0}, {"delta", 0.05}, {"sweeps", 8}};
    j["tracking"] = {{"samples", {20}}, {"runs", 2}};
  }
  return j;
}

ExperimentConfig config(const json& j, const fs::path& out) {
  ExperimentConfig c = parse_config(j);
  c.output_dir = out.string();
  return c;
}

std::string field_of(const json& j) {
  try {
    parse_config(j);
  } catch (const ConfigError& e) {
    return e.field();
  }
  return "";
}

}  // namespace

TEST_CASE("every kind runs and is byte-identical on re-run") {
  const std::map<std::string, std::vector<std::string>> expected{
      {"paradox-cdfs", {"paradox.svg", "paradox_panel0.csv", "paradox_panel2.csv", "paradox_summary.csv"}},
      {"bifurcation", {"bifurcation.csv", "bifurcation.svg", "thresholds.csv"}},
      {"mse-grid", {"mse_panel0.csv", "mse_panel3.csv", "mse_panel3.svg"}},
      {"reactive-compare", {"reactive_ode.csv", "reactive_sim.csv", "reactive_gap.csv", "reactive.svg"}},
      {"tracking", {"tracking_run0.csv", "tracking_run1.csv", "tracking_summary.csv", "tracking.svg"}},
  };
  for (const auto& [kind, names] : expected) {
    CAPTURE(kind);
    const auto a = run_experiment(config(small(kind), scratch(kind + "_a")));
    const auto b = run_experiment(config(small(kind), scratch(kind + "_b")));
    const auto ta = tree(a.output_dir), tb = tree(b.output_dir);
    CHECK(ta == tb);
    CHECK(ta.count("manifest.json") == 1);
    CHECK(ta.count("graphs.csv") == 1);
    for (const auto& n : names) CHECK(ta.count(n) == 1);
    CHECK(ta.size() == a.artifacts.size() + 1);
    CHECK_FALSE(fs::exists(a.output_dir.string() + ".staging"));

    const json m = json::parse(ta.at("manifest.json"));
    CHECK(m["kind"] == kind);
    CHECK(m["artifacts"].size() == a.artifacts.size());
    for (const auto& art : m["artifacts"]) CHECK(ta.at(art["path"].get<std::string>()).size() == art["bytes"]);
  }
}

TEST_CASE("mse grid panels and thread invariance") {
  json j = small("mse-grid");
  const auto one = tree(run_experiment(config(j, scratch("mse1"))).output_dir);
  j["threads"] = 3;
  const auto three = tree(run_experiment(config(j, scratch("mse3"))).output_dir);
  CHECK(one == three);

  std::istringstream in(one.at("mse_panel1.csv"));
  std::string header, line;
  std::getline(in, header);
  CHECK(header == "graph_id,alpha_or_model,r_kk,p_ks,estimator,budget,mse,bias,var,trials");
  int rows = 0;
  while (std::getline(in, line)) {
    CHECK(line.rfind("panel1,2.1", 0) == 0);
    ++rows;
  }
  CHECK(rows == 4 * 2);

  // labels depend on degrees only, so both r_kk variants of a p_ks column agree
  std::istringstream g(one.at("graphs.csv"));
  std::getline(g, header);
  std::vector<std::vector<std::string>> cols;
  while (std::getline(g, line)) {
    std::vector<std::string> f;
    std::istringstream ls(line);
    for (std::string x; std::getline(ls, x, ',');) f.push_back(x);
    cols.push_back(f);
  }
  REQUIRE(cols.size() == 4);
  for (const auto& f : cols) CHECK(f[2] == cols[0][2]);
  CHECK(cols[0][7] == cols[2][7]);
  CHECK(cols[1][7] == cols[3][7]);
  CHECK(cols[0][4].empty());
  CHECK(cols[2][4] == "0.10000000000000001");
}

TEST_CASE("mse grid polls the largest component of a split panel") {
  json j = small("mse-grid");
  j["graph"]["d_min"] = 1;
  const auto out = tree(run_experiment(config(j, scratch("mse_split"))).output_dir);
  std::istringstream g(out.at("graphs.csv"));
  std::string line;
  std::getline(g, line);
  int cut = 0;
  while (std::getline(g, line)) {
    std::istringstream ls(line);
    std::string id, model, nodes;
    std::getline(ls, id, ',');
    std::getline(ls, model, ',');
    std::getline(ls, nodes, ',');
    CHECK(std::stoul(nodes) <= 600);
    cut += std::stoul(nodes) < 600;
  }
  CHECK(cut > 0);
}

TEST_CASE("seed override changes outputs") {
  json j = small("tracking");
  const auto a = tree(run_experiment(config(j, scratch("seed_a"))).output_dir);
  j["seed"] = 12;
  const auto b = tree(run_experiment(config(j, scratch("seed_b"))).output_dir);
  CHECK(a.at("tracking_run0.csv") != b.at("tracking_run0.csv"));
}

TEST_CASE("config hash") {
  const ExperimentConfig base = parse_config(small("mse-grid"));
  const std::uint64_t h = config_hash(base);

  SUBCASE("unchanged by plumbing and unread fields") {
    ExperimentConfig c = base;
    c.output_dir = "elsewhere";
    c.threads = 8;
    c.dynamics.nu = 0.9;     // mse-grid runs no dynamics
    c.tracking.q_scale = 5;  // nor tracking
    CHECK(config_hash(c) == h);
    json j = small("mse-grid");
    j["graph"]["alpha"] = 2.10;
    j["polling"]["paired"] = false;  // explicit default
    CHECK(config_hash(parse_config(j)) == h);
  }
  SUBCASE("changed by every meaningful field") {
    std::vector<std::function<void(ExperimentConfig&)>> edits{
        [](ExperimentConfig& c) { c.seed = 12; },
        [](ExperimentConfig& c) { c.graph.n = 601; },
        [](ExperimentConfig& c) { c.graph.alpha = 2.2; },
        [](ExperimentConfig& c) { c.graph.d_max = 21; },
        [](ExperimentConfig& c) { c.graph.r_kk[1] = 0.2; },
        [](ExperimentConfig& c) { c.graph.p_ks[0] = 0.1; },
        [](ExperimentConfig& c) { c.graph.rho0 = 0.31; },
        [](ExperimentConfig& c) { c.graph.tolerance = 0.01; },
        [](ExperimentConfig& c) { c.polling.trials = 201; },
        [](ExperimentConfig& c) { c.polling.budgets.push_back(10); },
        [](ExperimentConfig& c) { c.polling.walk_length = 51; },
        [](ExperimentConfig& c) { c.polling.paired = true; },
        [](ExperimentConfig& c) { c.polling.estimators.pop_back(); },
        [](ExperimentConfig& c) { c.kind = ExperimentKind::Bifurcation; },
    };
    for (std::size_t i = 0; i < edits.size(); ++i) {
      CAPTURE(i);
      ExperimentConfig c = base;
      edits[i](c);
      CHECK(config_hash(c) != h);
    }
  }
  SUBCASE("manifest records it") {
    const auto rep = run_experiment(config(small("bifurcation"), scratch("hash")));
    const json m = json::parse(slurp(rep.output_dir / "manifest.json"));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rep.config_hash));
    CHECK(m["config_hash"] == buf);
    CHECK(m["config"] == canonical_json(parse_config(small("bifurcation"))));
  }
}

TEST_CASE("validation names the offending field") {
  auto with = [](json j, const json::json_pointer& p, json v) {
    j[p] = std::move(v);
    return j;
  };
  const json mse = small("mse-grid");
  CHECK(field_of(json::object()) == "kind");
  CHECK(field_of({{"kind", "figure-9"}}) == "kind");
  CHECK(field_of(with(mse, "/graph/alpha"_json_pointer, 0.5)) == "graph.alpha");
  CHECK(field_of(with(mse, "/graph/alpha"_json_pointer, "steep")) == "graph.alpha");
  CHECK(field_of(with(mse, "/graph/n"_json_pointer, -5)) == "graph.n");
  CHECK(field_of(with(mse, "/graph/model"_json_pointer, "barabasi")) == "graph.model");
  CHECK(field_of(with(mse, "/graph/p_ks"_json_pointer, {0.0, 1.5})) == "graph.p_ks");
  CHECK(field_of(with(mse, "/graph/colour"_json_pointer, 1)) == "graph.colour");
  CHECK(field_of(with(mse, "/polling/trials"_json_pointer, 50)) == "polling.trials");
  CHECK(field_of(with(mse, "/polling/estimators"_json_pointer, {"census"})) == "polling.estimators");
  CHECK(field_of(with(mse, "/polling/budgets"_json_pointer, {0})) == "polling.budgets");
  CHECK(field_of(with(mse, "/extra"_json_pointer, true)) == "extra");
  const json tr = small("tracking");
  CHECK(field_of(with(tr, "/dynamics/delta"_json_pointer, 0)) == "dynamics.delta");
  CHECK(field_of(with(tr, "/dynamics/rule"_json_pointer, "viral")) == "dynamics.rule");
  CHECK(field_of(with(tr, "/tracking/mode"_json_pointer, "rds")) == "tracking.rds_length");
  CHECK(field_of(with(tr, "/tracking/samples"_json_pointer, {0})) == "tracking.samples");
  const json rc = small("reactive-compare");
  CHECK(field_of(with(rc, "/reactive/p_low"_json_pointer, {{0.5, 0.6}, {0.5, 0.5}})) == "reactive.p_low[0]");
  CHECK(field_of(with(rc, "/graph/r_kk"_json_pointer, {nullptr})) == "reactive.p_low");
  CHECK(field_of(with(small("bifurcation"), "/dynamics/lambda_max"_json_pointer, -1)) == "dynamics.lambda_max");

  try {
    parse_config(with(mse, "/graph/alpha"_json_pointer, 0.5));
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).rfind("graph.alpha: ", 0) == 0);
  }
}

TEST_CASE("failed runs leave no outputs") {
  json j = small("paradox-cdfs");
  j["graph"] = {{"model", "file"}, {"file", "/nonexistent/edges.txt"}};
  const fs::path out = scratch("fail");
  try {
    run_experiment(config(j, out));
    FAIL("expected a failure");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "graph.file");
  }
  CHECK_FALSE(fs::exists(out));
  CHECK_FALSE(fs::exists(out.string() + ".staging"));

  json t = small("tracking");
  t["tracking"]["samples"] = {5, 5};
  try {
    run_experiment(config(t, scratch("fail2")));
    FAIL("expected a failure");
  } catch (const ConfigError& e) {
    CHECK(e.field() == "tracking.samples");
  }
}

TEST_CASE("config files and schema") {
  const fs::path dir = scratch("files");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "ok.json") << small("paradox-cdfs").dump(2);
    std::ofstream(dir / "broken.json") << "{ \"kind\": ";
  }
  CHECK(load_config(dir / "ok.json").kind == ExperimentKind::ParadoxCdfs);
  CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
  CHECK_THROWS_AS(load_config(dir / "missing.json"), ConfigError);
  const json s = config_schema();
  for (const char* k : {"kind", "seed", "graph", "dynamics", "polling", "tracking", "reactive"}) CHECK(s.contains(k));
  CHECK(experiment_seed(1, ExperimentKind::MseGrid, 0, 0) != experiment_seed(1, ExperimentKind::MseGrid, 1, 0));
  CHECK(experiment_seed(1, ExperimentKind::MseGrid, 0, 0) != experiment_seed(1, ExperimentKind::Tracking, 0, 0));
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
}

TEST_CASE("svg plot") {
  std::vector<Series> s{{"a<b", {0, 1, 2}, {1, 10, 100}}, {"zero", {0, 1}, {0, 5}}};
  PlotSpec spec{"t", "x", "y"};
  spec.log_y = true;
  std::ostringstream a, b;
  write_svg_plot(spec, s, a);
  write_svg_plot(spec, s, b);
  CHECK(a.str() == b.str());
  CHECK(a.str().find("a&lt;b") != std::string::npos);
  CHECK(a.str().find("<polyline") != std::string::npos);
  CHECK(a.str().rfind("<svg", 0) == 0);
  CHECK(a.str().find("nan") == std::string::npos);
}
