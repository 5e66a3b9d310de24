#include "fpsis/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_set>

#include "fpsis/random.hpp"

namespace fpsis {

namespace {

std::uint64_t edge_key(Node a, Node b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) | static_cast<std::uint32_t>(b);
}

}  // namespace

// Graph --------------------------------------------------------------------

Graph Graph::from_edges(std::size_t node_count, std::span<const Edge> edges, std::vector<std::uint8_t> labels) {
  if (node_count == 0) throw GraphError("graph must have at least one node");
  if (labels.empty()) labels.assign(node_count, 0);
  if (labels.size() != node_count) throw GraphError("label vector size does not match node count");
  for (auto s : labels)
    if (s > 1) throw GraphError("labels must be 0 or 1");

  std::vector<std::size_t> deg(node_count, 0);
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(edges.size() * 2);
  for (const Edge& e : edges) {
    if (e.u < 0 || e.v < 0 || static_cast<std::size_t>(e.u) >= node_count ||
        static_cast<std::size_t>(e.v) >= node_count)
      throw GraphError("edge endpoint out of range: " + std::to_string(e.u) + " " + std::to_string(e.v));
    if (e.u == e.v) throw GraphError("self-loop at node " + std::to_string(e.u));
    if (!seen.insert(edge_key(e.u, e.v)).second)
      throw GraphError("parallel edge " + std::to_string(e.u) + " " + std::to_string(e.v));
    ++deg[e.u];
    ++deg[e.v];
  }

  auto topo = std::make_shared<Topology>();
  topo->offsets.assign(node_count + 1, 0);
  for (std::size_t v = 0; v < node_count; ++v) {
    if (deg[v] == 0) throw GraphError("isolated node " + std::to_string(v));
    topo->offsets[v + 1] = topo->offsets[v] + deg[v];
    topo->max_degree = std::max(topo->max_degree, static_cast<int>(deg[v]));
  }
  topo->adjacency.resize(topo->offsets.back());
  std::vector<std::size_t> fill(topo->offsets.begin(), topo->offsets.end() - 1);
  for (const Edge& e : edges) {
    topo->adjacency[fill[e.u]++] = e.v;
    topo->adjacency[fill[e.v]++] = e.u;
  }
  for (std::size_t v = 0; v < node_count; ++v)
    std::sort(topo->adjacency.begin() + topo->offsets[v], topo->adjacency.begin() + topo->offsets[v + 1]);

  Graph g;
  g.topo_ = std::move(topo);
  g.labels_ = std::move(labels);
  return g;
}

std::size_t Graph::infected_count() const {
  return static_cast<std::size_t>(std::count(labels_.begin(), labels_.end(), std::uint8_t{1}));
}

Graph Graph::with_labels(std::vector<std::uint8_t> labels) const {
  if (labels.size() != node_count()) throw GraphError("label vector size does not match node count");
  for (auto s : labels)
    if (s > 1) throw GraphError("labels must be 0 or 1");
  Graph g;
  g.topo_ = topo_;
  g.labels_ = std::move(labels);
  return g;
}

std::vector<Edge> Graph::edges() const {
  std::vector<Edge> out;
  out.reserve(edge_count());
  for (Node u = 0; u < static_cast<Node>(node_count()); ++u)
    for (Node v : neighbors(u))
      if (u < v) out.push_back({u, v});
  return out;
}

std::vector<int> Graph::degree_sequence() const {
  std::vector<int> d(node_count());
  for (std::size_t v = 0; v < d.size(); ++v) d[v] = degree(static_cast<Node>(v));
  return d;
}

std::uint64_t Graph::edge_set_hash() const {
  std::uint64_t h = splitmix64(node_count());
  for (const Edge& e : edges()) h += splitmix64(edge_key(e.u, e.v));
  return h;
}

bool Graph::is_connected() const {
  const std::size_t n = node_count();
  if (n == 0) return false;
  std::vector<char> seen(n, 0);
  std::vector<Node> stack{0};
  seen[0] = 1;
  std::size_t reached = 1;
  while (!stack.empty()) {
    Node v = stack.back();
    stack.pop_back();
    for (Node u : neighbors(v))
      if (!seen[u]) {
        seen[u] = 1;
        ++reached;
        stack.push_back(u);
      }
  }
  return reached == n;
}

bool Graph::is_bipartite() const {
  const std::size_t n = node_count();
  std::vector<int> color(n, -1);
  std::vector<Node> stack;
  for (std::size_t s = 0; s < n; ++s) {
    if (color[s] >= 0) continue;
    color[s] = 0;
    stack.push_back(static_cast<Node>(s));
    while (!stack.empty()) {
      Node v = stack.back();
      stack.pop_back();
      for (Node u : neighbors(v)) {
        if (color[u] < 0) {
          color[u] = 1 - color[v];
          stack.push_back(u);
        } else if (color[u] == color[v]) {
          return false;
        }
      }
    }
  }
  return true;
}

// Degree statistics ---------------------------------------------------------

DegreeClasses DegreeClasses::of(const Graph& g) {
  DegreeClasses c;
  const int D = g.max_degree();
  std::vector<int> counts(D + 1, 0);
  for (Node v = 0; v < static_cast<Node>(g.node_count()); ++v) ++counts[g.degree(v)];
  c.index_of.assign(D + 1, -1);
  for (int k = 1; k <= D; ++k)
    if (counts[k] > 0) {
      c.index_of[k] = static_cast<int>(c.degree.size());
      c.degree.push_back(k);
    }
  c.size.resize(c.count());
  for (int i = 0; i < c.count(); ++i) c.size(i) = counts[c.degree[i]];
  return c;
}

Eigen::VectorXd DegreeStats::k() const {
  Eigen::VectorXd out(classes.count());
  for (int i = 0; i < classes.count(); ++i) out(i) = classes.degree[i];
  return out;
}

namespace {

void finish_degree_fields(DegreeStats& s) {
  const Eigen::VectorXd k = s.k();
  const int K = s.classes.count();
  s.q = s.joint.rowwise().sum();
  s.conditional.resize(K, K);
  for (int j = 0; j < K; ++j) s.conditional.col(j) = s.joint.col(j) / s.q(j);
  s.z_dist = s.conditional * s.P;
  s.mean_degree = s.P.dot(k);
  s.max_degree = s.classes.degree.empty() ? 0 : s.classes.degree.back();

  const double mu_q = s.q.dot(k);
  const double var_q = s.q.dot(k.cwiseProduct(k)) - mu_q * mu_q;
  s.sigma_q = std::sqrt(std::max(var_q, 0.0));
  const double var_k = s.P.dot(k.cwiseProduct(k)) - s.mean_degree * s.mean_degree;
  s.sigma_k = std::sqrt(std::max(var_k, 0.0));
  if (var_q <= 1e-12 * mu_q * mu_q) {
    s.rkk = 0.0;
    s.rkk_degenerate = true;
  } else {
    s.rkk = (k.transpose() * s.joint * k - mu_q * mu_q) / var_q;
    s.rkk_degenerate = false;
  }
}

}  // namespace

DegreeStats DegreeStats::from_joint(std::vector<int> degrees, Eigen::VectorXd P, Eigen::MatrixXd joint) {
  const int K = static_cast<int>(degrees.size());
  if (P.size() != K || joint.rows() != K || joint.cols() != K)
    throw std::invalid_argument("from_joint: dimension mismatch");
  if (!std::is_sorted(degrees.begin(), degrees.end()) || degrees.empty() || degrees.front() < 1)
    throw std::invalid_argument("from_joint: degrees must be ascending and >= 1");
  DegreeStats s;
  s.classes.degree = std::move(degrees);
  s.classes.index_of.assign(s.classes.degree.back() + 1, -1);
  for (int i = 0; i < K; ++i) s.classes.index_of[s.classes.degree[i]] = i;
  s.classes.size = Eigen::VectorXi::Zero(K);
  s.P = std::move(P);
  s.joint = std::move(joint);
  finish_degree_fields(s);
  s.pks_degenerate = true;
  return s;
}

DegreeStats degree_stats(const Graph& g) {
  DegreeStats s;
  s.classes = DegreeClasses::of(g);
  s.node_count = g.node_count();
  s.edge_count = g.edge_count();
  const int K = s.classes.count();
  const double M = static_cast<double>(s.node_count);
  const double ends = 2.0 * static_cast<double>(s.edge_count);

  s.P = s.classes.size.cast<double>() / M;
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(K, K);
  Eigen::VectorXd infected_by_class = Eigen::VectorXd::Zero(K);
  for (Node u = 0; u < static_cast<Node>(g.node_count()); ++u) {
    const int cu = s.classes.index(g.degree(u));
    for (Node v : g.neighbors(u)) counts(cu, s.classes.index(g.degree(v))) += 1.0;
    infected_by_class(cu) += g.label(u);
  }
  s.joint = counts / ends;
  finish_degree_fields(s);

  const Eigen::VectorXd k = s.k();
  s.infected_fraction = infected_by_class.sum() / M;
  s.sigma_s = std::sqrt(s.infected_fraction * (1.0 - s.infected_fraction));
  // cov(s, d) = sum_k k (P(s=1, d=k) - P(s=1) P(k))
  s.degree_label_cov = k.dot(infected_by_class / M - s.infected_fraction * s.P);
  if (s.sigma_s <= 0.0 || s.sigma_k <= 1e-12 * s.mean_degree) {
    s.pks = 0.0;
    s.pks_degenerate = true;
  } else {
    s.pks = s.degree_label_cov / (s.sigma_k * s.sigma_s);
  }
  return s;
}

namespace {

struct DegreeMoments {
  double edges = 0.0;
  double mu_q = 0.0;
  double var_q = 0.0;
};

DegreeMoments degree_moments(const std::vector<int>& deg, std::size_t edge_count) {
  DegreeMoments m;
  m.edges = static_cast<double>(edge_count);
  double s2 = 0.0, s3 = 0.0;
  for (int d : deg) {
    s2 += static_cast<double>(d) * d;
    s3 += static_cast<double>(d) * d * d;
  }
  m.mu_q = s2 / (2.0 * m.edges);
  m.var_q = s3 / (2.0 * m.edges) - m.mu_q * m.mu_q;
  return m;
}

double rkk_from_sum(double edge_product_sum, const DegreeMoments& m) {
  if (m.var_q <= 1e-12 * m.mu_q * m.mu_q) return 0.0;
  return (edge_product_sum / m.edges - m.mu_q * m.mu_q) / m.var_q;
}

}  // namespace

double assortativity(const Graph& g) {
  const auto deg = g.degree_sequence();
  double S = 0.0;
  for (const Edge& e : g.edges()) S += static_cast<double>(deg[e.u]) * deg[e.v];
  return rkk_from_sum(S, degree_moments(deg, g.edge_count()));
}

// Generators ---------------------------------------------------------------

std::vector<int> sample_power_law_degrees(std::size_t n, double alpha, int d_min, int d_max, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("power-law degrees: n must be >= 2");
  if (!(alpha > 1.0)) throw std::invalid_argument("power-law degrees: alpha must be > 1");
  if (d_min < 1 || d_min > d_max || static_cast<std::size_t>(d_max) >= n)
    throw std::invalid_argument("power-law degrees: need 1 <= d_min <= d_max < n");

  std::vector<double> cdf;
  double total = 0.0;
  for (int k = d_min; k <= d_max; ++k) {
    total += std::pow(static_cast<double>(k), -alpha);
    cdf.push_back(total);
  }
  for (double& c : cdf) c /= total;

  Rng rng(seed);
  constexpr int kMaxRetries = 100;
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    std::vector<int> deg(n);
    long long sum = 0;
    for (auto& d : deg) {
      const double u = uniform01(rng);
      const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
      d = d_min + static_cast<int>(std::min<std::ptrdiff_t>(it - cdf.begin(), cdf.size() - 1));
      sum += d;
    }
    if (sum % 2 == 0) return deg;
    std::vector<std::size_t> below;
    for (std::size_t v = 0; v < n; ++v)
      if (deg[v] < d_max) below.push_back(v);
    if (below.empty()) continue;
    ++deg[below[uniform_index(rng, below.size())]];
    return deg;
  }
  throw GraphError("power-law degrees: could not obtain an even stub sum");
}

Graph configuration_model(std::vector<int> degrees, std::uint64_t seed) {
  const std::size_t n = degrees.size();
  long long sum = 0;
  for (int d : degrees) {
    if (d < 1 || static_cast<std::size_t>(d) >= n) throw GraphError("configuration model: degree out of range");
    sum += d;
  }
  if (sum % 2 != 0) throw GraphError("configuration model: odd stub sum");

  std::vector<Node> stubs;
  stubs.reserve(sum);
  for (std::size_t v = 0; v < n; ++v) stubs.insert(stubs.end(), degrees[v], static_cast<Node>(v));

  Rng rng(seed);
  constexpr int kMaxRestarts = 50;
  for (int restart = 0; restart < kMaxRestarts; ++restart) {
    shuffle(stubs, rng);
    std::vector<Edge> good;
    good.reserve(sum / 2);
    std::unordered_set<std::uint64_t> present;
    present.reserve(sum);
    std::vector<Edge> bad;
    for (std::size_t i = 0; i + 1 < stubs.size(); i += 2) {
      const Node a = stubs[i], b = stubs[i + 1];
      if (a == b || present.count(edge_key(a, b))) {
        bad.push_back({a, b});
      } else {
        present.insert(edge_key(a, b));
        good.push_back({a, b});
      }
    }

    const std::size_t limit = 200 * bad.size() + 1000;
    std::size_t attempts = 0;
    while (!bad.empty() && !good.empty() && attempts < limit) {
      ++attempts;
      const auto [a, b] = bad.back();
      const std::size_t j = uniform_index(rng, good.size());
      Node c = good[j].u, d = good[j].v;
      if (bernoulli(rng, 0.5)) std::swap(c, d);
      // rematch (a,b),(c,d) -> (a,c),(b,d)
      if (a == c || b == d) continue;
      const auto k1 = edge_key(a, c), k2 = edge_key(b, d);
      if (k1 == k2 || present.count(k1) || present.count(k2)) continue;
      present.erase(edge_key(c, d));
      good[j] = {a, c};
      good.push_back({b, d});
      present.insert(k1);
      present.insert(k2);
      bad.pop_back();
    }
    if (bad.empty()) return Graph::from_edges(n, good);
  }
  throw GraphError("configuration model: could not realize a simple graph for this degree sequence");
}

Graph generate_configuration_model(std::size_t n, double alpha, int d_min, int d_max, std::uint64_t seed) {
  auto degrees = sample_power_law_degrees(n, alpha, d_min, d_max, derive_seed(seed, {1}));
  return configuration_model(std::move(degrees), derive_seed(seed, {2}));
}

Graph generate_erdos_renyi(std::size_t n, double avg_degree, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("erdos-renyi: n must be >= 2");
  if (!(avg_degree > 0.0) || avg_degree > static_cast<double>(n - 1))
    throw std::invalid_argument("erdos-renyi: need 0 < avg_degree <= n-1");
  const double p = avg_degree / static_cast<double>(n - 1);

  std::vector<Edge> edges;
  if (p >= 1.0) {
    for (std::size_t v = 1; v < n; ++v)
      for (std::size_t w = 0; w < v; ++w) edges.push_back({static_cast<Node>(w), static_cast<Node>(v)});
  } else {
    // Geometric skipping over the lower triangle.
    Rng rng(seed);
    const double log_q = std::log1p(-p);
    long long v = 1, w = -1;
    const long long N = static_cast<long long>(n);
    while (v < N) {
      const double r = uniform01(rng);
      w += 1 + static_cast<long long>(std::floor(std::log1p(-r) / log_q));
      while (w >= v && v < N) {
        w -= v;
        ++v;
      }
      if (v < N) edges.push_back({static_cast<Node>(w), static_cast<Node>(v)});
    }
  }

  std::vector<int> deg(n, 0);
  for (const Edge& e : edges) {
    ++deg[e.u];
    ++deg[e.v];
  }
  std::vector<Node> relabel(n, -1);
  Node next = 0;
  for (std::size_t v = 0; v < n; ++v)
    if (deg[v] > 0) relabel[v] = next++;
  if (next < 2) throw GraphError("erdos-renyi: realization has no edges");
  for (Edge& e : edges) e = {relabel[e.u], relabel[e.v]};
  return Graph::from_edges(static_cast<std::size_t>(next), edges);
}

RewireResult rewire_to_assortativity(const Graph& g, double target_rkk, double tol, std::size_t max_steps,
                                     std::uint64_t seed) {
  const auto deg = g.degree_sequence();
  std::vector<Edge> edges = g.edges();
  const DegreeMoments m = degree_moments(deg, edges.size());

  double S = 0.0;
  for (const Edge& e : edges) S += static_cast<double>(deg[e.u]) * deg[e.v];
  double r = rkk_from_sum(S, m);

  RewireResult out;
  if (std::abs(r - target_rkk) <= tol || edges.size() < 2) {
    out.graph = g;
    out.achieved_rkk = r;
    out.converged = std::abs(r - target_rkk) <= tol;
    return out;
  }

  std::unordered_set<std::uint64_t> present;
  present.reserve(edges.size() * 2);
  for (const Edge& e : edges) present.insert(edge_key(e.u, e.v));

  Rng rng(seed);
  std::size_t step = 0;
  while (step < max_steps && std::abs(r - target_rkk) > tol) {
    ++step;
    const std::size_t i = uniform_index(rng, edges.size());
    const std::size_t j = uniform_index(rng, edges.size());
    if (i == j) continue;
    Node a = edges[i].u, b = edges[i].v;
    Node c = edges[j].u, d = edges[j].v;
    if (bernoulli(rng, 0.5)) std::swap(c, d);
    // (a,b),(c,d) -> (a,d),(c,b)
    if (a == d || c == b) continue;
    const auto k1 = edge_key(a, d), k2 = edge_key(c, b);
    if (k1 == k2 || present.count(k1) || present.count(k2)) continue;
    const double dS = static_cast<double>(deg[a]) * deg[d] + static_cast<double>(deg[c]) * deg[b] -
                      static_cast<double>(deg[a]) * deg[b] - static_cast<double>(deg[c]) * deg[d];
    const double r_new = rkk_from_sum(S + dS, m);
    if (std::abs(r_new - target_rkk) >= std::abs(r - target_rkk)) continue;
    present.erase(edge_key(a, b));
    present.erase(edge_key(c, d));
    present.insert(k1);
    present.insert(k2);
    edges[i] = {a, d};
    edges[j] = {c, b};
    S += dS;
    r = r_new;
    ++out.accepted_swaps;
  }
  out.proposals = step;
  std::vector<std::uint8_t> labels(g.labels().begin(), g.labels().end());
  out.graph = Graph::from_edges(g.node_count(), edges, std::move(labels));
  // Recompute from scratch so the reported value carries no drift from the running sum.
  out.achieved_rkk = assortativity(out.graph);
  out.converged = std::abs(out.achieved_rkk - target_rkk) <= tol;
  return out;
}

LabelResult assign_labels(const Graph& g, double fraction, double target_pks, double tol, std::uint64_t seed,
                          std::size_t max_steps) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw std::invalid_argument("assign_labels: fraction outside [0,1]");
  const std::size_t M = g.node_count();
  const auto count = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(M)));
  const auto deg = g.degree_sequence();

  Rng rng(seed);
  std::vector<Node> order(M);
  std::iota(order.begin(), order.end(), 0);
  shuffle(order, rng);
  std::vector<std::uint8_t> labels(M, 0);
  for (std::size_t i = 0; i < count; ++i) labels[order[i]] = 1;

  const double rho = static_cast<double>(count) / static_cast<double>(M);
  double mean_k = 0.0, mean_k2 = 0.0;
  for (int d : deg) {
    mean_k += d;
    mean_k2 += static_cast<double>(d) * d;
  }
  mean_k /= static_cast<double>(M);
  mean_k2 /= static_cast<double>(M);
  const double sigma_k = std::sqrt(std::max(mean_k2 - mean_k * mean_k, 0.0));
  const double sigma_s = std::sqrt(rho * (1.0 - rho));

  LabelResult out;
  if (sigma_s <= 0.0 || sigma_k <= 1e-12 * mean_k) {
    out.graph = g.with_labels(std::move(labels));
    out.achieved_pks = 0.0;
    out.degenerate = true;
    out.converged = false;
    return out;
  }

  // ones = order[0, count), zeros = order[count, M)
  double S = 0.0;
  for (std::size_t i = 0; i < count; ++i) S += deg[order[i]];
  const auto pks_of = [&](double sum) { return (sum / static_cast<double>(M) - rho * mean_k) / (sigma_k * sigma_s); };
  double p = pks_of(S);

  if (max_steps == 0) max_steps = 200 * M + 10000;
  for (std::size_t step = 0; step < max_steps && std::abs(p - target_pks) > tol; ++step) {
    const std::size_t i = uniform_index(rng, count);
    const std::size_t j = count + uniform_index(rng, M - count);
    const double S_new = S - deg[order[i]] + deg[order[j]];
    const double p_new = pks_of(S_new);
    if (std::abs(p_new - target_pks) < std::abs(p - target_pks)) {
      std::swap(order[i], order[j]);
      S = S_new;
      p = p_new;
    }
  }
  std::fill(labels.begin(), labels.end(), 0);
  for (std::size_t i = 0; i < count; ++i) labels[order[i]] = 1;
  out.graph = g.with_labels(std::move(labels));
  out.achieved_pks = degree_stats(out.graph).pks;
  out.converged = std::abs(out.achieved_pks - target_pks) <= tol;
  return out;
}

// Named graphs ---------------------------------------------------------------

Graph largest_component(const Graph& g) {
  const std::size_t n = g.node_count();
  std::vector<int> comp(n, -1);
  int best = -1;
  std::size_t best_size = 0;
  int c = 0;
  for (Node s = 0; s < static_cast<Node>(n); ++s) {
    if (comp[s] >= 0) continue;
    std::vector<Node> stack{s};
    comp[s] = c;
    std::size_t size = 1;
    while (!stack.empty()) {
      const Node v = stack.back();
      stack.pop_back();
      for (Node u : g.neighbors(v))
        if (comp[u] < 0) {
          comp[u] = c;
          ++size;
          stack.push_back(u);
        }
    }
    if (size > best_size) {
      best_size = size;
      best = c;
    }
    ++c;
  }
  if (c <= 1) return g;

  std::vector<Node> id(n, -1);
  std::vector<std::uint8_t> labels;
  for (Node v = 0; v < static_cast<Node>(n); ++v)
    if (comp[v] == best) {
      id[v] = static_cast<Node>(labels.size());
      labels.push_back(g.label(v));
    }
  std::vector<Edge> e;
  for (const Edge& x : g.edges())
    if (comp[x.u] == best) e.push_back({id[x.u], id[x.v]});
  const std::size_t m = labels.size();
  return Graph::from_edges(m, e, std::move(labels));
}

Graph make_star(int leaves) {
  std::vector<Edge> e;
  for (int i = 1; i <= leaves; ++i) e.push_back({0, i});
  return Graph::from_edges(leaves + 1, e);
}

Graph make_path(int nodes) {
  std::vector<Edge> e;
  for (int i = 0; i + 1 < nodes; ++i) e.push_back({i, i + 1});
  return Graph::from_edges(nodes, e);
}

Graph make_cycle(int nodes) {
  std::vector<Edge> e;
  for (int i = 0; i < nodes; ++i) e.push_back({i, (i + 1) % nodes});
  return Graph::from_edges(nodes, e);
}

Graph make_complete(int nodes) {
  std::vector<Edge> e;
  for (int i = 0; i < nodes; ++i)
    for (int j = i + 1; j < nodes; ++j) e.push_back({i, j});
  return Graph::from_edges(nodes, e);
}

// IO -------------------------------------------------------------------------

void write_edge_list(const Graph& g, std::ostream& out) {
  for (const Edge& e : g.edges()) out << e.u << ' ' << e.v << '\n';
}

void write_labels(const Graph& g, std::ostream& out) {
  for (std::size_t v = 0; v < g.node_count(); ++v) out << v << ' ' << int(g.label(static_cast<Node>(v))) << '\n';
}

Graph read_graph(std::istream& edges_in, std::istream* labels_in) {
  std::vector<Edge> edges;
  long long max_id = -1;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(edges_in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    long long u, v;
    if (!(ls >> u >> v)) throw GraphError("edge list line " + std::to_string(lineno) + ": expected \"u v\"");
    if (u < 0 || v < 0 || u > INT32_MAX || v > INT32_MAX)
      throw GraphError("edge list line " + std::to_string(lineno) + ": node id out of range");
    edges.push_back({static_cast<Node>(u), static_cast<Node>(v)});
    max_id = std::max({max_id, u, v});
  }
  if (max_id < 0) throw GraphError("edge list is empty");
  const auto n = static_cast<std::size_t>(max_id + 1);

  std::vector<std::uint8_t> labels(n, 0);
  if (labels_in) {
    std::vector<char> seen(n, 0);
    lineno = 0;
    while (std::getline(*labels_in, line)) {
      ++lineno;
      if (line.empty() || line[0] == '#') continue;
      std::istringstream ls(line);
      long long v, s;
      if (!(ls >> v >> s)) throw GraphError("label line " + std::to_string(lineno) + ": expected \"v s\"");
      if (v < 0 || static_cast<std::size_t>(v) >= n)
        throw GraphError("label line " + std::to_string(lineno) + ": unknown node " + std::to_string(v));
      if (s != 0 && s != 1) throw GraphError("label line " + std::to_string(lineno) + ": label must be 0 or 1");
      if (seen[v]) throw GraphError("label line " + std::to_string(lineno) + ": duplicate node " + std::to_string(v));
      seen[v] = 1;
      labels[v] = static_cast<std::uint8_t>(s);
    }
  }
  return Graph::from_edges(n, edges, std::move(labels));
}

Graph load_graph(const std::filesystem::path& edges, const std::filesystem::path& labels) {
  std::ifstream ein(edges);
  if (!ein) throw GraphError("cannot open edge list " + edges.string());
  if (labels.empty()) return read_graph(ein);
  std::ifstream lin(labels);
  if (!lin) throw GraphError("cannot open label file " + labels.string());
  return read_graph(ein, &lin);
}

void save_graph(const Graph& g, const std::filesystem::path& edges, const std::filesystem::path& labels) {
  std::ofstream eout(edges);
  write_edge_list(g, eout);
  std::ofstream lout(labels);
  write_labels(g, lout);
}

}  // namespace fpsis
