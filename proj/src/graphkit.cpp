#include "rescomp/graphkit.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <boost/graph/adjacency_list.hpp>
#include <boost/graph/max_cardinality_matching.hpp>

#include "rescomp/error.hpp"

namespace rescomp {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kPrecondition: return "precondition";
    case ErrorKind::kConfig: return "config";
    case ErrorKind::kInfeasible: return "infeasible";
    case ErrorKind::kNumerical: return "numerical";
    case ErrorKind::kGeneration: return "generation";
    case ErrorKind::kUnsupported: return "unsupported";
  }
  return "unknown";
}

}  // namespace rescomp

namespace rescomp::graphkit {

namespace {

constexpr double kStochasticTol = 1e-10;
constexpr double kSymmetryTol = 1e-12;

std::string edge_name(const Edge& e) {
  return "(" + std::to_string(e.u) + "," + std::to_string(e.v) + ")";
}

}  // namespace

Edge make_edge(int a, int b) { return a < b ? Edge{a, b} : Edge{b, a}; }

Topology::Topology(int n, std::vector<Edge> edges) : n_(n), edges_(std::move(edges)), degrees_(n, 0) {
  require(n >= 1, "topology needs at least one node");
  for (auto& e : edges_) {
    require(e.u != e.v, "self-pair " + edge_name(e));
    require(e.u >= 1 && e.v >= 1 && e.u <= n && e.v <= n, "edge endpoint out of range " + edge_name(e));
    e = make_edge(e.u, e.v);
  }
  std::sort(edges_.begin(), edges_.end());
  auto dup = std::adjacent_find(edges_.begin(), edges_.end());
  require(dup == edges_.end(), dup == edges_.end() ? "" : "duplicate edge " + edge_name(*dup));
  for (const auto& e : edges_) {
    ++degrees_[e.u - 1];
    ++degrees_[e.v - 1];
  }
}

bool Topology::has_edge(const Edge& e) const {
  return std::binary_search(edges_.begin(), edges_.end(), make_edge(e.u, e.v));
}

std::vector<std::vector<int>> Topology::neighbors() const {
  std::vector<std::vector<int>> adj(n_);
  for (const auto& e : edges_) {
    adj[e.u - 1].push_back(e.v);
    adj[e.v - 1].push_back(e.u);
  }
  for (auto& row : adj) std::sort(row.begin(), row.end());
  return adj;
}

Matrix Topology::adjacency() const {
  Matrix a = Matrix::Zero(n_, n_);
  for (const auto& e : edges_) {
    a(e.u - 1, e.v - 1) = 1.0;
    a(e.v - 1, e.u - 1) = 1.0;
  }
  return a;
}

bool Topology::connected() const {
  const auto adj = neighbors();
  std::vector<char> seen(n_, 0);
  std::queue<int> frontier;
  frontier.push(1);
  seen[0] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    const int u = frontier.front();
    frontier.pop();
    for (int v : adj[u - 1]) {
      if (!seen[v - 1]) {
        seen[v - 1] = 1;
        ++reached;
        frontier.push(v);
      }
    }
  }
  return reached == n_;
}

std::optional<int> Topology::regular_degree() const {
  if (std::all_of(degrees_.begin(), degrees_.end(), [&](int d) { return d == degrees_.front(); })) {
    return degrees_.front();
  }
  return std::nullopt;
}

Topology cycle_graph(int n) {
  require(n >= 3, "cycle needs n >= 3");
  std::vector<Edge> edges;
  for (int i = 1; i <= n; ++i) edges.push_back(make_edge(i, i % n + 1));
  return Topology(n, std::move(edges));
}

Topology path_graph(int n) {
  require(n >= 2, "path needs n >= 2");
  std::vector<Edge> edges;
  for (int i = 1; i < n; ++i) edges.push_back({i, i + 1});
  return Topology(n, std::move(edges));
}

Topology star_graph(int leaves) {
  require(leaves >= 1, "star needs a leaf");
  std::vector<Edge> edges;
  for (int i = 2; i <= leaves + 1; ++i) edges.push_back({1, i});
  return Topology(leaves + 1, std::move(edges));
}

Topology complete_graph(int n) {
  std::vector<Edge> edges;
  for (int i = 1; i <= n; ++i)
    for (int j = i + 1; j <= n; ++j) edges.push_back({i, j});
  return Topology(n, std::move(edges));
}

Topology petersen_graph() {
  std::vector<Edge> edges;
  for (int i = 0; i < 5; ++i) {
    edges.push_back(make_edge(i + 1, (i + 1) % 5 + 1));              // outer cycle
    edges.push_back(make_edge(i + 1, i + 6));                        // spokes
    edges.push_back(make_edge(i + 6, (i + 2) % 5 + 6));              // inner pentagram
  }
  return Topology(10, std::move(edges));
}

WeightMatrix WeightMatrix::from_matrix(Matrix w) {
  const Eigen::Index n = w.rows();
  require(n >= 2 && w.cols() == n, "weight matrix must be square with n >= 2");
  require(w.allFinite(), "weight matrix has non-finite entries");
  require((w - w.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTol, "weight matrix is not symmetric");
  require(w.minCoeff() >= 0.0, "weight matrix has negative entries");
  for (Eigen::Index i = 0; i < n; ++i) {
    require(w(i, i) == 0.0, "weight matrix diagonal must be zero (node " + std::to_string(i + 1) + ")");
    require(std::abs(w.row(i).sum() - 1.0) <= kStochasticTol,
            "row " + std::to_string(i + 1) + " does not sum to 1");
    require(std::abs(w.col(i).sum() - 1.0) <= kStochasticTol,
            "column " + std::to_string(i + 1) + " does not sum to 1");
  }
  WeightMatrix out(std::move(w));
  require(out.support().connected(), "weight matrix is reducible (support graph disconnected)");
  return out;
}

Topology WeightMatrix::support() const {
  std::vector<Edge> edges;
  for (int i = 0; i < n(); ++i)
    for (int j = i + 1; j < n(); ++j)
      if (entries_(i, j) > 0.0) edges.push_back({i + 1, j + 1});
  return Topology(n(), std::move(edges));
}

OperatedWeights::OperatedWeights(WeightMatrix base, std::vector<int> malicious)
    : base_(std::move(base)), malicious_(std::move(malicious)) {
  const int n = base_.n();
  require(!malicious_.empty(), "malicious set must be nonempty");
  require(static_cast<int>(malicious_.size()) < n, "malicious set must leave at least one regular node");
  position_.assign(n, -1);
  std::vector<char> flagged(n, 0);
  for (int m : malicious_) {
    require(m >= 1 && m <= n, "malicious node out of range: " + std::to_string(m));
    require(!flagged[m - 1], "malicious node listed twice: " + std::to_string(m));
    flagged[m - 1] = 1;
  }
  for (int i = 1; i <= n; ++i)
    if (!flagged[i - 1]) regular_.push_back(i);
  order_ = regular_;
  order_.insert(order_.end(), malicious_.begin(), malicious_.end());
  for (int k = 0; k < n; ++k) position_[order_[k] - 1] = k;

  entries_ = base_.entries();
  for (int m : malicious_) {
    entries_.row(m - 1).setZero();
    entries_(m - 1, m - 1) = 1.0;
  }
  permuted_.resize(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) permuted_(a, b) = entries_(order_[a] - 1, order_[b] - 1);
  const int r = this->r();
  w11_ = permuted_.topLeftCorner(r, r);
  w12_ = permuted_.topRightCorner(r, n - r);
}

Vector OperatedWeights::to_internal(const Vector& by_label) const {
  require(by_label.size() == n(), "vector length must equal node count");
  Vector out(n());
  for (int k = 0; k < n(); ++k) out(k) = by_label(order_[k] - 1);
  return out;
}

Vector OperatedWeights::to_labels(const Vector& internal) const {
  require(internal.size() == n(), "vector length must equal node count");
  Vector out(n());
  for (int k = 0; k < n(); ++k) out(order_[k] - 1) = internal(k);
  return out;
}

Matrix OperatedWeights::to_labels(const Matrix& internal) const {
  require(internal.rows() == n() && internal.cols() == n(), "matrix must be n x n");
  Matrix out(n(), n());
  for (int a = 0; a < n(); ++a)
    for (int b = 0; b < n(); ++b) out(order_[a] - 1, order_[b] - 1) = internal(a, b);
  return out;
}

Topology gen_regular(int n, int delta, std::uint64_t seed, RegularOptions options) {
  require(n >= 3, "regular graph needs n >= 3");
  require(delta >= 1 && delta < n, "degree must satisfy 1 <= delta < n");
  if ((static_cast<long long>(n) * delta) % 2 != 0) {
    fail(ErrorKind::kPrecondition, "parity: n * delta must be even (n=" + std::to_string(n) +
                                       ", delta=" + std::to_string(delta) + ")");
  }
  std::mt19937_64 rng(seed);

  // Configuration-model pairing; stubs of rejected pairs (loops, repeats) go back
  // into the pool and are re-paired. A pool with no admissible pair forces a resample.
  auto try_pairing = [&]() -> std::optional<std::set<Edge>> {
    std::set<Edge> edges;
    std::vector<int> stubs;
    stubs.reserve(static_cast<std::size_t>(n) * delta);
    for (int i = 1; i <= n; ++i) stubs.insert(stubs.end(), delta, i);
    while (!stubs.empty()) {
      std::shuffle(stubs.begin(), stubs.end(), rng);
      std::vector<int> leftover;
      for (std::size_t k = 0; k + 1 < stubs.size(); k += 2) {
        const int a = stubs[k];
        const int b = stubs[k + 1];
        if (a != b && !edges.contains(make_edge(a, b))) {
          edges.insert(make_edge(a, b));
        } else {
          leftover.push_back(a);
          leftover.push_back(b);
        }
      }
      if (leftover.size() == stubs.size()) {
        bool admissible = false;
        for (std::size_t i = 0; i < leftover.size() && !admissible; ++i)
          for (std::size_t j = i + 1; j < leftover.size() && !admissible; ++j)
            admissible = leftover[i] != leftover[j] && !edges.contains(make_edge(leftover[i], leftover[j]));
        if (!admissible) return std::nullopt;
      }
      stubs = std::move(leftover);
    }
    return edges;
  };

  for (int attempt = 0; attempt < options.max_resamples; ++attempt) {
    auto edges = try_pairing();
    if (!edges) continue;
    Topology t(n, std::vector<Edge>(edges->begin(), edges->end()));
    if (t.connected()) return t;
  }
  fail(ErrorKind::kGeneration, "no connected simple " + std::to_string(delta) + "-regular graph on " +
                                   std::to_string(n) + " nodes after " + std::to_string(options.max_resamples) +
                                   " resamples");
}

WeightMatrix uniform_weights(const Topology& t) {
  const auto delta = t.regular_degree();
  require(delta.has_value() && *delta > 0, "uniform weights need a regular graph; use reweigh() instead");
  require(t.connected(), "uniform weights need a connected graph");
  return WeightMatrix::from_matrix(t.adjacency() / static_cast<double>(*delta));
}

WeightMatrix reweigh(const Topology& t) {
  require(t.connected(), "reweigh needs a connected graph");
  if (auto delta = t.regular_degree(); delta && *delta > 0) return uniform_weights(t);

  constexpr int kMaxIterations = 10000;
  const Matrix a = t.adjacency();
  Vector x = Vector::Ones(t.n());
  // Symmetric Sinkhorn-Knopp: x <- x / sqrt(row sums of diag(x) A diag(x)).
  for (int it = 0; it < kMaxIterations; ++it) {
    const Vector rows = x.cwiseProduct(a * x);
    if ((rows.array() - 1.0).abs().maxCoeff() <= 0.25 * kStochasticTol) {
      Matrix w = x.asDiagonal() * a * x.asDiagonal();
      w = 0.5 * (w + w.transpose());
      return WeightMatrix::from_matrix(std::move(w));
    }
    x = x.cwiseQuotient(rows.cwiseSqrt());
    if (!x.allFinite()) break;
  }
  fail(ErrorKind::kInfeasible,
       "infeasible pattern: no zero-diagonal doubly-stochastic scaling of this support (Sinkhorn did not "
       "converge in 10000 iterations)");
}

OperatedWeights apply_malicious(const WeightMatrix& w, std::span<const int> malicious) {
  return OperatedWeights(w, std::vector<int>(malicious.begin(), malicious.end()));
}

Matching max_matching(const Topology& t) {
  using Graph = boost::adjacency_list<boost::vecS, boost::vecS, boost::undirectedS>;
  Graph g(t.n());
  for (const auto& e : t.edges()) boost::add_edge(e.u - 1, e.v - 1, g);
  std::vector<boost::graph_traits<Graph>::vertex_descriptor> mate(t.n());
  boost::edmonds_maximum_cardinality_matching(g, &mate[0]);

  Matching out;
  const auto null_vertex = boost::graph_traits<Graph>::null_vertex();
  for (int i = 0; i < t.n(); ++i) {
    const auto j = mate[i];
    if (j != null_vertex && static_cast<int>(j) > i) out.edges.push_back({i + 1, static_cast<int>(j) + 1});
  }
  std::sort(out.edges.begin(), out.edges.end());
  out.is_perfect = 2 * static_cast<int>(out.edges.size()) == t.n();
  return out;
}

Topology remove_edges(const Topology& t, std::span<const Edge> edges) {
  std::set<Edge> drop;
  for (const auto& e : edges) {
    const Edge norm = make_edge(e.u, e.v);
    require(t.has_edge(norm), "unknown edge " + edge_name(norm));
    drop.insert(norm);
  }
  std::vector<Edge> kept;
  kept.reserve(t.edge_count());
  for (const auto& e : t.edges())
    if (!drop.contains(e)) kept.push_back(e);
  return Topology(t.n(), std::move(kept));
}

void write_edge_list(std::ostream& os, const Topology& t) {
  os << "n " << t.n() << '\n';
  for (const auto& e : t.edges()) os << e.u << ' ' << e.v << '\n';
}

Topology read_edge_list(std::istream& is) {
  std::string line;
  int n = -1;
  std::vector<Edge> edges;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    if (n < 0) {
      std::string tag;
      if (!(ls >> tag >> n) || tag != "n" || n < 1) fail(ErrorKind::kConfig, "edge list: expected header 'n <count>'");
      continue;
    }
    int u = 0;
    int v = 0;
    if (!(ls >> u >> v)) fail(ErrorKind::kConfig, "edge list: malformed line " + std::to_string(lineno));
    edges.push_back({u, v});
  }
  if (n < 0) fail(ErrorKind::kConfig, "edge list: missing header");
  return Topology(n, std::move(edges));
}

void write_weights_csv(std::ostream& os, const WeightMatrix& w) {
  const auto flags = os.flags();
  const auto precision = os.precision();
  os << std::setprecision(17);
  for (int i = 0; i < w.n(); ++i) {
    for (int j = 0; j < w.n(); ++j) os << (j ? "," : "") << w.entries()(i, j);
    os << '\n';
  }
  os.flags(flags);
  os.precision(precision);
}

WeightMatrix read_weights_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Matrix w(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != n) fail(ErrorKind::kConfig, "weights csv: matrix is not square");
    for (Eigen::Index j = 0; j < n; ++j) w(i, j) = rows[i][j];
  }
  return WeightMatrix::from_matrix(std::move(w));
}

}  // namespace rescomp::graphkit
