#pragma once

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace rescomp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

}  // namespace rescomp

namespace rescomp::graphkit {

// Undirected edge between 1-based node labels, normalized so that u < v.
struct Edge {
  int u = 0;
  int v = 0;

  auto operator<=>(const Edge&) const = default;
};

Edge make_edge(int a, int b);

// Simple undirected graph on nodes 1..n. Edges are kept sorted.
class Topology {
 public:
  Topology(int n, std::vector<Edge> edges);

  int n() const { return n_; }
  const std::vector<Edge>& edges() const { return edges_; }
  std::size_t edge_count() const { return edges_.size(); }

  // degrees()[i] is the degree of node i + 1.
  const std::vector<int>& degrees() const { return degrees_; }
  int degree(int node) const { return degrees_.at(node - 1); }

  bool has_edge(const Edge& e) const;
  std::vector<std::vector<int>> neighbors() const;  // 0-based lists of 1-based labels
  Matrix adjacency() const;

  bool connected() const;
  // Common degree if every node has it.
  std::optional<int> regular_degree() const;

  bool operator==(const Topology&) const = default;

 private:
  int n_;
  std::vector<Edge> edges_;
  std::vector<int> degrees_;
};

Topology cycle_graph(int n);
Topology path_graph(int n);
Topology star_graph(int leaves);
Topology complete_graph(int n);
Topology petersen_graph();

// Symmetric doubly-stochastic, zero-diagonal, nonnegative, irreducible.
class WeightMatrix {
 public:
  // Validates every invariant; throws Error(kPrecondition) naming the first violation.
  static WeightMatrix from_matrix(Matrix entries);

  int n() const { return static_cast<int>(entries_.rows()); }
  const Matrix& entries() const { return entries_; }
  // 1-based access.
  double operator()(int i, int j) const { return entries_(i - 1, j - 1); }

  Topology support() const;

 private:
  explicit WeightMatrix(Matrix entries) : entries_(std::move(entries)) {}
  Matrix entries_;
};

// W with malicious rows replaced by standard basis rows. Internally the malicious
// nodes are moved to the last M indices; order() maps internal index -> label.
class OperatedWeights {
 public:
  OperatedWeights(WeightMatrix base, std::vector<int> malicious);

  const WeightMatrix& base() const { return base_; }
  int n() const { return base_.n(); }
  int r() const { return static_cast<int>(regular_.size()); }
  int m() const { return static_cast<int>(malicious_.size()); }

  const std::vector<int>& malicious() const { return malicious_; }  // labels, caller order
  const std::vector<int>& regular() const { return regular_; }      // labels, ascending
  const std::vector<int>& order() const { return order_; }          // internal -> label
  int internal_index(int label) const { return position_.at(label - 1); }
  bool is_malicious(int label) const { return internal_index(label) >= r(); }

  const Matrix& entries() const { return entries_; }    // W', user labelling
  const Matrix& permuted() const { return permuted_; }  // W', [R | M] labelling
  const Matrix& w11() const { return w11_; }
  const Matrix& w12() const { return w12_; }

  // Reorder a vector given in user labels into internal order, and back.
  Vector to_internal(const Vector& by_label) const;
  Vector to_labels(const Vector& internal) const;
  // n x n matrix in internal order -> user labels (rows and columns).
  Matrix to_labels(const Matrix& internal) const;

 private:
  WeightMatrix base_;
  std::vector<int> malicious_;
  std::vector<int> regular_;
  std::vector<int> order_;
  std::vector<int> position_;
  Matrix entries_;
  Matrix permuted_;
  Matrix w11_;
  Matrix w12_;
};

struct Matching {
  std::vector<Edge> edges;
  bool is_perfect = false;
};

struct RegularOptions {
  int max_resamples = 1000;
};

Topology gen_regular(int n, int delta, std::uint64_t seed, RegularOptions options = {});
WeightMatrix uniform_weights(const Topology& t);
WeightMatrix reweigh(const Topology& t);
OperatedWeights apply_malicious(const WeightMatrix& w, std::span<const int> malicious);
Matching max_matching(const Topology& t);
Topology remove_edges(const Topology& t, std::span<const Edge> edges);

// Edge-list text: "n <count>" header, then one "u v" pair per line.
void write_edge_list(std::ostream& os, const Topology& t);
Topology read_edge_list(std::istream& is);
// n rows of n comma-separated decimals.
void write_weights_csv(std::ostream& os, const WeightMatrix& w);
WeightMatrix read_weights_csv(std::istream& is);

}  // namespace rescomp::graphkit
