#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <queue>
#include <vector>

#include <Eigen/Dense>

#include "rescomp/error.hpp"
#include "rescomp/graphkit.hpp"

namespace oracle {

using rescomp::Matrix;
using rescomp::Vector;
using rescomp::graphkit::Edge;
using rescomp::graphkit::Topology;

// W' in user labels built straight from W: malicious rows become basis rows.
inline Matrix operated(const Matrix& w, const std::vector<int>& malicious) {
  Matrix out = w;
  for (int m : malicious) {
    out.row(m - 1).setZero();
    out(m - 1, m - 1) = 1.0;
  }
  return out;
}

// Full N x N inverse, no block structure.
inline Matrix steady(const Matrix& w, const std::vector<int>& malicious, double lambda) {
  const int n = static_cast<int>(w.rows());
  const Matrix a = Matrix::Identity(n, n) - (1.0 - lambda) * operated(w, malicious);
  return lambda * a.fullPivLu().inverse();
}

inline bool contains(const std::vector<int>& v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

// e_R = tr(Sigma E^T E) with E = S_R L - C_R S_R, built entrywise in user labels.
inline double error(const Matrix& w, const std::vector<int>& malicious, double lambda, double d,
                    const Vector& variances = {}) {
  const int n = static_cast<int>(w.rows());
  const Matrix l = steady(w, malicious, lambda);
  std::vector<int> reg;
  for (int i = 1; i <= n; ++i)
    if (!contains(malicious, i)) reg.push_back(i);
  const int r = static_cast<int>(reg.size());
  Matrix e(r, n);
  for (int a = 0; a < r; ++a)
    for (int j = 1; j <= n; ++j) {
      const double c = contains(malicious, j) ? 0.0 : 1.0 / r;
      e(a, j - 1) = l(reg[a] - 1, j - 1) - c;
    }
  Matrix sigma = Matrix::Zero(n, n);
  for (int j = 1; j <= n; ++j) {
    sigma(j - 1, j - 1) = variances.size() ? variances(j - 1) : 1.0;
    if (contains(malicious, j)) sigma(j - 1, j - 1) += d;
  }
  return (sigma * e.transpose() * e).trace();
}

// Five-point central difference.
inline double derivative(const std::function<double(double)>& f, double x, double h) {
  return (-f(x + 2 * h) + 8 * f(x + h) - 8 * f(x - h) + f(x - 2 * h)) / (12 * h);
}

inline bool connected(int n, const std::vector<Edge>& edges) {
  std::vector<std::vector<int>> adj(n + 1);
  for (const auto& e : edges) {
    adj[e.u].push_back(e.v);
    adj[e.v].push_back(e.u);
  }
  std::vector<char> seen(n + 1, 0);
  std::queue<int> q;
  q.push(1);
  seen[1] = 1;
  int count = 1;
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (int v : adj[u])
      if (!seen[v]) {
        seen[v] = 1;
        ++count;
        q.push(v);
      }
  }
  return count == n;
}

// Largest matching by exhaustive subset search (edges <= ~20).
inline int max_matching_size(int n, const std::vector<Edge>& edges) {
  int best = 0;
  const std::size_t m = edges.size();
  for (unsigned long mask = 0; mask < (1UL << m); ++mask) {
    std::vector<char> used(n + 1, 0);
    int size = 0;
    bool ok = true;
    for (std::size_t k = 0; k < m && ok; ++k) {
      if (!(mask >> k & 1UL)) continue;
      if (used[edges[k].u] || used[edges[k].v]) ok = false;
      used[edges[k].u] = used[edges[k].v] = 1;
      ++size;
    }
    if (ok) best = std::max(best, size);
  }
  return best;
}

inline bool is_matching(const std::vector<Edge>& edges, int n) {
  std::vector<int> hits(n + 1, 0);
  for (const auto& e : edges)
    if (++hits[e.u] > 1 || ++hits[e.v] > 1) return false;
  return true;
}

// G_K = sum_{k<K} (1-l)^{2(k+1)} W11^k w w^T (W11^T)^k by explicit matrix powers.
inline Matrix gramian(const Matrix& w11, const Vector& wm, double lambda, int horizon) {
  const int r = static_cast<int>(w11.rows());
  Matrix g = Matrix::Zero(r, r);
  Matrix p = Matrix::Identity(r, r);
  for (int k = 0; k < horizon; ++k) {
    const Vector u = p * wm;
    g += std::pow(1.0 - lambda, 2 * (k + 1)) * u * u.transpose();
    p = p * w11;
  }
  return g;
}


// Worst case over single adversaries, by rescanning every node with the dense routes.
struct Objective {
  bool consensus_error = true;
  double lambda = 0.5;
  double d = 0.0;
  int horizon = 0;  // <= 0 means K = R
};

struct Worst {
  int node = 0;
  double value = 0.0;
};

inline Worst worst_node(const Matrix& w, const Objective& obj) {
  const int n = static_cast<int>(w.rows());
  Worst best{0, -1.0};
  for (int m = 1; m <= n; ++m) {
    double v = 0.0;
    if (obj.consensus_error) {
      v = error(w, {m}, obj.lambda, obj.d);
    } else {
      Matrix w11(n - 1, n - 1);
      Vector wm(n - 1);
      for (int a = 0, ia = 0; a < n; ++a) {
        if (a == m - 1) continue;
        wm(ia) = w(a, m - 1);
        for (int b = 0, ib = 0; b < n; ++b) {
          if (b == m - 1) continue;
          w11(ia, ib++) = w(a, b);
        }
        ++ia;
      }
      v = gramian(w11, wm, obj.lambda, obj.horizon > 0 ? obj.horizon : n - 1).trace();
    }
    if (best.node == 0 || v > best.value + 1e-9 * std::max(1.0, std::abs(best.value))) best = {m, v};
  }
  return best;
}

struct Removal {
  Edge edge;
  Worst worst;
};

// Exhaustive argmin over the admissible edges of one greedy step; nullopt when none is usable.
inline std::optional<Removal> best_removal(const Topology& t, const std::vector<int>& removed, const Objective& obj) {
  std::optional<Removal> best;
  for (const auto& e : t.edges()) {
    if (removed[e.u - 1] || removed[e.v - 1]) continue;
    std::vector<Edge> rest;
    for (const auto& f : t.edges())
      if (!(f == e)) rest.push_back(f);
    if (!connected(t.n(), rest)) continue;
    Matrix w;
    try {
      w = rescomp::graphkit::reweigh(Topology(t.n(), rest)).entries();
    } catch (const rescomp::Error&) {
      continue;
    }
    const Worst worst = worst_node(w, obj);
    if (!best || worst.value < best->worst.value - 1e-9 * std::max(1.0, std::abs(best->worst.value)))
      best = Removal{e, worst};
  }
  return best;
}

}  // namespace oracle
