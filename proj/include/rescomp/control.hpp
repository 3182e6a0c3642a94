#pragma once

#include <iosfwd>

#include "rescomp/graphkit.hpp"

namespace rescomp::control {

using graphkit::OperatedWeights;

// Finite-horizon controllability Gramian of the malicious input channel
//   x_R(k+1) = (1 - lambda) W_R x_R(k) + lambda theta_R + (1 - lambda) W_m x_m(k),
// with W_R = W11 and W_m the regular-rows column of W12 belonging to node m.
struct GramianReport {
  double lambda = 0.0;
  int horizon = 0;  // K
  int node = 0;     // malicious label m
  Matrix gramian;   // R x R, regular nodes in ascending label order
  double controllability_index = 0.0;  // tr(G_K)
};

// k_horizon <= 0 selects the default K = R.
GramianReport gramian(const OperatedWeights& w, double lambda, int node, int k_horizon = 0);

// (1 - lambda)^2 sum_k ||(1 - lambda)^k W_R^k W_m||^2, without forming G_K.
double controllability_index(const OperatedWeights& w, double lambda, int node, int k_horizon = 0);

// ||L_m^{-m}||^2: squared norm of column m of L over the regular rows.
double collaboration_norm(const OperatedWeights& w, double lambda, int node);

// JSON with keys lambda, K, trace (and node).
void write_gramian_json(std::ostream& os, const GramianReport& report);
void write_gramian_csv(std::ostream& os, const GramianReport& report);

}  // namespace rescomp::control
