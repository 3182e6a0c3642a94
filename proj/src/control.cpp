#include "rescomp/control.hpp"

#include <iomanip>
#include <ostream>

#include "json.hpp"

#include "rescomp/analysis.hpp"
#include "rescomp/error.hpp"

namespace rescomp::control {

namespace {

struct Channel {
  int column = 0;
  int horizon = 0;
};

Channel channel(const OperatedWeights& w, double lambda, int node, int k_horizon) {
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
  require(node >= 1 && node <= w.n(), "node out of range");
  if (!w.is_malicious(node)) fail(ErrorKind::kPrecondition, "node " + std::to_string(node) + " is not malicious");
  return {w.internal_index(node) - w.r(), k_horizon > 0 ? k_horizon : w.r()};
}

}  // namespace

GramianReport gramian(const OperatedWeights& w, double lambda, int node, int k_horizon) {
  const auto ch = channel(w, lambda, node, k_horizon);
  const int r = w.r();
  const double a = 1.0 - lambda;
  GramianReport rep;
  rep.lambda = lambda;
  rep.horizon = ch.horizon;
  rep.node = node;
  rep.gramian = Matrix::Zero(r, r);
  // u_0 = W_m, u_{k+1} = (1 - lambda) W_R u_k; G_K = (1 - lambda)^2 sum_k u_k u_k^T.
  Vector u = w.w12().col(ch.column);
  for (int k = 0; k < ch.horizon; ++k) {
    rep.gramian.noalias() += u * u.transpose();
    u = a * (w.w11() * u);
  }
  rep.gramian *= a * a;
  rep.controllability_index = rep.gramian.trace();
  return rep;
}

double controllability_index(const OperatedWeights& w, double lambda, int node, int k_horizon) {
  const auto ch = channel(w, lambda, node, k_horizon);
  const double a = 1.0 - lambda;
  Vector u = w.w12().col(ch.column);
  double total = 0.0;
  for (int k = 0; k < ch.horizon; ++k) {
    total += u.squaredNorm();
    u = a * (w.w11() * u);
  }
  return a * a * total;
}

double collaboration_norm(const OperatedWeights& w, double lambda, int node) {
  const auto ch = channel(w, lambda, node, 0);
  return analysis::regular_blocks(w, lambda).l12.col(ch.column).squaredNorm();
}

void write_gramian_json(std::ostream& os, const GramianReport& report) {
  nlohmann::json j{{"lambda", report.lambda},
                   {"K", report.horizon},
                   {"node", report.node},
                   {"trace", report.controllability_index}};
  os << j.dump(2) << '\n';
}

void write_gramian_csv(std::ostream& os, const GramianReport& report) {
  const auto precision = os.precision();
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < report.gramian.rows(); ++i) {
    for (Eigen::Index j = 0; j < report.gramian.cols(); ++j) os << (j ? "," : "") << report.gramian(i, j);
    os << '\n';
  }
  os.precision(precision);
}

}  // namespace rescomp::control
