#include "acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "experiments.hpp"
#include "oracles.hpp"
#include "rescomp/analysis.hpp"
#include "rescomp/control.hpp"
#include "rescomp/dynamics.hpp"
#include "rescomp/netopt.hpp"

namespace rescomp::app {

namespace {

using graphkit::OperatedWeights;

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  // Records the first failure only.
  void expect(bool cond, const std::string& what) {
    if (!cond && ok) detail << "FAILED " << what << "; ";
    ok = ok && cond;
  }
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

OperatedWeights c4_mal4() {
  const int mal[] = {4};
  return graphkit::apply_malicious(graphkit::uniform_weights(graphkit::cycle_graph(4)), mal);
}

OperatedWeights regular_instance(int n, int delta, int m, std::uint64_t seed) {
  const auto w = graphkit::uniform_weights(graphkit::gen_regular(n, delta, seed));
  return graphkit::apply_malicious(w, sample_nodes(n, m, seed));
}

void closed_form_exactness(Outcome& out) {
  std::mt19937_64 rng(1);
  double worst = 0.0;
  for (int s = 0; s < 20; ++s) {
    const int delta = 3 + static_cast<int>(rng() % 2);
    int n = 8 + static_cast<int>(rng() % 33);
    if (n * delta % 2) ++n;
    const int m = 1 + static_cast<int>(rng() % 3);
    const double d = std::uniform_real_distribution<double>(0.0, 100.0)(rng);
    const auto op = regular_instance(n, delta, m, 1000 + s);
    worst = std::max(worst, std::abs(analysis::error_closed_form(op, 1.0, d) - (op.r() - 1)));
  }
  out.expect(worst <= 1e-10, "e_R(1) = R - 1");
  double base = 0.0;
  for (int n : {10, 100, 1000})
    for (int m : {1, 2, 5})
      for (double d : {0.0, 10.0, 100.0}) {
        const analysis::Counts c{n, n - m, m};
        const double outliers = analysis::baseline_error(analysis::BaselineKind::kConsensusOutliers, c, d);
        const double malicious = analysis::baseline_error(analysis::BaselineKind::kConsensusMalicious, c, d);
        const double r = n - m;
        base = std::max(base, std::abs(outliers - d * m / n));
        base = std::max(base, std::abs(malicious - (r / m + r * d / m + 1.0)) / std::max(1.0, malicious));
      }
  out.expect(base <= 1e-12, "baseline formulas");
  out.detail << "max |e_R(1) - (R-1)| = " << worst << ", baseline defect = " << base;
}

void oracle_equivalence(Outcome& out) {
  double worst_z = 0.0;
  int checks = 0;
  for (int i = 0; i < 10; ++i) {
    const auto op = regular_instance(20, 3, 1, 2000 + i);
    for (double lambda : {0.1, 0.3, 0.5, 0.8}) {
      const auto sc = dynamics::Scenario::unit(20, op.malicious(), 10.0, 100 * i + checks);
      const auto est = dynamics::monte_carlo_error(op, lambda, sc, 10000);
      const double z = std::abs(est.mean - analysis::error_closed_form(op, lambda, 10.0)) / est.standard_error;
      worst_z = std::max(worst_z, z);
      out.expect(z <= 3.0, "Monte Carlo within 3 SE");
      ++checks;
    }
  }
  out.detail << checks << " comparisons, max |z| = " << worst_z;
}

void derivative_calibration(Outcome& out) {
  double fd_worst = 0.0, one_worst = 0.0, zero_worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto op = regular_instance(20, 3, 1 + i % 2, 3000 + i);
    const double d = 10.0;
    const double h = 1e-5;
    for (int k = 1; k <= 9; ++k) {
      const double l = 0.1 * k;
      const double fd =
          (analysis::error_closed_form(op, l + h, d) - analysis::error_closed_form(op, l - h, d)) / (2 * h);
      fd_worst = std::max(fd_worst, rel(fd, 2.0 * analysis::error_derivative(op, l, d)));
    }
    one_worst = std::max(one_worst, rel(analysis::derivative_at_one(op), analysis::error_derivative(op, 1.0, d)));
    const auto g = analysis::gamma_and_limits(op);
    zero_worst =
        std::max(zero_worst, rel(analysis::derivative_limit_zero(g, op, d), analysis::error_derivative(op, 1e-6, d)));
  }
  out.expect(fd_worst <= 1e-5, "finite difference = 2 x derivative");
  out.expect(one_worst <= 1e-3, "derivative at one");
  out.expect(zero_worst <= 1e-3, "derivative limit at zero");
  out.detail << "FD rel " << fd_worst << ", at-one rel " << one_worst << ", at-zero rel " << zero_worst;
}

void lemma_suite(Outcome& out) {
  int unique = 0;
  for (int i = 0; i < 50; ++i) {
    const auto op = regular_instance(100, 3, 1, 4000 + i);
    const double star = analysis::optimize_lambda(op, 10.0).lambda_star;
    out.expect(star > 0.0 && star < 1.0, "lambda* in (0,1)");
    for (double l : {0.1, 0.5, 0.9}) {
      double prev = -1.0;
      for (int k = 0; k <= 10; ++k) {
        const double e = analysis::error_closed_form(op, l, 10.0 * k);
        out.expect(e > prev, "e_R increasing in d");
        prev = e;
      }
    }
    std::vector<double> points;
    bool all_unique = true;
    for (int k = 0; k <= 10 && all_unique; ++k) {
      const auto cp = analysis::critical_points(op, 10.0 * k, 100);
      all_unique = cp.size() == 1;
      if (all_unique) points.push_back(cp[0]);
    }
    if (all_unique) {
      ++unique;
      for (std::size_t k = 1; k < points.size(); ++k) out.expect(points[k] > points[k - 1], "critical points increase");
    }
  }
  const auto cp = analysis::critical_points(c4_mal4(), 1e6);
  out.expect(cp.size() == 1 && cp[0] > 0.9, "C4 critical point at d = 1e6");
  out.detail << "unique critical points on " << unique << "/50 instances; C4 d=1e6 critical point "
             << (cp.empty() ? -1.0 : cp[0]);
}

void lambda_band(Outcome& out) {
  const auto w = graphkit::uniform_weights(graphkit::gen_regular(100, 3, 7));
  const int mal[] = {1};
  const auto op = graphkit::apply_malicious(w, mal);
  double prev = 0.0;
  out.detail << "lambda*(d):";
  for (int k = 0; k <= 10; ++k) {
    const double star = analysis::optimize_lambda(op, 10.0 * k).lambda_star;
    out.expect(star >= 0.03 && star <= 0.40, "lambda* in [0.03, 0.40]");
    out.expect(star >= prev - 1e-9, "lambda* nondecreasing");
    prev = star;
    out.detail << ' ' << star;
  }
}

void decomposition(Outcome& out) {
  const auto op = c4_mal4();
  const auto grid = analysis::lambda_grid(400);
  std::vector<double> coll, comp;
  double defect = 0.0;
  for (double l : grid) {
    const auto dec = analysis::decompose_error(op, l, 10.0);
    defect = std::max(defect, std::abs(dec.total() - analysis::error_closed_form(op, l, 10.0)));
    coll.push_back(dec.collaboration);
    comp.push_back(dec.competition);
  }
  out.expect(defect <= 1e-10, "collaboration + competition = total");
  for (std::size_t k = 1; k < grid.size(); ++k) out.expect(coll[k] < coll[k - 1], "collaboration decreasing");
  const auto kmin = static_cast<std::size_t>(std::min_element(comp.begin(), comp.end()) - comp.begin());
  out.expect(kmin > 0 && kmin + 1 < grid.size(), "competition minimum interior");
  for (std::size_t k = 1; k <= kmin; ++k) out.expect(comp[k] < comp[k - 1], "competition decreasing before minimum");
  for (std::size_t k = kmin + 1; k < grid.size(); ++k)
    out.expect(comp[k] > comp[k - 1], "competition increasing after minimum");
  out.detail << "sum defect " << defect << ", competition minimum " << comp[kmin] << " at lambda " << grid[kmin];
}

void gamma_appendix(Outcome& out) {
  double w_def = 0.0, g_def = 0.0, fd_def = 0.0, fwd_def = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto op = regular_instance(20, 3, 1 + i % 3, 5000 + i);
    const auto g = analysis::gamma_and_limits(op);
    const Matrix vinv = g.basis.inverse();
    w_def = std::max(w_def, (g.basis * g.w_eigenvalues.asDiagonal() * vinv - op.permuted()).cwiseAbs().maxCoeff());
    g_def = std::max(g_def, (g.basis * g.sigma_bar.asDiagonal() * vinv - g.gamma).cwiseAbs().maxCoeff());
    // dL/dlambda at lambda = 1e-5 by a central difference; the forward quotient
    // (L(2h) - L(h)) / h is reported alongside.
    const double at = 1e-5, h = 1e-6;
    const Matrix fd =
        (dynamics::steady_operator(op, at + h).matrix - dynamics::steady_operator(op, at - h).matrix) / (2 * h);
    const Matrix forward =
        (dynamics::steady_operator(op, 2 * at).matrix - dynamics::steady_operator(op, at).matrix) / at;
    const double scale = g.gamma.cwiseAbs().maxCoeff();
    fd_def = std::max(fd_def, (fd - g.gamma).cwiseAbs().maxCoeff() / scale);
    fwd_def = std::max(fwd_def, (forward - g.gamma).cwiseAbs().maxCoeff() / scale);
    out.expect(fd.bottomRows(op.m()).isZero(0.0), "Gamma bottom rows zero");
    out.expect(g.gamma1.minCoeff() > 0.0, "Gamma1 > 0");
    out.expect(g.gamma2.maxCoeff() < 0.0, "Gamma2 < 0");
  }
  out.expect(w_def <= 1e-10, "V D V^-1 = W'");
  out.expect(g_def <= 1e-9, "V Sigma V^-1 = Gamma");
  out.expect(fd_def <= 1e-3, "Gamma vs finite difference");
  out.detail << "W' defect " << w_def << ", Gamma defect " << g_def << ", dL/dlambda(1e-5) rel " << fd_def << ", forward quotient rel " << fwd_def;
}

void gramian_checks(Outcome& out) {
  double min_eig = 0.0;
  for (int i = 0; i < 10; ++i) {
    const auto op = regular_instance(20, 3, 1, 6000 + i);
    const int m = op.malicious()[0];
    for (double l : {0.1, 0.5, 0.9})
      for (int k : {1, op.r(), 2 * op.r()}) {
        const auto rep = control::gramian(op, l, m, k);
        Eigen::SelfAdjointEigenSolver<Matrix> eig(rep.gramian);
        min_eig = std::min(min_eig, eig.eigenvalues().minCoeff());
      }
    double prev = -1.0;
    for (int k = 1; k <= 2 * op.r(); ++k) {
      const double t = control::gramian(op, 0.3, m, k).controllability_index;
      out.expect(t >= prev, "trace nondecreasing in K");
      prev = t;
    }
    prev = 1e300;
    for (int k = 1; k <= 9; ++k) {
      const double t = control::gramian(op, 0.1 * k, m).controllability_index;
      out.expect(t < prev, "trace decreasing in lambda");
      prev = t;
    }
  }
  out.expect(min_eig >= -1e-12, "Gramian PSD");
  const double hand = control::gramian(c4_mal4(), 0.1, 4, 1).controllability_index;
  out.expect(std::abs(hand - 0.405) <= 1e-12, "C4 K=1 value 0.405");
  out.detail << "min eigenvalue " << min_eig << ", C4 K=1 trace " << hand;
}

void greedy_fidelity(Outcome& out) {
  int steps = 0;
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    const auto w = graphkit::uniform_weights(graphkit::gen_regular(12, 4, seed));
    for (const auto& metric : {netopt::Metric::consensus_error(0.7, 10.0), netopt::Metric::controllability_index(0.7)}) {
      const oracle::Objective obj{metric.kind == netopt::Metric::Kind::kConsensusError, metric.lambda, metric.d,
                                  metric.horizon};
      const auto trace = netopt::greedy_edge_removal(w, 4, metric);
      graphkit::Topology t = trace.initial;
      std::vector<int> removed(12, 0);
      for (const auto& step : trace.steps) {
        const auto want = oracle::best_removal(t, removed, obj);
        out.expect(want && want->edge == step.edge, "per-step argmin");
        out.expect(want && want->worst.node == step.worst_node, "per-step worst node");
        const graphkit::Edge drop[] = {step.edge};
        t = graphkit::remove_edges(t, drop);
        removed[step.edge.u - 1] = removed[step.edge.v - 1] = 1;
        ++steps;
      }
      for (int c : trace.removal_counts) out.expect(c <= 1, "degree constraint");
      for (int deg : trace.final_topology.degrees()) out.expect(deg == 3 || deg == 4, "degrees in {3, 4}");
    }
  }
  out.detail << steps << " greedy steps checked against exhaustive argmin";
}

void degree_trend(Outcome& out) {
  netopt::SweepOptions opt;
  opt.n = 30;
  opt.degrees = {3, 4, 5, 6};
  opt.trials = 50;
  opt.lambda = 0.1;
  opt.d = 100.0;
  opt.seed = 0;
  const auto rows = netopt::degree_sweep(opt);
  bool err_ok = true, contr_ok = true;
  for (std::size_t k = 1; k < rows.size(); ++k) {
    err_ok = err_ok && rows[k].avg_worst_error < rows[k - 1].avg_worst_error;
    contr_ok = contr_ok && rows[k].avg_worst_contr_index < rows[k - 1].avg_worst_contr_index;
  }
  out.expect(err_ok, "worst-case error decreasing in degree");
  out.expect(contr_ok, "controllability index decreasing in degree");
  out.detail << "lambda=0.1 d=100; error";
  for (const auto& r : rows) out.detail << ' ' << r.avg_worst_error;
  out.detail << "; index";
  for (const auto& r : rows) out.detail << ' ' << r.avg_worst_contr_index;
}

void wmsr_comparison(Outcome& out) {
  const auto w = graphkit::uniform_weights(graphkit::gen_regular(100, 3, 7));
  CompareOptions opt;
  opt.malicious = sample_nodes(100, 2, 7);
  opt.d = 10.0;
  opt.trials = 20;
  opt.seed = 7;
  const auto r = run_compare(w, opt);
  out.expect(r.mean_fj < r.mean_wmsr, "FJ(lambda*) below W-MSR");
  out.detail << "f=" << r.f << " lambda*=" << r.lambda_star << "; mean error FJ " << r.mean_fj << ", W-MSR "
             << r.mean_wmsr << ", consensus " << r.mean_consensus;
}

struct Criterion {
  int id;
  const char* name;
  double budget;
  std::function<void(Outcome&)> run;
};

}  // namespace

std::vector<CriterionResult> run_acceptance(const std::vector<int>& only) {
  const std::vector<Criterion> all = {
      {1, "closed-form exactness", 1.0, closed_form_exactness},
      {2, "oracle equivalence", 30.0, oracle_equivalence},
      {3, "derivative calibration", 10.0, derivative_calibration},
      {4, "lemma/proposition suite", 120.0, lemma_suite},
      {5, "lambda* magnitude band", 60.0, lambda_band},
      {6, "decomposition", 5.0, decomposition},
      {7, "gamma and limits", 10.0, gamma_appendix},
      {8, "gramian", 5.0, gramian_checks},
      {9, "greedy fidelity", 120.0, greedy_fidelity},
      {10, "degree-sweep trend", 600.0, degree_trend},
      {11, "W-MSR comparison", 120.0, wmsr_comparison},
  };
  std::vector<CriterionResult> results;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    Outcome out;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.run(out);
    } catch (const std::exception& e) {
      out.ok = false;
      out.detail << "exception: " << e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    results.push_back({c.id, c.name, out.ok, seconds, c.budget, out.detail.str()});
  }
  return results;
}

}  // namespace rescomp::app
