#include "rescomp/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <random>

#include "rescomp/error.hpp"
#include "rescomp/parallel.hpp"

namespace rescomp::dynamics {

std::vector<int> Scenario::regular() const {
  std::vector<char> flagged(n, 0);
  for (int m : malicious) flagged.at(m - 1) = 1;
  std::vector<int> out;
  for (int i = 1; i <= n; ++i)
    if (!flagged[i - 1]) out.push_back(i);
  return out;
}

Vector Scenario::prior_variances() const { return variances.size() == 0 ? Vector::Ones(n) : variances; }

void Scenario::validate() const {
  require(n >= 2, "scenario needs n >= 2");
  require(d >= 0.0 && std::isfinite(d), "noise variance d must be finite and >= 0");
  std::vector<char> flagged(n, 0);
  for (int m : malicious) {
    require(m >= 1 && m <= n, "malicious node out of range: " + std::to_string(m));
    require(!flagged[m - 1], "malicious node listed twice: " + std::to_string(m));
    flagged[m - 1] = 1;
  }
  require(static_cast<int>(malicious.size()) < n, "scenario needs at least one regular node");
  if (variances.size() != 0) {
    require(variances.size() == n, "variances must have one entry per node");
    require((variances.array() > 0.0).all() && variances.allFinite(), "prior variances must be positive");
  }
}

Scenario Scenario::unit(int n, std::vector<int> malicious, double d, std::uint64_t seed) {
  Scenario s;
  s.n = n;
  s.malicious = std::move(malicious);
  s.d = d;
  s.seed = seed;
  s.validate();
  return s;
}

nlohmann::json to_json(const Scenario& s) {
  const Vector var = s.prior_variances();
  return nlohmann::json{{"malicious", s.malicious},
                        {"d", s.d},
                        {"variances", std::vector<double>(var.data(), var.data() + var.size())},
                        {"seed", s.seed}};
}

Scenario scenario_from_json(const nlohmann::json& j, int n) {
  Scenario s;
  s.n = n;
  try {
    s.malicious = j.at("malicious").get<std::vector<int>>();
    s.d = j.value("d", 0.0);
    if (j.contains("variances")) {
      const auto v = j.at("variances").get<std::vector<double>>();
      s.variances = Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
    }
    s.seed = j.value("seed", std::uint64_t{0});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kConfig, std::string("scenario: ") + e.what());
  }
  s.validate();
  return s;
}

SteadyOperator steady_operator(const OperatedWeights& w, double lambda) {
  require(lambda > 0.0 && lambda <= 1.0, "steady operator needs 0 < lambda <= 1 (use gamma_and_limits for lambda -> 0)");
  const int n = w.n();
  const Matrix system = Matrix::Identity(n, n) - (1.0 - lambda) * w.permuted();
  Eigen::PartialPivLU<Matrix> lu(system);
  if (!(lu.rcond() > 1e-15)) fail(ErrorKind::kNumerical, "steady operator: singular system");
  SteadyOperator op;
  op.lambda = lambda;
  op.matrix = lu.solve(lambda * Matrix::Identity(n, n));
  if (!op.matrix.allFinite()) fail(ErrorKind::kNumerical, "steady operator: non-finite solution");
  op.matrix.bottomRows(w.m()).setZero();
  op.matrix.bottomRightCorner(w.m(), w.m()).setIdentity();
  op.l11 = op.matrix.topLeftCorner(w.r(), w.r());
  op.l12 = op.matrix.topRightCorner(w.r(), w.m());
  return op;
}

namespace {

Trajectory iterate_fj(const Matrix& wp, std::span<const int> malicious, const Vector& priors, double lambda,
                      SimulationOptions options) {
  require(lambda >= 0.0 && lambda <= 1.0, "FJ needs lambda in [0, 1]");
  require(priors.size() == wp.rows() && priors.allFinite(), "priors must be a finite n-vector");
  Trajectory traj;
  Vector x = priors;
  traj.states.push_back(x);
  for (int k = 0; k < options.horizon; ++k) {
    Vector next = lambda * priors + (1.0 - lambda) * (wp * x);
    for (int m : malicious) next(m - 1) = priors(m - 1);
    const double step = (next - x).cwiseAbs().maxCoeff();
    x = std::move(next);
    traj.states.push_back(x);
    traj.steps = k + 1;
    if (step < options.tol) {
      traj.converged = true;
      break;
    }
  }
  traj.terminal = x;
  return traj;
}

}  // namespace

Trajectory simulate_fj(const OperatedWeights& w, const Vector& priors, double lambda, SimulationOptions options) {
  return iterate_fj(w.entries(), w.malicious(), priors, lambda, options);
}

Trajectory simulate_fj(const WeightMatrix& w, const Vector& priors, double lambda, SimulationOptions options) {
  return iterate_fj(w.entries(), {}, priors, lambda, options);
}

double best_response(int node, const Vector& x, const Vector& priors, double lambda, const WeightMatrix& w) {
  require(node >= 1 && node <= w.n(), "node out of range");
  require(lambda >= 0.0 && lambda <= 1.0, "lambda must lie in [0, 1]");
  const double neighbour_avg = w.entries().row(node - 1).dot(x);
  return lambda * priors(node - 1) + (1.0 - lambda) * neighbour_avg;
}

Trajectory simulate_wmsr(const WeightMatrix& w, const Vector& initial, std::span<const int> malicious, int f,
                         SimulationOptions options) {
  require(f >= 0, "trim count f must be >= 0");
  const int n = w.n();
  require(initial.size() == n && initial.allFinite(), "initial state must be a finite n-vector");
  std::vector<char> is_malicious(n, 0);
  for (int m : malicious) {
    require(m >= 1 && m <= n, "malicious node out of range");
    is_malicious[m - 1] = 1;
  }
  const auto neighbours = w.support().neighbors();

  Trajectory traj;
  Vector x = initial;
  traj.states.push_back(x);
  std::vector<double> above;
  std::vector<double> below;
  for (int k = 0; k < options.horizon; ++k) {
    Vector next = x;
    for (int i = 0; i < n; ++i) {
      if (is_malicious[i]) continue;
      const double own = x(i);
      above.clear();
      below.clear();
      double kept_sum = own;
      int kept = 1;
      for (int j : neighbours[i]) {
        const double v = x(j - 1);
        if (v > own) {
          above.push_back(v);
        } else if (v < own) {
          below.push_back(v);
        } else {
          kept_sum += v;
          ++kept;
        }
      }
      std::sort(above.begin(), above.end());
      std::sort(below.begin(), below.end());
      const auto drop_high = std::min<std::size_t>(f, above.size());
      const auto drop_low = std::min<std::size_t>(f, below.size());
      for (std::size_t a = 0; a + drop_high < above.size(); ++a) kept_sum += above[a];
      for (std::size_t b = drop_low; b < below.size(); ++b) kept_sum += below[b];
      kept += static_cast<int>(above.size() - drop_high + below.size() - drop_low);
      next(i) = kept_sum / kept;
    }
    const double step = (next - x).cwiseAbs().maxCoeff();
    x = std::move(next);
    traj.states.push_back(x);
    traj.steps = k + 1;
    if (step < options.tol) {
      traj.converged = true;
      break;
    }
  }
  traj.terminal = x;
  return traj;
}

double regular_error(const Vector& x, std::span<const int> regular, const Vector& priors) {
  double mean = 0.0;
  for (int i : regular) mean += priors(i - 1);
  mean /= static_cast<double>(regular.size());
  double err = 0.0;
  for (int i : regular) err += (x(i - 1) - mean) * (x(i - 1) - mean);
  return err;
}

Estimate monte_carlo_error(const OperatedWeights& w, double lambda, const Scenario& sc, int trials) {
  require(trials >= 2, "Monte Carlo needs at least 2 trials");
  sc.validate();
  require(sc.n == w.n(), "scenario and weights disagree on node count");
  {
    auto a = sc.malicious;
    auto b = w.malicious();
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    require(a == b, "scenario and weights disagree on the malicious set");
  }
  const SteadyOperator op = steady_operator(w, lambda);
  const Vector sigma = w.to_internal(sc.prior_variances()).cwiseSqrt();
  const int r = w.r();
  const int n = w.n();
  const double noise_sd = std::sqrt(sc.d);

  // Each chunk owns a contiguous trial range with seeds derived from (seed, trial).
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (static_cast<std::size_t>(trials) + kChunk - 1) / kChunk;
  struct Partial {
    double sum = 0.0;
    double sum_sq = 0.0;
  };
  const auto partials = parallel_map(chunks, [&](std::size_t c) {
    Partial p;
    Vector corrupted(n);
    const std::size_t end = std::min<std::size_t>(trials, (c + 1) * kChunk);
    for (std::size_t t = c * kChunk; t < end; ++t) {
      std::seed_seq seq{static_cast<std::uint32_t>(sc.seed), static_cast<std::uint32_t>(sc.seed >> 32),
                        static_cast<std::uint32_t>(t), static_cast<std::uint32_t>(t >> 32)};
      std::mt19937_64 rng(seq);
      std::normal_distribution<double> normal(0.0, 1.0);
      for (int k = 0; k < n; ++k) corrupted(k) = sigma(k) * normal(rng);
      const double target = corrupted.head(r).mean();
      for (int k = r; k < n; ++k) corrupted(k) += noise_sd * normal(rng);
      const Vector x = op.matrix.topRows(r) * corrupted;
      const double err = (x.array() - target).square().sum();
      p.sum += err;
      p.sum_sq += err * err;
    }
    return p;
  });
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const auto& p : partials) {
    sum += p.sum;
    sum_sq += p.sum_sq;
  }
  Estimate est;
  est.trials = trials;
  est.mean = sum / trials;
  const double var = std::max(0.0, (sum_sq - trials * est.mean * est.mean) / (trials - 1));
  est.standard_error = std::sqrt(var / trials);
  return est;
}

void write_trajectory_csv(std::ostream& os, const Trajectory& t) {
  const auto n = t.states.empty() ? 0 : t.states.front().size();
  os << "step";
  for (Eigen::Index i = 1; i <= n; ++i) os << ",node_" << i;
  os << '\n';
  const auto precision = os.precision();
  os << std::setprecision(17);
  for (std::size_t k = 0; k < t.states.size(); ++k) {
    os << k;
    for (Eigen::Index i = 0; i < n; ++i) os << ',' << t.states[k](i);
    os << '\n';
  }
  os.precision(precision);
}

}  // namespace rescomp::dynamics
