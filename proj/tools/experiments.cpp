#include "experiments.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>

#include "rescomp/analysis.hpp"
#include "rescomp/dynamics.hpp"
#include "rescomp/error.hpp"
#include "rescomp/parallel.hpp"

namespace rescomp::app {

namespace {

template <typename T>
T field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) fail(ErrorKind::kConfig, std::string("graph: missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorKind::kConfig, std::string("graph: bad value for '") + key + "'");
  }
}

std::mt19937_64 trial_rng(std::uint64_t seed, std::size_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32)};
  return std::mt19937_64(seq);
}

// (1/R) sum_{i in R} sum_{j in R} (x_i - theta_j)^2
double network_cost(const Vector& x, const std::vector<int>& regular, const Vector& priors) {
  double cost = 0.0;
  for (int i : regular)
    for (int j : regular) cost += (x(i - 1) - priors(j - 1)) * (x(i - 1) - priors(j - 1));
  return cost / static_cast<double>(regular.size());
}

}  // namespace

WeightMatrix load_graph(const nlohmann::json& spec, std::uint64_t seed, const std::filesystem::path& base_dir) {
  if (!spec.is_object()) fail(ErrorKind::kConfig, "graph: expected an object");
  const auto type = field<std::string>(spec, "type");
  graphkit::Topology t(1, {});
  if (type == "regular") {
    t = graphkit::gen_regular(field<int>(spec, "n"), field<int>(spec, "degree"),
                              spec.contains("seed") ? field<std::uint64_t>(spec, "seed") : seed);
  } else if (type == "cycle") {
    t = graphkit::cycle_graph(field<int>(spec, "n"));
  } else if (type == "path") {
    t = graphkit::path_graph(field<int>(spec, "n"));
  } else if (type == "complete") {
    t = graphkit::complete_graph(field<int>(spec, "n"));
  } else if (type == "star") {
    t = graphkit::star_graph(field<int>(spec, "n") - 1);
  } else if (type == "petersen") {
    t = graphkit::petersen_graph();
  } else if (type == "edge_list") {
    std::filesystem::path p = field<std::string>(spec, "path");
    if (p.is_relative()) p = base_dir / p;
    std::ifstream in(p);
    if (!in) fail(ErrorKind::kConfig, "graph: cannot open edge list " + p.string());
    t = graphkit::read_edge_list(in);
  } else {
    fail(ErrorKind::kConfig, "graph: unknown type '" + type + "'");
  }
  if (!t.connected()) fail(ErrorKind::kConfig, "graph: not connected");
  return t.regular_degree() ? graphkit::uniform_weights(t) : graphkit::reweigh(t);
}

std::vector<int> sample_nodes(int n, int size, std::uint64_t seed) {
  require(size >= 1 && size < n, "sample size must satisfy 1 <= size < n");
  std::vector<int> labels(n);
  std::iota(labels.begin(), labels.end(), 1);
  std::mt19937_64 rng(seed);
  std::shuffle(labels.begin(), labels.end(), rng);
  labels.resize(size);
  std::sort(labels.begin(), labels.end());
  return labels;
}

CompareResult run_compare(const WeightMatrix& w, const CompareOptions& options) {
  require(options.trials >= 1, "compare needs at least one trial");
  require(options.horizon >= 1, "compare needs horizon >= 1");
  require(options.d >= 0.0, "d must be >= 0");
  const auto op = graphkit::apply_malicious(w, options.malicious);
  const auto regular = op.regular();
  const int n = w.n();

  CompareResult out;
  out.f = options.f >= 0 ? options.f : op.m();
  out.lambda_star = analysis::optimize_lambda(op, options.d, options.grid_size).lambda_star;

  struct Trial {
    std::vector<std::array<double, 6>> path;
  };
  const dynamics::SimulationOptions sim{options.horizon, 0.0};
  const double noise_sd = std::sqrt(options.d);
  const auto trials = parallel_map(static_cast<std::size_t>(options.trials), [&](std::size_t t) {
    auto rng = trial_rng(options.seed, t);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector priors(n);
    for (int i = 0; i < n; ++i) priors(i) = normal(rng);
    Vector corrupted = priors;
    for (int m : options.malicious) corrupted(m - 1) += noise_sd * normal(rng);

    const auto consensus = dynamics::simulate_fj(op, corrupted, 0.0, sim);
    const auto fj = dynamics::simulate_fj(op, corrupted, out.lambda_star, sim);
    const auto wmsr = dynamics::simulate_wmsr(w, corrupted, options.malicious, out.f, sim);
    Trial tr;
    tr.path.resize(static_cast<std::size_t>(options.horizon) + 1);
    for (std::size_t k = 0; k < tr.path.size(); ++k) {
      const Vector* xs[] = {&consensus.states[k], &fj.states[k], &wmsr.states[k]};
      for (int a = 0; a < 3; ++a) {
        tr.path[k][2 * a] = dynamics::regular_error(*xs[a], regular, priors);
        tr.path[k][2 * a + 1] = network_cost(*xs[a], regular, priors);
      }
    }
    return tr;
  });

  out.mean_trajectory.assign(static_cast<std::size_t>(options.horizon) + 1, {});
  for (const auto& tr : trials) {
    for (std::size_t k = 0; k < tr.path.size(); ++k)
      for (int a = 0; a < 6; ++a) out.mean_trajectory[k][a] += tr.path[k][a] / options.trials;
    out.consensus_error.push_back(tr.path.back()[0]);
    out.fj_error.push_back(tr.path.back()[2]);
    out.wmsr_error.push_back(tr.path.back()[4]);
  }
  auto mean = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0) / v.size(); };
  out.mean_consensus = mean(out.consensus_error);
  out.mean_fj = mean(out.fj_error);
  out.mean_wmsr = mean(out.wmsr_error);
  return out;
}

void write_compare_trajectory_csv(std::ostream& os, const CompareResult& r) {
  const auto precision = os.precision();
  os << "step,consensus_error,consensus_cost,fj_error,fj_cost,wmsr_error,wmsr_cost\n" << std::setprecision(17);
  for (std::size_t k = 0; k < r.mean_trajectory.size(); ++k) {
    os << k;
    for (double v : r.mean_trajectory[k]) os << ',' << v;
    os << '\n';
  }
  os.precision(precision);
}

void write_compare_trials_csv(std::ostream& os, const CompareResult& r) {
  const auto precision = os.precision();
  os << "trial,consensus_error,fj_error,wmsr_error\n" << std::setprecision(17);
  for (std::size_t t = 0; t < r.fj_error.size(); ++t)
    os << t << ',' << r.consensus_error[t] << ',' << r.fj_error[t] << ',' << r.wmsr_error[t] << '\n';
  os.precision(precision);
}

}  // namespace rescomp::app
