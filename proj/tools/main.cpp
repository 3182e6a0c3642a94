#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "acceptance.hpp"
#include "experiments.hpp"
#include "json.hpp"
#include "rescomp/analysis.hpp"
#include "rescomp/error.hpp"
#include "rescomp/netopt.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rescomp;

namespace {

struct Run {
  json config;
  std::uint64_t seed = 0;
  fs::path base_dir;
  fs::path out;
  json summary = json::object();

  std::ofstream open(const std::string& name) const {
    std::ofstream os(out / name, std::ios::binary);
    if (!os) fail(ErrorKind::kConfig, "cannot write " + (out / name).string());
    return os;
  }
};

[[noreturn]] void config_error(const std::string& what) { fail(ErrorKind::kConfig, what); }

const json& section(const json& cfg, const char* key) {
  if (!cfg.contains(key)) config_error(std::string("missing key '") + key + "'");
  return cfg.at(key);
}

graphkit::WeightMatrix graph_of(const Run& run) { return app::load_graph(section(run.config, "graph"), run.seed, run.base_dir); }

// "malicious": [labels] | {"sample": k} | "worst" (worst node of e_R at "worst_lambda", default 0.5).
std::vector<int> malicious_of(const Run& run, const graphkit::WeightMatrix& w, double d) {
  const json& m = section(run.config, "malicious");
  if (m.is_array()) return m.get<std::vector<int>>();
  if (m.is_object() && m.contains("sample")) return app::sample_nodes(w.n(), m.at("sample").get<int>(), run.seed);
  if (m == "worst") {
    const double lambda = run.config.value("worst_lambda", 0.5);
    return {netopt::worst_case_node(w, netopt::Metric::consensus_error(lambda, d)).node};
  }
  config_error("'malicious' must be a label list, {\"sample\": k} or \"worst\"");
}

Vector variances_of(const json& cfg) {
  if (!cfg.contains("variances")) return {};
  const auto v = cfg.at("variances").get<std::vector<double>>();
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> d_grid_of(const json& cfg) {
  if (cfg.contains("d_grid")) return cfg.at("d_grid").get<std::vector<double>>();
  std::vector<double> grid;
  for (int k = 0; k <= 10; ++k) grid.push_back(10.0 * k);
  return grid;
}

void run_curve(Run& run) {
  const auto w = graph_of(run);
  const auto d_grid = d_grid_of(run.config);
  const int grid_size = run.config.value("grid_size", 400);
  const Vector variances = variances_of(run.config);
  const auto malicious = malicious_of(run, w, d_grid.back());
  const auto ow = graphkit::apply_malicious(w, malicious);

  auto star = run.open("lambda_star.csv");
  star << "d,lambda_star,min_error,critical_points\n" << std::setprecision(17);
  json rows = json::array();
  for (std::size_t k = 0; k < d_grid.size(); ++k) {
    const double d = d_grid[k];
    auto opt = analysis::optimize_lambda(ow, d, grid_size, 1e-6, variances);
    opt.curve.critical_points = analysis::critical_points(ow, d, std::max(grid_size, 64), variances);
    auto os = run.open("curve_d" + std::to_string(k) + ".csv");
    analysis::write_curve_csv(os, opt.curve);
    const double e = analysis::error_closed_form(ow, opt.lambda_star, d, variances);
    star << d << ',' << opt.lambda_star << ',' << e << ',' << opt.curve.critical_points.size() << '\n';
    rows.push_back({{"d", d}, {"lambda_star", opt.lambda_star}, {"min_error", e},
                    {"critical_points", opt.curve.critical_points}});
  }
  run.summary["malicious"] = malicious;
  run.summary["lambda_star"] = rows;
}

void run_sweep_m(Run& run) {
  const auto m_values = section(run.config, "m_values").get<std::vector<int>>();
  const std::string mode = run.config.value("mode", "fixed_n");
  if (mode != "fixed_n" && mode != "fixed_r") config_error("'mode' must be fixed_n or fixed_r");
  const double d = run.config.value("d", 10.0);
  const int grid_size = run.config.value("grid_size", 400);

  auto star = run.open("lambda_star_m.csv");
  star << "m,n,lambda_star,min_error\n" << std::setprecision(17);
  json rows = json::array();
  for (int m : m_values) {
    json spec = section(run.config, "graph");
    if (mode == "fixed_r") spec["n"] = section(run.config, "r").get<int>() + m;
    const auto w = app::load_graph(spec, run.seed, run.base_dir);
    const auto malicious = app::sample_nodes(w.n(), m, run.seed);
    const auto ow = graphkit::apply_malicious(w, malicious);
    const auto opt = analysis::optimize_lambda(ow, d, grid_size);
    auto os = run.open("curve_m" + std::to_string(m) + ".csv");
    analysis::write_curve_csv(os, opt.curve);
    const double e = analysis::error_closed_form(ow, opt.lambda_star, d);
    star << m << ',' << w.n() << ',' << opt.lambda_star << ',' << e << '\n';
    rows.push_back({{"m", m}, {"n", w.n()}, {"lambda_star", opt.lambda_star}, {"min_error", e}});
  }
  run.summary["mode"] = mode;
  run.summary["lambda_star"] = rows;
}

void run_decompose(Run& run) {
  const auto w = graph_of(run);
  const double d = run.config.value("d", 10.0);
  const Vector variances = variances_of(run.config);
  const auto malicious = malicious_of(run, w, d);
  if (malicious.size() != 1) fail(ErrorKind::kUnsupported, "decompose needs exactly one malicious node");
  const auto ow = graphkit::apply_malicious(w, malicious);

  const auto lambdas = analysis::lambda_grid(run.config.value("grid_size", 400));
  std::vector<analysis::Decomposition> rows;
  for (double l : lambdas) rows.push_back(analysis::decompose_error(ow, l, d, variances));
  auto os = run.open("decomposition.csv");
  analysis::write_decomposition_csv(os, lambdas, rows);

  std::size_t best = 0;
  for (std::size_t k = 1; k < rows.size(); ++k)
    if (rows[k].competition < rows[best].competition) best = k;
  run.summary["malicious"] = malicious;
  run.summary["competition_argmin_lambda"] = lambdas[best];
  run.summary["total_at_first"] = rows.front().total();
  run.summary["total_at_last"] = rows.back().total();
}

void run_degree_sweep(Run& run) {
  const json& c = run.config;
  netopt::SweepOptions opt;
  opt.n = c.value("n", 100);
  opt.degrees = section(c, "degrees").get<std::vector<int>>();
  opt.trials = c.value("trials", 10);
  opt.lambda = c.value("lambda", 0.1);
  opt.d = c.value("d", 100.0);
  opt.horizon = c.value("horizon", 0);
  opt.seed = run.seed;
  const auto rows = netopt::degree_sweep(opt);
  auto os = run.open("degree_sweep.csv");
  netopt::write_sweep_csv(os, rows);
  json out = json::array();
  for (const auto& r : rows)
    out.push_back({{"degree", r.degree}, {"avg_worst_error", r.avg_worst_error},
                   {"avg_worst_contr_index", r.avg_worst_contr_index}});
  run.summary["rows"] = out;
}

netopt::Metric metric_of(const json& cfg) {
  const json m = cfg.value("metric", json::object());
  const std::string kind = m.value("kind", "consensus_error");
  const double lambda = m.value("lambda", 0.5);
  if (kind == "consensus_error") return netopt::Metric::consensus_error(lambda, m.value("d", 10.0));
  if (kind == "controllability_index") return netopt::Metric::controllability_index(lambda, m.value("horizon", 0));
  config_error("metric kind must be consensus_error or controllability_index");
}

void run_greedy(Run& run) {
  const auto w = graph_of(run);
  const auto metric = metric_of(run.config);
  const auto trace = netopt::greedy_edge_removal(w, section(run.config, "e_rm").get<int>(), metric);
  {
    auto os = run.open("trace.csv");
    netopt::write_trace_csv(os, trace);
  }
  auto skipped = run.open("skipped.csv");
  skipped << "step,edge_u,edge_v,reason\n";
  for (const auto& s : trace.skipped) skipped << s.step << ',' << s.edge.u << ',' << s.edge.v << ',' << s.reason << '\n';

  auto prune = run.open("prune.csv");
  prune << "method,worst_node,metric_value,n_edges\n" << std::setprecision(17);
  const double final_value = trace.steps.empty() ? trace.initial_value : trace.steps.back().metric_value;
  const int final_node = trace.steps.empty() ? trace.initial_worst_node : trace.steps.back().worst_node;
  prune << "greedy," << final_node << ',' << final_value << ',' << trace.final_topology.edge_count() << '\n';
  run.summary["greedy_final"] = final_value;
  run.summary["initial"] = trace.initial_value;
  try {
    const auto pruned = netopt::matching_prune(w);
    const auto worst = netopt::worst_case_node(pruned, metric);
    prune << "matching," << worst.node << ',' << worst.value << ',' << pruned.support().edge_count() << '\n';
    run.summary["matching_final"] = worst.value;
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kInfeasible && e.kind() != ErrorKind::kUnsupported) throw;
    run.summary["matching_final"] = nullptr;
    run.summary["matching_reason"] = e.what();
  }
  run.summary["metric"] = netopt::to_string(metric.kind);
  run.summary["steps"] = trace.steps.size();
  run.summary["skipped"] = trace.skipped.size();
}

void run_compare(Run& run) {
  const auto w = graph_of(run);
  app::CompareOptions opt;
  opt.d = run.config.value("d", 10.0);
  opt.malicious = malicious_of(run, w, opt.d);
  opt.trials = run.config.value("trials", 20);
  opt.horizon = run.config.value("horizon", 500);
  opt.f = run.config.value("f", -1);
  opt.grid_size = run.config.value("grid_size", 400);
  opt.seed = run.seed;
  const auto r = app::run_compare(w, opt);
  {
    auto os = run.open("compare_trajectory.csv");
    app::write_compare_trajectory_csv(os, r);
  }
  auto os = run.open("compare_trials.csv");
  app::write_compare_trials_csv(os, r);
  run.summary["malicious"] = opt.malicious;
  run.summary["lambda_star"] = r.lambda_star;
  run.summary["f"] = r.f;
  run.summary["mean_consensus"] = r.mean_consensus;
  run.summary["mean_fj"] = r.mean_fj;
  run.summary["mean_wmsr"] = r.mean_wmsr;
}

int run_validate(Run& run) {
  std::vector<int> only;
  if (run.config.contains("criteria")) only = run.config.at("criteria").get<std::vector<int>>();
  const auto results = app::run_acceptance(only);
  auto os = run.open("validation.csv");
  os << "criterion,name,pass,seconds,detail\n";
  bool ok = true;
  json rows = json::array();
  for (const auto& r : results) {
    ok = ok && r.pass();
    std::string detail = r.detail;
    for (char& ch : detail)
      if (ch == ',' || ch == '\n') ch = ';';
    os << r.id << ',' << r.name << ',' << (r.pass() ? 1 : 0) << ',' << r.seconds << ',' << detail << '\n';
    std::printf("%s %2d %s (%.2f s)\n", r.pass() ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds);
    rows.push_back({{"criterion", r.id}, {"pass", r.pass()}});
  }
  run.summary["criteria"] = rows;
  run.summary["pass"] = ok;
  return ok ? 0 : 1;
}

int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInfeasible:
    case ErrorKind::kGeneration: return 3;
    case ErrorKind::kNumerical: return 4;
    default: return 2;
  }
}

int report(const char* kind, const std::string& message, int code) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"rescomp: resilient distributed optimization experiments"};
  cli.require_subcommand(1);
  std::string config_path, out_dir;
  std::uint64_t seed = 0;
  const std::vector<std::string> names{"curve", "sweep-m", "decompose", "degree-sweep", "greedy", "compare", "validate"};
  for (const auto& name : names) {
    auto* sub = cli.add_subcommand(name);
    sub->add_option("--config", config_path)->required();
    sub->add_option("--out", out_dir);
    sub->add_option("--seed", seed);
  }
  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    return report("usage", e.what(), 2);
  }
  const std::string command = cli.get_subcommands().front()->get_name();
  const bool seed_given = cli.get_subcommands().front()->count("--seed") > 0;

  try {
    Run run;
    std::ifstream in(config_path);
    if (!in) config_error("cannot read config " + config_path);
    std::stringstream text;
    text << in.rdbuf();
    if (text.str().find_first_not_of(" \t\r\n") == std::string::npos) config_error("empty config");
    try {
      run.config = json::parse(text.str());
    } catch (const json::exception& e) {
      config_error(std::string("bad json: ") + e.what());
    }
    if (!run.config.is_object()) config_error("config must be a JSON object");
    run.seed = seed_given ? seed : run.config.value("seed", std::uint64_t{0});
    run.config["seed"] = run.seed;
    run.base_dir = fs::absolute(config_path).parent_path();
    run.out = out_dir.empty() ? fs::path("rescomp_out") / command : fs::path(out_dir);
    fs::create_directories(run.out);
    run.open("config.json") << run.config.dump(2) << '\n';

    int code = 0;
    try {
      if (command == "curve") run_curve(run);
      else if (command == "sweep-m") run_sweep_m(run);
      else if (command == "decompose") run_decompose(run);
      else if (command == "degree-sweep") run_degree_sweep(run);
      else if (command == "greedy") run_greedy(run);
      else if (command == "compare") run_compare(run);
      else code = run_validate(run);
    } catch (const json::exception& e) {
      config_error(std::string("bad config value: ") + e.what());
    }
    run.summary["command"] = command;
    run.summary["seed"] = run.seed;
    run.open("summary.json") << run.summary.dump(2) << '\n';
    return code;
  } catch (const Error& e) {
    return report(to_string(e.kind()), e.what(), exit_code(e.kind()));
  } catch (const fs::filesystem_error& e) {
    return report("config", e.what(), 2);
  }
}
