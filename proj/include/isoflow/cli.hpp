#pragma once

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "isoflow/adjacency.hpp"
#include "isoflow/critical.hpp"
#include "isoflow/empath.hpp"
#include "isoflow/flow.hpp"
#include "isoflow/io.hpp"
#include "isoflow/parallel.hpp"
#include "isoflow/partition.hpp"
#include "isoflow/spectrum.hpp"
#include "isoflow/stochastic.hpp"

namespace isoflow::cli {

inline constexpr const char* kVersion = "0.1.0";

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

/// Canonical parameter map -> run directory name and manifest. Runs are
/// addressed by the hash of their configuration; re-running a configuration
/// reproduces the same artifacts bit for bit.
struct RunContext {
  std::filesystem::path dir;
  json manifest;

  static RunContext open(const std::string& out_root, const std::string& subcommand,
                         const std::map<std::string, std::string>& params) {
    std::string canon = subcommand;
    for (const auto& [k, v] : params) canon += "|" + k + "=" + v;
    std::ostringstream hex;
    hex << std::hex << fnv1a(canon);

    RunContext ctx;
    ctx.dir = std::filesystem::path(out_root) / (subcommand + "-" + hex.str());
    std::filesystem::create_directories(ctx.dir);
    ctx.manifest["version"] = kVersion;
    ctx.manifest["subcommand"] = subcommand;
    ctx.manifest["config_hash"] = hex.str();
    for (const auto& [k, v] : params) ctx.manifest["params"][k] = v;
    return ctx;
  }

  std::string path(const std::string& name) const { return (dir / name).string(); }
  void finalize() const { write_json(path("manifest.json"), manifest); }
};

inline int enumeration_cap(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("ISOFLOW_CAP_N")) return std::atoi(env);
  return kDefaultEnumerationCap;
}

namespace detail {

inline json label_to_json(const TerminalLabel& label) {
  json j;
  switch (label.kind) {
    case TerminalLabel::Kind::Stable:
      j["kind"] = "stable";
      j["sigma"] = label.sigma;
      break;
    case TerminalLabel::Kind::NonStableCritical: {
      j["kind"] = "non-stable critical";
      j["partition"] = label.partition->blocks;
      j["placement"] = label.placement;
      break;
    }
    default:
      j["kind"] = "did not converge";
  }
  j["match_distance"] = label.match_distance;
  return j;
}

inline json catalog_entry_to_json(const CriticalManifold& cm) {
  json j;
  j["partition"] = cm.partition.blocks;
  j["placement"] = cm.placement;
  j["dim"] = cm.dim;
  j["index"] = cm.index;
  j["coindex"] = cm.coindex;
  j["representative"] = matrix_to_json(cm.representative.matrix());
  j["l_eigenvalues"] = cm.l_eigenvalues;
  return j;
}

inline json adjacency_report_to_json(const AdjacencyReport& rep) {
  json j;
  j["edges"] = rep.edges_total;
  j["confirmed"] = rep.confirmed;
  j["saddles_traced"] = rep.saddles_traced;
  j["higher_coindex_excluded"] = rep.higher_coindex_excluded;
  j["mismatches"] = rep.mismatches;
  j["barriers"] = rep.barriers;
  return j;
}

inline json graph_to_json(const AdjacencyGraph& graph) {
  json j;
  j["nodes"] = graph.nodes;
  json edges = json::array();
  for (const auto& e : graph.edges)
    edges.push_back(json{{"a", e.node_a},
                         {"b", e.node_b},
                         {"value_index", e.value_index},
                         {"slots", {e.slots[0], e.slots[1]}},
                         {"barrier", e.barrier}});
  j["edges"] = edges;
  return j;
}

inline std::string num(double v) { return fmt17(v); }

}  // namespace detail

inline int cmd_spectrum_check(const std::string& spectrum_path, const std::string& out_root) {
  const Spectrum spectrum = load_spectrum(spectrum_path);
  const auto result = check_strongly_disjoint(spectrum);
  auto ctx = RunContext::open(out_root, "spectrum-check", {{"spectrum", spectrum_path}});
  json j;
  j["strongly_disjoint"] = result.strongly_disjoint;
  if (result.witness) {
    j["witness"] = {{"subset_a", result.witness->subset_a},
                    {"subset_b", result.witness->subset_b},
                    {"mean_a", result.witness->mean_a},
                    {"mean_b", result.witness->mean_b}};
  }
  write_json(ctx.path("spectrum_check.json"), j);
  ctx.finalize();
  if (!result.strongly_disjoint) {
    std::cout << "spectrum is NOT strongly disjoint: subsets {";
    for (std::size_t i = 0; i < result.witness->subset_a.size(); ++i)
      std::cout << (i ? "," : "") << result.witness->subset_a[i];
    std::cout << "} and {";
    for (std::size_t i = 0; i < result.witness->subset_b.size(); ++i)
      std::cout << (i ? "," : "") << result.witness->subset_b[i];
    std::cout << "} share mean " << result.witness->mean_a << "\n";
    return 1;
  }
  std::cout << "spectrum is strongly disjoint (n=" << spectrum.size() << ")\n";
  return 0;
}

inline int cmd_catalog(const std::string& spectrum_path, const std::string& out_root, int cap) {
  const Spectrum spectrum = load_spectrum(spectrum_path);
  const auto catalog = enumerate_catalog(spectrum, cap);
  auto ctx = RunContext::open(out_root, "catalog", {{"spectrum", spectrum_path}, {"cap", std::to_string(cap)}});
  json j = json::array();
  for (const auto& cm : catalog) j.push_back(detail::catalog_entry_to_json(cm));
  write_json(ctx.path("catalog.json"), j);
  ctx.finalize();
  int stable = 0;
  for (const auto& cm : catalog) stable += cm.stable() ? 1 : 0;
  std::cout << "catalog: " << catalog.size() << " critical manifolds, " << stable << " stable\n";
  return 0;
}

inline int cmd_flow(const std::string& spectrum_path, std::uint64_t seed, const FlowConfig& cfg,
                    const std::string& out_root) {
  const Spectrum spectrum = load_spectrum(spectrum_path);
  auto ctx = RunContext::open(out_root, "flow",
                              {{"spectrum", spectrum_path},
                               {"seed", std::to_string(seed)},
                               {"h", detail::num(cfg.h)},
                               {"T", detail::num(cfg.max_time)},
                               {"tol", detail::num(cfg.convergence_tol)}});
  const SymState h0 = random_state(spectrum, seed);
  const TrajectoryRecord rec = integrate(h0, cfg);

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < rec.times.size(); ++i)
    rows.push_back({rec.times[i], rec.potential_values[i], rec.offdiag_masses[i]});
  write_csv(ctx.path("trajectory.csv"), {"t", "psi", "offdiag_mass"}, rows);

  json terminal;
  terminal["converged"] = rec.converged;
  terminal["steps"] = rec.steps;
  terminal["gradient_norm"] = rec.terminal_gradient_norm;
  terminal["label"] = detail::label_to_json(rec.terminal_label);
  terminal["state"] = state_to_json(*rec.terminal_state);
  write_json(ctx.path("terminal.json"), terminal);
  ctx.finalize();
  std::cout << "flow: " << rec.terminal_label.describe() << " after " << rec.steps << " steps\n";
  return 0;
}

inline int cmd_adjacency(const std::string& spectrum_path, bool verify, const FlowConfig& cfg, double delta,
                         const std::string& out_root, int cap) {
  const Spectrum spectrum = load_spectrum(spectrum_path);
  auto ctx = RunContext::open(out_root, "adjacency",
                              {{"spectrum", spectrum_path},
                               {"verify", verify ? "1" : "0"},
                               {"h", detail::num(cfg.h)},
                               {"T", detail::num(cfg.max_time)},
                               {"delta", detail::num(delta)},
                               {"cap", std::to_string(cap)}});
  const AdjacencyGraph graph = build_graph(spectrum, cap);
  write_json(ctx.path("graph.json"), detail::graph_to_json(graph));
  {
    std::ofstream dot(ctx.path("graph.dot"));
    dot << to_dot(graph);
  }
  int code = 0;
  if (verify) {
    const AdjacencyReport rep = verify_adjacency(spectrum, cfg, delta, cap);
    write_json(ctx.path("verify.json"), detail::adjacency_report_to_json(rep));
    std::cout << "adjacency: " << rep.confirmed << "/" << rep.edges_total << " edges confirmed, "
              << rep.mismatches.size() << " mismatches\n";
    if (!rep.all_confirmed()) code = 2;
  } else {
    std::cout << "adjacency: " << graph.nodes.size() << " nodes, " << graph.edges.size() << " edges\n";
  }
  ctx.finalize();
  return code;
}

inline int cmd_sde(const std::string& spectrum_path, const SdeConfig& cfg, int n_paths, int threads,
                   const std::string& out_root, int cap) {
  const Spectrum spectrum = load_spectrum(spectrum_path);
  const StableStates stable(spectrum);
  cfg.validate(stable);
  auto ctx = RunContext::open(out_root, "sde",
                              {{"spectrum", spectrum_path},
                               {"eps", detail::num(cfg.epsilon)},
                               {"h", detail::num(cfg.h)},
                               {"T", detail::num(cfg.horizon)},
                               {"paths", std::to_string(n_paths)},
                               {"seed", std::to_string(cfg.seed)},
                               {"radius", detail::num(cfg.state_radius)}});

  std::vector<SdePath> paths(static_cast<std::size_t>(n_paths));
  const SymState h0 = SymState::sorted_diagonal(spectrum);
  parallel_for(n_paths, threads,
               [&](int i) { paths[static_cast<std::size_t>(i)] = simulate_path(h0, cfg, stable, static_cast<std::uint64_t>(i)); });

  std::vector<std::vector<double>> rows;
  for (int p = 0; p < n_paths; ++p) {
    const auto& path = paths[static_cast<std::size_t>(p)];
    for (std::size_t k = 0; k < path.chain.size(); ++k)
      rows.push_back({static_cast<double>(p), static_cast<double>(k), static_cast<double>(path.chain[k]),
                      path.enter_times[k], path.sojourn_times[k]});
  }
  write_csv(ctx.path("chains.csv"), {"path", "seq", "state", "enter_time", "sojourn"}, rows);

  const AdjacencyGraph graph = build_graph(spectrum, cap);
  json markov;
  try {
    const MarkovEstimate est = estimate_markov(paths, graph);
    markov["states"] = graph.nodes;
    markov["counts"] = est.counts;
    markov["dwell_times"] = est.dwell_times;
    markov["total_transitions"] = est.total_transitions;
    markov["adjacency_dominance"] = est.adjacency_dominance;
  } catch (const std::exception& e) {
    markov["error"] = e.what();
  }
  write_json(ctx.path("markov.json"), markov);

  // run-to-run stationarity self-consistency on psi samples
  json stationarity;
  if (cfg.record_stride > 0) {
    SdeConfig sc = cfg;
    const auto rep = stationary_self_consistency(spectrum, sc, 24, 7001, 7002);
    stationarity["tv_distance"] = rep.tv_distance;
    stationarity["samples"] = rep.samples;
    stationarity["bin_edges"] = rep.bin_edges;
    stationarity["histogram_a"] = rep.histogram_a;
    stationarity["histogram_b"] = rep.histogram_b;
  } else {
    stationarity["skipped"] = "record_stride = 0";
  }
  write_json(ctx.path("stationarity.json"), stationarity);
  ctx.finalize();
  std::cout << "sde: " << n_paths << " paths simulated\n";
  return 0;
}

inline int cmd_markov(const std::string& chains_path, const std::string& spectrum_path, const std::string& out_root,
                      int cap) {
  const Spectrum spectrum = load_spectrum(spectrum_path);
  std::ifstream in(chains_path);
  if (!in) throw std::runtime_error("cannot open chains file: " + chains_path);
  std::string line;
  std::getline(in, line);  // header
  std::map<int, SdePath> by_path;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(row, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() != 5) throw std::runtime_error("chains CSV: expected 5 columns");
    auto& p = by_path[static_cast<int>(vals[0])];
    p.chain.push_back(static_cast<int>(vals[2]));
    p.enter_times.push_back(vals[3]);
    p.sojourn_times.push_back(vals[4]);
  }
  std::vector<SdePath> paths;
  for (auto& [id, p] : by_path) paths.push_back(std::move(p));

  const AdjacencyGraph graph = build_graph(spectrum, cap);
  const MarkovEstimate est = estimate_markov(paths, graph);
  auto ctx = RunContext::open(out_root, "markov", {{"chains", chains_path}, {"spectrum", spectrum_path}});
  json j;
  j["states"] = graph.nodes;
  j["counts"] = est.counts;
  j["dwell_times"] = est.dwell_times;
  j["total_transitions"] = est.total_transitions;
  j["adjacency_dominance"] = est.adjacency_dominance;
  write_json(ctx.path("markov.json"), j);
  ctx.finalize();
  std::cout << "markov: " << est.total_transitions << " transitions, dominance " << est.adjacency_dominance << "\n";
  return 0;
}

inline int cmd_emp(const std::string& spectrum_path, double eps, double horizon, int grid,
                   bool write_trajectories, const std::string& out_root, int cap) {
  const Spectrum spectrum = load_spectrum(spectrum_path);
  auto ctx = RunContext::open(out_root, "emp",
                              {{"spectrum", spectrum_path},
                               {"eps", detail::num(eps)},
                               {"T", detail::num(horizon)},
                               {"grid", std::to_string(grid)}});
  const AdjacencyGraph graph = build_graph(spectrum, cap);
  const TransitionWeights weights = edge_weights(graph, eps, horizon, grid);

  json edges = json::array();
  for (std::size_t e = 0; e < graph.edges.size(); ++e) {
    const auto& ew = weights.edges[e];
    edges.push_back(json{{"a", graph.edges[e].node_a},
                         {"b", graph.edges[e].node_b},
                         {"value_index", graph.edges[e].value_index},
                         {"energy", ew.energy},
                         {"weight", ew.weight},
                         {"terminal_error", ew.terminal_error}});
  }
  json j;
  j["edges"] = edges;
  j["stochastic_rows"] = weights.stochastic_rows;
  write_json(ctx.path("emp.json"), j);

  if (write_trajectories) {
    // one representative trajectory per distinct gap
    std::vector<double> gaps;
    for (const auto& e : graph.edges) {
      const double gap = spectrum[e.value_index + 1] - spectrum[e.value_index];
      bool seen = false;
      for (double g : gaps) seen |= std::abs(g - gap) < 1e-14;
      if (seen) continue;
      gaps.push_back(gap);
      const auto sol = scalar_emp(gap, eps, horizon, grid);
      std::vector<std::vector<double>> rows;
      for (std::size_t k = 0; k < sol.times.size(); ++k) rows.push_back({sol.times[k], sol.theta[k]});
      write_csv(ctx.path("emp_traj_gap" + std::to_string(gaps.size()) + ".csv"), {"t", "theta"}, rows);
    }
  }
  ctx.finalize();
  std::cout << "emp: " << graph.edges.size() << " edges weighted\n";
  return 0;
}

inline int cmd_report(const std::string& spectrum_path, double eps, double horizon, const FlowConfig& cfg,
                      const std::string& out_root, int cap) {
  const Spectrum spectrum = load_spectrum(spectrum_path);
  auto ctx = RunContext::open(out_root, "report",
                              {{"spectrum", spectrum_path}, {"eps", detail::num(eps)}, {"T", detail::num(horizon)}});
  json j;
  const auto check = check_strongly_disjoint(spectrum);
  j["strongly_disjoint"] = check.strongly_disjoint;
  if (!check.strongly_disjoint) {
    write_json(ctx.path("report.json"), j);
    ctx.finalize();
    std::cout << "report: spectrum not strongly disjoint\n";
    return 1;
  }
  const auto catalog = enumerate_catalog(spectrum, cap);
  json by_class = json::object();
  for (const auto& cm : catalog) {
    const std::string key = "dim" + std::to_string(cm.dim) + "_ind" + std::to_string(cm.index) + "_coind" +
                            std::to_string(cm.coindex);
    by_class[key] = by_class.value(key, 0) + 1;
  }
  j["catalog_size"] = catalog.size();
  j["catalog_classes"] = by_class;

  const AdjacencyReport rep = verify_adjacency(spectrum, cfg, 1e-5, cap);
  j["adjacency"] = detail::adjacency_report_to_json(rep);

  const AdjacencyGraph graph = build_graph(spectrum, cap);
  const TransitionWeights weights = edge_weights(graph, eps, horizon);
  json edges = json::array();
  for (std::size_t e = 0; e < graph.edges.size(); ++e)
    edges.push_back(json{{"a", graph.edges[e].node_a},
                         {"b", graph.edges[e].node_b},
                         {"energy", weights.edges[e].energy},
                         {"weight", weights.edges[e].weight}});
  j["emp_edges"] = edges;
  write_json(ctx.path("report.json"), j);
  ctx.finalize();
  std::cout << "report: catalog " << catalog.size() << ", adjacency " << rep.confirmed << "/" << rep.edges_total
            << "\n";
  return rep.all_confirmed() ? 0 : 2;
}

inline int run(int argc, const char* const* argv) {
  CLI::App app{"isoflow: double bracket gradient flow toolkit"};
  app.require_subcommand(1);

  std::string out_root = "runs";
  int threads = default_thread_count();
  int cap_flag = 0;
  app.add_option("--out", out_root, "output root directory");
  app.add_option("--threads", threads, "worker thread cap");
  app.add_option("--cap", cap_flag, "enumeration cap on n (default 8; env ISOFLOW_CAP_N)");

  std::string spectrum_path, chains_path;
  std::uint64_t seed = 0;
  FlowConfig fcfg;
  SdeConfig scfg;
  int n_paths = 100, emp_grid = 400;
  double delta = 1e-5, emp_eps = 0.5, emp_T = 20.0;
  bool verify = false, write_traj = false;

  auto* c_check = app.add_subcommand("spectrum-check", "verify the strongly-disjoint condition");
  c_check->add_option("--spectrum", spectrum_path, "spectrum JSON file")->required();

  auto* c_catalog = app.add_subcommand("catalog", "enumerate all critical manifolds with Morse data");
  c_catalog->add_option("--spectrum", spectrum_path)->required();

  auto* c_flow = app.add_subcommand("flow", "integrate the gradient flow from a random start");
  c_flow->add_option("--spectrum", spectrum_path)->required();
  c_flow->add_option("--seed", seed);
  c_flow->add_option("--h", fcfg.h);
  c_flow->add_option("--T", fcfg.max_time);
  c_flow->add_option("--tol", fcfg.convergence_tol);
  c_flow->add_option("--classify-tol", fcfg.classify_tol);

  auto* c_adj = app.add_subcommand("adjacency", "build the neighbor graph; optionally trace saddles");
  c_adj->add_option("--spectrum", spectrum_path)->required();
  c_adj->add_flag("--verify", verify, "trace every co-index-1 saddle");
  c_adj->add_option("--h", fcfg.h);
  c_adj->add_option("--T", fcfg.max_time);
  c_adj->add_option("--delta", delta, "kick size relative to |K|");

  auto* c_sde = app.add_subcommand("sde", "simulate the stochastic flow ensemble");
  c_sde->add_option("--spectrum", spectrum_path)->required();
  c_sde->add_option("--eps", scfg.epsilon);
  c_sde->add_option("--h", scfg.h);
  c_sde->add_option("--T", scfg.horizon);
  c_sde->add_option("--paths", n_paths);
  c_sde->add_option("--seed", scfg.seed);
  c_sde->add_option("--radius", scfg.state_radius);
  c_sde->add_option("--stride", scfg.record_stride);

  auto* c_markov = app.add_subcommand("markov", "estimate the Markov model from chain CSV");
  c_markov->add_option("--chains", chains_path)->required();
  c_markov->add_option("--spectrum", spectrum_path)->required();

  auto* c_emp = app.add_subcommand("emp", "energy-minimizing-path weights per edge");
  c_emp->add_option("--spectrum", spectrum_path)->required();
  c_emp->add_option("--eps", emp_eps);
  c_emp->add_option("--T", emp_T);
  c_emp->add_option("--grid", emp_grid);
  c_emp->add_flag("--trajectories", write_traj);

  auto* c_report = app.add_subcommand("report", "combined catalog/adjacency/emp report");
  c_report->add_option("--spectrum", spectrum_path)->required();
  c_report->add_option("--eps", emp_eps);
  c_report->add_option("--T", emp_T);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 64;
  }

  const int cap = enumeration_cap(cap_flag);
  try {
    if (c_check->parsed()) return cmd_spectrum_check(spectrum_path, out_root);
    if (c_catalog->parsed()) return cmd_catalog(spectrum_path, out_root, cap);
    if (c_flow->parsed()) return cmd_flow(spectrum_path, seed, fcfg, out_root);
    if (c_adj->parsed()) return cmd_adjacency(spectrum_path, verify, fcfg, delta, out_root, cap);
    if (c_sde->parsed()) return cmd_sde(spectrum_path, scfg, n_paths, threads, out_root, cap);
    if (c_markov->parsed()) return cmd_markov(chains_path, spectrum_path, out_root, cap);
    if (c_emp->parsed()) return cmd_emp(spectrum_path, emp_eps, emp_T, emp_grid, write_traj, out_root, cap);
    if (c_report->parsed()) return cmd_report(spectrum_path, emp_eps, emp_T, fcfg, out_root, cap);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 64;
}

inline int run(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("isoflow");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data());
}

}  // namespace isoflow::cli
