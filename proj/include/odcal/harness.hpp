#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "odcal/analytical.hpp"
#include "odcal/config.hpp"
#include "odcal/mesosim.hpp"
#include "odcal/metamodel.hpp"
#include "odcal/network.hpp"
#include "odcal/spsa.hpp"

// Scenario generation, experiment orchestration and reporting: synthetic
// ring-plus-crossings networks with ramp zones, hidden true OD vectors,
// ground truth manufactured by the simulator, and budget-matched
// metamodel vs SPSA comparisons.

namespace odcal {

struct ScenarioSpec {
  int segments = 60;
  int ods = 30;
  std::string congestion = "medium";  // low / medium / high
  std::uint64_t seed = 1;
  int gt_replications = 10;
  int eval_replications = 5;
  double noise_cv = 0.1;
  double horizon_s = 0.0;       // 0: three times the longest route free-flow time
  double max_route_ff_s = 0.0;  // 0: no cap on route free-flow time

  void validate() const;
};

struct Scenario {
  Network net;
  PathSet paths;  // with ground truth attached
  OdVector x_true;
  std::vector<double> x_upper;
  SimConfig sim;  // evaluation settings (seed, replications, horizon, ...)
  FdParams fd;
  std::string congestion;
  std::uint64_t seed = 0;
  std::filesystem::path dir;
};

// Builds the network, fixes one free-flow route per OD, draws the hidden
// true demand at the requested congestion level, manufactures ground truth
// with the simulator and writes every scenario file plus a scenario.json
// manifest into out_dir. Retries the demand draw a bounded number of times
// if ground-truth generation gridlocks.
Scenario generate_scenario(const ScenarioSpec& spec, const std::filesystem::path& out_dir);

Scenario load_scenario(const std::filesystem::path& manifest);

// Re-generates the ground-truth file of an existing scenario (optionally
// with a different seed / replication count) and rewrites gt_eta.csv.
void regenerate_ground_truth(Scenario& scenario, std::uint64_t seed, int replications);

struct ComparisonReport {
  int budget = 0;
  std::vector<std::uint64_t> seeds;
  // Incumbent nRMSE after each simulation call, one series per seed.
  std::vector<std::vector<double>> nrmse_metamodel;
  std::vector<std::vector<double>> nrmse_spsa;
  std::vector<double> delta_mean;  // per call: mean over seeds of (spsa - metamodel)
  double final_delta_mean = 0.0;
  double final_rel_improvement = 0.0;  // mean of delta_final / nrmse_spsa_final
  bool partial = false;
  std::vector<std::string> failures;
};

// Runs both algorithms from one common random feasible x0 per seed, with
// equal budgets and shared replication seeds, and writes run logs, delta
// CSVs and an SVG plot into out_dir.
ComparisonReport compare(const Scenario& scenario, int budget,
                         const std::vector<std::uint64_t>& seeds,
                         const std::filesystem::path& out_dir);

struct ReportCell {
  std::string name;
  double final_nrmse_metamodel = 0.0;
  double final_nrmse_spsa = 0.0;
  double final_delta = 0.0;
  double rel_improvement = 0.0;
  bool metamodel_won = false;
};

struct SummaryReport {
  std::vector<ReportCell> cells;
  double mean_delta = 0.0;
  double mean_rel_improvement = 0.0;
  double win_fraction = 0.0;
};

// Aggregates compare outputs (one directory per cell) into a summary table
// and plot, mirroring the multi-scenario structure of the benchmark.
SummaryReport aggregate_report(const std::vector<std::filesystem::path>& compare_dirs,
                               const std::filesystem::path& out_dir);

}  // namespace odcal
