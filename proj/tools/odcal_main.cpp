// Command-line surface of the OD calibration toolkit: scenario generation,
// ground-truth regeneration, single-algorithm calibration runs, budget-matched
// metamodel vs SPSA comparisons and report aggregation.

#include <cstdio>
#include <exception>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "odcal/errors.hpp"
#include "odcal/harness.hpp"
#include "odcal/io.hpp"
#include "odcal/metrics.hpp"
#include "odcal/random.hpp"

namespace {

using namespace odcal;

// x0 and run seeds are derived exactly as in compare(), so a calibrate run
// reproduces one arm of a comparison.
constexpr std::uint64_t kSaltX0 = 0x0b0;
constexpr std::uint64_t kSaltRunSim = 0x5137;
constexpr std::uint64_t kSaltSpsaRun = 0x5b5b;

int cmd_generate(const ScenarioSpec& spec, const std::string& out_dir) {
  Scenario sc = generate_scenario(spec, out_dir);
  std::printf("scenario written to %s\n", sc.dir.string().c_str());
  std::printf("segments=%zu ods=%zu congestion=%s horizon_s=%s\n", sc.net.num_segments(),
              sc.paths.size(), sc.congestion.c_str(), fmt_double(sc.sim.horizon_s).c_str());
  return 0;
}

int cmd_ground_truth(const std::string& scenario_path, std::uint64_t seed, int replications) {
  Scenario sc = load_scenario(scenario_path);
  regenerate_ground_truth(sc, seed, replications);
  std::printf("ground truth rewritten (%d replications, seed %llu)\n", replications,
              static_cast<unsigned long long>(seed));
  return 0;
}

int cmd_calibrate(const std::string& scenario_path, const std::string& algo, int budget,
                  std::uint64_t seed, const std::string& out_dir) {
  Scenario sc = load_scenario(scenario_path);
  AssignmentMatrix A = build_assignment_matrix(sc.net, sc.paths);
  OdVector x0 = random_feasible_od(sc.paths.od_index, sc.x_upper, rng::derive(seed, kSaltX0));
  SimConfig cfg = sc.sim;
  cfg.seed = rng::derive(seed, kSaltRunSim);

  SoState state;
  if (algo == "metamodel") {
    state = run_metamodel(sc.net, sc.paths, A, sc.fd, cfg, x0, sc.x_upper, budget);
  } else if (algo == "spsa") {
    SpsaConfig scfg;
    scfg.seed = rng::derive(seed, kSaltSpsaRun);
    state = run_spsa(sc.net, sc.paths, A, cfg, scfg, x0, sc.x_upper, budget);
  } else {
    throw ValidationError("unknown algorithm '" + algo + "'");
  }

  std::filesystem::create_directories(out_dir);
  const std::filesystem::path base = std::filesystem::path(out_dir) / algo;
  save_run_log(state, base.string() + "_run.csv");
  save_run_solution(state, base.string() + "_solution.json");
  save_od_demands(state.best_record().x.demands_vph, base.string() + "_x.csv");

  double final_nrmse = state.log.empty() ? 0.0 : state.log.back().nrmse_best;
  std::printf("%s: %zu simulation calls, best loss %s, final nRMSE %s\n", algo.c_str(),
              state.history.size(), fmt_double(state.best_record().loss).c_str(),
              fmt_double(final_nrmse).c_str());
  std::printf("run log: %s_run.csv\n", base.string().c_str());
  return 0;
}

int cmd_compare(const std::string& scenario_path, int budget,
                const std::vector<std::uint64_t>& seeds, const std::string& out_dir) {
  Scenario sc = load_scenario(scenario_path);
  ComparisonReport report = compare(sc, budget, seeds, out_dir);
  for (std::size_t r = 0; r < report.seeds.size(); ++r) {
    double mm = report.nrmse_metamodel[r][budget - 1];
    double sp = report.nrmse_spsa[r][budget - 1];
    std::printf("seed %llu: final nRMSE metamodel=%s spsa=%s delta=%s\n",
                static_cast<unsigned long long>(report.seeds[r]), fmt_double(mm).c_str(),
                fmt_double(sp).c_str(), fmt_double(sp - mm).c_str());
  }
  std::printf("mean final delta %s, mean relative improvement %s\n",
              fmt_double(report.final_delta_mean).c_str(),
              fmt_double(report.final_rel_improvement).c_str());
  if (report.partial) {
    for (const std::string& f : report.failures) std::fprintf(stderr, "FAILED: %s\n", f.c_str());
    return static_cast<int>(ExitCode::partial);
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& in_dirs, const std::string& out_dir) {
  std::vector<std::filesystem::path> dirs(in_dirs.begin(), in_dirs.end());
  SummaryReport summary = aggregate_report(dirs, out_dir);
  std::printf("%-28s %12s %12s %10s %10s %4s\n", "cell", "nrmse_meta", "nrmse_spsa", "delta",
              "rel_impr", "won");
  for (const ReportCell& c : summary.cells) {
    std::printf("%-28s %12.4f %12.4f %10.4f %10.4f %4s\n", c.name.c_str(),
                c.final_nrmse_metamodel, c.final_nrmse_spsa, c.final_delta, c.rel_improvement,
                c.metamodel_won ? "yes" : "no");
  }
  std::printf("mean delta %.4f, mean relative improvement %.1f%%, metamodel won %.0f%% of cells\n",
              summary.mean_delta, 100.0 * summary.mean_rel_improvement,
              100.0 * summary.win_fraction);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"OD travel-demand calibration toolkit"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "Generate a synthetic scenario");
  ScenarioSpec spec;
  std::string gen_out = "scenario";
  gen->add_option("--segments", spec.segments, "Target number of road segments");
  gen->add_option("--ods", spec.ods, "Number of OD pairs");
  gen->add_option("--level", spec.congestion, "Congestion level: low, medium or high");
  gen->add_option("--seed", spec.seed, "Master seed");
  gen->add_option("--gt-replications", spec.gt_replications, "Replications for ground truth");
  gen->add_option("--eval-replications", spec.eval_replications,
                  "Replications per calibration evaluation");
  gen->add_option("--noise-cv", spec.noise_cv, "Speed noise coefficient of variation");
  gen->add_option("--horizon", spec.horizon_s, "Demand horizon in seconds (0: auto)");
  gen->add_option("--max-route-ff", spec.max_route_ff_s,
                  "Max route free-flow time in seconds (0: unlimited)");
  gen->add_option("--out", gen_out, "Output directory");

  // ground-truth
  auto* gt = app.add_subcommand("ground-truth", "Re-generate scenario ground truth");
  std::string gt_scenario;
  std::uint64_t gt_seed = 1;
  int gt_reps = 10;
  gt->add_option("--scenario", gt_scenario, "Scenario directory or manifest")->required();
  gt->add_option("--seed", gt_seed, "Simulation seed");
  gt->add_option("--replications", gt_reps, "Replication count");

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Run one calibration algorithm");
  std::string cal_scenario, cal_algo = "metamodel", cal_out = "calibration";
  int cal_budget = 30;
  std::uint64_t cal_seed = 1;
  cal->add_option("--scenario", cal_scenario, "Scenario directory or manifest")->required();
  cal->add_option("--algo", cal_algo, "metamodel or spsa");
  cal->add_option("--budget", cal_budget, "Simulation-call budget");
  cal->add_option("--seed", cal_seed, "Run seed");
  cal->add_option("--out", cal_out, "Output directory");

  // compare
  auto* cmp = app.add_subcommand("compare", "Budget-matched metamodel vs SPSA comparison");
  std::string cmp_scenario, cmp_out = "comparison";
  int cmp_budget = 30;
  std::vector<std::uint64_t> cmp_seeds{1};
  cmp->add_option("--scenario", cmp_scenario, "Scenario directory or manifest")->required();
  cmp->add_option("--budget", cmp_budget, "Simulation-call budget per algorithm");
  cmp->add_option("--seeds", cmp_seeds, "Run seeds")->delimiter(',');
  cmp->add_option("--out", cmp_out, "Output directory");

  // report
  auto* rep = app.add_subcommand("report", "Aggregate compare outputs");
  std::vector<std::string> rep_in;
  std::string rep_out = "report";
  rep->add_option("--in", rep_in, "Compare output directories")->required()->delimiter(',');
  rep->add_option("--out", rep_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen->parsed()) return cmd_generate(spec, gen_out);
    if (gt->parsed()) return cmd_ground_truth(gt_scenario, gt_seed, gt_reps);
    if (cal->parsed()) return cmd_calibrate(cal_scenario, cal_algo, cal_budget, cal_seed, cal_out);
    if (cmp->parsed()) return cmd_compare(cmp_scenario, cmp_budget, cmp_seeds, cmp_out);
    if (rep->parsed()) return cmd_report(rep_in, rep_out);
  } catch (const GridlockError& e) {
    std::fprintf(stderr, "gridlock: %s\n", e.what());
    return static_cast<int>(odcal::ExitCode::gridlock);
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "invalid input: %s\n", e.what());
    return static_cast<int>(odcal::ExitCode::validation);
  } catch (const ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return static_cast<int>(odcal::ExitCode::validation);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return static_cast<int>(odcal::ExitCode::failure);
  }
  return 0;
}
