#include "odcal/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include <json.hpp>

#include "odcal/errors.hpp"
#include "odcal/io.hpp"
#include "odcal/metrics.hpp"
#include "odcal/random.hpp"
#include "svg.hpp"

namespace odcal {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Sub-seed salts of the scenario / experiment seed tree (see README).
constexpr std::uint64_t kSaltTopology = 0x7090;
constexpr std::uint64_t kSaltZones = 0x20e5;
constexpr std::uint64_t kSaltOdChoice = 0x0dc8;
constexpr std::uint64_t kSaltTrueOd = 0x712e;
constexpr std::uint64_t kSaltGtSim = 0x67a0;
constexpr std::uint64_t kSaltEvalSim = 0xe7a1;
constexpr std::uint64_t kSaltX0 = 0x0b0;
constexpr std::uint64_t kSaltRunSim = 0x5137;
constexpr std::uint64_t kSaltSpsaRun = 0x5b5b;

constexpr int kGtRetries = 5;

double congestion_target(const std::string& level) {
  if (level == "low") return 0.30;
  if (level == "medium") return 0.70;
  if (level == "high") return 1.10;
  throw ValidationError("unknown congestion level '" + level +
                        "' (expected low, medium or high)");
}

// One directed roadway between two junctions, subdivided into segments.
struct Corridor {
  int from = 0;
  int to = 0;
  int twin = 0;  // index of the opposite-direction corridor
  std::size_t first_seg = 0;
  std::size_t n_segments = 0;
};

Network build_ring_network(const ScenarioSpec& spec, std::vector<Corridor>& corridors_out) {
  rng::Engine eng = rng::make_engine(rng::derive(spec.seed, kSaltTopology));

  const int n_junctions =
      std::clamp(static_cast<int>(std::llround(std::sqrt(static_cast<double>(spec.segments)) / 2.0)),
                 4, 200);
  const int n_chords_target = std::max(1, n_junctions / 3);

  // Ring edges plus distinct chords spanning at least two ring steps.
  std::vector<std::pair<int, int>> edges;
  for (int j = 0; j < n_junctions; ++j) edges.emplace_back(j, (j + 1) % n_junctions);
  std::set<std::pair<int, int>> used;
  int chords = 0;
  for (int attempt = 0; attempt < 20 * n_chords_target && chords < n_chords_target; ++attempt) {
    int a = static_cast<int>(rng::uniform(eng, 0.0, n_junctions));
    int span = 2 + static_cast<int>(rng::uniform(eng, 0.0, n_junctions - 3.0));
    int b = (a + span) % n_junctions;
    auto key = std::minmax(a, b);
    if (a == b || used.count(key)) continue;
    used.insert(key);
    edges.emplace_back(a, b);
    ++chords;
  }

  const int n_corridors = 2 * static_cast<int>(edges.size());
  const int base_len = std::max(1, spec.segments / n_corridors);
  const int remainder = std::max(0, spec.segments - base_len * n_corridors);

  std::vector<Corridor> corridors(n_corridors);
  std::vector<Segment> segments;
  segments.reserve(static_cast<std::size_t>(base_len + 1) * n_corridors);
  for (int c = 0; c < n_corridors; ++c) {
    const auto& e = edges[c / 2];
    Corridor& cor = corridors[c];
    cor.from = (c % 2 == 0) ? e.first : e.second;
    cor.to = (c % 2 == 0) ? e.second : e.first;
    cor.twin = (c % 2 == 0) ? c + 1 : c - 1;
    cor.n_segments = static_cast<std::size_t>(base_len + (c < remainder ? 1 : 0));
    cor.first_seg = segments.size();

    const bool is_ring = c / 2 < n_junctions;
    const int lanes = is_ring ? 3 : 2;
    const double v_max = rng::uniform(eng, 26.0, 32.0);
    const double cap = rng::uniform(eng, 1700.0, 2000.0);
    for (std::size_t k = 0; k < cor.n_segments; ++k) {
      Segment s;
      s.id = static_cast<SegmentId>(segments.size());
      s.length_m = rng::uniform(eng, 250.0, 550.0);
      s.lanes = lanes;
      s.v_max_mps = v_max;
      s.capacity_per_lane_vph = cap;
      if (k + 1 < cor.n_segments) {
        s.successors.push_back(s.id + 1);
      }
      segments.push_back(std::move(s));
    }
  }

  // Junction wiring: every incoming corridor feeds every outgoing corridor
  // except its own reverse twin (no U-turns).
  for (int c = 0; c < n_corridors; ++c) {
    const Corridor& in = corridors[c];
    SegmentId last = static_cast<SegmentId>(in.first_seg + in.n_segments - 1);
    for (int d = 0; d < n_corridors; ++d) {
      if (d == in.twin) continue;
      const Corridor& out = corridors[d];
      if (out.from != in.to) continue;
      segments[last].successors.push_back(static_cast<SegmentId>(out.first_seg));
    }
  }

  corridors_out = std::move(corridors);
  return Network(std::move(segments), {});
}

std::vector<Zone> place_zones(const std::vector<Corridor>& corridors, int n_zones,
                              std::uint64_t seed) {
  rng::Engine eng = rng::make_engine(seed);
  std::vector<Zone> zones;
  std::set<std::pair<int, int>> taken;  // (corridor, exit slot)
  for (int attempt = 0; attempt < 50 * n_zones && static_cast<int>(zones.size()) < n_zones;
       ++attempt) {
    int c = static_cast<int>(rng::uniform(eng, 0.0, static_cast<double>(corridors.size())));
    const Corridor& cor = corridors[c];
    int exit_slot = 0;
    if (cor.n_segments >= 2) {
      exit_slot = static_cast<int>(
          rng::uniform(eng, 0.0, static_cast<double>(cor.n_segments - 1)));
    }
    if (taken.count({c, exit_slot})) continue;
    taken.insert({c, exit_slot});
    Zone z;
    z.id = static_cast<ZoneId>(zones.size());
    z.exit_segment = static_cast<SegmentId>(cor.first_seg + exit_slot);
    // On-ramp just downstream of the off-ramp, standard interchange layout.
    z.entry_segment = cor.n_segments >= 2
                          ? static_cast<SegmentId>(cor.first_seg + exit_slot + 1)
                          : z.exit_segment;
    zones.push_back(z);
  }
  if (static_cast<int>(zones.size()) < n_zones) {
    throw ValidationError("could not place " + std::to_string(n_zones) +
                          " zones on the generated network");
  }
  return zones;
}

// Ordered zone pairs reachable within the route-length cap, in a seeded
// shuffle order, with per-destination cost fields computed lazily.
PathSet select_od_pairs(const Network& net, int n_ods, double max_route_ff_s,
                        std::uint64_t seed) {
  const auto& zones = net.zones();
  std::vector<std::pair<std::size_t, std::size_t>> candidates;
  for (std::size_t o = 0; o < zones.size(); ++o) {
    for (std::size_t d = 0; d < zones.size(); ++d) {
      if (o != d) candidates.emplace_back(o, d);
    }
  }
  rng::Engine eng = rng::make_engine(seed);
  for (std::size_t i = candidates.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(rng::uniform(eng, 0.0, static_cast<double>(i)));
    std::swap(candidates[i - 1], candidates[j]);
  }

  std::vector<std::vector<double>> cost_cache(zones.size());
  PathSet paths;
  for (const auto& [o, d] : candidates) {
    if (static_cast<int>(paths.size()) >= n_ods) break;
    if (cost_cache[d].empty()) {
      cost_cache[d] = free_flow_costs_to_goal(net, zones[d].exit_segment);
    }
    double ff = cost_cache[d][net.index_of_segment(zones[o].entry_segment)];
    if (!std::isfinite(ff)) continue;
    if (max_route_ff_s > 0.0 && ff > max_route_ff_s) continue;
    paths.od_index.push_back({zones[o].id, zones[d].id});
    paths.segments_by_path.push_back(reconstruct_free_flow_route(
        net, zones[o].entry_segment, zones[d].exit_segment, cost_cache[d]));
  }
  if (static_cast<int>(paths.size()) < n_ods) {
    throw ValidationError("only " + std::to_string(paths.size()) + " of " +
                          std::to_string(n_ods) + " requested OD pairs are connected");
  }
  return paths;
}

// Demand draw scaled so the mean utilization of used segments hits the
// congestion target.
OdVector draw_true_od(const Network& net, const PathSet& paths, const AssignmentMatrix& A,
                      double target_utilization, std::uint64_t seed) {
  rng::Engine eng = rng::make_engine(seed);
  OdVector x;
  x.od_index = paths.od_index;
  x.demands_vph.resize(paths.size());
  for (std::size_t z = 0; z < paths.size(); ++z) {
    x.demands_vph[z] = rng::uniform(eng, 0.3, 1.0);
  }
  std::vector<double> lambda = A.apply(x.demands_vph);
  double util_sum = 0.0;
  std::size_t used = 0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    if (lambda[i] <= 0.0) continue;
    const Segment& s = net.segments()[i];
    util_sum += lambda[i] / (s.capacity_per_lane_vph * s.lanes);
    ++used;
  }
  if (used == 0) {
    throw ValidationError("no segment carries demand; degenerate path set");
  }
  double scale = target_utilization / (util_sum / static_cast<double>(used));
  for (double& v : x.demands_vph) v *= scale;
  return x;
}

std::filesystem::path manifest_path(const std::filesystem::path& dir_or_file) {
  if (std::filesystem::is_directory(dir_or_file)) return dir_or_file / "scenario.json";
  return dir_or_file;
}

std::vector<double> nrmse_series(const SoState& state) {
  std::vector<double> out;
  out.reserve(state.log.size());
  for (const EpochRow& row : state.log) out.push_back(row.nrmse_best);
  return out;
}

}  // namespace

void ScenarioSpec::validate() const {
  if (segments < 10) throw ValidationError("scenario needs at least 10 segments");
  if (ods < 2) throw ValidationError("scenario needs at least 2 OD pairs");
  congestion_target(congestion);
  if (gt_replications < 1 || eval_replications < 1) {
    throw ValidationError("replication counts must be >= 1");
  }
  if (noise_cv < 0.0) throw ValidationError("noise_cv must be >= 0");
}

Scenario generate_scenario(const ScenarioSpec& spec, const std::filesystem::path& out_dir) {
  spec.validate();
  const double target = congestion_target(spec.congestion);

  std::vector<Corridor> corridors;
  Network bare = build_ring_network(spec, corridors);
  const int n_zones = std::max(
      4, static_cast<int>(std::ceil(1.35 * std::sqrt(static_cast<double>(spec.ods)))) + 2);
  std::vector<Zone> zones =
      place_zones(corridors, n_zones, rng::derive(spec.seed, kSaltZones));
  Network net(std::vector<Segment>(bare.segments()), std::move(zones));

  PathSet paths =
      select_od_pairs(net, spec.ods, spec.max_route_ff_s, rng::derive(spec.seed, kSaltOdChoice));
  AssignmentMatrix A = build_assignment_matrix(net, paths);

  double longest_ff = 0.0;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    longest_ff = std::max(longest_ff, paths.free_flow_time_s(net, p));
  }
  SimConfig sim;
  sim.horizon_s = spec.horizon_s > 0.0
                      ? spec.horizon_s
                      : 60.0 * std::ceil(3.0 * longest_ff / 60.0);
  sim.warmup_s = std::floor(std::min(longest_ff, sim.horizon_s / 3.0));
  sim.timestep_s = 1.0;
  sim.noise_cv = spec.noise_cv;

  // Ground truth, retrying the hidden-demand draw if it gridlocks.
  OdVector x_true;
  PathSet gt_paths;
  SimConfig gt_sim = sim;
  gt_sim.replications = spec.gt_replications;
  bool done = false;
  for (int attempt = 0; attempt < kGtRetries && !done; ++attempt) {
    x_true = draw_true_od(net, paths, A, target, rng::derive(spec.seed, kSaltTrueOd, attempt));
    gt_sim.seed = rng::derive(spec.seed, kSaltGtSim, attempt);
    try {
      gt_paths = make_ground_truth(net, paths, x_true, gt_sim);
      done = true;
    } catch (const GridlockError&) {
      if (attempt + 1 == kGtRetries) throw;
    }
  }

  Scenario sc;
  sc.net = std::move(net);
  sc.paths = std::move(gt_paths);
  sc.x_true = std::move(x_true);
  sc.x_upper.resize(sc.x_true.size());
  double mean_true = 0.0;
  for (double v : sc.x_true.demands_vph) mean_true += v;
  mean_true /= static_cast<double>(sc.x_true.size());
  for (std::size_t z = 0; z < sc.x_upper.size(); ++z) {
    sc.x_upper[z] = 3.0 * std::max(sc.x_true.demands_vph[z], mean_true);
  }
  sc.sim = sim;
  sc.sim.replications = spec.eval_replications;
  sc.sim.seed = rng::derive(spec.seed, kSaltEvalSim);
  sc.fd = FdParams{};
  sc.congestion = spec.congestion;
  sc.seed = spec.seed;
  sc.dir = out_dir;

  std::filesystem::create_directories(out_dir);
  save_network(sc.net, out_dir / "network.json");
  save_paths(sc.paths, out_dir / "paths.json");
  save_gt_eta(sc.paths, out_dir / "gt_eta.csv");
  save_od_demands(sc.x_true.demands_vph, out_dir / "x_true.csv");
  save_od_demands(sc.x_upper, out_dir / "x_upper.csv");
  save_run_config({sc.sim, sc.fd}, out_dir / "sim.cfg");

  nlohmann::json manifest;
  manifest["network"] = "network.json";
  manifest["paths"] = "paths.json";
  manifest["gt_eta"] = "gt_eta.csv";
  manifest["x_true"] = "x_true.csv";
  manifest["x_upper"] = "x_upper.csv";
  manifest["sim_config"] = "sim.cfg";
  manifest["congestion"] = sc.congestion;
  manifest["seed"] = sc.seed;
  manifest["gt_seed"] = gt_sim.seed;
  manifest["gt_replications"] = gt_sim.replications;
  std::ofstream mf(out_dir / "scenario.json");
  if (!mf) {
    throw ParseError("cannot write " + (out_dir / "scenario.json").string());
  }
  mf << manifest.dump(1) << "\n";
  return sc;
}

Scenario load_scenario(const std::filesystem::path& manifest_file) {
  const std::filesystem::path mf = manifest_path(manifest_file);
  std::ifstream in(mf);
  if (!in) {
    throw ParseError("cannot open " + mf.string());
  }
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(mf.string() + ": " + e.what());
  }
  const std::filesystem::path dir = mf.parent_path();

  Scenario sc;
  sc.dir = dir;
  sc.net = load_network(dir / manifest.at("network").get<std::string>());
  sc.paths = load_paths(dir / manifest.at("paths").get<std::string>(), sc.net);
  load_gt_eta(dir / manifest.at("gt_eta").get<std::string>(), sc.paths);
  sc.x_true.demands_vph = load_od_demands(dir / manifest.at("x_true").get<std::string>());
  sc.x_true.od_index = sc.paths.od_index;
  sc.x_upper = load_od_demands(dir / manifest.at("x_upper").get<std::string>());
  RunConfig rc = load_run_config(dir / manifest.at("sim_config").get<std::string>());
  sc.sim = rc.sim;
  sc.fd = rc.fd;
  sc.congestion = manifest.value("congestion", "medium");
  sc.seed = manifest.value("seed", 0ULL);

  sc.paths.validate(sc.net);
  if (sc.x_true.size() != sc.paths.size() || sc.x_upper.size() != sc.paths.size()) {
    throw ValidationError(mf.string() + ": OD vector dimensions disagree with the path set");
  }
  sc.x_true.validate(sc.x_upper);
  sc.fd.validate(sc.net);
  return sc;
}

void regenerate_ground_truth(Scenario& scenario, std::uint64_t seed, int replications) {
  SimConfig gt_sim = scenario.sim;
  gt_sim.seed = seed;
  gt_sim.replications = replications;
  scenario.paths = make_ground_truth(scenario.net, scenario.paths, scenario.x_true, gt_sim);
  save_gt_eta(scenario.paths, scenario.dir / "gt_eta.csv");

  const std::filesystem::path mf = scenario.dir / "scenario.json";
  std::ifstream in(mf);
  if (in) {
    nlohmann::json manifest = nlohmann::json::parse(in);
    in.close();
    manifest["gt_seed"] = seed;
    manifest["gt_replications"] = replications;
    std::ofstream out(mf);
    out << manifest.dump(1) << "\n";
  }
}

ComparisonReport compare(const Scenario& scenario, int budget,
                         const std::vector<std::uint64_t>& seeds,
                         const std::filesystem::path& out_dir) {
  if (budget < 3) throw ValidationError("compare: budget must be >= 3");
  if (seeds.empty()) throw ValidationError("compare: need at least one seed");
  std::filesystem::create_directories(out_dir);

  const AssignmentMatrix A = build_assignment_matrix(scenario.net, scenario.paths);
  ComparisonReport report;
  report.budget = budget;
  report.seeds = seeds;

  for (std::uint64_t s : seeds) {
    const std::string tag = "seed" + std::to_string(s);
    OdVector x0 = random_feasible_od(scenario.paths.od_index, scenario.x_upper,
                                     rng::derive(s, kSaltX0));
    SimConfig cfg = scenario.sim;
    cfg.seed = rng::derive(s, kSaltRunSim);  // shared by both algorithms

    std::vector<double> mm_series(budget, kNaN), sp_series(budget, kNaN);
    try {
      SoState mm = run_metamodel(scenario.net, scenario.paths, A, scenario.fd, cfg, x0,
                                 scenario.x_upper, budget);
      save_run_log(mm, out_dir / ("metamodel_" + tag + ".csv"));
      save_run_solution(mm, out_dir / ("metamodel_" + tag + ".json"));
      mm_series = nrmse_series(mm);
    } catch (const std::exception& e) {
      report.partial = true;
      report.failures.push_back("metamodel " + tag + ": " + e.what());
    }
    try {
      SpsaConfig scfg;
      scfg.seed = rng::derive(s, kSaltSpsaRun);
      SoState sp = run_spsa(scenario.net, scenario.paths, A, cfg, scfg, x0, scenario.x_upper,
                            budget);
      save_run_log(sp, out_dir / ("spsa_" + tag + ".csv"));
      sp_series = nrmse_series(sp);
    } catch (const std::exception& e) {
      report.partial = true;
      report.failures.push_back("spsa " + tag + ": " + e.what());
    }

    std::ofstream dc(out_dir / ("delta_" + tag + ".csv"));
    dc << "epoch,nrmse_metamodel,nrmse_spsa,delta\n";
    for (int t = 0; t < budget; ++t) {
      double mm_v = t < static_cast<int>(mm_series.size()) ? mm_series[t] : kNaN;
      double sp_v = t < static_cast<int>(sp_series.size()) ? sp_series[t] : kNaN;
      dc << (t + 1) << "," << fmt_double(mm_v) << "," << fmt_double(sp_v) << ","
         << fmt_double(sp_v - mm_v) << "\n";
    }
    report.nrmse_metamodel.push_back(std::move(mm_series));
    report.nrmse_spsa.push_back(std::move(sp_series));
  }

  // Mean delta per simulation call over the seeds with both runs available.
  report.delta_mean.assign(budget, kNaN);
  for (int t = 0; t < budget; ++t) {
    double acc = 0.0;
    int count = 0;
    for (std::size_t r = 0; r < seeds.size(); ++r) {
      double mm_v = report.nrmse_metamodel[r][t];
      double sp_v = report.nrmse_spsa[r][t];
      if (std::isfinite(mm_v) && std::isfinite(sp_v)) {
        acc += sp_v - mm_v;
        ++count;
      }
    }
    if (count > 0) report.delta_mean[t] = acc / count;
  }

  double final_delta = 0.0, final_rel = 0.0;
  int final_count = 0;
  for (std::size_t r = 0; r < seeds.size(); ++r) {
    double mm_v = report.nrmse_metamodel[r][budget - 1];
    double sp_v = report.nrmse_spsa[r][budget - 1];
    if (std::isfinite(mm_v) && std::isfinite(sp_v) && sp_v > 0.0) {
      final_delta += sp_v - mm_v;
      final_rel += (sp_v - mm_v) / sp_v;
      ++final_count;
    }
  }
  report.final_delta_mean = final_count > 0 ? final_delta / final_count : kNaN;
  report.final_rel_improvement = final_count > 0 ? final_rel / final_count : kNaN;

  {
    std::ofstream out(out_dir / "delta_mean.csv");
    out << "epoch,delta_mean\n";
    for (int t = 0; t < budget; ++t) {
      out << (t + 1) << "," << fmt_double(report.delta_mean[t]) << "\n";
    }
  }
  {
    std::ofstream out(out_dir / "compare_summary.csv");
    out << "seed,final_nrmse_metamodel,final_nrmse_spsa,final_delta,rel_improvement\n";
    for (std::size_t r = 0; r < seeds.size(); ++r) {
      double mm_v = report.nrmse_metamodel[r][budget - 1];
      double sp_v = report.nrmse_spsa[r][budget - 1];
      out << seeds[r] << "," << fmt_double(mm_v) << "," << fmt_double(sp_v) << ","
          << fmt_double(sp_v - mm_v) << ","
          << fmt_double(sp_v > 0.0 ? (sp_v - mm_v) / sp_v : kNaN) << "\n";
    }
  }

  std::vector<svg::Series> series;
  for (std::size_t r = 0; r < seeds.size(); ++r) {
    svg::Series srs;
    srs.label = "seed " + std::to_string(seeds[r]);
    for (int t = 0; t < budget; ++t) {
      srs.x.push_back(t + 1);
      srs.y.push_back(report.nrmse_spsa[r][t] - report.nrmse_metamodel[r][t]);
    }
    series.push_back(std::move(srs));
  }
  svg::Series mean_s;
  mean_s.label = "mean";
  mean_s.color = "#000000";
  for (int t = 0; t < budget; ++t) {
    mean_s.x.push_back(t + 1);
    mean_s.y.push_back(report.delta_mean[t]);
  }
  series.push_back(std::move(mean_s));
  svg::write_line_plot(out_dir / "delta.svg", "nRMSE difference (SPSA - metamodel)",
                       "simulation calls", "delta nRMSE", std::move(series));

  if (report.partial) {
    std::ofstream out(out_dir / "FAILURES.txt");
    for (const std::string& f : report.failures) out << f << "\n";
  }
  return report;
}

SummaryReport aggregate_report(const std::vector<std::filesystem::path>& compare_dirs,
                               const std::filesystem::path& out_dir) {
  if (compare_dirs.empty()) {
    throw ValidationError("report: no compare directories given");
  }
  std::filesystem::create_directories(out_dir);
  SummaryReport summary;
  std::vector<svg::Series> series;

  for (const auto& dir : compare_dirs) {
    CsvTable t = read_csv(dir / "compare_summary.csv");
    std::size_t c_mm = t.column("final_nrmse_metamodel");
    std::size_t c_sp = t.column("final_nrmse_spsa");
    ReportCell cell;
    cell.name = dir.filename().string().empty() ? dir.string() : dir.filename().string();
    double mm_acc = 0.0, sp_acc = 0.0;
    int n = 0;
    for (const auto& row : t.rows) {
      double mm_v = parse_double(row[c_mm], dir.string());
      double sp_v = parse_double(row[c_sp], dir.string());
      if (std::isfinite(mm_v) && std::isfinite(sp_v)) {
        mm_acc += mm_v;
        sp_acc += sp_v;
        ++n;
      }
    }
    if (n == 0) continue;
    cell.final_nrmse_metamodel = mm_acc / n;
    cell.final_nrmse_spsa = sp_acc / n;
    cell.final_delta = cell.final_nrmse_spsa - cell.final_nrmse_metamodel;
    cell.rel_improvement =
        cell.final_nrmse_spsa > 0.0 ? cell.final_delta / cell.final_nrmse_spsa : kNaN;
    cell.metamodel_won = cell.final_nrmse_metamodel <= cell.final_nrmse_spsa;
    summary.cells.push_back(cell);

    CsvTable dm = read_csv(dir / "delta_mean.csv");
    std::size_t c_e = dm.column("epoch");
    std::size_t c_d = dm.column("delta_mean");
    svg::Series srs;
    srs.label = cell.name;
    for (const auto& row : dm.rows) {
      srs.x.push_back(parse_double(row[c_e], dir.string()));
      srs.y.push_back(parse_double(row[c_d], dir.string()));
    }
    series.push_back(std::move(srs));
  }
  if (summary.cells.empty()) {
    throw ValidationError("report: no usable compare results found");
  }

  double delta_acc = 0.0, rel_acc = 0.0, wins = 0.0;
  for (const ReportCell& c : summary.cells) {
    delta_acc += c.final_delta;
    rel_acc += c.rel_improvement;
    wins += c.metamodel_won ? 1.0 : 0.0;
  }
  const double n_cells = static_cast<double>(summary.cells.size());
  summary.mean_delta = delta_acc / n_cells;
  summary.mean_rel_improvement = rel_acc / n_cells;
  summary.win_fraction = wins / n_cells;

  std::ofstream out(out_dir / "summary.csv");
  out << "cell,final_nrmse_metamodel,final_nrmse_spsa,final_delta,rel_improvement,"
         "metamodel_won\n";
  for (const ReportCell& c : summary.cells) {
    out << c.name << "," << fmt_double(c.final_nrmse_metamodel) << ","
        << fmt_double(c.final_nrmse_spsa) << "," << fmt_double(c.final_delta) << ","
        << fmt_double(c.rel_improvement) << "," << (c.metamodel_won ? 1 : 0) << "\n";
  }
  out << "mean,," << "," << fmt_double(summary.mean_delta) << ","
      << fmt_double(summary.mean_rel_improvement) << "," << fmt_double(summary.win_fraction)
      << "\n";

  svg::write_line_plot(out_dir / "summary.svg", "mean nRMSE difference per cell",
                       "simulation calls", "delta nRMSE", std::move(series));
  return summary;
}

}  // namespace odcal
