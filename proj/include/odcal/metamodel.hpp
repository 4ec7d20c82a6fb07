#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "odcal/analytical.hpp"
#include "odcal/mesosim.hpp"
#include "odcal/network.hpp"

// Metamodel simulation-based optimization. Each epoch fits the surrogate
//   m_k(x) = beta_0 * f_A(x) + beta_1 + sum_z beta_{z+2} x_z
// to the simulated losses observed so far, minimizes it over the demand box
// with projected gradient descent, and spends one simulation call on the
// proposed candidate.

namespace odcal {

struct MetamodelParams {
  // [0] scale on f_A, [1] intercept, [2 + z] linear coefficient of OD z.
  std::vector<double> beta;

  static MetamodelParams prior(std::size_t dim);
};

// One simulated point of the optimization history.
struct EvalRecord {
  OdVector x;
  double loss = 0.0;  // +inf for a failed (gridlocked) evaluation
  std::vector<double> path_eta_s;
  int replications = 0;
  int epoch = 0;
};

struct EpochRow {
  int epoch = 0;
  int sim_calls = 0;
  double candidate_loss = 0.0;
  double best_loss = 0.0;
  double nrmse_best = 0.0;  // NaN when no ground truth is attached
};

struct SoState {
  std::vector<EvalRecord> history;
  std::size_t best = 0;  // index of the minimum-loss record
  int epoch = 0;
  std::uint64_t rng_seed = 0;
  std::vector<EpochRow> log;         // one row per simulation call
  std::vector<double> final_beta;    // last fitted surrogate (metamodel runs)

  const EvalRecord& best_record() const { return history[best]; }
};

// What the optimizers need from an objective evaluation. Production code
// wraps mesosim; tests may substitute any deterministic or stochastic stub.
struct Evaluation {
  double loss = 0.0;
  std::vector<double> path_eta_s;
  int replications = 1;
  bool failed = false;
};

using Objective = std::function<Evaluation(const OdVector&)>;

// Simulation-backed objective with common random numbers: every candidate is
// evaluated under the same replication seeds. Gridlock becomes a failed
// evaluation with loss = +inf.
Objective make_sim_objective(const Network& net, const PathSet& paths, const SimConfig& cfg);

struct FitOptions {
  // Ridge strength; defaults to 1e-3 * sum_j w_j loss_j^2.
  std::optional<double> gamma;
};

// Weighted ridge regression of the surrogate parameters onto the observed
// (x_j, loss_j) history; fa_values[j] must hold f_A(x_j). Records with
// non-finite loss are ignored. Deterministic.
MetamodelParams fit_beta(const std::vector<EvalRecord>& history, const OdVector& x_current,
                         const std::vector<double>& fa_values, const FitOptions& opts = {});

double surrogate_value(const Network& net, const AssignmentMatrix& A, const FdParams& fd,
                       const PathSet& paths, const MetamodelParams& beta, const OdVector& x);

struct SurrogateOptions {
  int max_iterations = 500;
  double tolerance = 1e-6;
  int multistarts = 2;
  std::uint64_t seed = 0;
};

// Minimizes m_k over the box [0, x_upper] by projected gradient descent with
// Armijo backtracking, from x_start plus random multistarts; returns the best
// point found (never worse than x_start in m_k value).
OdVector solve_surrogate(const Network& net, const AssignmentMatrix& A, const FdParams& fd,
                         const PathSet& paths, const MetamodelParams& beta,
                         const OdVector& x_start, std::span<const double> x_upper,
                         const SurrogateOptions& opts = {});

struct MetamodelOptions {
  int budget = 30;              // total simulation evaluations, including x0
  int stall_epochs = 3;         // diversify after this many non-improving epochs
  std::uint64_t seed = 0;       // 0: derived from the simulation seed
};

// Full epoch loop against an arbitrary objective.
SoState run_metamodel_core(const Objective& objective, const Network& net,
                           const AssignmentMatrix& A, const FdParams& fd, const PathSet& paths,
                           const OdVector& x0, std::span<const double> x_upper,
                           const MetamodelOptions& opts);

// Simulation-backed entry point.
SoState run_metamodel(const Network& net, const PathSet& paths, const AssignmentMatrix& A,
                      const FdParams& fd, const SimConfig& cfg, const OdVector& x0,
                      std::span<const double> x_upper, int budget);

// Run-log CSV (epoch,sim_calls,candidate_loss,best_loss,nrmse_best) and a
// JSON dump of the final OD vector and surrogate parameters.
void save_run_log(const SoState& state, const std::filesystem::path& csv_file);
void save_run_solution(const SoState& state, const std::filesystem::path& json_file);

}  // namespace odcal
