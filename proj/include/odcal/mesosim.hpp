#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "odcal/network.hpp"

// Stochastic mesoscopic traffic simulator. Plays the role of the expensive
// black box: vehicles arrive per OD as Poisson processes, traverse their
// fixed route under density-dependent segment speeds with multiplicative
// lognormal noise, and leave each segment through a capacity-constrained
// discharge with vertical (point) queues. Replications are independent and
// the whole run is a deterministic function of (seed, inputs).
//
// The speed-density relation is the same functional family as the analytical
// model's fundamental diagram, but each segment carries its own hidden
// exponent pair derived by hashing the segment's attributes. The analytical
// model, which shares one exponent pair across all segments, is therefore an
// approximation of this simulator, not an oracle for it.

namespace odcal {

struct SimConfig {
  double horizon_s = 1800.0;   // arrivals occur in [0, horizon_s)
  double timestep_s = 1.0;     // sampling resolution of recorded state series
  double warmup_s = 0.0;       // trips departing before this are excluded from stats
  int replications = 5;
  std::uint64_t seed = 1;
  double noise_cv = 0.1;       // cv of per-(vehicle, segment) speed noise

  void validate() const;
};

struct SimResult {
  // Across-replication mean ETA per path; paths with no completed trips in a
  // replication contribute free-flow time plus a residual queue delay.
  std::vector<double> mean_eta_s;
  // Sample variance of the per-replication mean ETAs (0 with 1 replication).
  std::vector<double> eta_var_s2;
  std::vector<std::int64_t> completed;  // per OD, summed over replications
  std::vector<std::int64_t> generated;  // per OD, summed over replications

  // Mean squared ETA residual vs ground truth; NaN when no GT is attached.
  double loss = std::numeric_limits<double>::quiet_NaN();

  bool gridlocked = false;  // fewer than half of generated vehicles completed

  // Diagnostics, summed (counts) or averaged (queues) over replications.
  std::int64_t generated_total = 0;
  std::int64_t completed_total = 0;
  std::int64_t completed_at_horizon = 0;
  std::int64_t in_network_at_horizon = 0;
  std::vector<double> queue_at_horizon;  // vehicles queued per segment
};

// Optional per-vehicle / per-segment recording of replication 0.
struct VehicleTrace {
  std::uint32_t od = 0;
  double depart_s = 0.0;
  std::vector<double> leg_entry_s;
  double completed_s = 0.0;
  bool completed = false;
};

struct SimTrace {
  std::vector<VehicleTrace> vehicles;
  std::vector<double> sample_times_s;               // every timestep_s
  std::vector<std::vector<double>> segment_counts;  // [sample][segment]
  std::vector<std::vector<double>> queue_lengths;   // [sample][segment]
};

// Runs the simulation; never throws on gridlock (the flag is set instead).
SimResult simulate_no_throw(const Network& net, const PathSet& paths, const OdVector& x,
                            const SimConfig& cfg, SimTrace* trace = nullptr);

// As above but throws GridlockError when fewer than 50% of generated
// vehicles complete.
SimResult simulate(const Network& net, const PathSet& paths, const OdVector& x,
                   const SimConfig& cfg);

// Returns a copy of `paths` with gt_eta_s set to the across-replication mean
// simulated ETAs under the hidden true OD vector.
PathSet make_ground_truth(const Network& net, const PathSet& paths, const OdVector& x_true,
                          const SimConfig& cfg);

// Writes od_index,mean_eta_s,eta_var_s2,completed,generated.
void save_sim_result(const SimResult& result, const std::filesystem::path& file);

}  // namespace odcal
