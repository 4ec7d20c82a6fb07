#include "odcal/mesosim.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <fstream>
#include <queue>
#include <thread>

#include "odcal/analytical.hpp"
#include "odcal/errors.hpp"
#include "odcal/io.hpp"
#include "odcal/random.hpp"

namespace odcal {

namespace {

// Simulator-side fundamental diagram constants. The exponents are hidden
// per-segment parameters, hashed from the segment attributes so that every
// run over the same network sees the same physics.
constexpr double kSimKJam = 150.0;  // veh/km/lane
constexpr double kSimVMin = 1.0;    // m/s
constexpr double kExponentLo = 1.5;
constexpr double kExponentHi = 3.5;

// Seed salts for the independent random sub-streams.
constexpr std::uint64_t kSaltReplication = 0x5e9d01;
constexpr std::uint64_t kSaltArrivals = 0xa771;
constexpr std::uint64_t kSaltNoise = 0x40153;

struct SegmentParams {
  double length_m;
  double v_max_mps;
  double inv_len_km_lanes;  // 1 / (length_km * lanes)
  double headway_s;         // min time between consecutive discharges
  double alpha1;
  double alpha2;
};

std::vector<SegmentParams> derive_segment_params(const Network& net) {
  std::vector<SegmentParams> out(net.num_segments());
  for (std::size_t i = 0; i < net.num_segments(); ++i) {
    const Segment& s = net.segments()[i];
    SegmentParams& p = out[i];
    p.length_m = s.length_m;
    p.v_max_mps = s.v_max_mps;
    p.inv_len_km_lanes = 1.0 / ((s.length_m / 1000.0) * s.lanes);
    p.headway_s = 3600.0 / (s.capacity_per_lane_vph * s.lanes);
    std::uint64_t h = rng::derive(0x0dca1u, static_cast<std::uint64_t>(s.id),
                                  std::bit_cast<std::uint64_t>(s.length_m),
                                  static_cast<std::uint64_t>(s.lanes));
    h = rng::derive(h, std::bit_cast<std::uint64_t>(s.v_max_mps));
    p.alpha1 = kExponentLo + (kExponentHi - kExponentLo) * rng::to_unit(rng::derive(h, 1));
    p.alpha2 = kExponentLo + (kExponentHi - kExponentLo) * rng::to_unit(rng::derive(h, 2));
  }
  return out;
}

struct Vehicle {
  std::uint32_t od;
  std::uint32_t leg;
  double depart_s;
};

enum class EventKind : std::uint8_t { arrival, discharge, sample, snapshot };

struct Event {
  double time;
  std::uint64_t seq;  // tie-break: insertion order
  EventKind kind;
  std::uint32_t a;    // vehicle (arrival) or segment (discharge)
  std::uint64_t gen;  // discharge generation for lazy invalidation

  bool operator>(const Event& other) const {
    if (time != other.time) return time > other.time;
    return seq > other.seq;
  }
};

struct Occupant {
  double ready_s;
  std::uint32_t vehicle;
  bool operator>(const Occupant& other) const {
    if (ready_s != other.ready_s) return ready_s > other.ready_s;
    return vehicle > other.vehicle;
  }
};

struct SegmentState {
  std::priority_queue<Occupant, std::vector<Occupant>, std::greater<>> occupants;
  double next_free_s = -1.0;
  std::uint64_t gen = 0;
};

struct RepStats {
  std::vector<double> eta_sum_s;        // per path, completed trips departing after warmup
  std::vector<std::int64_t> eta_count;  // per path
  std::vector<std::int64_t> completed;  // per OD, by end of simulation
  std::vector<std::int64_t> generated;  // per OD
  std::vector<double> queue_at_horizon;  // per segment
  std::int64_t completed_at_horizon = 0;
  std::int64_t in_network_at_horizon = 0;
};

class Replication {
 public:
  Replication(const std::vector<SegmentParams>& params,
              const std::vector<std::vector<std::uint32_t>>& route_idx, const OdVector& x,
              const SimConfig& cfg, std::uint64_t rep_seed, SimTrace* trace)
      : params_(params), route_idx_(route_idx), x_(x), cfg_(cfg), rep_seed_(rep_seed),
        trace_(trace) {}

  RepStats run() {
    const std::size_t n_paths = route_idx_.size();
    stats_.eta_sum_s.assign(n_paths, 0.0);
    stats_.eta_count.assign(n_paths, 0);
    stats_.completed.assign(n_paths, 0);
    stats_.generated.assign(n_paths, 0);
    stats_.queue_at_horizon.assign(params_.size(), 0.0);
    segs_.assign(params_.size(), {});

    generate_arrivals();
    events_.push({cfg_.horizon_s, next_seq_++, EventKind::snapshot, 0, 0});
    if (trace_ != nullptr) {
      events_.push({0.0, next_seq_++, EventKind::sample, 0, 0});
      trace_->vehicles.resize(vehicles_.size());
      for (std::size_t v = 0; v < vehicles_.size(); ++v) {
        trace_->vehicles[v].od = vehicles_[v].od;
        trace_->vehicles[v].depart_s = vehicles_[v].depart_s;
      }
    }

    // Arrivals stop at the horizon; the clock keeps going for an equal drain
    // window so trips near the end of the demand period can finish.
    const double end_s = 2.0 * cfg_.horizon_s;
    while (!events_.empty()) {
      Event ev = events_.top();
      if (ev.time > end_s) break;
      events_.pop();
      switch (ev.kind) {
        case EventKind::arrival:
          handle_arrival(ev);
          break;
        case EventKind::discharge:
          handle_discharge(ev);
          break;
        case EventKind::snapshot:
          take_snapshot();
          break;
        case EventKind::sample:
          take_sample(ev.time);
          break;
      }
    }
    return std::move(stats_);
  }

 private:
  void generate_arrivals() {
    for (std::size_t z = 0; z < x_.size(); ++z) {
      double rate_per_s = x_.demands_vph[z] / 3600.0;
      if (rate_per_s <= 0.0) continue;
      rng::Engine eng =
          rng::make_engine(rng::derive(rep_seed_, kSaltArrivals, static_cast<std::uint64_t>(z)));
      double t = rng::exponential(eng, rate_per_s);
      while (t < cfg_.horizon_s) {
        auto veh = static_cast<std::uint32_t>(vehicles_.size());
        vehicles_.push_back({static_cast<std::uint32_t>(z), 0, t});
        events_.push({t, next_seq_++, EventKind::arrival, veh, 0});
        ++stats_.generated[z];
        t += rng::exponential(eng, rate_per_s);
      }
    }
  }

  void handle_arrival(const Event& ev) {
    enter_segment(ev.a, ev.time);
  }

  void enter_segment(std::uint32_t veh, double now) {
    Vehicle& v = vehicles_[veh];
    std::uint32_t seg = route_idx_[v.od][v.leg];
    const SegmentParams& p = params_[seg];
    SegmentState& st = segs_[seg];

    // Speed from the occupancy the vehicle finds on entry.
    double density = static_cast<double>(st.occupants.size()) * p.inv_len_km_lanes;
    double speed = fd_speed(density, kSimKJam, p.alpha1, p.alpha2, kSimVMin, p.v_max_mps);
    if (cfg_.noise_cv > 0.0) {
      std::uint64_t noise_seed =
          rng::derive(rep_seed_, kSaltNoise, veh, static_cast<std::uint64_t>(v.leg));
      double factor = rng::lognormal_unit_mean_hash(noise_seed, cfg_.noise_cv);
      speed = std::min(speed * std::clamp(factor, 0.25, 4.0), p.v_max_mps);
    }
    double ready = now + p.length_m / speed;
    st.occupants.push({ready, veh});
    if (trace_ != nullptr) trace_->vehicles[veh].leg_entry_s.push_back(now);
    schedule_discharge(seg);
  }

  void schedule_discharge(std::uint32_t seg) {
    SegmentState& st = segs_[seg];
    if (st.occupants.empty()) return;
    double t = std::max(st.occupants.top().ready_s, st.next_free_s);
    events_.push({t, next_seq_++, EventKind::discharge, seg, ++st.gen});
  }

  void handle_discharge(const Event& ev) {
    SegmentState& st = segs_[ev.a];
    if (ev.gen != st.gen) return;  // superseded by a later entry or discharge
    Occupant occ = st.occupants.top();
    st.occupants.pop();
    st.next_free_s = ev.time + params_[ev.a].headway_s;

    Vehicle& v = vehicles_[occ.vehicle];
    ++v.leg;
    if (v.leg < route_idx_[v.od].size()) {
      enter_segment(occ.vehicle, ev.time);
    } else {
      complete_trip(occ.vehicle, ev.time);
    }
    schedule_discharge(ev.a);
  }

  void complete_trip(std::uint32_t veh, double now) {
    const Vehicle& v = vehicles_[veh];
    ++stats_.completed[v.od];
    if (now <= cfg_.horizon_s) ++completed_by_horizon_;
    if (v.depart_s >= cfg_.warmup_s) {
      stats_.eta_sum_s[v.od] += now - v.depart_s;
      ++stats_.eta_count[v.od];
    }
    if (trace_ != nullptr) {
      trace_->vehicles[veh].completed = true;
      trace_->vehicles[veh].completed_s = now;
    }
  }

  void take_snapshot() {
    stats_.completed_at_horizon = completed_by_horizon_;
    std::int64_t in_network = 0;
    for (std::size_t i = 0; i < segs_.size(); ++i) {
      in_network += static_cast<std::int64_t>(segs_[i].occupants.size());
      stats_.queue_at_horizon[i] = count_queued(i, cfg_.horizon_s);
    }
    stats_.in_network_at_horizon = in_network;
  }

  double count_queued(std::size_t seg, double now) const {
    // Occupants whose traversal already finished are waiting on capacity.
    auto heap = segs_[seg].occupants;  // copy; diagnostics only
    double queued = 0.0;
    while (!heap.empty() && heap.top().ready_s <= now) {
      queued += 1.0;
      heap.pop();
    }
    return queued;
  }

  void take_sample(double now) {
    trace_->sample_times_s.push_back(now);
    std::vector<double> counts(segs_.size());
    std::vector<double> queues(segs_.size());
    for (std::size_t i = 0; i < segs_.size(); ++i) {
      counts[i] = static_cast<double>(segs_[i].occupants.size());
      queues[i] = count_queued(i, now);
    }
    trace_->segment_counts.push_back(std::move(counts));
    trace_->queue_lengths.push_back(std::move(queues));
    double next = now + cfg_.timestep_s;
    if (next <= 2.0 * cfg_.horizon_s) {
      events_.push({next, next_seq_++, EventKind::sample, 0, 0});
    }
  }

  const std::vector<SegmentParams>& params_;
  const std::vector<std::vector<std::uint32_t>>& route_idx_;
  const OdVector& x_;
  const SimConfig& cfg_;
  std::uint64_t rep_seed_;
  SimTrace* trace_;

  std::vector<Vehicle> vehicles_;
  std::vector<SegmentState> segs_;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> events_;
  std::uint64_t next_seq_ = 0;
  std::int64_t completed_by_horizon_ = 0;
  RepStats stats_;
};

}  // namespace

void SimConfig::validate() const {
  if (!(timestep_s > 0.0)) throw ValidationError("timestep_s must be > 0");
  if (!(warmup_s >= 0.0) || !(horizon_s > warmup_s)) {
    throw ValidationError("need horizon_s > warmup_s >= 0");
  }
  if (replications < 1) throw ValidationError("replications must be >= 1");
  if (!(noise_cv >= 0.0)) throw ValidationError("noise_cv must be >= 0");
}

SimResult simulate_no_throw(const Network& net, const PathSet& paths, const OdVector& x,
                            const SimConfig& cfg, SimTrace* trace) {
  cfg.validate();
  paths.validate(net);
  x.validate();
  if (x.size() != paths.size()) {
    throw ValidationError("simulate: OD vector and path set sizes differ");
  }

  const std::vector<SegmentParams> params = derive_segment_params(net);
  const std::size_t n_paths = paths.size();
  const int reps = cfg.replications;

  std::vector<double> ff_time(n_paths);
  std::vector<std::vector<std::uint32_t>> route_idx(n_paths);
  for (std::size_t p = 0; p < n_paths; ++p) {
    ff_time[p] = paths.free_flow_time_s(net, p);
    route_idx[p].reserve(paths.segments_by_path[p].size());
    for (SegmentId id : paths.segments_by_path[p]) {
      route_idx[p].push_back(static_cast<std::uint32_t>(net.index_of_segment(id)));
    }
  }

  std::vector<RepStats> rep_stats(reps);
  auto run_rep = [&](int r) {
    std::uint64_t rep_seed = rng::derive(cfg.seed, kSaltReplication, static_cast<std::uint64_t>(r));
    Replication rep(params, route_idx, x, cfg, rep_seed, r == 0 ? trace : nullptr);
    rep_stats[r] = rep.run();
  };

  unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  if (reps == 1 || trace != nullptr || hw == 1) {
    for (int r = 0; r < reps; ++r) run_rep(r);
  } else {
    std::atomic<int> next{0};
    auto worker = [&] {
      for (int r = next.fetch_add(1); r < reps; r = next.fetch_add(1)) run_rep(r);
    };
    std::vector<std::thread> pool;
    unsigned n_threads = std::min<unsigned>(hw, static_cast<unsigned>(reps));
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  // Per-replication path means (with the free-flow + residual-queue fallback
  // for paths that completed no trip), then moments across replications.
  SimResult res;
  res.mean_eta_s.assign(n_paths, 0.0);
  res.eta_var_s2.assign(n_paths, 0.0);
  res.completed.assign(n_paths, 0);
  res.generated.assign(n_paths, 0);
  res.queue_at_horizon.assign(net.num_segments(), 0.0);

  std::vector<double> mean_sum(n_paths, 0.0), mean_sq_sum(n_paths, 0.0);
  for (int r = 0; r < reps; ++r) {
    const RepStats& st = rep_stats[r];
    for (std::size_t p = 0; p < n_paths; ++p) {
      double rep_mean;
      if (st.eta_count[p] > 0) {
        rep_mean = st.eta_sum_s[p] / static_cast<double>(st.eta_count[p]);
      } else {
        double residual = 0.0;
        for (std::uint32_t i : route_idx[p]) {
          residual += st.queue_at_horizon[i] * params[i].headway_s;
        }
        rep_mean = ff_time[p] + residual;
      }
      mean_sum[p] += rep_mean;
      mean_sq_sum[p] += rep_mean * rep_mean;
      res.completed[p] += st.completed[p];
      res.generated[p] += st.generated[p];
    }
    for (std::size_t i = 0; i < net.num_segments(); ++i) {
      res.queue_at_horizon[i] += st.queue_at_horizon[i] / reps;
    }
    res.completed_at_horizon += st.completed_at_horizon;
    res.in_network_at_horizon += st.in_network_at_horizon;
  }
  for (std::size_t p = 0; p < n_paths; ++p) {
    double mean = mean_sum[p] / reps;
    res.mean_eta_s[p] = mean;
    if (reps > 1) {
      double var = (mean_sq_sum[p] - reps * mean * mean) / (reps - 1);
      res.eta_var_s2[p] = std::max(0.0, var);
    }
    res.generated_total += res.generated[p];
    res.completed_total += res.completed[p];
  }

  if (paths.has_gt()) {
    double acc = 0.0;
    for (std::size_t p = 0; p < n_paths; ++p) {
      double rdiff = paths.gt_eta_s[p] - res.mean_eta_s[p];
      acc += rdiff * rdiff;
    }
    res.loss = acc / static_cast<double>(n_paths);
  }

  res.gridlocked = res.generated_total > 0 &&
                   res.completed_total * 2 < res.generated_total;
  return res;
}

SimResult simulate(const Network& net, const PathSet& paths, const OdVector& x,
                   const SimConfig& cfg) {
  SimResult res = simulate_no_throw(net, paths, x, cfg);
  if (res.gridlocked) {
    throw GridlockError("gridlock: " + std::to_string(res.completed_total) + " of " +
                        std::to_string(res.generated_total) +
                        " generated vehicles completed");
  }
  return res;
}

PathSet make_ground_truth(const Network& net, const PathSet& paths, const OdVector& x_true,
                          const SimConfig& cfg) {
  PathSet out = paths;
  out.gt_eta_s.clear();  // GT is being (re)built; ignore any previous values
  SimResult res = simulate(net, out, x_true, cfg);
  out.gt_eta_s = res.mean_eta_s;
  return out;
}

void save_sim_result(const SimResult& result, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) {
    throw ParseError("cannot write " + file.string());
  }
  out << "od_index,mean_eta_s,eta_var_s2,completed,generated\n";
  for (std::size_t p = 0; p < result.mean_eta_s.size(); ++p) {
    out << p << "," << fmt_double(result.mean_eta_s[p]) << ","
        << fmt_double(result.eta_var_s2[p]) << "," << result.completed[p] << ","
        << result.generated[p] << "\n";
  }
}

}  // namespace odcal
