#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "odcal/errors.hpp"

// Road network representation, fixed-route path management and the
// OD -> segment demand assignment matrix.

namespace odcal {

using SegmentId = std::int64_t;
using ZoneId = std::int64_t;

struct Segment {
  SegmentId id = 0;
  double length_m = 0.0;
  int lanes = 1;
  double v_max_mps = 0.0;
  double capacity_per_lane_vph = 0.0;  // simulator-side discharge rate
  std::vector<SegmentId> successors;
};

// A zone is a ramp pair: trips of this zone enter the highway on
// entry_segment and leave it at exit_segment.
struct Zone {
  ZoneId id = 0;
  SegmentId entry_segment = 0;
  SegmentId exit_segment = 0;
};

class Network {
 public:
  Network() = default;
  Network(std::vector<Segment> segments, std::vector<Zone> zones);

  const std::vector<Segment>& segments() const { return segments_; }
  const std::vector<Zone>& zones() const { return zones_; }
  std::size_t num_segments() const { return segments_.size(); }

  std::size_t index_of_segment(SegmentId id) const;
  std::size_t index_of_zone(ZoneId id) const;
  const Segment& segment(SegmentId id) const { return segments_[index_of_segment(id)]; }
  const Zone& zone(ZoneId id) const { return zones_[index_of_zone(id)]; }

  // Successor lists resolved to dense segment indices, in input order.
  const std::vector<std::vector<std::uint32_t>>& successor_indices() const {
    return succ_idx_;
  }

  double free_flow_time_s(std::span<const SegmentId> route) const;
  double mean_capacity_per_lane_vph() const;

 private:
  void validate_and_index();

  std::vector<Segment> segments_;
  std::vector<Zone> zones_;
  std::unordered_map<SegmentId, std::size_t> seg_index_;
  std::unordered_map<ZoneId, std::size_t> zone_index_;
  std::vector<std::vector<std::uint32_t>> succ_idx_;
};

struct OdPair {
  ZoneId origin = 0;
  ZoneId destination = 0;
  bool operator==(const OdPair&) const = default;
};

// OD demand vector: expected trips per hour for each OD pair. The decision
// variable of the calibration problem.
struct OdVector {
  std::vector<double> demands_vph;
  std::vector<OdPair> od_index;

  std::size_t size() const { return demands_vph.size(); }
  void validate(std::span<const double> upper_bound = {}) const;

  static OdVector zeros_like(const OdVector& other);
};

// One fixed route per OD pair, optionally carrying ground-truth mean travel
// times for each path.
struct PathSet {
  std::vector<OdPair> od_index;
  std::vector<std::vector<SegmentId>> segments_by_path;
  std::vector<double> gt_eta_s;  // empty, or one entry per path

  std::size_t size() const { return segments_by_path.size(); }
  bool has_gt() const { return gt_eta_s.size() == size() && !gt_eta_s.empty(); }
  void validate(const Network& net) const;
  double free_flow_time_s(const Network& net, std::size_t path) const;
};

// Sparse binary matrix A with one row per segment (network order) and one
// column per OD pair; A[i,z] = 1 iff segment i lies on the route of OD z.
class AssignmentMatrix {
 public:
  AssignmentMatrix() = default;
  AssignmentMatrix(std::size_t rows, std::vector<std::vector<std::uint32_t>> col_rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return col_rows_.size(); }
  const std::vector<std::uint32_t>& column(std::size_t z) const { return col_rows_[z]; }

  // lambda = A x : per-segment demand from OD demand.
  std::vector<double> apply(std::span<const double> x) const;
  // g = A^T y : accumulate per-segment values onto OD pairs.
  std::vector<double> apply_transpose(std::span<const double> y) const;

 private:
  std::size_t rows_ = 0;
  std::vector<std::vector<std::uint32_t>> col_rows_;
};

Network load_network(const std::filesystem::path& file);
void save_network(const Network& net, const std::filesystem::path& file);

PathSet load_paths(const std::filesystem::path& file, const Network& net);
void save_paths(const PathSet& paths, const std::filesystem::path& file);

// CSV with header od_index,gt_eta_s.
void load_gt_eta(const std::filesystem::path& file, PathSet& paths);
void save_gt_eta(const PathSet& paths, const std::filesystem::path& file);

// Route minimizing free-flow travel time sum(l_i / v_i_max) from the origin
// zone's entry segment to the destination zone's exit segment, inclusive.
// Ties are broken toward the lexicographically smallest id sequence.
std::vector<SegmentId> shortest_free_flow_route(const Network& net, ZoneId origin,
                                                ZoneId destination);

// Reverse Dijkstra: per segment, the minimal free-flow time of a route from
// that segment to `goal`, including both endpoint traversals; +inf where no
// route exists. Shared by route queries that fan out from one destination.
std::vector<double> free_flow_costs_to_goal(const Network& net, SegmentId goal);

// Lexicographically-smallest shortest route recovered from the cost field.
std::vector<SegmentId> reconstruct_free_flow_route(const Network& net, SegmentId start,
                                                   SegmentId goal,
                                                   const std::vector<double>& costs_to_goal);

AssignmentMatrix build_assignment_matrix(const Network& net, const PathSet& paths);

// Componentwise-uniform draw on [0, upper]; the standard feasible start.
OdVector random_feasible_od(const std::vector<OdPair>& od_index,
                            std::span<const double> upper, std::uint64_t seed);

}  // namespace odcal
