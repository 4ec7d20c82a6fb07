#include "odcal/network.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "odcal/random.hpp"

namespace odcal {

using nlohmann::json;

Network::Network(std::vector<Segment> segments, std::vector<Zone> zones)
    : segments_(std::move(segments)), zones_(std::move(zones)) {
  validate_and_index();
}

void Network::validate_and_index() {
  seg_index_.clear();
  seg_index_.reserve(segments_.size());
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    const Segment& s = segments_[i];
    if (!seg_index_.emplace(s.id, i).second) {
      throw ValidationError("duplicate segment id " + std::to_string(s.id));
    }
    if (!(s.length_m > 0.0)) {
      throw ValidationError("segment " + std::to_string(s.id) + ": length_m must be > 0");
    }
    if (s.lanes < 1) {
      throw ValidationError("segment " + std::to_string(s.id) + ": lanes must be >= 1");
    }
    if (!(s.v_max_mps > 0.0)) {
      throw ValidationError("segment " + std::to_string(s.id) + ": v_max_mps must be > 0");
    }
    if (!(s.capacity_per_lane_vph > 0.0)) {
      throw ValidationError("segment " + std::to_string(s.id) +
                            ": capacity_per_lane_vph must be > 0");
    }
  }
  succ_idx_.assign(segments_.size(), {});
  for (std::size_t i = 0; i < segments_.size(); ++i) {
    succ_idx_[i].reserve(segments_[i].successors.size());
    for (SegmentId next : segments_[i].successors) {
      auto it = seg_index_.find(next);
      if (it == seg_index_.end()) {
        throw ValidationError("segment " + std::to_string(segments_[i].id) +
                              ": successor " + std::to_string(next) + " does not exist");
      }
      succ_idx_[i].push_back(static_cast<std::uint32_t>(it->second));
    }
  }
  zone_index_.clear();
  zone_index_.reserve(zones_.size());
  for (std::size_t j = 0; j < zones_.size(); ++j) {
    const Zone& z = zones_[j];
    if (!zone_index_.emplace(z.id, j).second) {
      throw ValidationError("duplicate zone id " + std::to_string(z.id));
    }
    if (!seg_index_.count(z.entry_segment)) {
      throw ValidationError("zone " + std::to_string(z.id) + ": entry segment " +
                            std::to_string(z.entry_segment) + " does not exist");
    }
    if (!seg_index_.count(z.exit_segment)) {
      throw ValidationError("zone " + std::to_string(z.id) + ": exit segment " +
                            std::to_string(z.exit_segment) + " does not exist");
    }
  }
}

std::size_t Network::index_of_segment(SegmentId id) const {
  auto it = seg_index_.find(id);
  if (it == seg_index_.end()) {
    throw ValidationError("unknown segment id " + std::to_string(id));
  }
  return it->second;
}

std::size_t Network::index_of_zone(ZoneId id) const {
  auto it = zone_index_.find(id);
  if (it == zone_index_.end()) {
    throw ValidationError("unknown zone id " + std::to_string(id));
  }
  return it->second;
}

double Network::free_flow_time_s(std::span<const SegmentId> route) const {
  double t = 0.0;
  for (SegmentId id : route) {
    const Segment& s = segment(id);
    t += s.length_m / s.v_max_mps;
  }
  return t;
}

double Network::mean_capacity_per_lane_vph() const {
  if (segments_.empty()) return 0.0;
  double sum = 0.0;
  for (const Segment& s : segments_) sum += s.capacity_per_lane_vph;
  return sum / static_cast<double>(segments_.size());
}

void OdVector::validate(std::span<const double> upper_bound) const {
  if (demands_vph.size() != od_index.size()) {
    throw ValidationError("OD vector: demands and od_index lengths differ (" +
                          std::to_string(demands_vph.size()) + " vs " +
                          std::to_string(od_index.size()) + ")");
  }
  if (!upper_bound.empty() && upper_bound.size() != demands_vph.size()) {
    throw ValidationError("OD vector: bound vector length mismatch");
  }
  for (std::size_t z = 0; z < demands_vph.size(); ++z) {
    double x = demands_vph[z];
    if (!std::isfinite(x) || x < 0.0) {
      throw ValidationError("OD " + std::to_string(z) + ": demand must be finite and >= 0");
    }
    if (!upper_bound.empty() && x > upper_bound[z]) {
      throw ValidationError("OD " + std::to_string(z) + ": demand " + std::to_string(x) +
                            " exceeds upper bound " + std::to_string(upper_bound[z]));
    }
  }
}

OdVector OdVector::zeros_like(const OdVector& other) {
  OdVector x;
  x.demands_vph.assign(other.size(), 0.0);
  x.od_index = other.od_index;
  return x;
}

void PathSet::validate(const Network& net) const {
  if (segments_by_path.empty()) {
    throw ValidationError("path set is empty");
  }
  if (od_index.size() != segments_by_path.size()) {
    throw ValidationError("path set: od_index and path counts differ");
  }
  for (std::size_t p = 0; p < segments_by_path.size(); ++p) {
    const auto& route = segments_by_path[p];
    if (route.empty()) {
      throw ValidationError("path " + std::to_string(p) + " is empty");
    }
    for (std::size_t k = 0; k + 1 < route.size(); ++k) {
      const Segment& seg = net.segment(route[k]);
      if (std::find(seg.successors.begin(), seg.successors.end(), route[k + 1]) ==
          seg.successors.end()) {
        throw ValidationError("path " + std::to_string(p) + ": segment " +
                              std::to_string(route[k + 1]) + " does not follow " +
                              std::to_string(route[k]));
      }
    }
    net.index_of_zone(od_index[p].origin);
    net.index_of_zone(od_index[p].destination);
  }
  if (!gt_eta_s.empty()) {
    if (gt_eta_s.size() != segments_by_path.size()) {
      throw ValidationError("path set: gt_eta_s length mismatch");
    }
    for (std::size_t p = 0; p < gt_eta_s.size(); ++p) {
      if (!(gt_eta_s[p] > 0.0)) {
        throw ValidationError("path " + std::to_string(p) + ": gt_eta_s must be > 0");
      }
    }
  }
}

double PathSet::free_flow_time_s(const Network& net, std::size_t path) const {
  return net.free_flow_time_s(segments_by_path[path]);
}

AssignmentMatrix::AssignmentMatrix(std::size_t rows,
                                   std::vector<std::vector<std::uint32_t>> col_rows)
    : rows_(rows), col_rows_(std::move(col_rows)) {}

std::vector<double> AssignmentMatrix::apply(std::span<const double> x) const {
  std::vector<double> lambda(rows_, 0.0);
  for (std::size_t z = 0; z < col_rows_.size(); ++z) {
    double xz = x[z];
    if (xz == 0.0) continue;
    for (std::uint32_t row : col_rows_[z]) lambda[row] += xz;
  }
  return lambda;
}

std::vector<double> AssignmentMatrix::apply_transpose(std::span<const double> y) const {
  std::vector<double> g(col_rows_.size(), 0.0);
  for (std::size_t z = 0; z < col_rows_.size(); ++z) {
    double acc = 0.0;
    for (std::uint32_t row : col_rows_[z]) acc += y[row];
    g[z] = acc;
  }
  return g;
}

namespace {

json read_json_file(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw ParseError("cannot open " + file.string());
  }
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(file.string() + ": " + e.what());
  }
}

template <typename T>
T get_field(const json& obj, const char* key, const std::string& context) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseError(context + ": missing field '" + key + "'");
  }
  try {
    return it->get<T>();
  } catch (const json::exception& e) {
    throw ParseError(context + ": field '" + key + "': " + e.what());
  }
}

}  // namespace

Network load_network(const std::filesystem::path& file) {
  json j = read_json_file(file);
  if (!j.is_object() || !j.contains("segments") || !j.contains("zones")) {
    throw ParseError(file.string() + ": expected top-level keys 'segments' and 'zones'");
  }
  std::vector<Segment> segments;
  segments.reserve(j["segments"].size());
  for (const auto& js : j["segments"]) {
    Segment s;
    const std::string ctx = file.string() + " segment";
    s.id = get_field<SegmentId>(js, "id", ctx);
    s.length_m = get_field<double>(js, "length_m", ctx);
    s.lanes = get_field<int>(js, "lanes", ctx);
    s.v_max_mps = get_field<double>(js, "v_max_mps", ctx);
    s.capacity_per_lane_vph = get_field<double>(js, "capacity_per_lane_vph", ctx);
    s.successors = get_field<std::vector<SegmentId>>(js, "successors", ctx);
    segments.push_back(std::move(s));
  }
  std::vector<Zone> zones;
  zones.reserve(j["zones"].size());
  for (const auto& jz : j["zones"]) {
    Zone z;
    const std::string ctx = file.string() + " zone";
    z.id = get_field<ZoneId>(jz, "id", ctx);
    z.entry_segment = get_field<SegmentId>(jz, "entry_segment", ctx);
    z.exit_segment = get_field<SegmentId>(jz, "exit_segment", ctx);
    zones.push_back(z);
  }
  return Network(std::move(segments), std::move(zones));
}

void save_network(const Network& net, const std::filesystem::path& file) {
  json segments = json::array();
  for (const Segment& s : net.segments()) {
    segments.push_back({{"id", s.id},
                        {"length_m", s.length_m},
                        {"lanes", s.lanes},
                        {"v_max_mps", s.v_max_mps},
                        {"capacity_per_lane_vph", s.capacity_per_lane_vph},
                        {"successors", s.successors}});
  }
  json zones = json::array();
  for (const Zone& z : net.zones()) {
    zones.push_back(
        {{"id", z.id}, {"entry_segment", z.entry_segment}, {"exit_segment", z.exit_segment}});
  }
  std::ofstream out(file);
  if (!out) {
    throw ParseError("cannot write " + file.string());
  }
  out << json{{"segments", segments}, {"zones", zones}}.dump(1) << "\n";
}

PathSet load_paths(const std::filesystem::path& file, const Network& net) {
  json j = read_json_file(file);
  if (!j.is_array()) {
    throw ParseError(file.string() + ": expected a JSON array of paths");
  }
  PathSet paths;
  for (const auto& jp : j) {
    const std::string ctx = file.string() + " path";
    auto od = get_field<std::vector<ZoneId>>(jp, "od", ctx);
    if (od.size() != 2) {
      throw ParseError(ctx + ": 'od' must be [origin_zone, dest_zone]");
    }
    paths.od_index.push_back({od[0], od[1]});
    paths.segments_by_path.push_back(get_field<std::vector<SegmentId>>(jp, "segments", ctx));
  }
  paths.validate(net);
  return paths;
}

void save_paths(const PathSet& paths, const std::filesystem::path& file) {
  json j = json::array();
  for (std::size_t p = 0; p < paths.size(); ++p) {
    j.push_back({{"od", {paths.od_index[p].origin, paths.od_index[p].destination}},
                 {"segments", paths.segments_by_path[p]}});
  }
  std::ofstream out(file);
  if (!out) {
    throw ParseError("cannot write " + file.string());
  }
  out << j.dump(1) << "\n";
}

std::vector<double> free_flow_costs_to_goal(const Network& net, SegmentId goal) {
  const std::size_t n = net.num_segments();
  const std::size_t goal_idx = net.index_of_segment(goal);

  std::vector<std::vector<std::uint32_t>> pred(n);
  for (std::size_t u = 0; u < n; ++u) {
    for (std::uint32_t w : net.successor_indices()[u]) {
      pred[w].push_back(static_cast<std::uint32_t>(u));
    }
  }
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cost(n, inf);
  std::vector<double> self_cost(n);
  for (std::size_t u = 0; u < n; ++u) {
    const Segment& s = net.segments()[u];
    self_cost[u] = s.length_m / s.v_max_mps;
  }
  using Item = std::pair<double, std::uint32_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
  cost[goal_idx] = self_cost[goal_idx];
  heap.emplace(cost[goal_idx], static_cast<std::uint32_t>(goal_idx));
  while (!heap.empty()) {
    auto [d, u] = heap.top();
    heap.pop();
    if (d > cost[u]) continue;
    for (std::uint32_t w : pred[u]) {
      double cand = self_cost[w] + d;
      if (cand < cost[w]) {
        cost[w] = cand;
        heap.emplace(cand, w);
      }
    }
  }
  return cost;
}

std::vector<SegmentId> reconstruct_free_flow_route(const Network& net, SegmentId start,
                                                   SegmentId goal,
                                                   const std::vector<double>& costs_to_goal) {
  const std::size_t goal_idx = net.index_of_segment(goal);
  std::size_t u = net.index_of_segment(start);
  if (!std::isfinite(costs_to_goal[u])) {
    throw NoPathError("no route from segment " + std::to_string(start) + " to segment " +
                      std::to_string(goal));
  }
  // Walk forward, at each step taking the smallest-id successor that stays on
  // a shortest route. Float ties are resolved within a relative tolerance.
  std::vector<SegmentId> route;
  route.push_back(net.segments()[u].id);
  while (u != goal_idx) {
    const Segment& su = net.segments()[u];
    double remaining = costs_to_goal[u] - su.length_m / su.v_max_mps;
    double tol = 1e-9 * (1.0 + costs_to_goal[u]);
    std::uint32_t best = 0;
    bool found = false;
    SegmentId best_id = 0;
    for (std::uint32_t w : net.successor_indices()[u]) {
      if (costs_to_goal[w] > remaining + tol) continue;
      SegmentId wid = net.segments()[w].id;
      if (!found || wid < best_id) {
        best = w;
        best_id = wid;
        found = true;
      }
    }
    if (!found) {
      throw NoPathError("route reconstruction failed from segment " + std::to_string(start) +
                        " to segment " + std::to_string(goal));
    }
    u = best;
    route.push_back(net.segments()[u].id);
  }
  return route;
}

std::vector<SegmentId> shortest_free_flow_route(const Network& net, ZoneId origin,
                                                ZoneId destination) {
  SegmentId start = net.zones()[net.index_of_zone(origin)].entry_segment;
  SegmentId goal = net.zones()[net.index_of_zone(destination)].exit_segment;
  std::vector<double> cost = free_flow_costs_to_goal(net, goal);
  if (!std::isfinite(cost[net.index_of_segment(start)])) {
    throw NoPathError("no route from zone " + std::to_string(origin) + " to zone " +
                      std::to_string(destination));
  }
  return reconstruct_free_flow_route(net, start, goal, cost);
}

AssignmentMatrix build_assignment_matrix(const Network& net, const PathSet& paths) {
  std::vector<std::vector<std::uint32_t>> cols(paths.size());
  for (std::size_t z = 0; z < paths.size(); ++z) {
    cols[z].reserve(paths.segments_by_path[z].size());
    for (SegmentId id : paths.segments_by_path[z]) {
      cols[z].push_back(static_cast<std::uint32_t>(net.index_of_segment(id)));
    }
  }
  return AssignmentMatrix(net.num_segments(), std::move(cols));
}

OdVector random_feasible_od(const std::vector<OdPair>& od_index,
                            std::span<const double> upper, std::uint64_t seed) {
  rng::Engine eng = rng::make_engine(seed);
  OdVector x;
  x.od_index = od_index;
  x.demands_vph.resize(upper.size());
  for (std::size_t z = 0; z < upper.size(); ++z) {
    x.demands_vph[z] = rng::uniform(eng, 0.0, upper[z]);
  }
  return x;
}

}  // namespace odcal
