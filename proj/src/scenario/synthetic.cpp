#include "grft/scenario/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "grft/core/rng.hpp"

namespace grft {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kWheelbase = 3.089;
constexpr double kSample = 1.0;  // reference-line vertex spacing [m]
constexpr double kEgoLength = 4.6;
constexpr double kPolygonMargin = 0.01;  // adjacent lane polygons overlap by this much

/// Densely sampled reference line with analytic per-vertex headings.
struct RefLine {
  Polyline pts;
  std::vector<double> heading;
  std::vector<double> s;

  void start(const Vec2& origin, double h) {
    pts = {origin};
    heading = {h};
    s = {0.0};
  }
  void straight(double length) {
    const int n = std::max(1, static_cast<int>(std::ceil(length / kSample)));
    const double step = length / n;
    const Vec2 o = pts.back();
    const double h = heading.back();
    const Vec2 d(std::cos(h), std::sin(h));
    const double s0 = s.back();
    for (int k = 1; k <= n; ++k) {
      pts.push_back(o + (k * step) * d);
      heading.push_back(h);
      s.push_back(s0 + k * step);
    }
  }
  /// Signed angle: positive turns left.
  void arc(double radius, double angle) {
    const double length = radius * std::abs(angle);
    const int n = std::max(2, static_cast<int>(std::ceil(length / kSample)));
    const Vec2 o = pts.back();
    const double h0 = heading.back();
    const double side = angle > 0 ? 1.0 : -1.0;
    const Vec2 center = o + side * radius * Vec2(-std::sin(h0), std::cos(h0));
    const double s0 = s.back();
    for (int k = 1; k <= n; ++k) {
      const double h = h0 + angle * k / n;
      pts.push_back(center - side * radius * Vec2(-std::sin(h), std::cos(h)));
      heading.push_back(h);
      s.push_back(s0 + length * k / n);
    }
  }
  double length() const { return s.back(); }

  /// Point, heading and left normal at arclength q (clamped).
  void eval(double q, Vec2& p, double& h) const {
    q = std::clamp(q, 0.0, length());
    auto it = std::upper_bound(s.begin(), s.end(), q);
    std::size_t i = it == s.begin() ? 0 : static_cast<std::size_t>(it - s.begin()) - 1;
    if (i + 1 >= pts.size()) i = pts.size() - 2;
    const double seg = s[i + 1] - s[i];
    const double u = seg > 0 ? (q - s[i]) / seg : 0.0;
    p = pts[i] + u * (pts[i + 1] - pts[i]);
    h = heading[i] + u * (heading[i + 1] - heading[i]);
  }

  Polyline offset(double d) const {
    Polyline out(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
      out[i] = pts[i] + d * Vec2(-std::sin(heading[i]), std::cos(heading[i]));
    }
    return out;
  }
};

MapLane make_lane(std::uint32_t id, const RefLine& ref, double offset, double width, double speed_limit,
                  bool reversed = false) {
  MapLane lane;
  lane.id = id;
  lane.speed_limit = speed_limit;
  lane.centerline = ref.offset(offset);
  Polyline left = ref.offset(offset + 0.5 * width + kPolygonMargin);
  Polyline right = ref.offset(offset - 0.5 * width - kPolygonMargin);
  lane.direction_hint.resize(ref.pts.size());
  for (std::size_t i = 0; i < ref.pts.size(); ++i) {
    lane.direction_hint[i] = Vec2(std::cos(ref.heading[i]), std::sin(ref.heading[i]));
  }
  if (reversed) {
    std::reverse(lane.centerline.begin(), lane.centerline.end());
    for (auto& d : lane.direction_hint) d = -d;
    std::reverse(lane.direction_hint.begin(), lane.direction_hint.end());
  }
  lane.polygon = left;
  lane.polygon.insert(lane.polygon.end(), right.rbegin(), right.rend());
  return lane;
}

double smoothstep5(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

double smoothstep5_deriv(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return 30.0 * u * u * (1.0 - u) * (1.0 - u);
}

/// Piecewise lateral offset: d0 before a, ramps to d1 over [a, b], holds, ramps back to d2 over [c, e].
struct OffsetProfile {
  double d0 = 0.0, d1 = 0.0, d2 = 0.0;
  double a = 1e9, b = 1e9 + 1, c = 1e9 + 2, e = 1e9 + 3;

  double value(double s) const {
    if (s < c) return d0 + (d1 - d0) * smoothstep5((s - a) / (b - a));
    return d1 + (d2 - d1) * smoothstep5((s - c) / (e - c));
  }
  double slope(double s) const {
    if (s < c) return (d1 - d0) * smoothstep5_deriv((s - a) / (b - a)) / (b - a);
    return (d2 - d1) * smoothstep5_deriv((s - c) / (e - c)) / (e - c);
  }
};

/// Integrates the expert along `ref` from the current frame, limited by v_limit(s) and the
/// acceleration bound; past frames assume the initial speed.
std::vector<EgoState> build_ego_log(const RefLine& ref, double lane_offset, double s_current, double v0,
                                    const OffsetProfile& offset, const std::function<double(double)>& v_limit,
                                    double accel_max = 1.2) {
  std::vector<double> s(kFrameCount), v(kFrameCount);
  s[kCurrentFrame] = s_current;
  v[kCurrentFrame] = v0;
  for (std::size_t i = kCurrentFrame; i + 1 < kFrameCount; ++i) {
    s[i + 1] = s[i] + v[i] * kStepDt;
    v[i + 1] = std::max(0.0, std::min(v[i] + accel_max * kStepDt, v_limit(s[i + 1])));
  }
  for (std::size_t i = kCurrentFrame; i-- > 0;) {
    v[i] = v0;
    s[i] = s[i + 1] - v0 * kStepDt;
  }

  std::vector<EgoState> log(kFrameCount);
  for (std::size_t i = 0; i < kFrameCount; ++i) {
    Vec2 p;
    double h;
    ref.eval(s[i], p, h);
    const double d = lane_offset + offset.value(s[i]);
    const Vec2 n(-std::sin(h), std::cos(h));
    const Vec2 q = p + d * n;
    log[i].x = q.x();
    log[i].y = q.y();
    log[i].heading = wrap_angle(h + std::atan(offset.slope(s[i])));
    log[i].speed = v[i];
  }
  for (std::size_t i = 0; i < kFrameCount; ++i) {
    const std::size_t j = std::min(i + 1, kFrameCount - 1);
    const std::size_t k = j == i ? i - 1 : i;
    log[i].accel = (v[j] - v[k]) / kStepDt;
    const double ds = std::max(v[k] * kStepDt, 1e-9);
    const double curvature = wrap_angle(log[j].heading - log[k].heading) / ds;
    log[i].steer = v[k] > 0.1 ? std::clamp(std::atan(kWheelbase * curvature), -0.6, 0.6) : 0.0;
  }
  return log;
}

AgentTrack constant_speed_agent(std::uint32_t id, const Polyline& lane, double s_current, double speed,
                                AgentKind kind, double length, double width) {
  AgentTrack a;
  a.id = id;
  a.kind = kind;
  a.length = length;
  a.width = width;
  a.poses.resize(kFrameCount);
  const double total = polyline_arclengths(lane).back();
  for (std::size_t i = 0; i < kFrameCount; ++i) {
    const double t = (static_cast<double>(i) - static_cast<double>(kCurrentFrame)) * kStepDt;
    const double q = s_current + speed * t;
    Vec2 tangent;
    const Vec2 p = polyline_point_at(lane, q, &tangent);
    a.poses[i] = {p.x(), p.y(), std::atan2(tangent.y(), tangent.x()), speed, q >= 0.0 && q <= total};
  }
  // Keep validity a contiguous window.
  return a;
}

bool collides_with_ego(const AgentTrack& a, const std::vector<EgoState>& ego, double margin) {
  for (std::size_t i = 0; i < ego.size(); ++i) {
    if (!a.poses[i].valid) continue;
    OrientedBox eb{ego[i].position(), ego[i].heading, kEgoLength + margin, 2.0 + margin};
    OrientedBox ab = a.box_at(i);
    ab.length += margin;
    ab.width += margin;
    if (boxes_overlap(eb, ab)) return true;
  }
  return false;
}

[[maybe_unused]] bool collides_with_ego(const OrientedBox& b, const std::vector<EgoState>& ego, double margin) {
  for (const auto& e : ego) {
    OrientedBox eb{e.position(), e.heading, kEgoLength + margin, 2.0 + margin};
    if (boxes_overlap(eb, b)) return true;
  }
  return false;
}

/// Adds up to `count` background vehicles on the given lanes, skipping any that would touch the expert.
void add_traffic(Scenario& sc, Rng& rng, const std::vector<const MapLane*>& lanes, int count, double s_ref,
                 double v_lo, double v_hi) {
  std::uint32_t next_id = static_cast<std::uint32_t>(sc.agents.size()) + 1;
  for (int k = 0; k < count && !lanes.empty(); ++k) {
    const MapLane* lane = lanes[static_cast<std::size_t>(rng.uniform_int(0, static_cast<int>(lanes.size()) - 1))];
    const double s0 = s_ref + rng.uniform(-30.0, 70.0);
    const double v = rng.uniform(v_lo, v_hi);
    const double len = rng.uniform(4.2, 5.2);
    AgentTrack a = constant_speed_agent(next_id, lane->centerline, s0, v, AgentKind::kVehicle, len, 1.9);
    if (collides_with_ego(a, sc.ego_log, 0.6)) continue;
    bool overlap = false;
    for (const auto& other : sc.agents) {
      for (std::size_t i = 0; i < kFrameCount && !overlap; i += 5) {
        if (other.poses[i].valid && a.poses[i].valid && boxes_overlap(other.box_at(i), a.box_at(i))) overlap = true;
      }
    }
    if (overlap) continue;
    sc.agents.push_back(std::move(a));
    ++next_id;
  }
}

struct Layout {
  RefLine ref;
  int n_lanes = 2;
  int ego_lane = 0;
  double width = 3.6;
  double speed_limit = 13.9;
  double s_current = 60.0;
};

void add_road_lanes(Scenario& sc, const Layout& L) {
  for (int k = 0; k < L.n_lanes; ++k) {
    sc.lanes.push_back(make_lane(static_cast<std::uint32_t>(k + 1), L.ref, k * L.width, L.width, L.speed_limit));
  }
  sc.route = {static_cast<std::uint32_t>(L.ego_lane + 1)};
}

Layout random_straight_layout(Rng& rng, const SyntheticConfig& cfg, double length) {
  Layout L;
  L.width = cfg.lane_width;
  L.n_lanes = rng.uniform_int(2, 3);
  L.ego_lane = rng.uniform_int(0, L.n_lanes - 1);
  L.speed_limit = std::array{11.1, 13.9, 16.7}[static_cast<std::size_t>(rng.uniform_int(0, 2))];
  const double heading = rng.uniform(-kPi, kPi);
  const Vec2 origin(rng.uniform(-500.0, 500.0), rng.uniform(-500.0, 500.0));
  L.ref.start(origin, heading);
  L.ref.straight(length);
  return L;
}

std::vector<const MapLane*> other_lanes(const Scenario& sc, std::uint32_t ego_lane_id) {
  std::vector<const MapLane*> out;
  for (const auto& lane : sc.lanes) {
    if (lane.id != ego_lane_id) out.push_back(&lane);
  }
  return out;
}

Scenario make_straight(Rng& rng, const SyntheticConfig& cfg) {
  Scenario sc;
  Layout L = random_straight_layout(rng, cfg, 360.0);
  add_road_lanes(sc, L);
  const double v0 = rng.uniform(0.7, 1.0) * L.speed_limit;
  sc.ego_log = build_ego_log(L.ref, L.ego_lane * L.width, L.s_current, v0, OffsetProfile{},
                             [v0](double) { return v0; });
  auto others = other_lanes(sc, sc.route.front());
  add_traffic(sc, rng, others, rng.uniform_int(0, 4), L.s_current, 0.6 * L.speed_limit, L.speed_limit);
  // Leading vehicle in the ego lane, never slower than the expert.
  if (rng.bernoulli(0.5)) {
    const MapLane* lane = sc.find_lane(sc.route.front());
    const double gap = rng.uniform(20.0, 50.0);
    AgentTrack lead = constant_speed_agent(static_cast<std::uint32_t>(sc.agents.size() + 1), lane->centerline,
                                           L.s_current + gap, v0 + rng.uniform(0.0, 2.0), AgentKind::kVehicle,
                                           4.6, 1.9);
    if (!collides_with_ego(lead, sc.ego_log, 0.6)) sc.agents.push_back(std::move(lead));
  }
  // Occasional pedestrian standing beside the road.
  if (rng.bernoulli(0.3)) {
    const double side = L.n_lanes * L.width - 0.5 * L.width + 2.0;
    Polyline walk = L.ref.offset(side);
    AgentTrack ped = constant_speed_agent(static_cast<std::uint32_t>(sc.agents.size() + 1), walk,
                                          L.s_current + rng.uniform(10.0, 80.0), rng.uniform(0.0, 1.5),
                                          AgentKind::kPedestrian, 0.6, 0.6);
    sc.agents.push_back(std::move(ped));
  }
  return sc;
}

Scenario make_curve(Rng& rng, const SyntheticConfig& cfg) {
  Scenario sc;
  Layout L;
  L.width = cfg.lane_width;
  L.n_lanes = 2;
  L.ego_lane = rng.uniform_int(0, 1);
  L.speed_limit = 13.9;
  const double heading = rng.uniform(-kPi, kPi);
  L.ref.start(Vec2(rng.uniform(-500.0, 500.0), rng.uniform(-500.0, 500.0)), heading);
  const double radius = rng.uniform(60.0, 150.0);
  const double angle = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.6, 1.6);
  const double lead_in = rng.uniform(70.0, 100.0);
  L.ref.straight(lead_in);
  L.ref.arc(radius, angle);
  L.ref.straight(200.0);
  add_road_lanes(sc, L);
  // Lateral acceleration of about 1.6 m/s^2 at the tightest lane.
  const double r_lane = radius - (angle > 0 ? 1.0 : -1.0) * L.ego_lane * L.width;
  const double v_turn = std::min(L.speed_limit, std::sqrt(1.6 * r_lane));
  const double v0 = std::min(L.speed_limit, v_turn + rng.uniform(0.0, 3.0));
  const double s_arc = lead_in;
  const double s_exit = lead_in + radius * std::abs(angle);
  auto limit = [=](double s) {
    if (s < s_arc) return std::sqrt(v_turn * v_turn + 2.0 * 1.0 * (s_arc - s));
    if (s <= s_exit) return v_turn;
    return L.speed_limit;
  };
  sc.ego_log = build_ego_log(L.ref, L.ego_lane * L.width, L.s_current, v0, OffsetProfile{}, limit, 1.0);
  auto others = other_lanes(sc, sc.route.front());
  add_traffic(sc, rng, others, rng.uniform_int(0, 3), L.s_current, 5.0, v_turn);
  return sc;
}

Scenario make_intersection(Rng& rng, const SyntheticConfig& cfg) {
  Scenario sc;
  const double w = cfg.lane_width;
  const double heading = rng.uniform(-kPi, kPi);
  const Vec2 origin(rng.uniform(-500.0, 500.0), rng.uniform(-500.0, 500.0));
  const Pose2 frame{origin.x(), origin.y(), heading};
  const int turn = rng.uniform_int(-1, 1);  // -1 right, 0 straight, +1 left
  const double radius = rng.uniform(13.0, 20.0);
  const double approach = 100.0;
  const double speed_limit = 13.9;

  auto to_world_ref = [&](const Vec2& local, double local_heading, auto&& build) {
    RefLine r;
    r.start(frame.to_world(local), wrap_angle(heading + local_heading));
    build(r);
    return r;
  };

  // Approach road along local +x ending at x = 0, plus the continuation beyond the junction.
  const RefLine approach_ref = to_world_ref(Vec2(-approach, 0.0), 0.0, [&](RefLine& r) { r.straight(approach); });
  const double span = 2.0 * radius + 2.0 * w;
  const RefLine through_ref = to_world_ref(Vec2(0.0, 0.0), 0.0, [&](RefLine& r) { r.straight(span + 250.0); });
  RefLine connector;
  RefLine exit_ref;
  if (turn == 0) {
    connector = to_world_ref(Vec2(0.0, 0.0), 0.0, [&](RefLine& r) { r.straight(span); });
    exit_ref = to_world_ref(Vec2(span, 0.0), 0.0, [&](RefLine& r) { r.straight(250.0); });
  } else {
    const double side = static_cast<double>(turn);
    connector = to_world_ref(Vec2(0.0, 0.0), 0.0, [&](RefLine& r) { r.arc(radius, side * kPi / 2.0); });
    exit_ref = to_world_ref(Vec2(radius, side * radius), side * kPi / 2.0, [&](RefLine& r) { r.straight(250.0); });
  }
  // Crossing road through x = radius. Its first lane runs in the exit direction of a turn (or +y when
  // going straight) so the exit lane never overlaps an opposing lane.
  const double cross_dir = turn < 0 ? -1.0 : 1.0;
  const RefLine cross_ref = to_world_ref(Vec2(radius, -cross_dir * 160.0), cross_dir * kPi / 2.0,
                                         [&](RefLine& r) { r.straight(320.0); });

  sc.lanes.push_back(make_lane(1, approach_ref, 0.0, w, speed_limit));
  sc.lanes.push_back(make_lane(2, connector, 0.0, w, speed_limit));
  sc.lanes.push_back(make_lane(3, exit_ref, 0.0, w, speed_limit));
  sc.lanes.push_back(make_lane(4, approach_ref, w, w, speed_limit, /*reversed=*/true));
  sc.lanes.push_back(make_lane(5, cross_ref, 0.0, w, speed_limit));
  sc.lanes.push_back(make_lane(6, cross_ref, w, w, speed_limit, /*reversed=*/true));
  if (turn != 0) sc.lanes.push_back(make_lane(7, through_ref, 0.0, w, speed_limit));
  sc.route = {1, 2, 3};

  // Expert path as one reference line: approach + connector + exit.
  RefLine path = approach_ref;
  if (turn == 0) {
    path.straight(span + 250.0);
  } else {
    path.arc(radius, static_cast<double>(turn) * kPi / 2.0);
    path.straight(250.0);
  }
  const double v0 = rng.uniform(8.0, 11.0);
  const double v_turn = turn == 0 ? v0 : std::sqrt(1.8 * radius);
  const double s_arc = approach;
  const double s_exit = approach + (turn == 0 ? span : radius * kPi / 2.0);
  const double s_current = approach - rng.uniform(35.0, 60.0);
  auto limit = [=](double s) {
    if (s < s_arc) return std::sqrt(v_turn * v_turn + 2.0 * 1.2 * (s_arc - s));
    if (s <= s_exit) return v_turn;
    return speed_limit;
  };
  sc.ego_log = build_ego_log(path, 0.0, s_current, v0, OffsetProfile{}, limit, 1.0);

  std::vector<const MapLane*> traffic_lanes = {sc.find_lane(4), sc.find_lane(6)};
  add_traffic(sc, rng, traffic_lanes, rng.uniform_int(1, 3), 0.0, 6.0, 11.0);
  return sc;
}

Scenario make_blocked_lane(Rng& rng, const SyntheticConfig& cfg) {
  Scenario sc;
  Layout L = random_straight_layout(rng, cfg, 360.0);
  add_road_lanes(sc, L);
  const MapLane* ego_lane = sc.find_lane(sc.route.front());
  const double v0 = rng.uniform(7.0, std::min(12.0, L.speed_limit));
  const double gap = rng.uniform(28.0, 55.0);  // current ego center to obstacle center
  const double s_obs = L.s_current + gap;

  AgentTrack blocker = constant_speed_agent(1, ego_lane->centerline, s_obs, 0.0, AgentKind::kVehicle,
                                            rng.uniform(4.4, 5.0), 1.95);
  sc.agents.push_back(blocker);

  OffsetProfile offset;
  std::function<double(double)> limit = [v0](double) { return v0; };
  const bool stop = rng.bernoulli(cfg.blocked_stop_probability);
  if (stop) {
    const double s_stop = s_obs - 0.5 * blocker.length - 0.5 * kEgoLength - rng.uniform(7.0, 10.0);
    limit = [=](double s) { return std::sqrt(2.0 * 1.5 * std::max(0.0, s_stop - s)); };
  } else {
    // Change to a neighbouring lane, then optionally return after passing.
    int target = L.ego_lane + (rng.bernoulli(0.5) ? 1 : -1);
    if (target < 0) target = 1;
    if (target >= L.n_lanes) target = L.n_lanes - 2;
    const double shift = (target - L.ego_lane) * L.width;
    const double change_len = std::max(22.0, 2.6 * v0);
    const double end = s_obs - 0.5 * blocker.length - 0.5 * kEgoLength - rng.uniform(5.0, 9.0);
    offset.d0 = 0.0;
    offset.d1 = shift;
    offset.d2 = rng.bernoulli(0.5) ? 0.0 : shift;
    offset.a = std::max(L.s_current + 2.0, end - change_len);
    offset.b = std::max(offset.a + 12.0, end);
    offset.c = s_obs + 0.5 * blocker.length + 8.0;
    offset.e = offset.c + change_len;
  }
  sc.ego_log = build_ego_log(L.ref, L.ego_lane * L.width, L.s_current, v0, offset, limit, 1.0);
  std::vector<const MapLane*> others = other_lanes(sc, sc.route.front());
  add_traffic(sc, rng, others, rng.uniform_int(0, 3), L.s_current, 0.5 * L.speed_limit, L.speed_limit);
  return sc;
}

Scenario make_cone_gap(Rng& rng, const SyntheticConfig& cfg) {
  Scenario sc;
  Layout L = random_straight_layout(rng, cfg, 360.0);
  L.n_lanes = 2;
  L.ego_lane = rng.uniform_int(0, 1);
  add_road_lanes(sc, L);
  const double v0 = rng.uniform(6.0, 10.0);
  const double s_cone = L.s_current + rng.uniform(30.0, 50.0);
  const double road_lo = -0.5 * L.width;
  const double road_hi = (L.n_lanes - 0.5) * L.width;
  const double gap = cfg.cone_gap_width;
  const double cone = 0.5;
  // Gap centre relative to the reference line, kept inside the road with room for a cone each side.
  const double ego_center = L.ego_lane * L.width;
  double center = ego_center + rng.uniform(-1.6, 1.6);
  center = std::clamp(center, road_lo + 0.5 * gap + 0.4, road_hi - 0.5 * gap - 0.4);

  for (int row = 0; row < 3; ++row) {
    const double s_row = s_cone + 4.0 * row;
    Vec2 p;
    double h;
    L.ref.eval(s_row, p, h);
    const Vec2 n(-std::sin(h), std::cos(h));
    // Cones from each gap edge out to the road boundary.
    for (double d = center + 0.5 * gap + 0.5 * cone; d < road_hi + 0.3; d += 0.8) {
      sc.statics.push_back({p + d * n, h, cone, cone});
    }
    for (double d = center - 0.5 * gap - 0.5 * cone; d > road_lo - 0.3; d -= 0.8) {
      sc.statics.push_back({p + d * n, h, cone, cone});
    }
  }
  OffsetProfile offset;
  offset.d0 = 0.0;
  offset.d1 = center - ego_center;
  offset.d2 = rng.bernoulli(0.5) ? 0.0 : offset.d1;
  const double approach = std::max(18.0, 2.5 * v0);
  offset.a = std::max(L.s_current + 2.0, s_cone - approach - 4.0);
  offset.b = s_cone - 4.0;
  offset.c = s_cone + 8.0 + 0.5 * kEgoLength + 2.0;
  offset.e = offset.c + approach;
  sc.ego_log = build_ego_log(L.ref, ego_center, L.s_current, v0, offset, [v0](double) { return v0; }, 1.0);
  return sc;
}

}  // namespace

Scenario generate_synthetic(std::uint64_t seed, ScenarioKind kind, const SyntheticConfig& cfg) {
  Rng rng(derive_seed(seed, static_cast<std::uint64_t>(kind) + 1));
  Scenario sc;
  switch (kind) {
    case ScenarioKind::kStraight: sc = make_straight(rng, cfg); break;
    case ScenarioKind::kCurve: sc = make_curve(rng, cfg); break;
    case ScenarioKind::kIntersection: sc = make_intersection(rng, cfg); break;
    case ScenarioKind::kBlockedLane: sc = make_blocked_lane(rng, cfg); break;
    case ScenarioKind::kConeGap: sc = make_cone_gap(rng, cfg); break;
  }
  sc.kind = kind;
  sc.seed = seed;
  return sc;
}

}  // namespace grft
