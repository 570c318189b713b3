#include "grft/diffusion/features.hpp"

#include <algorithm>
#include <cmath>

namespace grft {

FeatureExtractor::FeatureExtractor(const Scenario& s, FeatureConfig cfg)
    : s_(&s), cfg_(cfg), route_(route_polyline(s)), drivable_(drivable_polygons(s)) {}

namespace {

struct Candidate {
  double dist;
  Vec2 pos, vel;
  double heading, length, width;
};

}  // namespace

SceneEmbedding FeatureExtractor::extract(std::size_t frame, const EgoState& ego) const {
  const Pose2 pose{ego.x, ego.y, ego.heading};
  const MapLane* lane = nearest_lane(*s_, ego.position());
  const double limit = lane ? lane->speed_limit : 15.0;

  SceneEmbedding out;
  out.scene = Eigen::VectorXd::Zero(scene_dim());
  out.scene.head<kTokenWidth>() << ego.speed / 10.0, ego.accel / 4.0, ego.steer / 0.6, limit / 20.0, 0, 0, 0, 0, 1;

  std::vector<Candidate> cands;
  for (const auto& a : s_->agents) {
    if (frame >= a.poses.size() || !a.poses[frame].valid) continue;
    const auto& p = a.poses[frame];
    const Vec2 c(p.x, p.y);
    const double d = (c - ego.position()).norm();
    if (d > cfg_.object_radius) continue;
    cands.push_back({d, c, p.speed * Vec2(std::cos(p.heading), std::sin(p.heading)), p.heading, a.length, a.width});
  }
  for (const auto& b : s_->statics) {
    const double d = (b.center - ego.position()).norm();
    if (d > cfg_.object_radius) continue;
    cands.push_back({d, b.center, Vec2::Zero(), b.heading, b.length, b.width});
  }
  const std::size_t keep = std::min<std::size_t>(cands.size(), static_cast<std::size_t>(cfg_.max_objects));
  std::partial_sort(cands.begin(), cands.begin() + static_cast<std::ptrdiff_t>(keep), cands.end(),
                    [](const Candidate& a, const Candidate& b) { return a.dist < b.dist; });
  for (std::size_t i = 0; i < keep; ++i) {
    const auto& c = cands[i];
    const Vec2 p = pose.to_local(c.pos);
    const Vec2 v = pose.rotate_to_local(c.vel);
    const double dh = wrap_angle(c.heading - ego.heading);
    out.scene.segment(static_cast<Eigen::Index>((i + 1) * kTokenWidth), kTokenWidth) << p.x() / 50.0,
        p.y() / 10.0, std::cos(dh), std::sin(dh), v.x() / 10.0, v.y() / 10.0, c.length / 5.0, c.width / 5.0, 1.0;
  }

  out.navi = Eigen::VectorXd::Zero(kNaviDim);
  const auto proj = route_.project(ego.position());
  const double route_heading = std::atan2(proj.tangent.y(), proj.tangent.x());
  out.navi[0] = proj.lateral / 4.0;
  out.navi[1] = wrap_angle(ego.heading - route_heading);
  const double previews[3] = {10.0, 30.0, 60.0};
  for (int k = 0; k < 3; ++k) {
    Vec2 tan;
    const Vec2 q = polyline_point_at(route_.line(), proj.arclength + previews[k], &tan);
    out.navi[2 + 2 * k] = wrap_angle(std::atan2(tan.y(), tan.x()) - ego.heading);
    out.navi[3 + 2 * k] = pose.to_local(q).y() / 8.0;
  }
  const Vec2 left(-std::sin(ego.heading), std::cos(ego.heading));
  for (int side = 0; side < 2; ++side) {
    const Vec2 dir = side == 0 ? left : Vec2(-left);
    double free = cfg_.probe_range;
    for (double d = cfg_.probe_step; d <= cfg_.probe_range + 1e-9; d += cfg_.probe_step) {
      if (!drivable_.contains(ego.position() + d * dir)) {
        free = d - cfg_.probe_step;
        break;
      }
    }
    out.navi[8 + side] = free / 8.0;
  }
  out.navi[10] = limit / 20.0;
  return out;
}

}  // namespace grft
