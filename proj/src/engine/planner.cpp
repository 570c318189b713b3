#include "grft/engine/planner.hpp"

#include <cmath>

#include "grft/diffusion/pretrain.hpp"
#include "grft/diffusion/sampler.hpp"

namespace grft {

DiffusionPlanner::DiffusionPlanner(std::shared_ptr<const Denoiser> den, ScheduleConfig sched)
    : den_(std::move(den)), sched_(sched) {}

Trajectory DiffusionPlanner::plan(const PlanRequest& req) const {
  const nn::Mat cond = conditioning_row(req.bundle.features.extract(req.frame, req.ego));
  Rng rng(req.seed);
  return reference_plan(*den_, sched_, cond, rng);
}

Trajectory ExpertPlanner::plan(const PlanRequest& req) const {
  const Scenario& s = req.bundle.scenario;
  const Pose2 pose{req.ego.x, req.ego.y, req.ego.heading};
  Trajectory t;
  t.points.resize(kDefaultHorizon);
  for (std::size_t k = 0; k < kDefaultHorizon; ++k) {
    const std::size_t f = std::min(req.frame + 1 + k, s.frame_count() - 1);
    const EgoState& e = s.ego_log[f];
    const double v = req.frame + 1 + k < s.frame_count() ? e.speed : 0.0;
    const Vec2 p = pose.to_local(e.position());
    const Vec2 vel = pose.rotate_to_local(v * Vec2(std::cos(e.heading), std::sin(e.heading)));
    t[k] = {p.x(), p.y(), vel.x(), vel.y()};
  }
  return t;
}

Trajectory ConstantVelocityPlanner::plan(const PlanRequest& req) const {
  Trajectory t;
  t.points.resize(kDefaultHorizon);
  for (std::size_t k = 0; k < kDefaultHorizon; ++k) {
    t[k] = {req.ego.speed * kStepDt * static_cast<double>(k + 1), 0.0, req.ego.speed, 0.0};
  }
  return t;
}

Trajectory AlwaysCollidePlanner::plan(const PlanRequest& req) const {
  const auto obstacles = req.bundle.ctx.obstacles(req.frame);
  Vec2 target = req.ego.position() + 100.0 * Vec2(std::cos(req.ego.heading), std::sin(req.ego.heading));
  double best = 1e18;
  for (const auto& b : obstacles) {
    const double d = (b.center - req.ego.position()).squaredNorm();
    if (d < best) {
      best = d;
      target = b.center;
    }
  }
  const Pose2 pose{req.ego.x, req.ego.y, req.ego.heading};
  const Vec2 local = pose.to_local(target);
  const Vec2 dir = local.norm() > 1e-6 ? Vec2(local.normalized()) : Vec2::UnitX();
  const double v = std::max(12.0, req.ego.speed);
  Trajectory t;
  t.points.resize(kDefaultHorizon);
  for (std::size_t k = 0; k < kDefaultHorizon; ++k) {
    const Vec2 p = v * kStepDt * static_cast<double>(k + 1) * dir;
    t[k] = {p.x(), p.y(), v * dir.x(), v * dir.y()};
  }
  return t;
}

}  // namespace grft
