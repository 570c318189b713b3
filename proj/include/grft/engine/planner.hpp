#pragma once

#include <cstdint>
#include <memory>
#include <string>

#include "grft/diffusion/denoiser.hpp"
#include "grft/diffusion/schedule.hpp"
#include "grft/engine/env.hpp"

namespace grft {

struct PlanRequest {
  const ScenarioBundle& bundle;
  std::size_t frame;
  const EgoState& ego;
  std::uint64_t seed;  // per-step noise seed
};

/// Produces an ego-frame plan of kDefaultHorizon steps. Implementations are const and
/// thread-safe.
class Planner {
 public:
  virtual ~Planner() = default;
  virtual Trajectory plan(const PlanRequest& req) const = 0;
  virtual std::string name() const = 0;
};

/// Unguided eta = 0 DDIM sampling from a denoiser.
class DiffusionPlanner : public Planner {
 public:
  explicit DiffusionPlanner(std::shared_ptr<const Denoiser> den, ScheduleConfig sched = {});
  Trajectory plan(const PlanRequest& req) const override;
  std::string name() const override { return "diffusion"; }

 private:
  std::shared_ptr<const Denoiser> den_;
  NoiseSchedule sched_;
};

/// Replays the logged expert future relative to the current ego pose; holds the last pose
/// past the end of the log.
class ExpertPlanner : public Planner {
 public:
  Trajectory plan(const PlanRequest& req) const override;
  std::string name() const override { return "expert"; }
};

/// Straight ahead at the current speed.
class ConstantVelocityPlanner : public Planner {
 public:
  Trajectory plan(const PlanRequest& req) const override;
  std::string name() const override { return "constant_velocity"; }
};

/// Drives at the nearest obstacle at 12 m/s or more.
class AlwaysCollidePlanner : public Planner {
 public:
  Trajectory plan(const PlanRequest& req) const override;
  std::string name() const override { return "always_collide"; }
};

}  // namespace grft
