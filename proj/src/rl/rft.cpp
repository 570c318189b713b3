#include "grft/rl/rft.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "grft/core/geometry.hpp"
#include "grft/core/parallel.hpp"
#include "grft/diffusion/diversity.hpp"
#include "grft/diffusion/pretrain.hpp"
#include "grft/diffusion/sampler.hpp"

namespace grft {

struct RftTrainer::Rollout {
  std::vector<Transition> transitions;
  std::vector<TrajectoryGroup> groups;
  double bootstrap = 0.0;
  std::vector<double> episode_rewards;
  int collisions = 0;
  int offroads = 0;
  int faults = 0;
  std::vector<double> diversity;
};

RftTrainer::RftTrainer(const Denoiser& pretrained, const Explorer& explorer, std::vector<BundlePtr> bundles,
                       RftConfig cfg)
    : cfg_(std::move(cfg)),
      sched_(cfg_.schedule),
      policy_(std::make_shared<Denoiser>(pretrained)),
      reference_(std::make_shared<const Denoiser>(pretrained)),
      explorer_(explorer),
      bundles_(std::move(bundles)),
      update_rng_(derive_seed(cfg_.seed, 2)) {
  validate(cfg_.ppo);
  validate(cfg_.grpo);
  validate_guidance(cfg_.guidance);
  if (bundles_.empty()) throw std::invalid_argument("rft: empty scenario set");
  if (sched_.eta() <= 0.0) throw std::invalid_argument("rft: training chains need eta_ddim > 0");
  if (cfg_.engine.end_frame + static_cast<std::size_t>(cfg_.engine.scorer.reward_horizon) > kFrameCount) {
    throw std::invalid_argument("rft: episodes must end T_r frames before the end of the log");
  }
  const long batch = static_cast<long>(cfg_.ppo.envs) * cfg_.ppo.steps_per_iter;
  nn::AdamConfig pa = cfg_.ppo.adam;
  pa.total_steps = static_cast<long>(cfg_.iterations) * cfg_.ppo.epochs * ((batch + cfg_.ppo.minibatch - 1) / cfg_.ppo.minibatch);
  ppo_opt_ = nn::Adam(explorer_.params(), pa);
  nn::AdamConfig ga = cfg_.grpo.adam;
  ga.total_steps = static_cast<long>(cfg_.iterations) * cfg_.grpo.epochs * std::min<long>(cfg_.grpo.steps_per_epoch, batch);
  grpo_opt_ = nn::Adam(policy_->params(), ga);

  envs_.reserve(static_cast<std::size_t>(cfg_.ppo.envs));
  for (int i = 0; i < cfg_.ppo.envs; ++i) {
    envs_.push_back({EnvState{}, Rng(derive_seed(cfg_.seed, 1, static_cast<std::uint64_t>(i)))});
    reset_env(envs_.back());
  }
}

void RftTrainer::reset_env(EnvSlot& slot) const {
  const int pick = slot.rng.uniform_int(0, static_cast<int>(bundles_.size()) - 1);
  slot.state = env_reset(bundles_[static_cast<std::size_t>(pick)], cfg_.engine);
}

RftTrainer::Rollout RftTrainer::rollout(EnvSlot& slot) const {
  Rollout out;
  const int G = cfg_.grpo.group_size;
  const int div_per_env = (cfg_.diversity_groups + cfg_.ppo.envs - 1) / cfg_.ppo.envs;
  for (int step = 0; step < cfg_.ppo.steps_per_iter; ++step) {
    EnvState& env = slot.state;
    try {
      const auto& bundle = *env.bundle;
      const SceneEmbedding f = bundle.features.extract(env.frame, env.ego);
      const nn::Mat cond = conditioning_row(f);
      const Trajectory ref = reference_plan(*reference_, sched_, cond, slot.rng);
      const PolicyOutput po = explorer_.evaluate(f, ref);

      std::vector<GuidanceScales> scales(static_cast<std::size_t>(G));
      std::vector<double> log_probs(static_cast<std::size_t>(G));
      for (int k = 0; k < G; ++k) {
        const auto draw = sample_scales(po.beta, slot.rng);
        scales[static_cast<std::size_t>(k)] = draw.scales;
        log_probs[static_cast<std::size_t>(k)] = draw.log_prob;
      }
      TrajectoryGroup group = guided_sample_group(*policy_, sched_, cond, ref, scales, cfg_.guidance, slot.rng);

      const Pose2 pose{env.ego.x, env.ego.y, env.ego.heading};
      std::vector<Trajectory> world;
      for (const auto& plan : group.plans) {
        world.push_back(trajectory_to_world(plan, pose));
        group.rewards.push_back(score_trajectory(world.back(), bundle.ctx, env.frame, env.ego, cfg_.engine.scorer).value);
      }
      if (static_cast<int>(out.diversity.size()) < div_per_env) out.diversity.push_back(diversity_score(group.plans));

      const int pick = slot.rng.uniform_int(0, G - 1);
      const StepOutcome o = env_step(env, world[static_cast<std::size_t>(pick)], cfg_.engine);
      out.transitions.push_back({f.scene.transpose(), f.navi.transpose(), reference_tokens(ref, explorer_.config().ref_tokens),
                                 scales[static_cast<std::size_t>(pick)], log_probs[static_cast<std::size_t>(pick)],
                                 o.reward, po.value, env.is_done()});
      out.groups.push_back(std::move(group));
      if (env.is_done()) {
        out.episode_rewards.push_back(env.reward_sum);
        out.collisions += env.done == DoneReason::kCollision ? 1 : 0;
        out.offroads += env.done == DoneReason::kOffroad ? 1 : 0;
        reset_env(slot);
      }
    } catch (const std::exception&) {
      // A faulted env restarts; the interrupted episode is cut at its last recorded step.
      ++out.faults;
      if (!out.transitions.empty()) out.transitions.back().done = true;
      reset_env(slot);
    }
  }
  const EnvState& env = slot.state;
  const SceneEmbedding f = env.bundle->features.extract(env.frame, env.ego);
  const Trajectory ref = reference_plan(*reference_, sched_, conditioning_row(f), slot.rng);
  out.bootstrap = explorer_.evaluate(f, ref).value;
  return out;
}

IterationMetrics RftTrainer::iterate() {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<Rollout> parts(envs_.size());
  parallel_for(envs_.size(), cfg_.workers, [&](int, std::size_t i) { parts[i] = rollout(envs_[i]); });

  // Worker-major merge: env 0's steps, then env 1's, ...
  IterationMetrics m;
  m.iteration = iteration_;
  std::vector<Transition> batch;
  std::vector<TrajectoryGroup> groups;
  Eigen::VectorXd adv(0), targets(0);
  double ep_sum = 0.0, div_sum = 0.0;
  int div_n = 0;
  for (auto& p : parts) {
    const auto n = static_cast<Eigen::Index>(p.transitions.size());
    Eigen::VectorXd r(n), v(n);
    std::vector<bool> d(static_cast<std::size_t>(n));
    for (Eigen::Index t = 0; t < n; ++t) {
      const auto& tr = p.transitions[static_cast<std::size_t>(t)];
      r[t] = tr.reward;
      v[t] = tr.value;
      d[static_cast<std::size_t>(t)] = tr.done;
    }
    const auto gae = compute_gae(r, v, d, p.bootstrap, cfg_.ppo.gamma, cfg_.ppo.gae_lambda, false);
    adv.conservativeResize(adv.size() + n);
    targets.conservativeResize(targets.size() + n);
    adv.tail(n) = gae.advantages;
    targets.tail(n) = gae.targets;
    for (auto& tr : p.transitions) batch.push_back(std::move(tr));
    for (auto& g : p.groups) groups.push_back(std::move(g));
    for (double e : p.episode_rewards) ep_sum += e;
    m.episodes += static_cast<int>(p.episode_rewards.size());
    m.collision_rate += p.collisions;
    m.offroad_rate += p.offroads;
    m.faults += p.faults;
    for (double x : p.diversity) {
      div_sum += x;
      ++div_n;
    }
  }
  if (cfg_.ppo.normalize_advantages && adv.size() > 1) {
    const double mean = adv.mean();
    const double sd = std::sqrt((adv.array() - mean).square().mean());
    adv = ((adv.array() - mean) / (sd + 1e-8)).matrix();
  }

  env_steps_ += static_cast<long>(batch.size());
  m.env_steps = env_steps_;
  if (m.episodes > 0) {
    m.episode_reward_mean = ep_sum / m.episodes;
    m.collision_rate /= m.episodes;
    m.offroad_rate /= m.episodes;
  }
  if (!batch.empty()) {
    for (const auto& tr : batch) {
      m.step_reward_mean += tr.reward;
      m.eta_lat_mean += tr.scales.eta_lat;
      m.eta_lon_mean += tr.scales.eta_lon;
    }
    m.step_reward_mean /= static_cast<double>(batch.size());
    m.eta_lat_mean /= static_cast<double>(batch.size());
    m.eta_lon_mean /= static_cast<double>(batch.size());
  }
  double s1 = 0.0, s2 = 0.0, cnt = 0.0;
  for (const auto& g : groups) {
    for (double r : g.rewards) {
      s1 += r;
      s2 += r * r;
      cnt += 1.0;
    }
  }
  if (cnt > 0) {
    m.group_reward_mean = s1 / cnt;
    m.group_reward_std = std::sqrt(std::max(0.0, s2 / cnt - m.group_reward_mean * m.group_reward_mean));
  }
  if (div_n > 0) m.diversity = div_sum / div_n;

  // Single-writer update phase.
  if (cfg_.train_explorer && !batch.empty()) {
    m.ppo = ppo_update(explorer_, ppo_opt_, batch, adv, targets, cfg_.ppo, update_rng_);
  }
  if (cfg_.train_denoiser && !groups.empty()) {
    m.grpo = grpo_update(*policy_, *reference_, sched_, groups, cfg_.grpo, grpo_opt_, update_rng_);
  }
  ++iteration_;
  m.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return m;
}

nlohmann::json to_json(const IterationMetrics& m) {
  return {{"iteration", m.iteration},
          {"env_steps", m.env_steps},
          {"step_reward_mean", m.step_reward_mean},
          {"group_reward_mean", m.group_reward_mean},
          {"group_reward_std", m.group_reward_std},
          {"episodes", m.episodes},
          {"episode_reward_mean", m.episode_reward_mean},
          {"collision_rate", m.collision_rate},
          {"offroad_rate", m.offroad_rate},
          {"eta_lat_mean", m.eta_lat_mean},
          {"eta_lon_mean", m.eta_lon_mean},
          {"diversity", m.diversity},
          {"faults", m.faults},
          {"ppo",
           {{"policy_loss", m.ppo.policy_loss},
            {"value_loss", m.ppo.value_loss},
            {"entropy", m.ppo.entropy},
            {"clip_fraction", m.ppo.clip_fraction},
            {"approx_kl", m.ppo.approx_kl},
            {"grad_norm", m.ppo.grad_norm},
            {"dropped", m.ppo.dropped},
            {"updates", m.ppo.updates}}},
          {"grpo",
           {{"policy_loss", m.grpo.policy_loss},
            {"bc_loss", m.grpo.bc_loss},
            {"kl", m.grpo.kl},
            {"grad_norm", m.grpo.grad_norm},
            {"updates", m.grpo.updates}}},
          {"seconds", m.seconds}};
}

}  // namespace grft
