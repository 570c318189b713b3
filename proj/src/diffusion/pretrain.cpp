#include "grft/diffusion/pretrain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "grft/core/geometry.hpp"
#include "grft/diffusion/sampler.hpp"

namespace grft {

nn::Mat conditioning_row(const SceneEmbedding& e) {
  nn::Mat row(1, e.scene.size() + e.navi.size());
  row << e.scene.transpose(), e.navi.transpose();
  return row;
}

Trajectory expert_future(const Scenario& s, std::size_t frame, const EgoState& current, int horizon) {
  if (frame + static_cast<std::size_t>(horizon) >= s.frame_count()) {
    throw std::out_of_range("expert_future: horizon runs past the log");
  }
  const Pose2 pose{current.x, current.y, current.heading};
  Trajectory t;
  t.points.resize(static_cast<std::size_t>(horizon));
  for (int k = 0; k < horizon; ++k) {
    const EgoState& e = s.ego_log[frame + 1 + static_cast<std::size_t>(k)];
    const Vec2 p = pose.to_local(e.position());
    const Vec2 v = pose.rotate_to_local(e.speed * Vec2(std::cos(e.heading), std::sin(e.heading)));
    t[static_cast<std::size_t>(k)] = {p.x(), p.y(), v.x(), v.y()};
  }
  return t;
}

namespace {

double smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u);
}

double smoothstep_rate(double u) {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  return 30.0 * u * u * (1.0 - u) * (1.0 - u);
}

}  // namespace

PretrainData build_dataset(const std::vector<Scenario>& scenarios, const DatasetConfig& cfg, Rng& rng) {
  std::vector<nn::Mat> conds;
  std::vector<Eigen::RowVectorXd> targets;
  for (const auto& s : scenarios) {
    if (s.frame_count() <= static_cast<std::size_t>(cfg.horizon) + 1) continue;
    const FeatureExtractor fx(s, cfg.features);
    const int last = static_cast<int>(s.frame_count()) - 1 - cfg.horizon;
    for (int i = 0; i < cfg.frames_per_scenario; ++i) {
      const auto f = static_cast<std::size_t>(rng.uniform_int(0, last));
      const EgoState& e = s.ego_log[f];
      EgoState cur = e;
      double offset = 0.0;
      if (rng.bernoulli(cfg.perturb_prob)) {
        offset = cfg.lateral_noise * rng.normal();
        cur.x -= offset * std::sin(e.heading);
        cur.y += offset * std::cos(e.heading);
        cur.heading = wrap_angle(e.heading + cfg.heading_noise * rng.normal());
        cur.speed = std::max(0.0, e.speed * (1.0 + cfg.speed_noise * rng.normal()));
      }
      Trajectory world;
      world.points.resize(static_cast<std::size_t>(cfg.horizon));
      const Vec2 n(-std::sin(e.heading), std::cos(e.heading));
      for (int k = 0; k < cfg.horizon; ++k) {
        const EgoState& g = s.ego_log[f + 1 + static_cast<std::size_t>(k)];
        const double u = (k + 1) * s.dt / cfg.blend_time;
        const Vec2 p = g.position() + offset * (1.0 - smoothstep(u)) * n;
        const Vec2 v = g.speed * Vec2(std::cos(g.heading), std::sin(g.heading)) -
                       offset * smoothstep_rate(u) / cfg.blend_time * n;
        world[static_cast<std::size_t>(k)] = {p.x(), p.y(), v.x(), v.y()};
      }
      const Trajectory local = trajectory_to_local(world, Pose2{cur.x, cur.y, cur.heading});
      conds.push_back(conditioning_row(fx.extract(f, cur)));
      targets.push_back(flatten_trajectory(local));
    }
  }
  PretrainData d;
  if (conds.empty()) throw std::invalid_argument("build_dataset: no usable scenarios");
  d.cond.resize(static_cast<Eigen::Index>(conds.size()), conds[0].cols());
  d.target.resize(static_cast<Eigen::Index>(targets.size()), targets[0].size());
  for (std::size_t i = 0; i < conds.size(); ++i) {
    d.cond.row(static_cast<Eigen::Index>(i)) = conds[i];
    d.target.row(static_cast<Eigen::Index>(i)) = targets[i];
  }
  return d;
}

nn::Tape::Var pretrain_loss(nn::Tape& tape, Denoiser& den, const NoiseSchedule& sched, const nn::Mat& cond,
                            const nn::Mat& x0, Rng& rng) {
  const Eigen::Index B = x0.rows();
  std::vector<int> t(static_cast<std::size_t>(B));
  Eigen::VectorXd ab(B);
  nn::Mat xs(B, x0.cols());
  for (Eigen::Index r = 0; r < B; ++r) {
    const int s = rng.uniform_int(1, sched.steps());
    t[static_cast<std::size_t>(r)] = sched.timestep(s);
    ab[r] = sched.alpha_bar(s);
    for (Eigen::Index c = 0; c < x0.cols(); ++c) {
      xs(r, c) = std::sqrt(ab[r]) * x0(r, c) + std::sqrt(1.0 - ab[r]) * rng.normal();
    }
  }
  auto pred = den.forward(tape, tape.constant(xs), cond, t, ab);
  return tape.mean(tape.square(tape.sub(pred, tape.constant(x0))));
}

std::vector<PretrainLog> pretrain(Denoiser& den, const NoiseSchedule& sched, const PretrainData& data,
                                  const PretrainConfig& cfg, Rng& rng,
                                  const std::function<void(const PretrainLog&)>& on_epoch) {
  const Eigen::Index N = data.target.rows();
  const Eigen::Index B = std::min<Eigen::Index>(cfg.batch_size, N);
  const long batches = static_cast<long>((N + B - 1) / B);
  nn::AdamConfig acfg = cfg.adam;
  acfg.total_steps = batches * cfg.epochs;
  nn::Adam opt(den.params(), acfg);
  if (cfg.fit_scaler) den.set_scaler(TrajectoryScaler::fit(data.target));
  const TrajectoryScaler& scaler = den.scaler();
  const nn::Mat encoded =
      ((data.target.rowwise() - scaler.mean).array().rowwise() / scaler.scale.array()).matrix();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(N));
  std::iota(order.begin(), order.end(), 0);
  std::vector<PretrainLog> logs;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng.engine());
    double total = 0.0;
    for (Eigen::Index start = 0; start < N; start += B) {
      const Eigen::Index n = std::min(B, N - start);
      nn::Mat cond(n, data.cond.cols()), x0(n, data.target.cols());
      for (Eigen::Index i = 0; i < n; ++i) {
        cond.row(i) = data.cond.row(order[static_cast<std::size_t>(start + i)]);
        x0.row(i) = encoded.row(order[static_cast<std::size_t>(start + i)]);
      }
      nn::Tape tape;
      den.params().zero_grad();
      auto loss = pretrain_loss(tape, den, sched, cond, x0, rng);
      tape.backward(loss);
      opt.step(den.params());
      total += tape.scalar(loss) * static_cast<double>(n);
    }
    logs.push_back({epoch, total / static_cast<double>(N)});
    if (on_epoch) on_epoch(logs.back());
  }
  return logs;
}

double mean_lateral_offset(const Trajectory& plan, const Trajectory& reference) {
  const FrenetFrame frame = frenet_frame(reference);
  if (plan.size() != reference.size()) throw std::invalid_argument("mean_lateral_offset: length mismatch");
  double sum = 0.0;
  for (std::size_t k = 0; k < plan.size(); ++k) {
    sum += frame.normals[k].dot(plan[k].position() - reference[k].position());
  }
  return sum / static_cast<double>(plan.size());
}

GuidanceResponse measure_guidance_response(const Denoiser& den, const NoiseSchedule& sched,
                                           const std::vector<Scenario>& scenarios, const GuidanceConfig& gcfg,
                                           const FeatureConfig& fcfg, std::uint64_t seed) {
  GuidanceResponse out;
  if (scenarios.empty()) return out;
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const Scenario& s = scenarios[i];
    const FeatureExtractor fx(s, fcfg);
    const nn::Mat cond = conditioning_row(fx.extract(kCurrentFrame, s.ego_log[kCurrentFrame]));
    Rng ref_rng(derive_seed(seed, i, 0));
    GuidanceSpec g;
    g.reference = reference_plan(den, sched, cond, ref_rng);
    g.config = gcfg;
    g.scales = {{1.0, 0.0}, {-1.0, 0.0}};
    // Both rows start from the reference's initial noise so only guidance separates them.
    Rng init_rng(derive_seed(seed, i, 0));
    nn::Mat xS(1, den.config().traj_dim());
    for (Eigen::Index c = 0; c < xS.cols(); ++c) xS(0, c) = init_rng.normal();
    const nn::Mat x_init = xS.replicate(2, 1);
    const auto res = sample(den, sched, cond, 2, 0.0, init_rng, &g, &x_init);
    out.offset_pos += mean_lateral_offset(den.scaler().decode(res.x0().row(0)), g.reference);
    out.offset_neg += mean_lateral_offset(den.scaler().decode(res.x0().row(1)), g.reference);
  }
  out.offset_pos /= static_cast<double>(scenarios.size());
  out.offset_neg /= static_cast<double>(scenarios.size());
  out.calibration = (out.offset_pos - out.offset_neg) / (2.0 * gcfg.lambda_lat);
  return out;
}

}  // namespace grft
