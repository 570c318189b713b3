#include "grft/app/config.hpp"

#include <fstream>

namespace grft {

NLOHMANN_JSON_SERIALIZE_ENUM(RewardType, {{RewardType::kSurvival, "survival"}, {RewardType::kTerminal, "terminal"}})
NLOHMANN_JSON_SERIALIZE_ENUM(TimestepSpacing, {{TimestepSpacing::kLinear, "linear"}, {TimestepSpacing::kQuadratic, "quadratic"}})
NLOHMANN_JSON_SERIALIZE_ENUM(LonTarget, {{LonTarget::kVerbatim, "verbatim"}, {LonTarget::kRelative, "relative"}})

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ScenarioSetConfig, kinds, per_kind, seed_base)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SyntheticConfig, lane_width, cone_gap_width, blocked_stop_probability)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(FeatureConfig, max_objects, object_radius, probe_range, probe_step)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DenoiserConfig, horizon, width, hidden_layers, time_dim, skip, basis_size)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DatasetConfig, frames_per_scenario, perturb_prob, lateral_noise,
                                                heading_noise, speed_noise, blend_time)
namespace nn {
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(AdamConfig, lr, beta1, beta2, eps, max_grad_norm)
}
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PretrainConfig, epochs, batch_size, adam, fit_scaler)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ScheduleConfig, steps, train_steps, beta_start, beta_end, spacing,
                                                eta_ddim, canonical_ddim_variance)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GuidanceConfig, lambda_lat, lambda_lon, guide_step, enable_lat,
                                                enable_lon, lon_target)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ComfortBounds, lon_accel_min, lon_accel_max, lat_accel_max, jerk_max,
                                                yaw_rate_max)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ScorerConfig, w1, w2, w3, w4, ttc_horizon, ttc_threshold, comfort,
                                                comfort_window, reward_horizon, speed_tolerance, wrong_direction_time,
                                                progress_eps, progress_exempt, ego_length, ego_width, reward_type)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(VehicleParams, wheelbase, accel_max, steer_max)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ExplorerConfig, ref_tokens, embed, hidden)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PpoConfig, gamma, gae_lambda, clip_eps, c_v, c_e, epochs, minibatch,
                                                normalize_advantages, adam)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(GrpoConfig, group_size, denoise_gamma, c_b, kl_coef, epochs,
                                                steps_per_epoch, adam)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(RftRunConfig, iterations, envs, steps_per_iter, end_frame,
                                                diversity_groups, checkpoint_every, train_explorer, train_denoiser, ppo,
                                                grpo)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(BenchConfig, workers, steps_per_worker)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(AblateConfig, iterations, seeds, lambda_lat, lambda_lon, group_sizes,
                                                reward_horizons)

namespace {

using nlohmann::json;

json lqr_json(const LqrConfig& c) {
  return {{"vehicle", c.vehicle},   {"q_lat", {c.q_lat(0, 0), c.q_lat(1, 1)}},
          {"r_lat", c.r_lat},       {"q_lon", c.q_lon},
          {"r_lon", c.r_lon},       {"lon_lookahead", c.lon_lookahead}};
}

LqrConfig lqr_from(const json& j) {
  LqrConfig c;
  c.vehicle = j.value("vehicle", c.vehicle);
  if (j.contains("q_lat")) {
    const auto q = j.at("q_lat").get<std::vector<double>>();
    if (q.size() != 2) throw ConfigError("lqr.q_lat: expected [q_offset, q_heading]");
    c.q_lat = Eigen::Vector2d(q[0], q[1]).asDiagonal();
  }
  c.r_lat = j.value("r_lat", c.r_lat);
  c.q_lon = j.value("q_lon", c.q_lon);
  c.r_lon = j.value("r_lon", c.r_lon);
  c.lon_lookahead = j.value("lon_lookahead", c.lon_lookahead);
  return c;
}

// Every key of `given` must exist in `schema` (the serialised defaults).
void check_keys(const json& given, const json& schema, const std::string& path) {
  if (!given.is_object() || !schema.is_object()) return;
  for (const auto& [k, v] : given.items()) {
    const std::string p = path.empty() ? k : path + "." + k;
    if (!schema.contains(k)) throw ConfigError("unknown config key: " + p);
    check_keys(v, schema.at(k), p);
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid config: " + what);
}

}  // namespace

void AppConfig::finalize() {
  denoiser.scene_dim = (1 + features.max_objects) * kTokenWidth;
  denoiser.navi_dim = kNaviDim;
  dataset.horizon = denoiser.horizon;
  dataset.features = features;
  explorer.scene_tokens = 1 + features.max_objects;
  explorer.token_width = kTokenWidth;
  explorer.navi_dim = kNaviDim;
  require(workers >= 1, "workers >= 1");
  require(denoiser.horizon == static_cast<int>(kDefaultHorizon), "denoiser.horizon must be 80");
  require(scorer.reward_horizon >= 1 && scorer.reward_horizon <= denoiser.horizon, "scorer.reward_horizon in [1, horizon]");
  require(eval_start_frame >= 0 && eval_start_frame < eval_end_frame &&
              eval_end_frame < static_cast<int>(kFrameCount),
          "eval frame window");
  require(rft.iterations >= 0 && rft.envs >= 1 && rft.steps_per_iter >= 1, "rft sizes");
  require(rft.end_frame > static_cast<int>(kCurrentFrame) &&
              rft.end_frame + scorer.reward_horizon <= static_cast<int>(kFrameCount) - 1,
          "rft.end_frame + scorer.reward_horizon must fit in the scenario");
  for (const auto* set : {&train_set, &eval_set}) {
    require(set->per_kind >= 0, "scenario set per_kind >= 0");
    for (const auto& k : set->kinds) require(parse_scenario_kind(k).has_value(), "unknown scenario kind " + k);
  }
  validate(rft.ppo);
  validate(rft.grpo);
}

EngineConfig AppConfig::eval_engine() const {
  EngineConfig e;
  e.scorer = scorer;
  e.lqr = lqr;
  e.start_frame = static_cast<std::size_t>(eval_start_frame);
  e.end_frame = static_cast<std::size_t>(eval_end_frame);
  return e;
}

RftConfig AppConfig::rft_config() const {
  RftConfig r;
  r.ppo = rft.ppo;
  r.ppo.envs = rft.envs;
  r.ppo.steps_per_iter = rft.steps_per_iter;
  r.grpo = rft.grpo;
  r.guidance = guidance;
  r.schedule = schedule;
  r.engine.scorer = scorer;
  r.engine.lqr = lqr;
  r.engine.start_frame = kCurrentFrame;
  r.engine.end_frame = static_cast<std::size_t>(rft.end_frame);
  r.iterations = rft.iterations;
  r.workers = workers;
  r.seed = seed;
  r.diversity_groups = rft.diversity_groups;
  r.train_explorer = rft.train_explorer;
  r.train_denoiser = rft.train_denoiser;
  return r;
}

nlohmann::json to_json(const AppConfig& c) {
  return {{"seed", c.seed},
          {"workers", c.workers},
          {"out_dir", c.out_dir},
          {"synthetic", c.synthetic},
          {"train_set", c.train_set},
          {"eval_set", c.eval_set},
          {"features", c.features},
          {"denoiser", c.denoiser},
          {"dataset", c.dataset},
          {"pretrain", c.pretrain},
          {"schedule", c.schedule},
          {"guidance", c.guidance},
          {"scorer", c.scorer},
          {"lqr", lqr_json(c.lqr)},
          {"eval", {{"start_frame", c.eval_start_frame}, {"end_frame", c.eval_end_frame}, {"seeds", c.eval_seeds}}},
          {"explorer", c.explorer},
          {"rft", c.rft},
          {"bench", c.bench},
          {"ablate", c.ablate}};
}

AppConfig config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  AppConfig c;
  check_keys(j, to_json(c), "");
  try {
    c.seed = j.value("seed", c.seed);
    c.workers = j.value("workers", c.workers);
    c.out_dir = j.value("out_dir", c.out_dir);
    c.synthetic = j.value("synthetic", c.synthetic);
    c.train_set = j.value("train_set", c.train_set);
    c.eval_set = j.value("eval_set", c.eval_set);
    c.features = j.value("features", c.features);
    c.denoiser = j.value("denoiser", c.denoiser);
    c.dataset = j.value("dataset", c.dataset);
    c.pretrain = j.value("pretrain", c.pretrain);
    c.schedule = j.value("schedule", c.schedule);
    c.guidance = j.value("guidance", c.guidance);
    c.scorer = j.value("scorer", c.scorer);
    if (j.contains("lqr")) c.lqr = lqr_from(j.at("lqr"));
    if (j.contains("eval")) {
      const auto& e = j.at("eval");
      c.eval_start_frame = e.value("start_frame", c.eval_start_frame);
      c.eval_end_frame = e.value("end_frame", c.eval_end_frame);
      c.eval_seeds = e.value("seeds", c.eval_seeds);
    }
    c.explorer = j.value("explorer", c.explorer);
    c.rft = j.value("rft", c.rft);
    c.bench = j.value("bench", c.bench);
    c.ablate = j.value("ablate", c.ablate);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

AppConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path.string());
  nlohmann::json j;
  try {
    f >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace grft
