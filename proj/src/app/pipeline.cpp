#include "grft/app/pipeline.hpp"

#include <chrono>
#include <numeric>
#include <stdexcept>

#include "grft/scenario/codec.hpp"

namespace grft {

namespace {

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

std::vector<Scenario> generate_set(const ScenarioSetConfig& set, const SyntheticConfig& synth) {
  std::vector<Scenario> out;
  for (std::size_t k = 0; k < set.kinds.size(); ++k) {
    const auto kind = parse_scenario_kind(set.kinds[k]);
    if (!kind) throw std::invalid_argument("unknown scenario kind " + set.kinds[k]);
    for (int i = 0; i < set.per_kind; ++i) {
      out.push_back(generate_synthetic(set.seed_base + 500 * k + static_cast<std::uint64_t>(i), *kind, synth));
    }
  }
  return out;
}

std::vector<Scenario> load_or_generate(const std::optional<std::filesystem::path>& dir, const ScenarioSetConfig& set,
                                       const SyntheticConfig& synth) {
  if (!dir) return generate_set(set, synth);
  auto s = load_scenario_dir(*dir);
  if (s.empty()) throw std::runtime_error("no .nmx scenarios in " + dir->string());
  return s;
}

void tag_tiers(std::vector<Scenario>& scenarios, const EvalReport& report, std::size_t seeds_per_scenario) {
  if (report.episodes.size() != scenarios.size() * seeds_per_scenario) {
    throw std::invalid_argument("tag_tiers: report does not match the scenarios");
  }
  for (std::size_t i = 0; i < scenarios.size(); ++i) {
    const auto& e = report.episodes[i * seeds_per_scenario];
    scenarios[i].tier = e.done == DoneReason::kCollision ? DifficultyTier::kFail
                        : e.score < 90.0                ? DifficultyTier::kLt90
                                                        : DifficultyTier::kEasy;
  }
}

std::vector<Scenario> select_tier(const std::vector<Scenario>& tagged, const std::string& tier) {
  std::vector<Scenario> out;
  for (const auto& s : tagged) {
    if (s.tier == DifficultyTier::kUntagged) throw std::invalid_argument("select_tier: untagged scenario");
    const bool keep = tier == "all" || (tier == "fail" && s.tier == DifficultyTier::kFail) ||
                      (tier == "lt90" && s.tier != DifficultyTier::kEasy);
    if (tier != "all" && tier != "fail" && tier != "lt90") throw std::invalid_argument("unknown tier " + tier);
    if (keep) out.push_back(s);
  }
  return out;
}

std::vector<Scenario> calibration_scenarios(std::uint64_t seed) {
  std::vector<Scenario> out;
  for (std::uint64_t i = 0; i < 8; ++i) out.push_back(generate_synthetic(derive_seed(seed, 77, i), ScenarioKind::kStraight));
  return out;
}

PretrainResult run_pretrain(const AppConfig& cfg, const std::vector<Scenario>& scenarios,
                            const std::function<void(const PretrainLog&)>& on_epoch) {
  const auto t0 = std::chrono::steady_clock::now();
  Rng data_rng(derive_seed(cfg.seed, 10));
  const PretrainData data = build_dataset(scenarios, cfg.dataset, data_rng);
  Rng init_rng(derive_seed(cfg.seed, 11));
  PretrainResult r{Denoiser(cfg.denoiser, init_rng), {}, {}, 0.0};
  const NoiseSchedule sched(cfg.schedule);
  Rng train_rng(derive_seed(cfg.seed, 12));
  r.logs = pretrain(r.denoiser, sched, data, cfg.pretrain, train_rng, on_epoch);
  r.response = measure_guidance_response(r.denoiser, sched, calibration_scenarios(cfg.seed), cfg.guidance, cfg.features,
                                         derive_seed(cfg.seed, 13));
  r.seconds = seconds_since(t0);
  return r;
}

EvalReport evaluate_denoiser(const AppConfig& cfg, const Denoiser& den, const std::vector<BundlePtr>& bundles) {
  const DiffusionPlanner planner(std::make_shared<const Denoiser>(den), cfg.schedule);
  return evaluate(planner, bundles, cfg.eval_seeds, cfg.eval_engine(), cfg.workers);
}

RftRunResult run_rft(const AppConfig& cfg, const Denoiser& pretrained, const std::vector<Scenario>& train,
                     const std::vector<BundlePtr>& eval, const std::optional<Explorer>& explorer,
                     const RftRunHooks& hooks) {
  const auto t0 = std::chrono::steady_clock::now();
  RftRunResult r;
  if (!eval.empty()) r.before = evaluate_denoiser(cfg, pretrained, eval);
  Explorer ex;
  if (explorer) {
    ex = *explorer;
  } else {
    Rng rng(derive_seed(cfg.seed, 20));
    ex = Explorer(cfg.explorer, rng);
  }
  RftTrainer trainer(pretrained, ex, make_bundles(train, cfg.features), cfg.rft_config());
  for (int i = 0; i < cfg.rft.iterations; ++i) {
    r.metrics.push_back(trainer.iterate());
    if (hooks.on_iteration) hooks.on_iteration(r.metrics.back());
    if (hooks.on_checkpoint && cfg.rft.checkpoint_every > 0 && (i + 1) % cfg.rft.checkpoint_every == 0) {
      hooks.on_checkpoint(trainer);
    }
  }
  r.denoiser = trainer.denoiser();
  r.explorer = trainer.explorer();
  if (!eval.empty()) r.after = evaluate_denoiser(cfg, r.denoiser, eval);
  r.seconds = seconds_since(t0);
  return r;
}

double AblationRow::mean_score() const { return mean(score_after); }
double AblationRow::mean_collision() const { return mean(collision_after); }
double AblationRow::mean_reward() const { return mean(reward_after); }

nlohmann::json to_json(const AblationRow& r) {
  return {{"grid", r.grid},
          {"setting", r.setting},
          {"seeds", r.seeds},
          {"before", {{"score", r.score_before}, {"collision_rate", r.collision_before}, {"mean_reward", r.reward_before}}},
          {"after",
           {{"score", r.mean_score()},
            {"collision_rate", r.mean_collision()},
            {"mean_reward", r.mean_reward()},
            {"per_seed_score", r.score_after},
            {"per_seed_collision_rate", r.collision_after},
            {"per_seed_mean_reward", r.reward_after}}}};
}

std::vector<AblationRow> run_ablation(const AppConfig& cfg, const std::string& grid, const Denoiser& pretrained,
                                      const std::vector<Scenario>& train, const std::vector<BundlePtr>& eval,
                                      const std::function<void(const AblationRow&)>& on_row) {
  struct Setting {
    nlohmann::json label;
    std::function<void(AppConfig&)> apply;
    std::string tier;  // non-empty: fine-tune on this tier of `train`
  };
  std::vector<Setting> settings;
  if (grid == "lambda") {
    for (double lat : cfg.ablate.lambda_lat)
      for (double lon : cfg.ablate.lambda_lon)
        settings.push_back({{{"lambda_lat", lat}, {"lambda_lon", lon}}, [=](AppConfig& c) {
                              c.guidance.lambda_lat = lat;
                              c.guidance.lambda_lon = lon;
                            }, ""});
  } else if (grid == "reward") {
    for (auto type : {RewardType::kSurvival, RewardType::kTerminal})
      settings.push_back({{{"reward_type", type == RewardType::kSurvival ? "survival" : "terminal"}},
                          [=](AppConfig& c) { c.scorer.reward_type = type; }, ""});
  } else if (grid == "horizon") {
    for (int h : cfg.ablate.reward_horizons)
      settings.push_back({{{"reward_horizon", h}}, [=](AppConfig& c) {
                            c.scorer.reward_horizon = h;
                            c.rft.end_frame = std::min(c.rft.end_frame, static_cast<int>(kFrameCount) - 1 - h);
                          }, ""});
  } else if (grid == "group") {
    for (int g : cfg.ablate.group_sizes)
      settings.push_back({{{"group_size", g}}, [=](AppConfig& c) { c.rft.grpo.group_size = g; }, ""});
  } else if (grid == "tier") {
    for (const char* t : {"fail", "lt90", "all"}) settings.push_back({{{"tier", t}}, [](AppConfig&) {}, t});
  } else {
    throw std::invalid_argument("unknown ablation grid '" + grid + "' (lambda, reward, horizon, group, tier)");
  }

  std::vector<Scenario> tagged;
  if (grid == "tier") {
    tagged = train;
    const auto bundles = make_bundles(train, cfg.features);
    tag_tiers(tagged, evaluate_denoiser(cfg, pretrained, bundles), cfg.eval_seeds.size());
  }
  std::optional<EvalReport> baseline;
  if (!eval.empty()) baseline = evaluate_denoiser(cfg, pretrained, eval);

  std::vector<AblationRow> rows;
  for (const auto& s : settings) {
    AblationRow row;
    row.grid = grid;
    row.setting = s.label;
    row.seeds = cfg.ablate.seeds;
    if (baseline) {
      row.score_before = baseline->mean_score;
      row.collision_before = baseline->collision_rate;
      row.reward_before = baseline->mean_reward;
    }
    const std::vector<Scenario> set = s.tier.empty() ? train : select_tier(tagged, s.tier);
    for (std::uint64_t seed : cfg.ablate.seeds) {
      AppConfig c = cfg;
      c.seed = seed;
      c.rft.iterations = cfg.ablate.iterations;
      c.rft.checkpoint_every = 0;
      s.apply(c);
      c.finalize();
      if (set.empty()) {
        // Nothing to fine-tune on: the pretrained model is the result.
        row.score_after.push_back(row.score_before);
        row.collision_after.push_back(row.collision_before);
        row.reward_after.push_back(row.reward_before);
        continue;
      }
      const auto r = run_rft(c, pretrained, set, {});
      const EvalReport after = eval.empty() ? EvalReport{} : evaluate_denoiser(cfg, r.denoiser, eval);
      row.score_after.push_back(after.mean_score);
      row.collision_after.push_back(after.collision_rate);
      row.reward_after.push_back(after.mean_reward);
    }
    if (on_row) on_row(row);
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace grft
