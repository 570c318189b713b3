#include "grft/app/cli.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "grft/app/config.hpp"
#include "grft/app/pipeline.hpp"

namespace grft {
namespace {

namespace fs = std::filesystem;

struct CliResult {
  int code;
  std::string out, err;
};

CliResult cli(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("grft_cli_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

nlohmann::json read_json(const fs::path& p) {
  std::ifstream f(p);
  return nlohmann::json::parse(f);
}

std::vector<nlohmann::json> read_jsonl(const fs::path& p) {
  std::ifstream f(p);
  std::vector<nlohmann::json> rows;
  std::string line;
  while (std::getline(f, line))
    if (!line.empty()) rows.push_back(nlohmann::json::parse(line));
  return rows;
}

// Small and fast: one scenario per kind, tiny networks, short runs.
fs::path tiny_config(const fs::path& dir) {
  nlohmann::json j = {
      {"eval_set", {{"kinds", {"blocked_lane"}}, {"per_kind", 1}, {"seed_base", 9000}}},
      {"train_set", {{"kinds", {"straight"}}, {"per_kind", 2}, {"seed_base", 0}}},
      {"denoiser", {{"width", 16}, {"hidden_layers", 1}}},
      {"dataset", {{"frames_per_scenario", 4}}},
      {"pretrain", {{"epochs", 1}, {"batch_size", 8}}},
      {"explorer", {{"embed", 8}, {"hidden", 8}}},
      {"rft", {{"envs", 1}, {"steps_per_iter", 2}, {"iterations", 1}, {"grpo", {{"group_size", 2}}}}},
      {"eval", {{"end_frame", 40}}},
      {"ablate", {{"iterations", 1}, {"seeds", {0}}}}};
  const fs::path p = dir / "tiny.json";
  std::ofstream(p) << j.dump(2);
  return p;
}

TEST(Config, DefaultsRoundTrip) {
  AppConfig c;
  c.finalize();
  const auto j = to_json(c);
  AppConfig back = config_from_json(j);
  back.finalize();
  EXPECT_EQ(to_json(back), j);
  EXPECT_EQ(c.denoiser.scene_dim, 81);
  EXPECT_EQ(c.explorer.scene_tokens, 9);
}

TEST(Config, OverridesAndUnknownKeys) {
  const auto c = config_from_json({{"guidance", {{"lambda_lat", 5.0}}}, {"scorer", {{"reward_type", "terminal"}}}});
  EXPECT_EQ(c.guidance.lambda_lat, 5.0);
  EXPECT_EQ(c.guidance.lambda_lon, 0.25);
  EXPECT_EQ(c.scorer.reward_type, RewardType::kTerminal);
  EXPECT_THROW(config_from_json({{"guidance", {{"lambda", 1.0}}}}), ConfigError);
  EXPECT_THROW(config_from_json({{"bogus", 1}}), ConfigError);
  EXPECT_THROW(config_from_json({{"seed", "x"}}), ConfigError);
  AppConfig bad;
  bad.rft.end_frame = 150;
  EXPECT_THROW(bad.finalize(), ConfigError);
}

TEST(Cli, HelpAndUsageErrors) {
  auto r = cli({"--help"});
  EXPECT_EQ(r.code, kExitOk);
  EXPECT_NE(r.out.find("Usage"), std::string::npos);
  EXPECT_NE(r.out.find("ablate"), std::string::npos);
  EXPECT_EQ(cli({}).code, kExitUsage);
  EXPECT_EQ(cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(cli({"eval", "--no-such-flag"}).code, kExitUsage);
  EXPECT_EQ(cli({"ablate", "--grid", "nope"}).code, kExitUsage);
}

TEST(Cli, RftWithoutCheckpointIsRuntimeError) {
  const auto dir = temp_dir("rft_missing");
  auto r = cli({"rft", "--out-dir", dir.string()});
  EXPECT_EQ(r.code, kExitRuntime);
  EXPECT_NE(r.err.find("--checkpoint"), std::string::npos);
  r = cli({"rft", "--out-dir", dir.string(), "--checkpoint", (dir / "missing.bin").string()});
  EXPECT_EQ(r.code, kExitRuntime);
}

TEST(Cli, UnknownConfigKeyIsUsageError) {
  const auto dir = temp_dir("bad_config");
  std::ofstream(dir / "c.json") << R"({"rft": {"bogus": 1}})";
  const auto r = cli({"--config", (dir / "c.json").string(), "eval", "--planner", "expert"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_NE(r.err.find("rft.bogus"), std::string::npos);
}

TEST(Cli, GenerateEvaluateManifest) {
  const auto dir = temp_dir("gen_eval");
  auto r = cli({"gen-scenarios", "--out-dir", (dir / "g").string(), "--kinds", "straight,cone_gap", "--per-kind", "2",
                "--seed", "7"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  int files = 0;
  for (const auto& e : fs::directory_iterator(dir / "g" / "scenarios")) files += e.path().extension() == ".nmx";
  EXPECT_EQ(files, 4);
  const auto m = read_json(dir / "g" / "manifest.json");
  EXPECT_EQ(m.at("seed"), 7);
  EXPECT_TRUE(m.contains("code_version"));
  EXPECT_EQ(m.at("config").at("train_set").at("per_kind"), 2);

  r = cli({"eval", "--planner", "expert", "--scenarios", (dir / "g" / "scenarios").string(), "--out-dir",
           (dir / "e").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rep = read_json(dir / "e" / "report.json");
  EXPECT_EQ(rep.at("episodes").size(), 4u);
  EXPECT_GE(rep.at("summary").at("mean_score").get<double>(), 95.0);
}

TEST(Cli, PretrainRftAblateRender) {
  const auto dir = temp_dir("pipeline");
  const auto cfg = tiny_config(dir).string();
  auto r = cli({"--config", cfg, "pretrain", "--out-dir", (dir / "p").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto ckpt = (dir / "p" / "denoiser.bin").string();
  ASSERT_TRUE(fs::exists(ckpt));
  EXPECT_TRUE(read_json(dir / "p" / "pretrain_summary.json").at("guidance_response").contains("calibration"));

  r = cli({"--config", cfg, "rft", "--checkpoint", ckpt, "--out-dir", (dir / "r").string(), "--iterations", "2"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto metrics = read_jsonl(dir / "r" / "metrics.jsonl");
  ASSERT_EQ(metrics.size(), 2u);
  for (const char* key : {"iteration", "env_steps", "group_reward_mean", "group_reward_std", "ppo", "grpo", "diversity",
                          "collision_rate", "offroad_rate"})
    EXPECT_TRUE(metrics[0].contains(key)) << key;
  EXPECT_TRUE(fs::exists(dir / "r" / "denoiser_rft.bin"));
  EXPECT_TRUE(read_json(dir / "r" / "rft_summary.json").contains("after"));

  r = cli({"--config", cfg, "ablate", "--grid", "lambda", "--checkpoint", ckpt, "--out-dir", (dir / "a").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  const auto rows = read_jsonl(dir / "a" / "ablate_lambda.jsonl");
  ASSERT_EQ(rows.size(), 9u);
  EXPECT_EQ(rows[0].at("setting").at("lambda_lat"), 1.0);
  EXPECT_EQ(rows[8].at("setting").at("lambda_lon"), 0.5);

  r = cli({"--config", cfg, "render", "--checkpoint", ckpt, "--group", "8", "--output", (dir / "f.svg").string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::ifstream f(dir / "f.svg");
  const std::string svg((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  std::size_t count = 0;
  for (std::size_t p = svg.find("class=\"group\""); p != std::string::npos; p = svg.find("class=\"group\"", p + 1)) ++count;
  EXPECT_EQ(count, 8u);
}

}  // namespace
}  // namespace grft
