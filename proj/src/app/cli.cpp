#include "grft/app/cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "CLI11.hpp"

#include "grft/app/config.hpp"
#include "grft/app/pipeline.hpp"
#include "grft/render/svg.hpp"
#include "grft/scenario/codec.hpp"

#ifndef GRFT_VERSION
#define GRFT_VERSION "unknown"
#endif

namespace grft {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Globals {
  std::optional<std::string> config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<int> workers;
};

// Runtime failures that should exit with kExitRuntime.
struct RuntimeFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

class Run {
 public:
  Run(AppConfig cfg, std::string command, std::vector<std::string> args, std::ostream& out)
      : cfg_(std::move(cfg)), command_(std::move(command)), args_(std::move(args)), out_(out) {
    dir_ = cfg_.out_dir;
    fs::create_directories(dir_);
  }

  const AppConfig& cfg() const { return cfg_; }
  const fs::path& dir() const { return dir_; }
  std::ostream& out() { return out_; }

  void write_json(const fs::path& name, const json& j) const { write_text_file(dir_ / name, j.dump(2) + "\n"); }

  /// Reproduction record: effective config, seed, build version and the command line.
  void manifest(const json& extra = json::object()) const {
    json m = {{"command", command_},     {"args", args_},   {"seed", cfg_.seed}, {"code_version", GRFT_VERSION},
              {"config", to_json(cfg_)}, {"created", utc_now()}};
    for (const auto& [k, v] : extra.items()) m[k] = v;
    write_json("manifest.json", m);
  }

 private:
  AppConfig cfg_;
  std::string command_;
  std::vector<std::string> args_;
  std::ostream& out_;
  fs::path dir_;
};

Denoiser load_checkpoint(const std::optional<std::string>& path, const char* what) {
  if (!path) throw RuntimeFailure(std::string(what) + " requires --checkpoint <denoiser.bin> from `pretrain`");
  if (!fs::exists(*path)) throw RuntimeFailure("checkpoint not found: " + *path);
  return Denoiser::load(*path);
}

json summary_json(const EvalReport& r) { return to_json(r).at("summary"); }

void print_summary(std::ostream& out, const char* label, const EvalReport& r) {
  out << label << ": score " << fmt("%.2f", r.mean_score) << "  collision " << fmt("%.3f", r.collision_rate)
      << "  offroad " << fmt("%.3f", r.offroad_rate) << "  mean reward " << fmt("%.2f", r.mean_reward) << "  ("
      << r.episodes.size() << " episodes)\n";
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Reinforcement fine-tuning of diffusion trajectory planners in a batched driving simulator", "grft"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON config file; flags override its values")->check(CLI::ExistingFile);
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--out-dir", g.out_dir, "output directory");
  app.add_option("--workers", g.workers, "worker threads")->check(CLI::PositiveNumber);

  // gen-scenarios
  auto* gen = app.add_subcommand("gen-scenarios", "write synthetic scenarios as .nmx files");
  std::string gen_set = "train";
  std::optional<std::string> gen_kinds;
  std::optional<int> gen_per_kind;
  std::optional<std::uint64_t> gen_seed_base;
  gen->add_option("--set", gen_set, "config scenario set: train or eval")->check(CLI::IsMember({"train", "eval"}));
  gen->add_option("--kinds", gen_kinds, "comma-separated kinds (straight,curve,intersection,blocked_lane,cone_gap)");
  gen->add_option("--per-kind", gen_per_kind, "scenarios per kind")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed-base", gen_seed_base, "first scenario seed");

  // pretrain
  auto* pre = app.add_subcommand("pretrain", "imitation pretraining of the diffusion planner");
  std::optional<std::string> pre_scenarios;
  std::optional<int> pre_epochs;
  pre->add_option("--scenarios", pre_scenarios, "directory of .nmx scenarios (default: synthetic train set)");
  pre->add_option("--epochs", pre_epochs, "training epochs")->check(CLI::PositiveNumber);

  // rft
  auto* rft = app.add_subcommand("rft", "dual-branch reinforcement fine-tuning");
  std::optional<std::string> rft_ckpt, rft_explorer, rft_scenarios;
  std::optional<int> rft_iters;
  bool rft_no_eval = false;
  rft->add_option("--checkpoint", rft_ckpt, "pretrained denoiser checkpoint");
  rft->add_option("--explorer", rft_explorer, "explorer checkpoint to resume from");
  rft->add_option("--scenarios", rft_scenarios, "directory of .nmx scenarios (default: synthetic eval set)");
  rft->add_option("--iterations", rft_iters, "training iterations")->check(CLI::NonNegativeNumber);
  rft->add_flag("--no-eval", rft_no_eval, "skip the before/after evaluation");

  // eval
  auto* ev = app.add_subcommand("eval", "closed-loop evaluation (unguided, eta 0)");
  std::optional<std::string> ev_ckpt, ev_scenarios;
  std::string ev_planner = "diffusion";
  ev->add_option("--checkpoint", ev_ckpt, "denoiser checkpoint (diffusion planner)");
  ev->add_option("--planner", ev_planner, "diffusion, expert, constant_velocity or always_collide")
      ->check(CLI::IsMember({"diffusion", "expert", "constant_velocity", "always_collide"}));
  ev->add_option("--scenarios", ev_scenarios, "directory of .nmx scenarios (default: synthetic eval set)");

  // bench
  auto* bench = app.add_subcommand("bench", "environment throughput at several worker counts");
  std::optional<std::string> bench_list;
  std::optional<long> bench_steps;
  bench->add_option("--workers-list", bench_list, "comma-separated worker counts");
  bench->add_option("--steps", bench_steps, "env steps per worker")->check(CLI::PositiveNumber);

  // render
  auto* ren = app.add_subcommand("render", "write an SVG of one scenario frame");
  std::optional<std::string> ren_file, ren_ckpt, ren_output;
  std::string ren_kind = "blocked_lane";
  std::uint64_t ren_seed = 0;
  int ren_frame = static_cast<int>(kCurrentFrame);
  int ren_group = 0;
  ren->add_option("--scenario", ren_file, ".nmx scenario file (default: synthetic --kind/--scenario-seed)");
  ren->add_option("--kind", ren_kind, "synthetic scenario kind");
  ren->add_option("--scenario-seed", ren_seed, "synthetic scenario seed");
  ren->add_option("--frame", ren_frame, "frame index")->check(CLI::Range(0, static_cast<int>(kFrameCount) - 1));
  ren->add_option("--checkpoint", ren_ckpt, "denoiser checkpoint; overlays its plan");
  ren->add_option("--group", ren_group, "guided candidate group size to overlay (needs --checkpoint)")
      ->check(CLI::NonNegativeNumber);
  ren->add_option("--output", ren_output, "output file (default: <out-dir>/render_<scenario>_f<frame>.svg)");

  // ablate
  auto* abl = app.add_subcommand("ablate", "fine-tuning ablation sweeps");
  std::string abl_grid;
  std::optional<std::string> abl_ckpt, abl_scenarios, abl_seeds;
  std::optional<int> abl_iters;
  abl->add_option("--grid", abl_grid, "lambda, reward, horizon, group or tier")
      ->required()
      ->check(CLI::IsMember({"lambda", "reward", "horizon", "group", "tier"}));
  abl->add_option("--checkpoint", abl_ckpt, "pretrained denoiser checkpoint");
  abl->add_option("--scenarios", abl_scenarios, "fine-tuning scenarios (default: synthetic eval set)");
  abl->add_option("--iterations", abl_iters, "fine-tuning iterations per setting")->check(CLI::NonNegativeNumber);
  abl->add_option("--seeds", abl_seeds, "comma-separated seeds");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  AppConfig cfg;
  try {
    if (g.config) cfg = load_config(*g.config);
    if (g.seed) cfg.seed = *g.seed;
    if (g.out_dir) cfg.out_dir = *g.out_dir;
    if (g.workers) cfg.workers = *g.workers;
    if (gen_kinds || gen_per_kind || gen_seed_base) {
      auto& set = gen_set == "train" ? cfg.train_set : cfg.eval_set;
      if (gen_kinds) set.kinds = split_csv(*gen_kinds);
      if (gen_per_kind) set.per_kind = *gen_per_kind;
      if (gen_seed_base) set.seed_base = *gen_seed_base;
    }
    if (pre_epochs) cfg.pretrain.epochs = *pre_epochs;
    if (rft_iters) cfg.rft.iterations = *rft_iters;
    if (bench_steps) cfg.bench.steps_per_worker = *bench_steps;
    if (bench_list) {
      cfg.bench.workers.clear();
      for (const auto& w : split_csv(*bench_list)) cfg.bench.workers.push_back(std::stoi(w));
    }
    if (abl_iters) cfg.ablate.iterations = *abl_iters;
    if (abl_seeds) {
      cfg.ablate.seeds.clear();
      for (const auto& s : split_csv(*abl_seeds)) cfg.ablate.seeds.push_back(std::stoull(s));
    }
    cfg.finalize();
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  auto* sub = app.get_subcommands().front();
  try {
    Run run(cfg, sub->get_name(), args, out);

    if (sub == gen) {
      const auto& set = gen_set == "train" ? cfg.train_set : cfg.eval_set;
      const auto scenarios = generate_set(set, cfg.synthetic);
      const fs::path dir = run.dir() / "scenarios";
      fs::create_directories(dir);
      for (const auto& s : scenarios) write_scenario_file(dir / (scenario_name(s) + ".nmx"), s);
      run.manifest({{"scenarios", scenarios.size()}});
      out << "wrote " << scenarios.size() << " scenarios to " << dir.string() << "\n";

    } else if (sub == pre) {
      const auto scenarios =
          load_or_generate(pre_scenarios ? std::optional<fs::path>(*pre_scenarios) : std::nullopt, cfg.train_set, cfg.synthetic);
      std::ofstream log(run.dir() / "pretrain_log.jsonl");
      const auto r = run_pretrain(cfg, scenarios, [&](const PretrainLog& l) {
        log << json{{"epoch", l.epoch}, {"loss", l.loss}}.dump() << "\n" << std::flush;
        out << "epoch " << l.epoch << " loss " << fmt("%.5f", l.loss) << "\n";
      });
      r.denoiser.save(run.dir() / "denoiser.bin");
      const json summary = {{"scenarios", scenarios.size()},
                            {"final_loss", r.logs.empty() ? 0.0 : r.logs.back().loss},
                            {"seconds", r.seconds},
                            {"guidance_response",
                             {{"offset_pos", r.response.offset_pos},
                              {"offset_neg", r.response.offset_neg},
                              {"calibration", r.response.calibration}}}};
      run.write_json("pretrain_summary.json", summary);
      run.manifest({{"checkpoint", (run.dir() / "denoiser.bin").string()}});
      out << "guidance calibration " << fmt("%.3f", r.response.calibration) << "; checkpoint "
          << (run.dir() / "denoiser.bin").string() << "\n";

    } else if (sub == rft) {
      const Denoiser den = load_checkpoint(rft_ckpt, "rft");
      std::optional<Explorer> ex;
      if (rft_explorer) ex = Explorer::load(*rft_explorer);
      const auto train =
          load_or_generate(rft_scenarios ? std::optional<fs::path>(*rft_scenarios) : std::nullopt, cfg.eval_set, cfg.synthetic);
      const auto eval = rft_no_eval ? std::vector<BundlePtr>{} : make_bundles(train, cfg.features);
      std::ofstream metrics(run.dir() / "metrics.jsonl");
      RftRunHooks hooks;
      hooks.on_iteration = [&](const IterationMetrics& m) {
        metrics << to_json(m).dump() << "\n" << std::flush;
        out << "iter " << m.iteration << " group reward " << fmt("%.3f", m.group_reward_mean) << " +- "
            << fmt("%.3f", m.group_reward_std) << "  step reward " << fmt("%.3f", m.step_reward_mean) << "\n";
      };
      hooks.on_checkpoint = [&](const RftTrainer& t) {
        char name[64];
        std::snprintf(name, sizeof name, "iter_%05d", t.iteration());
        fs::create_directories(run.dir() / "checkpoints");
        t.denoiser().save(run.dir() / "checkpoints" / (std::string(name) + "_denoiser.bin"));
        t.explorer().save(run.dir() / "checkpoints" / (std::string(name) + "_explorer.bin"));
      };
      run.manifest({{"checkpoint", *rft_ckpt}});
      const auto r = run_rft(cfg, den, train, eval, ex, hooks);
      r.denoiser.save(run.dir() / "denoiser_rft.bin");
      r.explorer.save(run.dir() / "explorer.bin");
      json summary = {{"iterations", r.metrics.size()}, {"seconds", r.seconds}};
      if (r.before) {
        summary["before"] = summary_json(*r.before);
        summary["after"] = summary_json(*r.after);
        print_summary(out, "before", *r.before);
        print_summary(out, "after ", *r.after);
      }
      run.write_json("rft_summary.json", summary);

    } else if (sub == ev) {
      const auto scenarios =
          load_or_generate(ev_scenarios ? std::optional<fs::path>(*ev_scenarios) : std::nullopt, cfg.eval_set, cfg.synthetic);
      const auto bundles = make_bundles(scenarios, cfg.features);
      EvalReport r;
      if (ev_planner == "diffusion") {
        r = evaluate_denoiser(cfg, load_checkpoint(ev_ckpt, "eval --planner diffusion"), bundles);
      } else if (ev_planner == "expert") {
        r = evaluate(ExpertPlanner{}, bundles, cfg.eval_seeds, cfg.eval_engine(), cfg.workers);
      } else if (ev_planner == "constant_velocity") {
        r = evaluate(ConstantVelocityPlanner{}, bundles, cfg.eval_seeds, cfg.eval_engine(), cfg.workers);
      } else {
        r = evaluate(AlwaysCollidePlanner{}, bundles, cfg.eval_seeds, cfg.eval_engine(), cfg.workers);
      }
      run.write_json("report.json", to_json(r));
      run.manifest({{"planner", ev_planner}});
      print_summary(out, ev_planner.c_str(), r);

    } else if (sub == bench) {
      const auto bundles = make_bundles(generate_set(cfg.eval_set, cfg.synthetic), cfg.features);
      const auto rows = bench_throughput(cfg.bench.workers, bundles, cfg.bench.steps_per_worker, cfg.eval_engine());
      json j = json::array();
      out << "workers  steps/s  speedup\n";
      for (const auto& r : rows) {
        j.push_back({{"workers", r.workers}, {"steps", r.steps}, {"seconds", r.seconds}, {"steps_per_second", r.steps_per_second}});
        out << r.workers << "  " << fmt("%.0f", r.steps_per_second) << "  "
            << fmt("%.2f", r.steps_per_second / rows.front().steps_per_second) << "\n";
      }
      run.write_json("bench.json", {{"rows", j}, {"hardware_threads", std::thread::hardware_concurrency()}});
      run.manifest();

    } else if (sub == ren) {
      Scenario s;
      if (ren_file) {
        s = read_scenario_file(*ren_file);
      } else {
        const auto kind = parse_scenario_kind(ren_kind);
        if (!kind) throw std::invalid_argument("unknown scenario kind " + ren_kind);
        s = generate_synthetic(ren_seed, *kind, cfg.synthetic);
      }
      const auto frame = static_cast<std::size_t>(ren_frame);
      RenderOverlays ov;
      if (ren_ckpt) {
        const Denoiser den = load_checkpoint(ren_ckpt, "render");
        const FeatureExtractor fx(s, cfg.features);
        const auto& ego = s.ego_log[frame];
        const Pose2 pose{ego.x, ego.y, ego.heading};
        const nn::Mat cond = conditioning_row(fx.extract(frame, ego));
        Rng rng(derive_seed(cfg.seed, 30));
        const NoiseSchedule sched(cfg.schedule);
        const Trajectory ref = reference_plan(den, sched, cond, rng);
        ov.plan = trajectory_to_world(ref, pose);
        if (ren_group > 0) {
          // Scales spread over [-1, 1] laterally, alternating longitudinal sign.
          std::vector<GuidanceScales> scales;
          for (int k = 0; k < ren_group; ++k) {
            const double lat = ren_group == 1 ? 0.0 : -1.0 + 2.0 * k / (ren_group - 1);
            scales.push_back({lat, k % 2 == 0 ? 0.5 : -0.5});
          }
          const auto group = guided_sample_group(den, sched, cond, ref, scales, cfg.guidance, rng);
          for (const auto& p : group.plans) ov.group.push_back(trajectory_to_world(p, pose));
        }
      }
      const fs::path path = ren_output ? fs::path(*ren_output)
                                       : run.dir() / ("render_" + scenario_name(s) + "_f" + std::to_string(frame) + ".svg");
      write_text_file(path, render_frame(s, frame, ov));
      run.manifest({{"output", path.string()}});
      out << "wrote " << path.string() << "\n";

    } else if (sub == abl) {
      const Denoiser den = load_checkpoint(abl_ckpt, "ablate");
      const auto train =
          load_or_generate(abl_scenarios ? std::optional<fs::path>(*abl_scenarios) : std::nullopt, cfg.eval_set, cfg.synthetic);
      const auto eval = make_bundles(train, cfg.features);
      std::ofstream rows_out(run.dir() / ("ablate_" + abl_grid + ".jsonl"));
      run.manifest({{"grid", abl_grid}, {"checkpoint", *abl_ckpt}});
      int n = 0;
      run_ablation(cfg, abl_grid, den, train, eval, [&](const AblationRow& r) {
        rows_out << to_json(r).dump() << "\n" << std::flush;
        out << "row " << ++n << " " << r.setting.dump() << "  score " << fmt("%.2f", r.mean_score()) << "  collision "
            << fmt("%.3f", r.mean_collision()) << "  mean reward " << fmt("%.2f", r.mean_reward()) << "\n";
      });
      out << n << " rows\n";
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace grft
