// gml: generate synthetic site data, run one training method end to end, and
// compare finished runs.
//
//   gml gen-data --config C --out D
//   gml run --config C --method {gml,fedavg,pooled,individual} [--seed S] --out D
//   gml compare D1 D2 ...
//
// Exit codes: 0 success, 2 configuration/usage error, 3 runtime error.

#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <iostream>
#include <optional>

#include "gml/config.hpp"
#include "gml/experiment.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

gml::ExperimentConfig load_config(const std::string& path, std::optional<std::uint64_t> seed) {
  gml::ExperimentConfig cfg = path.empty() ? gml::default_config() : gml::config_load(path);
  if (seed) cfg.seed = *seed;
  cfg.validate();
  return cfg;
}

int exit_code_for(const gml::Error& e) {
  switch (e.code()) {
    case gml::ErrorCode::BadConfig:
    case gml::ErrorCode::InvalidConfig:
      return kExitConfig;
    default:
      return kExitRuntime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gossip mutual learning simulator"};
  app.require_subcommand(1);

  std::string log_level = "info";
  app.add_option("--log-level", log_level, "Logging verbosity")
      ->check(CLI::IsMember({"info", "debug"}))
      ->capture_default_str();

  std::string config_path;
  std::string out_dir;
  std::string method_name;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> compare_dirs;

  auto* gen = app.add_subcommand("gen-data", "Generate participant and held-out datasets");
  gen->add_option("--config", config_path, "Experiment config (JSON); defaults to the desk-scale setup");
  gen->add_option("--out", out_dir, "Output directory")->required();

  auto* run = app.add_subcommand("run", "Train one method and write checkpoints, events and reports");
  run->add_option("--config", config_path, "Experiment config (JSON); defaults to the desk-scale setup");
  run->add_option("--method", method_name, "Training method")
      ->required()
      ->check(CLI::IsMember({"gml", "fedavg", "pooled", "individual"}));
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--out", out_dir, "Output directory")->required();

  auto* cmp = app.add_subcommand("compare", "Tabulate finished runs side by side");
  cmp->add_option("dirs", compare_dirs, "Run directories (method dirs or out dirs)")->required()->expected(1, -1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  spdlog::set_level(log_level == "debug" ? spdlog::level::debug : spdlog::level::info);
  spdlog::set_pattern("[%H:%M:%S.%e] [%^%l%$] %v");

  try {
    if (gen->parsed()) {
      const auto cfg = load_config(config_path, std::nullopt);
      const auto files = gml::cmd_gen_data(cfg, out_dir);
      for (const auto& f : files) spdlog::debug("wrote {}", f.string());
      spdlog::info("wrote {} dataset files under {}/data", files.size(), out_dir);
    } else if (run->parsed()) {
      const auto cfg = load_config(config_path, seed);
      const auto method = gml::method_from_string(method_name);
      spdlog::info("running {} (seed {}, {} rounds, {} warm-up)", method_name, cfg.seed, cfg.schedule.total_rounds,
                   cfg.schedule.warmup_rounds);
      const auto dir = gml::cmd_run(cfg, method, out_dir);
      if (spdlog::should_log(spdlog::level::debug)) {
        for (const auto& ev : gml::read_jsonl(dir / "events.jsonl").events()) {
          spdlog::debug("round {} seq {} {} sender={} receiver={} bytes={}", ev.round, ev.seq, gml::to_string(ev.kind),
                        ev.sender ? std::to_string(*ev.sender) : "-", ev.receiver ? std::to_string(*ev.receiver) : "-",
                        ev.bytes);
        }
      }
      for (const auto& run_summary : gml::load_runs(dir)) {
        for (const auto& rep : run_summary.reports) {
          spdlog::info("{}: aggregated local-test DSC {:.4f}, out-of-sample {:.4f}", rep.method, rep.aggregated_dsc,
                       rep.aggregated_out_of_sample);
        }
        spdlog::info("messages {}, bytes {}", run_summary.comms.messages, run_summary.comms.bytes);
      }
      spdlog::info("results in {}", dir.string());
    } else if (cmp->parsed()) {
      std::vector<std::filesystem::path> dirs(compare_dirs.begin(), compare_dirs.end());
      std::cout << gml::cmd_compare(dirs);
    }
  } catch (const gml::Error& e) {
    spdlog::error("{}", e.what());
    return exit_code_for(e);
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
  return 0;
}
