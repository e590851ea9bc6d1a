#include <CLI11.hpp>

#include <cstdio>
#include <exception>
#include <string>

#include "stsccl/config.hpp"
#include "stsccl/experiments.hpp"
#include "stsccl/graph_data.hpp"

using namespace stsccl;

int main(int argc, char** argv) {
  CLI::App app{"STS-CCL spatiotemporal contrastive forecasting"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "runs/default";
  int64_t seed = -1;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "flat `section.key = value` config file");
    sub->add_option("--seed", seed, "override train.seed");
    sub->add_option("--out", out_dir, "output directory");
  };

  auto* gen = app.add_subcommand("generate-synthetic", "write a seeded synthetic dataset");
  int64_t g_nodes = -1, g_days = -1, g_interval = -1;
  add_common(gen);
  gen->add_option("--nodes", g_nodes, "number of nodes");
  gen->add_option("--days", g_days, "number of days");
  gen->add_option("--interval", g_interval, "minutes per step");

  auto* tr = app.add_subcommand("train", "joint contrastive + prediction training");
  add_common(tr);

  auto* ev = app.add_subcommand("evaluate", "test metrics from a checkpoint");
  std::string checkpoint;
  add_common(ev);
  ev->add_option("--checkpoint", checkpoint, "checkpoint path (default <out>/best.ckpt)");

  auto* ab = app.add_subcommand("ablate", "run every model variant");
  add_common(ab);

  auto* sw = app.add_subcommand("sweep", "grid over one hyperparameter");
  std::string sweep_param = "epsilon", sweep_values = "0.1..1.0";
  add_common(sw);
  sw->add_option("--param", sweep_param, "epsilon | top_u | edge_mask_rate | attr_mask_rate");
  sw->add_option("--values", sweep_values, "comma list or lo..hi[:step]");

  auto* rp = app.add_subcommand("report", "regenerate report.md and curves.png for a run dir");
  add_common(rp);

  CLI11_PARSE(app, argc, argv);

  try {
    Config cfg = config_path.empty() ? Config{} : Config::load(config_path);
    if (seed >= 0) cfg.set("train.seed", std::to_string(seed));

    if (gen->parsed()) {
      if (g_nodes > 0) cfg.set("synth.nodes", std::to_string(g_nodes));
      if (g_days > 0) cfg.set("synth.days", std::to_string(g_days));
      if (g_interval > 0) cfg.set("synth.interval", std::to_string(g_interval));
      if (seed >= 0) cfg.set("synth.seed", std::to_string(seed));
      exps::cmd_generate(cfg, out_dir);
      std::printf("wrote synthetic dataset to %s\n", out_dir.c_str());
    } else if (tr->parsed()) {
      auto run = exps::cmd_train(cfg, out_dir);
      std::printf("best val l_pred %.6g at epoch %lld; test rmse %.6g mae %.6g\n", run.fit.best_val,
                  static_cast<long long>(run.fit.best_epoch), run.test.rmse, run.test.mae);
      std::printf("persistence mae %.6g, historical-average mae %.6g\n", run.baselines.persistence.mae,
                  run.baselines.historical_average.mae);
    } else if (ev->parsed()) {
      if (checkpoint.empty()) checkpoint = out_dir + "/best.ckpt";
      auto m = exps::cmd_evaluate(cfg, out_dir, checkpoint);
      std::printf("test rmse %.6g mae %.6g mape %s\n", m.rmse, m.mae,
                  m.mape ? (std::to_string(*m.mape) + "%").c_str() : "undefined");
    } else if (ab->parsed()) {
      auto reports = exps::cmd_ablate(cfg, out_dir);
      for (const auto& r : reports) {
        std::printf("%-16s rmse %.6g mae %.6g\n", r.variant.c_str(), r.rmse_mean, r.mae_mean);
      }
    } else if (sw->parsed()) {
      auto reports = exps::cmd_sweep(cfg, sweep_param, sweep_values, out_dir);
      for (const auto& r : reports) {
        std::printf("%-24s rmse %.6g mae %.6g\n", r.variant.c_str(), r.rmse_mean, r.mae_mean);
      }
    } else if (rp->parsed()) {
      exps::cmd_report(out_dir);
      std::printf("report written under %s\n", out_dir.c_str());
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
