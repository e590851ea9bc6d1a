#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "stsccl/config.hpp"
#include "stsccl/graph_data.hpp"
#include "stsccl/training.hpp"

namespace stsccl::exps {

struct Metrics {
  double rmse = 0, mae = 0;
  std::optional<double> mape;  // percent; absent when every entry is under the floor
};

// MAPE averages only entries with |truth| > mape_floor.
Metrics compute_metrics(const Tensor& pred, const Tensor& truth, double mape_floor = 1e-3);

struct MetricReport {
  std::string variant;
  int64_t n_seeds = 0;
  double rmse_mean = 0, rmse_std = 0, mae_mean = 0, mae_std = 0;
  std::optional<double> mape_mean, mape_std;
  std::string config_hash;
  std::vector<std::pair<uint64_t, Metrics>> per_seed;
};

MetricReport aggregate(const std::string& variant, const std::string& config_hash,
                       const std::vector<std::pair<uint64_t, Metrics>>& rows);

struct BaselineResult {
  Metrics persistence;
  Metrics historical_average;
};

// Last-value persistence and same-time-of-day train-split average, evaluated
// on the test split in original units.
BaselineResult naive_baselines(const data::TrafficSeries& series, const data::Splits& splits, int64_t p,
                               int64_t k, int64_t batch_size, uint64_t seed, double mape_floor = 1e-3);

std::pair<data::TrafficSeries, data::GraphSpec> load_data(const Config& cfg);
data::Splits splits_from(const Config& cfg, const data::TrafficSeries& series);

struct TrainRun {
  train::FitResult fit;
  Metrics test;
  BaselineResult baselines;
  std::string checkpoint;
};

void cmd_generate(const Config& cfg, const std::string& out_dir);
TrainRun cmd_train(const Config& cfg, const std::string& out_dir);
Metrics cmd_evaluate(const Config& cfg, const std::string& out_dir, const std::string& checkpoint_path);
std::vector<MetricReport> cmd_ablate(const Config& cfg, const std::string& out_dir);
std::vector<MetricReport> cmd_sweep(const Config& cfg, const std::string& param, const std::string& values_spec,
                                    const std::string& out_dir);
void cmd_report(const std::string& run_dir);

// "a..b" or "a..b:step" or comma-separated list; the range form defaults to
// step 0.1 and includes both endpoints.
std::vector<double> parse_value_grid(const std::string& spec);

void write_history_csv(const std::string& path, const std::vector<train::LossBundle>& history);
void write_val_csv(const std::string& path, const std::vector<double>& vals);
void write_metrics_csv(const std::string& path,
                       const std::vector<std::tuple<std::string, uint64_t, Metrics>>& rows);
void write_summary_csv(const std::string& path, const std::vector<MetricReport>& reports);
void write_report_md(const std::string& path, const std::vector<MetricReport>& reports,
                     const std::string& title);

}  // namespace stsccl::exps
