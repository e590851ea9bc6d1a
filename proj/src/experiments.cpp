#include "stsccl/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stsccl/errors.hpp"
#include "stsccl/png.hpp"
#include "stsccl/rng.hpp"

namespace fs = std::filesystem;

namespace stsccl::exps {

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fmt4(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::vector<std::string> split_line(const std::string& line, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Metrics compute_metrics(const Tensor& pred, const Tensor& truth, double mape_floor) {
  if (!(pred.shape() == truth.shape())) throw ConfigError("compute_metrics: shape mismatch");
  int64_t n = pred.numel();
  if (n == 0) throw ConfigError("compute_metrics: empty input");
  double sse = 0, sae = 0, sape = 0;
  int64_t n_ape = 0;
  for (int64_t i = 0; i < n; ++i) {
    double d = pred[i] - truth[i];
    sse += d * d;
    sae += std::abs(d);
    if (std::abs(truth[i]) > mape_floor) {
      sape += std::abs(d) / std::abs(truth[i]);
      ++n_ape;
    }
  }
  Metrics m;
  m.rmse = std::sqrt(sse / static_cast<double>(n));
  m.mae = sae / static_cast<double>(n);
  if (n_ape > 0) m.mape = 100.0 * sape / static_cast<double>(n_ape);
  return m;
}

MetricReport aggregate(const std::string& variant, const std::string& config_hash,
                       const std::vector<std::pair<uint64_t, Metrics>>& rows) {
  MetricReport r;
  r.variant = variant;
  r.config_hash = config_hash;
  r.per_seed = rows;
  r.n_seeds = static_cast<int64_t>(rows.size());
  if (rows.empty()) return r;
  auto mean_std = [&](auto getter) -> std::pair<double, double> {
    double m = 0;
    for (const auto& [s, x] : rows) m += getter(x);
    m /= static_cast<double>(rows.size());
    double var = 0;
    for (const auto& [s, x] : rows) {
      double d = getter(x) - m;
      var += d * d;
    }
    double sd = rows.size() > 1 ? std::sqrt(var / static_cast<double>(rows.size() - 1)) : 0.0;
    return {m, sd};
  };
  std::tie(r.rmse_mean, r.rmse_std) = mean_std([](const Metrics& m) { return m.rmse; });
  std::tie(r.mae_mean, r.mae_std) = mean_std([](const Metrics& m) { return m.mae; });
  bool all_mape = std::all_of(rows.begin(), rows.end(),
                              [](const auto& p) { return p.second.mape.has_value(); });
  if (all_mape) {
    auto [mm, ms] = mean_std([](const Metrics& m) { return *m.mape; });
    r.mape_mean = mm;
    if (rows.size() > 1) r.mape_std = ms;
  }
  return r;
}

BaselineResult naive_baselines(const data::TrafficSeries& series, const data::Splits& splits, int64_t p,
                               int64_t k, int64_t batch_size, uint64_t seed, double mape_floor) {
  auto batches = data::make_windows(series, splits.test, p, k, batch_size, seed);
  int64_t total = 0;
  for (const auto& b : batches) total += b.B();
  int64_t N = series.n_nodes(), D = series.d_in();
  Tensor pred_p({total, k, N, D}), pred_h({total, k, N, D}), truth({total, k, N, D});

  // same-time-of-day average over the training split
  int64_t spd = series.steps_per_day;
  Tensor ha({spd, N, D});
  std::vector<int64_t> counts(static_cast<size_t>(spd), 0);
  for (int64_t t = splits.train.begin; t < splits.train.end; ++t) {
    int64_t tod = t % spd;
    ++counts[static_cast<size_t>(tod)];
    for (int64_t i = 0; i < N; ++i) {
      for (int64_t c = 0; c < D; ++c) ha.at({tod, i, c}) += series.values.at({t, i, c});
    }
  }
  for (int64_t tod = 0; tod < spd; ++tod) {
    int64_t cnt = std::max<int64_t>(1, counts[static_cast<size_t>(tod)]);
    for (int64_t i = 0; i < N; ++i) {
      for (int64_t c = 0; c < D; ++c) ha.at({tod, i, c}) /= static_cast<double>(cnt);
    }
  }

  int64_t row = 0;
  for (const auto& b : batches) {
    for (int64_t s = 0; s < b.B(); ++s) {
      int64_t tau = b.anchors[static_cast<size_t>(s)];
      for (int64_t h = 0; h < k; ++h) {
        int64_t tod = (tau + 1 + h) % spd;
        for (int64_t i = 0; i < N; ++i) {
          for (int64_t c = 0; c < D; ++c) {
            pred_p.at({row, h, i, c}) = b.history.at({s, p - 1, i, c});
            pred_h.at({row, h, i, c}) = ha.at({tod, i, c});
            truth.at({row, h, i, c}) = b.future.at({s, h, i, c});
          }
        }
      }
      ++row;
    }
  }
  BaselineResult r;
  r.persistence = compute_metrics(pred_p, truth, mape_floor);
  r.historical_average = compute_metrics(pred_h, truth, mape_floor);
  return r;
}

std::pair<data::TrafficSeries, data::GraphSpec> load_data(const Config& cfg) {
  if (cfg.has("data.series")) {
    return data::load_dataset(cfg.str("data.series", ""), cfg.str("data.graph", ""));
  }
  return data::synth_traffic(cfg.integer("synth.nodes", 12), cfg.integer("synth.days", 10),
                             cfg.integer("synth.interval", 30),
                             static_cast<uint64_t>(cfg.integer("synth.seed", 7)));
}

data::Splits splits_from(const Config& cfg, const data::TrafficSeries& series) {
  std::array<double, 3> fr = {cfg.num("data.train_frac", 0.6), cfg.num("data.val_frac", 0.2),
                              cfg.num("data.test_frac", 0.2)};
  return data::chronological_split(series, fr);
}

void write_history_csv(const std::string& path, const std::vector<train::LossBundle>& history) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot open for writing: " + path);
  out << "epoch,step,l_pred,l_sts_b,l_sts_s,l_sc,total\n";
  for (const auto& b : history) {
    out << b.epoch << "," << b.step << "," << fmt(b.l_pred) << "," << fmt(b.l_sts_b) << ","
        << fmt(b.l_sts_s) << "," << fmt(b.l_sc) << "," << fmt(b.total) << "\n";
  }
}

void write_val_csv(const std::string& path, const std::vector<double>& vals) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot open for writing: " + path);
  out << "epoch,val_l_pred\n";
  for (size_t i = 0; i < vals.size(); ++i) out << i << "," << fmt(vals[i]) << "\n";
}

void write_metrics_csv(const std::string& path,
                       const std::vector<std::tuple<std::string, uint64_t, Metrics>>& rows) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot open for writing: " + path);
  out << "variant,seed,rmse,mae,mape\n";
  for (const auto& [variant, seed, m] : rows) {
    out << variant << "," << seed << "," << fmt(m.rmse) << "," << fmt(m.mae) << ","
        << (m.mape ? fmt(*m.mape) : "undefined") << "\n";
  }
}

void write_summary_csv(const std::string& path, const std::vector<MetricReport>& reports) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot open for writing: " + path);
  out << "variant,n_seeds,rmse_mean,rmse_std,mae_mean,mae_std,mape_mean,mape_std\n";
  for (const auto& r : reports) {
    out << r.variant << "," << r.n_seeds << "," << fmt(r.rmse_mean) << ","
        << (r.n_seeds > 1 ? fmt(r.rmse_std) : "") << "," << fmt(r.mae_mean) << ","
        << (r.n_seeds > 1 ? fmt(r.mae_std) : "") << ","
        << (r.mape_mean ? fmt(*r.mape_mean) : "undefined") << ","
        << (r.mape_std ? fmt(*r.mape_std) : "") << "\n";
  }
}

void write_report_md(const std::string& path, const std::vector<MetricReport>& reports,
                     const std::string& title) {
  std::ofstream out(path);
  if (!out) throw LoadError("cannot open for writing: " + path);
  out << "# " << title << "\n\n";
  out << "| variant | RMSE | MAE | MAPE |\n";
  out << "|---|---|---|---|\n";
  for (const auto& r : reports) {
    auto cell = [&](double mean, double sd, bool have_sd) {
      return have_sd ? fmt4(mean) + "±" + fmt4(sd) : fmt4(mean);
    };
    std::string mape_cell = "undefined";
    if (r.mape_mean) {
      mape_cell = fmt4(*r.mape_mean) + "%";
      if (r.mape_std) mape_cell = fmt4(*r.mape_mean) + "%±" + fmt4(*r.mape_std) + "%";
    }
    out << "| " << r.variant << " | " << cell(r.rmse_mean, r.rmse_std, r.n_seeds > 1) << " | "
        << cell(r.mae_mean, r.mae_std, r.n_seeds > 1) << " | " << mape_cell << " |\n";
  }
  out << "\nseeds per row: " << (reports.empty() ? 0 : reports.front().n_seeds) << "\n";
}

void cmd_generate(const Config& cfg, const std::string& out_dir) {
  fs::create_directories(out_dir);
  auto [series, graph] = data::synth_traffic(cfg.integer("synth.nodes", 12), cfg.integer("synth.days", 10),
                                             cfg.integer("synth.interval", 30),
                                             static_cast<uint64_t>(cfg.integer("synth.seed", 7)));
  std::string format = cfg.str("synth.format", "bin");
  if (format == "csv") {
    data::save_dataset(series, graph, out_dir + "/series.csv", out_dir + "/graph.csv");
  } else {
    data::save_dataset(series, graph, out_dir + "/series.bin", out_dir + "/graph.bin");
  }
}

TrainRun cmd_train(const Config& cfg, const std::string& out_dir) {
  auto [series, graph] = load_data(cfg);
  auto splits = splits_from(cfg, series);
  auto tc = train::train_config_from(cfg);
  auto state = train::build_model(cfg, series.d_in(), tc.seed);
  if (!out_dir.empty()) fs::create_directories(out_dir);

  TrainRun run;
  run.fit = train::fit(state, series, graph, splits, tc, out_dir);
  auto forecasts = train::predict_range(state, series, graph, splits.test, tc);
  double mape_floor = cfg.num("metrics.mape_floor", 1e-3);
  run.test = compute_metrics(forecasts.pred, forecasts.truth, mape_floor);
  run.baselines = naive_baselines(series, splits, tc.p, tc.k, tc.batch_size, mix_seed(tc.seed, 0xBA5E),
                                  mape_floor);
  if (!out_dir.empty()) {
    run.checkpoint = out_dir + "/best.ckpt";
    write_history_csv(out_dir + "/history.csv", run.fit.history);
    write_val_csv(out_dir + "/val_history.csv", run.fit.val_history);
    std::vector<std::tuple<std::string, uint64_t, Metrics>> rows = {
        {variant_name(tc.variant), tc.seed, run.test},
        {"persistence", tc.seed, run.baselines.persistence},
        {"historical_average", tc.seed, run.baselines.historical_average}};
    write_metrics_csv(out_dir + "/metrics.csv", rows);
    std::ofstream cfg_out(out_dir + "/config_used.txt");
    cfg_out << cfg.canonical();
    cmd_report(out_dir);
  }
  return run;
}

Metrics cmd_evaluate(const Config& cfg, const std::string& out_dir, const std::string& checkpoint_path) {
  if (!fs::exists(checkpoint_path)) throw LoadError("checkpoint not found: " + checkpoint_path);
  auto [series, graph] = load_data(cfg);
  auto splits = splits_from(cfg, series);
  auto tc = train::train_config_from(cfg);
  auto state = train::build_model(cfg, series.d_in(), tc.seed);
  AdamW opt(tc.lr, tc.weight_decay);
  train::load_checkpoint(checkpoint_path, state, opt);
  auto forecasts = train::predict_range(state, series, graph, splits.test, tc);
  double mape_floor = cfg.num("metrics.mape_floor", 1e-3);
  Metrics m = compute_metrics(forecasts.pred, forecasts.truth, mape_floor);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    auto baselines = naive_baselines(series, splits, tc.p, tc.k, tc.batch_size, mix_seed(tc.seed, 0xBA5E),
                                     mape_floor);
    std::vector<std::tuple<std::string, uint64_t, Metrics>> rows = {
        {variant_name(tc.variant), tc.seed, m},
        {"persistence", tc.seed, baselines.persistence},
        {"historical_average", tc.seed, baselines.historical_average}};
    write_metrics_csv(out_dir + "/metrics.csv", rows);
  }
  return m;
}

std::vector<MetricReport> cmd_ablate(const Config& cfg, const std::string& out_dir) {
  int64_t n_seeds = cfg.integer("experiment.n_seeds", 1);
  uint64_t base_seed = static_cast<uint64_t>(cfg.integer("train.seed", 0));
  fs::create_directories(out_dir);

  std::vector<MetricReport> reports;
  std::vector<std::tuple<std::string, uint64_t, Metrics>> all_rows;
  for (auto variant : train::all_variants()) {
    std::vector<std::pair<uint64_t, Metrics>> rows;
    for (int64_t s = 0; s < n_seeds; ++s) {
      uint64_t seed = base_seed + static_cast<uint64_t>(s);
      Config run_cfg = cfg;
      run_cfg.set("train.variant", train::variant_name(variant));
      run_cfg.set("train.seed", std::to_string(seed));
      std::string run_dir = out_dir + "/" + train::variant_name(variant) + "/seed_" + std::to_string(seed);
      TrainRun run = cmd_train(run_cfg, run_dir);
      rows.emplace_back(seed, run.test);
      all_rows.emplace_back(train::variant_name(variant), seed, run.test);
    }
    reports.push_back(aggregate(train::variant_name(variant), cfg.hash(), rows));
  }
  write_metrics_csv(out_dir + "/metrics.csv", all_rows);
  write_summary_csv(out_dir + "/summary.csv", reports);
  write_report_md(out_dir + "/report.md", reports, "Ablation results");
  return reports;
}

std::vector<double> parse_value_grid(const std::string& spec) {
  std::vector<double> values;
  auto range_pos = spec.find("..");
  if (range_pos != std::string::npos) {
    double lo = std::stod(spec.substr(0, range_pos));
    std::string rest = spec.substr(range_pos + 2);
    double step = 0.1;
    auto colon = rest.find(':');
    if (colon != std::string::npos) {
      step = std::stod(rest.substr(colon + 1));
      rest = rest.substr(0, colon);
    }
    double hi = std::stod(rest);
    if (step <= 0) throw ConfigError("sweep step must be positive");
    for (double v = lo; v <= hi + 1e-9; v += step) values.push_back(v);
  } else {
    for (const auto& tok : split_line(spec)) {
      if (!tok.empty()) values.push_back(std::stod(tok));
    }
  }
  if (values.empty()) throw ConfigError("empty sweep value grid: " + spec);
  return values;
}

std::vector<MetricReport> cmd_sweep(const Config& cfg, const std::string& param, const std::string& values_spec,
                                    const std::string& out_dir) {
  std::string key;
  bool is_int = false;
  if (param == "epsilon") {
    key = "train.epsilon";
  } else if (param == "top_u") {
    key = "cl.top_u";
    is_int = true;
  } else if (param == "edge_mask_rate") {
    key = "aug.edge_mask_rate";
  } else if (param == "attr_mask_rate") {
    key = "aug.attr_mask_rate";
  } else {
    throw ConfigError("unknown sweep parameter: " + param +
                      " (expected epsilon, top_u, edge_mask_rate, attr_mask_rate)");
  }
  auto values = parse_value_grid(values_spec);
  int64_t n_seeds = cfg.integer("experiment.n_seeds", 1);
  uint64_t base_seed = static_cast<uint64_t>(cfg.integer("train.seed", 0));
  fs::create_directories(out_dir);

  std::vector<MetricReport> reports;
  std::vector<std::tuple<std::string, uint64_t, Metrics>> all_rows;
  for (double v : values) {
    Config run_cfg = cfg;
    std::string label;
    if (is_int) {
      run_cfg.set(key, std::to_string(static_cast<int64_t>(std::llround(v))));
      label = param + "=" + std::to_string(static_cast<int64_t>(std::llround(v)));
    } else {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%g", v);
      run_cfg.set(key, buf);
      label = param + "=" + buf;
    }
    std::vector<std::pair<uint64_t, Metrics>> rows;
    for (int64_t s = 0; s < n_seeds; ++s) {
      uint64_t seed = base_seed + static_cast<uint64_t>(s);
      Config seed_cfg = run_cfg;
      seed_cfg.set("train.seed", std::to_string(seed));
      std::string run_dir = out_dir + "/" + label + "/seed_" + std::to_string(seed);
      TrainRun run = cmd_train(seed_cfg, run_dir);
      rows.emplace_back(seed, run.test);
      all_rows.emplace_back(label, seed, run.test);
    }
    reports.push_back(aggregate(label, cfg.hash(), rows));
  }
  write_metrics_csv(out_dir + "/metrics.csv", all_rows);
  write_summary_csv(out_dir + "/summary.csv", reports);
  write_report_md(out_dir + "/report.md", reports, "Sweep over " + param);
  return reports;
}

void cmd_report(const std::string& run_dir) {
  // rebuild the summary table from per-seed rows
  std::string metrics_path = run_dir + "/metrics.csv";
  if (fs::exists(metrics_path)) {
    std::ifstream in(metrics_path);
    std::string line;
    std::getline(in, line);  // header
    std::vector<std::string> order;
    std::vector<std::pair<std::string, std::vector<std::pair<uint64_t, Metrics>>>> grouped;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto f = split_line(line);
      if (f.size() != 5) throw LoadError("malformed metrics row in " + metrics_path + ": " + line);
      Metrics m;
      m.rmse = std::stod(f[2]);
      m.mae = std::stod(f[3]);
      if (f[4] != "undefined") m.mape = std::stod(f[4]);
      auto it = std::find_if(grouped.begin(), grouped.end(),
                             [&](const auto& g) { return g.first == f[0]; });
      if (it == grouped.end()) {
        grouped.push_back({f[0], {}});
        it = grouped.end() - 1;
      }
      it->second.emplace_back(static_cast<uint64_t>(std::stoull(f[1])), m);
    }
    std::vector<MetricReport> reports;
    for (const auto& [name, rows] : grouped) reports.push_back(aggregate(name, "", rows));
    write_report_md(run_dir + "/report.md", reports, "Run report");
  }

  std::string hist_path = run_dir + "/history.csv";
  if (fs::exists(hist_path)) {
    std::ifstream in(hist_path);
    std::string line;
    std::getline(in, line);
    Curve pred{"l_pred", {}, 200, 40, 40}, total{"total", {}, 40, 40, 200};
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      auto f = split_line(line);
      if (f.size() != 7) continue;
      pred.values.push_back(std::stod(f[2]));
      total.values.push_back(std::stod(f[6]));
    }
    std::vector<Curve> curves = {pred, total};
    std::string val_path = run_dir + "/val_history.csv";
    if (fs::exists(val_path)) {
      std::ifstream vin(val_path);
      std::getline(vin, line);
      Curve val{"val_l_pred", {}, 30, 140, 60};
      while (std::getline(vin, line)) {
        if (line.empty()) continue;
        auto f = split_line(line);
        if (f.size() == 2) val.values.push_back(std::stod(f[1]));
      }
      curves.push_back(val);
    }
    plot_curves(run_dir + "/curves.png", curves);
  }
}

}  // namespace stsccl::exps
