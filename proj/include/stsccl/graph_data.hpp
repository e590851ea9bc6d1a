#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "stsccl/tensor.hpp"

namespace stsccl::data {

struct Calendar {
  std::vector<int64_t> day_of_week;  // 0..6, 0 = Monday
  std::vector<int64_t> is_weekend;
  std::vector<int64_t> is_holiday;
};

// Static description of a traffic network.
struct GraphSpec {
  int64_t n_nodes = 0;
  Tensor a_con;    // N x N binary, symmetric, diagonal 1
  bool has_dist = false;
  Tensor a_dist;   // N x N nonnegative
  Tensor coords;   // N x 2
  Tensor semantic; // N x Q, rows sum to 1
  void validate() const;  // throws LoadError on violated invariants
};

struct TrafficSeries {
  Tensor values;  // T x N x d_in
  int64_t interval_minutes = 0;
  int64_t steps_per_day = 0;
  int64_t steps_per_week = 0;
  Calendar calendar;

  int64_t T() const { return values.dim(0); }
  int64_t n_nodes() const { return values.dim(1); }
  int64_t d_in() const { return values.dim(2); }
};

struct IndexRange {
  int64_t begin = 0, end = 0;  // [begin, end)
  int64_t size() const { return end - begin; }
};

struct Splits {
  IndexRange train, val, test;
};

// Aligned history/future windows with day- and week-lagged context.
struct WindowBatch {
  Tensor history;   // B x P x N x d_in
  Tensor future;    // B x K x N x d_in
  Tensor day_lag;   // B x P x N x d_in
  Tensor week_lag;  // B x P x N x d_in
  std::vector<int64_t> anchors;
  std::vector<uint8_t> day_is_copy;   // lag clamped to a copy of history
  std::vector<uint8_t> week_is_copy;

  int64_t B() const { return history.dim(0); }
  int64_t P() const { return history.dim(1); }
  int64_t K() const { return future.dim(1); }
};

// Series/graph I/O. Format is chosen by extension: `.csv` text, anything
// else the binary container documented in the README.
std::pair<TrafficSeries, GraphSpec> load_dataset(const std::string& series_path, const std::string& graph_path);
void save_dataset(const TrafficSeries& series, const GraphSpec& graph, const std::string& series_path,
                  const std::string& graph_path);

Splits chronological_split(const TrafficSeries& series, std::array<double, 3> fractions);

std::vector<WindowBatch> make_windows(const TrafficSeries& series, IndexRange range, int64_t p, int64_t k,
                                      int64_t batch_size, uint64_t seed);

struct SynthParams {
  double base = 10.0;
  double daily_amp_lo = 2.0, daily_amp_hi = 4.0;
  double weekly_mod = 0.3;       // relative amplitude of the weekly modulation
  double noise = 0.2;            // std of the graph-diffused noise
  int64_t d_in = 1;
};

std::pair<TrafficSeries, GraphSpec> synth_traffic(int64_t n_nodes, int64_t days, int64_t interval_minutes,
                                                  uint64_t seed);
std::pair<TrafficSeries, GraphSpec> synth_traffic_ex(int64_t n_nodes, int64_t days, int64_t interval_minutes,
                                                     uint64_t seed, const SynthParams& params);

}  // namespace stsccl::data
