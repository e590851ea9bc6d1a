#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stsccl/augmentation.hpp"
#include "stsccl/config.hpp"
#include "stsccl/contrastive.hpp"
#include "stsccl/encoder.hpp"
#include "stsccl/graph_data.hpp"
#include "stsccl/nn.hpp"

namespace stsccl::train {

enum class Variant { full, sts_cm_only, sts_cm_mvp, no_neg_filter, no_di_gcn, ba_only, sa_only };

Variant parse_variant(const std::string& name);
const char* variant_name(Variant v);
const std::vector<Variant>& all_variants();

struct TrainConfig {
  double epsilon = 0.4;
  int64_t batch_size = 64;
  int64_t epochs = 100;
  double lr = 1e-4;
  double weight_decay = 1e-4;
  uint64_t seed = 0;
  int64_t p = 12, k = 3;
  int64_t patience = 10;
  double grad_clip = 5.0;
  Variant variant = Variant::full;
  int64_t checkpoint_every = 0;  // extra periodic checkpoints; 0 = best only
  void validate() const;
};

struct LossBundle {
  double l_pred = 0, l_sts_b = 0, l_sts_s = 0, l_sc = 0, total = 0;
  int64_t epoch = 0, step = 0;
};

// Per-channel z-score statistics from the training split.
struct Normalizer {
  std::vector<double> mean, stdev;
  Tensor apply(const Tensor& x) const;    // [..., d_in]
  Tensor invert(const Tensor& x) const;
  data::WindowBatch apply(const data::WindowBatch& b) const;
};

Normalizer fit_normalizer(const data::TrafficSeries& series, data::IndexRange train_range);

// All model parameters plus the static pieces they were built from.
struct ModelState {
  model::EncoderConfig enc_cfg;
  aug::AugmentationConfig aug_cfg;
  double cl_delta = 0.1;
  int64_t cl_top_u = 2;
  int64_t cl_d_proj = 16;
  bool cl_use_dist = false;
  double cl_dist_radius = 0.5;
  int64_t horizon = 3;

  ParamStore params;
  model::EncoderParams enc;
  model::DecoderParams dec;
  aug::ViewGeneratorParams gen;
  contrast::Heads heads;
  Normalizer norm;
  std::string config_hash;
};

ModelState build_model(const Config& cfg, int64_t d_in, uint64_t seed);

TrainConfig train_config_from(const Config& cfg);

Var prediction_loss(const Var& pred, const Var& truth);
double prediction_loss_value(const Tensor& pred, const Tensor& truth);

// One optimizer step on one batch. `step_seed` drives every stochastic
// element; identical (state, batch, seed) gives identical results.
LossBundle train_step(ModelState& state, AdamW& opt, const data::WindowBatch& batch,
                      const data::GraphSpec& graph, const TrainConfig& cfg,
                      const contrast::NegativeFilter& filter, uint64_t step_seed);

// Un-augmented prediction MSE over a range (normalized units).
double evaluate_pred_loss(ModelState& state, const data::TrafficSeries& series, const data::GraphSpec& graph,
                          data::IndexRange range, const TrainConfig& cfg);

// Un-augmented forecasts for every window in the range, original units.
struct Forecasts {
  Tensor pred;   // S x K x N x d_out
  Tensor truth;  // S x K x N x d_out
};
Forecasts predict_range(ModelState& state, const data::TrafficSeries& series, const data::GraphSpec& graph,
                        data::IndexRange range, const TrainConfig& cfg);

struct FitResult {
  std::vector<LossBundle> history;        // epochs x batches entries
  std::vector<double> val_history;        // one validation MSE per epoch
  int64_t best_epoch = -1;
  double best_val = 0;
  int64_t steps = 0;
};

// Joint training loop; keeps the best-validation parameters in `state` on
// return and writes best.ckpt under out_dir when given.
FitResult fit(ModelState& state, const data::TrafficSeries& series, const data::GraphSpec& graph,
              const data::Splits& splits, const TrainConfig& cfg, const std::string& out_dir);

void save_checkpoint(const std::string& path, const ModelState& state, const AdamW& opt, uint64_t seed,
                     int64_t epoch, int64_t step);
// Loads parameter/optimizer tensors into an already-built state; verifies
// the config hash and returns (seed, epoch, step).
struct CheckpointMeta {
  uint64_t seed = 0;
  int64_t epoch = 0, step = 0;
};
CheckpointMeta load_checkpoint(const std::string& path, ModelState& state, AdamW& opt,
                               bool check_hash = true);

}  // namespace stsccl::train
