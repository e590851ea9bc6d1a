#pragma once

#include <cstdint>
#include <string>

#include "stsccl/graph_data.hpp"
#include "stsccl/nn.hpp"
#include "stsccl/tensor.hpp"

namespace stsccl::aug {

struct AugmentationConfig {
  double edge_mask_rate = 0.1;
  double attr_mask_rate = 0.1;
  double delta_ts = 0.5;  // lower bound of U(delta_ts, 1) for the fusion draws
  double generator_temperature = 0.5;
  int64_t generator_hidden_dim = 16;
  uint64_t seed = 0;
  void validate() const;
};

// Zeroes floor(rate * |off-diagonal edge pairs|) symmetric pairs; the
// diagonal is never touched.
Tensor edge_mask(const Tensor& a_con, double rate, uint64_t seed);

// Zeroes floor(rate * numel) uniformly chosen entries; others bit-identical.
Tensor attr_mask(const Tensor& x, double rate, uint64_t seed);

struct FusionResult {
  Var fused;
  double alpha = 0, beta = 0;
};

// fused = (1 - a - b) * history + a * day_lag + b * week_lag with a, b drawn
// from U(delta_ts, 1)/2 once per call; flagged lag copies force the matching
// per-sample coefficient to 0 (the weight returns to history).
FusionResult temporal_scale_fusion(const Var& history, const data::WindowBatch& batch, double delta_ts,
                                   uint64_t seed);
// Deterministic variant with caller-chosen coefficients.
Var temporal_scale_fusion_with(const Var& history, const data::WindowBatch& batch, double alpha, double beta);

struct BasicView {
  Tensor view;       // B x P x N x d_in
  Tensor adjacency;  // masked connectivity fed to the encoder for this view
  Tensor adj_mask;   // binary N x N mask that was applied
  double alpha = 0, beta = 0;
};

BasicView basic_augment(const data::WindowBatch& batch, const data::GraphSpec& graph,
                        const AugmentationConfig& cfg);

struct ViewGeneratorParams {
  Linear l1, l2, head;
  ViewGeneratorParams() = default;
  ViewGeneratorParams(ParamStore& store, const std::string& name, int64_t d_in, int64_t hidden, Rng& rng);
};

struct GeneratorResult {
  Var strong_history;   // per-node augmented input, B x P x N x d_in
  Var strong_adjacency; // N x N with chosen nodes' incident edges zeroed
  Var choices;          // N x 3 (edge-mask, attr-mask, unchanged)
  Var logits;           // N x 3 pre-sampling
};

// Two GraphSAGE-style rounds (mean aggregate, affine combine) produce node
// embeddings, a final affine map yields 3 logits per node, and a
// straight-through Gumbel sample picks the per-node augmentation.
GeneratorResult view_generator_forward(const Tensor& history, const data::GraphSpec& graph,
                                       const Tensor& base_adjacency, const ViewGeneratorParams& params,
                                       double temperature, uint64_t seed, bool hard = true,
                                       const Tensor* noise = nullptr);

struct StrongView {
  Var view;       // fused strong history
  Var adjacency;  // N x N
  Tensor choices; // N x 3 hard choices actually applied
  double alpha = 0, beta = 0;
};

StrongView strong_augment(const data::WindowBatch& batch, const data::GraphSpec& graph,
                          const ViewGeneratorParams& params, const AugmentationConfig& cfg);

}  // namespace stsccl::aug
