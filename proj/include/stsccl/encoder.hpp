#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "stsccl/graph_data.hpp"
#include "stsccl/nn.hpp"
#include "stsccl/tensor.hpp"

namespace stsccl::model {

struct EncoderConfig {
  int64_t d_model = 32;
  int64_t n_heads = 4;
  int64_t n_blocks = 4;
  int64_t n_decoder_blocks = 4;
  double probsparse_factor = 5.0;
  double omega = 0.5;           // Gumbel temperature for the dynamic adjacency
  int64_t diffusion_steps = 2;  // K_d
  double gamma_min = 0.1, gamma_max = 10.0;
  int64_t d_in = 1, d_out = 1;
  void validate() const;
};

// Softmax((logits + gumbel_noise) / temperature) over the last dim. In hard
// mode the forward value is the one-hot argmax while gradients follow the
// soft relaxation. `noise` overrides the seeded draw when supplied.
Var gumbel_softmax(const Var& logits, double temperature, bool hard, uint64_t seed,
                   const Tensor* noise = nullptr);

// Fixed sinusoidal embedding, PE[t,2j] = sin(t/(2p)^(2j/d)), PE[t,2j+1] = cos(same).
Tensor temporal_pe(int64_t p, int64_t d_model);

struct SpatialPeParams {
  static constexpr int64_t kScales = 6;
  Linear fc;   // 4*kScales -> d_model
  Var w_gcn;   // d_model x d_model
  SpatialPeParams() = default;
  SpatialPeParams(ParamStore& store, const std::string& name, int64_t d_model, Rng& rng);
};

// Sinusoid transform of coordinates over geometric scales, affine reshape,
// then one smoothing pass with the row-normalized connectivity adjacency.
Var spatial_pe(const data::GraphSpec& graph, const SpatialPeParams& params, double gamma_min,
               double gamma_max, int64_t d_model);

// q,k,v: [..., L, d]. Selects u = min(L, ceil(factor*ln L)) queries by the
// max-minus-mean sparsity score over sampled keys; unselected queries emit
// the mean of v. Exact dense attention when L <= 16 or u >= L.
// `additive_mask` ([Lq, Lk]) is honored on the dense path only.
Var probsparse_attention(const Var& q, const Var& k, const Var& v, double factor, uint64_t seed,
                         const Tensor* additive_mask = nullptr);

// Row-normalizes a nonnegative matrix; all-zero rows fall back to a self-loop.
Var row_normalize(const Var& m);

struct DynGraphParams {
  std::vector<Var> dgc_w;  // diffusion_steps + 1 maps of [d_model, d_model]
  Linear mlp1, mlp2;       // residual MLP: x + mlp2(tanh(mlp1(x)))
  DynGraphParams() = default;
  DynGraphParams(ParamStore& store, const std::string& name, int64_t d_model, int64_t diffusion_steps,
                 Rng& rng);
};

// z: [B, P, N, d_model] -> row-stochastic N x N dynamic adjacency (soft
// Gumbel sample at temperature omega). `a_tilde_out` receives the
// pre-sampling row-softmax matrix when non-null.
Var dynamic_graph_generator(const Var& z, const Var& adjacency, const DynGraphParams& params, double omega,
                            int64_t diffusion_steps, uint64_t seed, const Tensor* noise = nullptr,
                            Var* a_tilde_out = nullptr);

// sigma((A_con ⊙ A_dyn, row-renormalized) X W)
Var di_gcn(const Var& x, const Var& a_con, const Var& a_dyn, const Var& w);

struct MultiHeadParams {
  Linear wq, wk, wv, wo;
  MultiHeadParams() = default;
  MultiHeadParams(ParamStore& store, const std::string& name, int64_t d_model, Rng& rng);
};

// x_q: [A, B, Lq, d_model], x_kv: [A, B, Lk, d_model]
Var multi_head_attention(const Var& x_q, const Var& x_kv, const MultiHeadParams& params, int64_t n_heads,
                         double factor, uint64_t seed, const Tensor* additive_mask = nullptr);

struct EncoderBlockParams {
  MultiHeadParams attn;
  LayerNorm ln_attn, ln_gcn;
  DynGraphParams dyn;
  Var gcn_w;  // d_model x d_model
};

struct EncoderParams {
  Linear input_proj;
  SpatialPeParams spe;
  std::vector<EncoderBlockParams> blocks;
  EncoderParams() = default;
  EncoderParams(ParamStore& store, const std::string& name, const EncoderConfig& cfg, Rng& rng);
};

struct EncoderOutput {
  Var z_seq;    // B x P x N x d_model
  Var c_vec;    // B x N x d_model, last time position
  Var a_dyn;    // N x N from the last block
  Var a_fused;  // a_con ⊙ a_dyn from the last block
};

// Pre-drawn per-block Gumbel noise (N x N each); used to pin stochasticity.
struct EncoderNoise {
  std::vector<Tensor> gumbel;
};

// Stacked STS-CM blocks: ProbSparse self-attention along time per node, then
// dynamic-adjacency graph convolution across nodes per step, each wrapped in
// residual + layer norm. With `static_gcn` the dynamic adjacency is replaced
// by the row-normalized input adjacency.
EncoderOutput sts_cm_forward(const Var& view, const Var& adjacency, const data::GraphSpec& graph,
                             const EncoderConfig& cfg, const EncoderParams& params, uint64_t seed,
                             const EncoderNoise* noise = nullptr, bool static_gcn = false);

struct DecoderBlockParams {
  MultiHeadParams self_attn, cross_attn;
  LayerNorm ln_self, ln_cross;
};

struct DecoderParams {
  Var horizon_slots;  // K x d_model
  std::vector<DecoderBlockParams> blocks;
  Linear out_proj;
  DecoderParams() = default;
  DecoderParams(ParamStore& store, const std::string& name, const EncoderConfig& cfg, int64_t k, Rng& rng);
};

// One-shot decoding of all K horizon steps: masked self-attention over the
// learned horizon slots, cross-attention into z_seq, affine map to d_out.
Var decoder_forward(const EncoderOutput& enc, const EncoderConfig& cfg, const DecoderParams& params,
                    int64_t k);

}  // namespace stsccl::model
