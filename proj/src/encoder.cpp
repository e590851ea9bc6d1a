#include "stsccl/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "stsccl/errors.hpp"
#include "stsccl/rng.hpp"

namespace stsccl::model {

void EncoderConfig::validate() const {
  if (d_model <= 0 || d_model % n_heads != 0) {
    throw ConfigError("d_model must be positive and divisible by n_heads");
  }
  if (d_model % 2 != 0) throw ConfigError("d_model must be even for the sinusoidal embedding");
  if (omega <= 0) throw ConfigError("omega must be positive");
  if (n_blocks < 1 || n_decoder_blocks < 1) throw ConfigError("need at least one block");
  if (probsparse_factor <= 0) throw ConfigError("probsparse_factor must be positive");
  if (diffusion_steps < 0) throw ConfigError("diffusion_steps must be >= 0");
  if (gamma_min >= gamma_max) throw ConfigError("gamma_min must be < gamma_max");
}

Var gumbel_softmax(const Var& logits, double temperature, bool hard, uint64_t seed, const Tensor* noise) {
  if (temperature <= 0) throw ConfigError("gumbel_softmax temperature must be positive");
  if (!logits->value.all_finite()) throw NumericError("gumbel_softmax: non-finite logits");
  Tensor g(logits->value.shape());
  if (noise) {
    if (!(noise->shape() == logits->value.shape())) {
      throw ConfigError("gumbel noise shape mismatch");
    }
    g = *noise;
  } else {
    Rng rng(seed);
    for (int64_t i = 0; i < g.numel(); ++i) g[i] = rng.gumbel();
  }
  Var y = softmax_last(scale(add(logits, make_const(g)), 1.0 / temperature));
  if (!hard) return y;
  // straight-through: one-hot forward, soft backward
  const Tensor& ys = y->value;
  int64_t cols = ys.dim(-1);
  int64_t rows = ys.numel() / cols;
  Tensor delta(ys.shape());
  for (int64_t r = 0; r < rows; ++r) {
    const Scalar* row = ys.data() + r * cols;
    int64_t best = 0;
    for (int64_t c = 1; c < cols; ++c) {
      if (row[c] > row[best]) best = c;
    }
    for (int64_t c = 0; c < cols; ++c) {
      delta[r * cols + c] = (c == best ? 1.0 : 0.0) - row[c];
    }
  }
  return add(y, make_const(delta));
}

Tensor temporal_pe(int64_t p, int64_t d_model) {
  if (d_model % 2 != 0) throw ConfigError("temporal_pe requires even d_model");
  Tensor pe({p, d_model});
  double base = 2.0 * static_cast<double>(p);
  for (int64_t t = 0; t < p; ++t) {
    for (int64_t j = 0; 2 * j < d_model; ++j) {
      double denom = std::pow(base, 2.0 * static_cast<double>(j) / static_cast<double>(d_model));
      double angle = static_cast<double>(t) / denom;
      pe.at({t, 2 * j}) = std::sin(angle);
      pe.at({t, 2 * j + 1}) = std::cos(angle);
    }
  }
  return pe;
}

SpatialPeParams::SpatialPeParams(ParamStore& store, const std::string& name, int64_t d_model, Rng& rng) {
  fc = Linear(store, name + ".fc", 4 * kScales, d_model, rng);
  Scalar bound = 1.0 / std::sqrt(static_cast<Scalar>(d_model));
  w_gcn = store.add(name + ".w_gcn", uniform_init({d_model, d_model}, bound, rng));
}

Var spatial_pe(const data::GraphSpec& graph, const SpatialPeParams& params, double gamma_min,
               double gamma_max, int64_t d_model) {
  if (gamma_min >= gamma_max) throw ConfigError("spatial_pe: gamma_min must be < gamma_max");
  int64_t N = graph.n_nodes;
  constexpr int64_t S = SpatialPeParams::kScales;
  Tensor feats({N, 4 * S});
  for (int64_t i = 0; i < N; ++i) {
    for (int64_t s = 0; s < S; ++s) {
      double gamma = gamma_min * std::pow(gamma_max / gamma_min,
                                          static_cast<double>(s) / static_cast<double>(S - 1));
      for (int64_t c = 0; c < 2; ++c) {
        double v = graph.coords.at({i, c}) / gamma;
        feats.at({i, (c * S + s) * 2}) = std::sin(v);
        feats.at({i, (c * S + s) * 2 + 1}) = std::cos(v);
      }
    }
  }
  Var emb = params.fc(make_const(feats));
  // one Laplacian-smoothing pass with the row-normalized adjacency
  Tensor norm_adj = graph.a_con;
  for (int64_t i = 0; i < N; ++i) {
    double deg = 0;
    for (int64_t j = 0; j < N; ++j) deg += norm_adj.at({i, j});
    for (int64_t j = 0; j < N; ++j) norm_adj.at({i, j}) /= deg;
  }
  (void)d_model;
  return matmul(matmul(make_const(norm_adj), emb), params.w_gcn);
}

Var row_normalize(const Var& m) {
  int64_t N = m->value.dim(-1);
  int64_t rows = m->value.numel() / N;
  // zero rows fall back to a self-loop (constant correction, outside the tape)
  Tensor fallback(m->value.shape());
  bool any = false;
  for (int64_t r = 0; r < rows; ++r) {
    Scalar s = 0;
    for (int64_t c = 0; c < N; ++c) s += m->value[r * N + c];
    if (s == 0.0) {
      fallback[r * N + (r % N)] = 1.0;
      any = true;
    }
  }
  Var base = any ? add(m, make_const(fallback)) : m;
  Var rowsum = sum(base, {-1}, true);
  return div(base, rowsum);
}

namespace {

Tensor dense_mean_tile(int64_t rows) { return Tensor({rows, 1}, 1.0); }

Var dense_attention(const Var& q, const Var& k, const Var& v, const Tensor* mask) {
  int64_t d = q->value.dim(-1);
  Var scores = scale(matmul(q, transpose2(k)), 1.0 / std::sqrt(static_cast<double>(d)));
  if (mask) scores = add(scores, make_const(*mask));
  return matmul(softmax_last(scores), v);
}

}  // namespace

Var probsparse_attention(const Var& q, const Var& k, const Var& v, double factor, uint64_t seed,
                         const Tensor* additive_mask) {
  if (factor <= 0) throw ConfigError("probsparse factor must be positive");
  int64_t Lq = q->value.dim(-2);
  int64_t Lk = k->value.dim(-2);
  int64_t d = q->value.dim(-1);
  int64_t u = std::min<int64_t>(Lq, static_cast<int64_t>(std::ceil(factor * std::log(static_cast<double>(Lq)))));
  if (Lq <= 16 || u >= Lq) {
    return dense_attention(q, k, v, additive_mask);
  }
  if (additive_mask) throw ConfigError("probsparse sparse path does not support masks");

  // flatten leading dims
  Shape qshape = q->value.shape();
  int64_t Bf = q->value.numel() / (Lq * d);
  Var q3 = reshape(q, {Bf, Lq, d});
  Var k3 = reshape(k, {Bf, Lk, d});
  Var v3 = reshape(v, {Bf, Lk, d});

  int64_t u_keys = std::min<int64_t>(Lk, static_cast<int64_t>(std::ceil(factor * std::log(static_cast<double>(Lk)))));
  Rng rng(seed);
  auto key_sample = rng.sample_without_replacement(Lk, u_keys);
  double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(d));

  std::vector<Var> outs;
  for (int64_t b = 0; b < Bf; ++b) {
    Var qb = reshape(slice(q3, 0, b, 1), {Lq, d});
    Var kb = reshape(slice(k3, 0, b, 1), {Lk, d});
    Var vb = reshape(slice(v3, 0, b, 1), {Lk, d});

    // sparsity measure on values only; the top-u index set is a constant
    std::vector<double> measure(static_cast<size_t>(Lq));
    for (int64_t i = 0; i < Lq; ++i) {
      double mx = -1e300, mean = 0;
      for (int64_t js = 0; js < u_keys; ++js) {
        int64_t j = key_sample[static_cast<size_t>(js)];
        double dot = 0;
        for (int64_t c = 0; c < d; ++c) {
          dot += qb->value[i * d + c] * kb->value[j * d + c];
        }
        dot *= inv_sqrt_d;
        mx = std::max(mx, dot);
        mean += dot;
      }
      mean /= static_cast<double>(u_keys);
      measure[static_cast<size_t>(i)] = mx - mean;
    }
    std::vector<int64_t> order(static_cast<size_t>(Lq));
    for (int64_t i = 0; i < Lq; ++i) order[static_cast<size_t>(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](int64_t a, int64_t b2) {
      return measure[static_cast<size_t>(a)] > measure[static_cast<size_t>(b2)];
    });
    order.resize(static_cast<size_t>(u));

    Var q_sel = index_select(qb, 0, order);
    Var att = dense_attention(q_sel, kb, vb, nullptr);  // u x d

    // lazy queries output the mean of v
    Var mean_v = mean(vb, {0}, true);                               // 1 x d
    Var tiled = matmul(make_const(dense_mean_tile(Lq)), mean_v);    // Lq x d

    Tensor scatter({Lq, u});
    Tensor keep({Lq, 1}, 1.0);
    for (int64_t j = 0; j < u; ++j) {
      scatter.at({order[static_cast<size_t>(j)], j}) = 1.0;
      keep.at({order[static_cast<size_t>(j)], 0}) = 0.0;
    }
    Var out_b = add(mul(tiled, make_const(keep)), matmul(make_const(scatter), att));
    outs.push_back(reshape(out_b, {1, Lq, d}));
  }
  Var out = concat(outs, 0);
  return reshape(out, qshape);
}

DynGraphParams::DynGraphParams(ParamStore& store, const std::string& name, int64_t d_model,
                               int64_t diffusion_steps, Rng& rng) {
  Scalar bound = 1.0 / std::sqrt(static_cast<Scalar>(d_model));
  for (int64_t i = 0; i <= diffusion_steps; ++i) {
    dgc_w.push_back(store.add(name + ".dgc_w" + std::to_string(i), uniform_init({d_model, d_model}, bound, rng)));
  }
  mlp1 = Linear(store, name + ".mlp1", d_model, d_model, rng);
  mlp2 = Linear(store, name + ".mlp2", d_model, d_model, rng);
}

Var dynamic_graph_generator(const Var& z, const Var& adjacency, const DynGraphParams& params, double omega,
                            int64_t diffusion_steps, uint64_t seed, const Tensor* noise, Var* a_tilde_out) {
  if (!z->value.all_finite()) throw NumericError("dynamic_graph_generator: non-finite input");
  int64_t d = z->value.dim(-1);
  Var z_bar = mean(z, {0, 1}, false);  // N x d, pooled over batch and time
  Var transition = row_normalize(adjacency);
  Var cur = z_bar;
  Var acc = matmul(cur, params.dgc_w[0]);
  for (int64_t kd = 1; kd <= diffusion_steps; ++kd) {
    cur = matmul(transition, cur);
    acc = add(acc, matmul(cur, params.dgc_w[static_cast<size_t>(kd)]));
  }
  // residual MLP keeps the identity map reachable
  Var e = add(acc, params.mlp2(tanh_(params.mlp1(acc))));
  Var scores = scale(matmul(e, transpose2(e)), 1.0 / std::sqrt(static_cast<double>(d)));
  if (!scores->value.all_finite()) throw NumericError("dynamic_graph_generator: non-finite scores");
  Var a_tilde = softmax_last(scores);
  if (a_tilde_out) *a_tilde_out = a_tilde;
  Var logits = log_(add_scalar(a_tilde, 1e-12));
  return gumbel_softmax(logits, omega, /*hard=*/false, seed, noise);
}

Var di_gcn(const Var& x, const Var& a_con, const Var& a_dyn, const Var& w) {
  Var fused = row_normalize(mul(a_con, a_dyn));
  return tanh_(matmul(matmul(fused, x), w));
}

MultiHeadParams::MultiHeadParams(ParamStore& store, const std::string& name, int64_t d_model, Rng& rng) {
  wq = Linear(store, name + ".wq", d_model, d_model, rng);
  wk = Linear(store, name + ".wk", d_model, d_model, rng);
  wv = Linear(store, name + ".wv", d_model, d_model, rng);
  wo = Linear(store, name + ".wo", d_model, d_model, rng);
}

namespace {

Var split_heads(const Var& x, int64_t n_heads) {
  // [A, B, L, dm] -> [A, B, h, L, dh]
  Shape s = x->value.shape();
  int64_t dm = s[3], L = s[2];
  int64_t dh = dm / n_heads;
  Var r = reshape(x, {s[0], s[1], L, n_heads, dh});
  return permute(r, {0, 1, 3, 2, 4});
}

Var merge_heads(const Var& x) {
  // [A, B, h, L, dh] -> [A, B, L, dm]
  Shape s = x->value.shape();
  Var r = permute(x, {0, 1, 3, 2, 4});
  return reshape(r, {s[0], s[1], s[3], s[2] * s[4]});
}

}  // namespace

Var multi_head_attention(const Var& x_q, const Var& x_kv, const MultiHeadParams& params, int64_t n_heads,
                         double factor, uint64_t seed, const Tensor* additive_mask) {
  Var q = split_heads(params.wq(x_q), n_heads);
  Var k = split_heads(params.wk(x_kv), n_heads);
  Var v = split_heads(params.wv(x_kv), n_heads);
  Var att = probsparse_attention(q, k, v, factor, seed, additive_mask);
  return params.wo(merge_heads(att));
}

EncoderParams::EncoderParams(ParamStore& store, const std::string& name, const EncoderConfig& cfg, Rng& rng) {
  input_proj = Linear(store, name + ".input_proj", cfg.d_in, cfg.d_model, rng);
  spe = SpatialPeParams(store, name + ".spe", cfg.d_model, rng);
  for (int64_t b = 0; b < cfg.n_blocks; ++b) {
    EncoderBlockParams blk;
    std::string bn = name + ".block" + std::to_string(b);
    blk.attn = MultiHeadParams(store, bn + ".attn", cfg.d_model, rng);
    blk.ln_attn = LayerNorm(store, bn + ".ln_attn", cfg.d_model);
    blk.ln_gcn = LayerNorm(store, bn + ".ln_gcn", cfg.d_model);
    blk.dyn = DynGraphParams(store, bn + ".dyn", cfg.d_model, cfg.diffusion_steps, rng);
    Scalar bound = 1.0 / std::sqrt(static_cast<Scalar>(cfg.d_model));
    blk.gcn_w = store.add(bn + ".gcn_w", uniform_init({cfg.d_model, cfg.d_model}, bound, rng));
    blocks.push_back(std::move(blk));
  }
}

EncoderOutput sts_cm_forward(const Var& view, const Var& adjacency, const data::GraphSpec& graph,
                             const EncoderConfig& cfg, const EncoderParams& params, uint64_t seed,
                             const EncoderNoise* noise, bool static_gcn) {
  const Shape& s = view->value.shape();
  if (s.size() != 4) throw ConfigError("encoder expects input of shape [B,P,N,d_in]");
  int64_t B = s[0], P = s[1], N = s[2];
  if (s[3] != cfg.d_in) throw ConfigError("encoder input channel mismatch");

  Var x = params.input_proj(view);  // B P N dm
  Tensor pet = temporal_pe(P, cfg.d_model).reshaped({1, P, 1, cfg.d_model});
  x = add(x, make_const(pet));
  Var pes = spatial_pe(graph, params.spe, cfg.gamma_min, cfg.gamma_max, cfg.d_model);
  x = add(x, reshape(pes, {1, 1, N, cfg.d_model}));

  Var a_dyn, a_fused;
  for (size_t bi = 0; bi < params.blocks.size(); ++bi) {
    const auto& blk = params.blocks[bi];
    // temporal self-attention per node
    Var xt = permute(x, {0, 2, 1, 3});  // B N P dm
    Var att = multi_head_attention(xt, xt, blk.attn, cfg.n_heads, cfg.probsparse_factor,
                                   mix_seed(seed, 0x5A00 + bi), nullptr);
    Var att_back = permute(att, {0, 2, 1, 3});
    x = blk.ln_attn(add(x, att_back));

    // dynamic-adjacency graph convolution per time step
    if (static_gcn) {
      a_dyn = row_normalize(adjacency);
    } else {
      const Tensor* block_noise = nullptr;
      if (noise) {
        if (noise->gumbel.size() <= bi) throw ConfigError("encoder noise: missing block entry");
        block_noise = &noise->gumbel[bi];
      }
      a_dyn = dynamic_graph_generator(x, adjacency, blk.dyn, cfg.omega, cfg.diffusion_steps,
                                      mix_seed(seed, 0xD600 + bi), block_noise, nullptr);
    }
    a_fused = mul(adjacency, a_dyn);
    Var g = di_gcn(x, adjacency, a_dyn, blk.gcn_w);
    x = blk.ln_gcn(add(x, g));
  }

  EncoderOutput out;
  out.z_seq = x;
  out.c_vec = reshape(slice(x, 1, P - 1, 1), {B, N, cfg.d_model});
  out.a_dyn = a_dyn;
  out.a_fused = a_fused;
  return out;
}

DecoderParams::DecoderParams(ParamStore& store, const std::string& name, const EncoderConfig& cfg, int64_t k,
                             Rng& rng) {
  Scalar bound = 1.0 / std::sqrt(static_cast<Scalar>(cfg.d_model));
  horizon_slots = store.add(name + ".horizon_slots", uniform_init({k, cfg.d_model}, bound, rng));
  for (int64_t b = 0; b < cfg.n_decoder_blocks; ++b) {
    DecoderBlockParams blk;
    std::string bn = name + ".block" + std::to_string(b);
    blk.self_attn = MultiHeadParams(store, bn + ".self_attn", cfg.d_model, rng);
    blk.cross_attn = MultiHeadParams(store, bn + ".cross_attn", cfg.d_model, rng);
    blk.ln_self = LayerNorm(store, bn + ".ln_self", cfg.d_model);
    blk.ln_cross = LayerNorm(store, bn + ".ln_cross", cfg.d_model);
    blocks.push_back(std::move(blk));
  }
  out_proj = Linear(store, name + ".out_proj", cfg.d_model, cfg.d_out, rng);
}

Var decoder_forward(const EncoderOutput& enc, const EncoderConfig& cfg, const DecoderParams& params,
                    int64_t k) {
  const Shape& zs = enc.z_seq->value.shape();
  int64_t B = zs[0], P = zs[1], N = zs[2];
  (void)P;

  // horizon query slots seeded with the per-node summary vector
  Var slots = reshape(params.horizon_slots, {1, k, 1, cfg.d_model});
  Var c = reshape(enc.c_vec, {B, 1, N, cfg.d_model});
  Var q = add(slots, c);  // B K N dm

  Tensor causal({k, k});
  for (int64_t i = 0; i < k; ++i) {
    for (int64_t j = i + 1; j < k; ++j) causal.at({i, j}) = -1e30;
  }

  Var kv = permute(enc.z_seq, {0, 2, 1, 3});  // B N P dm
  for (size_t bi = 0; bi < params.blocks.size(); ++bi) {
    const auto& blk = params.blocks[bi];
    Var qt = permute(q, {0, 2, 1, 3});  // B N K dm
    Var self = multi_head_attention(qt, qt, blk.self_attn, cfg.n_heads, cfg.probsparse_factor,
                                    mix_seed(0xDEC0, bi), &causal);
    qt = blk.ln_self(add(qt, self));
    Var cross = multi_head_attention(qt, kv, blk.cross_attn, cfg.n_heads, cfg.probsparse_factor,
                                     mix_seed(0xDEC1, bi), nullptr);
    qt = blk.ln_cross(add(qt, cross));
    q = permute(qt, {0, 2, 1, 3});  // B K N dm
  }
  return params.out_proj(q);  // B K N d_out
}

}  // namespace stsccl::model
