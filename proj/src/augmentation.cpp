#include "stsccl/augmentation.hpp"

#include <cmath>

#include "stsccl/encoder.hpp"
#include "stsccl/errors.hpp"
#include "stsccl/rng.hpp"

namespace stsccl::aug {

void AugmentationConfig::validate() const {
  if (edge_mask_rate < 0 || edge_mask_rate >= 1) throw ConfigError("edge_mask_rate must be in [0,1)");
  if (attr_mask_rate < 0 || attr_mask_rate >= 1) throw ConfigError("attr_mask_rate must be in [0,1)");
  if (delta_ts <= 0 || delta_ts >= 1) throw ConfigError("delta_ts must be in (0,1)");
  if (generator_temperature <= 0) throw ConfigError("generator_temperature must be positive");
  if (generator_hidden_dim < 1) throw ConfigError("generator_hidden_dim must be >= 1");
}

Tensor edge_mask(const Tensor& a_con, double rate, uint64_t seed) {
  if (rate < 0 || rate >= 1) throw ConfigError("edge_mask rate must be in [0,1)");
  if (rate == 0) return a_con;
  int64_t N = a_con.dim(0);
  std::vector<std::pair<int64_t, int64_t>> edges;
  for (int64_t i = 0; i < N; ++i) {
    for (int64_t j = i + 1; j < N; ++j) {
      if (a_con.at({i, j}) != 0.0) edges.emplace_back(i, j);
    }
  }
  int64_t n_mask = static_cast<int64_t>(std::floor(rate * static_cast<double>(edges.size())));
  Tensor out = a_con;
  if (n_mask == 0) return out;
  Rng rng(seed);
  auto pick = rng.sample_without_replacement(static_cast<int64_t>(edges.size()), n_mask);
  for (int64_t e : pick) {
    auto [i, j] = edges[static_cast<size_t>(e)];
    out.at({i, j}) = 0.0;
    out.at({j, i}) = 0.0;
  }
  return out;
}

Tensor attr_mask(const Tensor& x, double rate, uint64_t seed) {
  if (rate < 0 || rate >= 1) throw ConfigError("attr_mask rate must be in [0,1)");
  if (rate == 0) return x;
  int64_t n_mask = static_cast<int64_t>(std::floor(rate * static_cast<double>(x.numel())));
  Tensor out = x;
  if (n_mask == 0) return out;
  Rng rng(seed);
  auto pick = rng.sample_without_replacement(x.numel(), n_mask);
  for (int64_t i : pick) out[i] = 0.0;
  return out;
}

Var temporal_scale_fusion_with(const Var& history, const data::WindowBatch& batch, double alpha, double beta) {
  int64_t B = batch.B();
  Tensor a_coef({B, 1, 1, 1});
  Tensor b_coef({B, 1, 1, 1});
  Tensor h_coef({B, 1, 1, 1});
  bool all_identity = true;
  for (int64_t i = 0; i < B; ++i) {
    double a = batch.day_is_copy[static_cast<size_t>(i)] ? 0.0 : alpha;
    double b = batch.week_is_copy[static_cast<size_t>(i)] ? 0.0 : beta;
    a_coef[i] = a;
    b_coef[i] = b;
    h_coef[i] = 1.0 - a - b;
    if (a != 0.0 || b != 0.0) all_identity = false;
  }
  if (all_identity) return history;  // bit-identical passthrough
  Var fused = mul(history, make_const(h_coef));
  fused = add(fused, mul(make_const(batch.day_lag), make_const(a_coef)));
  fused = add(fused, mul(make_const(batch.week_lag), make_const(b_coef)));
  return fused;
}

FusionResult temporal_scale_fusion(const Var& history, const data::WindowBatch& batch, double delta_ts,
                                   uint64_t seed) {
  if (delta_ts <= 0 || delta_ts >= 1) throw ConfigError("delta_ts must be in (0,1)");
  Rng rng(seed);
  FusionResult r;
  r.alpha = rng.uniform(delta_ts, 1.0) / 2.0;
  r.beta = rng.uniform(delta_ts, 1.0) / 2.0;
  r.fused = temporal_scale_fusion_with(history, batch, r.alpha, r.beta);
  return r;
}

BasicView basic_augment(const data::WindowBatch& batch, const data::GraphSpec& graph,
                        const AugmentationConfig& cfg) {
  cfg.validate();
  BasicView out;
  out.adjacency = edge_mask(graph.a_con, cfg.edge_mask_rate, mix_seed(cfg.seed, 0xE1));
  out.adj_mask = Tensor(out.adjacency.shape(), 1.0);
  for (int64_t i = 0; i < out.adjacency.numel(); ++i) {
    if (graph.a_con[i] != 0.0 && out.adjacency[i] == 0.0) out.adj_mask[i] = 0.0;
  }
  Tensor masked = attr_mask(batch.history, cfg.attr_mask_rate, mix_seed(cfg.seed, 0xA7));
  auto fusion = temporal_scale_fusion(make_const(masked), batch, cfg.delta_ts, mix_seed(cfg.seed, 0xF5));
  out.view = fusion.fused->value;
  out.alpha = fusion.alpha;
  out.beta = fusion.beta;
  return out;
}

ViewGeneratorParams::ViewGeneratorParams(ParamStore& store, const std::string& name, int64_t d_in,
                                         int64_t hidden, Rng& rng) {
  l1 = Linear(store, name + ".l1", 2 * d_in, hidden, rng);
  l2 = Linear(store, name + ".l2", 2 * hidden, hidden, rng);
  head = Linear(store, name + ".head", hidden, 3, rng);
}

GeneratorResult view_generator_forward(const Tensor& history, const data::GraphSpec& graph,
                                       const Tensor& base_adjacency, const ViewGeneratorParams& params,
                                       double temperature, uint64_t seed, bool hard, const Tensor* noise) {
  const Shape& s = history.shape();
  if (s.size() != 4) throw ConfigError("view generator expects [B,P,N,d_in] input");
  int64_t B = s[0], P = s[1], N = s[2], D = s[3];

  // per-node features pooled over batch and window
  Tensor feat({N, D});
  for (int64_t b = 0; b < B; ++b) {
    for (int64_t t = 0; t < P; ++t) {
      for (int64_t n = 0; n < N; ++n) {
        for (int64_t c = 0; c < D; ++c) {
          feat.at({n, c}) += history.at({b, t, n, c});
        }
      }
    }
  }
  for (int64_t i = 0; i < feat.numel(); ++i) feat[i] /= static_cast<double>(B * P);

  // mean aggregation over true neighbors (self excluded)
  Tensor neigh({N, N});
  for (int64_t i = 0; i < N; ++i) {
    double deg = 0;
    for (int64_t j = 0; j < N; ++j) {
      if (j != i && graph.a_con.at({i, j}) != 0.0) deg += 1.0;
    }
    if (deg > 0) {
      for (int64_t j = 0; j < N; ++j) {
        if (j != i && graph.a_con.at({i, j}) != 0.0) neigh.at({i, j}) = 1.0 / deg;
      }
    }
  }
  Var agg_mat = make_const(neigh);
  Var h0 = make_const(feat);
  Var e0 = matmul(agg_mat, h0);
  Var h1 = tanh_(params.l1(concat({h0, e0}, 1)));
  Var e1 = matmul(agg_mat, h1);
  Var h2 = tanh_(params.l2(concat({h1, e1}, 1)));
  Var logits = params.head(h2);  // N x 3
  if (!logits->value.all_finite()) throw NumericError("view generator produced non-finite logits");

  Var choices = model::gumbel_softmax(logits, temperature, hard, mix_seed(seed, 0x6B), noise);

  // column 0: edge mask, column 1: attribute mask, column 2: unchanged
  Var edge_keep = sub(make_const(Tensor({N, 1}, 1.0)), slice(choices, 1, 0, 1));
  Var attr_keep = sub(make_const(Tensor({N, 1}, 1.0)), slice(choices, 1, 1, 1));

  GeneratorResult r;
  r.logits = logits;
  r.choices = choices;
  r.strong_history = mul(make_const(history), reshape(attr_keep, {1, 1, N, 1}));

  // edge-masked nodes lose their incident off-diagonal edges, symmetrically;
  // self-loops are never masked
  Tensor diag({N, N});
  Tensor offdiag = base_adjacency;
  for (int64_t i = 0; i < N; ++i) {
    diag.at({i, i}) = base_adjacency.at({i, i});
    offdiag.at({i, i}) = 0.0;
  }
  Var keep_outer = matmul(edge_keep, transpose2(edge_keep));  // N x N
  r.strong_adjacency = add(make_const(diag), mul(make_const(offdiag), keep_outer));
  return r;
}

StrongView strong_augment(const data::WindowBatch& batch, const data::GraphSpec& graph,
                          const ViewGeneratorParams& params, const AugmentationConfig& cfg) {
  cfg.validate();
  auto gen = view_generator_forward(batch.history, graph, graph.a_con, params, cfg.generator_temperature,
                                    mix_seed(cfg.seed, 0x57), /*hard=*/true, nullptr);
  auto fusion = temporal_scale_fusion(gen.strong_history, batch, cfg.delta_ts, mix_seed(cfg.seed, 0xF6));
  StrongView out;
  out.view = fusion.fused;
  out.adjacency = gen.strong_adjacency;
  out.choices = gen.choices->value;
  out.alpha = fusion.alpha;
  out.beta = fusion.beta;
  return out;
}

}  // namespace stsccl::aug
