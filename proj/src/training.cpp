#include "stsccl/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <limits>

#include "stsccl/container.hpp"
#include "stsccl/errors.hpp"

namespace stsccl::train {

Variant parse_variant(const std::string& name) {
  if (name == "full") return Variant::full;
  if (name == "sts_cm_only") return Variant::sts_cm_only;
  if (name == "sts_cm_mvp") return Variant::sts_cm_mvp;
  if (name == "no_neg_filter") return Variant::no_neg_filter;
  if (name == "no_di_gcn") return Variant::no_di_gcn;
  if (name == "ba_only") return Variant::ba_only;
  if (name == "sa_only") return Variant::sa_only;
  throw ConfigError("unknown variant: " + name);
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::full: return "full";
    case Variant::sts_cm_only: return "sts_cm_only";
    case Variant::sts_cm_mvp: return "sts_cm_mvp";
    case Variant::no_neg_filter: return "no_neg_filter";
    case Variant::no_di_gcn: return "no_di_gcn";
    case Variant::ba_only: return "ba_only";
    case Variant::sa_only: return "sa_only";
  }
  return "?";
}

const std::vector<Variant>& all_variants() {
  // Table-3 row order: both contrastive stages stripped first, full model in
  // the middle, then the component knockouts and the one-augmenter variants.
  static const std::vector<Variant> v = {Variant::sts_cm_only, Variant::sts_cm_mvp,   Variant::full,
                                         Variant::no_neg_filter, Variant::no_di_gcn, Variant::ba_only,
                                         Variant::sa_only};
  return v;
}

void TrainConfig::validate() const {
  if (epsilon < 0) throw ConfigError("train.epsilon must be >= 0");
  if (batch_size < 1 || epochs < 1) throw ConfigError("batch_size and epochs must be >= 1");
  if (lr <= 0) throw ConfigError("train.lr must be positive");
  if (weight_decay < 0) throw ConfigError("train.weight_decay must be nonnegative");
  if (p < 1 || k < 1) throw ConfigError("window lengths must be >= 1");
  if (patience < 1) throw ConfigError("train.patience must be >= 1");
}

Tensor Normalizer::apply(const Tensor& x) const {
  if (mean.empty()) return x;
  Tensor out = x;
  int64_t d = x.dim(-1);
  int64_t rows = x.numel() / d;
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t c = 0; c < d; ++c) {
      out[r * d + c] = (out[r * d + c] - mean[static_cast<size_t>(c)]) / stdev[static_cast<size_t>(c)];
    }
  }
  return out;
}

Tensor Normalizer::invert(const Tensor& x) const {
  if (mean.empty()) return x;
  Tensor out = x;
  int64_t d = x.dim(-1);
  int64_t rows = x.numel() / d;
  for (int64_t r = 0; r < rows; ++r) {
    for (int64_t c = 0; c < d; ++c) {
      out[r * d + c] = out[r * d + c] * stdev[static_cast<size_t>(c)] + mean[static_cast<size_t>(c)];
    }
  }
  return out;
}

data::WindowBatch Normalizer::apply(const data::WindowBatch& b) const {
  data::WindowBatch out = b;
  out.history = apply(b.history);
  out.future = apply(b.future);
  out.day_lag = apply(b.day_lag);
  out.week_lag = apply(b.week_lag);
  return out;
}

Normalizer fit_normalizer(const data::TrafficSeries& series, data::IndexRange train_range) {
  int64_t d = series.d_in();
  Normalizer n;
  n.mean.assign(static_cast<size_t>(d), 0.0);
  n.stdev.assign(static_cast<size_t>(d), 0.0);
  int64_t count = (train_range.end - train_range.begin) * series.n_nodes();
  for (int64_t t = train_range.begin; t < train_range.end; ++t) {
    for (int64_t i = 0; i < series.n_nodes(); ++i) {
      for (int64_t c = 0; c < d; ++c) n.mean[static_cast<size_t>(c)] += series.values.at({t, i, c});
    }
  }
  for (int64_t c = 0; c < d; ++c) n.mean[static_cast<size_t>(c)] /= static_cast<double>(count);
  for (int64_t t = train_range.begin; t < train_range.end; ++t) {
    for (int64_t i = 0; i < series.n_nodes(); ++i) {
      for (int64_t c = 0; c < d; ++c) {
        double dv = series.values.at({t, i, c}) - n.mean[static_cast<size_t>(c)];
        n.stdev[static_cast<size_t>(c)] += dv * dv;
      }
    }
  }
  for (int64_t c = 0; c < d; ++c) {
    n.stdev[static_cast<size_t>(c)] = std::sqrt(n.stdev[static_cast<size_t>(c)] / static_cast<double>(count));
    if (n.stdev[static_cast<size_t>(c)] < 1e-12) n.stdev[static_cast<size_t>(c)] = 1.0;
  }
  return n;
}

ModelState build_model(const Config& cfg, int64_t d_in, uint64_t seed) {
  ModelState s;
  s.enc_cfg.d_model = cfg.integer("model.d_model", 32);
  s.enc_cfg.n_heads = cfg.integer("model.n_heads", 4);
  s.enc_cfg.n_blocks = cfg.integer("model.n_blocks", 4);
  s.enc_cfg.n_decoder_blocks = cfg.integer("model.n_decoder_blocks", 4);
  s.enc_cfg.probsparse_factor = cfg.num("model.probsparse_factor", 5.0);
  s.enc_cfg.omega = cfg.num("model.omega", 0.5);
  s.enc_cfg.diffusion_steps = cfg.integer("model.diffusion_steps", 2);
  s.enc_cfg.gamma_min = cfg.num("model.gamma_min", 0.1);
  s.enc_cfg.gamma_max = cfg.num("model.gamma_max", 10.0);
  s.enc_cfg.d_in = d_in;
  s.enc_cfg.d_out = d_in;
  s.enc_cfg.validate();

  s.aug_cfg.edge_mask_rate = cfg.num("aug.edge_mask_rate", 0.1);
  s.aug_cfg.attr_mask_rate = cfg.num("aug.attr_mask_rate", 0.1);
  s.aug_cfg.delta_ts = cfg.num("aug.delta_ts", 0.5);
  s.aug_cfg.generator_temperature = cfg.num("aug.generator_temperature", 0.5);
  s.aug_cfg.generator_hidden_dim = cfg.integer("aug.generator_hidden_dim", 16);
  s.aug_cfg.validate();

  s.cl_delta = cfg.num("cl.delta", 0.1);
  s.cl_top_u = cfg.integer("cl.top_u", 2);
  s.cl_d_proj = cfg.integer("cl.d_proj", 16);
  std::string fm = cfg.str("cl.filter_matrix", "con");
  if (fm != "con" && fm != "dist") throw ConfigError("cl.filter_matrix must be `con` or `dist`");
  s.cl_use_dist = fm == "dist";
  s.cl_dist_radius = cfg.num("cl.dist_radius", 0.5);
  if (s.cl_delta <= 0) throw ConfigError("cl.delta must be positive");

  s.horizon = cfg.integer("data.k", 3);

  Rng rng(mix_seed(seed, 0x1217));
  s.enc = model::EncoderParams(s.params, "encoder", s.enc_cfg, rng);
  s.dec = model::DecoderParams(s.params, "decoder", s.enc_cfg, s.horizon, rng);
  s.gen = aug::ViewGeneratorParams(s.params, "generator", d_in, s.aug_cfg.generator_hidden_dim, rng);
  s.heads = contrast::Heads(s.params, "heads", s.enc_cfg.d_model, s.horizon, s.cl_d_proj, rng);
  s.heads.delta = s.cl_delta;
  s.config_hash = cfg.hash();
  return s;
}

TrainConfig train_config_from(const Config& cfg) {
  TrainConfig t;
  t.epsilon = cfg.num("train.epsilon", 0.4);
  t.batch_size = cfg.integer("train.batch_size", 64);
  t.epochs = cfg.integer("train.epochs", 100);
  t.lr = cfg.num("train.lr", 1e-4);
  t.weight_decay = cfg.num("train.weight_decay", 1e-4);
  t.seed = static_cast<uint64_t>(cfg.integer("train.seed", 0));
  t.p = cfg.integer("data.p", 12);
  t.k = cfg.integer("data.k", 3);
  t.patience = cfg.integer("train.patience", 10);
  t.grad_clip = cfg.num("train.grad_clip", 5.0);
  t.variant = parse_variant(cfg.str("train.variant", "full"));
  t.checkpoint_every = cfg.integer("train.checkpoint_every", 0);
  t.validate();
  return t;
}

Var prediction_loss(const Var& pred, const Var& truth) {
  if (!(pred->value.shape() == truth->value.shape())) {
    throw ConfigError("prediction_loss shape mismatch: " + shape_str(pred->value.shape()) + " vs " +
                      shape_str(truth->value.shape()));
  }
  return mean_all(square(sub(pred, truth)));
}

double prediction_loss_value(const Tensor& pred, const Tensor& truth) {
  if (!(pred.shape() == truth.shape())) throw ConfigError("prediction_loss shape mismatch");
  double s = 0;
  for (int64_t i = 0; i < pred.numel(); ++i) {
    double d = pred[i] - truth[i];
    s += d * d;
  }
  return s / static_cast<double>(pred.numel());
}

namespace {

// Encode a future window under a view's perturbations, tape-free; the result
// is the stop-gradient target side of the mutual-view losses.
Tensor encode_future(const Tensor& future, const Tensor& adjacency, const data::GraphSpec& graph,
                     const ModelState& state, uint64_t seed, bool static_gcn) {
  NoGradGuard ng;
  auto out = model::sts_cm_forward(make_const(future), make_const(adjacency), graph, state.enc_cfg,
                                   state.enc, seed, nullptr, static_gcn);
  return out.z_seq->value;
}

Tensor apply_choice_attr_mask(const Tensor& x, const Tensor& choices) {
  // zero the feature slices of nodes whose choice column 1 is active
  Tensor out = x;
  int64_t N = x.dim(2), D = x.dim(3);
  int64_t BT = x.dim(0) * x.dim(1);
  for (int64_t n = 0; n < N; ++n) {
    if (choices.at({n, 1}) >= 0.5) {
      for (int64_t bt = 0; bt < BT; ++bt) {
        for (int64_t d = 0; d < D; ++d) out[(bt * N + n) * D + d] = 0.0;
      }
    }
  }
  return out;
}

struct Snapshot {
  std::vector<Tensor> params, m, v;
  int64_t adam_t = 0;
};

Snapshot take_snapshot(const ModelState& state, AdamW& opt) {
  Snapshot s;
  for (const auto& [name, p] : state.params.items()) s.params.push_back(p->value);
  s.m = opt.m();
  s.v = opt.v();
  s.adam_t = opt.t();
  return s;
}

void restore_snapshot(ModelState& state, AdamW& opt, const Snapshot& s) {
  auto& items = state.params.items();
  for (size_t i = 0; i < items.size(); ++i) {
    const_cast<Var&>(items[i].second)->value = s.params[i];
  }
  opt.m() = s.m;
  opt.v() = s.v;
  opt.set_t(s.adam_t);
}

}  // namespace

LossBundle train_step(ModelState& state, AdamW& opt, const data::WindowBatch& raw_batch,
                      const data::GraphSpec& graph, const TrainConfig& cfg,
                      const contrast::NegativeFilter& filter, uint64_t step_seed) {
  data::WindowBatch batch = state.norm.apply(raw_batch);
  const bool contrastive = cfg.epsilon > 0 && cfg.variant != Variant::sts_cm_only;
  const bool want_sc = contrastive && cfg.variant != Variant::sts_cm_mvp;
  const bool static_gcn = cfg.variant == Variant::no_di_gcn;
  int64_t B = batch.B();

  aug::AugmentationConfig acfg = state.aug_cfg;

  // view feeding the prediction branch (basic, unless sa_only)
  Var view_b, adj_b;
  if (cfg.variant == Variant::sa_only) {
    acfg.seed = mix_seed(step_seed, 0xB0);
    auto sv = aug::strong_augment(batch, graph, state.gen, acfg);
    view_b = sv.view;
    adj_b = sv.adjacency;
  } else {
    acfg.seed = mix_seed(step_seed, 0xB0);
    auto bv = aug::basic_augment(batch, graph, acfg);
    view_b = make_const(bv.view);
    adj_b = make_const(bv.adjacency);
  }

  auto enc_b = model::sts_cm_forward(view_b, adj_b, graph, state.enc_cfg, state.enc,
                                     mix_seed(step_seed, 0xE0), nullptr, static_gcn);
  Var pred = model::decoder_forward(enc_b, state.enc_cfg, state.dec, cfg.k);
  Var l_pred = prediction_loss(pred, make_const(batch.future));

  LossBundle bundle;
  Var total = l_pred;

  if (contrastive) {
    Var view_s, adj_s;
    Tensor strong_choices({graph.n_nodes, 3});
    for (int64_t n = 0; n < graph.n_nodes; ++n) strong_choices.at({n, 2}) = 1.0;  // unchanged
    acfg.seed = mix_seed(step_seed, 0x51);
    if (cfg.variant == Variant::ba_only) {
      auto bv = aug::basic_augment(batch, graph, acfg);
      view_s = make_const(bv.view);
      adj_s = make_const(bv.adjacency);
    } else {
      auto sv = aug::strong_augment(batch, graph, state.gen, acfg);
      view_s = sv.view;
      adj_s = sv.adjacency;
      strong_choices = sv.choices;
    }
    auto enc_s = model::sts_cm_forward(view_s, adj_s, graph, state.enc_cfg, state.enc,
                                       mix_seed(step_seed, 0xE5), nullptr, static_gcn);

    // stop-gradient targets: re-encode the future window under each view
    Tensor fut_b = aug::attr_mask(batch.future, acfg.attr_mask_rate, mix_seed(step_seed, 0xFB));
    Tensor z_future_b = encode_future(fut_b, adj_b->value, graph, state, mix_seed(step_seed, 0xF0), static_gcn);
    Tensor fut_s = cfg.variant == Variant::ba_only
                       ? aug::attr_mask(batch.future, acfg.attr_mask_rate, mix_seed(step_seed, 0xFC))
                       : apply_choice_attr_mask(batch.future, strong_choices);
    Tensor z_future_s = encode_future(fut_s, adj_s->value, graph, state, mix_seed(step_seed, 0xF5), static_gcn);

    Var l_sts_b = contrast::sts_loss(enc_b.c_vec, make_const(z_future_s), state.heads.w_k);
    Var l_sts_s = contrast::sts_loss(enc_s.c_vec, make_const(z_future_b), state.heads.w_k);
    Var l_cl = add(l_sts_b, l_sts_s);
    bundle.l_sts_b = l_sts_b->value.item();
    bundle.l_sts_s = l_sts_s->value.item();

    if (want_sc) {
      Var h_b = contrast::projection_head(enc_b.c_vec, state.heads);  // B N d_proj
      Var h_s = contrast::projection_head(enc_s.c_vec, state.heads);
      Var l_sc_sum;
      for (int64_t b = 0; b < B; ++b) {
        Var hb = reshape(slice(h_b, 0, b, 1), {graph.n_nodes, state.cl_d_proj});
        Var hs = reshape(slice(h_s, 0, b, 1), {graph.n_nodes, state.cl_d_proj});
        Var l = contrast::semantic_contextual_loss(hb, hs, filter, state.cl_delta);
        l_sc_sum = l_sc_sum ? add(l_sc_sum, l) : l;
      }
      Var l_sc = scale(l_sc_sum, 1.0 / static_cast<double>(B));
      bundle.l_sc = l_sc->value.item();
      l_cl = add(l_cl, l_sc);
    }
    total = add(l_pred, scale(l_cl, cfg.epsilon));
  }

  bundle.l_pred = l_pred->value.item();
  bundle.total = total->value.item();
  if (!std::isfinite(bundle.total)) {
    throw NumericError("non-finite training loss: l_pred=" + std::to_string(bundle.l_pred) +
                       " l_sts_b=" + std::to_string(bundle.l_sts_b) + " l_sts_s=" + std::to_string(bundle.l_sts_s) +
                       " l_sc=" + std::to_string(bundle.l_sc));
  }

  state.params.zero_grad();
  backward(total);
  clip_global_norm(state.params, cfg.grad_clip);
  opt.step(state.params);
  return bundle;
}

double evaluate_pred_loss(ModelState& state, const data::TrafficSeries& series, const data::GraphSpec& graph,
                          data::IndexRange range, const TrainConfig& cfg) {
  NoGradGuard ng;
  auto batches = data::make_windows(series, range, cfg.p, cfg.k, cfg.batch_size, mix_seed(cfg.seed, 0x7A1));
  double sse = 0;
  int64_t count = 0;
  Var adj = make_const(graph.a_con);
  for (size_t bi = 0; bi < batches.size(); ++bi) {
    data::WindowBatch batch = state.norm.apply(batches[bi]);
    auto enc = model::sts_cm_forward(make_const(batch.history), adj, graph, state.enc_cfg, state.enc,
                                     mix_seed(0xE7A1, bi), nullptr, cfg.variant == Variant::no_di_gcn);
    Var pred = model::decoder_forward(enc, state.enc_cfg, state.dec, cfg.k);
    for (int64_t i = 0; i < pred->value.numel(); ++i) {
      double d = pred->value[i] - batch.future[i];
      sse += d * d;
    }
    count += pred->value.numel();
  }
  return sse / static_cast<double>(count);
}

Forecasts predict_range(ModelState& state, const data::TrafficSeries& series, const data::GraphSpec& graph,
                        data::IndexRange range, const TrainConfig& cfg) {
  NoGradGuard ng;
  auto batches = data::make_windows(series, range, cfg.p, cfg.k, cfg.batch_size, mix_seed(cfg.seed, 0x7A2));
  int64_t total_samples = 0;
  for (const auto& b : batches) total_samples += b.B();
  int64_t N = series.n_nodes(), D = series.d_in();
  Forecasts f;
  f.pred = Tensor({total_samples, cfg.k, N, D});
  f.truth = Tensor({total_samples, cfg.k, N, D});
  Var adj = make_const(graph.a_con);
  int64_t row = 0;
  for (size_t bi = 0; bi < batches.size(); ++bi) {
    const auto& raw = batches[bi];
    data::WindowBatch batch = state.norm.apply(raw);
    auto enc = model::sts_cm_forward(make_const(batch.history), adj, graph, state.enc_cfg, state.enc,
                                     mix_seed(0xE7A2, bi), nullptr, cfg.variant == Variant::no_di_gcn);
    Var pred = model::decoder_forward(enc, state.enc_cfg, state.dec, cfg.k);
    Tensor denorm = state.norm.invert(pred->value);
    int64_t n = raw.B() * cfg.k * N * D;
    std::copy(denorm.data(), denorm.data() + n, f.pred.data() + row * cfg.k * N * D);
    std::copy(raw.future.data(), raw.future.data() + n, f.truth.data() + row * cfg.k * N * D);
    row += raw.B();
  }
  return f;
}

FitResult fit(ModelState& state, const data::TrafficSeries& series, const data::GraphSpec& graph,
              const data::Splits& splits, const TrainConfig& cfg, const std::string& out_dir) {
  cfg.validate();
  state.norm = fit_normalizer(series, splits.train);

  contrast::NegativeFilter filter;
  if (cfg.variant == Variant::no_neg_filter) {
    filter.allowed.resize(static_cast<size_t>(graph.n_nodes));
    for (int64_t i = 0; i < graph.n_nodes; ++i) {
      for (int64_t j = 0; j < graph.n_nodes; ++j) {
        if (j != i) filter.allowed[static_cast<size_t>(i)].push_back(j);
      }
    }
  } else {
    filter = contrast::build_negative_filter(graph, state.cl_top_u, state.cl_use_dist, state.cl_dist_radius);
  }

  AdamW opt(cfg.lr, cfg.weight_decay);
  FitResult res;
  Snapshot best;
  double best_val = std::numeric_limits<double>::infinity();
  int64_t best_epoch = -1, non_improving = 0, global_step = 0;

  for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    auto batches = data::make_windows(series, splits.train, cfg.p, cfg.k, cfg.batch_size,
                                      mix_seed(cfg.seed, 0xE90C40 + static_cast<uint64_t>(epoch)));
    for (const auto& batch : batches) {
      LossBundle b = train_step(state, opt, batch, graph, cfg, filter,
                                mix_seed(cfg.seed, 0x57E9 + static_cast<uint64_t>(global_step) * 2654435761ULL));
      b.epoch = epoch;
      b.step = global_step++;
      res.history.push_back(b);
    }
    double val = evaluate_pred_loss(state, series, graph, splits.val, cfg);
    res.val_history.push_back(val);
    if (val < best_val) {
      best_val = val;
      best_epoch = epoch;
      best = take_snapshot(state, opt);
      non_improving = 0;
    } else {
      ++non_improving;
    }
    if (!out_dir.empty() && cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0) {
      save_checkpoint(out_dir + "/epoch_" + std::to_string(epoch) + ".ckpt", state, opt, cfg.seed, epoch,
                      global_step);
    }
    if (non_improving >= cfg.patience) break;
  }

  if (best_epoch >= 0) restore_snapshot(state, opt, best);
  res.best_epoch = best_epoch;
  res.best_val = best_val;
  res.steps = global_step;
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    save_checkpoint(out_dir + "/best.ckpt", state, opt, cfg.seed, best_epoch, global_step);
  }
  return res;
}

void save_checkpoint(const std::string& path, const ModelState& state, const AdamW& opt, uint64_t seed,
                     int64_t epoch, int64_t step) {
  std::vector<NamedArray> arrays;
  arrays.push_back(NamedArray::from_i64(
      "__meta", {1, static_cast<int64_t>(seed), epoch, step, const_cast<AdamW&>(opt).t()}));
  arrays.push_back(NamedArray::from_string("__hash", state.config_hash));
  Tensor mean_t({std::max<int64_t>(1, static_cast<int64_t>(state.norm.mean.size()))});
  Tensor std_t(mean_t.shape());
  for (size_t i = 0; i < state.norm.mean.size(); ++i) {
    mean_t[static_cast<int64_t>(i)] = state.norm.mean[i];
    std_t[static_cast<int64_t>(i)] = state.norm.stdev[i];
  }
  arrays.push_back(NamedArray::from_tensor("__norm_mean", mean_t));
  arrays.push_back(NamedArray::from_tensor("__norm_std", std_t));
  arrays.push_back(
      NamedArray::from_i64("__norm_present", {state.norm.mean.empty() ? int64_t{0} : int64_t{1}}));
  auto& m = const_cast<AdamW&>(opt).m();
  auto& v = const_cast<AdamW&>(opt).v();
  const auto& items = state.params.items();
  for (size_t i = 0; i < items.size(); ++i) {
    arrays.push_back(NamedArray::from_tensor("p:" + items[i].first, items[i].second->value));
    if (m.size() == items.size()) {
      arrays.push_back(NamedArray::from_tensor("m:" + items[i].first, m[i]));
      arrays.push_back(NamedArray::from_tensor("v:" + items[i].first, v[i]));
    }
  }
  write_container(path, "STSK", arrays);
}

CheckpointMeta load_checkpoint(const std::string& path, ModelState& state, AdamW& opt, bool check_hash) {
  auto arrays = read_container(path, "STSK");
  const auto& meta = require_array(arrays, "__meta", path);
  if (meta.i64.size() < 5 || meta.i64[0] != 1) throw LoadError("unsupported checkpoint version in " + path);
  const auto& hash = require_array(arrays, "__hash", path);
  if (check_hash && hash.to_string() != state.config_hash) {
    throw LoadError("checkpoint config hash " + hash.to_string() + " does not match current config " +
                    state.config_hash);
  }
  const auto& present = require_array(arrays, "__norm_present", path);
  if (present.i64.at(0) == 1) {
    const auto& mean_t = require_array(arrays, "__norm_mean", path);
    const auto& std_t = require_array(arrays, "__norm_std", path);
    state.norm.mean.assign(mean_t.f64.begin(), mean_t.f64.end());
    state.norm.stdev.assign(std_t.f64.begin(), std_t.f64.end());
  } else {
    state.norm.mean.clear();
    state.norm.stdev.clear();
  }
  auto& items = state.params.items();
  bool have_opt = find_array(arrays, "m:" + items[0].first) != nullptr;
  auto& m = opt.m();
  auto& v = opt.v();
  if (have_opt) {
    m.resize(items.size());
    v.resize(items.size());
  }
  for (size_t i = 0; i < items.size(); ++i) {
    const auto& p = require_array(arrays, "p:" + items[i].first, path);
    if (!(p.shape == items[i].second->value.shape())) {
      throw LoadError("checkpoint parameter `" + items[i].first + "` has shape " + shape_str(p.shape) +
                      ", expected " + shape_str(items[i].second->value.shape()));
    }
    const_cast<Var&>(items[i].second)->value = p.to_tensor();
    if (have_opt) {
      m[i] = require_array(arrays, "m:" + items[i].first, path).to_tensor();
      v[i] = require_array(arrays, "v:" + items[i].first, path).to_tensor();
    }
  }
  CheckpointMeta cm;
  cm.seed = static_cast<uint64_t>(meta.i64[1]);
  cm.epoch = meta.i64[2];
  cm.step = meta.i64[3];
  opt.set_t(meta.i64[4]);
  return cm;
}

}  // namespace stsccl::train
