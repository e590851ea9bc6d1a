#include "stsccl/nn.hpp"

#include <cmath>

#include "stsccl/errors.hpp"

namespace stsccl {

Var ParamStore::add(const std::string& name, Tensor init) {
  if (has(name)) throw ConfigError("duplicate parameter name: " + name);
  Var v = make_leaf(std::move(init), true);
  items_.emplace_back(name, v);
  return v;
}

Var ParamStore::find(const std::string& name) const {
  for (const auto& [n, v] : items_) {
    if (n == name) return v;
  }
  throw ConfigError("unknown parameter: " + name);
}

bool ParamStore::has(const std::string& name) const {
  for (const auto& [n, v] : items_) {
    if (n == name) return true;
  }
  return false;
}

int64_t ParamStore::total_elements() const {
  int64_t n = 0;
  for (const auto& [name, v] : items_) n += v->value.numel();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& [name, v] : items_) {
    if (v->grad_alloc) {
      Scalar* d = v->grad.data();
      for (int64_t i = 0; i < v->grad.numel(); ++i) d[i] = 0.0;
    }
  }
}

Tensor uniform_init(Shape shape, Scalar bound, Rng& rng) {
  Tensor t(std::move(shape));
  for (int64_t i = 0; i < t.numel(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

Linear::Linear(ParamStore& store, const std::string& name, int64_t in, int64_t out, Rng& rng, bool bias) {
  Scalar bound = 1.0 / std::sqrt(static_cast<Scalar>(in));
  w = store.add(name + ".w", uniform_init({in, out}, bound, rng));
  if (bias) b = store.add(name + ".b", uniform_init({out}, bound, rng));
}

Var Linear::operator()(const Var& x) const {
  Var y = matmul(x, w);
  if (b) y = add(y, b);
  return y;
}

LayerNorm::LayerNorm(ParamStore& store, const std::string& name, int64_t d) {
  gain = store.add(name + ".g", Tensor::ones({d}));
  bias = store.add(name + ".b", Tensor::zeros({d}));
}

Var LayerNorm::operator()(const Var& x) const {
  Var mu = mean(x, {-1}, true);
  Var xc = sub(x, mu);
  Var var = mean(square(xc), {-1}, true);
  Var inv = pow_scalar(add_scalar(var, eps), -0.5);
  return add(mul(mul(xc, inv), gain), bias);
}

AdamW::AdamW(Scalar lr_, Scalar weight_decay_, Scalar beta1_, Scalar beta2_, Scalar eps_)
    : lr(lr_), weight_decay(weight_decay_), beta1(beta1_), beta2(beta2_), eps(eps_) {}

void AdamW::step(ParamStore& store) {
  auto& items = store.items();
  if (m_.size() != items.size()) {
    m_.clear();
    v_.clear();
    for (const auto& [name, p] : items) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }
  ++t_;
  Scalar bc1 = 1.0 - std::pow(beta1, static_cast<Scalar>(t_));
  Scalar bc2 = 1.0 - std::pow(beta2, static_cast<Scalar>(t_));
  for (size_t i = 0; i < items.size(); ++i) {
    Var p = items[i].second;
    if (!p->grad_alloc) continue;
    Scalar* w = p->value.data();
    const Scalar* g = p->grad.data();
    Scalar* mi = m_[i].data();
    Scalar* vi = v_[i].data();
    int64_t n = p->value.numel();
    for (int64_t j = 0; j < n; ++j) {
      mi[j] = beta1 * mi[j] + (1.0 - beta1) * g[j];
      vi[j] = beta2 * vi[j] + (1.0 - beta2) * g[j] * g[j];
      Scalar mhat = mi[j] / bc1;
      Scalar vhat = vi[j] / bc2;
      w[j] -= lr * (mhat / (std::sqrt(vhat) + eps) + weight_decay * w[j]);
    }
  }
}

Scalar clip_global_norm(ParamStore& store, Scalar max_norm) {
  Scalar sq = 0;
  for (const auto& [name, p] : store.items()) {
    if (!p->grad_alloc) continue;
    const Scalar* g = p->grad.data();
    for (int64_t i = 0; i < p->grad.numel(); ++i) sq += g[i] * g[i];
  }
  Scalar norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0) {
    Scalar s = max_norm / norm;
    for (auto& [name, p] : store.items()) {
      if (!p->grad_alloc) continue;
      Scalar* g = p->grad.data();
      for (int64_t i = 0; i < p->grad.numel(); ++i) g[i] *= s;
    }
  }
  return norm;
}

}  // namespace stsccl
