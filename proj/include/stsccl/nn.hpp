#pragma once

#include <string>
#include <utility>
#include <vector>

#include "stsccl/rng.hpp"
#include "stsccl/tensor.hpp"

namespace stsccl {

// Ordered, named collection of trainable leaves. Iteration order is creation
// order, which fixes optimizer and checkpoint layouts.
class ParamStore {
 public:
  Var add(const std::string& name, Tensor init);
  Var find(const std::string& name) const;  // throws if absent
  bool has(const std::string& name) const;
  const std::vector<std::pair<std::string, Var>>& items() const { return items_; }
  int64_t total_elements() const;
  void zero_grad();

 private:
  std::vector<std::pair<std::string, Var>> items_;
};

Tensor uniform_init(Shape shape, Scalar bound, Rng& rng);

struct Linear {
  Var w;  // [in, out]
  Var b;  // [out] or null
  Linear() = default;
  Linear(ParamStore& store, const std::string& name, int64_t in, int64_t out, Rng& rng, bool bias = true);
  Var operator()(const Var& x) const;  // [*, in] -> [*, out]
};

struct LayerNorm {
  Var gain;  // [d]
  Var bias;  // [d]
  Scalar eps = 1e-5;
  LayerNorm() = default;
  LayerNorm(ParamStore& store, const std::string& name, int64_t d);
  Var operator()(const Var& x) const;  // normalizes the last dim
};

// Adam with decoupled weight decay. State arrays follow store order.
class AdamW {
 public:
  AdamW() = default;
  AdamW(Scalar lr, Scalar weight_decay, Scalar beta1 = 0.9, Scalar beta2 = 0.999, Scalar eps = 1e-8);
  void step(ParamStore& store);
  int64_t t() const { return t_; }

  Scalar lr = 1e-4, weight_decay = 0.0, beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  std::vector<Tensor>& m() { return m_; }
  std::vector<Tensor>& v() { return v_; }
  void set_t(int64_t t) { t_ = t; }

 private:
  std::vector<Tensor> m_, v_;
  int64_t t_ = 0;
};

// Scales all gradients so the global L2 norm is at most max_norm. Returns the
// pre-clip norm.
Scalar clip_global_norm(ParamStore& store, Scalar max_norm);

}  // namespace stsccl
