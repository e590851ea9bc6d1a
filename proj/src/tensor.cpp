#include "stsccl/tensor.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <sstream>

#include "stsccl/errors.hpp"

namespace stsccl {

int64_t numel_of(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << "]";
  return os.str();
}

std::vector<int64_t> row_major_strides(const Shape& s) {
  std::vector<int64_t> st(s.size(), 1);
  for (int64_t i = static_cast<int64_t>(s.size()) - 2; i >= 0; --i) {
    st[static_cast<size_t>(i)] = st[static_cast<size_t>(i + 1)] * s[static_cast<size_t>(i + 1)];
  }
  return st;
}

Shape broadcast_shapes(const Shape& a, const Shape& b) {
  size_t nd = std::max(a.size(), b.size());
  Shape out(nd, 1);
  for (size_t i = 0; i < nd; ++i) {
    int64_t da = i < nd - a.size() ? 1 : a[i - (nd - a.size())];
    int64_t db = i < nd - b.size() ? 1 : b[i - (nd - b.size())];
    if (da != db && da != 1 && db != 1) {
      throw ConfigError("broadcast mismatch " + shape_str(a) + " vs " + shape_str(b));
    }
    out[i] = std::max(da, db);
  }
  return out;
}

Tensor::Tensor(Shape shape) : shape_(std::move(shape)), data_(static_cast<size_t>(numel_of(shape_)), 0.0) {}
Tensor::Tensor(Shape shape, Scalar fill)
    : shape_(std::move(shape)), data_(static_cast<size_t>(numel_of(shape_)), fill) {}
Tensor::Tensor(Shape shape, std::vector<Scalar> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (static_cast<int64_t>(data_.size()) != numel_of(shape_)) {
    throw ConfigError("tensor data size does not match shape " + shape_str(shape_));
  }
}

Tensor Tensor::eye(int64_t n) {
  Tensor t({n, n});
  for (int64_t i = 0; i < n; ++i) t.data()[i * n + i] = 1.0;
  return t;
}

int64_t Tensor::dim(int64_t i) const {
  int64_t nd = ndim();
  if (i < 0) i += nd;
  return shape_[static_cast<size_t>(i)];
}

Scalar& Tensor::at(std::initializer_list<int64_t> idx) {
  auto st = row_major_strides(shape_);
  int64_t off = 0;
  size_t d = 0;
  for (int64_t i : idx) off += i * st[d++];
  return data_[static_cast<size_t>(off)];
}

Scalar Tensor::at(std::initializer_list<int64_t> idx) const {
  return const_cast<Tensor*>(this)->at(idx);
}

Tensor Tensor::reshaped(Shape shape) const {
  if (numel_of(shape) != numel()) {
    throw ConfigError("reshape " + shape_str(shape_) + " -> " + shape_str(shape) + " changes element count");
  }
  Tensor t = *this;
  // reuse data, swap shape
  Tensor out(std::move(shape), std::vector<Scalar>(t.data(), t.data() + t.numel()));
  return out;
}

bool Tensor::all_finite() const {
  for (Scalar v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Scalar Tensor::item() const {
  if (numel() != 1) throw ConfigError("item() on tensor of shape " + shape_str(shape_));
  return data_[0];
}

// ---------------------------------------------------------------------
// broadcast iteration
// ---------------------------------------------------------------------

namespace {

// Effective strides of `in` against broadcast output shape `out` (0 where broadcast).
std::vector<int64_t> effective_strides(const Shape& out, const Shape& in) {
  size_t nd = out.size();
  std::vector<int64_t> eff(nd, 0);
  auto ist = row_major_strides(in);
  size_t off = nd - in.size();
  for (size_t i = 0; i < in.size(); ++i) {
    eff[off + i] = (in[i] == 1 && out[off + i] != 1) ? 0 : ist[i];
  }
  return eff;
}

template <class F>
void broadcast_apply(const Shape& out, const Shape& ash, const Shape& bsh, F&& f) {
  int64_t total = numel_of(out);
  if (ash == out && bsh == out) {
    for (int64_t i = 0; i < total; ++i) f(i, i, i);
    return;
  }
  size_t nd = out.size();
  auto sa = effective_strides(out, ash);
  auto sb = effective_strides(out, bsh);
  std::vector<int64_t> idx(nd, 0);
  int64_t offa = 0, offb = 0;
  for (int64_t i = 0; i < total; ++i) {
    f(i, offa, offb);
    for (int64_t d = static_cast<int64_t>(nd) - 1; d >= 0; --d) {
      size_t ud = static_cast<size_t>(d);
      ++idx[ud];
      offa += sa[ud];
      offb += sb[ud];
      if (idx[ud] < out[ud]) break;
      idx[ud] = 0;
      offa -= sa[ud] * out[ud];
      offb -= sb[ud] * out[ud];
    }
  }
}

}  // namespace

Tensor ew_binary(const Tensor& a, const Tensor& b, Scalar (*f)(Scalar, Scalar)) {
  Shape out_shape = broadcast_shapes(a.shape(), b.shape());
  Tensor out(out_shape);
  broadcast_apply(out_shape, a.shape(), b.shape(), [&](int64_t o, int64_t ia, int64_t ib) {
    out[o] = f(a[ia], b[ib]);
  });
  return out;
}

Tensor sum_value(const Tensor& a, const std::vector<int64_t>& axes, bool keepdims) {
  int64_t nd = a.ndim();
  std::vector<bool> red(static_cast<size_t>(nd), false);
  for (int64_t ax : axes) {
    if (ax < 0) ax += nd;
    red[static_cast<size_t>(ax)] = true;
  }
  Shape kshape = a.shape();
  for (int64_t i = 0; i < nd; ++i) {
    if (red[static_cast<size_t>(i)]) kshape[static_cast<size_t>(i)] = 1;
  }
  Tensor out(kshape);
  auto ost = row_major_strides(kshape);
  auto ist = row_major_strides(a.shape());
  int64_t total = a.numel();
  std::vector<int64_t> idx(static_cast<size_t>(nd), 0);
  int64_t oidx = 0;
  for (int64_t i = 0; i < total; ++i) {
    out[oidx] += a[i];
    for (int64_t d = nd - 1; d >= 0; --d) {
      size_t ud = static_cast<size_t>(d);
      ++idx[ud];
      if (!red[ud]) oidx += ost[ud];
      if (idx[ud] < a.shape()[ud]) break;
      idx[ud] = 0;
      if (!red[ud]) oidx -= ost[ud] * a.shape()[ud];
    }
  }
  (void)ist;
  if (!keepdims) {
    Shape fshape;
    for (int64_t i = 0; i < nd; ++i) {
      if (!red[static_cast<size_t>(i)]) fshape.push_back(a.shape()[static_cast<size_t>(i)]);
    }
    if (fshape.empty()) fshape.push_back(1);
    return out.reshaped(fshape);
  }
  return out;
}

Tensor reduce_to_shape(const Tensor& g, const Shape& target) {
  if (g.shape() == target) return g;
  int64_t nd = g.ndim();
  int64_t tnd = static_cast<int64_t>(target.size());
  std::vector<int64_t> axes;
  for (int64_t i = 0; i < nd; ++i) {
    int64_t ti = i - (nd - tnd);
    int64_t tdim = ti < 0 ? 1 : target[static_cast<size_t>(ti)];
    if (g.shape()[static_cast<size_t>(i)] != tdim) axes.push_back(i);
  }
  Tensor r = axes.empty() ? g : sum_value(g, axes, true);
  return r.reshaped(target);
}

Tensor expand_to(const Tensor& a, const Shape& target) {
  Tensor out(target);
  broadcast_apply(target, a.shape(), a.shape(), [&](int64_t o, int64_t ia, int64_t) {
    out[o] = a[ia];
  });
  return out;
}

Tensor transpose2_value(const Tensor& a) {
  Shape s = a.shape();
  int64_t nd = a.ndim();
  std::swap(s[static_cast<size_t>(nd - 1)], s[static_cast<size_t>(nd - 2)]);
  Tensor out(s);
  int64_t rows = a.dim(-2), cols = a.dim(-1);
  int64_t blocks = a.numel() / (rows * cols);
  for (int64_t b = 0; b < blocks; ++b) {
    const Scalar* src = a.data() + b * rows * cols;
    Scalar* dst = out.data() + b * rows * cols;
    for (int64_t r = 0; r < rows; ++r) {
      for (int64_t c = 0; c < cols; ++c) dst[c * rows + r] = src[r * cols + c];
    }
  }
  return out;
}

Tensor matmul_value(const Tensor& a, const Tensor& b) {
  if (a.ndim() < 2 || b.ndim() < 2) throw ConfigError("matmul needs >=2D tensors");
  int64_t M = a.dim(-2), K = a.dim(-1);
  int64_t K2 = b.dim(-2), N = b.dim(-1);
  if (K != K2) {
    throw ConfigError("matmul inner mismatch " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  Shape abatch(a.shape().begin(), a.shape().end() - 2);
  Shape bbatch(b.shape().begin(), b.shape().end() - 2);
  Shape batch = broadcast_shapes(abatch, bbatch);
  Shape oshape = batch;
  oshape.push_back(M);
  oshape.push_back(N);
  Tensor out(oshape);

  int64_t nbatch = numel_of(batch);
  size_t bnd = batch.size();
  auto sa = effective_strides(batch, abatch);
  auto sb = effective_strides(batch, bbatch);
  auto bst = row_major_strides(batch);
  int64_t blka = M * K, blkb = K * N, blko = M * N;
  for (int64_t bi = 0; bi < nbatch; ++bi) {
    int64_t offa = 0, offb = 0, rem = bi;
    for (size_t d = 0; d < bnd; ++d) {
      int64_t id = rem / bst[d];
      rem %= bst[d];
      offa += id * sa[d];
      offb += id * sb[d];
    }
    const Scalar* pa = a.data() + offa * blka;
    const Scalar* pb = b.data() + offb * blkb;
    Scalar* po = out.data() + bi * blko;
    for (int64_t m = 0; m < M; ++m) {
      Scalar* orow = po + m * N;
      const Scalar* arow = pa + m * K;
      for (int64_t k = 0; k < K; ++k) {
        Scalar av = arow[k];
        if (av == 0.0) continue;
        const Scalar* brow = pb + k * N;
        for (int64_t n = 0; n < N; ++n) orow[n] += av * brow[n];
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------
// autograd machinery
// ---------------------------------------------------------------------

namespace {
thread_local bool g_grad_enabled = true;
std::atomic<int64_t> g_seq{0};
std::atomic<int64_t> g_ops{0};
}  // namespace

int64_t tensor_op_count() { return g_ops.load(); }

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : prev_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = prev_; }

void VarNode::accumulate(const Tensor& g) {
  if (!grad_alloc) {
    grad = Tensor(value.shape());
    grad_alloc = true;
  }
  if (!(g.shape() == grad.shape())) {
    throw NumericError("gradient shape mismatch: " + shape_str(g.shape()) + " vs " + shape_str(grad.shape()));
  }
  Scalar* d = grad.data();
  const Scalar* s = g.data();
  int64_t n = grad.numel();
  for (int64_t i = 0; i < n; ++i) d[i] += s[i];
}

Var make_leaf(Tensor v, bool requires_grad) {
  auto n = std::make_shared<VarNode>();
  n->value = std::move(v);
  n->requires_grad = requires_grad;
  n->seq = ++g_seq;
  return n;
}

Var make_const(Tensor v) { return make_leaf(std::move(v), false); }

Var detach(const Var& v) { return make_const(v->value); }

namespace {

Var make_op(Tensor value, std::vector<Var> parents, std::function<void(VarNode&)> back) {
  ++g_ops;
  auto n = std::make_shared<VarNode>();
  n->value = std::move(value);
  n->seq = ++g_seq;
  bool need = false;
  if (g_grad_enabled) {
    for (const auto& p : parents) {
      if (p && p->requires_grad) {
        need = true;
        break;
      }
    }
  }
  if (need) {
    n->requires_grad = true;
    n->parents = std::move(parents);
    n->backward_fn = std::move(back);
  }
  return n;
}

}  // namespace

void backward(const Var& root) {
  if (!root->requires_grad) return;
  // Collect reachable grad-requiring nodes, process in reverse creation order.
  std::vector<VarNode*> nodes;
  std::vector<Var> stack{root};
  // use seq marking via a visited set keyed by pointer
  std::vector<VarNode*> visited;
  auto is_visited = [&](VarNode* p) {
    return std::find(visited.begin(), visited.end(), p) != visited.end();
  };
  while (!stack.empty()) {
    Var v = stack.back();
    stack.pop_back();
    if (!v->requires_grad || is_visited(v.get())) continue;
    visited.push_back(v.get());
    nodes.push_back(v.get());
    for (const auto& p : v->parents) stack.push_back(p);
  }
  std::sort(nodes.begin(), nodes.end(), [](VarNode* a, VarNode* b) { return a->seq > b->seq; });
  root->accumulate(Tensor::ones(root->value.shape()));
  for (VarNode* n : nodes) {
    if (n->backward_fn && n->grad_alloc) n->backward_fn(*n);
  }
}

// ---------------------------------------------------------------------
// ops
// ---------------------------------------------------------------------

namespace {

// Generic broadcasting binary op. dfa/dfb give d out / d a and d out / d b per element.
Var binary_op(const Var& a, const Var& b, Scalar (*f)(Scalar, Scalar), Scalar (*dfa)(Scalar, Scalar),
              Scalar (*dfb)(Scalar, Scalar)) {
  Tensor out = ew_binary(a->value, b->value, f);
  return make_op(std::move(out), {a, b}, [dfa, dfb](VarNode& self) {
    const Tensor& av = self.parents[0]->value;
    const Tensor& bv = self.parents[1]->value;
    const Shape& oshape = self.value.shape();
    if (self.parents[0]->requires_grad) {
      Tensor ga(oshape);
      broadcast_apply(oshape, av.shape(), bv.shape(), [&](int64_t o, int64_t ia, int64_t ib) {
        ga[o] = dfa(av[ia], bv[ib]) * self.grad[o];
      });
      self.parents[0]->accumulate(reduce_to_shape(ga, av.shape()));
    }
    if (self.parents[1]->requires_grad) {
      Tensor gb(oshape);
      broadcast_apply(oshape, av.shape(), bv.shape(), [&](int64_t o, int64_t ia, int64_t ib) {
        gb[o] = dfb(av[ia], bv[ib]) * self.grad[o];
      });
      self.parents[1]->accumulate(reduce_to_shape(gb, bv.shape()));
    }
  });
}

Var unary_op(const Var& a, Scalar (*f)(Scalar), Scalar (*df_from_xy)(Scalar, Scalar)) {
  const Tensor& av = a->value;
  Tensor out(av.shape());
  for (int64_t i = 0; i < av.numel(); ++i) out[i] = f(av[i]);
  return make_op(std::move(out), {a}, [df_from_xy](VarNode& self) {
    const Tensor& x = self.parents[0]->value;
    Tensor g(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) g[i] = df_from_xy(x[i], self.value[i]) * self.grad[i];
    self.parents[0]->accumulate(g);
  });
}

}  // namespace

Var add(const Var& a, const Var& b) {
  return binary_op(
      a, b, [](Scalar x, Scalar y) { return x + y; }, [](Scalar, Scalar) { return 1.0; },
      [](Scalar, Scalar) { return 1.0; });
}

Var sub(const Var& a, const Var& b) {
  return binary_op(
      a, b, [](Scalar x, Scalar y) { return x - y; }, [](Scalar, Scalar) { return 1.0; },
      [](Scalar, Scalar) { return -1.0; });
}

Var mul(const Var& a, const Var& b) {
  return binary_op(
      a, b, [](Scalar x, Scalar y) { return x * y; }, [](Scalar, Scalar y) { return y; },
      [](Scalar x, Scalar) { return x; });
}

Var div(const Var& a, const Var& b) {
  return binary_op(
      a, b, [](Scalar x, Scalar y) { return x / y; }, [](Scalar, Scalar y) { return 1.0 / y; },
      [](Scalar x, Scalar y) { return -x / (y * y); });
}

Var neg(const Var& a) { return scale(a, -1.0); }

Var scale(const Var& a, Scalar s) {
  const Tensor& av = a->value;
  Tensor out(av.shape());
  for (int64_t i = 0; i < av.numel(); ++i) out[i] = av[i] * s;
  return make_op(std::move(out), {a}, [s](VarNode& self) {
    Tensor g(self.grad.shape());
    for (int64_t i = 0; i < g.numel(); ++i) g[i] = self.grad[i] * s;
    self.parents[0]->accumulate(g);
  });
}

Var add_scalar(const Var& a, Scalar s) {
  const Tensor& av = a->value;
  Tensor out(av.shape());
  for (int64_t i = 0; i < av.numel(); ++i) out[i] = av[i] + s;
  return make_op(std::move(out), {a}, [](VarNode& self) { self.parents[0]->accumulate(self.grad); });
}

Var exp_(const Var& a) {
  return unary_op(a, [](Scalar x) { return std::exp(x); }, [](Scalar, Scalar y) { return y; });
}

Var log_(const Var& a) {
  return unary_op(a, [](Scalar x) { return std::log(x); }, [](Scalar x, Scalar) { return 1.0 / x; });
}

Var sqrt_(const Var& a) {
  return unary_op(a, [](Scalar x) { return std::sqrt(x); },
                  [](Scalar, Scalar y) { return 0.5 / y; });
}

Var square(const Var& a) {
  return unary_op(a, [](Scalar x) { return x * x; }, [](Scalar x, Scalar) { return 2.0 * x; });
}

Var tanh_(const Var& a) {
  return unary_op(a, [](Scalar x) { return std::tanh(x); },
                  [](Scalar, Scalar y) { return 1.0 - y * y; });
}

Var sigmoid_(const Var& a) {
  return unary_op(a, [](Scalar x) { return 1.0 / (1.0 + std::exp(-x)); },
                  [](Scalar, Scalar y) { return y * (1.0 - y); });
}

Var pow_scalar(const Var& a, Scalar p) {
  const Tensor& av = a->value;
  Tensor out(av.shape());
  for (int64_t i = 0; i < av.numel(); ++i) out[i] = std::pow(av[i], p);
  return make_op(std::move(out), {a}, [p](VarNode& self) {
    const Tensor& x = self.parents[0]->value;
    Tensor g(x.shape());
    for (int64_t i = 0; i < x.numel(); ++i) g[i] = p * std::pow(x[i], p - 1.0) * self.grad[i];
    self.parents[0]->accumulate(g);
  });
}

Var reshape(const Var& a, Shape shape) {
  Tensor out = a->value.reshaped(shape);
  return make_op(std::move(out), {a}, [](VarNode& self) {
    self.parents[0]->accumulate(self.grad.reshaped(self.parents[0]->value.shape()));
  });
}

Var permute(const Var& a, const std::vector<int64_t>& axes) {
  const Tensor& av = a->value;
  int64_t nd = av.ndim();
  Shape oshape(static_cast<size_t>(nd));
  for (int64_t i = 0; i < nd; ++i) oshape[static_cast<size_t>(i)] = av.shape()[static_cast<size_t>(axes[static_cast<size_t>(i)])];
  auto do_permute = [nd](const Tensor& src, const std::vector<int64_t>& ax, const Shape& osh) {
    Tensor out(osh);
    auto ist = row_major_strides(src.shape());
    auto ost = row_major_strides(osh);
    // stride of output dim i in the input = stride of src dim ax[i]
    std::vector<int64_t> map(static_cast<size_t>(nd));
    for (int64_t i = 0; i < nd; ++i) map[static_cast<size_t>(i)] = ist[static_cast<size_t>(ax[static_cast<size_t>(i)])];
    int64_t total = src.numel();
    std::vector<int64_t> idx(static_cast<size_t>(nd), 0);
    int64_t soff = 0;
    for (int64_t o = 0; o < total; ++o) {
      out[o] = src[soff];
      for (int64_t d = nd - 1; d >= 0; --d) {
        size_t ud = static_cast<size_t>(d);
        ++idx[ud];
        soff += map[ud];
        if (idx[ud] < osh[ud]) break;
        idx[ud] = 0;
        soff -= map[ud] * osh[ud];
      }
    }
    (void)ost;
    return out;
  };
  Tensor out = do_permute(av, axes, oshape);
  std::vector<int64_t> inv(axes.size());
  for (size_t i = 0; i < axes.size(); ++i) inv[static_cast<size_t>(axes[i])] = static_cast<int64_t>(i);
  return make_op(std::move(out), {a}, [do_permute, inv](VarNode& self) {
    self.parents[0]->accumulate(do_permute(self.grad, inv, self.parents[0]->value.shape()));
  });
}

Var transpose2(const Var& a) {
  int64_t nd = a->value.ndim();
  std::vector<int64_t> axes(static_cast<size_t>(nd));
  for (int64_t i = 0; i < nd; ++i) axes[static_cast<size_t>(i)] = i;
  std::swap(axes[static_cast<size_t>(nd - 1)], axes[static_cast<size_t>(nd - 2)]);
  return permute(a, axes);
}

Var slice(const Var& a, int64_t axis, int64_t start, int64_t len) {
  const Tensor& av = a->value;
  int64_t nd = av.ndim();
  if (axis < 0) axis += nd;
  Shape oshape = av.shape();
  oshape[static_cast<size_t>(axis)] = len;
  Tensor out(oshape);
  int64_t outer = 1, inner = 1;
  for (int64_t i = 0; i < axis; ++i) outer *= av.shape()[static_cast<size_t>(i)];
  for (int64_t i = axis + 1; i < nd; ++i) inner *= av.shape()[static_cast<size_t>(i)];
  int64_t adim = av.shape()[static_cast<size_t>(axis)];
  for (int64_t o = 0; o < outer; ++o) {
    const Scalar* src = av.data() + (o * adim + start) * inner;
    Scalar* dst = out.data() + o * len * inner;
    std::memcpy(dst, src, static_cast<size_t>(len * inner) * sizeof(Scalar));
  }
  return make_op(std::move(out), {a}, [axis, start, len, outer, inner, adim](VarNode& self) {
    Tensor g(self.parents[0]->value.shape());
    for (int64_t o = 0; o < outer; ++o) {
      Scalar* dst = g.data() + (o * adim + start) * inner;
      const Scalar* src = self.grad.data() + o * len * inner;
      std::memcpy(dst, src, static_cast<size_t>(len * inner) * sizeof(Scalar));
    }
    self.parents[0]->accumulate(g);
  });
}

Var concat(const std::vector<Var>& parts, int64_t axis) {
  if (parts.empty()) throw ConfigError("concat of zero tensors");
  int64_t nd = parts[0]->value.ndim();
  if (axis < 0) axis += nd;
  Shape oshape = parts[0]->value.shape();
  int64_t total_axis = 0;
  for (const auto& p : parts) total_axis += p->value.shape()[static_cast<size_t>(axis)];
  oshape[static_cast<size_t>(axis)] = total_axis;
  Tensor out(oshape);
  int64_t outer = 1, inner = 1;
  for (int64_t i = 0; i < axis; ++i) outer *= oshape[static_cast<size_t>(i)];
  for (int64_t i = axis + 1; i < nd; ++i) inner *= oshape[static_cast<size_t>(i)];
  std::vector<int64_t> offsets;
  int64_t off = 0;
  for (const auto& p : parts) {
    offsets.push_back(off);
    int64_t plen = p->value.shape()[static_cast<size_t>(axis)];
    for (int64_t o = 0; o < outer; ++o) {
      const Scalar* src = p->value.data() + o * plen * inner;
      Scalar* dst = out.data() + (o * total_axis + off) * inner;
      std::memcpy(dst, src, static_cast<size_t>(plen * inner) * sizeof(Scalar));
    }
    off += plen;
  }
  return make_op(std::move(out), parts, [axis, outer, inner, total_axis, offsets](VarNode& self) {
    for (size_t pi = 0; pi < self.parents.size(); ++pi) {
      auto& p = self.parents[pi];
      if (!p->requires_grad) continue;
      int64_t plen = p->value.shape()[static_cast<size_t>(axis)];
      Tensor g(p->value.shape());
      for (int64_t o = 0; o < outer; ++o) {
        const Scalar* src = self.grad.data() + (o * total_axis + offsets[pi]) * inner;
        Scalar* dst = g.data() + o * plen * inner;
        std::memcpy(dst, src, static_cast<size_t>(plen * inner) * sizeof(Scalar));
      }
      p->accumulate(g);
    }
  });
}

Var index_select(const Var& a, int64_t axis, const std::vector<int64_t>& idx) {
  const Tensor& av = a->value;
  int64_t nd = av.ndim();
  if (axis < 0) axis += nd;
  Shape oshape = av.shape();
  oshape[static_cast<size_t>(axis)] = static_cast<int64_t>(idx.size());
  Tensor out(oshape);
  int64_t outer = 1, inner = 1;
  for (int64_t i = 0; i < axis; ++i) outer *= av.shape()[static_cast<size_t>(i)];
  for (int64_t i = axis + 1; i < nd; ++i) inner *= av.shape()[static_cast<size_t>(i)];
  int64_t adim = av.shape()[static_cast<size_t>(axis)];
  int64_t olen = static_cast<int64_t>(idx.size());
  for (int64_t o = 0; o < outer; ++o) {
    for (int64_t j = 0; j < olen; ++j) {
      const Scalar* src = av.data() + (o * adim + idx[static_cast<size_t>(j)]) * inner;
      Scalar* dst = out.data() + (o * olen + j) * inner;
      std::memcpy(dst, src, static_cast<size_t>(inner) * sizeof(Scalar));
    }
  }
  return make_op(std::move(out), {a}, [axis, idx, outer, inner, adim, olen](VarNode& self) {
    Tensor g(self.parents[0]->value.shape());
    for (int64_t o = 0; o < outer; ++o) {
      for (int64_t j = 0; j < olen; ++j) {
        Scalar* dst = g.data() + (o * adim + idx[static_cast<size_t>(j)]) * inner;
        const Scalar* src = self.grad.data() + (o * olen + j) * inner;
        for (int64_t i = 0; i < inner; ++i) dst[i] += src[i];
      }
    }
    self.parents[0]->accumulate(g);
  });
}

Var sum(const Var& a, const std::vector<int64_t>& axes, bool keepdims) {
  Tensor out = sum_value(a->value, axes, keepdims);
  Shape kshape = sum_value(a->value, axes, true).shape();
  return make_op(std::move(out), {a}, [kshape](VarNode& self) {
    Tensor g = self.grad.reshaped(kshape);
    self.parents[0]->accumulate(expand_to(g, self.parents[0]->value.shape()));
  });
}

Var mean(const Var& a, const std::vector<int64_t>& axes, bool keepdims) {
  int64_t count = 1;
  int64_t nd = a->value.ndim();
  for (int64_t ax : axes) {
    if (ax < 0) ax += nd;
    count *= a->value.shape()[static_cast<size_t>(ax)];
  }
  return scale(sum(a, axes, keepdims), 1.0 / static_cast<Scalar>(count));
}

Var sum_all(const Var& a) {
  Scalar s = 0;
  for (int64_t i = 0; i < a->value.numel(); ++i) s += a->value[i];
  Tensor out({1}, s);
  return make_op(std::move(out), {a}, [](VarNode& self) {
    self.parents[0]->accumulate(Tensor(self.parents[0]->value.shape(), self.grad[0]));
  });
}

Var mean_all(const Var& a) { return scale(sum_all(a), 1.0 / static_cast<Scalar>(a->value.numel())); }

Var matmul(const Var& a, const Var& b) {
  Tensor out = matmul_value(a->value, b->value);
  return make_op(std::move(out), {a, b}, [](VarNode& self) {
    const Tensor& av = self.parents[0]->value;
    const Tensor& bv = self.parents[1]->value;
    if (self.parents[0]->requires_grad) {
      Tensor ga = matmul_value(self.grad, transpose2_value(bv));
      self.parents[0]->accumulate(reduce_to_shape(ga, av.shape()));
    }
    if (self.parents[1]->requires_grad) {
      Tensor gb = matmul_value(transpose2_value(av), self.grad);
      self.parents[1]->accumulate(reduce_to_shape(gb, bv.shape()));
    }
  });
}

Var softmax_last(const Var& a) {
  const Tensor& av = a->value;
  Tensor out(av.shape());
  int64_t cols = av.dim(-1);
  int64_t rows = av.numel() / cols;
  for (int64_t r = 0; r < rows; ++r) {
    const Scalar* x = av.data() + r * cols;
    Scalar* y = out.data() + r * cols;
    Scalar m = x[0];
    for (int64_t c = 1; c < cols; ++c) m = std::max(m, x[c]);
    Scalar z = 0;
    for (int64_t c = 0; c < cols; ++c) {
      y[c] = std::exp(x[c] - m);
      z += y[c];
    }
    for (int64_t c = 0; c < cols; ++c) y[c] /= z;
  }
  return make_op(std::move(out), {a}, [cols, rows](VarNode& self) {
    Tensor g(self.value.shape());
    for (int64_t r = 0; r < rows; ++r) {
      const Scalar* y = self.value.data() + r * cols;
      const Scalar* dy = self.grad.data() + r * cols;
      Scalar dot = 0;
      for (int64_t c = 0; c < cols; ++c) dot += y[c] * dy[c];
      Scalar* dx = g.data() + r * cols;
      for (int64_t c = 0; c < cols; ++c) dx[c] = y[c] * (dy[c] - dot);
    }
    self.parents[0]->accumulate(g);
  });
}

Var logsumexp_last(const Var& a) {
  const Tensor& av = a->value;
  Shape oshape = av.shape();
  oshape.back() = 1;
  Tensor out(oshape);
  int64_t cols = av.dim(-1);
  int64_t rows = av.numel() / cols;
  for (int64_t r = 0; r < rows; ++r) {
    const Scalar* x = av.data() + r * cols;
    Scalar m = x[0];
    for (int64_t c = 1; c < cols; ++c) m = std::max(m, x[c]);
    Scalar z = 0;
    for (int64_t c = 0; c < cols; ++c) z += std::exp(x[c] - m);
    out[r] = m + std::log(z);
  }
  return make_op(std::move(out), {a}, [cols, rows](VarNode& self) {
    const Tensor& x = self.parents[0]->value;
    Tensor g(x.shape());
    for (int64_t r = 0; r < rows; ++r) {
      const Scalar* xr = x.data() + r * cols;
      Scalar lse = self.value[r];
      Scalar dy = self.grad[r];
      Scalar* dx = g.data() + r * cols;
      for (int64_t c = 0; c < cols; ++c) dx[c] = std::exp(xr[c] - lse) * dy;
    }
    self.parents[0]->accumulate(g);
  });
}

}  // namespace stsccl
