#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <memory>
#include <string>
#include <vector>

namespace stsccl {

using Scalar = double;
using Shape = std::vector<int64_t>;

int64_t numel_of(const Shape& s);
std::string shape_str(const Shape& s);
std::vector<int64_t> row_major_strides(const Shape& s);
Shape broadcast_shapes(const Shape& a, const Shape& b);

// Dense row-major tensor of doubles with value semantics.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, Scalar fill);
  Tensor(Shape shape, std::vector<Scalar> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor ones(Shape shape) { return Tensor(std::move(shape), 1.0); }
  static Tensor full(Shape shape, Scalar v) { return Tensor(std::move(shape), v); }
  static Tensor eye(int64_t n);
  static Tensor scalar(Scalar v) { return Tensor({1}, v); }

  const Shape& shape() const { return shape_; }
  int64_t ndim() const { return static_cast<int64_t>(shape_.size()); }
  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  int64_t dim(int64_t i) const;  // negative indices allowed

  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }
  Scalar& operator[](int64_t i) { return data_[static_cast<size_t>(i)]; }
  Scalar operator[](int64_t i) const { return data_[static_cast<size_t>(i)]; }
  Scalar& at(std::initializer_list<int64_t> idx);
  Scalar at(std::initializer_list<int64_t> idx) const;

  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }
  Tensor reshaped(Shape shape) const;
  bool all_finite() const;
  Scalar item() const;  // numel()==1

 private:
  Shape shape_;
  std::vector<Scalar> data_;
};

// ---- value-level helpers (no autograd) ----
Tensor ew_binary(const Tensor& a, const Tensor& b, Scalar (*f)(Scalar, Scalar));
Tensor reduce_to_shape(const Tensor& g, const Shape& target);
Tensor matmul_value(const Tensor& a, const Tensor& b);
Tensor transpose2_value(const Tensor& a);
Tensor sum_value(const Tensor& a, const std::vector<int64_t>& axes, bool keepdims);
Tensor expand_to(const Tensor& a, const Shape& target);  // broadcast copy

// =====================================================================
// Reverse-mode autograd
// =====================================================================

struct VarNode;
using Var = std::shared_ptr<VarNode>;

struct VarNode {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  bool requires_grad = false;
  bool grad_alloc = false;
  int64_t seq = 0;
  std::vector<Var> parents;
  std::function<void(VarNode&)> backward_fn;

  void accumulate(const Tensor& g);
};

bool grad_enabled();

// Disables tape construction in scope (forwards become constants).
struct NoGradGuard {
  NoGradGuard();
  ~NoGradGuard();

 private:
  bool prev_;
};

Var make_leaf(Tensor v, bool requires_grad = true);
Var make_const(Tensor v);
Var detach(const Var& v);
void backward(const Var& root);  // seeds root grad with ones

// ---- elementwise (broadcasting) ----
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);
Var neg(const Var& a);
Var scale(const Var& a, Scalar s);
Var add_scalar(const Var& a, Scalar s);

// ---- unary ----
Var exp_(const Var& a);
Var log_(const Var& a);
Var sqrt_(const Var& a);
Var square(const Var& a);
Var tanh_(const Var& a);
Var sigmoid_(const Var& a);
Var pow_scalar(const Var& a, Scalar p);

// ---- shape ----
Var reshape(const Var& a, Shape shape);
Var permute(const Var& a, const std::vector<int64_t>& axes);
Var transpose2(const Var& a);  // swap last two dims
Var slice(const Var& a, int64_t axis, int64_t start, int64_t len);
Var concat(const std::vector<Var>& parts, int64_t axis);
Var index_select(const Var& a, int64_t axis, const std::vector<int64_t>& idx);

// ---- reductions ----
Var sum(const Var& a, const std::vector<int64_t>& axes, bool keepdims);
Var mean(const Var& a, const std::vector<int64_t>& axes, bool keepdims);
Var sum_all(const Var& a);   // -> shape {1}
Var mean_all(const Var& a);  // -> shape {1}

// ---- linear algebra ----
// a: [*, M, K], b: [*, K, N]; leading dims broadcast.
Var matmul(const Var& a, const Var& b);

// ---- stable softmax family over the last dim ----
Var softmax_last(const Var& a);
Var logsumexp_last(const Var& a);  // keepdim

int64_t tensor_op_count();  // diagnostics

}  // namespace stsccl
