#ifndef SUPERFACE_AUTOGRAD_HPP
#define SUPERFACE_AUTOGRAD_HPP

// Reverse-mode autodiff over Tensor<T>. Ops build a shared_ptr graph; each
// node carries a pull-style backprop closure that scatters its grad into its
// parents. Templated on the scalar so the finite-difference checks can run
// the exact same graph code at double precision.

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <stdexcept>
#include <unordered_set>
#include <vector>

#include "superface/tensor.hpp"

namespace sf {

template <class T>
struct Node {
  Tensor<T> val;
  Tensor<T> grad;  // allocated on first touch
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node<T>>> parents;
  std::function<void(Node<T>&)> backprop;
  const char* op = "leaf";

  void ensure_grad() {
    if (grad.size() != val.size()) grad = Tensor<T>::zeros(val.shape());
  }
};

template <class T>
using Var = std::shared_ptr<Node<T>>;

// ---- grad mode ----
inline bool& grad_enabled_flag() {
  thread_local bool enabled = true;
  return enabled;
}

struct NoGrad {
  bool prev;
  NoGrad() : prev(grad_enabled_flag()) { grad_enabled_flag() = false; }
  ~NoGrad() { grad_enabled_flag() = prev; }
  NoGrad(const NoGrad&) = delete;
};

template <class T>
Var<T> constant(Tensor<T> v, const char* op = "const") {
  auto n = std::make_shared<Node<T>>();
  n->val = std::move(v);
  n->op = op;
  return n;
}

template <class T>
Var<T> param(Tensor<T> v) {
  auto n = constant<T>(std::move(v), "param");
  n->requires_grad = true;
  return n;
}

template <class T>
Var<T> detach(const Var<T>& x) {
  return constant<T>(x->val, "detach");
}

template <class T>
Var<T> make_op(Tensor<T> val, std::vector<Var<T>> parents, std::function<void(Node<T>&)> bp, const char* op) {
  auto n = std::make_shared<Node<T>>();
  n->val = std::move(val);
  n->op = op;
  if (grad_enabled_flag()) {
    for (auto& p : parents)
      if (p->requires_grad) {
        n->requires_grad = true;
        break;
      }
    if (n->requires_grad) {
      n->parents = std::move(parents);
      n->backprop = std::move(bp);
    }
  }
  return n;
}

// ---- engine ----
template <class T>
void backward(const Var<T>& root) {
  if (root->val.size() != 1) throw std::runtime_error("backward: root must be scalar");
  if (!root->requires_grad) return;

  // iterative post-order topo sort over the requires_grad subgraph
  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, size_t>> stack;
  stack.push_back({root.get(), 0});
  seen.insert(root.get());
  while (!stack.empty()) {
    auto& [n, i] = stack.back();
    if (i < n->parents.size()) {
      Node<T>* p = n->parents[i].get();
      ++i;
      if (p->requires_grad && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }

  root->ensure_grad();
  root->grad.fill(T(1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backprop) n->backprop(*n);
  }
}

// ---- elementwise helpers ----
namespace aginternal {

template <class T, class FwdFn, class BwdFn>
Var<T> unary_op(const Var<T>& x, FwdFn fwd, BwdFn bwd, const char* op) {
  Tensor<T> out(x->val.shape());
  const T* xd = x->val.data();
  T* od = out.data();
  for (int64_t i = 0; i < out.size(); ++i) od[i] = fwd(xd[i]);
  return make_op<T>(
      std::move(out), {x},
      [x, bwd](Node<T>& self) {
        x->ensure_grad();
        const T* g = self.grad.data();
        const T* xv = x->val.data();
        const T* yv = self.val.data();
        T* xg = x->grad.data();
        for (int64_t i = 0; i < self.val.size(); ++i) xg[i] += bwd(xv[i], yv[i]) * g[i];
      },
      op);
}

}  // namespace aginternal

template <class T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a->val, b->val, "add");
  Tensor<T> out(a->val.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = a->val[i] + b->val[i];
  return make_op<T>(
      std::move(out), {a, b},
      [a, b](Node<T>& self) {
        a->ensure_grad();
        b->ensure_grad();
        for (int64_t i = 0; i < self.val.size(); ++i) {
          a->grad[i] += self.grad[i];
          b->grad[i] += self.grad[i];
        }
      },
      "add");
}

template <class T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a->val, b->val, "sub");
  Tensor<T> out(a->val.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = a->val[i] - b->val[i];
  return make_op<T>(
      std::move(out), {a, b},
      [a, b](Node<T>& self) {
        a->ensure_grad();
        b->ensure_grad();
        for (int64_t i = 0; i < self.val.size(); ++i) {
          a->grad[i] += self.grad[i];
          b->grad[i] -= self.grad[i];
        }
      },
      "sub");
}

template <class T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a->val, b->val, "mul");
  Tensor<T> out(a->val.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = a->val[i] * b->val[i];
  return make_op<T>(
      std::move(out), {a, b},
      [a, b](Node<T>& self) {
        a->ensure_grad();
        b->ensure_grad();
        for (int64_t i = 0; i < self.val.size(); ++i) {
          a->grad[i] += b->val[i] * self.grad[i];
          b->grad[i] += a->val[i] * self.grad[i];
        }
      },
      "mul");
}

template <class T>
Var<T> divide(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a->val, b->val, "div");
  Tensor<T> out(a->val.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = a->val[i] / b->val[i];
  return make_op<T>(
      std::move(out), {a, b},
      [a, b](Node<T>& self) {
        a->ensure_grad();
        b->ensure_grad();
        for (int64_t i = 0; i < self.val.size(); ++i) {
          T inv = T(1) / b->val[i];
          a->grad[i] += inv * self.grad[i];
          b->grad[i] -= a->val[i] * inv * inv * self.grad[i];
        }
      },
      "div");
}

template <class T>
Var<T> mul_scalar(const Var<T>& x, T s) {
  Tensor<T> out(x->val.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = x->val[i] * s;
  return make_op<T>(
      std::move(out), {x},
      [x, s](Node<T>& self) {
        x->ensure_grad();
        for (int64_t i = 0; i < self.val.size(); ++i) x->grad[i] += s * self.grad[i];
      },
      "mul_scalar");
}

template <class T>
Var<T> add_scalar(const Var<T>& x, T s) {
  Tensor<T> out(x->val.shape());
  for (int64_t i = 0; i < out.size(); ++i) out[i] = x->val[i] + s;
  return make_op<T>(
      std::move(out), {x},
      [x](Node<T>& self) {
        x->ensure_grad();
        for (int64_t i = 0; i < self.val.size(); ++i) x->grad[i] += self.grad[i];
      },
      "add_scalar");
}

template <class T>
Var<T> neg(const Var<T>& x) {
  return mul_scalar(x, T(-1));
}

template <class T>
Var<T> relu(const Var<T>& x) {
  return aginternal::unary_op<T>(
      x, [](T v) { return v > T(0) ? v : T(0); }, [](T v, T) { return v > T(0) ? T(1) : T(0); }, "relu");
}

template <class T>
Var<T> leaky_relu(const Var<T>& x, T slope = T(0.2)) {
  return aginternal::unary_op<T>(
      x, [slope](T v) { return v > T(0) ? v : slope * v; }, [slope](T v, T) { return v > T(0) ? T(1) : slope; },
      "leaky_relu");
}

template <class T>
Var<T> sigmoid(const Var<T>& x) {
  return aginternal::unary_op<T>(
      x, [](T v) { return T(1) / (T(1) + std::exp(-v)); }, [](T, T y) { return y * (T(1) - y); }, "sigmoid");
}

template <class T>
Var<T> tanh_op(const Var<T>& x) {
  return aginternal::unary_op<T>(
      x, [](T v) { return std::tanh(v); }, [](T, T y) { return T(1) - y * y; }, "tanh");
}

template <class T>
Var<T> exp_op(const Var<T>& x) {
  return aginternal::unary_op<T>(
      x, [](T v) { return std::exp(v); }, [](T, T y) { return y; }, "exp");
}

template <class T>
Var<T> log_op(const Var<T>& x, T eps = T(0)) {
  return aginternal::unary_op<T>(
      x, [eps](T v) { return std::log(v + eps); }, [eps](T v, T) { return T(1) / (v + eps); }, "log");
}

template <class T>
Var<T> sqrt_op(const Var<T>& x) {
  return aginternal::unary_op<T>(
      x, [](T v) { return std::sqrt(v); }, [](T, T y) { return T(0.5) / y; }, "sqrt");
}

template <class T>
Var<T> square(const Var<T>& x) {
  return aginternal::unary_op<T>(
      x, [](T v) { return v * v; }, [](T v, T) { return T(2) * v; }, "square");
}

template <class T>
Var<T> abs_op(const Var<T>& x) {
  return aginternal::unary_op<T>(
      x, [](T v) { return std::abs(v); }, [](T v, T) { return v > T(0) ? T(1) : (v < T(0) ? T(-1) : T(0)); }, "abs");
}

// ---- reductions / broadcast ----

template <class T>
Var<T> sum_all(const Var<T>& x) {
  T acc = T(0);
  for (int64_t i = 0; i < x->val.size(); ++i) acc += x->val[i];
  return make_op<T>(
      Tensor<T>::scalar(acc), {x},
      [x](Node<T>& self) {
        x->ensure_grad();
        T g = self.grad[0];
        for (int64_t i = 0; i < x->val.size(); ++i) x->grad[i] += g;
      },
      "sum_all");
}

template <class T>
Var<T> mean_all(const Var<T>& x) {
  return mul_scalar(sum_all(x), T(1) / static_cast<T>(x->val.size()));
}

namespace aginternal {
// decompose shape into (outer, axis_len, inner) around `axis`
inline void axis_split(const Shape& s, size_t axis, int64_t& outer, int64_t& len, int64_t& inner) {
  outer = 1;
  inner = 1;
  for (size_t i = 0; i < axis; ++i) outer *= s[i];
  len = s[axis];
  for (size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
}
}  // namespace aginternal

// sum over one axis, keeping it with size 1
template <class T>
Var<T> sum_axis(const Var<T>& x, size_t axis) {
  int64_t outer, len, inner;
  aginternal::axis_split(x->val.shape(), axis, outer, len, inner);
  Shape os = x->val.shape();
  os[axis] = 1;
  Tensor<T> out(os);
  const T* xd = x->val.data();
  T* od = out.data();
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t l = 0; l < len; ++l)
      for (int64_t i = 0; i < inner; ++i) od[o * inner + i] += xd[(o * len + l) * inner + i];
  return make_op<T>(
      std::move(out), {x},
      [x, outer, len, inner](Node<T>& self) {
        x->ensure_grad();
        const T* g = self.grad.data();
        T* xg = x->grad.data();
        for (int64_t o = 0; o < outer; ++o)
          for (int64_t l = 0; l < len; ++l)
            for (int64_t i = 0; i < inner; ++i) xg[(o * len + l) * inner + i] += g[o * inner + i];
      },
      "sum_axis");
}

// broadcast a size-1 axis to length n
template <class T>
Var<T> broadcast_axis(const Var<T>& x, size_t axis, int64_t n) {
  if (x->val.shape()[axis] != 1) throw ShapeMismatch("broadcast_axis: axis not 1");
  int64_t outer, len, inner;
  aginternal::axis_split(x->val.shape(), axis, outer, len, inner);
  (void)len;
  Shape os = x->val.shape();
  os[axis] = n;
  Tensor<T> out(os);
  const T* xd = x->val.data();
  T* od = out.data();
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t l = 0; l < n; ++l)
      for (int64_t i = 0; i < inner; ++i) od[(o * n + l) * inner + i] = xd[o * inner + i];
  return make_op<T>(
      std::move(out), {x, },
      [x, outer, n, inner](Node<T>& self) {
        x->ensure_grad();
        const T* g = self.grad.data();
        T* xg = x->grad.data();
        for (int64_t o = 0; o < outer; ++o)
          for (int64_t l = 0; l < n; ++l)
            for (int64_t i = 0; i < inner; ++i) xg[o * inner + i] += g[(o * n + l) * inner + i];
      },
      "broadcast_axis");
}

// mean over the trailing `ntrail` axes, keeping them at size 1
template <class T>
Var<T> mean_trailing(const Var<T>& x, size_t ntrail) {
  const Shape& s = x->val.shape();
  size_t lead = s.size() - ntrail;
  int64_t outer = 1, inner = 1;
  for (size_t i = 0; i < lead; ++i) outer *= s[i];
  for (size_t i = lead; i < s.size(); ++i) inner *= s[i];
  Shape os = s;
  for (size_t i = lead; i < s.size(); ++i) os[i] = 1;
  Tensor<T> out(os);
  const T* xd = x->val.data();
  T scale = T(1) / static_cast<T>(inner);
  for (int64_t o = 0; o < outer; ++o) {
    T acc = T(0);
    for (int64_t i = 0; i < inner; ++i) acc += xd[o * inner + i];
    out[o] = acc * scale;
  }
  return make_op<T>(
      std::move(out), {x},
      [x, outer, inner, scale](Node<T>& self) {
        x->ensure_grad();
        T* xg = x->grad.data();
        for (int64_t o = 0; o < outer; ++o) {
          T g = self.grad[o] * scale;
          for (int64_t i = 0; i < inner; ++i) xg[o * inner + i] += g;
        }
      },
      "mean_trailing");
}

// broadcast trailing size-1 axes back to `target` trailing sizes
template <class T>
Var<T> broadcast_trailing(const Var<T>& x, const Shape& target) {
  const Shape& s = x->val.shape();
  size_t lead = s.size();
  int64_t outer = 1;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] != target[i]) {
      lead = i;
      break;
    }
  }
  for (size_t i = 0; i < lead; ++i) outer *= s[i];
  int64_t inner = 1;
  for (size_t i = lead; i < target.size(); ++i) {
    if (s[i] != 1) throw ShapeMismatch("broadcast_trailing: non-1 trailing axis");
    inner *= target[i];
  }
  Tensor<T> out(target);
  const T* xd = x->val.data();
  T* od = out.data();
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t i = 0; i < inner; ++i) od[o * inner + i] = xd[o];
  return make_op<T>(
      std::move(out), {x},
      [x, outer, inner](Node<T>& self) {
        x->ensure_grad();
        const T* g = self.grad.data();
        T* xg = x->grad.data();
        for (int64_t o = 0; o < outer; ++o) {
          T acc = T(0);
          for (int64_t i = 0; i < inner; ++i) acc += g[o * inner + i];
          xg[o] += acc;
        }
      },
      "broadcast_trailing");
}

// ---- structure ops ----

template <class T>
Var<T> reshape(const Var<T>& x, Shape s) {
  Tensor<T> out = x->val.reshaped(s);
  return make_op<T>(
      std::move(out), {x},
      [x](Node<T>& self) {
        x->ensure_grad();
        for (int64_t i = 0; i < self.val.size(); ++i) x->grad[i] += self.grad[i];
      },
      "reshape");
}

template <class T>
Var<T> narrow(const Var<T>& x, size_t axis, int64_t start, int64_t length) {
  int64_t outer, len, inner;
  aginternal::axis_split(x->val.shape(), axis, outer, len, inner);
  if (start < 0 || start + length > len) throw ShapeMismatch("narrow: out of range");
  Shape os = x->val.shape();
  os[axis] = length;
  Tensor<T> out(os);
  const T* xd = x->val.data();
  T* od = out.data();
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t l = 0; l < length; ++l)
      std::copy(xd + (o * len + start + l) * inner, xd + (o * len + start + l + 1) * inner,
                od + (o * length + l) * inner);
  return make_op<T>(
      std::move(out), {x},
      [x, outer, len, inner, start, length](Node<T>& self) {
        x->ensure_grad();
        const T* g = self.grad.data();
        T* xg = x->grad.data();
        for (int64_t o = 0; o < outer; ++o)
          for (int64_t l = 0; l < length; ++l)
            for (int64_t i = 0; i < inner; ++i)
              xg[(o * len + start + l) * inner + i] += g[(o * length + l) * inner + i];
      },
      "narrow");
}

template <class T>
Var<T> concat(const std::vector<Var<T>>& xs, size_t axis) {
  if (xs.empty()) throw std::runtime_error("concat: empty");
  Shape os = xs[0]->val.shape();
  int64_t total = 0;
  for (auto& x : xs) total += x->val.shape()[axis];
  os[axis] = total;
  int64_t outer, len, inner;
  aginternal::axis_split(os, axis, outer, len, inner);
  (void)len;
  Tensor<T> out(os);
  T* od = out.data();
  int64_t off = 0;
  for (auto& x : xs) {
    int64_t xa = x->val.shape()[axis];
    const T* xd = x->val.data();
    for (int64_t o = 0; o < outer; ++o)
      std::copy(xd + o * xa * inner, xd + (o + 1) * xa * inner, od + (o * total + off) * inner);
    off += xa;
  }
  return make_op<T>(
      std::move(out), xs,
      [xs, outer, total, inner, axis](Node<T>& self) {
        const T* g = self.grad.data();
        int64_t off = 0;
        for (auto& x : xs) {
          int64_t xa = x->val.shape()[axis];
          if (x->requires_grad) {
            x->ensure_grad();
            T* xg = x->grad.data();
            for (int64_t o = 0; o < outer; ++o)
              for (int64_t j = 0; j < xa * inner; ++j) xg[o * xa * inner + j] += g[(o * total + off) * inner + j];
          }
          off += xa;
        }
      },
      "concat");
}

// softmax along `axis` (fused, numerically stable)
template <class T>
Var<T> softmax(const Var<T>& x, size_t axis) {
  int64_t outer, len, inner;
  aginternal::axis_split(x->val.shape(), axis, outer, len, inner);
  Tensor<T> out(x->val.shape());
  const T* xd = x->val.data();
  T* od = out.data();
  for (int64_t o = 0; o < outer; ++o)
    for (int64_t i = 0; i < inner; ++i) {
      T mx = xd[o * len * inner + i];
      for (int64_t l = 1; l < len; ++l) mx = std::max(mx, xd[(o * len + l) * inner + i]);
      T z = T(0);
      for (int64_t l = 0; l < len; ++l) {
        T e = std::exp(xd[(o * len + l) * inner + i] - mx);
        od[(o * len + l) * inner + i] = e;
        z += e;
      }
      T invz = T(1) / z;
      for (int64_t l = 0; l < len; ++l) od[(o * len + l) * inner + i] *= invz;
    }
  return make_op<T>(
      std::move(out), {x},
      [x, outer, len, inner](Node<T>& self) {
        x->ensure_grad();
        const T* y = self.val.data();
        const T* g = self.grad.data();
        T* xg = x->grad.data();
        for (int64_t o = 0; o < outer; ++o)
          for (int64_t i = 0; i < inner; ++i) {
            T dot = T(0);
            for (int64_t l = 0; l < len; ++l) dot += y[(o * len + l) * inner + i] * g[(o * len + l) * inner + i];
            for (int64_t l = 0; l < len; ++l) {
              int64_t ix = (o * len + l) * inner + i;
              xg[ix] += y[ix] * (g[ix] - dot);
            }
          }
      },
      "softmax");
}

// cross product over rows of (N,3) tensors
template <class T>
Var<T> cross3(const Var<T>& a, const Var<T>& b) {
  check_same_shape(a->val, b->val, "cross3");
  int64_t n = a->val.size() / 3;
  Tensor<T> out(a->val.shape());
  const T* av = a->val.data();
  const T* bv = b->val.data();
  for (int64_t i = 0; i < n; ++i) {
    const T *x = av + 3 * i, *y = bv + 3 * i;
    T* o = out.data() + 3 * i;
    o[0] = x[1] * y[2] - x[2] * y[1];
    o[1] = x[2] * y[0] - x[0] * y[2];
    o[2] = x[0] * y[1] - x[1] * y[0];
  }
  return make_op<T>(
      std::move(out), {a, b},
      [a, b, n](Node<T>& self) {
        a->ensure_grad();
        b->ensure_grad();
        const T* av = a->val.data();
        const T* bv = b->val.data();
        const T* g = self.grad.data();
        T* ag = a->grad.data();
        T* bg = b->grad.data();
        for (int64_t i = 0; i < n; ++i) {
          const T *x = av + 3 * i, *y = bv + 3 * i, *gv = g + 3 * i;
          // d(x×y)/dx = -[y]_x ; d(x×y)/dy = [x]_x
          ag[3 * i + 0] += y[1] * gv[2] - y[2] * gv[1];
          ag[3 * i + 1] += y[2] * gv[0] - y[0] * gv[2];
          ag[3 * i + 2] += y[0] * gv[1] - y[1] * gv[0];
          bg[3 * i + 0] += x[2] * gv[1] - x[1] * gv[2];
          bg[3 * i + 1] += x[0] * gv[2] - x[2] * gv[0];
          bg[3 * i + 2] += x[1] * gv[0] - x[0] * gv[1];
        }
      },
      "cross3");
}

// weighted sum of scalars: total = sum_i w_i * terms_i (w constant)
template <class T>
Var<T> weighted_sum(const std::vector<Var<T>>& terms, const std::vector<T>& w) {
  T acc = T(0);
  for (size_t i = 0; i < terms.size(); ++i) acc += w[i] * terms[i]->val[0];
  return make_op<T>(
      Tensor<T>::scalar(acc), terms,
      [terms, w](Node<T>& self) {
        for (size_t i = 0; i < terms.size(); ++i)
          if (terms[i]->requires_grad) {
            terms[i]->ensure_grad();
            terms[i]->grad[0] += w[i] * self.grad[0];
          }
      },
      "weighted_sum");
}

}  // namespace sf

#endif
