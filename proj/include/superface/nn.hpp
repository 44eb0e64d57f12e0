#ifndef SUPERFACE_NN_HPP
#define SUPERFACE_NN_HPP

// Small module layer on top of the autograd ops: a named parameter store,
// conv/linear layers that also enumerate themselves for the MAC counter,
// instance normalization, and Adam.

#include <map>
#include <string>

#include "superface/conv.hpp"
#include "superface/flops.hpp"
#include "superface/rng.hpp"
#include "superface/sampling.hpp"

namespace sf {

template <class T>
struct ParamStore {
  std::vector<std::pair<std::string, Var<T>>> entries;

  Var<T> add(const std::string& name, Tensor<T> init) {
    auto p = param<T>(std::move(init));
    entries.emplace_back(name, p);
    return p;
  }

  Var<T> find(const std::string& name) const {
    for (auto& [n, p] : entries)
      if (n == name) return p;
    return nullptr;
  }

  void zero_grad() {
    for (auto& [n, p] : entries) {
      (void)n;
      if (p->grad.size()) p->grad.fill(T(0));
    }
  }

  int64_t count() const {
    int64_t c = 0;
    for (auto& [n, p] : entries) {
      (void)n;
      c += p->val.size();
    }
    return c;
  }
};

// ---- initializers ----
template <class T>
Tensor<T> he_normal(Shape s, int64_t fan_in, RngStream& rng) {
  Tensor<T> t(s);
  T std = std::sqrt(T(2) / static_cast<T>(fan_in));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.normal() * std);
  return t;
}

// ---- layers ----

template <class T>
struct Conv2dLayer {
  Var<T> w, b;
  int64_t cin = 0, cout = 0, k = 1, stride = 1, pad = 0;

  Conv2dLayer() = default;
  Conv2dLayer(ParamStore<T>& ps, const std::string& name, int64_t cin_, int64_t cout_, int64_t k_, int64_t stride_,
              RngStream& rng)
      : cin(cin_), cout(cout_), k(k_), stride(stride_), pad(k_ / 2) {
    w = ps.add(name + ".w", he_normal<T>({cout, cin, k, k}, cin * k * k, rng));
    b = ps.add(name + ".b", Tensor<T>({cout}));
  }

  Var<T> operator()(const Var<T>& x) const { return conv2d(x, w, b, stride, pad); }

  void describe(const std::string& name, int64_t& h, int64_t& wd, NetSpec& spec) const {
    h = (h + 2 * pad - k) / stride + 1;
    wd = (wd + 2 * pad - k) / stride + 1;
    spec.push_back({name, "conv2d", cin, cout, 1, k, k, 1, h, wd});
  }
};

template <class T>
struct Conv3dLayer {
  Var<T> w, b;
  int64_t cin = 0, cout = 0, k = 1, stride = 1, pad = 0;

  Conv3dLayer() = default;
  Conv3dLayer(ParamStore<T>& ps, const std::string& name, int64_t cin_, int64_t cout_, int64_t k_, int64_t stride_,
              RngStream& rng)
      : cin(cin_), cout(cout_), k(k_), stride(stride_), pad(k_ / 2) {
    w = ps.add(name + ".w", he_normal<T>({cout, cin, k, k, k}, cin * k * k * k, rng));
    b = ps.add(name + ".b", Tensor<T>({cout}));
  }

  Var<T> operator()(const Var<T>& x) const { return conv3d(x, w, b, stride, pad); }

  void describe(const std::string& name, int64_t& d, int64_t& h, int64_t& wd, NetSpec& spec) const {
    d = (d + 2 * pad - k) / stride + 1;
    h = (h + 2 * pad - k) / stride + 1;
    wd = (wd + 2 * pad - k) / stride + 1;
    spec.push_back({name, "conv3d", cin, cout, k, k, k, d, h, wd});
  }
};

template <class T>
struct LinearLayer {
  Var<T> w, b;
  int64_t cin = 0, cout = 0;

  LinearLayer() = default;
  LinearLayer(ParamStore<T>& ps, const std::string& name, int64_t cin_, int64_t cout_, RngStream& rng)
      : cin(cin_), cout(cout_) {
    w = ps.add(name + ".w", he_normal<T>({cout, cin}, cin, rng));
    b = ps.add(name + ".b", Tensor<T>({cout}));
  }

  Var<T> operator()(const Var<T>& x) const { return linear(x, w, b); }

  void describe(const std::string& name, NetSpec& spec) const {
    spec.push_back({name, "linear", cin, cout, 1, 1, 1, 1, 1, 1});
  }
};

// y[n,c,...] = x[n,c,...] * gamma[c] + beta[c]
template <class T>
Var<T> scale_channels(const Var<T>& x, const Var<T>& gamma, const Var<T>& beta) {
  const Shape& s = x->val.shape();
  int64_t N = s[0], C = s[1];
  int64_t M = 1;
  for (size_t i = 2; i < s.size(); ++i) M *= s[i];
  Tensor<T> out(s);
  const T* xd = x->val.data();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t c = 0; c < C; ++c) {
      T gm = gamma->val[c], bt = beta->val[c];
      const T* xr = xd + (n * C + c) * M;
      T* orow = out.data() + (n * C + c) * M;
      for (int64_t v = 0; v < M; ++v) orow[v] = xr[v] * gm + bt;
    }
  return make_op<T>(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, N, C, M](Node<T>& self) {
        const T* g = self.grad.data();
        const T* xd = x->val.data();
        if (x->requires_grad) x->ensure_grad();
        if (gamma->requires_grad) gamma->ensure_grad();
        if (beta->requires_grad) beta->ensure_grad();
        for (int64_t n = 0; n < N; ++n)
          for (int64_t c = 0; c < C; ++c) {
            const T* gr = g + (n * C + c) * M;
            const T* xr = xd + (n * C + c) * M;
            if (x->requires_grad) {
              T gm = gamma->val[c];
              T* xg = x->grad.data() + (n * C + c) * M;
              for (int64_t v = 0; v < M; ++v) xg[v] += gr[v] * gm;
            }
            if (gamma->requires_grad) {
              T acc = T(0);
              for (int64_t v = 0; v < M; ++v) acc += gr[v] * xr[v];
              gamma->grad[c] += acc;
            }
            if (beta->requires_grad) {
              T acc = T(0);
              for (int64_t v = 0; v < M; ++v) acc += gr[v];
              beta->grad[c] += acc;
            }
          }
      },
      "scale_channels");
}

template <class T>
Var<T> recip(const Var<T>& x) {
  return aginternal::unary_op<T>(
      x, [](T v) { return T(1) / v; }, [](T, T y) { return -y * y; }, "recip");
}

// per-sample per-channel normalization over the trailing spatial axes
template <class T>
struct InstanceNorm {
  Var<T> gamma, beta;

  InstanceNorm() = default;
  InstanceNorm(ParamStore<T>& ps, const std::string& name, int64_t channels) {
    gamma = ps.add(name + ".g", Tensor<T>::full({channels}, T(1)));
    beta = ps.add(name + ".b", Tensor<T>({channels}));
  }

  Var<T> operator()(const Var<T>& x) const {
    size_t ntrail = x->val.ndim() - 2;
    auto mu = mean_trailing(x, ntrail);
    auto xc = sub(x, broadcast_trailing(mu, x->val.shape()));
    auto var = mean_trailing(square(xc), ntrail);
    auto inv_std = recip(sqrt_op(add_scalar(var, T(1e-5))));
    auto norm = mul(xc, broadcast_trailing(inv_std, x->val.shape()));
    return scale_channels(norm, gamma, beta);
  }
};

// ---- optimizer ----

template <class T>
struct Adam {
  T lr = T(2e-4), beta1 = T(0.5), beta2 = T(0.999), eps = T(1e-8);
  int64_t t = 0;
  std::vector<Tensor<T>> m, v;

  Adam() = default;
  Adam(T lr_, T b1, T b2) : lr(lr_), beta1(b1), beta2(b2) {}

  void step(ParamStore<T>& ps) {
    if (m.empty()) {
      for (auto& [n, p] : ps.entries) {
        (void)n;
        m.push_back(Tensor<T>::zeros(p->val.shape()));
        v.push_back(Tensor<T>::zeros(p->val.shape()));
      }
    }
    ++t;
    T bc1 = T(1) - std::pow(beta1, static_cast<T>(t));
    T bc2 = T(1) - std::pow(beta2, static_cast<T>(t));
    for (size_t i = 0; i < ps.entries.size(); ++i) {
      auto& p = ps.entries[i].second;
      if (!p->grad.size()) continue;
      T* pm = m[i].data();
      T* pv = v[i].data();
      T* pd = p->val.data();
      const T* g = p->grad.data();
      for (int64_t j = 0; j < p->val.size(); ++j) {
        pm[j] = beta1 * pm[j] + (T(1) - beta1) * g[j];
        pv[j] = beta2 * pv[j] + (T(1) - beta2) * g[j] * g[j];
        T mh = pm[j] / bc1;
        T vh = pv[j] / bc2;
        pd[j] -= lr * mh / (std::sqrt(vh) + eps);
      }
    }
  }
};

}  // namespace sf

#endif
