#ifndef SUPERFACE_CONV_HPP
#define SUPERFACE_CONV_HPP

// Convolution / linear / pooling autograd ops. Convs run per-sample as
// im2col + GEMM (Eigen); backward recomputes the column buffer instead of
// caching it. Everything is single-threaded and sequential, so results are
// reproducible run to run.

#include <Eigen/Core>

#include "superface/autograd.hpp"

namespace sf {

namespace convdetail {

template <class T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class T>
using Map = Eigen::Map<MatRM<T>>;
template <class T>
using CMap = Eigen::Map<const MatRM<T>>;

// columns: (Ci*kh*kw) x (OH*OW), zero padding
template <class T>
void im2col2d(const T* x, int64_t Ci, int64_t H, int64_t W, int64_t kh, int64_t kw, int64_t stride, int64_t pad,
              int64_t OH, int64_t OW, T* col) {
  int64_t ncols = OH * OW;
  int64_t r = 0;
  for (int64_t c = 0; c < Ci; ++c)
    for (int64_t ky = 0; ky < kh; ++ky)
      for (int64_t kx = 0; kx < kw; ++kx, ++r) {
        T* dst = col + r * ncols;
        for (int64_t oy = 0; oy < OH; ++oy) {
          int64_t iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= H) {
            std::fill(dst + oy * OW, dst + (oy + 1) * OW, T(0));
            continue;
          }
          const T* src = x + (c * H + iy) * W;
          for (int64_t ox = 0; ox < OW; ++ox) {
            int64_t ix = ox * stride - pad + kx;
            dst[oy * OW + ox] = (ix >= 0 && ix < W) ? src[ix] : T(0);
          }
        }
      }
}

template <class T>
void col2im2d(const T* col, int64_t Ci, int64_t H, int64_t W, int64_t kh, int64_t kw, int64_t stride, int64_t pad,
              int64_t OH, int64_t OW, T* x) {
  int64_t ncols = OH * OW;
  int64_t r = 0;
  for (int64_t c = 0; c < Ci; ++c)
    for (int64_t ky = 0; ky < kh; ++ky)
      for (int64_t kx = 0; kx < kw; ++kx, ++r) {
        const T* src = col + r * ncols;
        for (int64_t oy = 0; oy < OH; ++oy) {
          int64_t iy = oy * stride - pad + ky;
          if (iy < 0 || iy >= H) continue;
          T* dst = x + (c * H + iy) * W;
          for (int64_t ox = 0; ox < OW; ++ox) {
            int64_t ix = ox * stride - pad + kx;
            if (ix >= 0 && ix < W) dst[ix] += src[oy * OW + ox];
          }
        }
      }
}

template <class T>
void im2col3d(const T* x, int64_t Ci, int64_t D, int64_t H, int64_t W, int64_t kd, int64_t kh, int64_t kw,
              int64_t stride, int64_t pad, int64_t OD, int64_t OH, int64_t OW, T* col) {
  int64_t ncols = OD * OH * OW;
  int64_t r = 0;
  for (int64_t c = 0; c < Ci; ++c)
    for (int64_t kz = 0; kz < kd; ++kz)
      for (int64_t ky = 0; ky < kh; ++ky)
        for (int64_t kx = 0; kx < kw; ++kx, ++r) {
          T* dst = col + r * ncols;
          for (int64_t oz = 0; oz < OD; ++oz) {
            int64_t iz = oz * stride - pad + kz;
            for (int64_t oy = 0; oy < OH; ++oy) {
              int64_t iy = oy * stride - pad + ky;
              T* drow = dst + (oz * OH + oy) * OW;
              if (iz < 0 || iz >= D || iy < 0 || iy >= H) {
                std::fill(drow, drow + OW, T(0));
                continue;
              }
              const T* src = x + ((c * D + iz) * H + iy) * W;
              for (int64_t ox = 0; ox < OW; ++ox) {
                int64_t ix = ox * stride - pad + kx;
                drow[ox] = (ix >= 0 && ix < W) ? src[ix] : T(0);
              }
            }
          }
        }
}

template <class T>
void col2im3d(const T* col, int64_t Ci, int64_t D, int64_t H, int64_t W, int64_t kd, int64_t kh, int64_t kw,
              int64_t stride, int64_t pad, int64_t OD, int64_t OH, int64_t OW, T* x) {
  int64_t ncols = OD * OH * OW;
  int64_t r = 0;
  for (int64_t c = 0; c < Ci; ++c)
    for (int64_t kz = 0; kz < kd; ++kz)
      for (int64_t ky = 0; ky < kh; ++ky)
        for (int64_t kx = 0; kx < kw; ++kx, ++r) {
          const T* src = col + r * ncols;
          for (int64_t oz = 0; oz < OD; ++oz) {
            int64_t iz = oz * stride - pad + kz;
            if (iz < 0 || iz >= D) continue;
            for (int64_t oy = 0; oy < OH; ++oy) {
              int64_t iy = oy * stride - pad + ky;
              if (iy < 0 || iy >= H) continue;
              T* dst = x + ((c * D + iz) * H + iy) * W;
              const T* srow = src + (oz * OH + oy) * OW;
              for (int64_t ox = 0; ox < OW; ++ox) {
                int64_t ix = ox * stride - pad + kx;
                if (ix >= 0 && ix < W) dst[ix] += srow[ox];
              }
            }
          }
        }
}

inline int64_t out_dim(int64_t in, int64_t k, int64_t stride, int64_t pad) { return (in + 2 * pad - k) / stride + 1; }

}  // namespace convdetail

template <class T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int64_t stride = 1, int64_t pad = 0) {
  using namespace convdetail;
  const Shape& xs = x->val.shape();
  const Shape& ws = w->val.shape();
  if (xs.size() != 4 || ws.size() != 4 || xs[1] != ws[1])
    throw ShapeMismatch("conv2d: x" + shape_str(xs) + " w" + shape_str(ws));
  int64_t N = xs[0], Ci = xs[1], H = xs[2], W = xs[3];
  int64_t Co = ws[0], kh = ws[2], kw = ws[3];
  int64_t OH = out_dim(H, kh, stride, pad), OW = out_dim(W, kw, stride, pad);
  int64_t K = Ci * kh * kw, M = OH * OW;

  Tensor<T> out({N, Co, OH, OW});
  std::vector<T> col(static_cast<size_t>(K * M));
  CMap<T> wm(w->val.data(), Co, K);
  for (int64_t n = 0; n < N; ++n) {
    im2col2d(x->val.data() + n * Ci * H * W, Ci, H, W, kh, kw, stride, pad, OH, OW, col.data());
    CMap<T> cm(col.data(), K, M);
    Map<T> om(out.data() + n * Co * M, Co, M);
    om.noalias() = wm * cm;
    if (b) {
      const T* bd = b->val.data();
      for (int64_t c = 0; c < Co; ++c) {
        T bv = bd[c];
        T* row = out.data() + (n * Co + c) * M;
        for (int64_t i = 0; i < M; ++i) row[i] += bv;
      }
    }
  }

  std::vector<Var<T>> parents = b ? std::vector<Var<T>>{x, w, b} : std::vector<Var<T>>{x, w};
  return make_op<T>(
      std::move(out), std::move(parents),
      [x, w, b, N, Ci, H, W, Co, kh, kw, stride, pad, OH, OW, K, M](Node<T>& self) {
        std::vector<T> col(static_cast<size_t>(K * M)), dcol(static_cast<size_t>(K * M));
        CMap<T> wm(w->val.data(), Co, K);
        if (x->requires_grad) x->ensure_grad();
        if (w->requires_grad) w->ensure_grad();
        if (b && b->requires_grad) b->ensure_grad();
        for (int64_t n = 0; n < N; ++n) {
          CMap<T> go(self.grad.data() + n * Co * M, Co, M);
          if (w->requires_grad || x->requires_grad) im2col2d(x->val.data() + n * Ci * H * W, Ci, H, W, kh, kw, stride, pad, OH, OW, col.data());
          if (w->requires_grad) {
            CMap<T> cm(col.data(), K, M);
            Map<T> wg(w->grad.data(), Co, K);
            wg.noalias() += go * cm.transpose();
          }
          if (x->requires_grad) {
            Map<T> dcm(dcol.data(), K, M);
            dcm.noalias() = wm.transpose() * go;
            col2im2d(dcol.data(), Ci, H, W, kh, kw, stride, pad, OH, OW, x->grad.data() + n * Ci * H * W);
          }
          if (b && b->requires_grad) {
            T* bg = b->grad.data();
            for (int64_t c = 0; c < Co; ++c) {
              const T* row = self.grad.data() + (n * Co + c) * M;
              T acc = T(0);
              for (int64_t i = 0; i < M; ++i) acc += row[i];
              bg[c] += acc;
            }
          }
        }
      },
      "conv2d");
}

template <class T>
Var<T> conv3d(const Var<T>& x, const Var<T>& w, const Var<T>& b, int64_t stride = 1, int64_t pad = 0) {
  using namespace convdetail;
  const Shape& xs = x->val.shape();
  const Shape& ws = w->val.shape();
  if (xs.size() != 5 || ws.size() != 5 || xs[1] != ws[1])
    throw ShapeMismatch("conv3d: x" + shape_str(xs) + " w" + shape_str(ws));
  int64_t N = xs[0], Ci = xs[1], D = xs[2], H = xs[3], W = xs[4];
  int64_t Co = ws[0], kd = ws[2], kh = ws[3], kw = ws[4];
  int64_t OD = out_dim(D, kd, stride, pad), OH = out_dim(H, kh, stride, pad), OW = out_dim(W, kw, stride, pad);
  int64_t K = Ci * kd * kh * kw, M = OD * OH * OW;

  Tensor<T> out({N, Co, OD, OH, OW});
  std::vector<T> col(static_cast<size_t>(K * M));
  CMap<T> wm(w->val.data(), Co, K);
  for (int64_t n = 0; n < N; ++n) {
    im2col3d(x->val.data() + n * Ci * D * H * W, Ci, D, H, W, kd, kh, kw, stride, pad, OD, OH, OW, col.data());
    CMap<T> cm(col.data(), K, M);
    Map<T> om(out.data() + n * Co * M, Co, M);
    om.noalias() = wm * cm;
    if (b) {
      const T* bd = b->val.data();
      for (int64_t c = 0; c < Co; ++c) {
        T bv = bd[c];
        T* row = out.data() + (n * Co + c) * M;
        for (int64_t i = 0; i < M; ++i) row[i] += bv;
      }
    }
  }

  std::vector<Var<T>> parents = b ? std::vector<Var<T>>{x, w, b} : std::vector<Var<T>>{x, w};
  return make_op<T>(
      std::move(out), std::move(parents),
      [x, w, b, N, Ci, D, H, W, Co, kd, kh, kw, stride, pad, OD, OH, OW, K, M](Node<T>& self) {
        std::vector<T> col(static_cast<size_t>(K * M)), dcol(static_cast<size_t>(K * M));
        CMap<T> wm(w->val.data(), Co, K);
        if (x->requires_grad) x->ensure_grad();
        if (w->requires_grad) w->ensure_grad();
        if (b && b->requires_grad) b->ensure_grad();
        for (int64_t n = 0; n < N; ++n) {
          CMap<T> go(self.grad.data() + n * Co * M, Co, M);
          if (w->requires_grad || x->requires_grad) im2col3d(x->val.data() + n * Ci * D * H * W, Ci, D, H, W, kd, kh, kw, stride, pad, OD, OH, OW, col.data());
          if (w->requires_grad) {
            CMap<T> cm(col.data(), K, M);
            Map<T> wg(w->grad.data(), Co, K);
            wg.noalias() += go * cm.transpose();
          }
          if (x->requires_grad) {
            Map<T> dcm(dcol.data(), K, M);
            dcm.noalias() = wm.transpose() * go;
            col2im3d(dcol.data(), Ci, D, H, W, kd, kh, kw, stride, pad, OD, OH, OW,
                     x->grad.data() + n * Ci * D * H * W);
          }
          if (b && b->requires_grad) {
            T* bg = b->grad.data();
            for (int64_t c = 0; c < Co; ++c) {
              const T* row = self.grad.data() + (n * Co + c) * M;
              T acc = T(0);
              for (int64_t i = 0; i < M; ++i) acc += row[i];
              bg[c] += acc;
            }
          }
        }
      },
      "conv3d");
}

// x: (N,in) , w: (out,in) , b: (out) -> (N,out)
template <class T>
Var<T> linear(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
  using namespace convdetail;
  int64_t N = x->val.shape()[0], In = x->val.shape()[1];
  int64_t Out = w->val.shape()[0];
  if (w->val.shape()[1] != In) throw ShapeMismatch("linear");
  Tensor<T> out({N, Out});
  CMap<T> xm(x->val.data(), N, In), wm(w->val.data(), Out, In);
  Map<T> om(out.data(), N, Out);
  om.noalias() = xm * wm.transpose();
  if (b)
    for (int64_t n = 0; n < N; ++n)
      for (int64_t o = 0; o < Out; ++o) out[n * Out + o] += b->val[o];
  std::vector<Var<T>> parents = b ? std::vector<Var<T>>{x, w, b} : std::vector<Var<T>>{x, w};
  return make_op<T>(
      std::move(out), std::move(parents),
      [x, w, b, N, In, Out](Node<T>& self) {
        CMap<T> go(self.grad.data(), N, Out);
        if (x->requires_grad) {
          x->ensure_grad();
          Map<T> xg(x->grad.data(), N, In);
          CMap<T> wm(w->val.data(), Out, In);
          xg.noalias() += go * wm;
        }
        if (w->requires_grad) {
          w->ensure_grad();
          Map<T> wg(w->grad.data(), Out, In);
          CMap<T> xm(x->val.data(), N, In);
          wg.noalias() += go.transpose() * xm;
        }
        if (b && b->requires_grad) {
          b->ensure_grad();
          for (int64_t n = 0; n < N; ++n)
            for (int64_t o = 0; o < Out; ++o) b->grad[o] += self.grad[n * Out + o];
        }
      },
      "linear");
}

// non-overlapping average pooling, kernel == stride
template <class T>
Var<T> avg_pool2d(const Var<T>& x, int64_t k) {
  const Shape& s = x->val.shape();
  int64_t N = s[0], C = s[1], H = s[2], W = s[3];
  if (H % k || W % k) throw ShapeMismatch("avg_pool2d: size not divisible");
  int64_t OH = H / k, OW = W / k;
  Tensor<T> out({N, C, OH, OW});
  T scale = T(1) / static_cast<T>(k * k);
  const T* xd = x->val.data();
  for (int64_t nc = 0; nc < N * C; ++nc)
    for (int64_t oy = 0; oy < OH; ++oy)
      for (int64_t ox = 0; ox < OW; ++ox) {
        T acc = T(0);
        for (int64_t dy = 0; dy < k; ++dy)
          for (int64_t dx = 0; dx < k; ++dx) acc += xd[(nc * H + oy * k + dy) * W + ox * k + dx];
        out[(nc * OH + oy) * OW + ox] = acc * scale;
      }
  return make_op<T>(
      std::move(out), {x},
      [x, N, C, H, W, OH, OW, k, scale](Node<T>& self) {
        x->ensure_grad();
        T* xg = x->grad.data();
        const T* g = self.grad.data();
        for (int64_t nc = 0; nc < N * C; ++nc)
          for (int64_t oy = 0; oy < OH; ++oy)
            for (int64_t ox = 0; ox < OW; ++ox) {
              T gv = g[(nc * OH + oy) * OW + ox] * scale;
              for (int64_t dy = 0; dy < k; ++dy)
                for (int64_t dx = 0; dx < k; ++dx) xg[(nc * H + oy * k + dy) * W + ox * k + dx] += gv;
            }
      },
      "avg_pool2d");
}

template <class T>
Var<T> upsample_nearest2d(const Var<T>& x, int64_t f) {
  const Shape& s = x->val.shape();
  int64_t N = s[0], C = s[1], H = s[2], W = s[3];
  int64_t OH = H * f, OW = W * f;
  Tensor<T> out({N, C, OH, OW});
  const T* xd = x->val.data();
  for (int64_t nc = 0; nc < N * C; ++nc)
    for (int64_t oy = 0; oy < OH; ++oy) {
      const T* src = xd + (nc * H + oy / f) * W;
      T* dst = out.data() + (nc * OH + oy) * OW;
      for (int64_t ox = 0; ox < OW; ++ox) dst[ox] = src[ox / f];
    }
  return make_op<T>(
      std::move(out), {x},
      [x, N, C, H, W, OH, OW, f](Node<T>& self) {
        x->ensure_grad();
        T* xg = x->grad.data();
        const T* g = self.grad.data();
        for (int64_t nc = 0; nc < N * C; ++nc)
          for (int64_t oy = 0; oy < OH; ++oy) {
            const T* gr = g + (nc * OH + oy) * OW;
            T* xr = xg + (nc * H + oy / f) * W;
            for (int64_t ox = 0; ox < OW; ++ox) xr[ox / f] += gr[ox];
          }
      },
      "upsample_nearest2d");
}

}  // namespace sf

#endif
