#ifndef SUPERFACE_SAMPLING_HPP
#define SUPERFACE_SAMPLING_HPP

// Grid sampling and keypoint-field ops.
//
// Conventions (shared project-wide):
//  - normalized coordinates live in [-1,1], align-corners style: p maps to
//    pixel q = (p+1)/2*(S-1); axis order in grids is x (width), y (height),
//    then z (depth) as channels.
//  - out-of-range samples clamp to the border; the gradient w.r.t. the grid
//    is zero where the clamp is active.

#include <cmath>

#include "superface/autograd.hpp"

namespace sf {

namespace sampdetail {
template <class T>
inline T clampT(T v, T lo, T hi) {
  return v < lo ? lo : (v > hi ? hi : v);
}
// normalized -> pixel
template <class T>
inline T to_pix(T p, int64_t S) {
  return (p + T(1)) * T(0.5) * static_cast<T>(S - 1);
}
template <class T>
inline T norm_coord(int64_t i, int64_t S) {
  return S > 1 ? T(-1) + T(2) * static_cast<T>(i) / static_cast<T>(S - 1) : T(0);
}
}  // namespace sampdetail

// input (N,C,H,W), grid (N,2,OH,OW) -> (N,C,OH,OW); bilinear, border clamp
template <class T>
Var<T> grid_sample_2d(const Var<T>& input, const Var<T>& grid) {
  using namespace sampdetail;
  const Shape& is = input->val.shape();
  const Shape& gs = grid->val.shape();
  if (is.size() != 4 || gs.size() != 4 || gs[1] != 2 || is[0] != gs[0]) throw ShapeMismatch("grid_sample_2d");
  int64_t N = is[0], C = is[1], H = is[2], W = is[3];
  int64_t OH = gs[2], OW = gs[3], M = OH * OW;

  Tensor<T> out({N, C, OH, OW});
  const T* gd = grid->val.data();
  const T* xd = input->val.data();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t v = 0; v < M; ++v) {
      T qx = clampT(to_pix(gd[(n * 2 + 0) * M + v], W), T(0), static_cast<T>(W - 1));
      T qy = clampT(to_pix(gd[(n * 2 + 1) * M + v], H), T(0), static_cast<T>(H - 1));
      int64_t x0 = static_cast<int64_t>(std::floor(qx)), y0 = static_cast<int64_t>(std::floor(qy));
      int64_t x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
      T fx = qx - static_cast<T>(x0), fy = qy - static_cast<T>(y0);
      for (int64_t c = 0; c < C; ++c) {
        const T* plane = xd + (n * C + c) * H * W;
        T v00 = plane[y0 * W + x0], v01 = plane[y0 * W + x1];
        T v10 = plane[y1 * W + x0], v11 = plane[y1 * W + x1];
        out[(n * C + c) * M + v] =
            (T(1) - fy) * ((T(1) - fx) * v00 + fx * v01) + fy * ((T(1) - fx) * v10 + fx * v11);
      }
    }

  return make_op<T>(
      std::move(out), {input, grid},
      [input, grid, N, C, H, W, OH, OW, M](Node<T>& self) {
        const T* gd = grid->val.data();
        const T* xd = input->val.data();
        const T* og = self.grad.data();
        if (input->requires_grad) input->ensure_grad();
        if (grid->requires_grad) grid->ensure_grad();
        for (int64_t n = 0; n < N; ++n)
          for (int64_t v = 0; v < M; ++v) {
            T px = gd[(n * 2 + 0) * M + v], py = gd[(n * 2 + 1) * M + v];
            T qxr = to_pix(px, W), qyr = to_pix(py, H);
            T qx = clampT(qxr, T(0), static_cast<T>(W - 1));
            T qy = clampT(qyr, T(0), static_cast<T>(H - 1));
            bool inx = qxr > T(0) && qxr < static_cast<T>(W - 1);
            bool iny = qyr > T(0) && qyr < static_cast<T>(H - 1);
            int64_t x0 = static_cast<int64_t>(std::floor(qx)), y0 = static_cast<int64_t>(std::floor(qy));
            int64_t x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1);
            T fx = qx - static_cast<T>(x0), fy = qy - static_cast<T>(y0);
            T dqx = T(0), dqy = T(0);
            for (int64_t c = 0; c < C; ++c) {
              T g = og[(n * C + c) * M + v];
              if (g == T(0)) continue;
              const T* plane = xd + (n * C + c) * H * W;
              T v00 = plane[y0 * W + x0], v01 = plane[y0 * W + x1];
              T v10 = plane[y1 * W + x0], v11 = plane[y1 * W + x1];
              if (input->requires_grad) {
                T* gx = input->grad.data() + (n * C + c) * H * W;
                gx[y0 * W + x0] += g * (T(1) - fy) * (T(1) - fx);
                gx[y0 * W + x1] += g * (T(1) - fy) * fx;
                gx[y1 * W + x0] += g * fy * (T(1) - fx);
                gx[y1 * W + x1] += g * fy * fx;
              }
              dqx += g * ((T(1) - fy) * (v01 - v00) + fy * (v11 - v10));
              dqy += g * ((T(1) - fx) * (v10 - v00) + fx * (v11 - v01));
            }
            if (grid->requires_grad) {
              T* gg = grid->grad.data();
              if (inx) gg[(n * 2 + 0) * M + v] += dqx * T(0.5) * static_cast<T>(W - 1);
              if (iny) gg[(n * 2 + 1) * M + v] += dqy * T(0.5) * static_cast<T>(H - 1);
            }
          }
      },
      "grid_sample_2d");
}

// input (N,C,D,H,W), grid (N,3,D,H,W) -> (N,C,D,H,W); trilinear, border clamp
template <class T>
Var<T> grid_sample_3d(const Var<T>& input, const Var<T>& grid) {
  using namespace sampdetail;
  const Shape& is = input->val.shape();
  const Shape& gs = grid->val.shape();
  if (is.size() != 5 || gs.size() != 5 || gs[1] != 3 || is[0] != gs[0]) throw ShapeMismatch("grid_sample_3d");
  int64_t N = is[0], C = is[1], D = is[2], H = is[3], W = is[4];
  int64_t OD = gs[2], OH = gs[3], OW = gs[4];
  int64_t M = OD * OH * OW;

  Tensor<T> out({N, C, OD, OH, OW});
  const T* gd = grid->val.data();
  const T* xd = input->val.data();
  auto sample_plane = [&](const T* vol, T qx, T qy, T qz, int64_t x0, int64_t x1, int64_t y0, int64_t y1, int64_t z0,
                          int64_t z1, T fx, T fy, T fz) {
    (void)qx; (void)qy; (void)qz;
    T c00 = vol[(z0 * H + y0) * W + x0] * (T(1) - fx) + vol[(z0 * H + y0) * W + x1] * fx;
    T c01 = vol[(z0 * H + y1) * W + x0] * (T(1) - fx) + vol[(z0 * H + y1) * W + x1] * fx;
    T c10 = vol[(z1 * H + y0) * W + x0] * (T(1) - fx) + vol[(z1 * H + y0) * W + x1] * fx;
    T c11 = vol[(z1 * H + y1) * W + x0] * (T(1) - fx) + vol[(z1 * H + y1) * W + x1] * fx;
    return (c00 * (T(1) - fy) + c01 * fy) * (T(1) - fz) + (c10 * (T(1) - fy) + c11 * fy) * fz;
  };
  for (int64_t n = 0; n < N; ++n)
    for (int64_t v = 0; v < M; ++v) {
      T qx = clampT(to_pix(gd[(n * 3 + 0) * M + v], W), T(0), static_cast<T>(W - 1));
      T qy = clampT(to_pix(gd[(n * 3 + 1) * M + v], H), T(0), static_cast<T>(H - 1));
      T qz = clampT(to_pix(gd[(n * 3 + 2) * M + v], D), T(0), static_cast<T>(D - 1));
      int64_t x0 = static_cast<int64_t>(std::floor(qx)), y0 = static_cast<int64_t>(std::floor(qy)),
              z0 = static_cast<int64_t>(std::floor(qz));
      int64_t x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1), z1 = std::min(z0 + 1, D - 1);
      T fx = qx - static_cast<T>(x0), fy = qy - static_cast<T>(y0), fz = qz - static_cast<T>(z0);
      for (int64_t c = 0; c < C; ++c)
        out[(n * C + c) * M + v] = sample_plane(xd + (n * C + c) * D * H * W, qx, qy, qz, x0, x1, y0, y1, z0, z1, fx,
                                                fy, fz);
    }

  return make_op<T>(
      std::move(out), {input, grid},
      [input, grid, N, C, D, H, W, M](Node<T>& self) {
        const T* gd = grid->val.data();
        const T* xd = input->val.data();
        const T* og = self.grad.data();
        if (input->requires_grad) input->ensure_grad();
        if (grid->requires_grad) grid->ensure_grad();
        for (int64_t n = 0; n < N; ++n)
          for (int64_t v = 0; v < M; ++v) {
            T px = gd[(n * 3 + 0) * M + v], py = gd[(n * 3 + 1) * M + v], pz = gd[(n * 3 + 2) * M + v];
            T qxr = to_pix(px, W), qyr = to_pix(py, H), qzr = to_pix(pz, D);
            T qx = clampT(qxr, T(0), static_cast<T>(W - 1));
            T qy = clampT(qyr, T(0), static_cast<T>(H - 1));
            T qz = clampT(qzr, T(0), static_cast<T>(D - 1));
            bool inx = qxr > T(0) && qxr < static_cast<T>(W - 1);
            bool iny = qyr > T(0) && qyr < static_cast<T>(H - 1);
            bool inz = qzr > T(0) && qzr < static_cast<T>(D - 1);
            int64_t x0 = static_cast<int64_t>(std::floor(qx)), y0 = static_cast<int64_t>(std::floor(qy)),
                    z0 = static_cast<int64_t>(std::floor(qz));
            int64_t x1 = std::min(x0 + 1, W - 1), y1 = std::min(y0 + 1, H - 1), z1 = std::min(z0 + 1, D - 1);
            T fx = qx - static_cast<T>(x0), fy = qy - static_cast<T>(y0), fz = qz - static_cast<T>(z0);
            T dqx = T(0), dqy = T(0), dqz = T(0);
            for (int64_t c = 0; c < C; ++c) {
              T g = og[(n * C + c) * M + v];
              if (g == T(0)) continue;
              const T* vol = xd + (n * C + c) * D * H * W;
              T w000 = (T(1) - fx) * (T(1) - fy) * (T(1) - fz), w100 = fx * (T(1) - fy) * (T(1) - fz);
              T w010 = (T(1) - fx) * fy * (T(1) - fz), w110 = fx * fy * (T(1) - fz);
              T w001 = (T(1) - fx) * (T(1) - fy) * fz, w101 = fx * (T(1) - fy) * fz;
              T w011 = (T(1) - fx) * fy * fz, w111 = fx * fy * fz;
              if (input->requires_grad) {
                T* gx = input->grad.data() + (n * C + c) * D * H * W;
                gx[(z0 * H + y0) * W + x0] += g * w000;
                gx[(z0 * H + y0) * W + x1] += g * w100;
                gx[(z0 * H + y1) * W + x0] += g * w010;
                gx[(z0 * H + y1) * W + x1] += g * w110;
                gx[(z1 * H + y0) * W + x0] += g * w001;
                gx[(z1 * H + y0) * W + x1] += g * w101;
                gx[(z1 * H + y1) * W + x0] += g * w011;
                gx[(z1 * H + y1) * W + x1] += g * w111;
              }
              T v000 = vol[(z0 * H + y0) * W + x0], v100 = vol[(z0 * H + y0) * W + x1];
              T v010 = vol[(z0 * H + y1) * W + x0], v110 = vol[(z0 * H + y1) * W + x1];
              T v001 = vol[(z1 * H + y0) * W + x0], v101 = vol[(z1 * H + y0) * W + x1];
              T v011 = vol[(z1 * H + y1) * W + x0], v111 = vol[(z1 * H + y1) * W + x1];
              dqx += g * ((v100 - v000) * (T(1) - fy) * (T(1) - fz) + (v110 - v010) * fy * (T(1) - fz) +
                          (v101 - v001) * (T(1) - fy) * fz + (v111 - v011) * fy * fz);
              dqy += g * ((v010 - v000) * (T(1) - fx) * (T(1) - fz) + (v110 - v100) * fx * (T(1) - fz) +
                          (v011 - v001) * (T(1) - fx) * fz + (v111 - v101) * fx * fz);
              dqz += g * ((v001 - v000) * (T(1) - fx) * (T(1) - fy) + (v101 - v100) * fx * (T(1) - fy) +
                          (v011 - v010) * (T(1) - fx) * fy + (v111 - v110) * fx * fy);
            }
            if (grid->requires_grad) {
              T* gg = grid->grad.data();
              if (inx) gg[(n * 3 + 0) * M + v] += dqx * T(0.5) * static_cast<T>(W - 1);
              if (iny) gg[(n * 3 + 1) * M + v] += dqy * T(0.5) * static_cast<T>(H - 1);
              if (inz) gg[(n * 3 + 2) * M + v] += dqz * T(0.5) * static_cast<T>(D - 1);
            }
          }
      },
      "grid_sample_3d");
}

// identity sampling grids in normalized coordinates
template <class T>
Tensor<T> identity_grid_2d(int64_t H, int64_t W) {
  Tensor<T> g({1, 2, H, W});
  for (int64_t y = 0; y < H; ++y)
    for (int64_t x = 0; x < W; ++x) {
      g[(0 * H + y) * W + x] = sampdetail::norm_coord<T>(x, W);
      g[(1 * H + y) * W + x] = sampdetail::norm_coord<T>(y, H);
    }
  return g;
}

template <class T>
Tensor<T> identity_grid_3d(int64_t D, int64_t H, int64_t W) {
  Tensor<T> g({1, 3, D, H, W});
  int64_t M = D * H * W;
  for (int64_t z = 0; z < D; ++z)
    for (int64_t y = 0; y < H; ++y)
      for (int64_t x = 0; x < W; ++x) {
        int64_t v = (z * H + y) * W + x;
        g[0 * M + v] = sampdetail::norm_coord<T>(x, W);
        g[1 * M + v] = sampdetail::norm_coord<T>(y, H);
        g[2 * M + v] = sampdetail::norm_coord<T>(z, D);
      }
  return g;
}

template <class T>
Tensor<T> tile_batch(const Tensor<T>& t, int64_t N) {
  Shape s = t.shape();
  s[0] = N;
  Tensor<T> out(s);
  int64_t sz = t.size();
  for (int64_t n = 0; n < N; ++n) std::copy(t.data(), t.data() + sz, out.data() + n * sz);
  return out;
}

// gaussian heatmaps from keypoints. kp (N,k,3) -> (N,k,D,H,W)
template <class T>
Var<T> kp_to_heatmap_3d(const Var<T>& kp, int64_t D, int64_t H, int64_t W, T sigma) {
  using namespace sampdetail;
  int64_t N = kp->val.shape()[0], K = kp->val.shape()[1];
  int64_t M = D * H * W;
  Tensor<T> out({N, K, D, H, W});
  const T* pd = kp->val.data();
  T inv2s2 = T(1) / (T(2) * sigma * sigma);
  for (int64_t n = 0; n < N; ++n)
    for (int64_t j = 0; j < K; ++j) {
      T px = pd[(n * K + j) * 3 + 0], py = pd[(n * K + j) * 3 + 1], pz = pd[(n * K + j) * 3 + 2];
      T* o = out.data() + (n * K + j) * M;
      for (int64_t z = 0; z < D; ++z) {
        T dz = norm_coord<T>(z, D) - pz;
        for (int64_t y = 0; y < H; ++y) {
          T dy = norm_coord<T>(y, H) - py;
          T dzy = dz * dz + dy * dy;
          for (int64_t x = 0; x < W; ++x) {
            T dx = norm_coord<T>(x, W) - px;
            o[(z * H + y) * W + x] = std::exp(-(dzy + dx * dx) * inv2s2);
          }
        }
      }
    }
  return make_op<T>(
      std::move(out), {kp},
      [kp, N, K, D, H, W, M, inv2s2](Node<T>& self) {
        kp->ensure_grad();
        const T* pd = kp->val.data();
        const T* y_ = self.val.data();
        const T* g = self.grad.data();
        T* pg = kp->grad.data();
        for (int64_t n = 0; n < N; ++n)
          for (int64_t j = 0; j < K; ++j) {
            T px = pd[(n * K + j) * 3 + 0], py = pd[(n * K + j) * 3 + 1], pz = pd[(n * K + j) * 3 + 2];
            T ax = T(0), ay = T(0), az = T(0);
            const T* yv = y_ + (n * K + j) * M;
            const T* gv = g + (n * K + j) * M;
            for (int64_t z = 0; z < D; ++z) {
              T dz = norm_coord<T>(z, D) - pz;
              for (int64_t yy = 0; yy < H; ++yy) {
                T dy = norm_coord<T>(yy, H) - py;
                for (int64_t x = 0; x < W; ++x) {
                  T gh = gv[(z * H + yy) * W + x] * yv[(z * H + yy) * W + x] * T(2) * inv2s2;
                  if (gh == T(0)) continue;
                  T dx = norm_coord<T>(x, W) - px;
                  ax += gh * dx;
                  ay += gh * dy;
                  az += gh * dz;
                }
              }
            }
            pg[(n * K + j) * 3 + 0] += ax;
            pg[(n * K + j) * 3 + 1] += ay;
            pg[(n * K + j) * 3 + 2] += az;
          }
      },
      "kp_to_heatmap_3d");
}

// kp (N,k,2) -> (N,k,H,W)
template <class T>
Var<T> kp_to_heatmap_2d(const Var<T>& kp, int64_t H, int64_t W, T sigma) {
  using namespace sampdetail;
  int64_t N = kp->val.shape()[0], K = kp->val.shape()[1];
  int64_t M = H * W;
  Tensor<T> out({N, K, H, W});
  const T* pd = kp->val.data();
  T inv2s2 = T(1) / (T(2) * sigma * sigma);
  for (int64_t n = 0; n < N; ++n)
    for (int64_t j = 0; j < K; ++j) {
      T px = pd[(n * K + j) * 2 + 0], py = pd[(n * K + j) * 2 + 1];
      T* o = out.data() + (n * K + j) * M;
      for (int64_t y = 0; y < H; ++y) {
        T dy = norm_coord<T>(y, H) - py;
        for (int64_t x = 0; x < W; ++x) {
          T dx = norm_coord<T>(x, W) - px;
          o[y * W + x] = std::exp(-(dy * dy + dx * dx) * inv2s2);
        }
      }
    }
  return make_op<T>(
      std::move(out), {kp},
      [kp, N, K, H, W, M, inv2s2](Node<T>& self) {
        kp->ensure_grad();
        const T* pd = kp->val.data();
        const T* yv_ = self.val.data();
        const T* g = self.grad.data();
        T* pg = kp->grad.data();
        for (int64_t n = 0; n < N; ++n)
          for (int64_t j = 0; j < K; ++j) {
            T px = pd[(n * K + j) * 2 + 0], py = pd[(n * K + j) * 2 + 1];
            T ax = T(0), ay = T(0);
            const T* yv = yv_ + (n * K + j) * M;
            const T* gv = g + (n * K + j) * M;
            for (int64_t y = 0; y < H; ++y) {
              T dy = norm_coord<T>(y, H) - py;
              for (int64_t x = 0; x < W; ++x) {
                T gh = gv[y * W + x] * yv[y * W + x] * T(2) * inv2s2;
                if (gh == T(0)) continue;
                ax += gh * (norm_coord<T>(x, W) - px);
                ay += gh * dy;
              }
            }
            pg[(n * K + j) * 2 + 0] += ax;
            pg[(n * K + j) * 2 + 1] += ay;
          }
      },
      "kp_to_heatmap_2d");
}

// Convex combination of candidate flows. Channel 0 of `weights` is the
// identity candidate (zero delta); channel j>0 carries deltas[j-1].
// weights (N,K,spatial...), deltas (N,K-1,A) -> (N,A,spatial...)
template <class T>
Var<T> weighted_delta_field(const Var<T>& weights, const Var<T>& deltas) {
  const Shape& ws = weights->val.shape();
  const Shape& ds = deltas->val.shape();
  int64_t N = ws[0], K = ws[1];
  if (ds[0] != N || ds[1] != K - 1) throw ShapeMismatch("weighted_delta_field");
  int64_t A = ds[2];
  int64_t M = 1;
  for (size_t i = 2; i < ws.size(); ++i) M *= ws[i];
  Shape os;
  os.push_back(N);
  os.push_back(A);
  for (size_t i = 2; i < ws.size(); ++i) os.push_back(ws[i]);
  Tensor<T> out(os);
  const T* wd = weights->val.data();
  const T* dd = deltas->val.data();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t j = 1; j < K; ++j) {
      const T* wrow = wd + (n * K + j) * M;
      for (int64_t a = 0; a < A; ++a) {
        T dv = dd[(n * (K - 1) + j - 1) * A + a];
        if (dv == T(0)) continue;
        T* orow = out.data() + (n * A + a) * M;
        for (int64_t v = 0; v < M; ++v) orow[v] += wrow[v] * dv;
      }
    }
  return make_op<T>(
      std::move(out), {weights, deltas},
      [weights, deltas, N, K, A, M](Node<T>& self) {
        const T* wd = weights->val.data();
        const T* dd = deltas->val.data();
        const T* g = self.grad.data();
        if (weights->requires_grad) weights->ensure_grad();
        if (deltas->requires_grad) deltas->ensure_grad();
        for (int64_t n = 0; n < N; ++n)
          for (int64_t j = 1; j < K; ++j) {
            for (int64_t a = 0; a < A; ++a) {
              T dv = dd[(n * (K - 1) + j - 1) * A + a];
              const T* grow = g + (n * A + a) * M;
              if (weights->requires_grad && dv != T(0)) {
                T* wg = weights->grad.data() + (n * K + j) * M;
                for (int64_t v = 0; v < M; ++v) wg[v] += grow[v] * dv;
              }
              if (deltas->requires_grad) {
                const T* wrow = wd + (n * K + j) * M;
                T acc = T(0);
                for (int64_t v = 0; v < M; ++v) acc += grow[v] * wrow[v];
                deltas->grad[(n * (K - 1) + j - 1) * A + a] += acc;
              }
            }
          }
      },
      "weighted_delta_field");
}

}  // namespace sf

#endif
