#ifndef SUPERFACE_JPEG_SIM_HPP
#define SUPERFACE_JPEG_SIM_HPP

// JPEG round-trip simulation for the degradation pipeline: 4:2:0 chroma
// subsampling, blockwise 8x8 DCT, quantization with the standard tables
// scaled by quality, dequantization, IDCT. Entropy coding is lossless so the
// encode->decode effect of a real baseline codec is reproduced without one,
// and the result is bit-deterministic across platforms.

#include <array>

#include "superface/image.hpp"

namespace sf {
namespace jpegsim {

inline const std::array<int, 64>& lum_table() {
  static const std::array<int, 64> t = {16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
                                        14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
                                        18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
                                        49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
  return t;
}

inline const std::array<int, 64>& chrom_table() {
  static const std::array<int, 64> t = {17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
                                        24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
                                        99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
                                        99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};
  return t;
}

// IJG quality scaling
inline std::array<double, 64> scaled_table(const std::array<int, 64>& base, int quality) {
  int s = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  std::array<double, 64> out{};
  for (int i = 0; i < 64; ++i) {
    int v = (base[i] * s + 50) / 100;
    if (v < 1) v = 1;
    if (v > 255) v = 255;
    out[i] = static_cast<double>(v);
  }
  return out;
}

// orthonormal DCT-II matrix, M[u][x] = alpha(u)/2 * cos((2x+1) u pi / 16)
inline const std::array<double, 64>& dct_matrix() {
  static const std::array<double, 64> m = [] {
    std::array<double, 64> mm{};
    const double inv_sqrt2 = 0.70710678118654752440;
    for (int u = 0; u < 8; ++u)
      for (int x = 0; x < 8; ++x) {
        double a = (u == 0 ? inv_sqrt2 : 1.0) * 0.5;
        mm[u * 8 + x] = a * detmath::dcos((2.0 * x + 1.0) * u * detmath::kPi / 16.0);
      }
    return mm;
  }();
  return m;
}

inline double round_half_up(double v) { return std::floor(v + 0.5); }

// quantize one 8x8 block in place (values centered around 0)
inline void quantize_block(double* blk, const std::array<double, 64>& q) {
  const auto& M = dct_matrix();
  double tmp[64], coef[64];
  // coef = M * blk * M^T
  for (int u = 0; u < 8; ++u)
    for (int x = 0; x < 8; ++x) {
      double acc = 0;
      for (int k = 0; k < 8; ++k) acc += M[u * 8 + k] * blk[k * 8 + x];
      tmp[u * 8 + x] = acc;
    }
  for (int u = 0; u < 8; ++u)
    for (int v = 0; v < 8; ++v) {
      double acc = 0;
      for (int k = 0; k < 8; ++k) acc += tmp[u * 8 + k] * M[v * 8 + k];
      coef[u * 8 + v] = acc;
    }
  for (int i = 0; i < 64; ++i) coef[i] = round_half_up(coef[i] / q[i]) * q[i];
  // blk = M^T * coef * M
  for (int x = 0; x < 8; ++x)
    for (int v = 0; v < 8; ++v) {
      double acc = 0;
      for (int k = 0; k < 8; ++k) acc += M[k * 8 + x] * coef[k * 8 + v];
      tmp[x * 8 + v] = acc;
    }
  for (int x = 0; x < 8; ++x)
    for (int y = 0; y < 8; ++y) {
      double acc = 0;
      for (int k = 0; k < 8; ++k) acc += tmp[x * 8 + k] * M[k * 8 + y];
      blk[x * 8 + y] = acc;
    }
}

// quantize a full plane (values in 0..255, level shift applied here)
inline void quantize_plane(std::vector<double>& plane, int64_t H, int64_t W, const std::array<double, 64>& q) {
  for (int64_t by = 0; by < H; by += 8)
    for (int64_t bx = 0; bx < W; bx += 8) {
      double blk[64];
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) blk[y * 8 + x] = plane[(by + y) * W + bx + x] - 128.0;
      quantize_block(blk, q);
      for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x) plane[(by + y) * W + bx + x] = blk[y * 8 + x] + 128.0;
    }
}

}  // namespace jpegsim

// quality in [1,100]; quality == 0 is the lossless bypass sentinel
inline Image jpeg_roundtrip(const Image& im, int quality) {
  using namespace jpegsim;
  if (quality == 0) return im;
  if (quality < 1 || quality > 100) throw std::runtime_error("jpeg quality out of range");
  int64_t H = img_h(im), W = img_w(im);
  // pad to multiples of 16 (replicate) so luma blocks and 2x-subsampled
  // chroma blocks both tile exactly
  int64_t PH = (H + 15) / 16 * 16, PW = (W + 15) / 16 * 16;

  std::vector<double> Y(PH * PW), Cb(PH * PW), Cr(PH * PW);
  for (int64_t y = 0; y < PH; ++y) {
    int64_t sy = y < H ? y : H - 1;
    for (int64_t x = 0; x < PW; ++x) {
      int64_t sx = x < W ? x : W - 1;
      double r = im[(0 * H + sy) * W + sx] * 255.0;
      double g = im[(1 * H + sy) * W + sx] * 255.0;
      double b = im[(2 * H + sy) * W + sx] * 255.0;
      Y[y * PW + x] = 0.299 * r + 0.587 * g + 0.114 * b;
      Cb[y * PW + x] = 128.0 - 0.168735892 * r - 0.331264108 * g + 0.5 * b;
      Cr[y * PW + x] = 128.0 + 0.5 * r - 0.418687589 * g - 0.081312411 * b;
    }
  }

  // 4:2:0 subsample chroma by 2x2 averaging
  int64_t CH = PH / 2, CW = PW / 2;
  std::vector<double> cb2(CH * CW), cr2(CH * CW);
  for (int64_t y = 0; y < CH; ++y)
    for (int64_t x = 0; x < CW; ++x) {
      int64_t i0 = (2 * y) * PW + 2 * x, i1 = i0 + 1, i2 = i0 + PW, i3 = i2 + 1;
      cb2[y * CW + x] = 0.25 * (Cb[i0] + Cb[i1] + Cb[i2] + Cb[i3]);
      cr2[y * CW + x] = 0.25 * (Cr[i0] + Cr[i1] + Cr[i2] + Cr[i3]);
    }

  auto qy = scaled_table(lum_table(), quality);
  auto qc = scaled_table(chrom_table(), quality);
  quantize_plane(Y, PH, PW, qy);
  quantize_plane(cb2, CH, CW, qc);
  quantize_plane(cr2, CH, CW, qc);

  Image out = make_image(H, W);
  for (int64_t y = 0; y < H; ++y)
    for (int64_t x = 0; x < W; ++x) {
      double yy = Y[y * PW + x];
      double cb = cb2[(y / 2) * CW + x / 2] - 128.0;  // nearest chroma upsample
      double cr = cr2[(y / 2) * CW + x / 2] - 128.0;
      double r = yy + 1.402 * cr;
      double g = yy - 0.344136286 * cb - 0.714136286 * cr;
      double b = yy + 1.772 * cb;
      out[(0 * H + y) * W + x] = clamp01(static_cast<float>(r / 255.0));
      out[(1 * H + y) * W + x] = clamp01(static_cast<float>(g / 255.0));
      out[(2 * H + y) * W + x] = clamp01(static_cast<float>(b / 255.0));
    }
  return out;
}

}  // namespace sf

#endif
