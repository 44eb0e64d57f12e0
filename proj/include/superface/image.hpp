#ifndef SUPERFACE_IMAGE_HPP
#define SUPERFACE_IMAGE_HPP

// Image utilities over Tensor<float> (3,H,W) in [0,1]: PNG I/O (8-bit RGB),
// fixed-function resize/blur, anti-aliased line drawing, hashing. The
// resize/blur/draw routines are part of the deterministic pipeline: plain
// scalar arithmetic, no libm calls that vary across platforms.

#include <png.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <stdexcept>
#include <string>

#include "superface/detmath.hpp"
#include "superface/tensor.hpp"

namespace sf {

using Image = Tensor<float>;  // (3,H,W)

struct IoError : std::runtime_error {
  explicit IoError(const std::string& m) : std::runtime_error("IoError: " + m) {}
};

inline int64_t img_h(const Image& im) { return im.shape()[1]; }
inline int64_t img_w(const Image& im) { return im.shape()[2]; }

inline Image make_image(int64_t h, int64_t w, float fill = 0.f) { return Image({3, h, w}, fill); }

inline float clamp01(float v) { return v < 0.f ? 0.f : (v > 1.f ? 1.f : v); }

inline void clamp_image(Image& im) {
  for (int64_t i = 0; i < im.size(); ++i) im[i] = clamp01(im[i]);
}

// ---- PNG ----

inline void save_png(const std::filesystem::path& path, const Image& im) {
  int64_t H = img_h(im), W = img_w(im);
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw IoError("cannot open for write: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw IoError("png write failed: " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(W), static_cast<png_uint_32>(H), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_byte> row(static_cast<size_t>(W) * 3);
  for (int64_t y = 0; y < H; ++y) {
    for (int64_t x = 0; x < W; ++x)
      for (int64_t c = 0; c < 3; ++c) {
        float v = clamp01(im[(c * H + y) * W + x]);
        row[static_cast<size_t>(x * 3 + c)] = static_cast<png_byte>(v * 255.f + 0.5f);
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

inline Image load_png(const std::filesystem::path& path) {
  FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (!fp) throw IoError("cannot open: " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw IoError("png read failed: " + path.string());
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  png_uint_32 W = png_get_image_width(png, info), H = png_get_image_height(png, info);
  png_byte color = png_get_color_type(png, info), depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY || color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  Image im = make_image(H, W);
  std::vector<png_byte> row(static_cast<size_t>(W) * 3);
  for (png_uint_32 y = 0; y < H; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < W; ++x)
      for (int c = 0; c < 3; ++c) im[(c * H + y) * W + x] = static_cast<float>(row[x * 3 + c]) / 255.f;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return im;
}

// ---- hashing ----

inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 1469598103934665603ULL) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ULL;
  }
  return h;
}

template <class T>
uint64_t tensor_hash(const Tensor<T>& t) {
  uint64_t h = fnv1a64(t.data(), static_cast<size_t>(t.size()) * sizeof(T));
  for (int64_t d : t.shape()) h = fnv1a64(&d, sizeof(d), h);
  return h;
}

inline std::string hash_hex(uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// ---- color ----

inline Tensor<float> to_gray(const Image& im) {
  int64_t H = img_h(im), W = img_w(im);
  Tensor<float> g({H, W});
  const float* r = im.data();
  const float* gg = im.data() + H * W;
  const float* b = im.data() + 2 * H * W;
  for (int64_t i = 0; i < H * W; ++i) g[i] = 0.299f * r[i] + 0.587f * gg[i] + 0.114f * b[i];
  return g;
}

// ---- resize ----

enum class Interp { kNearest, kBilinear, kBicubic };

inline Interp interp_from_string(const std::string& s) {
  if (s == "nearest") return Interp::kNearest;
  if (s == "bilinear") return Interp::kBilinear;
  if (s == "bicubic") return Interp::kBicubic;
  throw std::runtime_error("unknown interp: " + s);
}

inline const char* interp_name(Interp i) {
  switch (i) {
    case Interp::kNearest: return "nearest";
    case Interp::kBilinear: return "bilinear";
    default: return "bicubic";
  }
}

namespace imgdetail {

inline float cubic_weight(float t) {  // Keys kernel, a = -0.5
  float a = -0.5f;
  float at = t < 0 ? -t : t;
  if (at <= 1.f) return ((a + 2.f) * at - (a + 3.f)) * at * at + 1.f;
  if (at < 2.f) return ((at - 5.f) * at + 8.f) * at * a - 4.f * a;
  return 0.f;
}

inline int64_t clampi(int64_t v, int64_t lo, int64_t hi) { return v < lo ? lo : (v > hi ? hi : v); }

// one axis of a separable resize over a (rows, cols) plane -> (rows, out_cols)
inline void resize_axis(const float* src, int64_t rows, int64_t cols, int64_t out_cols, Interp interp, float* dst) {
  double ratio = static_cast<double>(cols) / static_cast<double>(out_cols);
  for (int64_t o = 0; o < out_cols; ++o) {
    double center = (static_cast<double>(o) + 0.5) * ratio - 0.5;
    if (interp == Interp::kNearest) {
      int64_t s = clampi(static_cast<int64_t>(std::floor((static_cast<double>(o) + 0.5) * ratio)), 0, cols - 1);
      for (int64_t r = 0; r < rows; ++r) dst[r * out_cols + o] = src[r * cols + s];
    } else if (interp == Interp::kBilinear) {
      int64_t i0 = static_cast<int64_t>(std::floor(center));
      float f = static_cast<float>(center - static_cast<double>(i0));
      int64_t a = clampi(i0, 0, cols - 1), b = clampi(i0 + 1, 0, cols - 1);
      for (int64_t r = 0; r < rows; ++r)
        dst[r * out_cols + o] = src[r * cols + a] * (1.f - f) + src[r * cols + b] * f;
    } else {
      int64_t i0 = static_cast<int64_t>(std::floor(center));
      float f = static_cast<float>(center - static_cast<double>(i0));
      float w[4];
      float wsum = 0.f;
      for (int t = 0; t < 4; ++t) {
        w[t] = cubic_weight(static_cast<float>(t - 1) - f);
        wsum += w[t];
      }
      for (int t = 0; t < 4; ++t) w[t] /= wsum;
      int64_t ix[4];
      for (int t = 0; t < 4; ++t) ix[t] = clampi(i0 - 1 + t, 0, cols - 1);
      for (int64_t r = 0; r < rows; ++r) {
        float acc = 0.f;
        for (int t = 0; t < 4; ++t) acc += w[t] * src[r * cols + ix[t]];
        dst[r * out_cols + o] = acc;
      }
    }
  }
}

}  // namespace imgdetail

inline Image resize_image(const Image& im, int64_t oh, int64_t ow, Interp interp) {
  int64_t H = img_h(im), W = img_w(im);
  if (oh == H && ow == W) return im;
  Image out = make_image(oh, ow);
  std::vector<float> tmp(static_cast<size_t>(H * ow));
  std::vector<float> tmpT(static_cast<size_t>(ow * H));
  std::vector<float> outT(static_cast<size_t>(ow * oh));
  for (int64_t c = 0; c < 3; ++c) {
    const float* plane = im.data() + c * H * W;
    // horizontal pass: (H,W) -> (H,ow)
    imgdetail::resize_axis(plane, H, W, ow, interp, tmp.data());
    // transpose, vertical pass as another horizontal one, transpose back
    for (int64_t y = 0; y < H; ++y)
      for (int64_t x = 0; x < ow; ++x) tmpT[x * H + y] = tmp[y * ow + x];
    imgdetail::resize_axis(tmpT.data(), ow, H, oh, interp, outT.data());
    float* oplane = out.data() + c * oh * ow;
    for (int64_t x = 0; x < ow; ++x)
      for (int64_t y = 0; y < oh; ++y) oplane[y * ow + x] = outT[x * oh + y];
  }
  return out;
}

// ---- blur ----

// rotated anisotropic gaussian kernel; sigma below ~1e-6 degenerates to a
// delta (identity)
inline Tensor<float> gaussian_kernel(float sigma_x, float sigma_y, float angle, int64_t ksize) {
  Tensor<float> k({ksize, ksize});
  int64_t r = ksize / 2;
  if (sigma_x < 1e-6f || sigma_y < 1e-6f) {
    k[r * ksize + r] = 1.f;
    return k;
  }
  double ca, sa;
  detmath::dsincos(angle, sa, ca);
  double inv2x = 1.0 / (2.0 * sigma_x * sigma_x), inv2y = 1.0 / (2.0 * sigma_y * sigma_y);
  double sum = 0.0;
  for (int64_t y = -r; y <= r; ++y)
    for (int64_t x = -r; x <= r; ++x) {
      double u = ca * x + sa * y, v = -sa * x + ca * y;
      double w = detmath::dexp(-(u * u * inv2x + v * v * inv2y));
      k[(y + r) * ksize + (x + r)] = static_cast<float>(w);
      sum += w;
    }
  float inv = static_cast<float>(1.0 / sum);
  for (int64_t i = 0; i < k.size(); ++i) k[i] *= inv;
  return k;
}

// direct 2D convolution, replicate border
inline Image convolve_image(const Image& im, const Tensor<float>& kernel) {
  int64_t H = img_h(im), W = img_w(im);
  int64_t ks = kernel.shape()[0], r = ks / 2;
  Image out = make_image(H, W);
  for (int64_t c = 0; c < 3; ++c) {
    const float* plane = im.data() + c * H * W;
    float* oplane = out.data() + c * H * W;
    for (int64_t y = 0; y < H; ++y)
      for (int64_t x = 0; x < W; ++x) {
        float acc = 0.f;
        for (int64_t ky = 0; ky < ks; ++ky) {
          int64_t iy = imgdetail::clampi(y + ky - r, 0, H - 1);
          for (int64_t kx = 0; kx < ks; ++kx) {
            int64_t ix = imgdetail::clampi(x + kx - r, 0, W - 1);
            acc += kernel[ky * ks + kx] * plane[iy * W + ix];
          }
        }
        oplane[y * W + x] = acc;
      }
  }
  return out;
}

// ---- drawing (single-channel planes) ----

// max-blend plot into plane (H,W)
inline void plot_px(float* plane, int64_t H, int64_t W, int64_t x, int64_t y, float v) {
  if (x < 0 || x >= W || y < 0 || y >= H) return;
  float& p = plane[y * W + x];
  if (v > p) p = v;
}

// Wu-style anti-aliased segment in pixel coordinates. Integer-aligned
// horizontal/vertical segments land exactly on the Bresenham pixel set with
// full intensity.
inline void draw_line_aa(float* plane, int64_t H, int64_t W, double x0, double y0, double x1, double y1,
                         float intensity = 1.f) {
  // snap sub-1e-6 jitter to the pixel lattice so nominally axis-aligned
  // segments rasterize without ghost rows
  auto snap = [](double v) {
    double r = std::floor(v + 0.5);
    return std::abs(v - r) < 1e-6 ? r : v;
  };
  x0 = snap(x0); y0 = snap(y0); x1 = snap(x1); y1 = snap(y1);
  bool steep = std::abs(y1 - y0) > std::abs(x1 - x0);
  if (steep) {
    std::swap(x0, y0);
    std::swap(x1, y1);
  }
  if (x0 > x1) {
    std::swap(x0, x1);
    std::swap(y0, y1);
  }
  double dx = x1 - x0, dy = y1 - y0;
  double grad = dx == 0.0 ? 0.0 : dy / dx;

  auto put = [&](int64_t px, int64_t py, double a) {
    float v = intensity * static_cast<float>(a);
    if (steep)
      plot_px(plane, H, W, py, px, v);
    else
      plot_px(plane, H, W, px, py, v);
  };

  auto ipart = [](double v) { return std::floor(v); };
  auto fpart = [](double v) { return v - std::floor(v); };
  auto rfpart = [&](double v) { return 1.0 - fpart(v); };

  // first endpoint
  double xend = std::floor(x0 + 0.5);
  double yend = y0 + grad * (xend - x0);
  double xgap = rfpart(x0 + 0.5);
  int64_t xpx0 = static_cast<int64_t>(xend);
  int64_t ypx0 = static_cast<int64_t>(ipart(yend));
  put(xpx0, ypx0, rfpart(yend) * xgap);
  put(xpx0, ypx0 + 1, fpart(yend) * xgap);
  double intery = yend + grad;

  // second endpoint
  xend = std::floor(x1 + 0.5);
  yend = y1 + grad * (xend - x1);
  xgap = fpart(x1 + 0.5);
  int64_t xpx1 = static_cast<int64_t>(xend);
  int64_t ypx1 = static_cast<int64_t>(ipart(yend));

  for (int64_t x = xpx0 + 1; x < xpx1; ++x) {
    put(x, static_cast<int64_t>(ipart(intery)), rfpart(intery));
    put(x, static_cast<int64_t>(ipart(intery)) + 1, fpart(intery));
    intery += grad;
  }
  put(xpx1, ypx1, rfpart(yend) * xgap);
  put(xpx1, ypx1 + 1, fpart(yend) * xgap);
}

inline void draw_disk(float* plane, int64_t H, int64_t W, double cx, double cy, double radius, float v) {
  int64_t y0 = imgdetail::clampi(static_cast<int64_t>(std::floor(cy - radius - 1)), 0, H - 1);
  int64_t y1 = imgdetail::clampi(static_cast<int64_t>(std::ceil(cy + radius + 1)), 0, H - 1);
  int64_t x0 = imgdetail::clampi(static_cast<int64_t>(std::floor(cx - radius - 1)), 0, W - 1);
  int64_t x1 = imgdetail::clampi(static_cast<int64_t>(std::ceil(cx + radius + 1)), 0, W - 1);
  for (int64_t y = y0; y <= y1; ++y)
    for (int64_t x = x0; x <= x1; ++x) {
      double dx = x - cx, dy = y - cy;
      double d = std::sqrt(dx * dx + dy * dy);
      double a = radius + 0.5 - d;  // soft 1px edge
      if (a <= 0) continue;
      plot_px(plane, H, W, x, y, v * static_cast<float>(a > 1 ? 1 : a));
    }
}

// ---- misc ----

inline double psnr(const Image& a, const Image& b) {
  double mse = 0;
  for (int64_t i = 0; i < a.size(); ++i) {
    double d = static_cast<double>(a[i]) - b[i];
    mse += d * d;
  }
  mse /= static_cast<double>(a.size());
  if (mse <= 0) return 99.0;
  return 10.0 * std::log10(1.0 / mse);
}

}  // namespace sf

#endif
