#ifndef SUPERFACE_TOYFACE_HPP
#define SUPERFACE_TOYFACE_HPP

// Parametric face sketches with exact 68-point 3D landmarks. The generator
// drives both the hermetic toy datasets and the provider tests: landmarks
// come from the same closed-form function that places the strokes, so the
// ground truth is exact by construction. A least-squares fitter inverts the
// renderer and serves as the deterministic landmark detector for generated
// frames.

#include <array>

#include "superface/image.hpp"
#include "superface/landmarks.hpp"
#include "superface/mesh_raster.hpp"
#include "superface/rng.hpp"

namespace sf {

struct ToyFaceParams {
  double cx = 0.0, cy = 0.0;  // center in normalized coords
  double scale = 0.55;
  double yaw = 0.0, pitch = 0.0, roll = 0.0;  // radians
  double mouth_open = 0.2;                    // [0,1]
  double eye_open = 1.0;                      // [0,1]
  double brow_raise = 0.0;                    // [-1,1]
  double pupil_dx = 0.0;                      // [-1,1]

  std::array<double, 10> to_array() const {
    return {cx, cy, scale, yaw, pitch, roll, mouth_open, eye_open, brow_raise, pupil_dx};
  }
  static ToyFaceParams from_array(const std::array<double, 10>& a) {
    ToyFaceParams p;
    p.cx = a[0]; p.cy = a[1]; p.scale = a[2]; p.yaw = a[3]; p.pitch = a[4]; p.roll = a[5];
    p.mouth_open = a[6]; p.eye_open = a[7]; p.brow_raise = a[8]; p.pupil_dx = a[9];
    return p;
  }
  void clamp_valid() {
    auto cl = [](double& v, double lo, double hi) { v = v < lo ? lo : (v > hi ? hi : v); };
    cl(cx, -0.35, 0.35); cl(cy, -0.35, 0.35); cl(scale, 0.3, 0.8);
    cl(yaw, -0.5, 0.5); cl(pitch, -0.35, 0.35); cl(roll, -0.45, 0.45);
    cl(mouth_open, 0.0, 1.0); cl(eye_open, 0.0, 1.0); cl(brow_raise, -1.0, 1.0); cl(pupil_dx, -1.0, 1.0);
  }
};

struct ToyIdentity {
  uint64_t seed = 0;
  double face_width = 1.0, face_height = 1.0;
  double eye_spacing = 1.0, mouth_width = 1.0;
  float skin_r = 0.82f, skin_g = 0.72f, skin_b = 0.62f;
  float stroke = 0.08f;
  float hair_r = 0.25f, hair_g = 0.18f, hair_b = 0.12f;
  float bg_top = 0.90f, bg_bottom = 0.55f;
  float bg_tint_r = 1.0f, bg_tint_g = 1.0f, bg_tint_b = 1.0f;

  static ToyIdentity from_seed(uint64_t seed) {
    ToyIdentity id;
    id.seed = seed;
    auto rng = RngStream::derive(seed, {0x1d});
    id.face_width = rng.uniform(0.9, 1.1);
    id.face_height = rng.uniform(0.92, 1.08);
    id.eye_spacing = rng.uniform(0.9, 1.1);
    id.mouth_width = rng.uniform(0.88, 1.12);
    id.skin_r = static_cast<float>(rng.uniform(0.7, 0.9));
    id.skin_g = static_cast<float>(id.skin_r * rng.uniform(0.82, 0.92));
    id.skin_b = static_cast<float>(id.skin_g * rng.uniform(0.8, 0.95));
    id.stroke = static_cast<float>(rng.uniform(0.03, 0.15));
    id.hair_r = static_cast<float>(rng.uniform(0.1, 0.45));
    id.hair_g = static_cast<float>(id.hair_r * rng.uniform(0.6, 1.0));
    id.hair_b = static_cast<float>(id.hair_g * rng.uniform(0.5, 1.0));
    id.bg_top = static_cast<float>(rng.uniform(0.75, 0.95));
    id.bg_bottom = static_cast<float>(rng.uniform(0.4, 0.7));
    id.bg_tint_r = static_cast<float>(rng.uniform(0.9, 1.0));
    id.bg_tint_g = static_cast<float>(rng.uniform(0.9, 1.0));
    id.bg_tint_b = static_cast<float>(rng.uniform(0.9, 1.0));
    return id;
  }
};

namespace toydetail {

// neutral template with expression applied; identity shape folded in
inline void base_points(const ToyIdentity& id, double mouth, double eye, double brow, double pts[68][3]) {
  auto set = [&](int i, double x, double y, double z) {
    pts[i][0] = x;
    pts[i][1] = y;
    pts[i][2] = z;
  };
  // jaw 0-16 (left to right), chin drops slightly with the mouth
  for (int i = 0; i <= 16; ++i) {
    double t = static_cast<double>(i) / 16.0;
    double sp = detmath::dsin(detmath::kPi * t);
    double drop = mouth * 0.05 * sp * sp;
    set(i, -0.72 * detmath::dcos(detmath::kPi * t), -0.05 + 0.90 * sp + drop, -0.30 + 0.35 * sp);
  }
  // brows 17-26
  double by = -0.42 - brow * 0.08;
  for (int j = 0; j < 5; ++j) {
    double u = static_cast<double>(j) / 4.0;
    double arch = 0.05 * detmath::dsin(detmath::kPi * u);
    set(17 + j, (-0.52 + 0.40 * u) * id.eye_spacing, by - arch, 0.12);
    set(22 + j, (0.12 + 0.40 * u) * id.eye_spacing, by - 0.05 * detmath::dsin(detmath::kPi * (1.0 - u)), 0.12);
  }
  // nose bridge 27-30, base 31-35
  for (int j = 0; j < 4; ++j) {
    double u = static_cast<double>(j) / 3.0;
    set(27 + j, 0.0, -0.30 + 0.40 * u, 0.18 + 0.27 * u);
  }
  for (int j = 0; j < 5; ++j) {
    double u = static_cast<double>(j) / 4.0;
    set(31 + j, -0.14 + 0.28 * u, 0.22, j == 2 ? 0.30 : 0.24);
  }
  // eyes 36-47, hexagons; eye height follows eye_open
  double h = 0.006 + 0.044 * eye;
  double exc = 0.30 * id.eye_spacing;
  auto eye_ring = [&](int base, double cxr, bool left) {
    double inner = cxr - 0.115, outer = cxr + 0.115;
    double xa = left ? inner : -outer;
    double xb = left ? outer : -inner;
    double mid1 = xa + (xb - xa) * 0.32, mid2 = xa + (xb - xa) * 0.68;
    set(base + 0, xa, -0.22, 0.10);
    set(base + 1, mid1, -0.22 - h, 0.10);
    set(base + 2, mid2, -0.22 - h, 0.10);
    set(base + 3, xb, -0.22, 0.10);
    set(base + 4, mid2, -0.22 + h, 0.10);
    set(base + 5, mid1, -0.22 + h, 0.10);
  };
  eye_ring(36, exc, false);  // viewer-left eye: 36 outer .. 39 inner
  eye_ring(42, exc, true);   // viewer-right eye: 42 inner .. 45 outer
  // mouth 48-67; lower lip and inner gap follow mouth_open
  double mw = id.mouth_width;
  double lo = 0.10 * mouth;   // outer lower lip displacement
  double li = 0.08 * mouth;   // inner lip separation
  set(48, -0.26 * mw, 0.500, 0.22);
  set(49, -0.17 * mw, 0.462, 0.22);
  set(50, -0.065 * mw, 0.440, 0.22);
  set(51, 0.0, 0.435, 0.22);
  set(52, 0.065 * mw, 0.440, 0.22);
  set(53, 0.17 * mw, 0.462, 0.22);
  set(54, 0.26 * mw, 0.500, 0.22);
  set(55, 0.17 * mw, 0.545 + lo, 0.22);
  set(56, 0.065 * mw, 0.575 + lo, 0.22);
  set(57, 0.0, 0.585 + lo, 0.22);
  set(58, -0.065 * mw, 0.575 + lo, 0.22);
  set(59, -0.17 * mw, 0.545 + lo, 0.22);
  set(60, -0.20 * mw, 0.500, 0.22);
  set(61, -0.09 * mw, 0.487, 0.22);
  set(62, 0.0, 0.483, 0.22);
  set(63, 0.09 * mw, 0.487, 0.22);
  set(64, 0.20 * mw, 0.500, 0.22);
  set(65, 0.09 * mw, 0.513 + li, 0.22);
  set(66, 0.0, 0.517 + li, 0.22);
  set(67, -0.09 * mw, 0.513 + li, 0.22);

  for (int i = 0; i < 68; ++i) {
    pts[i][0] *= id.face_width;
    pts[i][1] *= id.face_height;
  }
}

struct Rot3 {
  double m[9];
  void apply(const double p[3], double o[3]) const {
    for (int r = 0; r < 3; ++r) o[r] = m[r * 3] * p[0] + m[r * 3 + 1] * p[1] + m[r * 3 + 2] * p[2];
  }
};

// R = Rz(roll) * Ry(yaw) * Rx(pitch), y-down coordinates
inline Rot3 euler_to_rot(double yaw, double pitch, double roll) {
  double sy, cy, sp, cp, sr, cr;
  detmath::dsincos(yaw, sy, cy);
  detmath::dsincos(pitch, sp, cp);
  detmath::dsincos(roll, sr, cr);
  Rot3 R;
  // Rz*Ry*Rx expanded
  R.m[0] = cr * cy;
  R.m[1] = cr * sy * sp - sr * cp;
  R.m[2] = cr * sy * cp + sr * sp;
  R.m[3] = sr * cy;
  R.m[4] = sr * sy * sp + cr * cp;
  R.m[5] = sr * sy * cp - cr * sp;
  R.m[6] = -sy;
  R.m[7] = cy * sp;
  R.m[8] = cy * cp;
  return R;
}

}  // namespace toydetail

// exact landmark function: rigid(scale * shaped_template(expression)) + center
inline LandmarkSet3D toyface_landmarks(const ToyIdentity& id, const ToyFaceParams& p) {
  double pts[68][3];
  toydetail::base_points(id, p.mouth_open, p.eye_open, p.brow_raise, pts);
  auto R = toydetail::euler_to_rot(p.yaw, p.pitch, p.roll);
  LandmarkSet3D lm;
  lm.topology_id = "synthetic68";
  lm.points = Tensor<float>({68, 3});
  for (int i = 0; i < 68; ++i) {
    double s[3] = {pts[i][0] * p.scale, pts[i][1] * p.scale, pts[i][2] * p.scale};
    double o[3];
    R.apply(s, o);
    lm.points[i * 3 + 0] = static_cast<float>(o[0] + p.cx);
    lm.points[i * 3 + 1] = static_cast<float>(o[1] + p.cy);
    lm.points[i * 3 + 2] = static_cast<float>(o[2]);
  }
  return lm;
}

// ---- parameter strip (exactness channel for the provider tests) ----
// Row 0 carries two magic pixels, the 10 parameters mapped to [0,1], and a
// checksum pixel, all in channel 0. The generator re-reads what it wrote, so
// decoded parameters match the rendered face bit-for-bit (in-memory floats;
// an 8-bit PNG round trip destroys the strip, which is why datasets carry
// landmark sidecars instead).

namespace toydetail {
inline constexpr float kStripMagic0 = 0.137f;
inline constexpr float kStripMagic1 = 0.731f;

inline float strip_enc(double v, double lo, double hi) { return static_cast<float>((v - lo) / (hi - lo)); }
inline double strip_dec(float e, double lo, double hi) { return lo + static_cast<double>(e) * (hi - lo); }

inline const std::array<std::pair<double, double>, 10>& strip_ranges() {
  static const std::array<std::pair<double, double>, 10> r = {{{-0.5, 0.5},   // cx
                                                               {-0.5, 0.5},   // cy
                                                               {0.2, 0.9},    // scale
                                                               {-0.6, 0.6},   // yaw
                                                               {-0.45, 0.45}, // pitch
                                                               {-0.6, 0.6},   // roll
                                                               {0.0, 1.0},    // mouth
                                                               {0.0, 1.0},    // eye
                                                               {-1.2, 1.2},   // brow
                                                               {-1.2, 1.2}}}; // pupil
  return r;
}
}  // namespace toydetail

inline void write_param_strip(Image& img, const ToyFaceParams& p) {
  int64_t W = img_w(img);
  if (W < 14) throw std::runtime_error("image too narrow for param strip");
  auto a = p.to_array();
  const auto& rr = toydetail::strip_ranges();
  img[0] = toydetail::kStripMagic0;
  img[1] = toydetail::kStripMagic1;
  float sum = 0.f;
  for (int i = 0; i < 10; ++i) {
    float e = toydetail::strip_enc(a[i], rr[i].first, rr[i].second);
    img[2 + i] = e;
    sum += e;
  }
  img[12] = sum - std::floor(sum);  // checksum
}

inline bool read_param_strip(const Image& img, ToyFaceParams& out) {
  int64_t W = img_w(img);
  if (W < 14) return false;
  if (img[0] != toydetail::kStripMagic0 || img[1] != toydetail::kStripMagic1) return false;
  float sum = 0.f;
  std::array<double, 10> a{};
  const auto& rr = toydetail::strip_ranges();
  for (int i = 0; i < 10; ++i) {
    float e = img[2 + i];
    sum += e;
    a[i] = toydetail::strip_dec(e, rr[i].first, rr[i].second);
  }
  if (img[12] != sum - std::floor(sum)) return false;
  out = ToyFaceParams::from_array(a);
  return true;
}

// round parameters through the strip encoding so that an embedded strip
// decodes to exactly the parameters that produced the face
inline ToyFaceParams strip_quantize(const ToyFaceParams& p) {
  Image tmp = make_image(1, 16);
  write_param_strip(tmp, p);
  ToyFaceParams q;
  read_param_strip(tmp, q);
  return q;
}

// ---- renderer ----

inline Image render_toyface(const ToyIdentity& id, const ToyFaceParams& params, int64_t H, int64_t W,
                            bool with_param_strip = false) {
  ToyFaceParams p = with_param_strip ? strip_quantize(params) : params;
  Image img = make_image(H, W);
  float* rp = img.data();
  float* gp = img.data() + H * W;
  float* bp = img.data() + 2 * H * W;

  // background gradient
  for (int64_t y = 0; y < H; ++y) {
    float v = id.bg_top + (id.bg_bottom - id.bg_top) * static_cast<float>(y) / static_cast<float>(H - 1);
    for (int64_t x = 0; x < W; ++x) {
      rp[y * W + x] = v * id.bg_tint_r;
      gp[y * W + x] = v * id.bg_tint_g;
      bp[y * W + x] = v * id.bg_tint_b;
    }
  }

  // head: rotated ellipse with yaw foreshortening, hair cap, lambert-ish shade
  double sy, cy_;
  detmath::dsincos(p.yaw, sy, cy_);
  double sr, cr;
  detmath::dsincos(p.roll, sr, cr);
  double ax = 0.78 * p.scale * id.face_width * (1.0 - 0.28 * std::abs(sy));
  double ay = 0.84 * p.scale * id.face_height;
  double ecx = p.cx + 0.10 * sy * p.scale;  // face mass shifts with yaw
  double ecy = p.cy + 0.05 * p.scale;
  for (int64_t y = 0; y < H; ++y) {
    double ny = static_cast<double>(y) / (H - 1) * 2.0 - 1.0;
    for (int64_t x = 0; x < W; ++x) {
      double nx = static_cast<double>(x) / (W - 1) * 2.0 - 1.0;
      double dx = nx - ecx, dy = ny - ecy;
      double u = (cr * dx + sr * dy) / ax;
      double v = (-sr * dx + cr * dy) / ay;
      double d = u * u + v * v;
      if (d > 1.0) continue;
      double edge = (1.0 - d) * 12.0;
      double alpha = edge > 1.0 ? 1.0 : edge;
      float shade = static_cast<float>(1.0 - 0.22 * sy * u - 0.10 * (v + 1.0) * 0.5);
      float cr_ = id.skin_r * shade, cg_ = id.skin_g * shade, cb_ = id.skin_b * shade;
      if (v < -0.52) {  // hair cap
        cr_ = id.hair_r;
        cg_ = id.hair_g;
        cb_ = id.hair_b;
      }
      int64_t i = y * W + x;
      rp[i] = static_cast<float>(rp[i] * (1.0 - alpha) + cr_ * alpha);
      gp[i] = static_cast<float>(gp[i] * (1.0 - alpha) + cg_ * alpha);
      bp[i] = static_cast<float>(bp[i] * (1.0 - alpha) + cb_ * alpha);
    }
  }

  // feature strokes from the landmark edge chains
  LandmarkSet3D lm = toyface_landmarks(id, p);
  Tensor<float> strokes({H, W});
  for (auto [i, j] : synthetic68_edges())
    draw_line_aa(strokes.data(), H, W, norm_to_px(lm.points[i * 3 + 0], W), norm_to_px(lm.points[i * 3 + 1], H),
                 norm_to_px(lm.points[j * 3 + 0], W), norm_to_px(lm.points[j * 3 + 1], H));

  // pupils (visible when the eyes are reasonably open)
  if (p.eye_open > 0.25) {
    for (int base : {36, 42}) {
      double ex = 0, ey = 0;
      for (int k = 0; k < 6; ++k) {
        ex += lm.points[(base + k) * 3 + 0];
        ey += lm.points[(base + k) * 3 + 1];
      }
      ex = ex / 6.0 + p.pupil_dx * 0.03 * p.scale;
      ey /= 6.0;
      draw_disk(strokes.data(), H, W, norm_to_px(static_cast<float>(ex), W), norm_to_px(static_cast<float>(ey), H),
                0.030 * p.scale * (W - 1), 1.f);
    }
  }

  for (int64_t i = 0; i < H * W; ++i) {
    float a = strokes[i];
    if (a <= 0.f) continue;
    rp[i] = rp[i] * (1.f - a) + id.stroke * a;
    gp[i] = gp[i] * (1.f - a) + id.stroke * a;
    bp[i] = bp[i] * (1.f - a) + id.stroke * a;
  }

  if (with_param_strip) write_param_strip(img, p);
  clamp_image(img);
  return img;
}

// ---- motion sequences ----

struct ToyMotion {
  double f_yaw = 0.2, a_yaw = 0.25, ph_yaw = 0;
  double f_pitch = 0.15, a_pitch = 0.12, ph_pitch = 0;
  double f_roll = 0.1, a_roll = 0.12, ph_roll = 0;
  double f_mouth = 0.9, ph_mouth = 0;
  double f_blink = 0.25, ph_blink = 0;
  double f_cx = 0.1, a_cx = 0.06, ph_cx = 0;
  double f_cy = 0.13, a_cy = 0.05, ph_cy = 0;
  double f_brow = 0.3, a_brow = 0.4, ph_brow = 0;
  double base_scale = 0.55;

  static ToyMotion from_seed(uint64_t seed) {
    auto rng = RngStream::derive(seed, {0x30});
    ToyMotion m;
    m.f_yaw = rng.uniform(0.12, 0.3); m.a_yaw = rng.uniform(0.15, 0.3); m.ph_yaw = rng.uniform(0, 6.28);
    m.f_pitch = rng.uniform(0.1, 0.25); m.a_pitch = rng.uniform(0.06, 0.15); m.ph_pitch = rng.uniform(0, 6.28);
    m.f_roll = rng.uniform(0.08, 0.2); m.a_roll = rng.uniform(0.06, 0.15); m.ph_roll = rng.uniform(0, 6.28);
    m.f_mouth = rng.uniform(0.6, 1.4); m.ph_mouth = rng.uniform(0, 6.28);
    m.f_blink = rng.uniform(0.15, 0.4); m.ph_blink = rng.uniform(0, 6.28);
    m.f_cx = rng.uniform(0.05, 0.18); m.a_cx = rng.uniform(0.03, 0.08); m.ph_cx = rng.uniform(0, 6.28);
    m.f_cy = rng.uniform(0.05, 0.18); m.a_cy = rng.uniform(0.02, 0.06); m.ph_cy = rng.uniform(0, 6.28);
    m.f_brow = rng.uniform(0.2, 0.5); m.a_brow = rng.uniform(0.2, 0.6); m.ph_brow = rng.uniform(0, 6.28);
    m.base_scale = rng.uniform(0.5, 0.62);
    return m;
  }

  ToyFaceParams at(double t) const {
    auto osc = [&](double f, double ph) { return detmath::dsin(2.0 * detmath::kPi * f * t + ph); };
    ToyFaceParams p;
    p.scale = base_scale;
    p.yaw = a_yaw * osc(f_yaw, ph_yaw);
    p.pitch = a_pitch * osc(f_pitch, ph_pitch);
    p.roll = a_roll * osc(f_roll, ph_roll);
    p.cx = a_cx * osc(f_cx, ph_cx);
    p.cy = a_cy * osc(f_cy, ph_cy);
    p.mouth_open = 0.05 + 0.85 * (0.5 + 0.5 * osc(f_mouth, ph_mouth));
    double blink = osc(f_blink, ph_blink);
    double pulse = blink > 0 ? blink : 0.0;
    pulse = pulse * pulse;
    pulse = pulse * pulse;  // ^4: short closures
    p.eye_open = 1.0 - 0.95 * pulse * pulse;
    p.brow_raise = a_brow * osc(f_brow, ph_brow);
    p.pupil_dx = 0.6 * osc(f_yaw * 0.7, ph_yaw + 1.0);
    return p;
  }
};

// ---- fitting detector ----

struct ToyFitResult {
  ToyFaceParams params;
  double residual = 1e9;  // mean squared pixel error of the best render
};

namespace toydetail {
inline double fit_objective(const Image& target, const ToyIdentity& id, ToyFaceParams p) {
  p.clamp_valid();
  Image cand = render_toyface(id, p, img_h(target), img_w(target), false);
  double acc = 0;
  for (int64_t i = 0; i < cand.size(); ++i) {
    double d = static_cast<double>(cand[i]) - target[i];
    acc += d * d;
  }
  return acc / static_cast<double>(cand.size());
}
}  // namespace toydetail

// Coarse grid over (cx, cy, scale) followed by Nelder-Mead over 8 pose /
// expression parameters. Deterministic: fixed seeds, fixed iteration budget.
inline ToyFitResult fit_toyface(const Image& target, const ToyIdentity& id, int nm_iters = 260) {
  using toydetail::fit_objective;
  ToyFitResult best;

  ToyFaceParams seed;
  for (double s : {0.45, 0.55, 0.65})
    for (double cx = -0.2; cx <= 0.201; cx += 0.1)
      for (double cy = -0.2; cy <= 0.201; cy += 0.1) {
        ToyFaceParams p;
        p.cx = cx;
        p.cy = cy;
        p.scale = s;
        p.mouth_open = 0.4;
        double r = fit_objective(target, id, p);
        if (r < best.residual) {
          best.residual = r;
          seed = p;
        }
      }

  // Nelder-Mead over (cx, cy, scale, yaw, pitch, roll, mouth, eye)
  constexpr int D = 8;
  auto pack = [](const ToyFaceParams& p) {
    return std::array<double, D>{p.cx, p.cy, p.scale, p.yaw, p.pitch, p.roll, p.mouth_open, p.eye_open};
  };
  auto unpack = [](const std::array<double, D>& v) {
    ToyFaceParams p;
    p.cx = v[0]; p.cy = v[1]; p.scale = v[2]; p.yaw = v[3]; p.pitch = v[4]; p.roll = v[5];
    p.mouth_open = v[6]; p.eye_open = v[7];
    p.clamp_valid();
    return p;
  };
  const std::array<double, D> step = {0.05, 0.05, 0.05, 0.12, 0.1, 0.1, 0.3, 0.4};

  std::array<std::array<double, D>, D + 1> simplex;
  std::array<double, D + 1> fv;
  simplex[0] = pack(seed);
  fv[0] = fit_objective(target, id, unpack(simplex[0]));
  for (int i = 0; i < D; ++i) {
    simplex[i + 1] = simplex[0];
    simplex[i + 1][i] += step[i];
    fv[i + 1] = fit_objective(target, id, unpack(simplex[i + 1]));
  }

  for (int it = 0; it < nm_iters; ++it) {
    // order
    std::array<int, D + 1> idx;
    for (int i = 0; i <= D; ++i) idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    std::array<std::array<double, D>, D + 1> sx;
    std::array<double, D + 1> sf;
    for (int i = 0; i <= D; ++i) {
      sx[i] = simplex[idx[i]];
      sf[i] = fv[idx[i]];
    }
    simplex = sx;
    fv = sf;

    std::array<double, D> centroid{};
    for (int i = 0; i < D; ++i)
      for (int d = 0; d < D; ++d) centroid[d] += simplex[i][d] / D;

    auto lerp = [&](double t) {
      std::array<double, D> v;
      for (int d = 0; d < D; ++d) v[d] = centroid[d] + t * (simplex[D][d] - centroid[d]);
      return v;
    };
    auto xr = lerp(-1.0);
    double fr = fit_objective(target, id, unpack(xr));
    if (fr < fv[0]) {
      auto xe = lerp(-2.0);
      double fe = fit_objective(target, id, unpack(xe));
      if (fe < fr) {
        simplex[D] = xe;
        fv[D] = fe;
      } else {
        simplex[D] = xr;
        fv[D] = fr;
      }
    } else if (fr < fv[D - 1]) {
      simplex[D] = xr;
      fv[D] = fr;
    } else {
      auto xc = lerp(0.5);
      double fc = fit_objective(target, id, unpack(xc));
      if (fc < fv[D]) {
        simplex[D] = xc;
        fv[D] = fc;
      } else {
        for (int i = 1; i <= D; ++i) {
          for (int d = 0; d < D; ++d) simplex[i][d] = simplex[0][d] + 0.5 * (simplex[i][d] - simplex[0][d]);
          fv[i] = fit_objective(target, id, unpack(simplex[i]));
        }
      }
    }
  }

  int bi = 0;
  for (int i = 1; i <= D; ++i)
    if (fv[i] < fv[bi]) bi = i;
  best.params = unpack(simplex[bi]);
  best.residual = fv[bi];
  return best;
}

}  // namespace sf

#endif
