#ifndef SUPERFACE_TEACHER_HPP
#define SUPERFACE_TEACHER_HPP

// The teacher generator: volumetric appearance encoder, keypoint predictor
// with early (channel concat) and late (landmark embedding) prior infusion,
// dense motion network over k+1 candidate flows, trilinear warp, 2D decoder
// over depth-folded volume channels, and a multi-scale patch discriminator.
//
// Keypoints decompose as p = R * p_canonical + t + delta with R orthonormal
// by construction (6D rotation parameterization + Gram-Schmidt). Bounds:
// |canonical| <= 0.5 per axis, |t| <= 0.4, |delta| <= 0.2 via tanh scaling,
// so composed keypoints stay inside [-1.5, 1.5]^3.

#include <json.hpp>

#include "superface/mesh_raster.hpp"
#include "superface/nn.hpp"

namespace sf {

struct PriorMismatch : std::runtime_error {
  explicit PriorMismatch(const std::string& m) : std::runtime_error("PriorMismatch: " + m) {}
};

struct TeacherConfig {
  std::string name = "teacher_toy";
  int64_t k = 15;              // keypoint count (paper leaves it unstated)
  int64_t resolution = 64;
  int64_t down_factor = 4;     // H' = W' = resolution / down_factor
  int64_t volume_channels = 16;  // C
  int64_t volume_depth = 8;      // D'
  int64_t enc_base = 16;
  int64_t enc3d_blocks = 2;
  int64_t mem_base = 12;
  int64_t mem_embed = 24;
  int64_t mem_hidden = 64;
  int64_t dmn_base = 24;
  int64_t gen_base = 96;
  int64_t disc_base = 16;
  int64_t disc_scales = 2;
  int64_t landmarks = 68;  // L for late infusion
  float heatmap_sigma = 0.12f;

  int64_t feat_hw() const { return resolution / down_factor; }
  int64_t n_down() const {
    int64_t n = 0, f = down_factor;
    while (f > 1) {
      f /= 2;
      ++n;
    }
    return n;
  }

  void validate() const {
    if (k < 1 || resolution < 16 || volume_channels < 1 || volume_depth < 1)
      throw std::runtime_error("TeacherConfig: non-positive dimension");
    int64_t f = 1;
    for (int64_t i = 0; i < n_down(); ++i) f *= 2;
    if (f != down_factor) throw std::runtime_error("TeacherConfig: down_factor must be a power of two");
    if (resolution % down_factor != 0) throw std::runtime_error("TeacherConfig: resolution % down_factor != 0");
  }
};

inline void to_json(nlohmann::json& j, const TeacherConfig& c) {
  j = {{"name", c.name},
       {"k", c.k},
       {"resolution", c.resolution},
       {"down_factor", c.down_factor},
       {"volume_channels", c.volume_channels},
       {"volume_depth", c.volume_depth},
       {"enc_base", c.enc_base},
       {"enc3d_blocks", c.enc3d_blocks},
       {"mem_base", c.mem_base},
       {"mem_embed", c.mem_embed},
       {"mem_hidden", c.mem_hidden},
       {"dmn_base", c.dmn_base},
       {"gen_base", c.gen_base},
       {"disc_base", c.disc_base},
       {"disc_scales", c.disc_scales},
       {"landmarks", c.landmarks},
       {"heatmap_sigma", c.heatmap_sigma}};
}

inline void from_json(const nlohmann::json& j, TeacherConfig& c) {
  c = TeacherConfig{};
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
  };
  get("name", c.name);
  get("k", c.k);
  get("resolution", c.resolution);
  get("down_factor", c.down_factor);
  get("volume_channels", c.volume_channels);
  get("volume_depth", c.volume_depth);
  get("enc_base", c.enc_base);
  get("enc3d_blocks", c.enc3d_blocks);
  get("mem_base", c.mem_base);
  get("mem_embed", c.mem_embed);
  get("mem_hidden", c.mem_hidden);
  get("dmn_base", c.dmn_base);
  get("gen_base", c.gen_base);
  get("disc_base", c.disc_base);
  get("disc_scales", c.disc_scales);
  get("landmarks", c.landmarks);
  get("heatmap_sigma", c.heatmap_sigma);
}

// ---- keypoint output bundle ----

template <class T>
struct KeypointsOut {
  Var<T> canonical;  // (N,k,3)
  Var<T> rot;        // (N,3,3), orthonormal rows
  Var<T> trans;      // (N,3)
  Var<T> expr;       // (N,k,3) expression offsets delta
  Var<T> composed;   // (N,k,3) = R*canonical + t + delta
};

// apply per-sample rotation: out[n,j,:] = R[n] * p[n,j,:]
template <class T>
Var<T> rot_apply(const Var<T>& R, const Var<T>& p) {
  int64_t N = p->val.shape()[0], K = p->val.shape()[1];
  Tensor<T> out({N, K, 3});
  const T* rd = R->val.data();
  const T* pd = p->val.data();
  for (int64_t n = 0; n < N; ++n)
    for (int64_t j = 0; j < K; ++j)
      for (int64_t r = 0; r < 3; ++r) {
        T acc = T(0);
        for (int64_t c = 0; c < 3; ++c) acc += rd[n * 9 + r * 3 + c] * pd[(n * K + j) * 3 + c];
        out[(n * K + j) * 3 + r] = acc;
      }
  return make_op<T>(
      std::move(out), {R, p},
      [R, p, N, K](Node<T>& self) {
        const T* rd = R->val.data();
        const T* pd = p->val.data();
        const T* g = self.grad.data();
        if (R->requires_grad) R->ensure_grad();
        if (p->requires_grad) p->ensure_grad();
        for (int64_t n = 0; n < N; ++n)
          for (int64_t j = 0; j < K; ++j)
            for (int64_t r = 0; r < 3; ++r) {
              T gv = g[(n * K + j) * 3 + r];
              for (int64_t c = 0; c < 3; ++c) {
                if (R->requires_grad) R->grad[n * 9 + r * 3 + c] += gv * pd[(n * K + j) * 3 + c];
                if (p->requires_grad) p->grad[(n * K + j) * 3 + c] += gv * rd[n * 9 + r * 3 + c];
              }
            }
      },
      "rot_apply");
}

// 6D rotation parameterization -> orthonormal matrix (rows r1,r2,r3)
template <class T>
Var<T> rot6d_to_matrix(const Var<T>& x6) {
  int64_t N = x6->val.shape()[0];
  // bias the raw output toward the identity frame so the start is well-posed
  Tensor<T> offset({N, 6});
  for (int64_t n = 0; n < N; ++n) {
    offset[n * 6 + 0] = T(1);
    offset[n * 6 + 4] = T(1);
  }
  auto xb = add(x6, constant<T>(offset));
  auto a = narrow(xb, 1, 0, 3);
  auto b = narrow(xb, 1, 3, 3);
  auto normalize_rows = [&](const Var<T>& v) {
    auto n2 = sum_axis(square(v), 1);
    auto inv = recip(sqrt_op(add_scalar(n2, T(1e-12))));
    return mul(v, broadcast_axis(inv, 1, 3));
  };
  auto r1 = normalize_rows(a);
  auto d = sum_axis(mul(r1, b), 1);
  auto b_perp = sub(b, mul(r1, broadcast_axis(d, 1, 3)));
  auto r2 = normalize_rows(b_perp);
  auto r3 = cross3(r1, r2);
  auto R = concat<T>({reshape(r1, {N, 1, 3}), reshape(r2, {N, 1, 3}), reshape(r3, {N, 1, 3})}, 1);
  return R;
}

// single-channel union-of-gaussians heatmap volume for a local landmark set
template <class T>
Tensor<T> local_heatmap_volume(const Tensor<float>& pts, int64_t D, int64_t H, int64_t W, T sigma) {
  Tensor<T> out({1, 1, D, H, W});
  if (pts.size() == 0) return out;
  int64_t n = pts.shape()[0];
  T inv2s2 = T(1) / (T(2) * sigma * sigma);
  for (int64_t z = 0; z < D; ++z) {
    T gz = sampdetail::norm_coord<T>(z, D);
    for (int64_t y = 0; y < H; ++y) {
      T gy = sampdetail::norm_coord<T>(y, H);
      for (int64_t x = 0; x < W; ++x) {
        T gx = sampdetail::norm_coord<T>(x, W);
        T best = T(0);
        for (int64_t i = 0; i < n; ++i) {
          T dx = gx - static_cast<T>(pts[i * 3 + 0]);
          T dy = gy - static_cast<T>(pts[i * 3 + 1]);
          T dz = gz - static_cast<T>(pts[i * 3 + 2]);
          T v = std::exp(-(dx * dx + dy * dy + dz * dz) * inv2s2);
          if (v > best) best = v;
        }
        out[(z * H + y) * W + x] = best;
      }
    }
  }
  return out;
}

// ---- teacher model ----

template <class T>
struct Teacher {
  TeacherConfig cfg;
  ParamStore<T> params;       // generator side (everything but the discriminator)
  ParamStore<T> disc_params;  // discriminator

  // appearance encoder
  Conv2dLayer<T> enc_in;
  std::vector<Conv2dLayer<T>> enc_down;
  std::vector<InstanceNorm<T>> enc_norm;
  Conv2dLayer<T> enc_lift;  // 1x1 to C*D channels
  std::vector<Conv3dLayer<T>> enc3d;
  std::vector<InstanceNorm<T>> enc3d_norm;

  // keypoint predictor (MEM)
  std::vector<Conv2dLayer<T>> mem_conv;
  std::vector<InstanceNorm<T>> mem_norm;
  LinearLayer<T> mem_lm_embed;
  LinearLayer<T> mem_hidden_fc;
  LinearLayer<T> mem_head;  // -> 6 + 3 + k*3 + k*3

  // dense motion network
  std::vector<Conv3dLayer<T>> dmn_conv;
  std::vector<InstanceNorm<T>> dmn_norm;
  Conv3dLayer<T> dmn_head;

  // generator
  Conv2dLayer<T> gen_in;  // 1x1 over C*D channels
  InstanceNorm<T> gen_in_norm;
  std::vector<Conv2dLayer<T>> gen_up;
  std::vector<InstanceNorm<T>> gen_up_norm;
  Conv2dLayer<T> gen_out;

  // discriminator (per scale: 3 stride-2 convs + 1 logit conv)
  std::vector<std::vector<Conv2dLayer<T>>> disc_conv;

  Tensor<T> id_grid;  // (1,3,D,H',W')

  bool force_identity_weights = false;  // test hook: DMN emits the identity candidate only

  explicit Teacher(const TeacherConfig& c, uint64_t seed = 0) : cfg(c) {
    cfg.validate();
    auto rng = RngStream::derive(seed, {0x7e});
    int64_t nd = cfg.n_down();

    enc_in = Conv2dLayer<T>(params, "enc.in", 3, cfg.enc_base, 3, 1, rng);
    int64_t ch = cfg.enc_base;
    for (int64_t i = 0; i < nd; ++i) {
      enc_down.push_back(Conv2dLayer<T>(params, "enc.down" + std::to_string(i), ch, ch * 2, 3, 2, rng));
      enc_norm.emplace_back(params, "enc.norm" + std::to_string(i), ch * 2);
      ch *= 2;
    }
    enc_lift = Conv2dLayer<T>(params, "enc.lift", ch, cfg.volume_channels * cfg.volume_depth, 1, 1, rng);
    for (int64_t i = 0; i < cfg.enc3d_blocks; ++i) {
      enc3d.push_back(
          Conv3dLayer<T>(params, "enc.vol" + std::to_string(i), cfg.volume_channels, cfg.volume_channels, 3, 1, rng));
      enc3d_norm.emplace_back(params, "enc.vnorm" + std::to_string(i), cfg.volume_channels);
    }

    int64_t mc = cfg.mem_base;
    mem_conv.push_back(Conv2dLayer<T>(params, "mem.c0", 6, mc, 3, 2, rng));
    mem_norm.emplace_back(params, "mem.n0", mc);
    mem_conv.push_back(Conv2dLayer<T>(params, "mem.c1", mc, mc * 2, 3, 2, rng));
    mem_norm.emplace_back(params, "mem.n1", mc * 2);
    mem_conv.push_back(Conv2dLayer<T>(params, "mem.c2", mc * 2, mc * 4, 3, 2, rng));
    mem_norm.emplace_back(params, "mem.n2", mc * 4);
    mem_lm_embed = LinearLayer<T>(params, "mem.embed", cfg.landmarks * 3, cfg.mem_embed, rng);
    mem_hidden_fc = LinearLayer<T>(params, "mem.fc", mc * 4 + cfg.mem_embed, cfg.mem_hidden, rng);
    mem_head = LinearLayer<T>(params, "mem.head", cfg.mem_hidden, 6 + 3 + cfg.k * 6, rng);

    int64_t dc = cfg.dmn_base;
    dmn_conv.push_back(Conv3dLayer<T>(params, "dmn.c0", cfg.k + 3, dc, 3, 1, rng));
    dmn_norm.emplace_back(params, "dmn.n0", dc);
    dmn_conv.push_back(Conv3dLayer<T>(params, "dmn.c1", dc, dc, 3, 1, rng));
    dmn_norm.emplace_back(params, "dmn.n1", dc);
    dmn_head = Conv3dLayer<T>(params, "dmn.head", dc, cfg.k + 1, 3, 1, rng);

    gen_in = Conv2dLayer<T>(params, "gen.in", cfg.volume_channels * cfg.volume_depth, cfg.gen_base, 1, 1, rng);
    gen_in_norm = InstanceNorm<T>(params, "gen.innorm", cfg.gen_base);
    int64_t gc = cfg.gen_base;
    for (int64_t i = 0; i < nd; ++i) {
      gen_up.push_back(Conv2dLayer<T>(params, "gen.up" + std::to_string(i), gc, gc / 2, 3, 1, rng));
      gen_up_norm.emplace_back(params, "gen.upnorm" + std::to_string(i), gc / 2);
      gc /= 2;
    }
    gen_out = Conv2dLayer<T>(params, "gen.out", gc, 3, 3, 1, rng);

    auto drng = RngStream::derive(seed, {0xd1});
    for (int64_t s = 0; s < cfg.disc_scales; ++s) {
      std::vector<Conv2dLayer<T>> layers;
      std::string base = "disc.s" + std::to_string(s);
      layers.push_back(Conv2dLayer<T>(disc_params, base + ".c0", 3, cfg.disc_base, 3, 2, drng));
      layers.push_back(Conv2dLayer<T>(disc_params, base + ".c1", cfg.disc_base, cfg.disc_base * 2, 3, 2, drng));
      layers.push_back(Conv2dLayer<T>(disc_params, base + ".c2", cfg.disc_base * 2, cfg.disc_base * 4, 3, 2, drng));
      layers.push_back(Conv2dLayer<T>(disc_params, base + ".out", cfg.disc_base * 4, 1, 3, 1, drng));
      disc_conv.push_back(std::move(layers));
    }

    id_grid = identity_grid_3d<T>(cfg.volume_depth, cfg.feat_hw(), cfg.feat_hw());
  }

  // source image (N,3,H,W) -> volumetric appearance feature (N,C,D,H',W')
  Var<T> encode_appearance(const Var<T>& source) const {
    const Shape& s = source->val.shape();
    if (s.size() != 4 || s[1] != 3 || s[2] != cfg.resolution || s[3] != cfg.resolution)
      throw ShapeMismatch("encode_appearance: expected (N,3," + std::to_string(cfg.resolution) + "," +
                          std::to_string(cfg.resolution) + "), got " + shape_str(s));
    auto h = leaky_relu(enc_in(source));
    for (size_t i = 0; i < enc_down.size(); ++i) h = leaky_relu(enc_norm[i](enc_down[i](h)));
    h = enc_lift(h);
    int64_t N = s[0];
    auto vol = reshape(h, {N, cfg.volume_channels, cfg.volume_depth, cfg.feat_hw(), cfg.feat_hw()});
    for (size_t i = 0; i < enc3d.size(); ++i) vol = leaky_relu(enc3d_norm[i](enc3d[i](vol)));
    return vol;
  }

  // MEM: early infusion concatenates the mesh raster with the image; late
  // infusion injects the landmark embedding into the regression head.
  KeypointsOut<T> predict_keypoints(const Var<T>& image, const Var<T>& mesh_raster, const Var<T>& lms_flat) const {
    const Shape& is = image->val.shape();
    if (!mesh_raster->val.same_shape(image->val))
      throw PriorMismatch("mesh raster " + shape_str(mesh_raster->val.shape()) + " vs image " + shape_str(is));
    int64_t N = is[0];
    if (lms_flat->val.shape() != Shape{N, cfg.landmarks * 3}) throw PriorMismatch("landmark array shape");

    auto h = concat<T>({image, mesh_raster}, 1);  // early infusion
    for (size_t i = 0; i < mem_conv.size(); ++i) h = leaky_relu(mem_norm[i](mem_conv[i](h)));
    auto pooled = reshape(mean_trailing(h, 2), {N, mem_conv.back().cout});
    auto emb = leaky_relu(mem_lm_embed(lms_flat));  // late infusion
    auto joint = leaky_relu(mem_hidden_fc(concat<T>({pooled, emb}, 1)));
    auto head = mem_head(joint);

    KeypointsOut<T> out;
    out.rot = rot6d_to_matrix(narrow(head, 1, 0, 6));
    out.trans = mul_scalar(tanh_op(narrow(head, 1, 6, 3)), T(0.4));
    out.canonical = mul_scalar(tanh_op(reshape(narrow(head, 1, 9, cfg.k * 3), {N, cfg.k, 3})), T(0.5));
    out.expr = mul_scalar(tanh_op(reshape(narrow(head, 1, 9 + cfg.k * 3, cfg.k * 3), {N, cfg.k, 3})), T(0.2));
    auto rotated = rot_apply(out.rot, out.canonical);
    auto t_b = broadcast_axis(reshape(out.trans, {N, 1, 3}), 1, cfg.k);
    out.composed = add(add(rotated, t_b), out.expr);
    return out;
  }

  struct Motion {
    Var<T> grid;     // (N,3,D,H',W') backward-sampling coordinates
    Var<T> weights;  // (N,k+1,D,H',W') softmax contributions
  };

  // k+1 candidate flows: identity plus one local translation per keypoint
  // pair; a small volumetric net predicts the softmax combination weights.
  // c_loc heatmap channels (2) ride along as conditioning.
  Motion dense_motion(const Var<T>& kp_src, const Var<T>& kp_drv, const Var<T>& cloc_src,
                      const Var<T>& cloc_drv) const {
    int64_t N = kp_src->val.shape()[0];
    int64_t D = cfg.volume_depth, HW = cfg.feat_hw();
    auto hm_src = kp_to_heatmap_3d(kp_src, D, HW, HW, static_cast<T>(cfg.heatmap_sigma));
    auto hm_drv = kp_to_heatmap_3d(kp_drv, D, HW, HW, static_cast<T>(cfg.heatmap_sigma));
    auto diff = sub(hm_drv, hm_src);  // (N,k,D,H,W)
    auto idch = constant<T>(Tensor<T>({N, 1, D, HW, HW}));
    auto inp = concat<T>({idch, diff, cloc_src, cloc_drv}, 1);  // (N,k+3,...)

    auto h = inp;
    for (size_t i = 0; i < dmn_conv.size(); ++i) h = leaky_relu(dmn_norm[i](dmn_conv[i](h)));
    auto logits = dmn_head(h);

    Motion m;
    if (force_identity_weights) {
      Tensor<T> w({N, cfg.k + 1, D, HW, HW});
      for (int64_t n = 0; n < N; ++n)
        for (int64_t v = 0; v < D * HW * HW; ++v) w[(n * (cfg.k + 1)) * D * HW * HW + v] = T(1);
      m.weights = constant<T>(std::move(w));
    } else {
      m.weights = softmax(logits, 1);
    }
    auto deltas = sub(kp_src, kp_drv);  // (N,k,3): sample source at z + (p_s - p_d)
    auto field = weighted_delta_field(m.weights, deltas);
    m.grid = add(field, constant<T>(tile_batch(id_grid, N)));
    return m;
  }

  Var<T> warp(const Var<T>& feature, const Motion& motion) const { return grid_sample_3d(feature, motion.grid); }

  // warped volume -> image; depth is folded into channels, then 2D decoding
  Var<T> generate(const Var<T>& warped) const {
    const Shape& s = warped->val.shape();
    int64_t N = s[0];
    auto h = reshape(warped, {N, cfg.volume_channels * cfg.volume_depth, cfg.feat_hw(), cfg.feat_hw()});
    h = leaky_relu(gen_in_norm(gen_in(h)));
    for (size_t i = 0; i < gen_up.size(); ++i) h = leaky_relu(gen_up_norm[i](gen_up[i](upsample_nearest2d(h, 2))));
    return sigmoid(gen_out(h));
  }

  // multi-scale patch logits, one map per scale at descending resolution
  std::vector<Var<T>> discriminate(const Var<T>& image) const {
    std::vector<Var<T>> maps;
    auto inp = image;
    for (int64_t s = 0; s < cfg.disc_scales; ++s) {
      if (s > 0) inp = avg_pool2d(inp, 2);
      auto h = inp;
      for (size_t i = 0; i + 1 < disc_conv[s].size(); ++i) h = leaky_relu(disc_conv[s][i](h));
      maps.push_back(disc_conv[s].back()(h));
    }
    return maps;
  }

  // full forward for one (source, driving) pair
  struct Forward {
    Var<T> appearance;  // pre-warp volume from the (possibly degraded) source
    KeypointsOut<T> kp_src, kp_drv;
    Motion motion;
    Var<T> warped;
    Var<T> output;
  };

  Forward forward(const Var<T>& src_appearance_img, const Var<T>& src_img, const Var<T>& src_mesh,
                  const Var<T>& src_lms, const Var<T>& drv_img, const Var<T>& drv_mesh, const Var<T>& drv_lms,
                  const Var<T>& cloc_src, const Var<T>& cloc_drv) const {
    Forward f;
    f.appearance = encode_appearance(src_appearance_img);
    f.kp_src = predict_keypoints(src_img, src_mesh, src_lms);
    f.kp_drv = predict_keypoints(drv_img, drv_mesh, drv_lms);
    f.motion = dense_motion(f.kp_src.composed, f.kp_drv.composed, cloc_src, cloc_drv);
    f.warped = warp(f.appearance, f.motion);
    f.output = generate(f.warped);
    return f;
  }

  Var<T> zero_cloc(int64_t N) const {
    return constant<T>(Tensor<T>({N, 1, cfg.volume_depth, cfg.feat_hw(), cfg.feat_hw()}));
  }
};

// ---- analytic layer enumeration (mirrors the constructor exactly) ----

inline NetSpec teacher_netspec(const TeacherConfig& cfg) {
  cfg.validate();
  NetSpec spec;
  int64_t R = cfg.resolution, nd = cfg.n_down(), hw = cfg.feat_hw(), D = cfg.volume_depth;

  int64_t h = R, w = R;
  spec.push_back({"enc.in", "conv2d", 3, cfg.enc_base, 1, 3, 3, 1, h, w});
  int64_t ch = cfg.enc_base;
  for (int64_t i = 0; i < nd; ++i) {
    h /= 2;
    w /= 2;
    spec.push_back({"enc.down" + std::to_string(i), "conv2d", ch, ch * 2, 1, 3, 3, 1, h, w});
    ch *= 2;
  }
  spec.push_back({"enc.lift", "conv2d", ch, cfg.volume_channels * D, 1, 1, 1, 1, hw, hw});
  for (int64_t i = 0; i < cfg.enc3d_blocks; ++i)
    spec.push_back(
        {"enc.vol" + std::to_string(i), "conv3d", cfg.volume_channels, cfg.volume_channels, 3, 3, 3, D, hw, hw});

  int64_t mc = cfg.mem_base, mh = R / 2;
  spec.push_back({"mem.c0", "conv2d", 6, mc, 1, 3, 3, 1, mh, mh});
  spec.push_back({"mem.c1", "conv2d", mc, mc * 2, 1, 3, 3, 1, mh / 2, mh / 2});
  spec.push_back({"mem.c2", "conv2d", mc * 2, mc * 4, 1, 3, 3, 1, mh / 4, mh / 4});
  spec.push_back({"mem.embed", "linear", cfg.landmarks * 3, cfg.mem_embed, 1, 1, 1, 1, 1, 1});
  spec.push_back({"mem.fc", "linear", mc * 4 + cfg.mem_embed, cfg.mem_hidden, 1, 1, 1, 1, 1, 1});
  spec.push_back({"mem.head", "linear", cfg.mem_hidden, 6 + 3 + cfg.k * 6, 1, 1, 1, 1, 1, 1});

  int64_t dc = cfg.dmn_base;
  spec.push_back({"dmn.c0", "conv3d", cfg.k + 3, dc, 3, 3, 3, D, hw, hw});
  spec.push_back({"dmn.c1", "conv3d", dc, dc, 3, 3, 3, D, hw, hw});
  spec.push_back({"dmn.head", "conv3d", dc, cfg.k + 1, 3, 3, 3, D, hw, hw});

  spec.push_back({"gen.in", "conv2d", cfg.volume_channels * D, cfg.gen_base, 1, 1, 1, 1, hw, hw});
  int64_t gc = cfg.gen_base, gh = hw;
  for (int64_t i = 0; i < nd; ++i) {
    gh *= 2;
    spec.push_back({"gen.up" + std::to_string(i), "conv2d", gc, gc / 2, 1, 3, 3, 1, gh, gh});
    gc /= 2;
  }
  spec.push_back({"gen.out", "conv2d", gc, 3, 1, 3, 3, 1, R, R});
  return spec;
}

// encoder stage only (appearance path), for per-stage accounting
inline NetSpec teacher_encoder_netspec(const TeacherConfig& cfg) {
  NetSpec all = teacher_netspec(cfg), enc;
  for (auto& l : all)
    if (l.name.rfind("enc.", 0) == 0) enc.push_back(l);
  return enc;
}

}  // namespace sf

#endif
