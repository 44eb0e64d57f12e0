#ifndef SUPERFACE_DEGRADE_HPP
#define SUPERFACE_DEGRADE_HPP

// Second-order synthetic degradation: per order blur -> resize -> noise ->
// JPEG, then a final resize back to the source resolution. Produces the
// (low-quality, high-quality) source pairs used for robustness training.
// Everything is driven by explicit seeded streams and fixed-function image
// ops, so a (image, config, seed) triple maps to one exact output.

#include <json.hpp>

#include "superface/image.hpp"
#include "superface/jpeg_sim.hpp"
#include "superface/rng.hpp"

namespace sf {

struct ImageTooSmall : std::runtime_error {
  explicit ImageTooSmall(const std::string& m) : std::runtime_error("ImageTooSmall: " + m) {}
};

struct DegradationParams {
  struct Blur {
    std::string kernel_type = "gaussian";  // gaussian | anisotropic-gaussian
    double sigma_x = 0.0, sigma_y = 0.0;
    double angle = 0.0;
    int kernel_size = 3;  // odd, >= 3
  } blur;
  struct Resize {
    double scale = 1.0;
    Interp interp = Interp::kBilinear;
  } resize;
  struct Noise {
    std::string kind = "gaussian";  // gaussian | poisson
    double sigma = 0.0;             // gaussian std in [0,1] units
    double scale = 100.0;           // poisson photon scale
  } noise;
  int jpeg_quality = 0;  // 0 = lossless bypass sentinel

  static DegradationParams identity() { return DegradationParams{}; }

  void validate() const {
    if (blur.kernel_size < 3 || blur.kernel_size % 2 == 0) throw std::runtime_error("kernel_size must be odd >= 3");
    if (resize.scale <= 0.0) throw std::runtime_error("resize scale must be > 0");
    if (jpeg_quality != 0 && (jpeg_quality < 1 || jpeg_quality > 100))
      throw std::runtime_error("jpeg_quality out of range");
  }
};

// sampling ranges for one degradation order
struct StageRanges {
  double sigma_min = 0.2, sigma_max = 3.0;
  int kernel_min = 7, kernel_max = 21;  // odd values only
  double aniso_prob = 0.5;
  double scale_min = 0.25, scale_max = 1.0;
  std::vector<Interp> interps = {Interp::kNearest, Interp::kBilinear, Interp::kBicubic};
  double gauss_sigma_min = 0.0, gauss_sigma_max = 0.1;
  double poisson_scale_min = 50.0, poisson_scale_max = 500.0;
  double poisson_prob = 0.2;
  int jpeg_min = 30, jpeg_max = 95;
};

struct DegradationConfig {
  int orders = 2;
  std::vector<StageRanges> stages;  // one per order
  bool final_resize_to_source = true;
  uint64_t rng_seed = 0;

  static DegradationConfig defaults() {
    DegradationConfig c;
    c.stages.resize(2);
    c.stages[1].scale_min = 0.5;  // second order resizes less aggressively
    return c;
  }

  // degenerate config whose every sample is the identity transform
  static DegradationConfig identity() {
    DegradationConfig c;
    c.stages.resize(2);
    for (auto& s : c.stages) {
      s.sigma_min = s.sigma_max = 0.0;
      s.kernel_min = s.kernel_max = 3;
      s.aniso_prob = 0.0;
      s.scale_min = s.scale_max = 1.0;
      s.interps = {Interp::kBilinear};
      s.gauss_sigma_min = s.gauss_sigma_max = 0.0;
      s.poisson_prob = 0.0;
      s.jpeg_min = s.jpeg_max = 0;
    }
    return c;
  }

  void validate() const {
    if (orders < 1) throw std::runtime_error("orders must be >= 1");
    if (static_cast<int>(stages.size()) < orders) throw std::runtime_error("stage ranges missing for some orders");
  }
};

// Draws every field in a fixed order regardless of which branch is taken, so
// the stream stays aligned across configs.
inline std::vector<DegradationParams> sample_params(const DegradationConfig& config, RngStream& rng) {
  config.validate();
  std::vector<DegradationParams> out;
  for (int o = 0; o < config.orders; ++o) {
    const StageRanges& r = config.stages[o];
    DegradationParams p;
    double aniso_draw = rng.uniform();
    int nk = (r.kernel_max - r.kernel_min) / 2 + 1;  // odd sizes in range
    p.blur.kernel_size = r.kernel_min + 2 * static_cast<int>(rng.below(static_cast<uint64_t>(nk)));
    double s1 = rng.uniform(r.sigma_min, r.sigma_max);
    double s2 = rng.uniform(r.sigma_min, r.sigma_max);
    double ang = rng.uniform(0.0, detmath::kPi);
    if (aniso_draw < r.aniso_prob) {
      p.blur.kernel_type = "anisotropic-gaussian";
      p.blur.sigma_x = s1;
      p.blur.sigma_y = s2;
      p.blur.angle = ang;
    } else {
      p.blur.kernel_type = "gaussian";
      p.blur.sigma_x = s1;
      p.blur.sigma_y = s1;
      p.blur.angle = 0.0;
    }
    p.resize.scale = rng.uniform(r.scale_min, r.scale_max);
    p.resize.interp = r.interps[rng.below(r.interps.size())];
    double kind_draw = rng.uniform();
    double gsig = rng.uniform(r.gauss_sigma_min, r.gauss_sigma_max);
    double pscale = rng.uniform(r.poisson_scale_min, r.poisson_scale_max);
    if (kind_draw < r.poisson_prob) {
      p.noise.kind = "poisson";
      p.noise.scale = pscale;
      p.noise.sigma = 0.0;
    } else {
      p.noise.kind = "gaussian";
      p.noise.sigma = gsig;
    }
    p.jpeg_quality = r.jpeg_min >= r.jpeg_max ? r.jpeg_min : rng.uniform_int(r.jpeg_min, r.jpeg_max);
    p.validate();
    out.push_back(p);
  }
  return out;
}

// one order: blur -> resize -> noise -> jpeg; needs its own noise stream
inline Image degrade_once(const Image& image, const DegradationParams& params, RngStream& noise_rng) {
  params.validate();
  Image img = image;

  // blur
  if (params.blur.sigma_x > 0.0 || params.blur.sigma_y > 0.0) {
    auto k = gaussian_kernel(static_cast<float>(params.blur.sigma_x), static_cast<float>(params.blur.sigma_y),
                             static_cast<float>(params.blur.angle), params.blur.kernel_size);
    img = convolve_image(img, k);
  }

  // resize
  if (params.resize.scale != 1.0) {
    int64_t oh = std::max<int64_t>(1, static_cast<int64_t>(std::floor(img_h(img) * params.resize.scale + 0.5)));
    int64_t ow = std::max<int64_t>(1, static_cast<int64_t>(std::floor(img_w(img) * params.resize.scale + 0.5)));
    if (oh < 8 || ow < 8)
      throw ImageTooSmall("post-resize " + std::to_string(oh) + "x" + std::to_string(ow));
    img = resize_image(img, oh, ow, params.resize.interp);
    clamp_image(img);  // bicubic can overshoot
  }

  // noise
  if (params.noise.kind == "gaussian") {
    if (params.noise.sigma > 0.0) {
      for (int64_t i = 0; i < img.size(); ++i)
        img[i] = clamp01(img[i] + static_cast<float>(noise_rng.normal(0.0, params.noise.sigma)));
    }
  } else if (params.noise.kind == "poisson") {
    double s = params.noise.scale;
    for (int64_t i = 0; i < img.size(); ++i) {
      double lam = static_cast<double>(img[i]) * s;
      img[i] = clamp01(static_cast<float>(static_cast<double>(noise_rng.poisson(lam)) / s));
    }
  } else {
    throw std::runtime_error("unknown noise kind: " + params.noise.kind);
  }

  // jpeg
  img = jpeg_roundtrip(img, params.jpeg_quality);
  return img;
}

// (low-quality, high-quality); second element is the untouched input
inline std::pair<Image, Image> make_pair_images(const Image& source, const DegradationConfig& config,
                                                RngStream& rng) {
  auto params = sample_params(config, rng);
  Image img = source;
  for (const auto& p : params) img = degrade_once(img, p, rng);
  if (config.final_resize_to_source && (img_h(img) != img_h(source) || img_w(img) != img_w(source))) {
    img = resize_image(img, img_h(source), img_w(source), Interp::kBilinear);
    clamp_image(img);
  }
  return {std::move(img), source};
}

// ---- JSON (preview manifests, run configs) ----

inline void to_json(nlohmann::json& j, const DegradationParams& p) {
  j = {{"blur",
        {{"kernel_type", p.blur.kernel_type},
         {"sigma_x", p.blur.sigma_x},
         {"sigma_y", p.blur.sigma_y},
         {"angle", p.blur.angle},
         {"kernel_size", p.blur.kernel_size}}},
       {"resize", {{"scale", p.resize.scale}, {"interp", interp_name(p.resize.interp)}}},
       {"noise", {{"kind", p.noise.kind}, {"sigma", p.noise.sigma}, {"scale", p.noise.scale}}},
       {"jpeg_quality", p.jpeg_quality}};
}

inline void to_json(nlohmann::json& j, const StageRanges& r) {
  std::vector<std::string> interps;
  for (auto i : r.interps) interps.push_back(interp_name(i));
  j = {{"sigma", {r.sigma_min, r.sigma_max}},
       {"kernel", {r.kernel_min, r.kernel_max}},
       {"aniso_prob", r.aniso_prob},
       {"scale", {r.scale_min, r.scale_max}},
       {"interps", interps},
       {"gaussian_noise_sigma", {r.gauss_sigma_min, r.gauss_sigma_max}},
       {"poisson_scale", {r.poisson_scale_min, r.poisson_scale_max}},
       {"poisson_prob", r.poisson_prob},
       {"jpeg_quality", {r.jpeg_min, r.jpeg_max}}};
}

inline void from_json(const nlohmann::json& j, StageRanges& r) {
  if (j.contains("sigma")) {
    r.sigma_min = j["sigma"][0];
    r.sigma_max = j["sigma"][1];
  }
  if (j.contains("kernel")) {
    r.kernel_min = j["kernel"][0];
    r.kernel_max = j["kernel"][1];
  }
  if (j.contains("aniso_prob")) r.aniso_prob = j["aniso_prob"];
  if (j.contains("scale")) {
    r.scale_min = j["scale"][0];
    r.scale_max = j["scale"][1];
  }
  if (j.contains("interps")) {
    r.interps.clear();
    for (const auto& s : j["interps"]) r.interps.push_back(interp_from_string(s.get<std::string>()));
  }
  if (j.contains("gaussian_noise_sigma")) {
    r.gauss_sigma_min = j["gaussian_noise_sigma"][0];
    r.gauss_sigma_max = j["gaussian_noise_sigma"][1];
  }
  if (j.contains("poisson_scale")) {
    r.poisson_scale_min = j["poisson_scale"][0];
    r.poisson_scale_max = j["poisson_scale"][1];
  }
  if (j.contains("poisson_prob")) r.poisson_prob = j["poisson_prob"];
  if (j.contains("jpeg_quality")) {
    r.jpeg_min = j["jpeg_quality"][0];
    r.jpeg_max = j["jpeg_quality"][1];
  }
}

inline void to_json(nlohmann::json& j, const DegradationConfig& c) {
  j = {{"orders", c.orders},
       {"final_resize_to_source", c.final_resize_to_source},
       {"rng_seed", c.rng_seed},
       {"stages", c.stages}};
}

inline void from_json(const nlohmann::json& j, DegradationConfig& c) {
  c = DegradationConfig::defaults();
  if (j.contains("orders")) c.orders = j["orders"];
  if (j.contains("final_resize_to_source")) c.final_resize_to_source = j["final_resize_to_source"];
  if (j.contains("rng_seed")) c.rng_seed = j["rng_seed"];
  if (j.contains("stages")) {
    c.stages.clear();
    for (const auto& s : j["stages"]) c.stages.push_back(s.get<StageRanges>());
  }
  while (static_cast<int>(c.stages.size()) < c.orders) c.stages.push_back(c.stages.back());
}

}  // namespace sf

#endif
