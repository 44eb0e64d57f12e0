#include <catch2/catch_amalgamated.hpp>

#include "superface/degrade.hpp"
#include "superface/toyface.hpp"

using namespace sf;

namespace {
Image test_face(uint64_t seed, int64_t size = 64) {
  auto id = ToyIdentity::from_seed(seed);
  auto motion = ToyMotion::from_seed(seed);
  return render_toyface(id, motion.at(0.4), size, size);
}

double energy_of(const Image& im) {  // forward-difference gradient energy
  auto g = to_gray(im);
  int64_t H = g.shape()[0], W = g.shape()[1];
  double acc = 0;
  int64_t n = 0;
  for (int64_t y = 0; y + 1 < H; ++y)
    for (int64_t x = 0; x + 1 < W; ++x) {
      double gx = g[y * W + x + 1] - g[y * W + x];
      double gy = g[(y + 1) * W + x] - g[y * W + x];
      acc += gx * gx + gy * gy;
      ++n;
    }
  return acc / n;
}
}  // namespace

TEST_CASE("sample_params: determinism, ranges, degenerate ranges") {
  auto cfg = DegradationConfig::defaults();

  auto r1 = RngStream::derive(0, {1});
  auto r2 = RngStream::derive(0, {1});
  auto a = sample_params(cfg, r1);
  auto b = sample_params(cfg, r2);
  REQUIRE(a.size() == 2);
  for (size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].blur.sigma_x == b[i].blur.sigma_x);
    REQUIRE(a[i].resize.scale == b[i].resize.scale);
    REQUIRE(a[i].jpeg_quality == b[i].jpeg_quality);
    REQUIRE(a[i].noise.kind == b[i].noise.kind);
  }

  // degenerate ranges pin the sample exactly
  DegradationConfig onecfg = DegradationConfig::defaults();
  onecfg.orders = 1;
  auto& st = onecfg.stages[0];
  st.sigma_min = st.sigma_max = 1.5;
  st.kernel_min = st.kernel_max = 9;
  st.aniso_prob = 0.0;
  st.scale_min = st.scale_max = 0.5;
  st.interps = {Interp::kBilinear};
  st.gauss_sigma_min = st.gauss_sigma_max = 0.05;
  st.poisson_prob = 0.0;
  st.jpeg_min = st.jpeg_max = 60;
  auto rng = RngStream::derive(7, {});
  auto p = sample_params(onecfg, rng);
  REQUIRE(p.size() == 1);
  REQUIRE(p[0].blur.sigma_x == 1.5);
  REQUIRE(p[0].blur.kernel_size == 9);
  REQUIRE(p[0].resize.scale == 0.5);
  REQUIRE(p[0].noise.sigma == 0.05);
  REQUIRE(p[0].jpeg_quality == 60);

  // 10k draws stay inside configured ranges (brute-force check)
  auto rbig = RngStream::derive(123, {});
  int qmin = 999, qmax = -1;
  double smin = 1e9, smax = -1e9;
  for (int i = 0; i < 5000; ++i) {
    auto ps = sample_params(cfg, rbig);
    for (auto& pp : ps) {
      qmin = std::min(qmin, pp.jpeg_quality);
      qmax = std::max(qmax, pp.jpeg_quality);
      smin = std::min(smin, pp.blur.sigma_x);
      smax = std::max(smax, pp.blur.sigma_x);
      REQUIRE(pp.resize.scale >= 0.25);
      REQUIRE(pp.resize.scale <= 1.0);
      REQUIRE(pp.blur.kernel_size % 2 == 1);
      REQUIRE(pp.blur.kernel_size >= 7);
      REQUIRE(pp.blur.kernel_size <= 21);
    }
  }
  REQUIRE(qmin >= 30);
  REQUIRE(qmax <= 95);
  REQUIRE(smin >= 0.2);
  REQUIRE(smax <= 3.0);
}

TEST_CASE("degrade_once identity params return the input bit-exactly") {
  Image img = test_face(5);
  auto rng = RngStream::derive(0, {});
  Image out = degrade_once(img, DegradationParams::identity(), rng);
  REQUIRE(out.size() == img.size());
  for (int64_t i = 0; i < img.size(); ++i) REQUIRE(out[i] == img[i]);
}

TEST_CASE("gaussian blur strictly reduces gradient energy") {
  Image img = test_face(6);
  DegradationParams p = DegradationParams::identity();
  p.blur.sigma_x = p.blur.sigma_y = 2.0;
  p.blur.kernel_size = 13;
  auto rng = RngStream::derive(0, {});
  Image blurred = degrade_once(img, p, rng);
  REQUIRE(energy_of(blurred) < energy_of(img));
}

TEST_CASE("resize down then final upscale restores dimensions") {
  Image img = test_face(7);
  DegradationConfig cfg = DegradationConfig::identity();
  cfg.orders = 1;
  cfg.stages[0].scale_min = cfg.stages[0].scale_max = 0.25;
  auto rng = RngStream::derive(3, {});
  auto [lq, hq] = make_pair_images(img, cfg, rng);
  REQUIRE(img_h(lq) == img_h(img));
  REQUIRE(img_w(lq) == img_w(img));
  REQUIRE(&hq != &img);
  for (int64_t i = 0; i < img.size(); ++i) REQUIRE(hq[i] == img[i]);
}

TEST_CASE("ImageTooSmall when resize collapses the frame") {
  Image img = test_face(8, 16);
  DegradationParams p = DegradationParams::identity();
  p.resize.scale = 0.2;
  auto rng = RngStream::derive(0, {});
  REQUIRE_THROWS_AS(degrade_once(img, p, rng), ImageTooSmall);
}

TEST_CASE("make_pair: determinism and identity config") {
  Image img = test_face(9);
  auto cfg = DegradationConfig::defaults();

  auto ra = RngStream::derive(17, {});
  auto rb = RngStream::derive(17, {});
  auto [a, a2] = make_pair_images(img, cfg, ra);
  auto [b, b2] = make_pair_images(img, cfg, rb);
  REQUIRE(tensor_hash(a) == tensor_hash(b));

  auto rc = RngStream::derive(18, {});
  auto idcfg = DegradationConfig::identity();
  auto [c, c2] = make_pair_images(img, idcfg, rc);
  for (int64_t i = 0; i < img.size(); ++i) REQUIRE(c[i] == img[i]);

  // outputs stay in range and finite
  for (int64_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i] >= 0.f);
    REQUIRE(a[i] <= 1.f);
  }
}

TEST_CASE("orders=1 equals a single degrade_once plus final resize") {
  Image img = test_face(10);
  DegradationConfig cfg = DegradationConfig::defaults();
  cfg.orders = 1;
  auto r1 = RngStream::derive(4, {});
  auto [lq, hq] = make_pair_images(img, cfg, r1);

  auto r2 = RngStream::derive(4, {});
  auto params = sample_params(cfg, r2);
  REQUIRE(params.size() == 1);
  Image manual = degrade_once(img, params[0], r2);
  if (img_h(manual) != img_h(img) || img_w(manual) != img_w(img)) {
    manual = resize_image(manual, img_h(img), img_w(img), Interp::kBilinear);
    clamp_image(manual);
  }
  REQUIRE(tensor_hash(manual) == tensor_hash(lq));
}

TEST_CASE("default degradation is non-trivial: mean PSNR < 35 dB over a corpus") {
  auto cfg = DegradationConfig::defaults();
  double acc = 0;
  int n = 24;
  for (int i = 0; i < n; ++i) {
    Image img = test_face(100 + i);
    auto rng = RngStream::derive(1000 + i, {});
    auto [lq, hq] = make_pair_images(img, cfg, rng);
    acc += psnr(lq, hq);
  }
  REQUIRE(acc / n < 35.0);
}

TEST_CASE("degradation config JSON round trip") {
  auto cfg = DegradationConfig::defaults();
  cfg.rng_seed = 99;
  cfg.stages[0].jpeg_min = 40;
  nlohmann::json j = cfg;
  auto back = j.get<DegradationConfig>();
  REQUIRE(back.orders == cfg.orders);
  REQUIRE(back.rng_seed == 99);
  REQUIRE(back.stages[0].jpeg_min == 40);
  REQUIRE(back.stages[1].scale_min == cfg.stages[1].scale_min);
}

TEST_CASE("jpeg roundtrip: bypass sentinel exact, low quality lossy") {
  Image img = test_face(12);
  Image same = jpeg_roundtrip(img, 0);
  for (int64_t i = 0; i < img.size(); ++i) REQUIRE(same[i] == img[i]);

  Image q30 = jpeg_roundtrip(img, 30);
  REQUIRE(psnr(q30, img) < 45.0);
  REQUIRE(psnr(q30, img) > 20.0);
  Image q90 = jpeg_roundtrip(img, 90);
  REQUIRE(psnr(q90, img) > psnr(q30, img));
}
