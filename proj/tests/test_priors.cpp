#include <catch2/catch_amalgamated.hpp>

#include "superface/providers.hpp"

using namespace sf;

TEST_CASE("project_orthographic slices xy") {
  Tensor<float> p({1, 3});
  p[0] = 0.1f; p[1] = -0.2f; p[2] = 0.9f;
  auto q = project_orthographic(p);
  REQUIRE(q.shape() == Shape{1, 2});
  REQUIRE(q[0] == 0.1f);
  REQUIRE(q[1] == -0.2f);

  Tensor<float> empty({0, 3});
  REQUIRE(project_orthographic(empty).shape() == Shape{0, 2});

  // brute-force column slice oracle on a random set
  RngStream rng(3);
  Tensor<float> r({15, 3});
  for (int64_t i = 0; i < r.size(); ++i) r[i] = static_cast<float>(rng.uniform(-1, 1));
  auto rq = project_orthographic(r);
  for (int64_t i = 0; i < 15; ++i) {
    REQUIRE(rq[i * 2 + 0] == r[i * 3 + 0]);
    REQUIRE(rq[i * 2 + 1] == r[i * 3 + 1]);
  }
}

TEST_CASE("extract_local returns fixed disjoint index sets") {
  auto id = ToyIdentity::from_seed(1);
  auto lm = toyface_landmarks(id, ToyFaceParams{});

  auto mouth = extract_local(lm, Region::kMouth);
  REQUIRE(mouth.indices.size() == 20);
  REQUIRE(mouth.indices.front() == 48);
  REQUIRE(mouth.indices.back() == 67);
  for (size_t r = 0; r < mouth.indices.size(); ++r)
    for (int c = 0; c < 3; ++c)
      REQUIRE(mouth.landmarks[static_cast<int64_t>(r) * 3 + c] == lm.points[mouth.indices[r] * 3 + c]);

  auto eyes = extract_local(lm, Region::kEyes);
  for (int i : eyes.indices)
    REQUIRE(std::find(mouth.indices.begin(), mouth.indices.end(), i) == mouth.indices.end());

  auto custom = extract_local(lm, Region::kCustom, {5, 2, 9});
  REQUIRE(custom.indices == std::vector<int>{5, 2, 9});
  REQUIRE(custom.landmarks[0 * 3 + 0] == lm.points[5 * 3 + 0]);

  REQUIRE_THROWS_AS(extract_local(lm, Region::kCustom), UnknownRegion);
  REQUIRE_THROWS_AS(extract_local(lm, Region::kCustom, {999}), UnknownRegion);
}

TEST_CASE("rasterize_mesh: bresenham pixels, translation, permutation, empty table") {
  LandmarkSet3D lm;
  lm.points = Tensor<float>({2, 3});
  // horizontal segment from pixel (1,3) to pixel (5,3) on an 8x8 raster:
  // normalized x = 2*px/(W-1)-1
  auto npx = [](int64_t px, int64_t size) { return static_cast<float>(2.0 * px / (size - 1) - 1.0); };
  lm.points[0] = npx(1, 8); lm.points[1] = npx(3, 8); lm.points[2] = 0.f;
  lm.points[3] = npx(5, 8); lm.points[4] = npx(3, 8); lm.points[5] = 0.f;

  auto mesh = rasterize_mesh(lm, {{0, 1}}, 8, 8);
  // exactly the bresenham-covered pixels (x=1..5, y=3) are nonzero; interior
  // pixels at full intensity, endpoints at half coverage
  for (int64_t y = 0; y < 8; ++y)
    for (int64_t x = 0; x < 8; ++x) {
      float v = mesh.raster[(0 * 8 + y) * 8 + x];
      if (y == 3 && x >= 1 && x <= 5) {
        REQUIRE(v > 0.0f);
        if (x > 1 && x < 5) REQUIRE(v == 1.0f);
      } else {
        REQUIRE(v == 0.0f);
      }
    }

  SECTION("translation equivariance: W/8-pixel shift of the landmarks shifts the raster") {
    auto id = ToyIdentity::from_seed(2);
    auto base = toyface_landmarks(id, ToyFaceParams{});
    int64_t H = 64, W = 64;
    int64_t px_shift = W / 8;
    float dx_norm = static_cast<float>(2.0 * px_shift / (W - 1));  // exactly px_shift pixels
    auto m0 = rasterize_mesh(base, synthetic68_edges(), H, W);
    LandmarkSet3D shifted = base;
    for (int64_t i = 0; i < 68; ++i) shifted.points[i * 3 + 0] += dx_norm;
    auto m1 = rasterize_mesh(shifted, synthetic68_edges(), H, W);
    for (int64_t y = 0; y < H; ++y)
      for (int64_t x = 0; x < W - px_shift; ++x) {
        float a = m0.raster[(0 * H + y) * W + x];
        float b = m1.raster[(0 * H + y) * W + x + px_shift];
        REQUIRE(std::abs(a - b) < 1e-4f);  // float rounding of the shifted endpoints
      }
  }

  SECTION("edge permutation invariance") {
    auto id = ToyIdentity::from_seed(3);
    auto base = toyface_landmarks(id, ToyFaceParams{});
    EdgeTable fwd = synthetic68_edges();
    EdgeTable rev(fwd.rbegin(), fwd.rend());
    auto a = rasterize_mesh(base, fwd, 48, 48);
    auto b = rasterize_mesh(base, rev, 48, 48);
    for (int64_t i = 0; i < a.raster.size(); ++i) REQUIRE(a.raster[i] == b.raster[i]);
  }

  SECTION("empty edge table gives all-zero raster") {
    auto mesh0 = rasterize_mesh(lm, {}, 8, 8);
    for (int64_t i = 0; i < mesh0.raster.size(); ++i) REQUIRE(mesh0.raster[i] == 0.f);
  }

  SECTION("edge index out of range throws") {
    REQUIRE_THROWS_AS(rasterize_mesh(lm, {{0, 7}}, 8, 8), ShapeMismatch);
  }
}

TEST_CASE("synthetic strip provider recovers landmarks exactly") {
  auto id = ToyIdentity::from_seed(11);
  SyntheticStripProvider provider(id);

  ToyFaceParams p;
  p.cx = 0.08; p.cy = -0.05; p.yaw = 0.2; p.mouth_open = 0.6;
  ToyFaceParams q = strip_quantize(p);
  Image img = render_toyface(id, p, 64, 64, true);

  auto [mesh, lm] = detect_priors(img, provider);
  auto truth = toyface_landmarks(id, q);
  for (int64_t i = 0; i < truth.points.size(); ++i)
    REQUIRE(std::abs(lm.points[i] - truth.points[i]) < 1e-6f);
  lm.validate();

  // determinism: bit-identical on a second pass
  auto [mesh2, lm2] = detect_priors(img, provider);
  for (int64_t i = 0; i < lm.points.size(); ++i) REQUIRE(lm.points[i] == lm2.points[i]);
  for (int64_t i = 0; i < mesh.raster.size(); ++i) REQUIRE(mesh.raster[i] == mesh2.raster[i]);
  REQUIRE(tensor_hash(mesh.raster) == tensor_hash(mesh2.raster));

  // mesh raster has ink
  double ink = 0;
  for (int64_t i = 0; i < mesh.raster.size(); ++i) ink += mesh.raster[i];
  REQUIRE(ink > 0);
}

TEST_CASE("blank image raises NoFaceDetected") {
  auto id = ToyIdentity::from_seed(11);
  SyntheticStripProvider provider(id);
  Image blank = make_image(32, 32, 0.f);
  REQUIRE_THROWS_AS(detect_priors(blank, provider), NoFaceDetected);

  ToyFittingProvider fitter(id, 0.02, 40);
  REQUIRE_THROWS_AS(detect_priors(blank, fitter), NoFaceDetected);
}

TEST_CASE("precomputed provider round-trips sidecar files") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "sf_test_precomputed";
  fs::create_directories(dir);

  auto id = ToyIdentity::from_seed(21);
  auto motion = ToyMotion::from_seed(21);
  std::map<int64_t, LandmarkSet3D> recs;
  std::vector<Image> frames;
  for (int64_t f = 0; f < 3; ++f) {
    auto p = motion.at(f / 25.0);
    Image img = render_toyface(id, p, 48, 48);
    char name[32];
    std::snprintf(name, sizeof(name), "%06lld.png", static_cast<long long>(f));
    save_png(dir / name, img);
    recs[f] = toyface_landmarks(id, p);
    frames.push_back(load_png(dir / name));  // what the provider will see
  }
  save_landmark_file(dir / "landmarks.txt", recs);

  PrecomputedPriorProvider provider;
  provider.register_clip(dir, dir / "landmarks.txt");
  REQUIRE(provider.size() == 3);

  auto [mesh, lm] = detect_priors(frames[1], provider);
  for (int64_t i = 0; i < lm.points.size(); ++i) REQUIRE(std::abs(lm.points[i] - recs[1].points[i]) < 1e-6f);

  Image unknown = render_toyface(id, motion.at(99.0), 48, 48);
  REQUIRE_THROWS_AS(detect_priors(unknown, provider), NoFaceDetected);
  fs::remove_all(dir);
}

TEST_CASE("landmark file text format is exact") {
  std::map<int64_t, LandmarkSet3D> recs;
  LandmarkSet3D lm;
  lm.points = Tensor<float>({2, 3});
  lm.points[0] = 0.125f; lm.points[1] = -0.5f; lm.points[2] = 0.75f;
  lm.points[3] = 1.0f; lm.points[4] = 0.0f; lm.points[5] = -1.0f;
  recs[7] = lm;
  auto path = std::filesystem::temp_directory_path() / "sf_lm_roundtrip.txt";
  save_landmark_file(path, recs);
  auto back = load_landmark_file(path);
  REQUIRE(back.count(7) == 1);
  for (int64_t i = 0; i < 6; ++i) REQUIRE(back[7].points[i] == lm.points[i]);
  std::filesystem::remove(path);
}

TEST_CASE("fitting provider recovers pose on rendered frames") {
  auto id = ToyIdentity::from_seed(33);
  auto motion = ToyMotion::from_seed(33);
  ToyFittingProvider fitter(id);

  double worst_px = 0;
  for (int f = 0; f < 3; ++f) {
    auto p = motion.at(0.8 * f + 0.3);
    Image img = render_toyface(id, p, 64, 64);
    auto [mesh, lm] = detect_priors(img, fitter);
    auto truth = toyface_landmarks(id, p);
    double mean_px = 0;
    for (int64_t i = 0; i < 68; ++i) {
      double dx = (lm.points[i * 3 + 0] - truth.points[i * 3 + 0]) / 2.0 * 63.0;
      double dy = (lm.points[i * 3 + 1] - truth.points[i * 3 + 1]) / 2.0 * 63.0;
      mean_px += std::sqrt(dx * dx + dy * dy);
    }
    mean_px /= 68.0;
    worst_px = std::max(worst_px, mean_px);
  }
  // landmark recovery within ~1.5 px on clean renders
  REQUIRE(worst_px < 1.5);
}
