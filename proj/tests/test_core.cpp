#include <catch2/catch_amalgamated.hpp>

#include "fd_check.hpp"
#include "superface/conv.hpp"
#include "superface/detmath.hpp"
#include "superface/nn.hpp"
#include "superface/rng.hpp"
#include "superface/sampling.hpp"

using namespace sf;
using sft::fd_check;
using sft::fd_ok;

namespace {

Tensor<double> randn(Shape s, RngStream& rng, double scale = 1.0) {
  Tensor<double> t(std::move(s));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = rng.normal() * scale;
  return t;
}

}  // namespace

TEST_CASE("detmath matches libm to high precision") {
  RngStream rng(7);
  for (int i = 0; i < 2000; ++i) {
    double x = rng.uniform(-30.0, 30.0);
    REQUIRE(std::abs(detmath::dexp(x) - std::exp(x)) <= 1e-13 * std::exp(x));
    double p = rng.uniform(1e-6, 1e6);
    REQUIRE(std::abs(detmath::dlog(p) - std::log(p)) < 1e-12 * std::max(1.0, std::abs(std::log(p))));
    double a = rng.uniform(-100.0, 100.0);
    REQUIRE(std::abs(detmath::dsin(a) - std::sin(a)) < 1e-12);
    REQUIRE(std::abs(detmath::dcos(a) - std::cos(a)) < 1e-12);
  }
}

TEST_CASE("rng streams are reproducible and well-ranged") {
  auto a = RngStream::derive(42, {1, 2});
  auto b = RngStream::derive(42, {1, 2});
  for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());

  auto c = RngStream::derive(42, {1, 3});
  REQUIRE(c.next_u64() != RngStream::derive(42, {1, 2}).next_u64());

  RngStream u(9);
  double mn = 1.0, mx = 0.0, acc = 0.0;
  for (int i = 0; i < 10000; ++i) {
    double v = u.uniform();
    mn = std::min(mn, v);
    mx = std::max(mx, v);
    acc += v;
  }
  REQUIRE(mn >= 0.0);
  REQUIRE(mx < 1.0);
  REQUIRE(std::abs(acc / 10000.0 - 0.5) < 0.02);

  RngStream g(11);
  double m = 0, m2 = 0;
  for (int i = 0; i < 20000; ++i) {
    double v = g.normal();
    m += v;
    m2 += v * v;
  }
  m /= 20000;
  m2 /= 20000;
  REQUIRE(std::abs(m) < 0.03);
  REQUIRE(std::abs(m2 - 1.0) < 0.05);
}

TEST_CASE("elementwise and reduction grads match finite differences") {
  RngStream rng(1);
  auto x = param<double>(randn({2, 3, 4}, rng));
  auto y = param<double>(randn({2, 3, 4}, rng));

  auto rep = fd_check({x, y}, [&] { return mean_all(mul(sigmoid(x), tanh_op(y))); });
  CHECK(fd_ok(rep));

  rep = fd_check({x, y}, [&] { return mean_all(abs_op(sub(x, y))); });
  CHECK(fd_ok(rep));

  rep = fd_check({x}, [&] { return mean_all(square(leaky_relu(x, 0.2))); });
  CHECK(fd_ok(rep));

  rep = fd_check({x}, [&] { return sum_all(exp_op(mul_scalar(x, 0.3))); });
  CHECK(fd_ok(rep));

  rep = fd_check({x, y}, [&] { return mean_all(divide(x, add_scalar(square(y), 1.0))); });
  CHECK(fd_ok(rep));

  rep = fd_check({x}, [&] { return mean_all(sqrt_op(add_scalar(square(x), 0.5))); });
  CHECK(fd_ok(rep));
}

TEST_CASE("axis ops grads") {
  RngStream rng(2);
  auto x = param<double>(randn({2, 4, 3}, rng));
  auto rep = fd_check({x}, [&] { return mean_all(square(sum_axis(x, 1))); });
  CHECK(fd_ok(rep));

  auto s = param<double>(randn({2, 1, 3}, rng));
  rep = fd_check({x, s}, [&] { return mean_all(mul(x, broadcast_axis(s, 1, 4))); });
  CHECK(fd_ok(rep));

  rep = fd_check({x}, [&] { return mean_all(square(mean_trailing(x, 2))); });
  CHECK(fd_ok(rep));

  auto m = param<double>(randn({2, 1, 1}, rng));
  rep = fd_check({x, m}, [&] { return mean_all(mul(x, broadcast_trailing(m, x->val.shape()))); });
  CHECK(fd_ok(rep));

  rep = fd_check({x}, [&] { return mean_all(square(narrow(x, 1, 1, 2))); });
  CHECK(fd_ok(rep));

  auto y = param<double>(randn({2, 2, 3}, rng));
  rep = fd_check({x, y}, [&] { return mean_all(square(concat<double>({x, y}, 1))); });
  CHECK(fd_ok(rep));

  rep = fd_check({x}, [&] { return mean_all(square(softmax(x, 1))); });
  CHECK(fd_ok(rep));

  auto a3 = param<double>(randn({4, 3}, rng));
  auto b3 = param<double>(randn({4, 3}, rng));
  rep = fd_check({a3, b3}, [&] { return mean_all(square(cross3(a3, b3))); });
  CHECK(fd_ok(rep));
}

TEST_CASE("softmax sums to one and matches exp normalization") {
  RngStream rng(3);
  auto x = constant<double>(randn({2, 5, 3}, rng));
  auto y = softmax(x, 1);
  for (int64_t o = 0; o < 2; ++o)
    for (int64_t i = 0; i < 3; ++i) {
      double s = 0;
      for (int64_t l = 0; l < 5; ++l) s += y->val[(o * 5 + l) * 3 + i];
      REQUIRE(std::abs(s - 1.0) < 1e-12);
    }
}

TEST_CASE("conv2d matches a brute-force oracle") {
  RngStream rng(4);
  auto x = constant<double>(randn({2, 3, 6, 7}, rng));
  auto w = constant<double>(randn({4, 3, 3, 3}, rng));
  auto b = constant<double>(randn({4}, rng));
  int64_t stride = 2, pad = 1;
  auto out = conv2d(x, w, b, stride, pad);

  int64_t OH = (6 + 2 * pad - 3) / stride + 1, OW = (7 + 2 * pad - 3) / stride + 1;
  REQUIRE(out->val.shape() == Shape{2, 4, OH, OW});
  for (int64_t n = 0; n < 2; ++n)
    for (int64_t co = 0; co < 4; ++co)
      for (int64_t oy = 0; oy < OH; ++oy)
        for (int64_t ox = 0; ox < OW; ++ox) {
          double acc = b->val[co];
          for (int64_t ci = 0; ci < 3; ++ci)
            for (int64_t ky = 0; ky < 3; ++ky)
              for (int64_t kx = 0; kx < 3; ++kx) {
                int64_t iy = oy * stride - pad + ky, ix = ox * stride - pad + kx;
                if (iy < 0 || iy >= 6 || ix < 0 || ix >= 7) continue;
                acc += x->val.at(n, ci, iy, ix) * w->val.at(co, ci, ky, kx);
              }
          REQUIRE(std::abs(out->val.at(n, co, oy, ox) - acc) < 1e-10);
        }
}

TEST_CASE("conv2d/conv3d/linear grads match finite differences") {
  RngStream rng(5);
  auto x = param<double>(randn({2, 2, 5, 5}, rng));
  auto w = param<double>(randn({3, 2, 3, 3}, rng));
  auto b = param<double>(randn({3}, rng));
  auto rep = fd_check({x, w, b}, [&] { return mean_all(square(conv2d(x, w, b, 2, 1))); });
  CHECK(fd_ok(rep));

  auto x3 = param<double>(randn({1, 2, 4, 4, 4}, rng));
  auto w3 = param<double>(randn({2, 2, 3, 3, 3}, rng));
  auto b3 = param<double>(randn({2}, rng));
  rep = fd_check({x3, w3, b3}, [&] { return mean_all(square(conv3d(x3, w3, b3, 1, 1))); });
  CHECK(fd_ok(rep));

  auto xl = param<double>(randn({3, 4}, rng));
  auto wl = param<double>(randn({5, 4}, rng));
  auto bl = param<double>(randn({5}, rng));
  rep = fd_check({xl, wl, bl}, [&] { return mean_all(square(linear(xl, wl, bl))); });
  CHECK(fd_ok(rep));
}

TEST_CASE("conv3d matches a brute-force oracle") {
  RngStream rng(6);
  auto x = constant<double>(randn({1, 2, 3, 4, 5}, rng));
  auto w = constant<double>(randn({3, 2, 3, 3, 3}, rng));
  auto b = constant<double>(randn({3}, rng));
  auto out = conv3d(x, w, b, 1, 1);
  REQUIRE(out->val.shape() == Shape{1, 3, 3, 4, 5});
  for (int64_t co = 0; co < 3; ++co)
    for (int64_t oz = 0; oz < 3; ++oz)
      for (int64_t oy = 0; oy < 4; ++oy)
        for (int64_t ox = 0; ox < 5; ++ox) {
          double acc = b->val[co];
          for (int64_t ci = 0; ci < 2; ++ci)
            for (int64_t kz = 0; kz < 3; ++kz)
              for (int64_t ky = 0; ky < 3; ++ky)
                for (int64_t kx = 0; kx < 3; ++kx) {
                  int64_t iz = oz - 1 + kz, iy = oy - 1 + ky, ix = ox - 1 + kx;
                  if (iz < 0 || iz >= 3 || iy < 0 || iy >= 4 || ix < 0 || ix >= 5) continue;
                  acc += x->val.at(int64_t(0), ci, iz, iy, ix) * w->val.at(co, ci, kz, ky, kx);
                }
          REQUIRE(std::abs(out->val.at(int64_t(0), co, oz, oy, ox) - acc) < 1e-10);
        }
}

TEST_CASE("pooling and upsampling grads") {
  RngStream rng(7);
  auto x = param<double>(randn({2, 3, 4, 4}, rng));
  auto rep = fd_check({x}, [&] { return mean_all(square(avg_pool2d(x, 2))); });
  CHECK(fd_ok(rep));
  rep = fd_check({x}, [&] { return mean_all(square(upsample_nearest2d(x, 2))); });
  CHECK(fd_ok(rep));
}

TEST_CASE("grid_sample_2d identity grid reproduces input") {
  RngStream rng(8);
  auto x = constant<double>(randn({2, 3, 5, 6}, rng));
  auto g = constant<double>(tile_batch(identity_grid_2d<double>(5, 6), 2));
  auto y = grid_sample_2d(x, g);
  for (int64_t i = 0; i < x->val.size(); ++i) REQUIRE(std::abs(y->val[i] - x->val[i]) < 1e-12);
}

TEST_CASE("grid_sample_3d identity grid reproduces input") {
  RngStream rng(9);
  auto x = constant<double>(randn({1, 2, 4, 5, 6}, rng));
  auto g = constant<double>(identity_grid_3d<double>(4, 5, 6));
  auto y = grid_sample_3d(x, g);
  for (int64_t i = 0; i < x->val.size(); ++i) REQUIRE(std::abs(y->val[i] - x->val[i]) < 1e-12);
}

TEST_CASE("grid sample grads (interior samples)") {
  RngStream rng(10);
  auto x = param<double>(randn({1, 2, 5, 5}, rng));
  // keep grid strictly interior and away from integer lattice points for a
  // clean finite-difference comparison
  Tensor<double> gt({1, 2, 3, 3});
  for (int64_t i = 0; i < gt.size(); ++i) gt[i] = rng.uniform(-0.55, 0.55) + 0.013;
  auto g = param<double>(gt);
  auto rep = fd_check({x, g}, [&] { return mean_all(square(grid_sample_2d(x, g))); });
  CHECK(fd_ok(rep));

  auto x3 = param<double>(randn({1, 2, 4, 4, 4}, rng));
  Tensor<double> gt3({1, 3, 2, 2, 2});
  for (int64_t i = 0; i < gt3.size(); ++i) gt3[i] = rng.uniform(-0.5, 0.5) + 0.017;
  auto g3 = param<double>(gt3);
  rep = fd_check({x3, g3}, [&] { return mean_all(square(grid_sample_3d(x3, g3))); });
  CHECK(fd_ok(rep));
}

TEST_CASE("keypoint heatmap grads and peak location") {
  RngStream rng(11);
  Tensor<double> kpt({1, 2, 3});
  kpt[0] = 0.1; kpt[1] = -0.2; kpt[2] = 0.3;
  kpt[3] = -0.4; kpt[4] = 0.25; kpt[5] = -0.1;
  auto kp = param<double>(kpt);
  auto rep = fd_check({kp}, [&] { return mean_all(square(kp_to_heatmap_3d(kp, 5, 5, 5, 0.4))); });
  CHECK(fd_ok(rep));

  Tensor<double> kp2t({1, 1, 2});
  kp2t[0] = 0.0; kp2t[1] = 0.0;
  auto kp2 = param<double>(kp2t);
  auto hm = kp_to_heatmap_2d(kp2, 9, 9, 0.3);
  REQUIRE(std::abs(hm->val.at(int64_t(0), int64_t(0), int64_t(4), int64_t(4)) - 1.0) < 1e-12);
  rep = fd_check({kp2}, [&] { return mean_all(square(kp_to_heatmap_2d(kp2, 7, 7, 0.35))); });
  CHECK(fd_ok(rep));
}

TEST_CASE("weighted_delta_field matches brute force and grads") {
  RngStream rng(12);
  auto w = param<double>(randn({2, 4, 3, 3}, rng));
  auto d = param<double>(randn({2, 3, 2}, rng));
  auto out = weighted_delta_field(softmax(w, 1), d);
  REQUIRE(out->val.shape() == Shape{2, 2, 3, 3});

  auto sm = softmax(w, 1);
  for (int64_t n = 0; n < 2; ++n)
    for (int64_t a = 0; a < 2; ++a)
      for (int64_t v = 0; v < 9; ++v) {
        double acc = 0;
        for (int64_t j = 1; j < 4; ++j) acc += sm->val[(n * 4 + j) * 9 + v] * d->val[(n * 3 + j - 1) * 2 + a];
        REQUIRE(std::abs(out->val[(n * 2 + a) * 9 + v] - acc) < 1e-12);
      }

  auto rep = fd_check({w, d}, [&] { return mean_all(square(weighted_delta_field(softmax(w, 1), d))); });
  CHECK(fd_ok(rep));
}

TEST_CASE("instance norm normalizes and backprops") {
  RngStream rng(13);
  ParamStore<double> ps;
  InstanceNorm<double> norm(ps, "n", 3);
  auto x = param<double>(randn({2, 3, 4, 4}, rng, 3.0));
  auto y = norm(x);
  // per (n,c): mean ~0, var ~1
  for (int64_t n = 0; n < 2; ++n)
    for (int64_t c = 0; c < 3; ++c) {
      double m = 0, v = 0;
      for (int64_t i = 0; i < 16; ++i) m += y->val[(n * 3 + c) * 16 + i];
      m /= 16;
      for (int64_t i = 0; i < 16; ++i) {
        double dv = y->val[(n * 3 + c) * 16 + i] - m;
        v += dv * dv;
      }
      v /= 16;
      REQUIRE(std::abs(m) < 1e-10);
      REQUIRE(std::abs(v - 1.0) < 1e-3);
    }
  auto rep = fd_check({x, norm.gamma, norm.beta}, [&] { return mean_all(square(norm(x))); });
  CHECK(fd_ok(rep));
}

TEST_CASE("graph engine: reuse, accumulation, detach, no-grad") {
  auto x = param<double>(Tensor<double>::scalar(3.0));
  auto y = add(mul(x, x), x);  // x^2 + x, same leaf used twice
  backward(y);
  REQUIRE(std::abs(x->grad[0] - 7.0) < 1e-12);

  x->grad.fill(0.0);
  auto z = mul(detach(x), x);  // d/dx = detached value
  backward(z);
  REQUIRE(std::abs(x->grad[0] - 3.0) < 1e-12);

  {
    NoGrad ng;
    auto q = mul(x, x);
    REQUIRE_FALSE(q->requires_grad);
  }

  auto c = constant<double>(Tensor<double>::scalar(5.0));
  auto s = mul(c, c);
  REQUIRE_FALSE(s->requires_grad);
}

TEST_CASE("adam converges on a quadratic") {
  ParamStore<double> ps;
  auto x = ps.add("x", Tensor<double>::full({4}, 5.0));
  Adam<double> opt(0.1, 0.9, 0.999);
  for (int i = 0; i < 300; ++i) {
    ps.zero_grad();
    auto loss = mean_all(square(x));
    backward(loss);
    opt.step(ps);
  }
  for (int64_t i = 0; i < 4; ++i) REQUIRE(std::abs(x->val[i]) < 1e-2);
}

TEST_CASE("weighted_sum combines scalar terms") {
  auto a = param<double>(Tensor<double>::scalar(2.0));
  auto b = param<double>(Tensor<double>::scalar(3.0));
  auto t = weighted_sum<double>({a, b}, {10.0, 100.0});
  REQUIRE(std::abs(t->val[0] - 320.0) < 1e-12);
  backward(t);
  REQUIRE(std::abs(a->grad[0] - 10.0) < 1e-12);
  REQUIRE(std::abs(b->grad[0] - 100.0) < 1e-12);
}
