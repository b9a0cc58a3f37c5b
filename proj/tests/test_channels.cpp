#include "oracles.hpp"

#include "acf/channels.hpp"

#include <doctest.h>

#include <numbers>

using namespace acf;

TEST_CASE("luv matches the chromaticity reference")
{
  std::mt19937_64 rng(11);
  Image img = oracle::random_image(32, 24, rng);
  const float corners[][3] = {{0, 0, 0}, {1, 1, 1}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {0.5f, 0.5f, 0.5f}, {0.01f, 0.0f, 0.02f}};
  for (int i = 0; i < 7; ++i)
    for (int c = 0; c < 3; ++c)
      img[c](0, i) = corners[i][c];

  const auto f = rgb_to_luv(img);
  ImageT<double> imgd(img.width(), img.height());
  for (int c = 0; c < 3; ++c)
    imgd[c] = img[c].cast<double>();
  const auto d = rgb_to_luv(imgd);

  double worst = 0.0;
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      const auto ref = oracle::luv_reference_normalized(img[0](y, x), img[1](y, x), img[2](y, x));
      for (int c = 0; c < 3; ++c) {
        worst = std::max(worst, std::abs(f[c](y, x) - ref[c]));
        worst = std::max(worst, std::abs(d[c](y, x) - ref[c]));
      }
    }
  CHECK(worst <= 1e-5);
}

TEST_CASE("luv of gray has neutral chroma")
{
  Image img(4, 4);
  for (auto &p : img.planes)
    p.setConstant(0.4f);
  const auto luv = rgb_to_luv(img);
  const LuvNormalization n;
  CHECK(luv[1](0, 0) == doctest::Approx(-n.uMin / (n.uMax - n.uMin)).epsilon(1e-5));
  CHECK(luv[2](0, 0) == doctest::Approx(-n.vMin / (n.vMax - n.vMin)).epsilon(1e-5));
}

TEST_CASE("binomial kernel rows")
{
  for (int r = 0; r <= 4; ++r) {
    const auto k = binomial_kernel(r);
    const auto ref = oracle::pascal_kernel(r);
    REQUIRE(k.size() == ref.size());
    for (std::size_t i = 0; i < k.size(); ++i)
      CHECK(k[i] == doctest::Approx(ref[i]).epsilon(1e-15));
  }
}

TEST_CASE("binomial smoothing matches direct convolution")
{
  std::mt19937_64 rng(3);
  for (int r : {1, 2, 3}) {
    const Plane p = oracle::random_image(23, 17, rng)[0];
    const auto fast = binomial_smooth(p, r);
    const auto ref = oracle::convolve_direct(p, r);
    CHECK((fast.cast<double>() - ref).abs().maxCoeff() <= 1e-6);
  }
  const Plane p = oracle::random_image(9, 9, rng)[1];
  CHECK((binomial_smooth(p, 0) == p).all());
  CHECK_THROWS_AS(binomial_smooth(p, -1), ConfigError);
}

TEST_CASE("smoothing preserves constants and impulse mass")
{
  Plane c = Plane::Constant(12, 10, 0.3f);
  CHECK((binomial_smooth(c, 2) - 0.3f).abs().maxCoeff() < 1e-7f);
  Plane imp = Plane::Zero(15, 15);
  imp(7, 7) = 1.0f;
  const auto s = binomial_smooth(imp, 2);
  CHECK(s.sum() == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(s(7, 7) == doctest::Approx(36.0 / 256.0).epsilon(1e-6));
}

TEST_CASE("gradient of a horizontal ramp")
{
  const int w = 20;
  Image img(w, 6);
  for (int c = 0; c < 3; ++c)
    for (int x = 0; x < w; ++x)
      img[c].col(x).setConstant(c == 0 ? static_cast<float>(x) / (w - 1) : 0.5f);
  const auto g = gradients(img);
  CHECK(g.magnitude(3, 5) == doctest::Approx(1.0 / (w - 1)).epsilon(1e-6));
  CHECK(g.magnitude(3, 0) == doctest::Approx(0.5 / (w - 1)).epsilon(1e-6));
  CHECK(g.orientation(3, 5) == doctest::Approx(0.0));

  Image flat(8, 8);
  for (auto &p : flat.planes)
    p.setConstant(0.7f);
  CHECK(gradients(flat).magnitude.maxCoeff() == 0.0f);
}

TEST_CASE("orientation bins conserve magnitude")
{
  std::mt19937_64 rng(5);
  const Image img = oracle::random_image(40, 30, rng);
  const auto g = gradients(img);
  for (int nb : {4, 6, 9}) {
    const auto bins = orientation_histograms(g.magnitude, g.orientation, nb);
    Plane sum = Plane::Zero(g.magnitude.rows(), g.magnitude.cols());
    for (const auto &b : bins) {
      CHECK(b.minCoeff() >= 0.0f);
      sum += b;
    }
    CHECK((sum - g.magnitude).abs().maxCoeff() <= 1e-6f);
  }
}

TEST_CASE("orientation at a bin center fills one bin")
{
  const int nb = 6;
  for (int k = 0; k < nb; ++k) {
    Plane mag = Plane::Constant(1, 1, 2.0f);
    Plane ori = Plane::Constant(1, 1, static_cast<float>(k * std::numbers::pi / nb));
    const auto bins = orientation_histograms(mag, ori, nb);
    for (int j = 0; j < nb; ++j)
      CHECK(bins[j](0, 0) == doctest::Approx(j == k ? 2.0 : 0.0).epsilon(1e-5));
  }
  Plane mag = Plane::Constant(1, 1, 1.0f);
  Plane ori = Plane::Constant(1, 1, static_cast<float>(0.5 * std::numbers::pi / nb));
  const auto bins = orientation_histograms(mag, ori, nb);
  CHECK(bins[0](0, 0) == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(bins[1](0, 0) == doctest::Approx(0.5).epsilon(1e-5));
}

TEST_CASE("pooling matches per-block oracles exactly")
{
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> q(0, 64);
  for (auto [rows, cols] : {std::pair{16, 16}, std::pair{18, 13}, std::pair{7, 5}}) {
    Plane p(rows, cols);
    for (Eigen::Index i = 0; i < p.size(); ++i)
      p.data()[i] = static_cast<float>(q(rng)) / 64.0f;
    const auto avg = pool(p, 4, PoolingMethod::Average);
    const auto mx = pool(p, 4, PoolingMethod::Max);
    const auto ma = oracle::block_mean(p, 4);
    const auto mm = oracle::block_max(p, 4);
    REQUIRE(avg.rows() == ma.rows());
    REQUIRE(avg.cols() == ma.cols());
    for (Eigen::Index y = 0; y < ma.rows(); ++y)
      for (Eigen::Index x = 0; x < ma.cols(); ++x) {
        CHECK(avg(y, x) == static_cast<float>(ma(y, x)));
        CHECK(mx(y, x) == static_cast<float>(mm(y, x)));
      }
  }
}

TEST_CASE("stochastic pooling picks a block member")
{
  std::mt19937_64 rng(2);
  const Plane p = oracle::random_image(12, 8, rng)[0];
  const auto s = pool(p, 4, PoolingMethod::Stochastic, 17);
  for (Eigen::Index by = 0; by < s.rows(); ++by)
    for (Eigen::Index bx = 0; bx < s.cols(); ++bx)
      CHECK((p.block(by * 4, bx * 4, 4, 4) == s(by, bx)).any());
  CHECK((pool(p, 4, PoolingMethod::Stochastic, 17) == s).all());

  Plane one = Plane::Zero(4, 4);
  one(2, 3) = 0.8f;
  CHECK(pool(one, 4, PoolingMethod::Stochastic, 1)(0, 0) == 0.8f);
}

TEST_CASE("feature pool sizes")
{
  ChannelConfig c;
  Image img(80, 80);
  const auto s = compute_channels(img, c);
  CHECK(s.channel_count() == 10);
  CHECK(s.width == 20);
  CHECK(s.height == 20);
  CHECK(s.feature_count() == 4000);

  c.preSmoothRadii = {1, 2};
  CHECK(compute_channels(img, c).feature_count() == 8000);

  c.colorSpace = ColorSpace::Gray;
  c.preSmoothRadii = {1};
  CHECK(compute_channels(img, c).feature_count() == 8u * 400u);
}

TEST_CASE("channel descriptors follow the documented layout")
{
  ChannelConfig c;
  c.preSmoothRadii = {1, 2};
  const auto d = channel_descriptors(c);
  REQUIRE(d.size() == 20);
  CHECK(d[0].kind == ChannelKind::Color);
  CHECK(d[3].kind == ChannelKind::Magnitude);
  CHECK(d[4].kind == ChannelKind::Orientation);
  CHECK(d[9].index == 5);
  CHECK(d[10].preSmoothRadius == 2);
}

TEST_CASE("invalid channel configs are rejected")
{
  ChannelConfig c;
  c.shrink = 3;
  CHECK_THROWS_AS(c.validate(80), ConfigError);
  c = {};
  c.preSmoothRadii.clear();
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.pooling = PoolingMethod::Stochastic;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c.stochasticSeed = 4;
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("channels commute with horizontal flips")
{
  std::mt19937_64 rng(21);
  for (auto radii : {std::vector<int>{1}, std::vector<int>{1, 2}}) {
    ChannelConfig c;
    c.preSmoothRadii = radii;
    const Image img = oracle::textured_image(64, 48, rng);
    const auto a = flip_horizontal(compute_channels(img, c));
    const auto b = compute_channels(flip_horizontal(img), c);
    REQUIRE(a.channel_count() == b.channel_count());
    for (int ch = 0; ch < a.channel_count(); ++ch)
      CHECK((a.channels[ch] == b.channels[ch]).all());
  }
}

TEST_CASE("black image gives zero gradients")
{
  const auto s = compute_channels(Image(40, 40), ChannelConfig{});
  for (int ch = 3; ch < 10; ++ch)
    CHECK(s.channels[ch].maxCoeff() == 0.0f);
  CHECK(s.channels[0].maxCoeff() == 0.0f);
}
