#include "acf/pyramid.hpp"

#include <cmath>

namespace acf {

void PyramidConfig::validate() const
{
  if (scalesPerOctave < 1)
    throw ConfigError("scalesPerOctave must be >= 1");
  if (!(maxUpscale >= 1.0))
    throw ConfigError("maxUpscale must be >= 1");
}

std::vector<double> scale_schedule(int imageWidth, int imageHeight, const PyramidConfig &config, int window)
{
  config.validate();
  std::vector<double> scales;
  const double minSide = std::min(imageWidth, imageHeight);
  for (int k = 0;; ++k) {
    const double s = config.maxUpscale * std::exp2(-static_cast<double>(k) / config.scalesPerOctave);
    if (minSide * s < window)
      break;
    scales.push_back(s);
  }
  return scales;
}

std::pair<int, int> level_dimensions(int imageWidth, int imageHeight, double scale, int shrink)
{
  auto snap = [&](int n) {
    const double cells = std::floor(n * scale / shrink + 0.5);
    return std::max(1, static_cast<int>(cells)) * shrink;
  };
  return {snap(imageWidth), snap(imageHeight)};
}

namespace {

struct Tap
{
  int a, b;
  float wa, wb;
};

std::vector<Tap> sampling_table(int src, int dst)
{
  std::vector<Tap> taps(static_cast<std::size_t>(dst));
  const double ratio = static_cast<double>(src) / dst;
  auto make = [&](double pos) {
    pos = std::clamp(pos, 0.0, static_cast<double>(src - 1));
    const int a = static_cast<int>(std::floor(pos));
    const int b = std::min(a + 1, src - 1);
    const float wb = static_cast<float>(pos - a);
    return Tap{a, b, 1.0f - wb, wb};
  };
  for (int x = 0; x < dst / 2; ++x) {
    const Tap t = make((x + 0.5) * ratio - 0.5);
    taps[static_cast<std::size_t>(x)] = t;
    taps[static_cast<std::size_t>(dst - 1 - x)] = Tap{src - 1 - t.b, src - 1 - t.a, t.wb, t.wa};
  }
  if (dst % 2)
    taps[static_cast<std::size_t>(dst / 2)] = make((src - 1) / 2.0);
  return taps;
}

} // namespace

Image resample_bilinear(const Image &image, int width, int height)
{
  if (width < 1 || height < 1)
    throw ValidationError("resample target must be at least 1x1");
  if (width == image.width() && height == image.height())
    return image;

  const auto tx = sampling_table(image.width(), width);
  const auto ty = sampling_table(image.height(), height);
  Image out(width, height);
  Plane tmp(image.height(), width);
  for (int c = 0; c < 3; ++c) {
    const auto &src = image[c];
    for (int y = 0; y < image.height(); ++y)
      for (int x = 0; x < width; ++x) {
        const auto &t = tx[static_cast<std::size_t>(x)];
        tmp(y, x) = src(y, t.a) * t.wa + src(y, t.b) * t.wb;
      }
    auto &dst = out[c];
    for (int y = 0; y < height; ++y) {
      const auto &t = ty[static_cast<std::size_t>(y)];
      dst.row(y) = tmp.row(t.a) * t.wa + tmp.row(t.b) * t.wb;
    }
    dst = dst.min(1.0f).max(0.0f);
  }
  return out;
}

std::vector<PyramidLevel> build_pyramid(const Image &image, const ChannelConfig &channelConfig,
                                        const PyramidConfig &pyramidConfig, int window)
{
  channelConfig.validate(window);
  std::vector<PyramidLevel> levels;
  for (double s : scale_schedule(image.width(), image.height(), pyramidConfig, window)) {
    const auto [w, h] = level_dimensions(image.width(), image.height(), s, channelConfig.shrink);
    PyramidLevel level;
    level.scale = s;
    level.imageWidth = w;
    level.imageHeight = h;
    level.scaleX = static_cast<double>(w) / image.width();
    level.scaleY = static_cast<double>(h) / image.height();
    level.stack = compute_channels(resample_bilinear(image, w, h), channelConfig);
    levels.push_back(std::move(level));
  }
  return levels;
}

} // namespace acf
