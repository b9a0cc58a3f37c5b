#include "acf/channels.hpp"
#include "acf/image_io.hpp"

#include <filesystem>
#include <set>

namespace acf {

void validate_image(const Image &image)
{
  if (image.width() < 1 || image.height() < 1)
    throw ValidationError("image must be at least 1x1");
  for (const auto &p : image.planes) {
    if (p.rows() != image.height() || p.cols() != image.width())
      throw ValidationError("image planes differ in size");
    if (!p.isFinite().all() || (p < 0.0f).any() || (p > 1.0f).any())
      throw ValidationError("image values must be finite and in [0,1]");
  }
}

Image crop(const Image &image, int x, int y, int w, int h)
{
  if (x < 0 || y < 0 || w < 1 || h < 1 || x + w > image.width() || y + h > image.height())
    throw ValidationError("crop rectangle outside image");
  Image out;
  for (int c = 0; c < 3; ++c)
    out.planes[c] = image.planes[c].block(y, x, h, w);
  return out;
}

std::string to_string(ColorSpace c)
{
  switch (c) {
  case ColorSpace::LUV: return "LUV";
  case ColorSpace::RGB: return "RGB";
  case ColorSpace::Gray: return "Gray";
  case ColorSpace::HSV: return "HSV";
  }
  return "?";
}

std::string to_string(GradientColorSpace c)
{
  switch (c) {
  case GradientColorSpace::RGB: return "RGB";
  case GradientColorSpace::LUV: return "LUV";
  case GradientColorSpace::Gray: return "Gray";
  }
  return "?";
}

std::string to_string(PoolingMethod p)
{
  switch (p) {
  case PoolingMethod::Average: return "Average";
  case PoolingMethod::Max: return "Max";
  case PoolingMethod::Stochastic: return "Stochastic";
  }
  return "?";
}

ColorSpace color_space_from_string(const std::string &s)
{
  if (s == "LUV") return ColorSpace::LUV;
  if (s == "RGB") return ColorSpace::RGB;
  if (s == "Gray") return ColorSpace::Gray;
  if (s == "HSV") return ColorSpace::HSV;
  throw ConfigError("unknown color space: " + s);
}

GradientColorSpace gradient_color_space_from_string(const std::string &s)
{
  if (s == "RGB") return GradientColorSpace::RGB;
  if (s == "LUV") return GradientColorSpace::LUV;
  if (s == "Gray") return GradientColorSpace::Gray;
  throw ConfigError("unknown gradient color space: " + s);
}

PoolingMethod pooling_from_string(const std::string &s)
{
  if (s == "Average") return PoolingMethod::Average;
  if (s == "Max") return PoolingMethod::Max;
  if (s == "Stochastic") return PoolingMethod::Stochastic;
  throw ConfigError("unknown pooling method: " + s);
}

void ChannelConfig::validate(int windowSize) const
{
  if (numOrientationBins < 1)
    throw ConfigError("numOrientationBins must be positive");
  if (preSmoothRadii.empty())
    throw ConfigError("preSmoothRadii must be non-empty");
  for (std::size_t i = 0; i < preSmoothRadii.size(); ++i) {
    if (preSmoothRadii[i] < 1)
      throw ConfigError("preSmoothRadii must be positive");
    if (i > 0 && preSmoothRadii[i] <= preSmoothRadii[i - 1])
      throw ConfigError("preSmoothRadii must be strictly increasing");
  }
  if (postSmoothRadius < 0)
    throw ConfigError("postSmoothRadius must be non-negative");
  if (shrink < 1)
    throw ConfigError("shrink must be positive");
  if (windowSize > 0 && windowSize % shrink != 0)
    throw ConfigError("shrink must divide the window size");
  if (pooling == PoolingMethod::Stochastic && !stochasticSeed)
    throw ConfigError("stochastic pooling requires an explicit seed");
  if (!(luv.lMax > luv.lMin && luv.uMax > luv.uMin && luv.vMax > luv.vMin))
    throw ConfigError("LUV normalization ranges must be non-empty");
}

std::string ChannelDescriptor::name() const
{
  std::string base;
  switch (kind) {
  case ChannelKind::Color: base = "color" + std::to_string(index); break;
  case ChannelKind::Magnitude: base = "magnitude"; break;
  case ChannelKind::Orientation: base = "orient" + std::to_string(index); break;
  }
  return base + "_r" + std::to_string(preSmoothRadius);
}

std::vector<ChannelDescriptor> channel_descriptors(const ChannelConfig &config)
{
  std::vector<ChannelDescriptor> out;
  for (int r : config.preSmoothRadii) {
    for (int c = 0; c < config.color_components(); ++c)
      out.push_back({ChannelKind::Color, c, r});
    out.push_back({ChannelKind::Magnitude, 0, r});
    for (int k = 0; k < config.numOrientationBins; ++k)
      out.push_back({ChannelKind::Orientation, k, r});
  }
  return out;
}

std::vector<double> binomial_kernel(int radius)
{
  const int n = 2 * radius;
  std::vector<double> k(static_cast<std::size_t>(n + 1));
  double c = 1.0;
  for (int i = 0; i <= n; ++i) {
    k[static_cast<std::size_t>(i)] = c;
    c = c * (n - i) / (i + 1);
  }
  const double scale = std::ldexp(1.0, -n);
  for (auto &v : k)
    v *= scale;
  return k;
}

std::vector<float> ChannelStack::flatten() const
{
  std::vector<float> out;
  out.reserve(feature_count());
  for (const auto &p : channels)
    out.insert(out.end(), p.data(), p.data() + p.size());
  return out;
}

namespace {

std::uint64_t channel_seed(std::uint64_t seed, std::size_t channel)
{
  // splitmix64 finalizer over (seed, channel)
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (channel + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

} // namespace

ChannelStack compute_channels(const Image &image, const ChannelConfig &config)
{
  config.validate();
  if (image.width() < config.shrink || image.height() < config.shrink)
    throw ValidationError("image smaller than the shrink factor");

  ChannelStack stack;
  stack.sourceConfig = config;
  stack.sourceWidth = image.width();
  stack.sourceHeight = image.height();
  stack.width = (image.width() + config.shrink - 1) / config.shrink;
  stack.height = (image.height() + config.shrink - 1) / config.shrink;
  stack.descriptors = channel_descriptors(config);
  stack.channels.reserve(stack.descriptors.size());

  const std::uint64_t seed = config.stochasticSeed.value_or(0);
  auto emit = [&](const Plane &full) {
    const auto idx = stack.channels.size();
    Plane pooled = pool(full, config.shrink, config.pooling, channel_seed(seed, idx));
    stack.channels.push_back(binomial_smooth(pooled, config.postSmoothRadius));
  };

  for (int radius : config.preSmoothRadii) {
    Image smoothed;
    for (int c = 0; c < 3; ++c)
      smoothed.planes[c] = binomial_smooth(image.planes[c], radius);

    std::array<Plane, 3> luv;
    const bool needLuv = config.colorSpace == ColorSpace::LUV || config.gradientColorSpace == GradientColorSpace::LUV;
    if (needLuv)
      luv = rgb_to_luv(smoothed, config.luv);

    switch (config.colorSpace) {
    case ColorSpace::LUV:
      for (const auto &p : luv)
        emit(p);
      break;
    case ColorSpace::RGB:
      for (const auto &p : smoothed.planes)
        emit(p);
      break;
    case ColorSpace::Gray:
      emit(rgb_to_gray(smoothed));
      break;
    case ColorSpace::HSV:
      for (const auto &p : rgb_to_hsv(smoothed))
        emit(p);
      break;
    }

    GradientField<float> grad;
    switch (config.gradientColorSpace) {
    case GradientColorSpace::RGB:
      grad = gradients(smoothed.planes);
      break;
    case GradientColorSpace::LUV:
      grad = gradients(luv);
      break;
    case GradientColorSpace::Gray: {
      std::array<Plane, 1> gray{rgb_to_gray(smoothed)};
      grad = gradients(gray);
      break;
    }
    }
    emit(grad.magnitude);
    for (const auto &bin : orientation_histograms(grad.magnitude, grad.orientation, config.numOrientationBins))
      emit(bin);
  }
  return stack;
}

ChannelStack flip_horizontal(const ChannelStack &stack)
{
  ChannelStack out = stack;
  const int nb = stack.sourceConfig.numOrientationBins;
  for (std::size_t c = 0; c < stack.channels.size(); ++c) {
    const auto &d = stack.descriptors[c];
    std::size_t target = c;
    if (d.kind == ChannelKind::Orientation)
      target = c - static_cast<std::size_t>(d.index) + static_cast<std::size_t>((nb - d.index) % nb);
    out.channels[target] = flip_horizontal(stack.channels[c]);
  }
  return out;
}

std::vector<std::string> dump_channels(const ChannelStack &stack, const std::string &directory,
                                       const std::string &prefix)
{
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec)
    throw IoError("cannot create directory " + directory + ": " + ec.message());

  std::vector<std::string> paths;
  for (std::size_t c = 0; c < stack.channels.size(); ++c) {
    const auto &p = stack.channels[c];
    const float lo = p.size() ? p.minCoeff() : 0.0f;
    const float hi = p.size() ? p.maxCoeff() : 0.0f;
    Plane scaled = hi > lo ? Plane((p - lo) / (hi - lo)) : Plane(Plane::Zero(p.rows(), p.cols()));
    char idx[16];
    std::snprintf(idx, sizeof idx, "%02zu", c);
    const auto path = (fs::path(directory) / (prefix + "ch" + idx + "_" + stack.descriptors[c].name() + ".pgm")).string();
    write_pgm(path, scaled);
    paths.push_back(path);
  }
  return paths;
}

} // namespace acf
