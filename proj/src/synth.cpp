#include "acf/synth.hpp"

#include "acf/image_io.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace acf {

namespace fs = std::filesystem;

void SynthConfig::validate() const
{
  if (imageCount < 0)
    throw ConfigError("imageCount must be non-negative");
  if (imageWidth < 1 || imageHeight < 1)
    throw ConfigError("image size must be positive");
  if (minTargets < 0 || maxTargets < minTargets)
    throw ConfigError("targets-per-image range is invalid");
  if (minSize < 1 || maxSize < minSize)
    throw ConfigError("target size range is invalid");
  if (maxTargets > 0 && (maxSize > imageWidth || maxSize > imageHeight))
    throw ConfigError("target size exceeds the image size");
  if (yawLevels < 1)
    throw ConfigError("yawLevels must be >= 1");
  if (!(clutterDensity >= 0.0) || !(noiseAmplitude >= 0.0))
    throw ConfigError("clutter density and noise amplitude must be non-negative");
}

std::uint64_t SynthRng::next()
{
  std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double SynthRng::uniform()
{
  return static_cast<double>(next() >> 11) * 0x1.0p-53;
}

int SynthRng::integer(int lo, int hi)
{
  const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
  return lo + static_cast<int>(next() % span);
}

TargetParams random_target_params(SynthRng &rng)
{
  TargetParams p;
  const double tone = rng.uniform(0.5, 0.92);
  p.skin[0] = static_cast<float>(tone + rng.uniform(-0.04, 0.04));
  p.skin[1] = static_cast<float>(tone * 0.78 + rng.uniform(-0.04, 0.04));
  p.skin[2] = static_cast<float>(tone * 0.62 + rng.uniform(-0.04, 0.04));
  const double h = rng.uniform(0.04, 0.3);
  p.hair[0] = static_cast<float>(h);
  p.hair[1] = static_cast<float>(h * 0.85);
  p.hair[2] = static_cast<float>(h * 0.7);
  const double e = rng.uniform(0.03, 0.15);
  for (auto &c : p.eyes)
    c = static_cast<float>(e);
  p.mouth[0] = static_cast<float>(tone * rng.uniform(0.6, 0.75));
  p.mouth[1] = static_cast<float>(tone * rng.uniform(0.2, 0.3));
  p.mouth[2] = static_cast<float>(tone * rng.uniform(0.25, 0.35));
  p.jitterX = rng.uniform(-0.02, 0.02);
  p.jitterY = rng.uniform(-0.02, 0.02);
  p.headAspect = rng.uniform(0.92, 1.08);
  p.eyeSpacing = rng.uniform(0.9, 1.1);
  p.contrast = rng.uniform(0.85, 1.15);
  return p;
}

namespace {

bool in_ellipse(double u, double v, double cx, double cy, double rx, double ry)
{
  const double a = (u - cx) / rx, b = (v - cy) / ry;
  return a * a + b * b <= 1.0;
}

/// Color of the target at normalized (u, v) for yaw y in [0, 1] (facing +x).
bool shade(double u, double v, double y, const TargetParams &p, float rgb[3])
{
  const double cx = 0.5 + p.jitterX + 0.03 * y, cy = 0.52 + p.jitterY;
  const double rx = 0.34 * p.headAspect * (1.0 - 0.08 * y), ry = 0.43;
  if (!in_ellipse(u, v, cx, cy, rx, ry))
    return false;

  const float *c = p.skin;
  float tmp[3];
  const double fc = cx + 0.45 * rx * y;
  const double d = 0.36 * rx * p.eyeSpacing;
  const double eyeY = cy - 0.1;
  if (v < cy - 0.55 * ry || u < cx - rx * (1.0 - 0.7 * y)) {
    c = p.hair;
  } else if (in_ellipse(u, v, fc - d * (1.0 - 0.5 * y), eyeY, 0.055 * (1.0 - 0.6 * y) + 1e-3, 0.035) ||
             in_ellipse(u, v, fc + d * (1.0 - 0.2 * y), eyeY, 0.055, 0.035)) {
    c = p.eyes;
  } else if (in_ellipse(u, v, fc + 0.05 * rx * y, cy + 0.22, 0.13 * (1.0 - 0.35 * y), 0.028)) {
    c = p.mouth;
  } else if (in_ellipse(u, v, fc + 0.12 * rx * y, cy + 0.07, 0.035 + 0.05 * y, 0.07)) {
    for (int k = 0; k < 3; ++k)
      tmp[k] = p.skin[k] * 0.75f;
    c = tmp;
  }
  for (int k = 0; k < 3; ++k)
    rgb[k] = static_cast<float>(std::clamp(0.5 + (c[k] - 0.5) * p.contrast, 0.0, 1.0));
  return true;
}

Image render_canonical(int size, double yaw, const TargetParams &params, Plane &alpha)
{
  constexpr int ss = 3;
  Image out(size, size);
  alpha = Plane::Zero(size, size);
  for (int py = 0; py < size; ++py)
    for (int px = 0; px < size; ++px) {
      float acc[3] = {0, 0, 0};
      int hits = 0;
      for (int sy = 0; sy < ss; ++sy)
        for (int sx = 0; sx < ss; ++sx) {
          const double u = (px + (sx + 0.5) / ss) / size, v = (py + (sy + 0.5) / ss) / size;
          float rgb[3];
          if (shade(u, v, yaw, params, rgb)) {
            ++hits;
            for (int k = 0; k < 3; ++k)
              acc[k] += rgb[k];
          }
        }
      if (hits > 0)
        for (int k = 0; k < 3; ++k)
          out.planes[k](py, px) = acc[k] / static_cast<float>(hits);
      alpha(py, px) = static_cast<float>(hits) / (ss * ss);
    }
  return out;
}

void fill_background(Image &img, SynthRng &rng)
{
  const int w = img.width(), h = img.height();
  double base[3];
  for (auto &b : base)
    b = rng.uniform(0.2, 0.8);
  struct Wave
  {
    double fx, fy, phase, amp[3];
  };
  Wave waves[3];
  for (auto &wv : waves) {
    const double angle = rng.uniform(0.0, 3.141592653589793);
    const double freq = rng.uniform(0.01, 0.08);
    wv.fx = freq * std::cos(angle);
    wv.fy = freq * std::sin(angle);
    wv.phase = rng.uniform(0.0, 6.283185307179586);
    for (auto &a : wv.amp)
      a = rng.uniform(-0.1, 0.1);
  }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int k = 0; k < 3; ++k) {
        double v = base[k];
        for (const auto &wv : waves)
          v += wv.amp[k] * std::sin(wv.fx * x + wv.fy * y + wv.phase);
        img.planes[k](y, x) = static_cast<float>(v);
      }
}

/// Blends a shape given by an inside-test over its bounding box, 2x2 supersampled.
template <typename Inside>
void draw_shape(Image &img, double x0, double y0, double x1, double y1, const double color[3], Inside &&inside)
{
  const int xa = std::max(0, static_cast<int>(std::floor(x0))), xb = std::min(img.width() - 1, static_cast<int>(x1));
  const int ya = std::max(0, static_cast<int>(std::floor(y0))), yb = std::min(img.height() - 1, static_cast<int>(y1));
  for (int y = ya; y <= yb; ++y)
    for (int x = xa; x <= xb; ++x) {
      int hits = 0;
      for (int s = 0; s < 4; ++s)
        hits += inside(x + 0.25 + 0.5 * (s & 1), y + 0.25 + 0.5 * (s >> 1)) ? 1 : 0;
      if (hits == 0)
        continue;
      const float a = hits / 4.0f;
      for (int k = 0; k < 3; ++k)
        img.planes[k](y, x) = (1 - a) * img.planes[k](y, x) + a * static_cast<float>(color[k]);
    }
}

void add_clutter(Image &img, SynthRng &rng, double density)
{
  const int w = img.width(), h = img.height();
  const int count = static_cast<int>(std::lround(density * w * h / 10000.0));
  for (int i = 0; i < count; ++i) {
    const int kind = rng.integer(0, 3);
    const double size = rng.uniform(8.0, 90.0);
    const double cx = rng.uniform(0.0, w), cy = rng.uniform(0.0, h);
    double color[3];
    if (rng.uniform() < 0.3) {
      const double tone = rng.uniform(0.5, 0.92);
      color[0] = tone;
      color[1] = tone * 0.78;
      color[2] = tone * 0.62;
    } else {
      for (auto &c : color)
        c = rng.uniform(0.0, 1.0);
    }
    const double rx = size / 2, ry = size / 2 * rng.uniform(0.4, 1.4);
    switch (kind) {
    case 0: // ellipse
      draw_shape(img, cx - rx, cy - ry, cx + rx, cy + ry, color,
                 [&](double x, double y) { return in_ellipse(x, y, cx, cy, rx, ry); });
      break;
    case 1: // rectangle
      draw_shape(img, cx - rx, cy - ry, cx + rx, cy + ry, color,
                 [&](double x, double y) { return std::abs(x - cx) <= rx && std::abs(y - cy) <= ry; });
      break;
    case 2: { // thick line segment
      const double angle = rng.uniform(0.0, 3.141592653589793);
      const double dx = std::cos(angle) * rx, dy = std::sin(angle) * rx;
      const double thick = rng.uniform(1.5, 5.0);
      draw_shape(img, cx - rx - thick, cy - rx - thick, cx + rx + thick, cy + rx + thick, color,
                 [&](double x, double y) {
                   const double t = std::clamp(((x - cx) * dx + (y - cy) * dy) / (rx * rx), -1.0, 1.0);
                   const double ex = x - (cx + t * dx), ey = y - (cy + t * dy);
                   return ex * ex + ey * ey <= thick * thick;
                 });
      break;
    }
    default: { // disc with one off-center dark dot
      draw_shape(img, cx - rx, cy - rx, cx + rx, cy + rx, color,
                 [&](double x, double y) { return in_ellipse(x, y, cx, cy, rx, rx); });
      const double dark[3] = {0.08, 0.08, 0.08};
      const double ox = cx + rng.uniform(-0.4, 0.4) * rx, oy = cy + rng.uniform(-0.4, 0.4) * rx;
      const double r = 0.12 * rx;
      draw_shape(img, ox - r, oy - r, ox + r, oy + r, dark,
                 [&](double x, double y) { return in_ellipse(x, y, ox, oy, r, r * 0.7); });
      break;
    }
    }
  }
}

std::uint64_t image_seed(std::uint64_t seed, std::size_t index)
{
  SynthRng mix(seed * 0x2545f4914f6cdd1dULL + static_cast<std::uint64_t>(index));
  return mix.next();
}

} // namespace

Image render_target(int size, int yawLevel, int yawLevels, const TargetParams &params, Plane *alpha)
{
  if (size < 1 || yawLevels < 1 || yawLevel < 0 || yawLevel >= yawLevels)
    throw ConfigError("invalid target size or yaw level");
  // Signed integer yaw so that levels v and L-1-v share one canonical render.
  const int signedYaw = 2 * yawLevel - (yawLevels - 1);
  const double yaw = yawLevels > 1 ? std::abs(signedYaw) / static_cast<double>(yawLevels - 1) : 0.0;
  Plane a;
  Image img = render_canonical(size, yaw, params, a);
  if (signedYaw < 0) {
    img = flip_horizontal(img);
    a = flip_horizontal(a);
  }
  if (alpha)
    *alpha = std::move(a);
  return img;
}

Image synth_image(const SynthConfig &config, std::size_t index, std::vector<GroundTruth> *boxes)
{
  config.validate();
  SynthRng rng(image_seed(config.rngSeed, index));
  Image img(config.imageWidth, config.imageHeight);
  fill_background(img, rng);
  add_clutter(img, rng, config.clutterDensity);

  std::vector<GroundTruth> placed;
  const int n = rng.integer(config.minTargets, config.maxTargets);
  // Random placement with restarts; a crowded first pick can block the rest.
  for (int restart = 0; restart < 200 && static_cast<int>(placed.size()) < n; ++restart) {
    placed.clear();
    for (int t = 0; t < n; ++t) {
      bool ok = false;
      for (int attempt = 0; attempt < 200 && !ok; ++attempt) {
        const int s = rng.integer(config.minSize, config.maxSize);
        const int x = rng.integer(0, config.imageWidth - s), y = rng.integer(0, config.imageHeight - s);
        const Box b{static_cast<double>(x), static_cast<double>(y), static_cast<double>(s), static_cast<double>(s)};
        const Box grown{b.x - 4, b.y - 4, b.w + 8, b.h + 8};
        ok = std::none_of(placed.begin(), placed.end(),
                          [&](const GroundTruth &g) { return intersection_area(grown, g.box) > 0; });
        if (ok)
          placed.push_back({b, false, rng.integer(0, config.yawLevels - 1)});
      }
      if (!ok)
        break;
    }
  }
  if (static_cast<int>(placed.size()) < n)
    throw ConfigError("cannot place " + std::to_string(n) + " non-overlapping targets in a " +
                      std::to_string(config.imageWidth) + "x" + std::to_string(config.imageHeight) + " image");

  for (const auto &g : placed) {
    const auto params = random_target_params(rng);
    const int s = static_cast<int>(g.box.w), x0 = static_cast<int>(g.box.x), y0 = static_cast<int>(g.box.y);
    Plane alpha;
    const Image patch = render_target(s, g.yaw, config.yawLevels, params, &alpha);
    for (int k = 0; k < 3; ++k) {
      auto region = img.planes[k].block(y0, x0, s, s);
      region = alpha * patch.planes[k] + (1.0f - alpha) * region;
    }
  }

  for (int k = 0; k < 3; ++k)
    for (int y = 0; y < img.height(); ++y)
      for (int x = 0; x < img.width(); ++x) {
        const double v = img.planes[k](y, x) + config.noiseAmplitude * (2.0 * rng.uniform() - 1.0);
        img.planes[k](y, x) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }

  if (boxes)
    *boxes = std::move(placed);
  return quantize_8bit(img);
}

std::string synth_image_id(std::size_t index)
{
  char buf[32];
  std::snprintf(buf, sizeof buf, "img%05zu", index);
  return buf;
}

Dataset synth_render(const SynthConfig &config)
{
  config.validate();
  Dataset d;
  d.annotations.style = "square-target";
  for (std::size_t i = 0; i < static_cast<std::size_t>(config.imageCount); ++i) {
    std::vector<GroundTruth> boxes;
    d.images.push_back(synth_image(config, i, &boxes));
    d.ids.push_back(synth_image_id(i));
    d.annotations.images[d.ids.back()] = std::move(boxes);
  }
  return d;
}

Dataset synth_generate(const SynthConfig &config, const std::string &outDir)
{
  Dataset d = synth_render(config);
  std::error_code ec;
  fs::create_directories(fs::path(outDir) / "images", ec);
  if (ec)
    throw IoError("cannot create " + outDir + ": " + ec.message());
  for (std::size_t i = 0; i < d.size(); ++i)
    write_ppm((fs::path(outDir) / "images" / (d.ids[i] + ".ppm")).string(), d.images[i]);
  write_annotations((fs::path(outDir) / "annotations.jsonl").string(), d.annotations);

  nlohmann::json manifest{{"rngSeed", config.rngSeed},
                          {"imageCount", config.imageCount},
                          {"imageWidth", config.imageWidth},
                          {"imageHeight", config.imageHeight},
                          {"targetsPerImage", {config.minTargets, config.maxTargets}},
                          {"sizeRange", {config.minSize, config.maxSize}},
                          {"yawLevels", config.yawLevels},
                          {"clutterDensity", config.clutterDensity},
                          {"noiseAmplitude", config.noiseAmplitude},
                          {"annotations", d.annotations.box_count()}};
  std::ofstream out(fs::path(outDir) / "manifest.json");
  if (!out)
    throw IoError("cannot write manifest in " + outDir);
  out << manifest.dump(2) << '\n';
  return d;
}

Dataset load_dataset(const std::string &dir)
{
  Dataset d;
  d.annotations = read_annotations((fs::path(dir) / "annotations.jsonl").string());
  for (const auto &[id, boxes] : d.annotations.images) {
    d.ids.push_back(id);
    d.images.push_back(read_ppm((fs::path(dir) / "images" / (id + ".ppm")).string()));
  }
  return d;
}

} // namespace acf
