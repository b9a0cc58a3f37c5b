#pragma once

#include "acf/eval.hpp"
#include "acf/types.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace acf {

/// Procedural multi-view dataset: asymmetric head-like targets whose inner
/// parts shift and foreshorten with yaw, over textured backgrounds with clutter.
struct SynthConfig
{
  std::uint64_t rngSeed = 0;
  int imageCount = 10;
  int imageWidth = 384;
  int imageHeight = 288;
  int minTargets = 1; ///< per image, inclusive
  int maxTargets = 3;
  int minSize = 80; ///< square target side in pixels, inclusive
  int maxSize = 128;
  int yawLevels = 6;
  double clutterDensity = 1.0; ///< distractors per 10000 pixels
  double noiseAmplitude = 0.03;

  void validate() const;
  bool operator==(const SynthConfig &) const = default;
};

/// Per-instance appearance, drawn once and shared by mirrored renderings.
struct TargetParams
{
  float skin[3]{}, hair[3]{}, eyes[3]{}, mouth[3]{};
  double jitterX = 0, jitterY = 0, headAspect = 1, eyeSpacing = 1, contrast = 1;
};

/// Small deterministic generator (splitmix64) so renders do not depend on
/// the standard library's distribution implementations.
class SynthRng
{
public:
  explicit SynthRng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t next();
  double uniform(); ///< [0,1)
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int integer(int lo, int hi); ///< inclusive

private:
  std::uint64_t state_;
};

TargetParams random_target_params(SynthRng &rng);

/// Target patch of the given side. `alpha` receives per-pixel coverage.
/// Levels v and yawLevels-1-v render to exact horizontal mirrors. The middle
/// level of an odd count is the unflipped canonical render.
Image render_target(int size, int yawLevel, int yawLevels, const TargetParams &params, Plane *alpha = nullptr);

/// Image `index` of the set, rendered independently of the others and
/// quantized to 8 bits. Ground truth (with yaw levels) goes to `boxes`.
Image synth_image(const SynthConfig &config, std::size_t index, std::vector<GroundTruth> *boxes = nullptr);

struct Dataset
{
  std::vector<std::string> ids;
  std::vector<Image> images;
  AnnotationSet annotations;

  std::size_t size() const { return images.size(); }
};

std::string synth_image_id(std::size_t index);

Dataset synth_render(const SynthConfig &config);

/// Writes images/<id>.ppm, annotations.jsonl and manifest.json under outDir.
Dataset synth_generate(const SynthConfig &config, const std::string &outDir);

/// Reads a directory in the synth_generate layout (annotations.jsonl plus images/<id>.ppm).
Dataset load_dataset(const std::string &dir);

} // namespace acf
