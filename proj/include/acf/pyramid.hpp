#pragma once

#include "acf/channels.hpp"

#include <utility>
#include <vector>

namespace acf {

struct PyramidConfig
{
  int scalesPerOctave = 8;
  double maxUpscale = 1.0;

  void validate() const;
  bool operator==(const PyramidConfig &) const = default;
};

struct PyramidLevel
{
  double scale = 1.0;  ///< nominal schedule scale
  double scaleX = 1.0; ///< actual resampled width / source width
  double scaleY = 1.0;
  int imageWidth = 0; ///< resampled image size, a multiple of shrink
  int imageHeight = 0;
  ChannelStack stack;
};

/// Descending geometric schedule maxUpscale * 2^(-k/scalesPerOctave), kept
/// while min(width, height) * s >= window. Empty when nothing fits.
std::vector<double> scale_schedule(int imageWidth, int imageHeight, const PyramidConfig &config, int window);

/// Round-half-up of size * scale, snapped to a multiple of shrink (at least shrink).
std::pair<int, int> level_dimensions(int imageWidth, int imageHeight, double scale, int shrink);

/// Bilinear resampling with half-pixel-centered coordinates. The sampling
/// table is built mirror-symmetric, so resample(flip(I)) == flip(resample(I))
/// exactly. Same-size requests return the input unchanged.
Image resample_bilinear(const Image &image, int width, int height);

std::vector<PyramidLevel> build_pyramid(const Image &image, const ChannelConfig &channelConfig,
                                        const PyramidConfig &pyramidConfig, int window);

} // namespace acf
