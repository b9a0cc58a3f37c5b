#pragma once

#include "acf/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace acf {

enum class ColorSpace { LUV, RGB, Gray, HSV };
enum class GradientColorSpace { RGB, LUV, Gray };
enum class PoolingMethod { Average, Max, Stochastic };

std::string to_string(ColorSpace c);
std::string to_string(GradientColorSpace c);
std::string to_string(PoolingMethod p);
ColorSpace color_space_from_string(const std::string &s);
GradientColorSpace gradient_color_space_from_string(const std::string &s);
PoolingMethod pooling_from_string(const std::string &s);

/// Affine ranges mapping CIE L*, u*, v* into [0,1]. Stored in model files.
struct LuvNormalization
{
  double lMin = 0.0, lMax = 100.0;
  double uMin = -84.0, uMax = 176.0;
  double vMin = -135.0, vMax = 108.0;
  bool operator==(const LuvNormalization &) const = default;
};

struct ChannelConfig
{
  ColorSpace colorSpace = ColorSpace::LUV;
  GradientColorSpace gradientColorSpace = GradientColorSpace::RGB;
  int numOrientationBins = 6;
  std::vector<int> preSmoothRadii{1};
  int postSmoothRadius = 1;
  int shrink = 4;
  PoolingMethod pooling = PoolingMethod::Average;
  std::optional<std::uint64_t> stochasticSeed;
  LuvNormalization luv;

  int color_components() const { return colorSpace == ColorSpace::Gray ? 1 : 3; }
  int channels_per_radius() const { return color_components() + 1 + numOrientationBins; }
  int channel_count() const { return static_cast<int>(preSmoothRadii.size()) * channels_per_radius(); }

  /// Throws ConfigError on any violated invariant. windowSize <= 0 skips the divisibility check.
  void validate(int windowSize = 0) const;

  bool operator==(const ChannelConfig &) const = default;
};

enum class ChannelKind { Color, Magnitude, Orientation };

struct ChannelDescriptor
{
  ChannelKind kind = ChannelKind::Color;
  int index = 0; ///< color component or orientation bin
  int preSmoothRadius = 1;

  std::string name() const;
  bool operator==(const ChannelDescriptor &) const = default;
};

std::vector<ChannelDescriptor> channel_descriptors(const ChannelConfig &config);

/// Pooled channels of one image at one scale.
struct ChannelStack
{
  int width = 0;  ///< pooled width, ceil(sourceWidth / shrink)
  int height = 0; ///< pooled height
  std::vector<Plane> channels;
  std::vector<ChannelDescriptor> descriptors;
  ChannelConfig sourceConfig;
  int sourceWidth = 0;
  int sourceHeight = 0;

  int channel_count() const { return static_cast<int>(channels.size()); }
  std::size_t feature_count() const { return channels.size() * static_cast<std::size_t>(width) * height; }

  /// Row-major flattening: index = (c * height + y) * width + x.
  std::vector<float> flatten() const;
};

// ---------------------------------------------------------------------------
// Pixel-level kernels. Templated on scalar so reference checks can run in
// double; the pipeline itself runs in float.

namespace detail {

/// Fixed-point pi (multiple of 2^-20). Every orientation is stored on this grid
/// so that reflecting an angle (pi - t) is exact in float arithmetic.
inline constexpr double kOrientationPi = 3294199.0 / 1048576.0;

inline double quantize_angle(double t) { return std::round(t * 1048576.0) / 1048576.0; }

template <typename Scalar>
inline const Scalar &clamped(const PlaneT<Scalar> &p, Eigen::Index r, Eigen::Index c)
{
  r = std::clamp<Eigen::Index>(r, 0, p.rows() - 1);
  c = std::clamp<Eigen::Index>(c, 0, p.cols() - 1);
  return p(r, c);
}

inline double srgb_to_linear(double c)
{
  return c <= 0.04045 ? c / 12.92 : std::pow((c + 0.055) / 1.055, 2.4);
}

/// srgb_to_linear by linear interpolation in a 4096-interval table; absolute
/// error below 3e-8 on [0,1], exact formula outside.
inline double srgb_to_linear_table(double c)
{
  constexpr int n = 4096;
  static const std::vector<double> table = [] {
    std::vector<double> t(n + 2);
    for (int i = 0; i <= n + 1; ++i)
      t[static_cast<std::size_t>(i)] = srgb_to_linear(static_cast<double>(i) / n);
    return t;
  }();
  if (!(c >= 0.0 && c <= 1.0))
    return srgb_to_linear(c);
  const double u = c * n;
  const int i = static_cast<int>(u);
  const double f = u - i;
  return table[static_cast<std::size_t>(i)] + f * (table[static_cast<std::size_t>(i) + 1] - table[static_cast<std::size_t>(i)]);
}

} // namespace detail

/// Normalized binomial kernel of the given radius, length 2r+1.
std::vector<double> binomial_kernel(int radius);

template <typename Scalar>
std::array<PlaneT<Scalar>, 3> rgb_to_luv(const ImageT<Scalar> &image, const LuvNormalization &norm = {})
{
  // D65 white, sRGB primaries.
  constexpr double xn = 0.95047, yn = 1.0, zn = 1.08883;
  constexpr double dn = xn + 15.0 * yn + 3.0 * zn;
  constexpr double un = 4.0 * xn / dn, vn = 9.0 * yn / dn;
  constexpr double eps = 216.0 / 24389.0, kappa = 24389.0 / 27.0;

  const auto rows = image.height(), cols = image.width();
  std::array<PlaneT<Scalar>, 3> out;
  for (auto &p : out)
    p.resize(rows, cols);

  for (Eigen::Index y = 0; y < rows; ++y)
    for (Eigen::Index x = 0; x < cols; ++x) {
      const double r = detail::srgb_to_linear_table(image[0](y, x));
      const double g = detail::srgb_to_linear_table(image[1](y, x));
      const double b = detail::srgb_to_linear_table(image[2](y, x));
      const double X = 0.4124564 * r + 0.3575761 * g + 0.1804375 * b;
      const double Y = 0.2126729 * r + 0.7151522 * g + 0.0721750 * b;
      const double Z = 0.0193339 * r + 0.1191920 * g + 0.9503041 * b;
      const double yr = Y / yn;
      const double L = yr > eps ? 116.0 * std::cbrt(static_cast<float>(yr)) - 16.0 : kappa * yr;
      const double d = X + 15.0 * Y + 3.0 * Z;
      double u = 0.0, v = 0.0;
      if (d > 0.0) {
        u = 13.0 * L * (4.0 * X / d - un);
        v = 13.0 * L * (9.0 * Y / d - vn);
      }
      out[0](y, x) = static_cast<Scalar>(std::clamp((L - norm.lMin) / (norm.lMax - norm.lMin), 0.0, 1.0));
      out[1](y, x) = static_cast<Scalar>(std::clamp((u - norm.uMin) / (norm.uMax - norm.uMin), 0.0, 1.0));
      out[2](y, x) = static_cast<Scalar>(std::clamp((v - norm.vMin) / (norm.vMax - norm.vMin), 0.0, 1.0));
    }
  return out;
}

template <typename Scalar>
PlaneT<Scalar> rgb_to_gray(const ImageT<Scalar> &image)
{
  return (Scalar(0.299) * image[0] + Scalar(0.587) * image[1] + Scalar(0.114) * image[2])
    .min(Scalar(1))
    .max(Scalar(0));
}

template <typename Scalar>
std::array<PlaneT<Scalar>, 3> rgb_to_hsv(const ImageT<Scalar> &image)
{
  const auto rows = image.height(), cols = image.width();
  std::array<PlaneT<Scalar>, 3> out;
  for (auto &p : out)
    p.resize(rows, cols);
  for (Eigen::Index y = 0; y < rows; ++y)
    for (Eigen::Index x = 0; x < cols; ++x) {
      const double r = image[0](y, x), g = image[1](y, x), b = image[2](y, x);
      const double mx = std::max({r, g, b}), mn = std::min({r, g, b});
      const double c = mx - mn;
      double h = 0.0;
      if (c > 0.0) {
        if (mx == r)
          h = std::fmod((g - b) / c + 6.0, 6.0);
        else if (mx == g)
          h = (b - r) / c + 2.0;
        else
          h = (r - g) / c + 4.0;
        h /= 6.0;
      }
      out[0](y, x) = static_cast<Scalar>(std::clamp(h, 0.0, 1.0));
      out[1](y, x) = static_cast<Scalar>(mx > 0.0 ? c / mx : 0.0);
      out[2](y, x) = static_cast<Scalar>(mx);
    }
  return out;
}

/// Separable binomial smoothing, horizontal then vertical, replicate borders.
/// Symmetric taps are summed in pairs so the result commutes exactly with
/// horizontal flips.
template <typename Scalar>
PlaneT<Scalar> binomial_smooth(const PlaneT<Scalar> &plane, int radius)
{
  if (radius < 0)
    throw ConfigError("binomial_smooth: negative radius");
  if (radius == 0 || plane.size() == 0)
    return plane;

  const auto kd = binomial_kernel(radius);
  std::vector<Scalar> k(kd.begin(), kd.end());
  const Eigen::Index rows = plane.rows(), cols = plane.cols();

  PlaneT<Scalar> tmp(rows, cols);
  for (Eigen::Index y = 0; y < rows; ++y)
    for (Eigen::Index x = 0; x < cols; ++x) {
      Scalar acc = k[radius] * plane(y, x);
      for (int i = 1; i <= radius; ++i)
        acc += k[radius + i] * (detail::clamped(plane, y, x - i) + detail::clamped(plane, y, x + i));
      tmp(y, x) = acc;
    }

  PlaneT<Scalar> out(rows, cols);
  for (Eigen::Index y = 0; y < rows; ++y)
    for (Eigen::Index x = 0; x < cols; ++x) {
      Scalar acc = k[radius] * tmp(y, x);
      for (int i = 1; i <= radius; ++i)
        acc += k[radius + i] * (detail::clamped(tmp, y - i, x) + detail::clamped(tmp, y + i, x));
      out(y, x) = acc;
    }
  return out;
}

template <typename Scalar>
struct GradientField
{
  PlaneT<Scalar> magnitude;
  PlaneT<Scalar> orientation; ///< unsigned, in [0, pi)
};

/// Central differences on each plane; per pixel the plane with the largest
/// magnitude supplies both magnitude and orientation.
template <typename Scalar, std::size_t N>
GradientField<Scalar> gradients(const std::array<PlaneT<Scalar>, N> &planes, std::size_t count = N)
{
  const Eigen::Index rows = planes[0].rows(), cols = planes[0].cols();
  GradientField<Scalar> g{PlaneT<Scalar>::Zero(rows, cols), PlaneT<Scalar>::Zero(rows, cols)};
  const double pi = detail::kOrientationPi;

  if (rows == 0 || cols == 0)
    return g;
  std::vector<Eigen::Index> left(static_cast<std::size_t>(cols)), right(static_cast<std::size_t>(cols));
  for (Eigen::Index x = 0; x < cols; ++x) {
    left[static_cast<std::size_t>(x)] = std::max<Eigen::Index>(x - 1, 0);
    right[static_cast<std::size_t>(x)] = std::min<Eigen::Index>(x + 1, cols - 1);
  }

  for (Eigen::Index y = 0; y < rows; ++y) {
    const Eigen::Index up = std::max<Eigen::Index>(y - 1, 0), down = std::min<Eigen::Index>(y + 1, rows - 1);
    for (Eigen::Index x = 0; x < cols; ++x) {
      const auto xl = left[static_cast<std::size_t>(x)], xr = right[static_cast<std::size_t>(x)];
      Scalar best = -1, bdx = 0, bdy = 0;
      for (std::size_t c = 0; c < count; ++c) {
        const Scalar *p = planes[c].data();
        const Scalar dx = (p[y * cols + xr] - p[y * cols + xl]) / Scalar(2);
        const Scalar dy = (p[down * cols + x] - p[up * cols + x]) / Scalar(2);
        const Scalar m2 = dx * dx + dy * dy;
        if (m2 > best) {
          best = m2;
          bdx = dx;
          bdy = dy;
        }
      }
      g.magnitude(y, x) = std::sqrt(best);
      double t;
      if (bdy == 0)
        t = 0.0;
      else if (bdx == 0)
        t = pi / 2;
      else
        t = std::min(detail::quantize_angle(std::atan2(std::abs(double(bdy)), std::abs(double(bdx)))), pi / 2);
      const bool reflected = (bdx > 0 && bdy < 0) || (bdx < 0 && bdy > 0);
      g.orientation(y, x) = static_cast<Scalar>(reflected && t > 0 ? pi - t : t);
    }
  }
  return g;
}

template <typename Scalar>
GradientField<Scalar> gradients(const ImageT<Scalar> &image)
{
  return gradients(image.planes);
}

/// Linear soft binning into numBins unsigned-orientation bins with centers
/// k*pi/numBins. The output planes sum to the magnitude plane.
template <typename Scalar>
std::vector<PlaneT<Scalar>> orientation_histograms(const PlaneT<Scalar> &magnitude, const PlaneT<Scalar> &orientation,
                                                   int numBins)
{
  if (numBins < 1)
    throw ConfigError("orientation_histograms: numBins must be positive");
  const Eigen::Index rows = magnitude.rows(), cols = magnitude.cols();
  std::vector<PlaneT<Scalar>> bins(numBins, PlaneT<Scalar>::Zero(rows, cols));
  const Scalar pi = static_cast<Scalar>(detail::kOrientationPi);
  const Scalar halfPi = pi / 2;
  const Scalar toBin = static_cast<Scalar>(numBins) / pi;

  std::vector<Scalar *> out(static_cast<std::size_t>(numBins));
  for (int k = 0; k < numBins; ++k)
    out[static_cast<std::size_t>(k)] = bins[static_cast<std::size_t>(k)].data();
  const Scalar *mag = magnitude.data();
  const Scalar *ori = orientation.data();
  const Eigen::Index n = rows * cols;

  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar m = mag[i];
    if (m == Scalar(0))
      continue;
    const Scalar theta = ori[i];
    const bool reflected = theta > halfPi;
    // Reflected angles are folded back so both halves share one rounding path.
    const Scalar t = reflected ? pi - theta : theta;
    const Scalar u = (t == halfPi) ? Scalar(numBins) / 2 : t * toBin;
    const Scalar fl = std::floor(u);
    const Scalar frac = u - fl;
    const int k0 = static_cast<int>(fl);
    const Scalar m1 = m * frac;
    const Scalar m0 = m - m1;
    // 0 <= k0 <= numBins / 2, so each index needs at most one wrap.
    int lo = reflected ? numBins - k0 : k0;
    int hi = reflected ? numBins - k0 - 1 : k0 + 1;
    if (lo >= numBins)
      lo -= numBins;
    if (hi >= numBins)
      hi -= numBins;
    if (hi < 0)
      hi += numBins;
    out[static_cast<std::size_t>(lo)][i] += m0;
    out[static_cast<std::size_t>(hi)][i] += m1;
  }
  return bins;
}

/// Non-overlapping factor x factor blocks, partial blocks at the right and
/// bottom edges normalized by their actual size. seed only matters for
/// Stochastic pooling.
template <typename Scalar>
PlaneT<Scalar> pool(const PlaneT<Scalar> &plane, int factor, PoolingMethod method, std::uint64_t seed = 0)
{
  if (factor < 1)
    throw ConfigError("pool: factor must be >= 1");
  const Eigen::Index rows = plane.rows(), cols = plane.cols();
  const Eigen::Index prow = (rows + factor - 1) / factor, pcol = (cols + factor - 1) / factor;
  PlaneT<Scalar> out(prow, pcol);
  std::mt19937_64 rng(seed);
  std::vector<double> weights;

  for (Eigen::Index by = 0; by < prow; ++by)
    for (Eigen::Index bx = 0; bx < pcol; ++bx) {
      const Eigen::Index y0 = by * factor, x0 = bx * factor;
      const Eigen::Index nh = std::min<Eigen::Index>(factor, rows - y0);
      const Eigen::Index nw = std::min<Eigen::Index>(factor, cols - x0);
      const auto block = plane.block(y0, x0, nh, nw);
      switch (method) {
      case PoolingMethod::Average: {
        Scalar total = 0;
        for (Eigen::Index r = 0; r < nh; ++r) {
          Scalar row = 0;
          for (Eigen::Index i = 0; i < nw / 2; ++i)
            row += block(r, i) + block(r, nw - 1 - i);
          if (nw % 2)
            row += block(r, nw / 2);
          total += row;
        }
        out(by, bx) = total / static_cast<Scalar>(nh * nw);
        break;
      }
      case PoolingMethod::Max:
        out(by, bx) = block.maxCoeff();
        break;
      case PoolingMethod::Stochastic: {
        weights.assign(static_cast<std::size_t>(nh * nw), 0.0);
        double sum = 0.0;
        for (Eigen::Index r = 0; r < nh; ++r)
          for (Eigen::Index c = 0; c < nw; ++c) {
            const double w = std::max<double>(0.0, block(r, c));
            weights[static_cast<std::size_t>(r * nw + c)] = w;
            sum += w;
          }
        if (sum <= 0.0)
          std::fill(weights.begin(), weights.end(), 1.0);
        std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
        const auto idx = static_cast<Eigen::Index>(pick(rng));
        out(by, bx) = block(idx / nw, idx % nw);
        break;
      }
      }
    }
  return out;
}

/// Full channel computation: per pre-smooth radius, smooth the image, derive
/// color, gradient magnitude and orientation channels, pool by shrink and
/// post-smooth. Throws ValidationError for images smaller than shrink.
ChannelStack compute_channels(const Image &image, const ChannelConfig &config);

/// Horizontal flip of every plane with orientation bin k moved to (numBins-k) mod numBins.
ChannelStack flip_horizontal(const ChannelStack &stack);

/// One grayscale PGM per channel, values linearly mapped to [0,255].
/// Returns the written file paths.
std::vector<std::string> dump_channels(const ChannelStack &stack, const std::string &directory,
                                       const std::string &prefix = "");

} // namespace acf
