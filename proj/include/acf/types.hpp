#pragma once

#include <Eigen/Dense>

#include <array>
#include <stdexcept>
#include <string>

namespace acf {

/// Row-major 2-D plane; rows are image rows (y), columns are x.
template <typename Scalar>
using PlaneT = Eigen::Array<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using Plane = PlaneT<float>;

/// Three color planes with values in [0,1]. Plane order is R, G, B.
template <typename Scalar>
struct ImageT
{
  std::array<PlaneT<Scalar>, 3> planes;

  ImageT() = default;
  ImageT(int width, int height)
  {
    for (auto &p : planes)
      p = PlaneT<Scalar>::Zero(height, width);
  }

  int width() const { return static_cast<int>(planes[0].cols()); }
  int height() const { return static_cast<int>(planes[0].rows()); }
  bool empty() const { return planes[0].size() == 0; }

  PlaneT<Scalar> &operator[](int c) { return planes[c]; }
  const PlaneT<Scalar> &operator[](int c) const { return planes[c]; }
};

using Image = ImageT<float>;

struct Box
{
  double x = 0, y = 0, w = 0, h = 0;

  double area() const { return w * h; }
  double right() const { return x + w; }
  double bottom() const { return y + h; }
  bool operator==(const Box &) const = default;
};

class Error : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Invalid parameters or inconsistent configuration.
class ConfigError : public Error
{
public:
  using Error::Error;
};

/// Filesystem or stream failure.
class IoError : public Error
{
public:
  using Error::Error;
};

/// Input data that violates a documented contract (bad image, bad record).
class ValidationError : public Error
{
public:
  using Error::Error;
};

/// Throws ValidationError unless every value is finite and in [0,1].
void validate_image(const Image &image);

template <typename Scalar>
PlaneT<Scalar> flip_horizontal(const PlaneT<Scalar> &plane)
{
  return plane.rowwise().reverse();
}

template <typename Scalar>
ImageT<Scalar> flip_horizontal(const ImageT<Scalar> &image)
{
  ImageT<Scalar> out;
  for (int c = 0; c < 3; ++c)
    out.planes[c] = flip_horizontal(image.planes[c]);
  return out;
}

/// Sub-image [x, x+w) x [y, y+h); the rectangle must lie inside the image.
Image crop(const Image &image, int x, int y, int w, int h);

} // namespace acf
