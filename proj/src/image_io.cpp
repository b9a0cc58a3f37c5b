#include "acf/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <vector>

namespace acf {

namespace {

int read_header_int(std::istream &in)
{
  int c = in.peek();
  while (in && (std::isspace(c) || c == '#')) {
    if (c == '#')
      in.ignore(1 << 20, '\n');
    else
      in.get();
    c = in.peek();
  }
  int v = -1;
  if (!(in >> v))
    throw ValidationError("malformed PNM header");
  return v;
}

unsigned char to_byte(float v)
{
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f));
}

} // namespace

Image read_ppm(const std::string &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open " + path);
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  if (magic != "P6" && magic != "P3")
    throw ValidationError(path + ": not a PPM file");
  const int w = read_header_int(in), h = read_header_int(in), maxval = read_header_int(in);
  if (w < 1 || h < 1 || maxval < 1 || maxval > 255)
    throw ValidationError(path + ": unsupported PPM dimensions or depth");

  Image image(w, h);
  const auto fmax = static_cast<float>(maxval);
  if (magic == "P6") {
    in.get();
    std::vector<unsigned char> buf(static_cast<std::size_t>(w) * h * 3);
    in.read(reinterpret_cast<char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (in.gcount() != static_cast<std::streamsize>(buf.size()))
      throw ValidationError(path + ": truncated PPM data");
    std::size_t i = 0;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c)
          image[c](y, x) = static_cast<float>(buf[i++]) / fmax;
  } else {
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        for (int c = 0; c < 3; ++c) {
          int v;
          if (!(in >> v) || v < 0 || v > maxval)
            throw ValidationError(path + ": bad PPM sample");
          image[c](y, x) = static_cast<float>(v) / fmax;
        }
  }
  return image;
}

void write_ppm(const std::string &path, const Image &image)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path);
  out << "P6\n" << image.width() << " " << image.height() << "\n255\n";
  std::vector<unsigned char> buf;
  buf.reserve(static_cast<std::size_t>(image.width()) * image.height() * 3);
  for (int y = 0; y < image.height(); ++y)
    for (int x = 0; x < image.width(); ++x)
      for (int c = 0; c < 3; ++c)
        buf.push_back(to_byte(image[c](y, x)));
  out.write(reinterpret_cast<const char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out)
    throw IoError("write failed: " + path);
}

void write_pgm(const std::string &path, const Plane &plane)
{
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write " + path);
  out << "P5\n" << plane.cols() << " " << plane.rows() << "\n255\n";
  std::vector<unsigned char> buf;
  buf.reserve(static_cast<std::size_t>(plane.size()));
  for (Eigen::Index y = 0; y < plane.rows(); ++y)
    for (Eigen::Index x = 0; x < plane.cols(); ++x)
      buf.push_back(to_byte(plane(y, x)));
  out.write(reinterpret_cast<const char *>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out)
    throw IoError("write failed: " + path);
}

void draw_box(Image &image, const Box &box, float r, float g, float b, int thickness)
{
  const float color[3] = {r, g, b};
  const int x0 = static_cast<int>(std::lround(box.x)), y0 = static_cast<int>(std::lround(box.y));
  const int x1 = static_cast<int>(std::lround(box.right())) - 1, y1 = static_cast<int>(std::lround(box.bottom())) - 1;
  auto put = [&](int x, int y) {
    if (x < 0 || y < 0 || x >= image.width() || y >= image.height())
      return;
    for (int c = 0; c < 3; ++c)
      image[c](y, x) = color[c];
  };
  for (int t = 0; t < thickness; ++t) {
    for (int x = x0; x <= x1; ++x) {
      put(x, y0 + t);
      put(x, y1 - t);
    }
    for (int y = y0; y <= y1; ++y) {
      put(x0 + t, y);
      put(x1 - t, y);
    }
  }
}

Image quantize_8bit(const Image &image)
{
  Image out = image;
  for (auto &p : out.planes)
    p = p.unaryExpr([](float v) { return static_cast<float>(to_byte(v)) / 255.0f; });
  return out;
}

} // namespace acf
