// Binary model container:
//   magic[4] | u32 formatVersion | u64 payloadLength | payload | u64 FNV-1a(payload)
// All integers and IEEE-754 values are little-endian.

#include "acf/detector.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace acf {

namespace {

constexpr char kCascadeMagic[4] = {'A', 'C', 'F', 'C'};
constexpr char kModelMagic[4] = {'A', 'C', 'F', 'M'};

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes)
{
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class ByteWriter
{
public:
  template <typename T>
  void put(T value)
  {
    static_assert(std::is_trivially_copyable_v<T>);
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
      std::reverse(raw, raw + sizeof(T));
    bytes.insert(bytes.end(), raw, raw + sizeof(T));
  }
  void u8(std::uint8_t v) { put(v); }
  void u32(std::uint32_t v) { put(v); }
  void i32(std::int32_t v) { put(v); }
  void u64(std::uint64_t v) { put(v); }
  void f32(float v) { put(v); }
  void f64(double v) { put(v); }

  std::vector<std::uint8_t> bytes;
};

class ByteReader
{
public:
  explicit ByteReader(std::span<const std::uint8_t> b) : bytes_(b) {}

  template <typename T>
  T get()
  {
    if (pos_ + sizeof(T) > bytes_.size())
      throw ModelFormatError(ModelFormatError::Kind::Truncated, "model data ends unexpectedly");
    std::uint8_t raw[sizeof(T)];
    std::memcpy(raw, bytes_.data() + pos_, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
      std::reverse(raw, raw + sizeof(T));
    pos_ += sizeof(T);
    T v;
    std::memcpy(&v, raw, sizeof(T));
    return v;
  }
  std::uint8_t u8() { return get<std::uint8_t>(); }
  std::uint32_t u32() { return get<std::uint32_t>(); }
  std::int32_t i32() { return get<std::int32_t>(); }
  std::uint64_t u64() { return get<std::uint64_t>(); }
  float f32() { return get<float>(); }
  double f64() { return get<double>(); }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::span<const std::uint8_t> take(std::size_t n)
  {
    if (n > remaining())
      throw ModelFormatError(ModelFormatError::Kind::Truncated, "model data ends unexpectedly");
    auto s = bytes_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

void require_count(const ByteReader &r, std::uint64_t count, std::size_t bytesEach)
{
  if (count > r.remaining() / std::max<std::size_t>(1, bytesEach))
    throw ModelFormatError(ModelFormatError::Kind::Invalid, "implausible element count in model data");
}

template <typename E>
E read_enum(ByteReader &r, int count)
{
  const int v = r.u8();
  if (v >= count)
    throw ModelFormatError(ModelFormatError::Kind::Invalid, "enum value out of range in model data");
  return static_cast<E>(v);
}

void write_channel_config(ByteWriter &w, const ChannelConfig &c)
{
  w.u8(static_cast<std::uint8_t>(c.colorSpace));
  w.u8(static_cast<std::uint8_t>(c.gradientColorSpace));
  w.i32(c.numOrientationBins);
  w.u32(static_cast<std::uint32_t>(c.preSmoothRadii.size()));
  for (int r : c.preSmoothRadii)
    w.i32(r);
  w.i32(c.postSmoothRadius);
  w.i32(c.shrink);
  w.u8(static_cast<std::uint8_t>(c.pooling));
  w.u8(c.stochasticSeed ? 1 : 0);
  w.u64(c.stochasticSeed.value_or(0));
  for (double v : {c.luv.lMin, c.luv.lMax, c.luv.uMin, c.luv.uMax, c.luv.vMin, c.luv.vMax})
    w.f64(v);
}

ChannelConfig read_channel_config(ByteReader &r)
{
  ChannelConfig c;
  c.colorSpace = read_enum<ColorSpace>(r, 4);
  c.gradientColorSpace = read_enum<GradientColorSpace>(r, 3);
  c.numOrientationBins = r.i32();
  const auto nr = r.u32();
  require_count(r, nr, 4);
  c.preSmoothRadii.resize(nr);
  for (auto &v : c.preSmoothRadii)
    v = r.i32();
  c.postSmoothRadius = r.i32();
  c.shrink = r.i32();
  c.pooling = read_enum<PoolingMethod>(r, 3);
  const bool hasSeed = r.u8() != 0;
  const auto seed = r.u64();
  if (hasSeed)
    c.stochasticSeed = seed;
  c.luv.lMin = r.f64();
  c.luv.lMax = r.f64();
  c.luv.uMin = r.f64();
  c.luv.uMax = r.f64();
  c.luv.vMin = r.f64();
  c.luv.vMax = r.f64();
  return c;
}

void write_cascade_body(ByteWriter &w, const SoftCascadeModel &m)
{
  w.u32(SoftCascadeModel::kFormatVersion);
  write_channel_config(w, m.channelConfig);
  w.i32(m.windowSize);
  w.i32(m.viewId);
  w.u32(static_cast<std::uint32_t>(m.trees.size()));
  for (std::size_t t = 0; t < m.trees.size(); ++t) {
    for (const auto &n : m.trees[t].nodes) {
      w.u32(n.feature);
      w.f32(n.threshold);
    }
    for (float l : m.trees[t].leaves)
      w.f32(l);
    w.f64(m.weights[t]);
  }
  for (double th : m.stageThresholds)
    w.f64(th);
  w.f64(m.scoreRange.min);
  w.f64(m.scoreRange.max);
}

SoftCascadeModel read_cascade_body(ByteReader &r)
{
  const auto version = r.u32();
  if (version != SoftCascadeModel::kFormatVersion)
    throw ModelFormatError(ModelFormatError::Kind::VersionMismatch,
                           "cascade format version " + std::to_string(version) + " is not supported");
  SoftCascadeModel m;
  m.channelConfig = read_channel_config(r);
  m.windowSize = r.i32();
  m.viewId = r.i32();
  const auto nt = r.u32();
  constexpr std::size_t treeBytes = 3 * 8 + 4 * 4 + 8;
  require_count(r, nt, treeBytes + 8);
  m.trees.resize(nt);
  m.weights.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    for (auto &n : m.trees[t].nodes) {
      n.feature = r.u32();
      n.threshold = r.f32();
    }
    for (auto &l : m.trees[t].leaves)
      l = r.f32();
    m.weights[t] = r.f64();
  }
  m.stageThresholds.resize(nt);
  for (auto &th : m.stageThresholds)
    th = r.f64();
  m.scoreRange.min = r.f64();
  m.scoreRange.max = r.f64();
  try {
    m.validate();
  } catch (const ConfigError &e) {
    throw ModelFormatError(ModelFormatError::Kind::Invalid, std::string("invalid cascade: ") + e.what());
  }
  return m;
}

std::vector<std::uint8_t> wrap(const char (&magic)[4], std::uint32_t version, const std::vector<std::uint8_t> &payload)
{
  ByteWriter w;
  for (char c : magic)
    w.u8(static_cast<std::uint8_t>(c));
  w.u32(version);
  w.u64(payload.size());
  w.bytes.insert(w.bytes.end(), payload.begin(), payload.end());
  w.u64(fnv1a(payload));
  return std::move(w.bytes);
}

std::span<const std::uint8_t> unwrap(std::span<const std::uint8_t> bytes, const char (&magic)[4],
                                     std::uint32_t version)
{
  ByteReader r(bytes);
  if (bytes.size() < 4)
    throw ModelFormatError(ModelFormatError::Kind::Truncated, "model file too short");
  for (char c : magic)
    if (r.u8() != static_cast<std::uint8_t>(c))
      throw ModelFormatError(ModelFormatError::Kind::BadMagic, "not a model file of the expected kind");
  const auto v = r.u32();
  if (v != version)
    throw ModelFormatError(ModelFormatError::Kind::VersionMismatch,
                           "model format version " + std::to_string(v) + " is not supported (expected " +
                             std::to_string(version) + ")");
  const auto len = r.u64();
  if (len > r.remaining() || r.remaining() - len < 8)
    throw ModelFormatError(ModelFormatError::Kind::Truncated, "model file is truncated");
  const auto payload = r.take(static_cast<std::size_t>(len));
  const auto checksum = r.u64();
  if (r.remaining() != 0 || checksum != fnv1a(payload))
    throw ModelFormatError(ModelFormatError::Kind::ChecksumMismatch, "model checksum mismatch");
  return payload;
}

} // namespace

std::vector<std::uint8_t> serialize_cascade(const SoftCascadeModel &model)
{
  ByteWriter w;
  write_cascade_body(w, model);
  return wrap(kCascadeMagic, SoftCascadeModel::kFormatVersion, w.bytes);
}

SoftCascadeModel deserialize_cascade(std::span<const std::uint8_t> bytes)
{
  ByteReader r(unwrap(bytes, kCascadeMagic, SoftCascadeModel::kFormatVersion));
  auto m = read_cascade_body(r);
  if (r.remaining() != 0)
    throw ModelFormatError(ModelFormatError::Kind::Invalid, "trailing bytes after cascade");
  return m;
}

std::vector<std::uint8_t> serialize_model(const MultiViewModel &model)
{
  model.validate();
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(model.views.size()));
  for (const auto &v : model.views) {
    w.i32(v.mirrorOf);
    if (v.mirrorOf < 0)
      write_cascade_body(w, v.model);
  }
  for (const auto &a : model.adjustments) {
    w.f64(a.dx);
    w.f64(a.dy);
    w.f64(a.sw);
    w.f64(a.sh);
  }
  const auto &f = model.fusion;
  w.u8(static_cast<std::uint8_t>(f.rerank));
  w.f64(f.rerankOverlapThreshold);
  w.u8(static_cast<std::uint8_t>(f.merging));
  w.f64(f.mergeOverlapThreshold);
  w.u8(static_cast<std::uint8_t>(f.combinationWeighting));
  w.u8(f.scoreThreshold ? 1 : 0);
  w.f64(f.scoreThreshold.value_or(0.0));
  w.i32(model.pyramid.scalesPerOctave);
  w.f64(model.pyramid.maxUpscale);
  w.i32(model.stride);
  return wrap(kModelMagic, MultiViewModel::kFormatVersion, w.bytes);
}

MultiViewModel deserialize_model(std::span<const std::uint8_t> bytes)
{
  ByteReader r(unwrap(bytes, kModelMagic, MultiViewModel::kFormatVersion));
  MultiViewModel m;
  const auto nv = r.u32();
  require_count(r, nv, 4);
  m.views.resize(nv);
  for (auto &v : m.views) {
    v.mirrorOf = r.i32();
    if (v.mirrorOf < 0)
      v.model = read_cascade_body(r);
  }
  m.adjustments.resize(nv);
  for (auto &a : m.adjustments) {
    a.dx = r.f64();
    a.dy = r.f64();
    a.sw = r.f64();
    a.sh = r.f64();
  }
  auto &f = m.fusion;
  f.rerank = read_enum<RerankMode>(r, 5);
  f.rerankOverlapThreshold = r.f64();
  f.merging = read_enum<MergeMode>(r, 2);
  f.mergeOverlapThreshold = r.f64();
  f.combinationWeighting = read_enum<CombinationWeighting>(r, 2);
  const bool hasThreshold = r.u8() != 0;
  const double threshold = r.f64();
  f.scoreThreshold = hasThreshold ? std::optional<double>(threshold) : std::nullopt;
  m.pyramid.scalesPerOctave = r.i32();
  m.pyramid.maxUpscale = r.f64();
  m.stride = r.i32();
  if (r.remaining() != 0)
    throw ModelFormatError(ModelFormatError::Kind::Invalid, "trailing bytes after model");
  try {
    m.finalize();
  } catch (const ConfigError &e) {
    throw ModelFormatError(ModelFormatError::Kind::Invalid, std::string("invalid model: ") + e.what());
  }
  return m;
}

void save_model(const MultiViewModel &model, const std::string &path)
{
  const auto bytes = serialize_model(model);
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw IoError("cannot write model to " + path);
  out.write(reinterpret_cast<const char *>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out)
    throw IoError("write failed: " + path);
}

MultiViewModel load_model(const std::string &path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw IoError("cannot open model " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_model(bytes);
}

} // namespace acf
