#include "swept/codec.hpp"

#include <bit>
#include <cstring>
#include <string>

namespace swept {

namespace {

constexpr std::uint8_t kVariableArityFlag = 0x01;

class Writer {
 public:
  explicit Writer(std::size_t reserve) { out_.reserve(reserve); }

  void bytes(const char* s, std::size_t len) { out_.insert(out_.end(), s, s + len); }
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u16(std::uint16_t v) { le(v, 2); }
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void f64(double v) { le(std::bit_cast<std::uint64_t>(v), 8); }
  void zeros(std::size_t count) { out_.insert(out_.end(), count, 0); }

  Bytes take() { return std::move(out_); }

 private:
  void le(std::uint64_t v, int width) {
    for (int b = 0; b < width; ++b) out_.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
  }

  Bytes out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::size_t remaining() const noexcept { return in_.size() - pos_; }

  void need(std::size_t count, const char* field) const {
    if (remaining() < count) {
      throw CodecError(field, "truncated buffer (need " + std::to_string(count) + " bytes, have " +
                                  std::to_string(remaining()) + ")");
    }
  }

  std::span<const std::uint8_t> take(std::size_t count, const char* field) {
    need(count, field);
    auto s = in_.subspan(pos_, count);
    pos_ += count;
    return s;
  }

  std::uint8_t u8(const char* field) { return static_cast<std::uint8_t>(le(1, field)); }
  std::uint16_t u16(const char* field) { return static_cast<std::uint16_t>(le(2, field)); }
  std::uint32_t u32(const char* field) { return static_cast<std::uint32_t>(le(4, field)); }
  std::uint64_t u64(const char* field) { return le(8, field); }
  double f64(const char* field) { return std::bit_cast<double>(le(8, field)); }

 private:
  std::uint64_t le(int width, const char* field) {
    auto s = take(static_cast<std::size_t>(width), field);
    std::uint64_t v = 0;
    for (int b = 0; b < width; ++b) v |= static_cast<std::uint64_t>(s[static_cast<std::size_t>(b)]) << (8 * b);
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

void expect_magic(Reader& r, const char* magic) {
  auto m = r.take(4, "magic");
  if (std::memcmp(m.data(), magic, 4) != 0) throw CodecError("magic", std::string("expected \"") + magic + "\"");
}

}  // namespace

Bytes encode_panel(const Panel& panel) {
  check_panel_shape(panel);

  bool uniform = true;
  std::size_t value_count = 0;
  for (const Slab& s : panel.levels) {
    uniform = uniform && s.arity == panel.levels.front().arity;
    value_count += s.values.size();
    if (s.arity > 0xFFFF) throw CodecError("arity", "exceeds 65535");
  }

  Writer w(kPanelHeaderSize + panel.levels.size() * 2 + value_count * 8);
  w.bytes("SWP2", 4);
  w.u16(kPanelVersion);
  w.u8(static_cast<std::uint8_t>(panel.side));
  w.u8(static_cast<std::uint8_t>(panel.orientation));
  w.u32(static_cast<std::uint32_t>(panel.n));
  w.u64(static_cast<std::uint64_t>(panel.start_step));
  w.u16(uniform ? static_cast<std::uint16_t>(panel.levels.front().arity) : 0);
  w.u8(uniform ? 0 : kVariableArityFlag);
  w.zeros(5);
  if (!uniform) {
    for (const Slab& s : panel.levels) w.u16(static_cast<std::uint16_t>(s.arity));
  }
  for (const Slab& s : panel.levels) {
    for (double v : s.values) w.f64(v);
  }
  return w.take();
}

Panel decode_panel(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.need(kPanelHeaderSize, "header");
  expect_magic(r, "SWP2");
  if (const auto version = r.u16("version"); version != kPanelVersion) {
    throw CodecError("version", "unsupported version " + std::to_string(version));
  }
  Panel p;
  const auto side = r.u8("side");
  if (side > 3) throw CodecError("side", "invalid value " + std::to_string(side));
  p.side = static_cast<Side>(side);
  const auto orientation = r.u8("orientation");
  if (orientation > 1) throw CodecError("orientation", "invalid value " + std::to_string(orientation));
  p.orientation = static_cast<Orientation>(orientation);
  const auto n = r.u32("n");
  if (n < 4 || n % 2 != 0 || n > (1u << 20)) throw CodecError("n", "invalid side length " + std::to_string(n));
  p.n = static_cast<int>(n);
  p.start_step = static_cast<std::int64_t>(r.u64("start_step"));
  const auto arity = r.u16("arity");
  const auto flags = r.u8("flags");
  if ((flags & ~kVariableArityFlag) != 0) throw CodecError("flags", "unknown flag bits");
  auto reserved = r.take(5, "reserved");
  for (auto b : reserved) {
    if (b != 0) throw CodecError("reserved", "non-zero reserved byte");
  }

  const PanelShape shape = panel_shape(p.n, p.orientation);
  std::vector<std::size_t> arities(shape.level_counts.size(), arity);
  if ((flags & kVariableArityFlag) != 0) {
    if (arity != 0) throw CodecError("arity", "must be 0 when per-level arities follow");
    for (auto& a : arities) a = r.u16("level arity");
  }
  std::size_t payload = 0;
  for (std::size_t k = 0; k < arities.size(); ++k) {
    if (arities[k] == 0) throw CodecError("arity", "zero arity");
    payload += shape.level_counts[k] * arities[k] * 8;
  }
  if (r.remaining() != payload) {
    throw CodecError("length", "payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                                   std::to_string(payload));
  }
  p.levels.resize(arities.size());
  for (std::size_t k = 0; k < arities.size(); ++k) {
    Slab& s = p.levels[k];
    s.arity = arities[k];
    s.values.resize(shape.level_counts[k] * s.arity);
    for (double& v : s.values) v = r.f64("payload");
  }
  return p;
}

Bytes encode_field(const GlobalField& field) {
  if (field.arity == 0 || field.arity > 0xFFFF) throw CodecError("arity", "out of range");
  if (field.values.size() !=
      static_cast<std::size_t>(field.width) * static_cast<std::size_t>(field.height) * field.arity) {
    throw ContractError("field value count does not match width*height*arity");
  }
  Writer w(kFieldHeaderSize + field.values.size() * 8);
  w.bytes("SWF2", 4);
  w.u16(kFieldVersion);
  w.u16(0);
  w.u32(static_cast<std::uint32_t>(field.width));
  w.u32(static_cast<std::uint32_t>(field.height));
  w.u64(static_cast<std::uint64_t>(field.step));
  w.u32(static_cast<std::uint32_t>(field.shift.sx));
  w.u32(static_cast<std::uint32_t>(field.shift.sy));
  w.u16(static_cast<std::uint16_t>(field.arity));
  w.zeros(6);
  for (double v : field.values) w.f64(v);
  return w.take();
}

GlobalField decode_field(std::span<const std::uint8_t> bytes) {
  Reader r(bytes);
  r.need(kFieldHeaderSize, "header");
  expect_magic(r, "SWF2");
  if (const auto version = r.u16("version"); version != kFieldVersion) {
    throw CodecError("version", "unsupported version " + std::to_string(version));
  }
  (void)r.u16("reserved");
  GlobalField f;
  f.width = static_cast<int>(r.u32("width"));
  f.height = static_cast<int>(r.u32("height"));
  f.step = static_cast<std::int64_t>(r.u64("step"));
  f.shift.sx = static_cast<int>(r.u32("shift"));
  f.shift.sy = static_cast<int>(r.u32("shift"));
  f.arity = r.u16("arity");
  (void)r.take(6, "reserved");
  if (f.width <= 0 || f.height <= 0) throw CodecError("width", "non-positive dimensions");
  if (f.arity == 0) throw CodecError("arity", "zero arity");
  const std::size_t count = static_cast<std::size_t>(f.width) * static_cast<std::size_t>(f.height) * f.arity;
  if (r.remaining() != count * 8) {
    throw CodecError("length", "payload is " + std::to_string(r.remaining()) + " bytes, expected " +
                                   std::to_string(count * 8));
  }
  f.values.resize(count);
  for (double& v : f.values) v = r.f64("payload");
  return f;
}

Bytes encode_values(std::span<const double> values) {
  Writer w(values.size() * 8);
  for (double v : values) w.f64(v);
  return w.take();
}

std::vector<double> decode_values(std::span<const std::uint8_t> bytes, std::size_t expected_count) {
  if (bytes.size() != expected_count * 8) {
    throw CodecError("length", "expected " + std::to_string(expected_count * 8) + " bytes, got " +
                                   std::to_string(bytes.size()));
  }
  Reader r(bytes);
  std::vector<double> out(expected_count);
  for (double& v : out) v = r.f64("payload");
  return out;
}

Bytes encode_frame(std::uint32_t tag, std::span<const std::uint8_t> payload) {
  Writer w(kFrameHeaderSize + payload.size());
  w.u32(static_cast<std::uint32_t>(payload.size()));
  w.u32(tag);
  Bytes out = w.take();
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

FrameHeader decode_frame_header(std::span<const std::uint8_t, kFrameHeaderSize> bytes) {
  Reader r(bytes);
  FrameHeader h;
  h.length = r.u32("length");
  h.tag = r.u32("tag");
  return h;
}

}  // namespace swept
