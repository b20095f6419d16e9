#pragma once

// Byte-exact encodings. All integers and IEEE-754 binary64 values are little
// endian regardless of host order.
//
// Panel message (28-byte header, then payload):
//   0  magic "SWP2"         4  version u16 = 1
//   6  side u8              7  orientation u8
//   8  n u32               12  start_step u64
//  20  arity u16           22  flags u8, then 5 zero bytes
// payload: levels in increasing k, each slab in its scan order, each state
// vector's components in order. When levels differ in arity, `arity` is 0,
// flag bit 0 is set and n/2 u16 per-level arities follow the header.
//
// Field snapshot (40-byte header, then row-major payload):
//   0  magic "SWF2"         4  version u16 = 1      6  reserved u16
//   8  width u32           12  height u32          16  step u64
//  24  shift x u32         28  shift y u32         32  arity u16
//  34  6 zero bytes
//
// TCP frame: u32 payload length, u32 tag, payload.

#include <cstdint>
#include <span>

#include "swept/grid.hpp"
#include "swept/transport.hpp"

namespace swept {

inline constexpr std::uint16_t kPanelVersion = 1;
inline constexpr std::size_t kPanelHeaderSize = 28;
inline constexpr std::uint16_t kFieldVersion = 1;
inline constexpr std::size_t kFieldHeaderSize = 40;
inline constexpr std::size_t kFrameHeaderSize = 8;

Bytes encode_panel(const Panel& panel);
Panel decode_panel(std::span<const std::uint8_t> bytes);

Bytes encode_field(const GlobalField& field);
GlobalField decode_field(std::span<const std::uint8_t> bytes);

/// Bare run of binary64 values (halo rows and columns).
Bytes encode_values(std::span<const double> values);
std::vector<double> decode_values(std::span<const std::uint8_t> bytes, std::size_t expected_count);

struct FrameHeader {
  std::uint32_t length = 0;
  std::uint32_t tag = 0;
};

Bytes encode_frame(std::uint32_t tag, std::span<const std::uint8_t> payload);
FrameHeader decode_frame_header(std::span<const std::uint8_t, kFrameHeaderSize> bytes);

}  // namespace swept
