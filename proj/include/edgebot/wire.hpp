#pragma once

// Binary framing for robot<->edge telemetry. Little-endian, fixed-point
// payloads, CRC-32 trailer over header+payload. The byte layout is the
// external interface; see docs/protocol.md for the golden vectors.

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

namespace edgebot::wire {

inline constexpr uint16_t kMagic = 0xED6E;
inline constexpr uint8_t kVersion = 1;
inline constexpr size_t kHeaderSize = 18;   // magic u16, ver u8, kind u8, seq u32, t u64, len u16
inline constexpr size_t kTrailerSize = 4;   // CRC-32
inline constexpr size_t kMaxPayload = 65535;

enum class FrameKind : uint8_t {
  ImuBatch = 1,
  Rtt = 2,
  Command = 3,
  Heartbeat = 4,
};

struct ImuSampleFx {
  uint32_t dt_us = 0;       // interval ending at this sample
  int32_t dd_mm = 0;        // body-frame forward increment
  int32_t dtheta_urad = 0;  // heading increment
  bool operator==(const ImuSampleFx&) const = default;
};

struct ImuBatchPayload {
  std::vector<ImuSampleFx> samples;  // count >= 1
  bool operator==(const ImuBatchPayload&) const = default;
};

struct RttPayload {
  uint8_t ap_id = 0;
  uint32_t range_mm = 0;
  bool operator==(const RttPayload&) const = default;
};

struct CommandPayload {
  int32_t v_mmps = 0;
  int32_t omega_urad_ps = 0;
  uint16_t duration_ms = 0;
  bool operator==(const CommandPayload&) const = default;
};

struct HeartbeatPayload {
  bool operator==(const HeartbeatPayload&) const = default;
};

struct Frame {
  uint32_t seq = 0;
  uint64_t timestamp_us = 0;
  std::variant<ImuBatchPayload, RttPayload, CommandPayload, HeartbeatPayload> payload;

  FrameKind kind() const {
    return static_cast<FrameKind>(payload.index() + 1);
  }
  bool operator==(const Frame&) const = default;
};

enum class DecodeError {
  Truncated,         // too short, or length inconsistent with payload_len
  CorruptFrame,      // CRC mismatch
  BadMagic,
  BadVersion,
  UnknownKind,
  MalformedPayload,  // payload_len inconsistent with kind-specific contents
};

std::string_view to_string(DecodeError e);

using DecodeOutcome = std::variant<Frame, DecodeError>;

// Reflected CRC-32 (IEEE 802.3, poly 0xEDB88320, init/final 0xFFFFFFFF).
uint32_t crc32(std::span<const uint8_t> bytes);

// Throws std::invalid_argument on an empty ImuBatch, std::length_error if
// the payload would exceed 65535 bytes.
std::vector<uint8_t> encode_frame(const Frame& f);

// Accepts exactly one encoded frame. CRC is verified before any header
// field, so any bit corruption of a valid encoding reports CorruptFrame.
DecodeOutcome decode_frame(std::span<const uint8_t> bytes);

// Fixed-point conversions (quantum: 1 mm, 1 urad, 1 ms). Round to nearest.
int32_t to_mm(double meters);
double from_mm(int32_t mm);
int32_t to_urad(double radians);
double from_urad(int32_t urad);

// Incremental splitter for an ordered byte stream of frames.
class FrameReader {
 public:
  void push(std::span<const uint8_t> bytes);
  // One decoded frame, a decode error, or nothing (need more bytes).
  std::optional<DecodeOutcome> next();

 private:
  std::vector<uint8_t> buf_;
  size_t pos_ = 0;
};

}  // namespace edgebot::wire
