#include "edgebot/wire.hpp"

#include <array>
#include <cmath>
#include <stdexcept>

namespace edgebot::wire {

namespace {

constexpr std::array<uint32_t, 256> make_crc_table() {
  std::array<uint32_t, 256> table{};
  for (uint32_t i = 0; i < 256; ++i) {
    uint32_t c = i;
    for (int k = 0; k < 8; ++k) {
      c = (c & 1u) ? 0xEDB88320u ^ (c >> 1) : (c >> 1);
    }
    table[i] = c;
  }
  return table;
}

constexpr auto kCrcTable = make_crc_table();

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v));
  out.push_back(static_cast<uint8_t>(v >> 8));
}

void put_u32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

uint16_t get_u16(const uint8_t* p) {
  return static_cast<uint16_t>(p[0] | (p[1] << 8));
}

uint32_t get_u32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

uint64_t get_u64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 7; i >= 0; --i) v = (v << 8) | p[i];
  return v;
}

size_t payload_size(const Frame& f) {
  switch (f.kind()) {
    case FrameKind::ImuBatch:
      return 2 + 12 * std::get<ImuBatchPayload>(f.payload).samples.size();
    case FrameKind::Rtt:
      return 5;
    case FrameKind::Command:
      return 10;
    case FrameKind::Heartbeat:
      return 0;
  }
  return 0;
}

}  // namespace

std::string_view to_string(DecodeError e) {
  switch (e) {
    case DecodeError::Truncated: return "Truncated";
    case DecodeError::CorruptFrame: return "CorruptFrame";
    case DecodeError::BadMagic: return "BadMagic";
    case DecodeError::BadVersion: return "BadVersion";
    case DecodeError::UnknownKind: return "UnknownKind";
    case DecodeError::MalformedPayload: return "MalformedPayload";
  }
  return "?";
}

uint32_t crc32(std::span<const uint8_t> bytes) {
  uint32_t c = 0xFFFFFFFFu;
  for (uint8_t b : bytes) {
    c = kCrcTable[(c ^ b) & 0xFFu] ^ (c >> 8);
  }
  return c ^ 0xFFFFFFFFu;
}

std::vector<uint8_t> encode_frame(const Frame& f) {
  const size_t plen = payload_size(f);
  if (plen > kMaxPayload) {
    throw std::length_error("encode_frame: payload exceeds 65535 bytes");
  }
  if (f.kind() == FrameKind::ImuBatch &&
      std::get<ImuBatchPayload>(f.payload).samples.empty()) {
    throw std::invalid_argument("encode_frame: empty ImuBatch");
  }

  std::vector<uint8_t> out;
  out.reserve(kHeaderSize + plen + kTrailerSize);
  put_u16(out, kMagic);
  out.push_back(kVersion);
  out.push_back(static_cast<uint8_t>(f.kind()));
  put_u32(out, f.seq);
  put_u64(out, f.timestamp_us);
  put_u16(out, static_cast<uint16_t>(plen));

  std::visit(
      [&out](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, ImuBatchPayload>) {
          put_u16(out, static_cast<uint16_t>(p.samples.size()));
          for (const auto& s : p.samples) {
            put_u32(out, s.dt_us);
            put_u32(out, static_cast<uint32_t>(s.dd_mm));
            put_u32(out, static_cast<uint32_t>(s.dtheta_urad));
          }
        } else if constexpr (std::is_same_v<T, RttPayload>) {
          out.push_back(p.ap_id);
          put_u32(out, p.range_mm);
        } else if constexpr (std::is_same_v<T, CommandPayload>) {
          put_u32(out, static_cast<uint32_t>(p.v_mmps));
          put_u32(out, static_cast<uint32_t>(p.omega_urad_ps));
          put_u16(out, p.duration_ms);
        }
      },
      f.payload);

  put_u32(out, crc32(std::span<const uint8_t>(out.data(), out.size())));
  return out;
}

DecodeOutcome decode_frame(std::span<const uint8_t> b) {
  if (b.size() < kHeaderSize + kTrailerSize) {
    return DecodeError::Truncated;
  }
  // CRC first, over everything but the trailer: a bit flip anywhere in a
  // valid encoding (header included) must surface as CorruptFrame.
  const uint32_t stored = get_u32(b.data() + b.size() - 4);
  if (crc32(b.first(b.size() - 4)) != stored) {
    return DecodeError::CorruptFrame;
  }
  if (get_u16(b.data()) != kMagic) {
    return DecodeError::BadMagic;
  }
  if (b[2] != kVersion) {
    return DecodeError::BadVersion;
  }
  const uint8_t kind = b[3];
  if (kind < 1 || kind > 4) {
    return DecodeError::UnknownKind;
  }
  const uint16_t plen = get_u16(b.data() + 16);
  if (b.size() != kHeaderSize + plen + kTrailerSize) {
    return DecodeError::Truncated;
  }

  Frame f;
  f.seq = get_u32(b.data() + 4);
  f.timestamp_us = get_u64(b.data() + 8);
  const uint8_t* p = b.data() + kHeaderSize;

  switch (static_cast<FrameKind>(kind)) {
    case FrameKind::ImuBatch: {
      if (plen < 2) return DecodeError::MalformedPayload;
      const uint16_t count = get_u16(p);
      if (count < 1 || plen != 2 + 12 * static_cast<size_t>(count)) {
        return DecodeError::MalformedPayload;
      }
      ImuBatchPayload batch;
      batch.samples.reserve(count);
      for (uint16_t i = 0; i < count; ++i) {
        const uint8_t* s = p + 2 + 12 * i;
        batch.samples.push_back({get_u32(s),
                                 static_cast<int32_t>(get_u32(s + 4)),
                                 static_cast<int32_t>(get_u32(s + 8))});
      }
      f.payload = std::move(batch);
      break;
    }
    case FrameKind::Rtt: {
      if (plen != 5) return DecodeError::MalformedPayload;
      f.payload = RttPayload{p[0], get_u32(p + 1)};
      break;
    }
    case FrameKind::Command: {
      if (plen != 10) return DecodeError::MalformedPayload;
      f.payload = CommandPayload{static_cast<int32_t>(get_u32(p)),
                                 static_cast<int32_t>(get_u32(p + 4)),
                                 get_u16(p + 8)};
      break;
    }
    case FrameKind::Heartbeat: {
      if (plen != 0) return DecodeError::MalformedPayload;
      f.payload = HeartbeatPayload{};
      break;
    }
  }
  return f;
}

int32_t to_mm(double meters) {
  return static_cast<int32_t>(std::lround(meters * 1000.0));
}

double from_mm(int32_t mm) { return mm * 1e-3; }

int32_t to_urad(double radians) {
  return static_cast<int32_t>(std::lround(radians * 1e6));
}

double from_urad(int32_t urad) { return urad * 1e-6; }

void FrameReader::push(std::span<const uint8_t> bytes) {
  buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<DecodeOutcome> FrameReader::next() {
  const size_t avail = buf_.size() - pos_;
  if (avail < kHeaderSize) return std::nullopt;
  const uint16_t plen = get_u16(buf_.data() + pos_ + 16);
  const size_t total = kHeaderSize + plen + kTrailerSize;
  if (avail < total) return std::nullopt;
  DecodeOutcome out =
      decode_frame(std::span<const uint8_t>(buf_.data() + pos_, total));
  pos_ += total;
  if (pos_ > (1u << 16)) {  // compact occasionally
    buf_.erase(buf_.begin(), buf_.begin() + static_cast<long>(pos_));
    pos_ = 0;
  }
  return out;
}

}  // namespace edgebot::wire
