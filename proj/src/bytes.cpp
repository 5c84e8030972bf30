#include "scale/bytes.hpp"

#include <limits>

#include "scale/error.hpp"

namespace scale {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::parameter: return "parameter";
    case ErrorCode::format: return "format";
    case ErrorCode::domain: return "domain";
    case ErrorCode::overflow: return "overflow";
    case ErrorCode::duplicate_id: return "duplicate_id";
    case ErrorCode::unknown_id: return "unknown_id";
    case ErrorCode::missing_sum: return "missing_sum";
    case ErrorCode::incomplete_query: return "incomplete_query";
    case ErrorCode::tamper: return "tamper";
    case ErrorCode::parse: return "parse";
    case ErrorCode::empty_dataset: return "empty_dataset";
    case ErrorCode::inconsistent_bundle: return "inconsistent_bundle";
    case ErrorCode::unknown_ooc: return "unknown_ooc";
    case ErrorCode::protocol: return "protocol";
    case ErrorCode::transport: return "transport";
    case ErrorCode::io: return "io";
    case ErrorCode::internal: return "internal";
  }
  return "unknown";
}

void put_be32(std::uint8_t* out, std::uint32_t v) {
  out[0] = static_cast<std::uint8_t>(v >> 24);
  out[1] = static_cast<std::uint8_t>(v >> 16);
  out[2] = static_cast<std::uint8_t>(v >> 8);
  out[3] = static_cast<std::uint8_t>(v);
}

std::uint32_t get_be32(const std::uint8_t* in) {
  return (std::uint32_t{in[0]} << 24) | (std::uint32_t{in[1]} << 16) |
         (std::uint32_t{in[2]} << 8) | std::uint32_t{in[3]};
}

void put_be64(std::uint8_t* out, std::uint64_t v) {
  put_be32(out, static_cast<std::uint32_t>(v >> 32));
  put_be32(out + 4, static_cast<std::uint32_t>(v));
}

std::uint64_t get_be64(const std::uint8_t* in) {
  return (std::uint64_t{get_be32(in)} << 32) | get_be32(in + 4);
}

void ByteWriter::u16(std::uint16_t v) {
  buf_.push_back(static_cast<std::uint8_t>(v >> 8));
  buf_.push_back(static_cast<std::uint8_t>(v));
}

void ByteWriter::u32(std::uint32_t v) {
  std::uint8_t b[4];
  put_be32(b, v);
  buf_.insert(buf_.end(), b, b + 4);
}

void ByteWriter::u64(std::uint64_t v) {
  std::uint8_t b[8];
  put_be64(b, v);
  buf_.insert(buf_.end(), b, b + 8);
}

void ByteWriter::blob(ByteView v) {
  if (v.size() > std::numeric_limits<std::uint32_t>::max()) {
    fail(ErrorCode::overflow, "blob longer than 2^32-1 bytes");
  }
  u32(static_cast<std::uint32_t>(v.size()));
  raw(v);
}

void ByteWriter::str(const std::string& s) {
  blob(ByteView(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

void ByteWriter::patch_u32(std::size_t pos, std::uint32_t v) {
  if (pos + 4 > buf_.size()) fail(ErrorCode::internal, "patch out of range");
  put_be32(buf_.data() + pos, v);
}

ByteView ByteReader::raw(std::size_t n) {
  if (n > remaining()) {
    fail(ErrorCode::format, "truncated input: need " + std::to_string(n) +
                                " bytes, have " + std::to_string(remaining()));
  }
  ByteView out = data_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t ByteReader::u8() { return raw(1)[0]; }

std::uint16_t ByteReader::u16() {
  ByteView b = raw(2);
  return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
}

std::uint32_t ByteReader::u32() { return get_be32(raw(4).data()); }
std::uint64_t ByteReader::u64() { return get_be64(raw(8).data()); }

ByteView ByteReader::blob() {
  std::uint32_t n = u32();
  return raw(n);
}

std::string ByteReader::str() {
  ByteView b = blob();
  return std::string(b.begin(), b.end());
}

void ByteReader::expect_done(const char* what) const {
  if (!done()) {
    fail(ErrorCode::format, std::string(what) + ": " +
                                std::to_string(remaining()) +
                                " trailing bytes");
  }
}

std::string to_hex(ByteView v) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(v.size() * 2);
  for (std::uint8_t b : v) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0xf]);
  }
  return out;
}

}  // namespace scale
