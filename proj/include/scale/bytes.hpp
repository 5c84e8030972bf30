#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace scale {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

// Big-endian append-only encoder.
class ByteWriter {
 public:
  ByteWriter() = default;
  explicit ByteWriter(Bytes&& reuse) : buf_(std::move(reuse)) { buf_.clear(); }

  void u8(std::uint8_t v) { buf_.push_back(v); }
  void u16(std::uint16_t v);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void raw(ByteView v) { buf_.insert(buf_.end(), v.begin(), v.end()); }
  // u32 length followed by the bytes.
  void blob(ByteView v);
  void str(const std::string& s);

  void reserve(std::size_t n) { buf_.reserve(n); }
  std::size_t size() const { return buf_.size(); }
  // Overwrites four bytes at pos; used to patch section lengths.
  void patch_u32(std::size_t pos, std::uint32_t v);

  const Bytes& bytes() const { return buf_; }
  Bytes take() { return std::move(buf_); }

 private:
  Bytes buf_;
};

// Bounds-checked big-endian decoder. Any overrun throws ErrorCode::format.
class ByteReader {
 public:
  explicit ByteReader(ByteView data) : data_(data) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  ByteView raw(std::size_t n);
  ByteView blob();
  std::string str();

  std::size_t remaining() const { return data_.size() - pos_; }
  bool done() const { return pos_ == data_.size(); }
  // Throws unless every byte was consumed.
  void expect_done(const char* what) const;

 private:
  ByteView data_;
  std::size_t pos_ = 0;
};

void put_be32(std::uint8_t* out, std::uint32_t v);
std::uint32_t get_be32(const std::uint8_t* in);
void put_be64(std::uint8_t* out, std::uint64_t v);
std::uint64_t get_be64(const std::uint8_t* in);

std::string to_hex(ByteView v);

}  // namespace scale
