#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace i2v {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

std::string to_hex(ByteView bytes);

// Throws Error(Errc::BadKeyFile) on odd length or non-hex characters.
Bytes from_hex(std::string_view text);

inline Bytes to_bytes(std::string_view s) { return Bytes(s.begin(), s.end()); }

/// Fixed-width opaque token. Tag keeps pseudonyms and session ids apart.
template <std::size_t N, typename Tag>
struct Token {
  static constexpr std::size_t size = N;
  std::array<std::uint8_t, N> bytes{};

  ByteView view() const { return bytes; }
  std::string hex() const { return to_hex(bytes); }

  static Token from(ByteView src) {
    Token t;
    for (std::size_t i = 0; i < N && i < src.size(); ++i) t.bytes[i] = src[i];
    return t;
  }

  auto operator<=>(const Token&) const = default;
  bool operator==(const Token&) const = default;
};

using Pseudonym = Token<8, struct PseudonymTag>;
using SessionId = Token<8, struct SessionIdTag>;

/// Big-endian append-only encoder.
class ByteWriter {
 public:
  ByteWriter& u8(std::uint8_t v);
  ByteWriter& u16(std::uint16_t v);
  ByteWriter& u32(std::uint32_t v);
  ByteWriter& u64(std::uint64_t v);
  ByteWriter& i64(std::int64_t v) { return u64(static_cast<std::uint64_t>(v)); }
  ByteWriter& f64(double v);
  ByteWriter& raw(ByteView v);
  // Length-prefixed fields; throw Error(MalformedLength) if the value does not fit.
  ByteWriter& str8(std::string_view s);
  ByteWriter& bytes16(ByteView v);

  const Bytes& data() const { return out_; }
  Bytes take() { return std::move(out_); }

 private:
  Bytes out_;
};

/// Big-endian cursor. Every read past the end throws Error(Errc::Truncated).
class ByteReader {
 public:
  explicit ByteReader(ByteView in) : in_(in) {}

  std::uint8_t u8();
  std::uint16_t u16();
  std::uint32_t u32();
  std::uint64_t u64();
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64();
  ByteView raw(std::size_t n);
  std::string str8();
  Bytes bytes16();

  template <typename T>
  T token() {
    return T::from(raw(T::size));
  }

  std::size_t remaining() const { return in_.size() - pos_; }
  std::size_t position() const { return pos_; }
  // Throws Error(Errc::MalformedLength) if unread bytes remain.
  void expect_end() const;

 private:
  ByteView in_;
  std::size_t pos_ = 0;
};

}  // namespace i2v
