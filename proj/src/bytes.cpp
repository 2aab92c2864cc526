#include "i2v/bytes.hpp"

#include <bit>
#include <cstring>

#include "i2v/error.hpp"

namespace i2v {

std::string_view to_string(Errc code) {
  switch (code) {
    case Errc::OversizeBody: return "OversizeBody";
    case Errc::BadMagic: return "BadMagic";
    case Errc::BadVersion: return "BadVersion";
    case Errc::UnknownType: return "UnknownType";
    case Errc::TruncatedFrame: return "TruncatedFrame";
    case Errc::TrailingBytes: return "TrailingBytes";
    case Errc::Truncated: return "Truncated";
    case Errc::MalformedLength: return "MalformedLength";
    case Errc::WeakSalt: return "WeakSalt";
    case Errc::ShortNonce: return "ShortNonce";
    case Errc::AuthFailure: return "AuthFailure";
    case Errc::NonceReuse: return "NonceReuse";
    case Errc::BadKey: return "BadKey";
    case Errc::PreconditionViolation: return "PreconditionViolation";
    case Errc::UnknownEndpoint: return "UnknownEndpoint";
    case Errc::NonPositiveSpeed: return "NonPositiveSpeed";
    case Errc::UnknownVehicle: return "UnknownVehicle";
    case Errc::PoolExhausted: return "PoolExhausted";
    case Errc::MaxRetriesExceeded: return "MaxRetriesExceeded";
    case Errc::BadCredentials: return "BadCredentials";
    case Errc::ProtocolOrderViolation: return "ProtocolOrderViolation";
    case Errc::UnknownPeer: return "UnknownPeer";
    case Errc::ConfigParse: return "ConfigParse";
    case Errc::ConfigValidation: return "ConfigValidation";
    case Errc::CorruptTrace: return "CorruptTrace";
    case Errc::BindFailure: return "BindFailure";
    case Errc::BadKeyFile: return "BadKeyFile";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

std::string to_hex(ByteView bytes) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out;
  out.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    out.push_back(kDigits[b >> 4]);
    out.push_back(kDigits[b & 0x0f]);
  }
  return out;
}

namespace {
int nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}
}  // namespace

Bytes from_hex(std::string_view text) {
  if (text.size() % 2 != 0) throw Error(Errc::BadKeyFile, "odd-length hex string");
  Bytes out;
  out.reserve(text.size() / 2);
  for (std::size_t i = 0; i < text.size(); i += 2) {
    int hi = nibble(text[i]);
    int lo = nibble(text[i + 1]);
    if (hi < 0 || lo < 0) throw Error(Errc::BadKeyFile, "non-hex character");
    out.push_back(static_cast<std::uint8_t>((hi << 4) | lo));
  }
  return out;
}

ByteWriter& ByteWriter::u8(std::uint8_t v) {
  out_.push_back(v);
  return *this;
}

ByteWriter& ByteWriter::u16(std::uint16_t v) {
  out_.push_back(static_cast<std::uint8_t>(v >> 8));
  out_.push_back(static_cast<std::uint8_t>(v));
  return *this;
}

ByteWriter& ByteWriter::u32(std::uint32_t v) {
  for (int shift = 24; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
  return *this;
}

ByteWriter& ByteWriter::u64(std::uint64_t v) {
  for (int shift = 56; shift >= 0; shift -= 8) out_.push_back(static_cast<std::uint8_t>(v >> shift));
  return *this;
}

ByteWriter& ByteWriter::f64(double v) { return u64(std::bit_cast<std::uint64_t>(v)); }

ByteWriter& ByteWriter::raw(ByteView v) {
  out_.insert(out_.end(), v.begin(), v.end());
  return *this;
}

ByteWriter& ByteWriter::str8(std::string_view s) {
  if (s.size() > 0xff) throw Error(Errc::MalformedLength, "string longer than 255 bytes");
  u8(static_cast<std::uint8_t>(s.size()));
  out_.insert(out_.end(), s.begin(), s.end());
  return *this;
}

ByteWriter& ByteWriter::bytes16(ByteView v) {
  if (v.size() > 0xffff) throw Error(Errc::MalformedLength, "field longer than 65535 bytes");
  u16(static_cast<std::uint16_t>(v.size()));
  return raw(v);
}

ByteView ByteReader::raw(std::size_t n) {
  if (n > remaining()) throw Error(Errc::Truncated);
  auto out = in_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t ByteReader::u8() { return raw(1)[0]; }

std::uint16_t ByteReader::u16() {
  auto b = raw(2);
  return static_cast<std::uint16_t>((b[0] << 8) | b[1]);
}

std::uint32_t ByteReader::u32() {
  auto b = raw(4);
  std::uint32_t v = 0;
  for (auto x : b) v = (v << 8) | x;
  return v;
}

std::uint64_t ByteReader::u64() {
  auto b = raw(8);
  std::uint64_t v = 0;
  for (auto x : b) v = (v << 8) | x;
  return v;
}

double ByteReader::f64() { return std::bit_cast<double>(u64()); }

std::string ByteReader::str8() {
  auto n = u8();
  auto b = raw(n);
  return std::string(b.begin(), b.end());
}

Bytes ByteReader::bytes16() {
  auto n = u16();
  auto b = raw(n);
  return Bytes(b.begin(), b.end());
}

void ByteReader::expect_end() const {
  if (remaining() != 0) throw Error(Errc::MalformedLength, "unexpected trailing bytes");
}

}  // namespace i2v
