#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace i2v {

// Every failure the library reports carries one of these codes. Decoders,
// handshakes and config loaders all throw i2v::Error; callers switch on code().
enum class Errc {
  // wire
  OversizeBody,
  BadMagic,
  BadVersion,
  UnknownType,
  TruncatedFrame,
  TrailingBytes,
  Truncated,
  MalformedLength,
  // crypto
  WeakSalt,
  ShortNonce,
  AuthFailure,
  NonceReuse,
  BadKey,
  // policy / mobility / transport
  PreconditionViolation,
  UnknownEndpoint,
  NonPositiveSpeed,
  // addressing
  UnknownVehicle,
  PoolExhausted,
  MaxRetriesExceeded,
  // sessions
  BadCredentials,
  ProtocolOrderViolation,
  UnknownPeer,
  // tooling
  ConfigParse,
  ConfigValidation,
  CorruptTrace,
  BindFailure,
  BadKeyFile,
  Io,
};

std::string_view to_string(Errc code);

class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& detail)
      : std::runtime_error(std::string(to_string(code)) + (detail.empty() ? "" : ": " + detail)),
        code_(code) {}
  explicit Error(Errc code) : Error(code, "") {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace i2v
