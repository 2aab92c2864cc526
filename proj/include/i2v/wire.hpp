#pragma once

// On-wire format. See docs/FORMAT.md for the byte layout with worked examples.

#include <cstdint>
#include <optional>
#include <string_view>

#include "i2v/bytes.hpp"
#include "i2v/domain.hpp"
#include "i2v/error.hpp"

namespace i2v::wire {

enum class MessageType : std::uint8_t {
  Hello = 1,
  Auth = 2,
  AuthOk = 3,
  Register = 4,
  RegisterOk = 5,
  Beacon = 6,
  Hazard = 7,
  HazardBcast = 8,
  PeerList = 9,
  Relay = 10,
  Disconnect = 11,
  AddrDiscover = 12,
  AddrOffer = 13,
  AddrRequest = 14,
  AddrAck = 15,
  Error = 255,
};

inline constexpr std::uint8_t kMagic0 = 0x56;
inline constexpr std::uint8_t kMagic1 = 0x43;
inline constexpr std::uint8_t kVersion = 1;
inline constexpr std::size_t kFrameHeaderSize = 8;
inline constexpr std::size_t kMaxFrameBody = 65536;

inline constexpr std::size_t kEnvelopeHeaderSize = 25;  // pseudonym, sequence, timestamp, type
inline constexpr std::size_t kEnvelopePrefixSize = 31;  // header + sealed length + signature length
inline constexpr std::size_t kEnvelopeSignatureSize = 64;
inline constexpr std::size_t kMinSealedSize = 16;  // an AEAD tag with empty plaintext

std::optional<MessageType> message_type_from_code(std::uint8_t code);
std::optional<MessageType> message_type_from_name(std::string_view name);
std::string_view to_string(MessageType t);

/// Types exchanged before a session key exists; they travel as bare frames.
/// Everything else is an Envelope.
bool is_plain_type(MessageType t);

struct Frame {
  MessageType type;
  Bytes body;

  bool operator==(const Frame&) const = default;
};

struct FrameHeader {
  MessageType type;
  std::uint32_t length;
};

/// magic | version | type | u32 length | body. Throws Error(OversizeBody).
Bytes encode_frame(MessageType type, ByteView body);

/// Errors: BadMagic, BadVersion, UnknownType, OversizeBody, TruncatedFrame, TrailingBytes.
Frame decode_frame(ByteView bytes);

/// Validates the first kFrameHeaderSize bytes only; used by stream readers.
FrameHeader decode_frame_header(ByteView header);

struct Envelope {
  Pseudonym sender;
  std::uint64_t sequence = 0;
  Millis timestamp = 0;
  MessageType payload_type = MessageType::Hello;
  Bytes sealed_payload;
  Bytes signature;

  bool operator==(const Envelope&) const = default;
};

/// Bytes authenticated (not encrypted) by the AEAD: sender | sequence | timestamp | type.
Bytes envelope_associated_data(const Envelope& env);

/// Everything the signature covers: all fields up to and including the sealed payload.
Bytes envelope_signed_bytes(const Envelope& env);

Bytes encode_envelope(const Envelope& env);

/// Errors: Truncated, MalformedLength, UnknownType. A single deleted byte anywhere
/// in a valid encoding always yields Truncated or MalformedLength.
Envelope decode_envelope(ByteView bytes);

/// ERROR frame body: u8 error code | u8 length | reason.
Bytes encode_error_body(Errc code, std::string_view reason);
std::pair<Errc, std::string> decode_error_body(ByteView body);

}  // namespace i2v::wire
