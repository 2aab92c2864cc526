#include "i2v/wire.hpp"

#include <array>
#include <utility>

#include "i2v/error.hpp"

namespace i2v::wire {

namespace {

constexpr std::array<std::pair<MessageType, std::string_view>, 16> kNames = {{
    {MessageType::Hello, "HELLO"},
    {MessageType::Auth, "AUTH"},
    {MessageType::AuthOk, "AUTH_OK"},
    {MessageType::Register, "REGISTER"},
    {MessageType::RegisterOk, "REGISTER_OK"},
    {MessageType::Beacon, "BEACON"},
    {MessageType::Hazard, "HAZARD"},
    {MessageType::HazardBcast, "HAZARD_BCAST"},
    {MessageType::PeerList, "PEER_LIST"},
    {MessageType::Relay, "RELAY"},
    {MessageType::Disconnect, "DISCONNECT"},
    {MessageType::AddrDiscover, "ADDR_DISCOVER"},
    {MessageType::AddrOffer, "ADDR_OFFER"},
    {MessageType::AddrRequest, "ADDR_REQUEST"},
    {MessageType::AddrAck, "ADDR_ACK"},
    {MessageType::Error, "ERROR"},
}};

}  // namespace

std::optional<MessageType> message_type_from_code(std::uint8_t code) {
  if ((code >= 1 && code <= 15) || code == 255) return static_cast<MessageType>(code);
  return std::nullopt;
}

std::optional<MessageType> message_type_from_name(std::string_view name) {
  for (const auto& [type, n] : kNames)
    if (n == name) return type;
  return std::nullopt;
}

std::string_view to_string(MessageType t) {
  for (const auto& [type, n] : kNames)
    if (type == t) return n;
  return "UNKNOWN";
}

bool is_plain_type(MessageType t) {
  switch (t) {
    case MessageType::Hello:
    case MessageType::Auth:
    case MessageType::AuthOk:
    case MessageType::AddrDiscover:
    case MessageType::AddrOffer:
    case MessageType::AddrRequest:
    case MessageType::AddrAck:
    case MessageType::Error:
      return true;
    default:
      return false;
  }
}

Bytes encode_frame(MessageType type, ByteView body) {
  if (body.size() > kMaxFrameBody)
    throw Error(Errc::OversizeBody, std::to_string(body.size()) + " bytes");
  ByteWriter w;
  w.u8(kMagic0).u8(kMagic1).u8(kVersion).u8(static_cast<std::uint8_t>(type));
  w.u32(static_cast<std::uint32_t>(body.size()));
  w.raw(body);
  return w.take();
}

FrameHeader decode_frame_header(ByteView header) {
  if (header.size() < kFrameHeaderSize) throw Error(Errc::TruncatedFrame, "short header");
  if (header[0] != kMagic0 || header[1] != kMagic1) throw Error(Errc::BadMagic);
  if (header[2] != kVersion) throw Error(Errc::BadVersion);
  auto type = message_type_from_code(header[3]);
  if (!type) throw Error(Errc::UnknownType, std::to_string(header[3]));
  ByteReader r(header.subspan(4, 4));
  auto length = r.u32();
  if (length > kMaxFrameBody) throw Error(Errc::OversizeBody, std::to_string(length) + " bytes");
  return {*type, length};
}

Frame decode_frame(ByteView bytes) {
  auto header = decode_frame_header(bytes);
  auto body = bytes.subspan(kFrameHeaderSize);
  if (body.size() < header.length) throw Error(Errc::TruncatedFrame);
  if (body.size() > header.length) throw Error(Errc::TrailingBytes);
  return {header.type, Bytes(body.begin(), body.end())};
}

Bytes envelope_associated_data(const Envelope& env) {
  ByteWriter w;
  w.raw(env.sender.view()).u64(env.sequence).i64(env.timestamp);
  w.u8(static_cast<std::uint8_t>(env.payload_type));
  return w.take();
}

Bytes envelope_signed_bytes(const Envelope& env) {
  ByteWriter w;
  w.raw(envelope_associated_data(env));
  w.u32(static_cast<std::uint32_t>(env.sealed_payload.size()));
  w.u16(static_cast<std::uint16_t>(kEnvelopeSignatureSize));
  w.raw(env.sealed_payload);
  return w.take();
}

Bytes encode_envelope(const Envelope& env) {
  if (env.signature.size() != kEnvelopeSignatureSize)
    throw Error(Errc::MalformedLength, "signature must be 64 bytes");
  if (env.sealed_payload.size() < kMinSealedSize || env.sealed_payload.size() > kMaxFrameBody)
    throw Error(Errc::MalformedLength, "sealed payload size out of range");
  auto out = envelope_signed_bytes(env);
  out.insert(out.end(), env.signature.begin(), env.signature.end());
  return out;
}

Envelope decode_envelope(ByteView bytes) {
  // Length fields are validated before anything else so that a shifted read
  // always trips a structural check (see FORMAT.md, "deletion safety").
  if (bytes.size() < kEnvelopePrefixSize) throw Error(Errc::Truncated);
  ByteReader lengths(bytes.subspan(kEnvelopeHeaderSize, 6));
  const std::uint32_t sealed_len = lengths.u32();
  const std::uint16_t sig_len = lengths.u16();
  if (sig_len != kEnvelopeSignatureSize) throw Error(Errc::MalformedLength, "signature length");
  if (sealed_len < kMinSealedSize || sealed_len > kMaxFrameBody)
    throw Error(Errc::MalformedLength, "sealed payload length");
  const std::size_t expected = kEnvelopePrefixSize + sealed_len + sig_len;
  if (bytes.size() < expected) throw Error(Errc::Truncated);
  if (bytes.size() > expected) throw Error(Errc::MalformedLength, "trailing bytes");

  ByteReader r(bytes);
  Envelope env;
  env.sender = r.token<Pseudonym>();
  env.sequence = r.u64();
  env.timestamp = r.i64();
  auto type = message_type_from_code(r.u8());
  if (!type) throw Error(Errc::UnknownType, "envelope payload type");
  env.payload_type = *type;
  r.raw(6);
  auto sealed = r.raw(sealed_len);
  env.sealed_payload.assign(sealed.begin(), sealed.end());
  auto sig = r.raw(sig_len);
  env.signature.assign(sig.begin(), sig.end());
  return env;
}

Bytes encode_error_body(Errc code, std::string_view reason) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(code)).str8(reason.substr(0, 255));
  return w.take();
}

std::pair<Errc, std::string> decode_error_body(ByteView body) {
  ByteReader r(body);
  auto code = r.u8();
  auto reason = r.str8();
  r.expect_end();
  if (code > static_cast<std::uint8_t>(Errc::Io)) throw Error(Errc::MalformedLength, "error code");
  return {static_cast<Errc>(code), reason};
}

}  // namespace i2v::wire
