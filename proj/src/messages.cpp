#include "i2v/messages.hpp"

#include <algorithm>

#include "i2v/error.hpp"

namespace i2v::msg {

namespace {

template <std::size_t N>
std::array<std::uint8_t, N> read_array(ByteReader& r) {
  std::array<std::uint8_t, N> out{};
  auto v = r.raw(N);
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

void write_vec(ByteWriter& w, const Vec2& v) { w.f64(v.x()).f64(v.y()); }

Vec2 read_vec(ByteReader& r) {
  const double x = r.f64();
  const double y = r.f64();
  return {x, y};
}

addressing::Address read_address(ByteReader& r) { return {read_array<4>(r)}; }

crypto::SymmetricKey to_key(const Bytes& b) {
  crypto::SymmetricKey k{};
  std::copy_n(b.begin(), k.size(), k.begin());
  return k;
}

}  // namespace

Bytes encode(const Auth& m) {
  ByteWriter w;
  w.str8(m.username).raw(m.client_nonce).bytes16(m.sealed);
  return w.take();
}

Bytes encode(const AuthSecret& m) {
  ByteWriter w;
  w.str8(m.password).bytes16(m.public_key);
  return w.take();
}

Bytes encode(const AuthOk& m) {
  ByteWriter w;
  w.raw(m.server_nonce).raw(m.session_id.view()).bytes16(m.sealed);
  return w.take();
}

Bytes encode(const Grant& m) {
  ByteWriter w;
  w.bytes16(m.rsu_public_key).raw(m.rsu_pseudonym.view()).u8(static_cast<std::uint8_t>(m.role));
  return w.take();
}

Bytes encode(const Register& m) {
  ByteWriter w;
  w.str8(m.license).str8(m.name).f64(m.speed);
  write_vec(w, m.position);
  return w.take();
}

Bytes encode(const RegisterOk& m) {
  if (m.pseudonyms.empty() || m.pseudonyms.size() > 255)
    throw Error(Errc::MalformedLength, "pseudonym batch size");
  ByteWriter w;
  w.raw(m.address.octets).raw(m.group_key).u8(static_cast<std::uint8_t>(m.pseudonyms.size()));
  for (const auto& p : m.pseudonyms) w.raw(p.view());
  w.i64(m.expires_at);
  return w.take();
}

Bytes encode(const Beacon& m) {
  ByteWriter w;
  w.f64(m.speed);
  write_vec(w, m.position);
  return w.take();
}

Bytes encode(const HazardReport& m) {
  ByteWriter w;
  w.u8(static_cast<std::uint8_t>(m.kind));
  write_vec(w, m.location);
  w.u8(static_cast<std::uint8_t>(m.severity)).str8(m.description);
  return w.take();
}

Bytes encode(const HazardBroadcast& m) {
  ByteWriter w;
  w.raw(m.origin.view()).u64(m.origin_sequence).u8(m.priority ? 1 : 0).raw(encode(m.hazard));
  return w.take();
}

Bytes encode(const PeerList& m) {
  if (m.peers.size() > 0xffff) throw Error(Errc::MalformedLength, "peer list too long");
  ByteWriter w;
  w.u16(static_cast<std::uint16_t>(m.peers.size()));
  for (const auto& p : m.peers) w.raw(p.pseudonym.view()).bytes16(p.public_key);
  return w.take();
}

Bytes encode(const Relay& m) {
  ByteWriter w;
  w.raw(m.peer.view()).bytes16(m.payload);
  return w.take();
}

Auth decode_auth(ByteView b) {
  ByteReader r(b);
  Auth m;
  m.username = r.str8();
  m.client_nonce = read_array<kHandshakeNonceSize>(r);
  m.sealed = r.bytes16();
  r.expect_end();
  return m;
}

AuthSecret decode_auth_secret(ByteView b) {
  ByteReader r(b);
  AuthSecret m;
  m.password = r.str8();
  m.public_key = r.bytes16();
  r.expect_end();
  return m;
}

AuthOk decode_auth_ok(ByteView b) {
  ByteReader r(b);
  AuthOk m;
  m.server_nonce = read_array<kHandshakeNonceSize>(r);
  m.session_id = r.token<SessionId>();
  m.sealed = r.bytes16();
  r.expect_end();
  return m;
}

Grant decode_grant(ByteView b) {
  ByteReader r(b);
  Grant m;
  m.rsu_public_key = r.bytes16();
  m.rsu_pseudonym = r.token<Pseudonym>();
  const auto role = r.u8();
  if (role > static_cast<std::uint8_t>(policy::Role::EmergencyObu)) throw Error(Errc::MalformedLength, "role");
  m.role = static_cast<policy::Role>(role);
  r.expect_end();
  return m;
}

Register decode_register(ByteView b) {
  ByteReader r(b);
  Register m;
  m.license = r.str8();
  m.name = r.str8();
  m.speed = r.f64();
  m.position = read_vec(r);
  r.expect_end();
  return m;
}

RegisterOk decode_register_ok(ByteView b) {
  ByteReader r(b);
  RegisterOk m;
  m.address = read_address(r);
  m.group_key = read_array<crypto::kKeySize>(r);
  const auto n = r.u8();
  if (n == 0) throw Error(Errc::MalformedLength, "empty pseudonym batch");
  for (int i = 0; i < n; ++i) m.pseudonyms.push_back(r.token<Pseudonym>());
  m.expires_at = r.i64();
  r.expect_end();
  return m;
}

Beacon decode_beacon(ByteView b) {
  ByteReader r(b);
  Beacon m;
  m.speed = r.f64();
  m.position = read_vec(r);
  r.expect_end();
  return m;
}

namespace {

HazardReport read_hazard(ByteReader& r) {
  HazardReport m;
  const auto kind = r.u8();
  if (kind > static_cast<std::uint8_t>(HazardKind::Other)) throw Error(Errc::MalformedLength, "hazard kind");
  m.kind = static_cast<HazardKind>(kind);
  m.location = read_vec(r);
  m.severity = r.u8();
  m.description = r.str8();
  return m;
}

}  // namespace

HazardReport decode_hazard(ByteView b) {
  ByteReader r(b);
  auto m = read_hazard(r);
  r.expect_end();
  return m;
}

HazardBroadcast decode_hazard_broadcast(ByteView b) {
  ByteReader r(b);
  HazardBroadcast m;
  m.origin = r.token<Pseudonym>();
  m.origin_sequence = r.u64();
  m.priority = r.u8() != 0;
  m.hazard = read_hazard(r);
  r.expect_end();
  return m;
}

PeerList decode_peer_list(ByteView b) {
  ByteReader r(b);
  PeerList m;
  const auto n = r.u16();
  for (int i = 0; i < n; ++i) {
    PeerEntry e;
    e.pseudonym = r.token<Pseudonym>();
    e.public_key = r.bytes16();
    m.peers.push_back(std::move(e));
  }
  r.expect_end();
  return m;
}

Relay decode_relay(ByteView b) {
  ByteReader r(b);
  Relay m;
  m.peer = r.token<Pseudonym>();
  m.payload = r.bytes16();
  r.expect_end();
  return m;
}

crypto::SymmetricKey auth_key(ByteView psk, ByteView client_nonce) {
  return to_key(crypto::derive_key(psk, client_nonce, "i2v auth", crypto::kKeySize));
}

crypto::SymmetricKey v2v_key(const crypto::SymmetricKey& group_key, const Pseudonym& sender) {
  return to_key(crypto::derive_key(group_key, sender.view(), "i2v v2v", crypto::kKeySize));
}

}  // namespace i2v::msg
