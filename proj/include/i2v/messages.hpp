#pragma once

// Message bodies. HELLO / AUTH / AUTH_OK travel as plain frame bodies; every
// other struct here is the plaintext sealed inside an Envelope. All decoders
// throw Error(Truncated) or Error(MalformedLength) on malformed input.

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "i2v/addressing.hpp"
#include "i2v/bytes.hpp"
#include "i2v/crypto.hpp"
#include "i2v/domain.hpp"
#include "i2v/policy.hpp"

namespace i2v::msg {

inline constexpr std::size_t kHandshakeNonceSize = 32;
using HandshakeNonce = std::array<std::uint8_t, kHandshakeNonceSize>;

/// AUTH: username | client nonce | sealed(AuthSecret) under the pre-shared-key derived auth key.
struct Auth {
  std::string username;
  HandshakeNonce client_nonce{};
  Bytes sealed;
};

struct AuthSecret {
  std::string password;
  Bytes public_key;
};

/// AUTH_OK: server nonce | session id | sealed(Grant) under the new session key.
struct AuthOk {
  HandshakeNonce server_nonce{};
  SessionId session_id;
  Bytes sealed;
};

struct Grant {
  Bytes rsu_public_key;
  Pseudonym rsu_pseudonym;
  policy::Role role = policy::Role::Obu;
};

struct Register {
  std::string license;
  std::string name;
  double speed = 0.0;
  Vec2 position = Vec2::Zero();
};

struct RegisterOk {
  addressing::Address address;
  crypto::SymmetricKey group_key{};
  std::vector<Pseudonym> pseudonyms;  // at least one
  Millis expires_at = 0;
};

struct Beacon {
  double speed = 0.0;
  Vec2 position = Vec2::Zero();
};

/// Hazard as rebroadcast by the RSU, tagged with where it came from.
struct HazardBroadcast {
  Pseudonym origin;
  std::uint64_t origin_sequence = 0;
  bool priority = false;
  HazardReport hazard;
};

struct PeerEntry {
  Pseudonym pseudonym;
  Bytes public_key;
};

struct PeerList {
  std::vector<PeerEntry> peers;
};

/// RELAY towards the RSU names the destination; from the RSU it names the source.
struct Relay {
  Pseudonym peer;
  Bytes payload;
};

Bytes encode(const Auth& m);
Bytes encode(const AuthSecret& m);
Bytes encode(const AuthOk& m);
Bytes encode(const Grant& m);
Bytes encode(const Register& m);
Bytes encode(const RegisterOk& m);
Bytes encode(const Beacon& m);
Bytes encode(const HazardReport& m);
Bytes encode(const HazardBroadcast& m);
Bytes encode(const PeerList& m);
Bytes encode(const Relay& m);

Auth decode_auth(ByteView b);
AuthSecret decode_auth_secret(ByteView b);
AuthOk decode_auth_ok(ByteView b);
Grant decode_grant(ByteView b);
Register decode_register(ByteView b);
RegisterOk decode_register_ok(ByteView b);
Beacon decode_beacon(ByteView b);
HazardReport decode_hazard(ByteView b);
HazardBroadcast decode_hazard_broadcast(ByteView b);
PeerList decode_peer_list(ByteView b);
Relay decode_relay(ByteView b);

/// Key protecting the AUTH secret: HKDF(psk, client nonce, "i2v auth").
crypto::SymmetricKey auth_key(ByteView psk, ByteView client_nonce);

/// Per-sender key for direct V2V traffic: HKDF(group key, sender pseudonym, "i2v v2v").
crypto::SymmetricKey v2v_key(const crypto::SymmetricKey& group_key, const Pseudonym& sender);

}  // namespace i2v::msg
