#pragma once

// Security primitives. The cipher, KDFs and signature scheme come from OpenSSL
// (AES-256-GCM, HKDF-SHA256, PBKDF2-HMAC-SHA256, Ed25519); freshness, replay
// and nonce discipline are implemented here.

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "i2v/bytes.hpp"
#include "i2v/domain.hpp"
#include "i2v/random.hpp"

typedef struct evp_pkey_st EVP_PKEY;

namespace i2v::crypto {

inline constexpr std::size_t kKeySize = 32;
inline constexpr std::size_t kNonceSize = 12;
inline constexpr std::size_t kTagSize = 16;
inline constexpr std::size_t kSignatureSize = 64;
inline constexpr std::size_t kPublicKeySize = 32;
inline constexpr std::size_t kSeedSize = 32;
inline constexpr std::size_t kMinSaltSize = 16;
inline constexpr std::size_t kMinHandshakeNonce = 16;
inline constexpr std::uint32_t kDefaultPasswordIterations = 20000;

static_assert(kPublicKeySize == kVerificationKeySize);

// ---------------------------------------------------------------------------
// Passwords

struct PasswordRecord {
  std::uint32_t iterations = kDefaultPasswordIterations;
  Bytes salt;
  Bytes hash;

  Bytes serialize() const;
  static PasswordRecord parse(ByteView bytes);  // throws Error(BadKeyFile)
};

/// PBKDF2-HMAC-SHA256. Throws Error(WeakSalt) when salt < 16 bytes.
PasswordRecord hash_password(std::string_view password, ByteView salt,
                             std::uint32_t iterations = kDefaultPasswordIterations);

/// Recomputes and compares in constant time over the digest.
bool verify_password(std::string_view password, const PasswordRecord& record);

struct Credential {
  std::string username;
  PasswordRecord record;
};

// ---------------------------------------------------------------------------
// Keys

using SymmetricKey = std::array<std::uint8_t, kKeySize>;

struct SessionKey {
  SymmetricKey key_bytes{};
  Millis established_at = 0;
  SessionId session_id;
};

/// HKDF-SHA256 expand of (ikm, salt, info) to `length` bytes.
Bytes derive_key(ByteView ikm, ByteView salt, std::string_view info, std::size_t length);

/// Key and session id from HKDF(shared_secret, client_nonce | server_nonce).
/// Throws Error(ShortNonce) if either nonce < 16 bytes, Error(BadKey) on empty secret.
SessionKey establish_session(ByteView client_nonce, ByteView server_nonce, ByteView shared_secret,
                             Millis now = 0);

// ---------------------------------------------------------------------------
// Authenticated encryption

/// Nonce domains keep the two directions of a session, the V2V group traffic
/// and the handshake from ever sharing a (key, nonce) pair.
enum class NonceDomain : std::uint8_t { ObuToRsu = 1, RsuToObu = 2, V2v = 3, Handshake = 4 };

std::array<std::uint8_t, kNonceSize> make_nonce(NonceDomain domain, std::uint64_t counter);

/// AES-256-GCM. Output is ciphertext followed by the 16-byte tag.
Bytes seal(ByteView key, ByteView associated_data, ByteView plaintext, ByteView nonce);
inline Bytes seal(const SessionKey& key, ByteView ad, ByteView plaintext, ByteView nonce) {
  return seal(key.key_bytes, ad, plaintext, nonce);
}

/// Throws Error(AuthFailure) on any tampering or a wrong key.
Bytes open(ByteView key, ByteView associated_data, ByteView sealed, ByteView nonce);
inline Bytes open(const SessionKey& key, ByteView ad, ByteView sealed, ByteView nonce) {
  return open(key.key_bytes, ad, sealed, nonce);
}

/// Enforces strictly increasing counters for one (key, domain) pair.
class Sealer {
 public:
  Sealer(SymmetricKey key, NonceDomain domain) : key_(key), domain_(domain) {}

  /// Throws Error(NonceReuse) if counter is not above every counter used before.
  Bytes seal(ByteView associated_data, ByteView plaintext, std::uint64_t counter);

 private:
  SymmetricKey key_;
  NonceDomain domain_;
  std::optional<std::uint64_t> last_;
};

// ---------------------------------------------------------------------------
// Signatures

class SigningKey {
 public:
  static SigningKey generate(RandomSource& rng);
  /// Throws Error(BadKey) unless seed is 32 bytes.
  static SigningKey from_seed(ByteView seed);

  Bytes sign(ByteView message) const;
  const Bytes& public_key() const { return public_key_; }
  const Bytes& seed() const { return seed_; }

 private:
  SigningKey() = default;
  std::shared_ptr<EVP_PKEY> pkey_;
  Bytes seed_;
  Bytes public_key_;
};

/// Never throws; malformed keys or signatures simply fail.
bool verify(ByteView public_key, ByteView message, ByteView signature);

// ---------------------------------------------------------------------------
// Freshness and replay

struct FreshnessPolicy {
  Millis tau = 5000;
};

enum class Freshness { Fresh, Stale, Future };

std::string_view to_string(Freshness f);

/// Fresh iff receiver_now - tau <= msg_timestamp <= receiver_now (closed both ends).
Freshness check_freshness(Millis receiver_now, Millis msg_timestamp, FreshnessPolicy policy);

enum class ReplayVerdict { Accept, Replay };

/// Per-pseudonym highest sequence plus a bitmap covering [highest - width, highest].
/// Sequences strictly older than highest - width are rejected outright.
class ReplayWindow {
 public:
  explicit ReplayWindow(std::uint64_t width = 64);

  ReplayVerdict check(const Pseudonym& sender, std::uint64_t sequence);
  std::uint64_t width() const { return width_; }

 private:
  struct Stream {
    std::uint64_t highest = 0;
    std::vector<std::uint64_t> seen;  // bit i <=> highest - i was accepted
  };
  std::uint64_t width_;
  std::map<Pseudonym, Stream> streams_;
};

}  // namespace i2v::crypto
