#include "i2v/crypto.hpp"

#include <openssl/crypto.h>
#include <openssl/evp.h>
#include <openssl/kdf.h>

#include <memory>

#include "i2v/error.hpp"

namespace i2v::crypto {

namespace {

struct CipherCtxFree {
  void operator()(EVP_CIPHER_CTX* c) const { EVP_CIPHER_CTX_free(c); }
};
struct MdCtxFree {
  void operator()(EVP_MD_CTX* c) const { EVP_MD_CTX_free(c); }
};
struct PkeyCtxFree {
  void operator()(EVP_PKEY_CTX* c) const { EVP_PKEY_CTX_free(c); }
};
struct PkeyFree {
  void operator()(EVP_PKEY* k) const { EVP_PKEY_free(k); }
};

using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxFree>;
using MdCtx = std::unique_ptr<EVP_MD_CTX, MdCtxFree>;
using PkeyCtx = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxFree>;

// OpenSSL rejects null buffers even for zero lengths in some paths.
const unsigned char* ptr(ByteView v) {
  static const unsigned char kEmpty = 0;
  return v.empty() ? &kEmpty : v.data();
}

void check(int rc, const char* what) {
  if (rc <= 0) throw Error(Errc::BadKey, what);
}

}  // namespace

// ---------------------------------------------------------------------------

Bytes PasswordRecord::serialize() const {
  ByteWriter w;
  w.u32(iterations).u8(static_cast<std::uint8_t>(salt.size())).raw(salt);
  w.u8(static_cast<std::uint8_t>(hash.size())).raw(hash);
  return w.take();
}

PasswordRecord PasswordRecord::parse(ByteView bytes) {
  try {
    ByteReader r(bytes);
    PasswordRecord rec;
    rec.iterations = r.u32();
    auto salt = r.raw(r.u8());
    rec.salt.assign(salt.begin(), salt.end());
    auto hash = r.raw(r.u8());
    rec.hash.assign(hash.begin(), hash.end());
    r.expect_end();
    if (rec.iterations == 0 || rec.salt.size() < kMinSaltSize || rec.hash.size() != 32)
      throw Error(Errc::BadKeyFile, "password record parameters");
    return rec;
  } catch (const Error& e) {
    if (e.code() == Errc::BadKeyFile) throw;
    throw Error(Errc::BadKeyFile, "malformed password record");
  }
}

PasswordRecord hash_password(std::string_view password, ByteView salt, std::uint32_t iterations) {
  if (salt.size() < kMinSaltSize) throw Error(Errc::WeakSalt, std::to_string(salt.size()) + " bytes");
  if (iterations == 0) throw Error(Errc::PreconditionViolation, "zero iterations");
  PasswordRecord rec;
  rec.iterations = iterations;
  rec.salt.assign(salt.begin(), salt.end());
  rec.hash.resize(32);
  check(PKCS5_PBKDF2_HMAC(password.data(), static_cast<int>(password.size()), ptr(salt),
                          static_cast<int>(salt.size()), static_cast<int>(iterations), EVP_sha256(),
                          static_cast<int>(rec.hash.size()), rec.hash.data()),
        "PBKDF2");
  return rec;
}

bool verify_password(std::string_view password, const PasswordRecord& record) {
  if (record.salt.size() < kMinSaltSize || record.hash.size() != 32) return false;
  auto candidate = hash_password(password, record.salt, record.iterations);
  return CRYPTO_memcmp(candidate.hash.data(), record.hash.data(), record.hash.size()) == 0;
}

// ---------------------------------------------------------------------------

Bytes derive_key(ByteView ikm, ByteView salt, std::string_view info, std::size_t length) {
  PkeyCtx ctx(EVP_PKEY_CTX_new_id(EVP_PKEY_HKDF, nullptr));
  if (!ctx) throw Error(Errc::BadKey, "HKDF context");
  check(EVP_PKEY_derive_init(ctx.get()), "HKDF init");
  check(EVP_PKEY_CTX_set_hkdf_md(ctx.get(), EVP_sha256()), "HKDF md");
  check(EVP_PKEY_CTX_set1_hkdf_salt(ctx.get(), ptr(salt), static_cast<int>(salt.size())), "HKDF salt");
  check(EVP_PKEY_CTX_set1_hkdf_key(ctx.get(), ptr(ikm), static_cast<int>(ikm.size())), "HKDF key");
  check(EVP_PKEY_CTX_add1_hkdf_info(ctx.get(), reinterpret_cast<const unsigned char*>(info.data()),
                                    static_cast<int>(info.size())),
        "HKDF info");
  Bytes out(length);
  std::size_t out_len = length;
  check(EVP_PKEY_derive(ctx.get(), out.data(), &out_len), "HKDF derive");
  return out;
}

SessionKey establish_session(ByteView client_nonce, ByteView server_nonce, ByteView shared_secret,
                             Millis now) {
  if (client_nonce.size() < kMinHandshakeNonce || server_nonce.size() < kMinHandshakeNonce)
    throw Error(Errc::ShortNonce);
  if (shared_secret.empty()) throw Error(Errc::BadKey, "empty shared secret");
  Bytes salt(client_nonce.begin(), client_nonce.end());
  salt.insert(salt.end(), server_nonce.begin(), server_nonce.end());
  auto okm = derive_key(shared_secret, salt, "i2v session v1", kKeySize + SessionId::size);
  SessionKey key;
  std::copy_n(okm.begin(), kKeySize, key.key_bytes.begin());
  key.session_id = SessionId::from(ByteView(okm).subspan(kKeySize));
  key.established_at = now;
  return key;
}

// ---------------------------------------------------------------------------

std::array<std::uint8_t, kNonceSize> make_nonce(NonceDomain domain, std::uint64_t counter) {
  std::array<std::uint8_t, kNonceSize> n{};
  n[0] = static_cast<std::uint8_t>(domain);
  for (int i = 0; i < 8; ++i) n[4 + i] = static_cast<std::uint8_t>(counter >> (56 - 8 * i));
  return n;
}

Bytes seal(ByteView key, ByteView associated_data, ByteView plaintext, ByteView nonce) {
  if (key.size() != kKeySize) throw Error(Errc::BadKey, "AES-256 key must be 32 bytes");
  if (nonce.size() != kNonceSize) throw Error(Errc::BadKey, "nonce must be 12 bytes");
  CipherCtx ctx(EVP_CIPHER_CTX_new());
  check(EVP_EncryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr), "GCM init");
  check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceSize, nullptr), "GCM ivlen");
  check(EVP_EncryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()), "GCM key");
  int len = 0;
  if (!associated_data.empty())
    check(EVP_EncryptUpdate(ctx.get(), nullptr, &len, associated_data.data(),
                            static_cast<int>(associated_data.size())),
          "GCM aad");
  Bytes out(plaintext.size() + kTagSize);
  int written = 0;
  if (!plaintext.empty()) {
    check(EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(),
                            static_cast<int>(plaintext.size())),
          "GCM encrypt");
    written = len;
  }
  check(EVP_EncryptFinal_ex(ctx.get(), out.data() + written, &len), "GCM final");
  written += len;
  check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kTagSize, out.data() + written), "GCM tag");
  out.resize(static_cast<std::size_t>(written) + kTagSize);
  return out;
}

Bytes open(ByteView key, ByteView associated_data, ByteView sealed, ByteView nonce) {
  if (key.size() != kKeySize || nonce.size() != kNonceSize) throw Error(Errc::AuthFailure, "key or nonce size");
  if (sealed.size() < kTagSize) throw Error(Errc::AuthFailure, "shorter than tag");
  const auto body = sealed.first(sealed.size() - kTagSize);
  Bytes tag(sealed.end() - kTagSize, sealed.end());

  CipherCtx ctx(EVP_CIPHER_CTX_new());
  check(EVP_DecryptInit_ex(ctx.get(), EVP_aes_256_gcm(), nullptr, nullptr, nullptr), "GCM init");
  check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_IVLEN, kNonceSize, nullptr), "GCM ivlen");
  check(EVP_DecryptInit_ex(ctx.get(), nullptr, nullptr, key.data(), nonce.data()), "GCM key");
  int len = 0;
  if (!associated_data.empty())
    check(EVP_DecryptUpdate(ctx.get(), nullptr, &len, associated_data.data(),
                            static_cast<int>(associated_data.size())),
          "GCM aad");
  Bytes out(body.size() + 16);
  int written = 0;
  if (!body.empty()) {
    check(EVP_DecryptUpdate(ctx.get(), out.data(), &len, body.data(), static_cast<int>(body.size())),
          "GCM decrypt");
    written = len;
  }
  check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kTagSize, tag.data()), "GCM set tag");
  if (EVP_DecryptFinal_ex(ctx.get(), out.data() + written, &len) <= 0) throw Error(Errc::AuthFailure);
  written += len;
  out.resize(static_cast<std::size_t>(written));
  return out;
}

Bytes Sealer::seal(ByteView associated_data, ByteView plaintext, std::uint64_t counter) {
  if (last_ && counter <= *last_)
    throw Error(Errc::NonceReuse, "counter " + std::to_string(counter) + " after " + std::to_string(*last_));
  last_ = counter;
  auto nonce = make_nonce(domain_, counter);
  return crypto::seal(key_, associated_data, plaintext, nonce);
}

// ---------------------------------------------------------------------------

SigningKey SigningKey::generate(RandomSource& rng) { return from_seed(rng.bytes(kSeedSize)); }

SigningKey SigningKey::from_seed(ByteView seed) {
  if (seed.size() != kSeedSize) throw Error(Errc::BadKey, "Ed25519 seed must be 32 bytes");
  EVP_PKEY* raw = EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.data(), seed.size());
  if (raw == nullptr) throw Error(Errc::BadKey, "Ed25519 private key");
  SigningKey k;
  k.pkey_ = std::shared_ptr<EVP_PKEY>(raw, PkeyFree{});
  k.seed_.assign(seed.begin(), seed.end());
  k.public_key_.resize(kPublicKeySize);
  std::size_t len = kPublicKeySize;
  check(EVP_PKEY_get_raw_public_key(raw, k.public_key_.data(), &len), "Ed25519 public key");
  return k;
}

Bytes SigningKey::sign(ByteView message) const {
  MdCtx ctx(EVP_MD_CTX_new());
  check(EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, pkey_.get()), "sign init");
  Bytes sig(kSignatureSize);
  std::size_t len = sig.size();
  check(EVP_DigestSign(ctx.get(), sig.data(), &len, ptr(message), message.size()), "sign");
  sig.resize(len);
  return sig;
}

bool verify(ByteView public_key, ByteView message, ByteView signature) {
  if (public_key.size() != kPublicKeySize || signature.size() != kSignatureSize) return false;
  std::unique_ptr<EVP_PKEY, PkeyFree> pkey(
      EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, public_key.data(), public_key.size()));
  if (!pkey) return false;
  MdCtx ctx(EVP_MD_CTX_new());
  if (EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, pkey.get()) <= 0) return false;
  return EVP_DigestVerify(ctx.get(), signature.data(), signature.size(), ptr(message), message.size()) == 1;
}

// ---------------------------------------------------------------------------

std::string_view to_string(Freshness f) {
  switch (f) {
    case Freshness::Fresh: return "fresh";
    case Freshness::Stale: return "stale";
    case Freshness::Future: return "future";
  }
  return "unknown";
}

Freshness check_freshness(Millis receiver_now, Millis msg_timestamp, FreshnessPolicy policy) {
  if (policy.tau <= 0) throw Error(Errc::PreconditionViolation, "tau must be positive");
  if (msg_timestamp > receiver_now) return Freshness::Future;
  // receiver_now >= msg_timestamp, so the unsigned difference is exact.
  const auto age = static_cast<std::uint64_t>(receiver_now) - static_cast<std::uint64_t>(msg_timestamp);
  return age <= static_cast<std::uint64_t>(policy.tau) ? Freshness::Fresh : Freshness::Stale;
}

ReplayWindow::ReplayWindow(std::uint64_t width) : width_(width) {
  if (width == 0) throw Error(Errc::PreconditionViolation, "replay window width must be >= 1");
}

namespace {

bool test_bit(const std::vector<std::uint64_t>& bits, std::uint64_t i) {
  return (bits[i / 64] >> (i % 64)) & 1u;
}

void set_bit(std::vector<std::uint64_t>& bits, std::uint64_t i) { bits[i / 64] |= std::uint64_t{1} << (i % 64); }

// Moves bit i to bit i + shift, dropping anything past the end.
void shift_up(std::vector<std::uint64_t>& bits, std::uint64_t shift) {
  const std::uint64_t total = bits.size() * 64;
  if (shift >= total) {
    std::fill(bits.begin(), bits.end(), 0);
    return;
  }
  const std::size_t words = shift / 64;
  const unsigned rem = shift % 64;
  for (std::size_t i = bits.size(); i-- > 0;) {
    std::uint64_t v = 0;
    if (i >= words) {
      v = bits[i - words] << rem;
      if (rem != 0 && i > words) v |= bits[i - words - 1] >> (64 - rem);
    }
    bits[i] = v;
  }
}

}  // namespace

ReplayVerdict ReplayWindow::check(const Pseudonym& sender, std::uint64_t sequence) {
  const std::size_t words = static_cast<std::size_t>((width_ + 1 + 63) / 64);
  auto [it, inserted] = streams_.try_emplace(sender);
  Stream& s = it->second;
  if (inserted) {
    s.highest = sequence;
    s.seen.assign(words, 0);
    set_bit(s.seen, 0);
    return ReplayVerdict::Accept;
  }
  if (sequence > s.highest) {
    shift_up(s.seen, sequence - s.highest);
    s.highest = sequence;
    set_bit(s.seen, 0);
    return ReplayVerdict::Accept;
  }
  const std::uint64_t offset = s.highest - sequence;
  if (offset > width_) return ReplayVerdict::Replay;
  if (test_bit(s.seen, offset)) return ReplayVerdict::Replay;
  set_bit(s.seen, offset);
  return ReplayVerdict::Accept;
}

}  // namespace i2v::crypto
