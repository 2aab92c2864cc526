#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <set>

#include "i2v/crypto.hpp"
#include "i2v/error.hpp"

using namespace i2v;
using namespace i2v::crypto;

namespace {

Bytes text(std::string_view s) { return Bytes(s.begin(), s.end()); }

template <typename F>
Errc code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return Errc::Io;
}

}  // namespace

// Expected digests below were computed with Python's hashlib and the
// `cryptography` package, independently of OpenSSL's C API as used here.

TEST(Password, MatchesIndependentPbkdf2) {
  const auto rec = hash_password("correct horse", text("saltsaltsaltsalt"), 1000);
  EXPECT_EQ(to_hex(rec.hash), "041b3ed7e3dab252ed04f50b52bf3f95089cbd5b878843cccf48bc3232c26f33");
  EXPECT_TRUE(verify_password("correct horse", rec));
  EXPECT_FALSE(verify_password("correct horsf", rec));
  EXPECT_FALSE(verify_password("", rec));
}

TEST(Password, ShortSaltRejected) {
  EXPECT_EQ(code_of([] { hash_password("pw", Bytes(15, 1), 10); }), Errc::WeakSalt);
  EXPECT_NO_THROW(hash_password("pw", Bytes(16, 1), 10));
}

TEST(Password, RecordRoundTrip) {
  SeededRandom rng(9);
  const auto rec = hash_password("pw", rng.bytes(16), 50);
  const auto back = PasswordRecord::parse(rec.serialize());
  EXPECT_EQ(back.iterations, 50u);
  EXPECT_EQ(back.salt, rec.salt);
  EXPECT_EQ(back.hash, rec.hash);
  auto bytes = rec.serialize();
  bytes.pop_back();
  EXPECT_EQ(code_of([&] { PasswordRecord::parse(bytes); }), Errc::BadKeyFile);
}

TEST(Hkdf, Rfc5869CaseOne) {
  const Bytes ikm(22, 0x0b);
  const auto salt = from_hex("000102030405060708090a0b0c");
  const auto info = from_hex("f0f1f2f3f4f5f6f7f8f9");
  const auto okm = derive_key(ikm, salt, std::string_view(reinterpret_cast<const char*>(info.data()), info.size()), 42);
  EXPECT_EQ(to_hex(okm),
            "3cb25f25faacd57a90434f64d0362f2a2d2d0a90cf1a5a4c5db02d56ecc4c5bf34007208d5b887185865");
}

TEST(Session, BothSidesAgreeAndNoncesMatter) {
  SeededRandom rng(3);
  const auto cn = rng.bytes(16), sn = rng.bytes(16), secret = rng.bytes(32);
  const auto a = establish_session(cn, sn, secret, 10);
  const auto b = establish_session(cn, sn, secret, 20);
  EXPECT_EQ(a.key_bytes, b.key_bytes);
  EXPECT_EQ(a.session_id, b.session_id);
  EXPECT_EQ(a.established_at, 10);
  const auto c = establish_session(sn, cn, secret);
  EXPECT_NE(a.key_bytes, c.key_bytes);
  EXPECT_EQ(code_of([&] { establish_session(Bytes(15, 0), sn, secret); }), Errc::ShortNonce);
  EXPECT_EQ(code_of([&] { establish_session(cn, sn, Bytes{}); }), Errc::BadKey);
}

TEST(Aead, MatchesIndependentAesGcm) {
  Bytes key(32);
  std::iota(key.begin(), key.end(), 0);
  const auto nonce = make_nonce(NonceDomain::ObuToRsu, 5);
  EXPECT_EQ(to_hex(nonce), "010000000000000000000005");
  const auto sealed = seal(key, text("hdr"), text("hello"), nonce);
  EXPECT_EQ(to_hex(sealed), "4276b1eab8454f7383059856a12bb7573692a3ef31");
  EXPECT_EQ(open(key, text("hdr"), sealed, nonce), text("hello"));
}

TEST(Aead, AnyTamperOrWrongKeyFails) {
  SeededRandom rng(4);
  const auto key = rng.bytes(32);
  const auto nonce = make_nonce(NonceDomain::V2v, 1);
  const auto ad = text("associated");
  const auto sealed = seal(key, ad, text("payload bytes"), nonce);
  for (std::size_t bit = 0; bit < sealed.size() * 8; ++bit) {
    auto bad = sealed;
    bad[bit / 8] ^= static_cast<std::uint8_t>(1u << (bit % 8));
    EXPECT_EQ(code_of([&] { open(key, ad, bad, nonce); }), Errc::AuthFailure) << bit;
  }
  auto bad_ad = ad;
  bad_ad[0] ^= 1;
  EXPECT_EQ(code_of([&] { open(key, bad_ad, sealed, nonce); }), Errc::AuthFailure);
  auto other = key;
  other[31] ^= 1;
  EXPECT_EQ(code_of([&] { open(other, ad, sealed, nonce); }), Errc::AuthFailure);
  EXPECT_EQ(code_of([&] { open(key, ad, sealed, make_nonce(NonceDomain::V2v, 2)); }), Errc::AuthFailure);
}

TEST(Aead, DomainsNeverShareNonces) {
  std::set<std::array<std::uint8_t, kNonceSize>> seen;
  for (auto d : {NonceDomain::ObuToRsu, NonceDomain::RsuToObu, NonceDomain::V2v, NonceDomain::Handshake})
    for (std::uint64_t c : {0ull, 1ull, 255ull, 256ull, ~0ull}) EXPECT_TRUE(seen.insert(make_nonce(d, c)).second);
}

TEST(Sealer, CountersStrictlyIncrease) {
  SymmetricKey key{};
  key[0] = 7;
  Sealer s(key, NonceDomain::RsuToObu);
  EXPECT_NO_THROW(s.seal({}, text("a"), 1));
  EXPECT_NO_THROW(s.seal({}, text("b"), 5));
  EXPECT_EQ(code_of([&] { s.seal({}, text("c"), 5); }), Errc::NonceReuse);
  EXPECT_EQ(code_of([&] { s.seal({}, text("c"), 2); }), Errc::NonceReuse);
  EXPECT_NO_THROW(s.seal({}, text("d"), 6));
}

TEST(Signature, Rfc8032TestOne) {
  const auto sk = SigningKey::from_seed(from_hex("9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60"));
  EXPECT_EQ(to_hex(sk.public_key()), "d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a");
  const auto sig = sk.sign({});
  EXPECT_EQ(to_hex(sig),
            "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e065224901555fb8821590a33bacc61e39701cf9b46b"
            "d25bf5f0595bbe24655141438e7a100b");
  EXPECT_TRUE(verify(sk.public_key(), {}, sig));
}

TEST(Signature, OnlyTheSignerVerifies) {
  SeededRandom rng(5);
  std::vector<SigningKey> keys;
  for (int i = 0; i < 5; ++i) keys.push_back(SigningKey::generate(rng));
  const auto msg = text("hazard at 10,20");
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto sig = keys[i].sign(msg);
    for (std::size_t j = 0; j < keys.size(); ++j) EXPECT_EQ(verify(keys[j].public_key(), msg, sig), i == j);
    auto altered = msg;
    altered[0] ^= 1;
    EXPECT_FALSE(verify(keys[i].public_key(), altered, sig));
  }
  EXPECT_FALSE(verify(Bytes(31, 0), msg, keys[0].sign(msg)));
  EXPECT_FALSE(verify(keys[0].public_key(), msg, Bytes(63, 0)));
  EXPECT_EQ(code_of([] { SigningKey::from_seed(Bytes(31, 0)); }), Errc::BadKey);
}

TEST(Freshness, ClosedWindowProperty) {
  SeededRandom rng(6);
  for (int i = 0; i < 10000; ++i) {
    const Millis tau = 1 + static_cast<Millis>(rng.next_u64() % 10000);
    const Millis now = static_cast<Millis>(rng.next_u64() % 1'000'000'000);
    const Millis ts = now - 20000 + static_cast<Millis>(rng.next_u64() % 40000);
    const auto f = check_freshness(now, ts, {tau});
    const bool expected = ts >= now - tau && ts <= now;
    EXPECT_EQ(f == Freshness::Fresh, expected);
    if (ts > now) EXPECT_EQ(f, Freshness::Future);
    if (ts < now - tau) EXPECT_EQ(f, Freshness::Stale);
  }
  const Millis now = 100000, tau = 5000;
  EXPECT_EQ(check_freshness(now, now, {tau}), Freshness::Fresh);
  EXPECT_EQ(check_freshness(now, now - tau, {tau}), Freshness::Fresh);
  EXPECT_EQ(check_freshness(now, now + 1, {tau}), Freshness::Future);
  EXPECT_EQ(check_freshness(now, now - tau - 1, {tau}), Freshness::Stale);
  EXPECT_EQ(code_of([] { check_freshness(0, 0, {0}); }), Errc::PreconditionViolation);
}

namespace {

// Reference semantics: accept a sequence unless it was accepted before or is
// older than (highest accepted so far) - width.
struct ReplayOracle {
  std::uint64_t width;
  std::set<std::uint64_t> accepted;
  bool check(std::uint64_t seq) {
    if (!accepted.empty()) {
      const auto hi = *accepted.rbegin();
      if (seq < hi && hi - seq > width) return false;
    }
    return accepted.insert(seq).second;
  }
};

}  // namespace

TEST(ReplayWindow, AgreesWithOracleOnRandomOrderings) {
  SeededRandom rng(7);
  for (std::uint64_t width : {1ull, 8ull, 63ull, 64ull, 65ull, 200ull}) {
    for (int trial = 0; trial < 50; ++trial) {
      ReplayWindow window(width);
      ReplayOracle oracle{width, {}};
      const auto sender = Pseudonym::from(rng.bytes(8));
      const std::uint64_t base = rng.next_u64() % 1000;
      for (int i = 0; i < 400; ++i) {
        const std::uint64_t seq = base + rng.next_u64() % (3 * width + 10);
        EXPECT_EQ(window.check(sender, seq) == ReplayVerdict::Accept, oracle.check(seq))
            << "width " << width << " seq " << seq;
      }
    }
  }
}

TEST(ReplayWindow, ExhaustivePermutationsOfSmallSets) {
  std::vector<std::uint64_t> seqs{3, 1, 4, 1, 5, 9};
  std::sort(seqs.begin(), seqs.end());
  do {
    ReplayWindow window(4);
    ReplayOracle oracle{4, {}};
    const auto p = Pseudonym::from(Bytes(8, 1));
    for (auto s : seqs) EXPECT_EQ(window.check(p, s) == ReplayVerdict::Accept, oracle.check(s));
  } while (std::next_permutation(seqs.begin(), seqs.end()));
}

TEST(ReplayWindow, SendersAreIndependent) {
  ReplayWindow window(4);
  const auto a = Pseudonym::from(Bytes(8, 1)), b = Pseudonym::from(Bytes(8, 2));
  EXPECT_EQ(window.check(a, 100), ReplayVerdict::Accept);
  EXPECT_EQ(window.check(b, 100), ReplayVerdict::Accept);
  EXPECT_EQ(window.check(a, 100), ReplayVerdict::Replay);
  EXPECT_EQ(window.check(b, 1), ReplayVerdict::Replay);
  EXPECT_EQ(window.check(a, 96), ReplayVerdict::Accept);
  EXPECT_EQ(window.check(a, 95), ReplayVerdict::Replay);
  EXPECT_EQ(code_of([] { ReplayWindow w(0); }), Errc::PreconditionViolation);
}
