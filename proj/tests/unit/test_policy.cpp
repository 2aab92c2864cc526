#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "i2v/error.hpp"
#include "i2v/policy.hpp"

using namespace i2v;
using namespace i2v::policy;
using wire::MessageType;

namespace {

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

TEST(Policy, DefaultTable) {
  const auto t = PolicyTable::defaults();
  EXPECT_EQ(t.authorize(Role::Rsu, MessageType::HazardBcast), Decision::Allow);
  EXPECT_EQ(t.authorize(Role::Obu, MessageType::HazardBcast), Decision::Deny);
  EXPECT_EQ(t.authorize(Role::EmergencyObu, MessageType::HazardBcast), Decision::Deny);
  EXPECT_EQ(t.authorize(Role::Obu, MessageType::Hazard), Decision::Allow);
  EXPECT_EQ(t.authorize(Role::Rsu, MessageType::Hazard), Decision::Deny);
  EXPECT_EQ(t.authorize(Role::Obu, MessageType::PeerList), Decision::Deny);
  EXPECT_EQ(t.authorize(Role::Obu, MessageType::Relay), Decision::Allow);
  EXPECT_EQ(t.authorize(Role::Rsu, MessageType::Relay), Decision::Allow);
}

TEST(Policy, BundledFileEqualsDefaults) {
  EXPECT_EQ(PolicyTable::load(std::string(I2V_SOURCE_DIR) + "/config/policy.yaml"), PolicyTable::defaults());
}

TEST(Policy, SerializeRoundTrip) {
  const auto t = PolicyTable::defaults();
  EXPECT_EQ(PolicyTable::parse(t.serialize()), t);
}

TEST(Policy, UnlistedIsDenied) {
  const auto t = PolicyTable::parse("OBU: [HELLO]\n");
  EXPECT_EQ(t.authorize(Role::Obu, MessageType::Hello), Decision::Allow);
  EXPECT_EQ(t.authorize(Role::Obu, MessageType::Auth), Decision::Deny);
  EXPECT_EQ(t.authorize(Role::Rsu, MessageType::Hello), Decision::Deny);
}

TEST(Policy, ParseErrors) {
  EXPECT_EQ(code_of([] { PolicyTable::parse("OBU: [HELLO\n"); }), Errc::ConfigParse);
  EXPECT_EQ(code_of([] { PolicyTable::parse("- a\n- b\n"); }), Errc::ConfigValidation);
  EXPECT_EQ(code_of([] { PolicyTable::parse("PILOT: [HELLO]\n"); }), Errc::ConfigValidation);
  EXPECT_EQ(code_of([] { PolicyTable::parse("OBU: HELLO\n"); }), Errc::ConfigValidation);
  try {
    PolicyTable::parse("RSU: [HAZARD_BCAST]\nOBU:\n  - HELLO\n  - TELEPORT\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("line 4"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("TELEPORT"), std::string::npos);
  }
}

TEST(Policy, RoleNames) {
  for (auto r : {Role::Rsu, Role::Obu, Role::EmergencyObu}) EXPECT_EQ(role_from_string(to_string(r)), r);
  EXPECT_FALSE(role_from_string("obu"));
}

TEST(Escrow, RecoversEveryIssuedPseudonym) {
  SeededRandom rng(11);
  EscrowTable escrow;
  std::vector<std::pair<Pseudonym, std::string>> issued;
  for (int i = 0; i < 500; ++i) {
    const auto id = "V" + std::to_string(i % 7);
    issued.emplace_back(issue_pseudonym(escrow, rng, VehicleId{id}, i, 1000).pseudonym, id);
  }
  EXPECT_EQ(escrow.size(), 500u);
  for (const auto& [p, id] : issued) EXPECT_EQ(escrow_recover(escrow, p)->value, id);
  EXPECT_FALSE(escrow_recover(escrow, Pseudonym::from(Bytes(8, 0xEE))));
}

TEST(Escrow, Lifetime) {
  SeededRandom rng(12);
  EscrowTable escrow;
  const auto p = escrow.issue(rng, VehicleId{"V1"}, 100, 50).pseudonym;
  EXPECT_TRUE(escrow.is_live(p, 100));
  EXPECT_TRUE(escrow.is_live(p, 149));
  EXPECT_FALSE(escrow.is_live(p, 150));
  EXPECT_EQ(escrow.recover(p)->value, "V1");
  EXPECT_EQ(code_of([&] { escrow.issue(rng, VehicleId{"V1"}, 0, 0); }), Errc::PreconditionViolation);
}

TEST(Escrow, ExportLines) {
  SeededRandom rng(13);
  EscrowTable escrow;
  const auto p = escrow.issue(rng, VehicleId{"V9"}, 5, 10).pseudonym;
  std::ostringstream out;
  escrow.export_to(out);
  EXPECT_EQ(out.str(), p.hex() + " V9 5 15\n");
}

// Pseudonyms must not be a function of the vehicle id: every byte position
// of tokens issued to a single vehicle should be uniform over 0..255.
TEST(Escrow, PseudonymBytesAreUniform) {
  SeededRandom rng(14);
  EscrowTable escrow;
  constexpr int kN = 25600;
  std::vector<std::array<int, 256>> counts(8);
  for (auto& c : counts) c.fill(0);
  for (int i = 0; i < kN; ++i) {
    const auto& p = escrow.issue(rng, VehicleId{"V1"}, 0, 1000).pseudonym;
    for (int b = 0; b < 8; ++b) ++counts[b][p.bytes[b]];
  }
  const double expected = kN / 256.0;
  for (const auto& c : counts) {
    double chi2 = 0;
    for (int v : c) chi2 += (v - expected) * (v - expected) / expected;
    // 255 degrees of freedom; the 0.999 quantile is about 330.5.
    EXPECT_LT(chi2, 330.5);
  }
}

TEST(RateLimiter, RejectsBadParameters) {
  EXPECT_EQ(code_of([] { RateLimiter({0, 1.0}); }), Errc::PreconditionViolation);
  EXPECT_EQ(code_of([] { RateLimiter({1, 0.0}); }), Errc::PreconditionViolation);
}

namespace {

// Bucket in milli-tokens per millisecond, stepped one millisecond at a time.
struct BucketOracle {
  std::int64_t capacity_milli;
  std::int64_t gain_per_ms;  // milli-tokens per ms
  std::int64_t level;
  Millis last;
  bool started = false;
  bool admit(Millis t) {
    if (!started) {
      started = true;
      level = capacity_milli;
      last = t;
    }
    for (; last < t; ++last) level = std::min(capacity_milli, level + gain_per_ms);
    if (level < 1000) return false;
    level -= 1000;
    return true;
  }
};

}  // namespace

TEST(RateLimiter, AgreesWithSteppedOracle) {
  SeededRandom rng(15);
  for (int trial = 0; trial < 20; ++trial) {
    const std::uint32_t c = 1 + rng.next_u64() % 12;
    const int r = 1 + static_cast<int>(rng.next_u64() % 5);  // whole tokens per second
    RateLimiter limiter({c, static_cast<double>(r)});
    BucketOracle oracle{c * 1000, r, 0, 0};
    Millis t = static_cast<Millis>(rng.next_u64() % 1000);
    for (int i = 0; i < 2000; ++i) {
      t += static_cast<Millis>(rng.next_u64() % 300);
      EXPECT_EQ(limiter.admit("s", t) == RateVerdict::Accept, oracle.admit(t)) << "trial " << trial << " t " << t;
    }
  }
}

TEST(RateLimiter, WindowBoundHoldsUnderFlood) {
  const RateLimit limit{10, 2.0};
  RateLimiter limiter(limit);
  std::vector<Millis> accepted;
  for (Millis t = 0; t <= 20000; t += 10)
    if (limiter.admit("flood", t) == RateVerdict::Accept) accepted.push_back(t);
  for (std::size_t i = 0; i < accepted.size(); ++i)
    for (std::size_t j = i; j < accepted.size(); ++j) {
      const double bound = limit.capacity + limit.per_second * (accepted[j] - accepted[i]) / 1000.0;
      ASSERT_LE(static_cast<double>(j - i + 1), bound + 1e-9);
    }
  EXPECT_EQ(accepted.size(), 10u + 40u);
}

TEST(RateLimiter, SendersHaveSeparateBuckets) {
  RateLimiter limiter({1, 1.0});
  EXPECT_EQ(limiter.admit("a", 0), RateVerdict::Accept);
  EXPECT_EQ(limiter.admit("a", 0), RateVerdict::Throttle);
  EXPECT_EQ(limiter.admit("b", 0), RateVerdict::Accept);
  EXPECT_EQ(limiter.admit("a", 999), RateVerdict::Throttle);
  EXPECT_EQ(limiter.admit("a", 1000), RateVerdict::Accept);
}
