#include <gtest/gtest.h>

#include <cmath>

#include "i2v/addressing.hpp"
#include "i2v/error.hpp"
#include "i2v/random.hpp"

using namespace i2v;
using namespace i2v::addressing;

namespace {

Address addr(std::string_view s) { return Address::parse(s); }

AddressPool small_pool(std::uint32_t size = 4) { return AddressPool::make_lease(addr("10.0.1.1"), size, 60000); }

// Expected time-to-address for independent per-message loss p: attempt k
// (0-based) succeeds with probability s = (1-p)^4 after sum_{j<k} T_j + 4L;
// after every attempt fails the client gives up at sum_j T_j.
double expected_lease_time(double p, const LeaseTimers& t, Millis latency) {
  const double s = std::pow(1.0 - p, 4);
  const double f = 1.0 - s;
  double e = 0, elapsed = 0, fk = 1;
  for (int k = 0; k < t.max_attempts; ++k) {
    e += fk * s * (elapsed + 4.0 * static_cast<double>(latency));
    elapsed += static_cast<double>(t.timeout(k));
    fk *= f;
  }
  return e + fk * elapsed;
}

}  // namespace

TEST(Address, DottedQuad) {
  EXPECT_EQ(addr("10.0.1.250").to_string(), "10.0.1.250");
  EXPECT_EQ(addr("1.2.3.4").value(), 0x01020304u);
  EXPECT_EQ(Address::from_value(0x0A000001).to_string(), "10.0.0.1");
  for (const char* bad : {"", "1.2.3", "1.2.3.4.5", "256.0.0.1", "a.b.c.d", "1..2.3", " 1.2.3.4"})
    EXPECT_THROW(Address::parse(bad), Error) << bad;
}

TEST(LeaseTimers, Backoff) {
  LeaseTimers t{500, 2.0, 5};
  EXPECT_EQ(t.timeout(0), 500);
  EXPECT_EQ(t.timeout(1), 1000);
  EXPECT_EQ(t.timeout(4), 8000);
  LeaseTimers u{300, 1.5, 3};
  EXPECT_EQ(u.timeout(2), 675);
}

TEST(StaticPool, LookupOnly) {
  auto pool = AddressPool::make_static({{VehicleId{"V1"}, addr("10.0.0.10")}, {VehicleId{"V2"}, addr("10.0.0.11")}});
  EXPECT_EQ(pool.assign_static(VehicleId{"V2"}), addr("10.0.0.11"));
  try {
    pool.assign_static(VehicleId{"V9"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::UnknownVehicle);
  }
  auto lease = small_pool();
  EXPECT_THROW(lease.assign_static(VehicleId{"V1"}), Error);
}

TEST(LeasePool, OfferBindExpire) {
  auto pool = small_pool(2);
  const auto a = pool.offer("c1", 0);
  ASSERT_TRUE(a);
  EXPECT_EQ(*a, addr("10.0.1.1"));
  EXPECT_EQ(pool.offer("c1", 1), a);
  const auto b = pool.offer("c2", 1);
  EXPECT_EQ(*b, addr("10.0.1.2"));
  EXPECT_FALSE(pool.offer("c3", 2));
  EXPECT_FALSE(pool.bind("c2", *a, 3));
  EXPECT_EQ(pool.bind("c1", *a, 3), a);
  EXPECT_EQ(pool.lease_of("c1"), a);
  EXPECT_TRUE(pool.expire_leases(60002).empty());
  const auto expired = expire_leases(pool, 60003);
  ASSERT_EQ(expired.size(), 1u);
  EXPECT_EQ(expired[0], *a);
  EXPECT_EQ(pool.offer("c3", 60003), a);
}

TEST(LeasePool, ReleaseFreesAddress) {
  auto pool = small_pool(1);
  const auto a = pool.offer("c1", 0);
  pool.bind("c1", *a, 0);
  EXPECT_FALSE(pool.offer("c2", 1));
  pool.release("c1");
  EXPECT_EQ(pool.offer("c2", 2), a);
}

TEST(LeasePool, HoldersAreUnique) {
  SeededRandom rng(31);
  auto pool = small_pool(16);
  for (Millis t = 0; t < 200000; t += 100) {
    const auto client = "c" + std::to_string(rng.next_u64() % 40);
    switch (rng.next_u64() % 4) {
      case 0:
      case 1:
        if (auto a = pool.offer(client, t)) pool.bind(client, *a, t);
        break;
      case 2:
        pool.release(client);
        break;
      default:
        pool.expire_leases(t);
    }
    std::set<std::string> seen;
    for (const auto& [address, holder] : pool.holders()) {
      EXPECT_TRUE(seen.insert(holder).second) << holder << " holds two addresses";
      EXPECT_GE(address.value(), addr("10.0.1.1").value());
      EXPECT_LT(address.value(), addr("10.0.1.1").value() + 16);
    }
  }
}

TEST(LeaseClient, StateMachineHappyPath) {
  auto pool = small_pool();
  LeaseServer server(pool);
  LeaseClient client("obu", {}, 100);
  EXPECT_EQ(client.state(), LeaseState::Init);
  auto discover = wire::decode_frame(client.start(0));
  EXPECT_EQ(discover.type, wire::MessageType::AddrDiscover);
  EXPECT_EQ(client.state(), LeaseState::DiscoverSent);
  EXPECT_EQ(client.deadline(), 500);
  auto offer = server.on_frame(discover, 5);
  ASSERT_EQ(offer.size(), 1u);
  auto request = client.on_frame(wire::decode_frame(offer[0]), 10);
  ASSERT_EQ(request.size(), 1u);
  EXPECT_EQ(client.state(), LeaseState::RequestSent);
  auto ack = server.on_frame(wire::decode_frame(request[0]), 15);
  ASSERT_EQ(ack.size(), 1u);
  EXPECT_TRUE(client.on_frame(wire::decode_frame(ack[0]), 20).empty());
  EXPECT_EQ(client.state(), LeaseState::Bound);
  EXPECT_EQ(client.address(), addr("10.0.1.1"));
  EXPECT_EQ(client.bound_at(), 20);
  EXPECT_FALSE(client.deadline());
  const std::vector<LeaseState> expected{LeaseState::Init, LeaseState::DiscoverSent, LeaseState::OfferReceived,
                                         LeaseState::RequestSent, LeaseState::Bound};
  EXPECT_EQ(client.history(), expected);
}

TEST(LeaseClient, GivesUpAfterMaxAttempts) {
  LeaseClient client("obu", {100, 2.0, 3}, 7);
  client.start(0);
  EXPECT_EQ(client.on_timeout(100).size(), 1u);
  EXPECT_EQ(client.deadline(), 300);
  EXPECT_EQ(client.on_timeout(300).size(), 1u);
  EXPECT_EQ(client.deadline(), 700);
  EXPECT_TRUE(client.on_timeout(700).empty());
  EXPECT_EQ(client.state(), LeaseState::Failed);
  EXPECT_EQ(client.attempts(), 3);
}

TEST(LeaseClient, IgnoresStaleTransaction) {
  auto pool = small_pool();
  LeaseServer server(pool);
  LeaseClient client("obu", {}, 100);
  const auto first = wire::decode_frame(client.start(0));
  const auto late_offer = server.on_frame(first, 1);
  client.on_timeout(500);
  EXPECT_TRUE(client.on_frame(wire::decode_frame(late_offer[0]), 501).empty());
  EXPECT_EQ(client.state(), LeaseState::DiscoverSent);
}

TEST(LeaseExchange, PoolExhaustedIsReported) {
  auto pool = small_pool(1);
  pool.bind("other", *pool.offer("other", 0), 0);
  const auto out = run_lease(pool, {}, {true, 0.0, 10}, 1);
  EXPECT_FALSE(out.bound);
  EXPECT_EQ(out.failure, Errc::PoolExhausted);
}

TEST(LeaseExchange, LosslessIsFourOneWayLatencies) {
  for (Millis latency : {0, 1, 10, 37}) {
    auto pool = small_pool();
    const auto out = run_lease(pool, {}, {true, 0.0, latency}, 5, 1000);
    EXPECT_TRUE(out.bound);
    EXPECT_EQ(out.time_to_address, 4 * latency);
    EXPECT_EQ(out.attempts, 1);
  }
}

TEST(LeaseExchange, MonteCarloMeanMatchesRecurrence) {
  const LeaseTimers timers;
  const Millis latency = 10;
  for (double p : {0.05, 0.2, 0.4}) {
    constexpr int kRuns = 4000;
    double sum = 0, sum_sq = 0;
    for (int i = 0; i < kRuns; ++i) {
      auto pool = small_pool();
      const auto out = run_lease(pool, timers, {true, p, latency}, 1000 + i);
      const auto t = static_cast<double>(out.time_to_address);
      sum += t;
      sum_sq += t * t;
    }
    const double mean = sum / kRuns;
    const double sd = std::sqrt(sum_sq / kRuns - mean * mean);
    EXPECT_NEAR(mean, expected_lease_time(p, timers, latency), 5.0 * sd / std::sqrt(kRuns) + 1.0) << "p " << p;
  }
}
