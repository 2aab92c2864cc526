#pragma once

// Address assignment: preset static addresses, or a four-message
// DISCOVER / OFFER / REQUEST / ACK lease exchange with exponential backoff.

#include <array>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "i2v/bytes.hpp"
#include "i2v/domain.hpp"
#include "i2v/error.hpp"
#include "i2v/transport.hpp"
#include "i2v/wire.hpp"

namespace i2v::addressing {

/// Opaque 4-byte address, shown as a dotted quad.
struct Address {
  std::array<std::uint8_t, 4> octets{};

  std::uint32_t value() const {
    return (std::uint32_t{octets[0]} << 24) | (std::uint32_t{octets[1]} << 16) |
           (std::uint32_t{octets[2]} << 8) | octets[3];
  }
  static Address from_value(std::uint32_t v) {
    return {{static_cast<std::uint8_t>(v >> 24), static_cast<std::uint8_t>(v >> 16),
             static_cast<std::uint8_t>(v >> 8), static_cast<std::uint8_t>(v)}};
  }
  std::string to_string() const;
  /// Throws Error(ConfigValidation) on anything but a dotted quad.
  static Address parse(std::string_view text);

  auto operator<=>(const Address&) const = default;
  bool operator==(const Address&) const = default;
};

enum class Mode { Static, Lease };

struct LeaseTimers {
  Millis initial = 500;
  double backoff = 2.0;
  int max_attempts = 5;

  /// initial * backoff^attempt, rounded to the millisecond.
  Millis timeout(int attempt) const;
};

class AddressPool {
 public:
  static AddressPool make_static(std::map<VehicleId, Address> table);
  /// `size` contiguous addresses starting at `first`.
  static AddressPool make_lease(Address first, std::uint32_t size, Millis lease_duration);

  Mode mode() const { return mode_; }

  /// Preset lookup. Throws Error(UnknownVehicle), or Error(PreconditionViolation) in lease mode.
  Address assign_static(const VehicleId& vehicle) const;

  /// Lease side. offer() reuses a client's current lease or reservation,
  /// otherwise reserves the lowest free address; nullopt when exhausted.
  std::optional<Address> offer(const std::string& client, Millis now);
  /// Binds an address previously offered to (or leased by) this client.
  std::optional<Address> bind(const std::string& client, Address requested, Millis now);
  /// Releases every lease whose expiry is <= now; those addresses are free again immediately.
  std::vector<Address> expire_leases(Millis now);
  void release(const std::string& client);

  std::optional<Address> lease_of(const std::string& client) const;
  /// address -> holder, for the uniqueness invariant.
  std::map<Address, std::string> holders() const;
  Millis lease_duration() const { return lease_duration_; }

 private:
  struct Lease {
    std::string client;
    Millis expires_at = 0;
    bool bound = false;  // false while only offered
  };
  static constexpr Millis kOfferHold = 10000;

  Mode mode_ = Mode::Static;
  std::map<VehicleId, Address> static_table_;
  std::uint32_t first_ = 0;
  std::uint32_t size_ = 0;
  Millis lease_duration_ = 0;
  std::map<Address, Lease> leases_;
};

inline std::vector<Address> expire_leases(AddressPool& pool, Millis now) { return pool.expire_leases(now); }

// ---------------------------------------------------------------------------
// Lease exchange

/// Body of ADDR_* frames: u32 xid | str8 client | 4-byte address.
struct LeaseMessage {
  std::uint32_t xid = 0;
  std::string client;
  Address address;
};

Bytes encode_lease_frame(wire::MessageType type, const LeaseMessage& msg);
LeaseMessage decode_lease_body(ByteView body);

enum class LeaseState { Init, DiscoverSent, OfferReceived, RequestSent, Bound, Failed };

std::string_view to_string(LeaseState s);

/// Client side of the exchange. One timer covers each attempt: if the ACK has
/// not arrived `timeout(attempt)` ms after the DISCOVER, the client re-enters
/// DISCOVER_SENT with a new transaction id, up to max_attempts DISCOVERs.
class LeaseClient {
 public:
  LeaseClient(std::string client_id, LeaseTimers timers, std::uint32_t xid_base);

  /// INIT -> DISCOVER_SENT. Returns the DISCOVER frame.
  Bytes start(Millis now);
  /// Handles OFFER / ACK / ERROR; returns frames to send (a REQUEST after an OFFER).
  std::vector<Bytes> on_frame(const wire::Frame& frame, Millis now);
  /// Call when now >= deadline(). Returns a fresh DISCOVER, or nothing once failed.
  std::vector<Bytes> on_timeout(Millis now);

  std::optional<Millis> deadline() const;
  LeaseState state() const { return state_; }
  const std::vector<LeaseState>& history() const { return history_; }
  std::optional<Address> address() const { return address_; }
  std::optional<Errc> failure() const { return failure_; }
  Millis started_at() const { return started_at_; }
  std::optional<Millis> bound_at() const { return bound_at_; }
  int attempts() const { return attempt_ + 1; }
  const std::string& client_id() const { return client_; }

 private:
  void enter(LeaseState s);
  Bytes discover(Millis now);

  std::string client_;
  LeaseTimers timers_;
  std::uint32_t xid_;
  LeaseState state_ = LeaseState::Init;
  std::vector<LeaseState> history_{LeaseState::Init};
  int attempt_ = 0;
  Millis attempt_started_ = 0;
  Millis started_at_ = 0;
  std::optional<Millis> bound_at_;
  std::optional<Address> offered_;
  std::optional<Address> address_;
  std::optional<Errc> failure_;
};

/// Server side: answers DISCOVER with OFFER and REQUEST with ACK from the pool,
/// or with an ERROR(PoolExhausted) frame.
class LeaseServer {
 public:
  explicit LeaseServer(AddressPool& pool) : pool_(pool) {}
  std::vector<Bytes> on_frame(const wire::Frame& frame, Millis now);

 private:
  AddressPool& pool_;
};

struct LeaseOutcome {
  bool bound = false;
  Address address;
  Millis time_to_address = 0;  // completion (or give-up) time minus start
  std::optional<Errc> failure;
  int attempts = 0;
};

/// Runs one client against a server over a SimNetwork link. Never throws for
/// protocol failures; they are reported in the outcome.
LeaseOutcome run_lease(AddressPool& pool, const LeaseTimers& timers, const transport::LinkState& link,
                       std::uint64_t seed, Millis start = 0, const std::string& client_id = "client");

}  // namespace i2v::addressing
