#pragma once

// Authorization, pseudonyms with liability escrow, and per-sender rate limiting.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "i2v/bytes.hpp"
#include "i2v/domain.hpp"
#include "i2v/random.hpp"
#include "i2v/wire.hpp"

namespace i2v::policy {

enum class Role : std::uint8_t { Rsu = 0, Obu = 1, EmergencyObu = 2 };

std::string_view to_string(Role r);
std::optional<Role> role_from_string(std::string_view s);

enum class Decision { Allow, Deny };

/// (role, message type) -> allow | deny; anything not listed is denied.
class PolicyTable {
 public:
  /// RSU: HAZARD_BCAST PEER_LIST RELAY AUTH_OK REGISTER_OK ADDR_OFFER ADDR_ACK
  /// OBU and EMERGENCY_OBU: HELLO AUTH REGISTER BEACON HAZARD RELAY DISCONNECT ADDR_DISCOVER ADDR_REQUEST
  static PolicyTable defaults();

  /// YAML mapping of role name to a list of message type names (docs/POLICY.md).
  /// Throws Error(ConfigParse) or Error(ConfigValidation).
  static PolicyTable parse(std::string_view text);
  static PolicyTable load(const std::string& path);
  std::string serialize() const;

  void allow(Role role, wire::MessageType type) { allowed_.insert({role, type}); }
  Decision authorize(Role role, wire::MessageType type) const {
    return allowed_.count({role, type}) ? Decision::Allow : Decision::Deny;
  }

  bool operator==(const PolicyTable&) const = default;

 private:
  std::set<std::pair<Role, wire::MessageType>> allowed_;
};

inline Decision authorize(const PolicyTable& table, Role role, wire::MessageType type) {
  return table.authorize(role, type);
}

struct PseudonymRecord {
  Pseudonym pseudonym;
  VehicleId vehicle_id;
  Millis issued_at = 0;
  Millis expires_at = 0;
};

/// Append-only pseudonym -> identity log. Lookups go through recover().
class EscrowTable {
 public:
  /// Draws a fresh 8-byte token unrelated to the vehicle id and appends the record.
  /// Throws Error(PreconditionViolation) when lifetime <= 0.
  const PseudonymRecord& issue(RandomSource& rng, const VehicleId& vehicle, Millis now, Millis lifetime);

  std::optional<VehicleId> recover(const Pseudonym& p) const;
  bool is_live(const Pseudonym& p, Millis now) const;
  std::size_t size() const { return records_.size(); }

  /// One line per record: pseudonym-hex vehicle-id issued-at expires-at.
  void export_to(std::ostream& out) const;

 private:
  std::vector<PseudonymRecord> records_;
  std::map<Pseudonym, std::size_t> index_;
};

inline const PseudonymRecord& issue_pseudonym(EscrowTable& escrow, RandomSource& rng, const VehicleId& vehicle,
                                              Millis now, Millis lifetime) {
  return escrow.issue(rng, vehicle, now, lifetime);
}

inline std::optional<VehicleId> escrow_recover(const EscrowTable& escrow, const Pseudonym& p) {
  return escrow.recover(p);
}

struct RateLimit {
  std::uint32_t capacity = 10;  // C
  double per_second = 2.0;      // r, resolved to 0.001 msg/s
};

enum class RateVerdict { Accept, Throttle };

/// Token bucket per sender. Over any window [a, b] one sender is accepted at
/// most C + r * (b - a) times. Arithmetic is exact (integer micro-tokens).
class RateLimiter {
 public:
  explicit RateLimiter(RateLimit limit = {});

  RateVerdict admit(const std::string& sender, Millis now);
  const RateLimit& limit() const { return limit_; }

 private:
  struct Bucket {
    std::int64_t micro_tokens = 0;
    Millis last = 0;
  };
  RateLimit limit_;
  std::int64_t rate_milli_;  // tokens per second * 1000
  std::map<std::string, Bucket> buckets_;
};

}  // namespace i2v::policy
