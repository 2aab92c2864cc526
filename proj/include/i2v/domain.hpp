#pragma once

// Value types shared by every module. No I/O and no crypto in here.

#include <Eigen/Core>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "i2v/bytes.hpp"

namespace i2v {

/// Simulated (or wall-clock, in live mode) milliseconds.
using Millis = std::int64_t;

using Vec2 = Eigen::Vector2d;

/// Ed25519 verification keys are 32 bytes; crypto.hpp asserts agreement.
inline constexpr std::size_t kVerificationKeySize = 32;
inline constexpr std::size_t kMaxLicenseLength = 16;
inline constexpr std::size_t kMaxVehicleNameLength = 32;
inline constexpr std::size_t kMaxHazardDescription = 200;

struct VehicleId {
  std::string value;

  auto operator<=>(const VehicleId&) const = default;
  bool operator==(const VehicleId&) const = default;
};

struct VehicleIdentity {
  VehicleId id;
  std::string license_number;
  std::string vehicle_name;
  Bytes public_key;
};

enum class IdentityViolation {
  EmptyVehicleId,
  EmptyLicense,
  LicenseTooLong,
  LicenseNotPrintable,
  EmptyName,
  NameTooLong,
  NameNotPrintable,
  PublicKeyLength,
};

std::string_view to_string(IdentityViolation v);

/// Every violated invariant, in declaration order. Empty means valid.
std::vector<IdentityViolation> validate_identity(const VehicleIdentity& id);

bool is_printable(std::string_view s);

struct Kinematics {
  Vec2 position = Vec2::Zero();
  double speed = 0.0;  // m/s
  Vec2 heading = Vec2::UnitX();
};

/// speed >= 0 and |heading| == 1 within 1e-9.
bool is_valid(const Kinematics& k);

enum class HazardKind : std::uint8_t { Ice = 0, Accident = 1, Obstacle = 2, Congestion = 3, Other = 4 };

std::string_view to_string(HazardKind k);
std::optional<HazardKind> hazard_kind_from_string(std::string_view s);

struct HazardReport {
  HazardKind kind = HazardKind::Other;
  Vec2 location = Vec2::Zero();
  int severity = 1;
  std::string description;

  bool operator==(const HazardReport& o) const {
    return kind == o.kind && location == o.location && severity == o.severity &&
           description == o.description;
  }
};

bool is_valid(const HazardReport& h);

/// Monotone simulated clock. Only moves forward, and only when told to.
class SimClock {
 public:
  Millis now() const { return now_; }
  // Throws Error(PreconditionViolation) for dt <= 0.
  void step(Millis dt);
  // Throws Error(PreconditionViolation) if t < now().
  void advance_to(Millis t);

 private:
  Millis now_ = 0;
};

inline double mps_to_kmh(double mps) { return mps * 3.6; }

}  // namespace i2v
