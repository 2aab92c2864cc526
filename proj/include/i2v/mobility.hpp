#pragma once

// Constant-velocity kinematics and the circular range model. Range tests use a
// closed ball: a node exactly R metres away is in range.

#include <Eigen/Core>
#include <optional>
#include <set>
#include <string_view>
#include <utility>
#include <vector>

#include "i2v/domain.hpp"

namespace i2v::mobility {

struct RangeModel {
  Vec2 rsu_position = Vec2::Zero();
  double rsu_radius = 100.0;  // R
  double v2v_radius = 100.0;  // R_v
};

/// Throws Error(PreconditionViolation) unless both radii are positive.
void validate(const RangeModel& model);

template <typename DerivedP, typename DerivedQ>
bool in_range(const Eigen::MatrixBase<DerivedP>& p, const Eigen::MatrixBase<DerivedQ>& q,
              typename DerivedP::Scalar radius) {
  return (p - q).squaredNorm() <= radius * radius;
}

[[noreturn]] void throw_non_positive_speed();

/// Time a straight pass at perpendicular offset d spends inside radius R, in ms:
/// 2 * sqrt(R^2 - d^2) / v. nullopt when d > R. Throws Error(NonPositiveSpeed).
template <typename Scalar>
std::optional<Scalar> connectivity_window(Scalar lateral_offset, Scalar speed, Scalar radius) {
  using std::abs;
  using std::sqrt;
  if (!(speed > Scalar(0))) throw_non_positive_speed();
  const Scalar d = abs(lateral_offset);
  if (d > radius) return std::nullopt;
  return Scalar(2) * sqrt(radius * radius - d * d) / speed * Scalar(1000);
}

enum class EventKind { EnterRsu, ExitRsu, EnterV2v, ExitV2v };

std::string_view to_string(EventKind k);

struct ConnectivityEvent {
  Millis time = 0;
  EventKind kind;
  VehicleId subject;
  std::optional<VehicleId> peer;  // V2V events only; subject < peer
};

struct VehicleState {
  VehicleId id;
  Kinematics kinematics;
  bool in_rsu_range = false;
};

/// Advances every vehicle by heading * speed * dt, then recomputes RSU range
/// and pairwise V2V links, emitting one event per boolean transition.
class MobilityModel {
 public:
  /// Vehicles are kept sorted by id so event order is deterministic.
  MobilityModel(RangeModel range, std::vector<VehicleState> vehicles);

  /// ENTER events for everything already in range at time `now`. Call once.
  std::vector<ConnectivityEvent> initialize(Millis now);

  /// Throws Error(PreconditionViolation) for dt <= 0.
  std::vector<ConnectivityEvent> step(Millis dt);

  Millis now() const { return now_; }
  const RangeModel& range() const { return range_; }
  const std::vector<VehicleState>& vehicles() const { return vehicles_; }
  const VehicleState& vehicle(const VehicleId& id) const;
  /// Changes speed and heading from now on (constant velocity per segment).
  void set_velocity(const VehicleId& id, double speed, const Vec2& heading);
  bool v2v_linked(const VehicleId& a, const VehicleId& b) const;

 private:
  std::vector<ConnectivityEvent> recompute();

  RangeModel range_;
  std::vector<VehicleState> vehicles_;
  std::set<std::pair<VehicleId, VehicleId>> v2v_links_;
  Millis now_ = 0;
};

}  // namespace i2v::mobility
