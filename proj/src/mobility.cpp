#include "i2v/mobility.hpp"

#include <algorithm>

#include "i2v/error.hpp"

namespace i2v::mobility {

void throw_non_positive_speed() { throw Error(Errc::NonPositiveSpeed); }

void validate(const RangeModel& model) {
  if (!(model.rsu_radius > 0.0) || !(model.v2v_radius > 0.0))
    throw Error(Errc::PreconditionViolation, "range radii must be positive");
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::EnterRsu: return "ENTER_RSU";
    case EventKind::ExitRsu: return "EXIT_RSU";
    case EventKind::EnterV2v: return "ENTER_V2V";
    case EventKind::ExitV2v: return "EXIT_V2V";
  }
  return "UNKNOWN";
}

MobilityModel::MobilityModel(RangeModel range, std::vector<VehicleState> vehicles)
    : range_(std::move(range)), vehicles_(std::move(vehicles)) {
  validate(range_);
  std::sort(vehicles_.begin(), vehicles_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  for (auto& v : vehicles_) v.in_rsu_range = false;
}

std::vector<ConnectivityEvent> MobilityModel::initialize(Millis now) {
  now_ = now;
  return recompute();
}

std::vector<ConnectivityEvent> MobilityModel::step(Millis dt) {
  if (dt <= 0) throw Error(Errc::PreconditionViolation, "step dt must be positive");
  const double seconds = static_cast<double>(dt) / 1000.0;
  for (auto& v : vehicles_) {
    auto& k = v.kinematics;
    k.position += k.heading * (k.speed * seconds);
  }
  now_ += dt;
  return recompute();
}

std::vector<ConnectivityEvent> MobilityModel::recompute() {
  std::vector<ConnectivityEvent> events;
  for (auto& v : vehicles_) {
    const bool now_in = in_range(v.kinematics.position, range_.rsu_position, range_.rsu_radius);
    if (now_in != v.in_rsu_range) {
      events.push_back({now_, now_in ? EventKind::EnterRsu : EventKind::ExitRsu, v.id, std::nullopt});
      v.in_rsu_range = now_in;
    }
  }
  for (std::size_t i = 0; i < vehicles_.size(); ++i) {
    for (std::size_t j = i + 1; j < vehicles_.size(); ++j) {
      const auto& a = vehicles_[i];
      const auto& b = vehicles_[j];
      const bool linked = in_range(a.kinematics.position, b.kinematics.position, range_.v2v_radius);
      const auto key = std::pair{a.id, b.id};
      const bool was = v2v_links_.count(key) != 0;
      if (linked == was) continue;
      if (linked)
        v2v_links_.insert(key);
      else
        v2v_links_.erase(key);
      events.push_back({now_, linked ? EventKind::EnterV2v : EventKind::ExitV2v, a.id, b.id});
    }
  }
  return events;
}

const VehicleState& MobilityModel::vehicle(const VehicleId& id) const {
  auto it = std::find_if(vehicles_.begin(), vehicles_.end(), [&](const auto& v) { return v.id == id; });
  if (it == vehicles_.end()) throw Error(Errc::UnknownVehicle, id.value);
  return *it;
}

void MobilityModel::set_velocity(const VehicleId& id, double speed, const Vec2& heading) {
  auto it = std::find_if(vehicles_.begin(), vehicles_.end(), [&](const auto& v) { return v.id == id; });
  if (it == vehicles_.end()) throw Error(Errc::UnknownVehicle, id.value);
  it->kinematics.speed = speed;
  it->kinematics.heading = heading;
}

bool MobilityModel::v2v_linked(const VehicleId& a, const VehicleId& b) const {
  return v2v_links_.count(a < b ? std::pair{a, b} : std::pair{b, a}) != 0;
}

}  // namespace i2v::mobility
