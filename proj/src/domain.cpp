#include "i2v/domain.hpp"

#include <array>
#include <cmath>

#include "i2v/error.hpp"

namespace i2v {

std::string_view to_string(IdentityViolation v) {
  switch (v) {
    case IdentityViolation::EmptyVehicleId: return "empty vehicle id";
    case IdentityViolation::EmptyLicense: return "empty license";
    case IdentityViolation::LicenseTooLong: return "license too long";
    case IdentityViolation::LicenseNotPrintable: return "license not printable";
    case IdentityViolation::EmptyName: return "empty name";
    case IdentityViolation::NameTooLong: return "name too long";
    case IdentityViolation::NameNotPrintable: return "name not printable";
    case IdentityViolation::PublicKeyLength: return "key length";
  }
  return "unknown";
}

bool is_printable(std::string_view s) {
  for (unsigned char c : s)
    if (c < 0x20 || c > 0x7e) return false;
  return true;
}

std::vector<IdentityViolation> validate_identity(const VehicleIdentity& id) {
  std::vector<IdentityViolation> out;
  if (id.id.value.empty()) out.push_back(IdentityViolation::EmptyVehicleId);
  if (id.license_number.empty()) out.push_back(IdentityViolation::EmptyLicense);
  if (id.license_number.size() > kMaxLicenseLength) out.push_back(IdentityViolation::LicenseTooLong);
  if (!is_printable(id.license_number)) out.push_back(IdentityViolation::LicenseNotPrintable);
  if (id.vehicle_name.empty()) out.push_back(IdentityViolation::EmptyName);
  if (id.vehicle_name.size() > kMaxVehicleNameLength) out.push_back(IdentityViolation::NameTooLong);
  if (!is_printable(id.vehicle_name)) out.push_back(IdentityViolation::NameNotPrintable);
  if (id.public_key.size() != kVerificationKeySize) out.push_back(IdentityViolation::PublicKeyLength);
  return out;
}

bool is_valid(const Kinematics& k) {
  return k.speed >= 0.0 && std::isfinite(k.speed) && k.position.allFinite() &&
         std::abs(k.heading.norm() - 1.0) <= 1e-9;
}

namespace {
constexpr std::array<std::string_view, 5> kHazardNames = {"ice", "accident", "obstacle", "congestion",
                                                          "other"};
}

std::string_view to_string(HazardKind k) { return kHazardNames.at(static_cast<std::size_t>(k)); }

std::optional<HazardKind> hazard_kind_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kHazardNames.size(); ++i)
    if (kHazardNames[i] == s) return static_cast<HazardKind>(i);
  return std::nullopt;
}

bool is_valid(const HazardReport& h) {
  return static_cast<std::uint8_t>(h.kind) <= static_cast<std::uint8_t>(HazardKind::Other) &&
         h.severity >= 1 && h.severity <= 5 && h.description.size() <= kMaxHazardDescription &&
         h.location.allFinite();
}

void SimClock::step(Millis dt) {
  if (dt <= 0) throw Error(Errc::PreconditionViolation, "clock step must be positive");
  now_ += dt;
}

void SimClock::advance_to(Millis t) {
  if (t < now_) throw Error(Errc::PreconditionViolation, "clock cannot move backwards");
  now_ = t;
}

}  // namespace i2v
