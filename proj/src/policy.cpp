#include "i2v/policy.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "i2v/error.hpp"

namespace i2v::policy {

using wire::MessageType;

std::string_view to_string(Role r) {
  switch (r) {
    case Role::Rsu: return "RSU";
    case Role::Obu: return "OBU";
    case Role::EmergencyObu: return "EMERGENCY_OBU";
  }
  return "UNKNOWN";
}

std::optional<Role> role_from_string(std::string_view s) {
  if (s == "RSU") return Role::Rsu;
  if (s == "OBU") return Role::Obu;
  if (s == "EMERGENCY_OBU") return Role::EmergencyObu;
  return std::nullopt;
}

PolicyTable PolicyTable::defaults() {
  PolicyTable t;
  for (auto type : {MessageType::HazardBcast, MessageType::PeerList, MessageType::Relay, MessageType::AuthOk,
                    MessageType::RegisterOk, MessageType::AddrOffer, MessageType::AddrAck})
    t.allow(Role::Rsu, type);
  for (auto role : {Role::Obu, Role::EmergencyObu})
    for (auto type : {MessageType::Hello, MessageType::Auth, MessageType::Register, MessageType::Beacon,
                      MessageType::Hazard, MessageType::Relay, MessageType::Disconnect,
                      MessageType::AddrDiscover, MessageType::AddrRequest})
      t.allow(role, type);
  return t;
}

PolicyTable PolicyTable::parse(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw Error(Errc::ConfigParse, e.what());
  }
  if (!root.IsMap()) throw Error(Errc::ConfigValidation, "policy must map role names to type lists");
  PolicyTable t;
  for (const auto& entry : root) {
    const auto name = entry.first.as<std::string>();
    auto role = role_from_string(name);
    if (!role)
      throw Error(Errc::ConfigValidation,
                  "line " + std::to_string(entry.first.Mark().line + 1) + ": unknown role '" + name + "'");
    if (!entry.second.IsSequence())
      throw Error(Errc::ConfigValidation, "line " + std::to_string(entry.second.Mark().line + 1) +
                                              ": role '" + name + "' needs a list of message types");
    for (const auto& item : entry.second) {
      const auto type_name = item.as<std::string>();
      auto type = wire::message_type_from_name(type_name);
      if (!type)
        throw Error(Errc::ConfigValidation, "line " + std::to_string(item.Mark().line + 1) +
                                                ": unknown message type '" + type_name + "'");
      t.allow(*role, *type);
    }
  }
  return t;
}

PolicyTable PolicyTable::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open policy file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

std::string PolicyTable::serialize() const {
  std::ostringstream out;
  for (auto role : {Role::Rsu, Role::Obu, Role::EmergencyObu}) {
    out << to_string(role) << ": [";
    bool first = true;
    for (const auto& [r, type] : allowed_) {
      if (r != role) continue;
      out << (first ? "" : ", ") << wire::to_string(type);
      first = false;
    }
    out << "]\n";
  }
  return out.str();
}

// ---------------------------------------------------------------------------

const PseudonymRecord& EscrowTable::issue(RandomSource& rng, const VehicleId& vehicle, Millis now,
                                          Millis lifetime) {
  if (lifetime <= 0) throw Error(Errc::PreconditionViolation, "pseudonym lifetime must be positive");
  PseudonymRecord rec;
  do {
    rng.fill(rec.pseudonym.bytes);
  } while (index_.count(rec.pseudonym) != 0);
  rec.vehicle_id = vehicle;
  rec.issued_at = now;
  rec.expires_at = now + lifetime;
  index_.emplace(rec.pseudonym, records_.size());
  records_.push_back(std::move(rec));
  return records_.back();
}

std::optional<VehicleId> EscrowTable::recover(const Pseudonym& p) const {
  auto it = index_.find(p);
  if (it == index_.end()) return std::nullopt;
  return records_[it->second].vehicle_id;
}

bool EscrowTable::is_live(const Pseudonym& p, Millis now) const {
  auto it = index_.find(p);
  return it != index_.end() && now < records_[it->second].expires_at;
}

void EscrowTable::export_to(std::ostream& out) const {
  for (const auto& r : records_)
    out << r.pseudonym.hex() << ' ' << r.vehicle_id.value << ' ' << r.issued_at << ' ' << r.expires_at << '\n';
}

// ---------------------------------------------------------------------------

namespace {
constexpr std::int64_t kMicro = 1'000'000;
}

RateLimiter::RateLimiter(RateLimit limit)
    : limit_(limit), rate_milli_(static_cast<std::int64_t>(std::llround(limit.per_second * 1000.0))) {
  if (limit.capacity < 1 || rate_milli_ <= 0)
    throw Error(Errc::PreconditionViolation, "rate limit needs C >= 1 and r > 0");
}

RateVerdict RateLimiter::admit(const std::string& sender, Millis now) {
  const std::int64_t full = static_cast<std::int64_t>(limit_.capacity) * kMicro;
  auto [it, inserted] = buckets_.try_emplace(sender, Bucket{full, now});
  Bucket& b = it->second;
  if (now > b.last) {
    // rate_milli / 1000 tokens/s * dt / 1000 s = rate_milli * dt micro-tokens
    b.micro_tokens = std::min(full, b.micro_tokens + rate_milli_ * (now - b.last));
    b.last = now;
  }
  if (b.micro_tokens < kMicro) return RateVerdict::Throttle;
  b.micro_tokens -= kMicro;
  return RateVerdict::Accept;
}

}  // namespace i2v::policy
