#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "i2v/error.hpp"
#include "i2v/scenario.hpp"

namespace i2v::scenario {

namespace {

std::string line_of(const YAML::Node& n) {
  const auto mark = n.Mark();
  if (mark.line < 0) return "";
  return " (line " + std::to_string(mark.line + 1) + ")";
}

[[noreturn]] void invalid(const YAML::Node& at, const std::string& field, const std::string& why) {
  throw Error(Errc::ConfigValidation, field + line_of(at) + ": " + why);
}

void check_keys(const YAML::Node& map, const std::string& path, const std::set<std::string>& allowed) {
  if (!map.IsMap()) invalid(map, path, "expected a mapping");
  for (const auto& kv : map) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.count(key)) invalid(kv.first, path.empty() ? key : path + "." + key, "unknown field");
  }
}

template <typename T>
T scalar(const YAML::Node& n, const std::string& field) {
  if (!n.IsScalar()) invalid(n, field, "expected a scalar");
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    invalid(n, field, "wrong type");
  }
}

template <typename T>
void optional_field(const YAML::Node& parent, const char* key, const std::string& path, T& out) {
  const auto n = parent[key];
  if (n) out = scalar<T>(n, path.empty() ? key : path + "." + key);
}

Vec2 vec2(const YAML::Node& n, const std::string& field) {
  if (!n.IsSequence() || n.size() != 2) invalid(n, field, "expected [x, y]");
  const Vec2 v(scalar<double>(n[0], field), scalar<double>(n[1], field));
  if (!v.allFinite()) invalid(n, field, "not finite");
  return v;
}

HazardEvent hazard_event(const YAML::Node& n, const std::string& path) {
  check_keys(n, path, {"time_ms", "kind", "location", "severity", "description"});
  HazardEvent e;
  if (!n["time_ms"]) invalid(n, path + ".time_ms", "required");
  e.time = scalar<Millis>(n["time_ms"], path + ".time_ms");
  if (n["kind"]) {
    const auto kind = scalar<std::string>(n["kind"], path + ".kind");
    auto k = hazard_kind_from_string(kind);
    if (!k) invalid(n["kind"], path + ".kind", "unknown hazard kind " + kind);
    e.hazard.kind = *k;
  }
  if (n["location"]) e.hazard.location = vec2(n["location"], path + ".location");
  optional_field(n, "severity", path, e.hazard.severity);
  optional_field(n, "description", path, e.hazard.description);
  if (!is_valid(e.hazard)) invalid(n, path, "invalid hazard (severity 1..5, description up to 200 printable chars)");
  return e;
}

std::vector<HazardEvent> hazard_list(const YAML::Node& n, const std::string& path) {
  std::vector<HazardEvent> out;
  if (!n) return out;
  if (!n.IsSequence()) invalid(n, path, "expected a list");
  for (std::size_t i = 0; i < n.size(); ++i) out.push_back(hazard_event(n[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

VehicleConfig vehicle(const YAML::Node& n, const std::string& path) {
  check_keys(n, path,
             {"id", "license", "name", "role", "credential", "position", "heading_deg", "speed", "hazards", "v2v"});
  VehicleConfig v;
  if (!n["id"]) invalid(n, path + ".id", "required");
  v.id = scalar<std::string>(n["id"], path + ".id");
  v.license = "LIC-" + v.id;
  v.name = "Vehicle " + v.id;
  optional_field(n, "license", path, v.license);
  optional_field(n, "name", path, v.name);
  if (n["role"]) {
    const auto r = scalar<std::string>(n["role"], path + ".role");
    auto role = policy::role_from_string(r);
    if (!role || *role == policy::Role::Rsu) invalid(n["role"], path + ".role", "expected OBU or EMERGENCY_OBU");
    v.role = *role;
  }
  if (n["credential"]) {
    const auto c = scalar<std::string>(n["credential"], path + ".credential");
    if (c == "valid") v.credential = Credential::Valid;
    else if (c == "wrong_password") v.credential = Credential::WrongPassword;
    else if (c == "unknown") v.credential = Credential::Unknown;
    else invalid(n["credential"], path + ".credential", "expected valid, wrong_password or unknown");
  }
  if (n["position"]) v.position = vec2(n["position"], path + ".position");
  optional_field(n, "heading_deg", path, v.heading_deg);
  optional_field(n, "speed", path, v.speed);
  v.hazards = hazard_list(n["hazards"], path + ".hazards");
  if (const auto list = n["v2v"]) {
    if (!list.IsSequence()) invalid(list, path + ".v2v", "expected a list");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const auto p = path + ".v2v[" + std::to_string(i) + "]";
      check_keys(list[i], p, {"time_ms", "peer", "payload"});
      V2vEvent e;
      if (!list[i]["time_ms"] || !list[i]["peer"]) invalid(list[i], p, "time_ms and peer are required");
      e.time = scalar<Millis>(list[i]["time_ms"], p + ".time_ms");
      e.peer = scalar<std::string>(list[i]["peer"], p + ".peer");
      optional_field(list[i], "payload", p, e.payload);
      v.v2v.push_back(e);
    }
  }
  return v;
}

AttackConfig attack(const YAML::Node& n, const std::string& path) {
  check_keys(n, path,
             {"kind", "vehicle", "time_ms", "stop_ms", "rate_per_second", "count", "interval_ms", "bits", "stride",
              "target"});
  AttackConfig a;
  if (!n["kind"] || !n["vehicle"]) invalid(n, path, "kind and vehicle are required");
  const auto kind = scalar<std::string>(n["kind"], path + ".kind");
  if (kind == "tamper") a.kind = AttackKind::Tamper;
  else if (kind == "replay") a.kind = AttackKind::Replay;
  else if (kind == "flood") a.kind = AttackKind::Flood;
  else if (kind == "masquerade") a.kind = AttackKind::Masquerade;
  else invalid(n["kind"], path + ".kind", "unknown attack " + kind);
  a.vehicle = scalar<std::string>(n["vehicle"], path + ".vehicle");
  optional_field(n, "time_ms", path, a.time);
  optional_field(n, "stop_ms", path, a.stop);
  optional_field(n, "rate_per_second", path, a.rate_per_second);
  optional_field(n, "count", path, a.count);
  optional_field(n, "interval_ms", path, a.interval);
  optional_field(n, "stride", path, a.stride);
  optional_field(n, "target", path, a.target);
  if (const auto bits = n["bits"]) {
    if (!bits.IsSequence()) invalid(bits, path + ".bits", "expected a list");
    for (const auto& b : bits) a.bits.push_back(scalar<std::size_t>(b, path + ".bits"));
  }
  return a;
}

// Shortest decimal that reads back to the same double.
std::string fmt(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  std::string s(buf, r.ptr);
  if (s.find_first_of(".e") == std::string::npos && s.find("inf") == std::string::npos &&
      s.find("nan") == std::string::npos)
    s += ".0";
  return s;
}

void emit_vec(YAML::Emitter& out, const Vec2& v) {
  out << YAML::Flow << YAML::BeginSeq << fmt(v.x()) << fmt(v.y()) << YAML::EndSeq;
}

void emit_hazard(YAML::Emitter& out, const HazardEvent& h) {
  out << YAML::BeginMap;
  out << YAML::Key << "time_ms" << YAML::Value << h.time;
  out << YAML::Key << "kind" << YAML::Value << std::string(to_string(h.hazard.kind));
  out << YAML::Key << "location" << YAML::Value;
  emit_vec(out, h.hazard.location);
  out << YAML::Key << "severity" << YAML::Value << h.hazard.severity;
  out << YAML::Key << "description" << YAML::Value << YAML::DoubleQuoted << h.hazard.description;
  out << YAML::EndMap;
}

std::string_view credential_name(Credential c) {
  switch (c) {
    case Credential::Valid: return "valid";
    case Credential::WrongPassword: return "wrong_password";
    case Credential::Unknown: return "unknown";
  }
  return "valid";
}

}  // namespace

std::string_view to_string(AttackKind k) {
  switch (k) {
    case AttackKind::Tamper: return "tamper";
    case AttackKind::Replay: return "replay";
    case AttackKind::Flood: return "flood";
    case AttackKind::Masquerade: return "masquerade";
  }
  return "unknown";
}

Config parse(const std::string& text) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw Error(Errc::ConfigParse, "line " + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (!root.IsMap()) throw Error(Errc::ConfigParse, "top level must be a mapping");

  Config c;
  check_keys(root, "",
             {"seed", "duration_ms", "step_ms", "range", "link", "security", "obu", "addressing", "vehicles",
              "rsu_hazards", "attacks"});
  if (!root["seed"]) invalid(root, "seed", "required for simulation runs");
  c.seed = scalar<std::uint64_t>(root["seed"], "seed");
  optional_field(root, "duration_ms", "", c.duration);
  optional_field(root, "step_ms", "", c.step);

  if (const auto r = root["range"]) {
    check_keys(r, "range", {"rsu_position", "rsu_radius", "v2v_radius"});
    if (r["rsu_position"]) c.range.rsu_position = vec2(r["rsu_position"], "range.rsu_position");
    optional_field(r, "rsu_radius", "range", c.range.rsu_radius);
    optional_field(r, "v2v_radius", "range", c.range.v2v_radius);
  }
  if (const auto l = root["link"]) {
    check_keys(l, "link", {"loss", "latency_ms"});
    optional_field(l, "loss", "link", c.link.loss);
    optional_field(l, "latency_ms", "link", c.link.latency);
  }
  if (const auto s = root["security"]) {
    check_keys(s, "security",
               {"tau_ms", "replay_window", "rate_capacity", "rate_per_second", "client_timeout_ms",
                "pseudonym_lifetime_ms", "rotate_pseudonyms"});
    optional_field(s, "tau_ms", "security", c.security.tau);
    optional_field(s, "replay_window", "security", c.security.replay_window);
    optional_field(s, "rate_capacity", "security", c.security.rate_capacity);
    optional_field(s, "rate_per_second", "security", c.security.rate_per_second);
    optional_field(s, "client_timeout_ms", "security", c.security.client_timeout);
    optional_field(s, "pseudonym_lifetime_ms", "security", c.security.pseudonym_lifetime);
    optional_field(s, "rotate_pseudonyms", "security", c.security.rotate_pseudonyms);
  }
  if (const auto o = root["obu"]) {
    check_keys(o, "obu", {"beacon_interval_ms", "handshake_timeout_ms", "handshake_retries", "password_iterations"});
    optional_field(o, "beacon_interval_ms", "obu", c.obu.beacon_interval);
    optional_field(o, "handshake_timeout_ms", "obu", c.obu.handshake_timeout);
    optional_field(o, "handshake_retries", "obu", c.obu.handshake_retries);
    optional_field(o, "password_iterations", "obu", c.obu.password_iterations);
  }
  if (const auto a = root["addressing"]) {
    check_keys(a, "addressing",
               {"mode", "static", "pool_start", "pool_size", "lease_ms", "timer_initial_ms", "backoff",
                "max_attempts"});
    if (a["mode"]) {
      const auto mode = scalar<std::string>(a["mode"], "addressing.mode");
      if (mode == "static") c.addressing.mode = addressing::Mode::Static;
      else if (mode == "lease") c.addressing.mode = addressing::Mode::Lease;
      else invalid(a["mode"], "addressing.mode", "expected static or lease");
    }
    if (const auto m = a["static"]) {
      if (!m.IsMap()) invalid(m, "addressing.static", "expected a mapping of vehicle id to address");
      for (const auto& kv : m)
        c.addressing.static_map[kv.first.as<std::string>()] = scalar<std::string>(kv.second, "addressing.static");
    }
    optional_field(a, "pool_start", "addressing", c.addressing.pool_start);
    optional_field(a, "pool_size", "addressing", c.addressing.pool_size);
    optional_field(a, "lease_ms", "addressing", c.addressing.lease);
    optional_field(a, "timer_initial_ms", "addressing", c.addressing.timer_initial);
    optional_field(a, "backoff", "addressing", c.addressing.backoff);
    optional_field(a, "max_attempts", "addressing", c.addressing.max_attempts);
  }
  if (const auto v = root["vehicles"]) {
    if (!v.IsSequence()) invalid(v, "vehicles", "expected a list");
    for (std::size_t i = 0; i < v.size(); ++i) c.vehicles.push_back(vehicle(v[i], "vehicles[" + std::to_string(i) + "]"));
  }
  c.rsu_hazards = hazard_list(root["rsu_hazards"], "rsu_hazards");
  if (const auto a = root["attacks"]) {
    if (!a.IsSequence()) invalid(a, "attacks", "expected a list");
    for (std::size_t i = 0; i < a.size(); ++i) c.attacks.push_back(attack(a[i], "attacks[" + std::to_string(i) + "]"));
  }
  validate(c);
  return c;
}

Config load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return parse(s.str());
}

void validate(const Config& c) {
  auto fail = [](const std::string& field, const std::string& why) {
    throw Error(Errc::ConfigValidation, field + ": " + why);
  };
  if (c.duration < 0) fail("duration_ms", "must be >= 0");
  if (c.step <= 0) fail("step_ms", "must be > 0");
  if (!(c.range.rsu_radius > 0)) fail("range.rsu_radius", "must be > 0");
  if (!(c.range.v2v_radius > 0)) fail("range.v2v_radius", "must be > 0");
  if (!(c.link.loss >= 0 && c.link.loss <= 1)) fail("link.loss", "must be in [0, 1]");
  if (c.link.latency < 0) fail("link.latency_ms", "must be >= 0");
  if (c.security.tau <= 0) fail("security.tau_ms", "must be > 0");
  if (c.security.replay_window == 0) fail("security.replay_window", "must be > 0");
  if (c.security.rate_capacity < 1) fail("security.rate_capacity", "must be >= 1");
  if (!(c.security.rate_per_second >= 0.001)) fail("security.rate_per_second", "must be >= 0.001");
  if (c.security.client_timeout <= 0) fail("security.client_timeout_ms", "must be > 0");
  if (c.security.pseudonym_lifetime <= 0) fail("security.pseudonym_lifetime_ms", "must be > 0");
  if (c.obu.beacon_interval <= 0) fail("obu.beacon_interval_ms", "must be > 0");
  if (c.obu.handshake_timeout <= 0) fail("obu.handshake_timeout_ms", "must be > 0");
  if (c.obu.handshake_retries < 0) fail("obu.handshake_retries", "must be >= 0");
  if (c.obu.password_iterations == 0) fail("obu.password_iterations", "must be > 0");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < c.vehicles.size(); ++i) {
    const auto& v = c.vehicles[i];
    const auto path = "vehicles[" + std::to_string(i) + "]";
    if (v.id.empty() || !is_printable(v.id) || v.id.find(' ') != std::string::npos)
      fail(path + ".id", "must be non-empty printable without spaces");
    if (v.id == "rsu" || v.id == "sim") fail(path + ".id", "'" + v.id + "' is reserved");
    if (!ids.insert(v.id).second) fail(path + ".id", "duplicate vehicle " + v.id);
    const auto problems = validate_identity(VehicleIdentity{VehicleId{v.id}, v.license, v.name, Bytes(32)});
    if (!problems.empty()) fail(path, std::string(to_string(problems.front())));
    if (!(v.speed >= 0) || !std::isfinite(v.speed)) fail(path + ".speed", "must be >= 0");
    if (!std::isfinite(v.heading_deg)) fail(path + ".heading_deg", "not finite");
  }
  for (std::size_t i = 0; i < c.vehicles.size(); ++i) {
    const auto& v = c.vehicles[i];
    const auto path = "vehicles[" + std::to_string(i) + "]";
    for (const auto& h : v.hazards)
      if (h.time < 0) fail(path + ".hazards", "time_ms must be >= 0");
    for (const auto& e : v.v2v) {
      if (!ids.count(e.peer)) fail(path + ".v2v", "unknown peer " + e.peer);
      if (e.peer == v.id) fail(path + ".v2v", "peer is the vehicle itself");
      if (e.time < 0) fail(path + ".v2v", "time_ms must be >= 0");
    }
  }
  for (const auto& h : c.rsu_hazards)
    if (h.time < 0) fail("rsu_hazards", "time_ms must be >= 0");
  for (std::size_t i = 0; i < c.attacks.size(); ++i) {
    const auto& a = c.attacks[i];
    const auto path = "attacks[" + std::to_string(i) + "]";
    if (!ids.count(a.vehicle)) fail(path + ".vehicle", "unknown vehicle " + a.vehicle);
    if (a.time < 0) fail(path + ".time_ms", "must be >= 0");
    if (a.kind == AttackKind::Flood && (!(a.rate_per_second > 0) || a.stop < a.time))
      fail(path, "flood needs rate_per_second > 0 and stop_ms >= time_ms");
    if (a.kind == AttackKind::Masquerade && (a.count < 1 || a.interval <= 0))
      fail(path, "masquerade needs count >= 1 and interval_ms > 0");
    if (a.kind == AttackKind::Tamper && a.bits.empty() && a.stride == 0) fail(path + ".stride", "must be > 0");
    if (a.kind == AttackKind::Replay && a.target != "rsu" && a.target != "vehicle")
      fail(path + ".target", "expected rsu or vehicle");
  }

  if (c.addressing.mode == addressing::Mode::Static) {
    if (!c.addressing.static_map.empty()) {
      std::set<addressing::Address> used;
      for (const auto& [id, text] : c.addressing.static_map) {
        if (!ids.count(id)) fail("addressing.static", "unknown vehicle " + id);
        addressing::Address a;
        try {
          a = addressing::Address::parse(text);
        } catch (const Error&) {
          fail("addressing.static." + id, "bad address " + text);
        }
        if (!used.insert(a).second) fail("addressing.static." + id, "address assigned twice");
      }
      for (const auto& id : ids)
        if (!c.addressing.static_map.count(id)) fail("addressing.static", "no address for " + id);
    }
  } else {
    try {
      addressing::Address::parse(c.addressing.pool_start);
    } catch (const Error&) {
      fail("addressing.pool_start", "bad address");
    }
    if (c.addressing.pool_size == 0) fail("addressing.pool_size", "must be > 0");
    if (c.addressing.lease <= 0) fail("addressing.lease_ms", "must be > 0");
    if (c.addressing.timer_initial <= 0) fail("addressing.timer_initial_ms", "must be > 0");
    if (!(c.addressing.backoff >= 1)) fail("addressing.backoff", "must be >= 1");
    if (c.addressing.max_attempts < 1) fail("addressing.max_attempts", "must be >= 1");
  }
}

std::string serialize(const Config& c) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << c.seed;
  out << YAML::Key << "duration_ms" << YAML::Value << c.duration;
  out << YAML::Key << "step_ms" << YAML::Value << c.step;

  out << YAML::Key << "range" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "rsu_position" << YAML::Value;
  emit_vec(out, c.range.rsu_position);
  out << YAML::Key << "rsu_radius" << YAML::Value << fmt(c.range.rsu_radius);
  out << YAML::Key << "v2v_radius" << YAML::Value << fmt(c.range.v2v_radius);
  out << YAML::EndMap;

  out << YAML::Key << "link" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "loss" << YAML::Value << fmt(c.link.loss);
  out << YAML::Key << "latency_ms" << YAML::Value << c.link.latency;
  out << YAML::EndMap;

  out << YAML::Key << "security" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "tau_ms" << YAML::Value << c.security.tau;
  out << YAML::Key << "replay_window" << YAML::Value << c.security.replay_window;
  out << YAML::Key << "rate_capacity" << YAML::Value << c.security.rate_capacity;
  out << YAML::Key << "rate_per_second" << YAML::Value << fmt(c.security.rate_per_second);
  out << YAML::Key << "client_timeout_ms" << YAML::Value << c.security.client_timeout;
  out << YAML::Key << "pseudonym_lifetime_ms" << YAML::Value << c.security.pseudonym_lifetime;
  out << YAML::Key << "rotate_pseudonyms" << YAML::Value << c.security.rotate_pseudonyms;
  out << YAML::EndMap;

  out << YAML::Key << "obu" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "beacon_interval_ms" << YAML::Value << c.obu.beacon_interval;
  out << YAML::Key << "handshake_timeout_ms" << YAML::Value << c.obu.handshake_timeout;
  out << YAML::Key << "handshake_retries" << YAML::Value << c.obu.handshake_retries;
  out << YAML::Key << "password_iterations" << YAML::Value << c.obu.password_iterations;
  out << YAML::EndMap;

  out << YAML::Key << "addressing" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "mode" << YAML::Value << (c.addressing.mode == addressing::Mode::Static ? "static" : "lease");
  if (!c.addressing.static_map.empty()) {
    out << YAML::Key << "static" << YAML::Value << YAML::BeginMap;
    for (const auto& [id, addr] : c.addressing.static_map) out << YAML::Key << id << YAML::Value << addr;
    out << YAML::EndMap;
  }
  out << YAML::Key << "pool_start" << YAML::Value << c.addressing.pool_start;
  out << YAML::Key << "pool_size" << YAML::Value << c.addressing.pool_size;
  out << YAML::Key << "lease_ms" << YAML::Value << c.addressing.lease;
  out << YAML::Key << "timer_initial_ms" << YAML::Value << c.addressing.timer_initial;
  out << YAML::Key << "backoff" << YAML::Value << fmt(c.addressing.backoff);
  out << YAML::Key << "max_attempts" << YAML::Value << c.addressing.max_attempts;
  out << YAML::EndMap;

  out << YAML::Key << "vehicles" << YAML::Value << YAML::BeginSeq;
  for (const auto& v : c.vehicles) {
    out << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << YAML::DoubleQuoted << v.id;
    out << YAML::Key << "license" << YAML::Value << YAML::DoubleQuoted << v.license;
    out << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << v.name;
    out << YAML::Key << "role" << YAML::Value << std::string(policy::to_string(v.role));
    out << YAML::Key << "credential" << YAML::Value << std::string(credential_name(v.credential));
    out << YAML::Key << "position" << YAML::Value;
    emit_vec(out, v.position);
    out << YAML::Key << "heading_deg" << YAML::Value << fmt(v.heading_deg);
    out << YAML::Key << "speed" << YAML::Value << fmt(v.speed);
    if (!v.hazards.empty()) {
      out << YAML::Key << "hazards" << YAML::Value << YAML::BeginSeq;
      for (const auto& h : v.hazards) emit_hazard(out, h);
      out << YAML::EndSeq;
    }
    if (!v.v2v.empty()) {
      out << YAML::Key << "v2v" << YAML::Value << YAML::BeginSeq;
      for (const auto& e : v.v2v) {
        out << YAML::BeginMap;
        out << YAML::Key << "time_ms" << YAML::Value << e.time;
        out << YAML::Key << "peer" << YAML::Value << YAML::DoubleQuoted << e.peer;
        out << YAML::Key << "payload" << YAML::Value << YAML::DoubleQuoted << e.payload;
        out << YAML::EndMap;
      }
      out << YAML::EndSeq;
    }
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;

  if (!c.rsu_hazards.empty()) {
    out << YAML::Key << "rsu_hazards" << YAML::Value << YAML::BeginSeq;
    for (const auto& h : c.rsu_hazards) emit_hazard(out, h);
    out << YAML::EndSeq;
  }
  if (!c.attacks.empty()) {
    out << YAML::Key << "attacks" << YAML::Value << YAML::BeginSeq;
    for (const auto& a : c.attacks) {
      out << YAML::BeginMap;
      out << YAML::Key << "kind" << YAML::Value << std::string(to_string(a.kind));
      out << YAML::Key << "vehicle" << YAML::Value << YAML::DoubleQuoted << a.vehicle;
      out << YAML::Key << "time_ms" << YAML::Value << a.time;
      out << YAML::Key << "stop_ms" << YAML::Value << a.stop;
      out << YAML::Key << "rate_per_second" << YAML::Value << fmt(a.rate_per_second);
      out << YAML::Key << "count" << YAML::Value << a.count;
      out << YAML::Key << "interval_ms" << YAML::Value << a.interval;
      if (!a.bits.empty()) {
        out << YAML::Key << "bits" << YAML::Value << YAML::Flow << YAML::BeginSeq;
        for (auto b : a.bits) out << b;
        out << YAML::EndSeq;
      }
      out << YAML::Key << "stride" << YAML::Value << a.stride;
      out << YAML::Key << "target" << YAML::Value << a.target;
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace i2v::scenario
