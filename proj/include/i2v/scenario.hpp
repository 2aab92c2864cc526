#pragma once

// Scenario configs and the deterministic discrete-event engine that runs them.
// The grammar is documented in docs/CONFIG.md.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "i2v/addressing.hpp"
#include "i2v/keyfile.hpp"
#include "i2v/mobility.hpp"
#include "i2v/obu.hpp"
#include "i2v/rsu.hpp"
#include "i2v/trace.hpp"
#include "i2v/transport.hpp"

namespace i2v::scenario {

struct HazardEvent {
  Millis time = 0;
  HazardReport hazard;
  bool operator==(const HazardEvent&) const = default;
};

struct V2vEvent {
  Millis time = 0;
  std::string peer;
  std::string payload;
  bool operator==(const V2vEvent&) const = default;
};

enum class Credential { Valid, WrongPassword, Unknown };

struct VehicleConfig {
  std::string id;
  std::string license;
  std::string name;
  policy::Role role = policy::Role::Obu;
  Credential credential = Credential::Valid;
  Vec2 position = Vec2::Zero();
  double heading_deg = 0.0;  // 0 = +x, counter-clockwise
  double speed = 0.0;        // m/s
  std::vector<HazardEvent> hazards;
  std::vector<V2vEvent> v2v;
  bool operator==(const VehicleConfig&) const = default;
};

enum class AttackKind { Tamper, Replay, Flood, Masquerade };

std::string_view to_string(AttackKind k);

struct AttackConfig {
  AttackKind kind = AttackKind::Tamper;
  std::string vehicle;  // the insider (flood, masquerade) or the victim (tamper, replay)
  Millis time = 0;      // start
  Millis stop = 0;      // flood only
  double rate_per_second = 100.0;  // flood
  int count = 1;                   // masquerade
  Millis interval = 100;           // masquerade
  std::vector<std::size_t> bits;   // tamper: bit indices to flip; empty means every `stride`-th bit
  std::size_t stride = 97;
  std::string target = "rsu";      // replay: "rsu" (uplink frames) or "vehicle" (downlink frames)
  bool operator==(const AttackConfig&) const = default;
};

struct Range {
  Vec2 rsu_position = Vec2::Zero();
  double rsu_radius = 100.0;
  double v2v_radius = 100.0;
  bool operator==(const Range&) const = default;
};

struct Link {
  double loss = 0.0;
  Millis latency = 0;
  bool operator==(const Link&) const = default;
};

struct Security {
  Millis tau = 5000;
  std::uint64_t replay_window = 64;
  std::uint32_t rate_capacity = 10;
  double rate_per_second = 2.0;
  Millis client_timeout = 3000;
  Millis pseudonym_lifetime = 600000;
  bool rotate_pseudonyms = false;
  bool operator==(const Security&) const = default;
};

struct ObuSettings {
  Millis beacon_interval = 1000;
  Millis handshake_timeout = 1000;
  int handshake_retries = 3;
  std::uint32_t password_iterations = 1000;
  bool operator==(const ObuSettings&) const = default;
};

struct Addressing {
  addressing::Mode mode = addressing::Mode::Static;
  std::map<std::string, std::string> static_map;  // empty: 10.0.0.10 upwards in id order
  std::string pool_start = "10.0.1.1";
  std::uint32_t pool_size = 16;
  Millis lease = 60000;
  Millis timer_initial = 500;
  double backoff = 2.0;
  int max_attempts = 5;
  bool operator==(const Addressing&) const = default;
};

struct Config {
  std::uint64_t seed = 0;
  Millis duration = 0;
  Millis step = 100;
  Range range;
  Link link;
  Security security;
  ObuSettings obu;
  Addressing addressing;
  std::vector<VehicleConfig> vehicles;
  std::vector<HazardEvent> rsu_hazards;
  std::vector<AttackConfig> attacks;
  bool operator==(const Config&) const = default;
};

/// YAML, or JSON (a YAML subset). Throws Error(ConfigParse) with the line on
/// syntax errors and Error(ConfigValidation) with the field (and line) otherwise.
Config parse(const std::string& text);
Config load(const std::string& path);
std::string serialize(const Config& config);

/// Throws Error(ConfigValidation).
void validate(const Config& config);

// ---------------------------------------------------------------------------
// Engine

/// One frame seen on the simulated network, kept for replay and tamper attacks.
struct Captured {
  Millis time = 0;
  transport::NodeId from;
  transport::NodeId to;
  wire::MessageType type;
  Bytes frame;
};

class Engine {
 public:
  /// Keys and identities are derived from the seed. `observer` sees every trace record.
  explicit Engine(Config config, EventSink observer = {});

  /// Runs to the configured duration and appends the END record. Duration 0 does nothing.
  void run();
  /// Processes every event with time <= t.
  void run_until(Millis t);

  /// Sends a frame on the simulated network at the current time, as if `from` had.
  void inject(const transport::NodeId& from, const transport::NodeId& to, Bytes frame);
  /// Runs `action` at time t (>= now) in order with other scripted events.
  void schedule(Millis t, std::function<void(Millis)> action);

  Millis now() const { return now_; }
  const Config& config() const { return config_; }
  const trace::Trace& trace() const { return trace_; }
  rsu::Rsu& rsu() { return *rsu_; }
  obu::Obu& obu(const std::string& id);
  const std::map<std::string, std::unique_ptr<obu::Obu>>& obus() const { return obus_; }
  transport::SimNetwork& network() { return net_; }
  const mobility::MobilityModel& mobility() const { return mobility_; }
  const std::vector<Captured>& captured() const { return captured_; }
  const keyfile::Generated& keys() const { return keys_; }
  std::vector<rsu::ClientRecord> registry() const { return rsu_->list_clients(); }

 private:
  void record(nlohmann::json event);
  void initialize();
  void apply(const std::vector<mobility::ConnectivityEvent>& events);
  void settle();
  void run_scripts();
  void send(const transport::NodeId& from, const transport::NodeId& to, Bytes frame);
  void route(const transport::NodeId& from, std::vector<obu::Outbound> out);
  void route(std::vector<rsu::Outbound> out);
  void schedule_config_scripts();
  void schedule_attack(const AttackConfig& attack);
  std::optional<Millis> next_event_time() const;

  Config config_;
  EventSink observer_;
  trace::Trace trace_;
  keyfile::Generated keys_;
  transport::SimNetwork net_;
  mobility::MobilityModel mobility_;
  std::unique_ptr<rsu::Rsu> rsu_;
  std::map<std::string, std::unique_ptr<obu::Obu>> obus_;
  std::map<std::pair<Millis, std::uint64_t>, std::function<void(Millis)>> scripts_;
  std::uint64_t script_order_ = 0;
  std::vector<Captured> captured_;
  Millis now_ = 0;
  Millis next_step_ = 0;
  bool initialized_ = false;
};

/// Runs a config to completion and returns its trace.
trace::Trace run(const Config& config);

/// Names of the bundled scenarios under scenarios/.
const std::vector<std::string>& bundled();

// ---------------------------------------------------------------------------
// Lease statistics

struct LeaseSample {
  std::uint64_t seed = 0;
  double loss = 0.0;
  addressing::LeaseOutcome outcome;
};

/// `runs` independent lease exchanges at loss p, seeds seed, seed+1, ...
std::vector<LeaseSample> lease_samples(double p, int runs, std::uint64_t seed, Millis latency,
                                       const addressing::LeaseTimers& timers);

/// Header "seed,p,time_to_address_ms,outcome" then one row per sample.
std::string to_csv(const std::vector<LeaseSample>& samples);

}  // namespace i2v::scenario
