#pragma once

// Base-station service, written sans-IO: callers feed it received frames and
// clock ticks and ship the returned Outbound frames. The simulator and the
// live socket runner drive the same object.

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "i2v/addressing.hpp"
#include "i2v/audit.hpp"
#include "i2v/crypto.hpp"
#include "i2v/domain.hpp"
#include "i2v/events.hpp"
#include "i2v/gauntlet.hpp"
#include "i2v/messages.hpp"
#include "i2v/policy.hpp"
#include "i2v/random.hpp"

namespace i2v::rsu {

using ConnId = std::string;

enum class SessionState { Connected, Authenticating, Authenticated, Registered, Closed };

std::string_view to_string(SessionState s);

struct ClientRecord {
  VehicleId vehicle;
  std::string vehicle_name;
  std::string license_number;
  double speed = 0.0;  // m/s
  Vec2 position = Vec2::Zero();
  addressing::Address address;
  Pseudonym pseudonym;
  SessionId session_id;
  policy::Role role = policy::Role::Obu;
  Millis registered_at = 0;
  Millis last_seen = 0;
  ConnId conn;
  bool in_range = true;
};

/// Display form: speed in km/h, address as a dotted quad.
nlohmann::json to_json(const ClientRecord& r);

struct Account {
  crypto::PasswordRecord password;
  policy::Role role = policy::Role::Obu;
};

struct Keys {
  Bytes psk;
  Bytes signing_seed;  // Ed25519 seed
  crypto::SymmetricKey group_key{};
  std::map<std::string, Account> accounts;  // username == vehicle id
};

struct Config {
  gauntlet::Config checks;
  policy::PolicyTable policy = policy::PolicyTable::defaults();
  Millis client_timeout = 3000;
  Millis pseudonym_lifetime = 600000;
  int pseudonym_batch = 1;  // > 1 lets the OBU rotate pseudonyms per message
};

struct Outbound {
  ConnId to;
  Bytes frame;
  bool close = false;
};

struct Counters {
  std::uint64_t frames_in = 0;
  std::uint64_t envelopes_in = 0;
  std::uint64_t accepted = 0;
  std::uint64_t rejected = 0;
  std::uint64_t broadcasts = 0;
  std::uint64_t broadcast_deliveries = 0;
  std::uint64_t relays = 0;
  std::uint64_t relays_undeliverable = 0;
};

class Rsu {
 public:
  Rsu(Config config, Keys keys, addressing::AddressPool pool, std::unique_ptr<RandomSource> rng,
      EventSink sink = {}, Millis now = 0);

  std::vector<Outbound> on_frame(const ConnId& conn, ByteView frame, Millis now);

  /// Link state as reported by the range model (sim) or the socket layer (live).
  /// A client out of range keeps its record until the timeout but gets no broadcasts.
  void on_link_down(const ConnId& conn, Millis now);
  void on_link_up(const ConnId& conn, Millis now);

  /// Flushes queued broadcasts and peer lists, expires stale clients and leases.
  std::vector<Outbound> tick(Millis now);

  /// Queues an RSU-originated hazard; it goes out on the next tick.
  void broadcast_hazard(const HazardReport& hazard, Millis now);

  /// Removes sessions silent for longer than the client timeout.
  std::vector<ClientRecord> expire_stale_clients(Millis now);

  /// Earliest time a client can expire. Queued broadcasts are not included:
  /// callers tick after every batch of received frames.
  std::optional<Millis> next_deadline() const;

  /// Registered clients ordered by registration time.
  std::vector<ClientRecord> list_clients() const;

  std::optional<SessionState> session_state(const ConnId& conn) const;
  const audit::AuditLog& audit() const { return audit_; }
  audit::AuditLog& audit() { return audit_; }
  const policy::EscrowTable& escrow() const { return escrow_; }
  const gauntlet::Gauntlet& checks() const { return gauntlet_; }
  const Counters& counters() const { return counters_; }
  const addressing::AddressPool& pool() const { return pool_; }
  const Pseudonym& pseudonym() const { return pseudonym_; }
  const Bytes& public_key() const { return signer_.public_key(); }

 private:
  struct Session {
    ConnId conn;
    SessionState state = SessionState::Connected;
    policy::Role role = policy::Role::Obu;
    VehicleId vehicle;
    Bytes public_key;
    crypto::SessionKey key;
    std::vector<Pseudonym> pseudonyms;
    ClientRecord record;
    Millis last_seen = 0;
    bool in_range = true;
  };

  struct PendingBroadcast {
    msg::HazardBroadcast broadcast;
    std::optional<ConnId> exclude;
    std::uint64_t order = 0;
  };

  void emit(nlohmann::json event, Millis now);
  Session& session_for(const ConnId& conn, Millis now);
  Outbound error_to(const ConnId& conn, Errc code, const std::string& reason, bool close = false);
  Outbound seal_to(const Session& s, wire::MessageType type, ByteView plaintext, Millis now);
  void log_inbound(const ConnId& conn, const wire::Frame* frame, const wire::Envelope* env, bool accepted,
                   std::string_view stage, const std::string& reason, Millis now);
  void remove_session(const ConnId& conn, const std::string& reason, Millis now);

  std::vector<Outbound> on_plain(const ConnId& conn, const wire::Frame& frame, Millis now);
  std::vector<Outbound> on_auth(Session& s, const wire::Frame& frame, Millis now);
  std::vector<Outbound> on_envelope(const ConnId& conn, const wire::Frame& frame, Millis now);
  std::vector<Outbound> on_register(Session& s, const wire::Envelope& env, ByteView plaintext, Millis now);
  std::vector<Outbound> on_relay(Session& s, const wire::Envelope& env, ByteView plaintext, Millis now);

  std::vector<Outbound> flush_peer_lists(Millis now);
  std::vector<Outbound> flush_broadcasts(Millis now);

  Config config_;
  Keys keys_;
  crypto::SigningKey signer_;
  addressing::AddressPool pool_;
  std::unique_ptr<RandomSource> rng_;
  EventSink sink_;
  gauntlet::Gauntlet gauntlet_;
  audit::AuditLog audit_;
  policy::EscrowTable escrow_;
  Pseudonym pseudonym_;
  std::map<ConnId, Session> sessions_;
  std::vector<PendingBroadcast> pending_;
  std::uint64_t broadcast_order_ = 0;
  bool peers_dirty_ = false;
  std::uint64_t tx_sequence_ = 0;
  Counters counters_;
};

}  // namespace i2v::rsu
