#pragma once

// Vehicle-side client, sans-IO like the RSU. It runs the handshake when the
// vehicle enters range, beacons while registered, reports and receives
// hazards, and sends V2V messages either directly or through the RSU.

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "i2v/addressing.hpp"
#include "i2v/crypto.hpp"
#include "i2v/domain.hpp"
#include "i2v/events.hpp"
#include "i2v/gauntlet.hpp"
#include "i2v/messages.hpp"
#include "i2v/policy.hpp"
#include "i2v/random.hpp"
#include "i2v/transport.hpp"

namespace i2v::obu {

inline const transport::NodeId kRsuNode = "rsu";

enum class State { OutOfRange, Connecting, Authenticating, Registered, Rejected };

std::string_view to_string(State s);

struct Identity {
  VehicleId vehicle;
  std::string license;
  std::string name;
  std::string password;
  Bytes psk;
  Bytes signing_seed;
};

struct Config {
  gauntlet::Config checks;
  policy::PolicyTable policy = policy::PolicyTable::defaults();
  Millis beacon_interval = 1000;
  Millis handshake_timeout = 1000;  // doubled on every retry
  int handshake_retries = 3;
  std::size_t hazard_buffer = 32;
  Millis resume_window = 3000;  // re-entry within this keeps the old session
  bool use_lease = false;
  addressing::LeaseTimers lease_timers;
  bool rotate_pseudonyms = false;
};

struct Outbound {
  transport::NodeId to;
  Bytes frame;
};

enum class V2vPath { Direct, ViaRelay, Undeliverable };

std::string_view to_string(V2vPath p);

enum class ReportResult { Sent, Queued };

struct ReceivedHazard {
  HazardReport hazard;
  Pseudonym origin;
  std::uint64_t origin_sequence = 0;
  bool priority = false;
  Millis received_at = 0;
};

struct ReceivedMessage {
  Pseudonym from;
  Bytes payload;
  V2vPath path = V2vPath::Direct;
  Millis received_at = 0;
};

class Obu {
 public:
  Obu(Identity identity, Config config, std::unique_ptr<RandomSource> rng, EventSink sink = {});

  /// Starts (or resumes) the session. Only acts in OUT_OF_RANGE.
  std::vector<Outbound> on_enter_range(Millis now);
  void on_exit_range(Millis now);

  std::vector<Outbound> on_frame(const transport::NodeId& from, ByteView frame, Millis now);

  /// Beacons, handshake and lease timeouts.
  std::vector<Outbound> tick(Millis now);
  std::optional<Millis> next_deadline() const;

  /// Sent when registered, otherwise buffered (oldest dropped past the cap).
  std::pair<ReportResult, std::vector<Outbound>> report_hazard(const HazardReport& hazard, Millis now);

  /// Direct when `direct_node` is given (peer within V2V range), else via the
  /// RSU while in its range, else undeliverable. Throws Error(UnknownPeer)
  /// when the pseudonym is not in the RSU-provided peer list.
  std::pair<V2vPath, std::vector<Outbound>> send_v2v(const Pseudonym& peer, ByteView payload, Millis now,
                                                     const std::optional<transport::NodeId>& direct_node);

  void set_motion(double speed, const Vec2& position);

  /// Seals and signs an arbitrary envelope for the RSU under the current
  /// session. Throws Error(ProtocolOrderViolation) without a session key.
  Bytes craft_envelope(wire::MessageType type, ByteView plaintext, Millis now);
  /// Same, under the V2V group key, for direct delivery to a peer.
  Bytes craft_v2v_envelope(wire::MessageType type, ByteView plaintext, Millis now);

  State state() const { return state_; }
  bool in_range() const { return in_range_; }
  const Identity& identity() const { return identity_; }
  const Bytes& public_key() const { return signer_.public_key(); }
  std::optional<Pseudonym> pseudonym() const;
  std::optional<addressing::Address> address() const { return address_; }
  const std::vector<ReceivedHazard>& hazards() const { return hazards_; }
  const std::vector<ReceivedMessage>& messages() const { return messages_; }
  const std::map<Pseudonym, Bytes>& peers() const { return peers_; }
  std::size_t buffered_hazards() const { return buffer_.size(); }
  /// Every sequence number emitted in the current session, in order.
  const std::vector<std::uint64_t>& emitted_sequences() const { return emitted_; }
  std::optional<crypto::SessionKey> session_key() const { return key_; }
  const gauntlet::Gauntlet& checks() const { return gauntlet_; }
  int handshake_attempts() const { return attempts_total_; }
  std::optional<addressing::LeaseOutcome> lease_outcome() const { return lease_outcome_; }

 private:
  void emit(nlohmann::json event, Millis now);
  std::vector<Outbound> start_handshake(Millis now);
  std::vector<Outbound> send_hello_auth(Millis now);
  std::vector<Outbound> on_plain(const wire::Frame& frame, Millis now);
  std::vector<Outbound> on_envelope(const transport::NodeId& from, const wire::Frame& frame, Millis now);
  std::vector<Outbound> on_registered(const msg::RegisterOk& ok, Millis now);
  std::vector<Outbound> restart_or_give_up(Millis now, const std::string& why);
  Outbound to_rsu(wire::MessageType type, ByteView plaintext, Millis now);
  Outbound beacon(Millis now);
  const Pseudonym& next_sender();
  void reset_session();

  Identity identity_;
  Config config_;
  crypto::SigningKey signer_;
  std::unique_ptr<RandomSource> rng_;
  EventSink sink_;
  gauntlet::Gauntlet gauntlet_;

  State state_ = State::OutOfRange;
  bool in_range_ = false;
  double speed_ = 0.0;
  Vec2 position_ = Vec2::Zero();

  // Handshake
  msg::HandshakeNonce client_nonce_{};
  int attempt_ = 0;
  int attempts_total_ = 0;
  std::optional<Millis> handshake_deadline_;
  std::optional<addressing::LeaseClient> lease_;
  std::optional<addressing::LeaseOutcome> lease_outcome_;

  // Session
  std::optional<crypto::SessionKey> key_;
  Bytes rsu_public_key_;
  Pseudonym rsu_pseudonym_;
  policy::Role role_ = policy::Role::Obu;
  std::vector<Pseudonym> pseudonyms_;
  std::size_t rotation_ = 0;
  std::optional<addressing::Address> address_;
  crypto::SymmetricKey group_key_{};
  std::uint64_t sequence_ = 0;
  std::vector<std::uint64_t> emitted_;
  std::optional<Millis> last_sent_;
  std::optional<Millis> next_beacon_;

  std::map<Pseudonym, Bytes> peers_;
  std::deque<HazardReport> buffer_;
  std::set<std::pair<Pseudonym, std::uint64_t>> seen_hazards_;
  std::vector<ReceivedHazard> hazards_;
  std::vector<ReceivedMessage> messages_;
};

}  // namespace i2v::obu
