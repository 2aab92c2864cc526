#pragma once

// Deterministic in-memory network. Links are symmetric; whether a link is up
// is decided by the scenario engine from the range model on every step.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "i2v/bytes.hpp"
#include "i2v/domain.hpp"
#include "i2v/random.hpp"

namespace i2v::transport {

using NodeId = std::string;

struct LinkState {
  bool connected = false;
  double loss_probability = 0.0;  // [0, 1]
  Millis latency = 0;             // >= 0
};

enum class SendOutcome { Queued, Dropped };

struct SendResult {
  SendOutcome outcome;
  Millis deliver_at = 0;  // meaningful when queued
};

struct Delivery {
  NodeId from;
  Bytes frame;
  Millis deliver_at = 0;
  std::uint64_t send_seq = 0;
};

enum class DropReason { Disconnected, Loss };

struct DropRecord {
  NodeId from;
  NodeId to;
  Millis time = 0;
  DropReason reason;
  std::uint64_t send_seq = 0;
};

class SimNetwork {
 public:
  explicit SimNetwork(std::uint64_t seed);

  void add_endpoint(const NodeId& id);
  bool has_endpoint(const NodeId& id) const { return queues_.count(id) != 0; }

  /// Throws Error(PreconditionViolation) for loss outside [0,1] or negative latency.
  void set_link(const NodeId& a, const NodeId& b, LinkState state);
  void set_connected(const NodeId& a, const NodeId& b, bool connected);
  LinkState link(const NodeId& a, const NodeId& b) const;

  /// Drops on a down link, or with the link's loss probability; otherwise the
  /// frame becomes due at now + latency, never ahead of earlier frames on the
  /// same (from, to) pair. Throws Error(UnknownEndpoint).
  SendResult send(const NodeId& from, const NodeId& to, Bytes frame, Millis now);

  /// Removes and returns every frame due by `now`, ordered by (due time, send order).
  std::vector<Delivery> poll(const NodeId& endpoint, Millis now);

  std::optional<Millis> next_delivery_time() const;

  const std::vector<DropRecord>& drops() const { return drops_; }
  std::uint64_t sent() const { return next_seq_; }

 private:
  using Key = std::pair<NodeId, NodeId>;
  static Key link_key(const NodeId& a, const NodeId& b) { return a < b ? Key{a, b} : Key{b, a}; }

  SeededRandom rng_;
  std::map<NodeId, std::map<std::pair<Millis, std::uint64_t>, Delivery>> queues_;
  std::map<Key, LinkState> links_;
  std::map<Key, Millis> last_due_;  // ordered (from, to) pair
  std::vector<DropRecord> drops_;
  std::uint64_t next_seq_ = 0;
};

}  // namespace i2v::transport
