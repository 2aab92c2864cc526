#pragma once

// Live mode: the same Rsu / Obu objects driven by wall-clock time over TCP.
// Timestamps are Unix milliseconds so processes on one host share a clock.

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "i2v/obu.hpp"
#include "i2v/rsu.hpp"
#include "i2v/socket.hpp"

namespace i2v::live {

Millis wall_clock_ms();

/// Frames from reader threads, handed to the single event-loop thread.
class Inbox {
 public:
  struct Item {
    std::string conn;
    std::optional<Bytes> frame;  // nullopt: connection closed
  };
  void push(Item item);
  /// Waits up to `timeout_ms`; returns everything queued.
  std::vector<Item> drain(Millis timeout_ms);

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<Item> items_;
};

/// RSU service over TCP. One accept thread, one reader thread per connection,
/// and one event-loop thread that owns the Rsu.
class LiveRsu {
 public:
  /// Binds immediately; throws Error(BindFailure).
  LiveRsu(rsu::Config config, rsu::Keys keys, std::uint16_t port, EventSink sink = {},
          std::optional<std::string> audit_path = std::nullopt);
  ~LiveRsu();
  LiveRsu(const LiveRsu&) = delete;
  LiveRsu& operator=(const LiveRsu&) = delete;

  std::uint16_t port() const { return listener_.port(); }
  void start();
  /// Closes every connection, joins all threads and flushes the audit log. Idempotent.
  void stop();

  /// Registry as of the last loop iteration; safe from any thread.
  std::vector<rsu::ClientRecord> snapshot() const;
  /// Queued for the event loop.
  void broadcast_hazard(const HazardReport& hazard);

 private:
  void accept_loop();
  void event_loop();
  void deliver(std::vector<rsu::Outbound> out);

  std::unique_ptr<rsu::Rsu> rsu_;
  EventSink sink_;
  transport::TcpListener listener_;
  Inbox inbox_;
  std::atomic<bool> running_{false};
  std::atomic<bool> stopped_{false};

  mutable std::mutex conns_mu_;
  std::map<std::string, std::shared_ptr<transport::TcpStream>> conns_;
  std::vector<std::thread> readers_;
  std::uint64_t next_conn_ = 0;

  mutable std::mutex snapshot_mu_;
  std::vector<rsu::ClientRecord> snapshot_;
  std::mutex hazards_mu_;
  std::vector<HazardReport> hazards_;

  std::thread accept_thread_;
  std::thread loop_thread_;
};

struct ServeOptions {
  std::uint16_t port = transport::kDefaultPort;
  std::string keys_path;
  std::string policy_path;
  Millis tau = 5000;
  Millis timeout = 3000;
  std::optional<std::string> audit_path;
};

/// Runs until `stop` becomes true. Prints one JSON object per line to stdout,
/// starting with {"kind":"LISTENING","port":N}. Returns the process exit code.
int rsu_serve(const ServeOptions& options, const std::atomic<bool>& stop);

struct JoinOptions {
  std::string host = "127.0.0.1";
  std::uint16_t port = transport::kDefaultPort;
  std::string identity_path;
  double speed = 0.0;  // m/s
  std::vector<std::string> hazards;  // reported once registered
  Millis hazard_delay = 1000;        // after registration
  std::optional<std::string> dump_hazards;
  Millis duration = 0;  // 0: until stopped
};

/// Exit codes: 0 registered and left cleanly, 2 rejected by the RSU,
/// 3 never registered, 1 on I/O or key-file errors.
int obu_join(const JoinOptions& options, const std::atomic<bool>& stop);

/// Received hazards as a JSON array.
nlohmann::json hazards_json(const obu::Obu& obu);

}  // namespace i2v::live
