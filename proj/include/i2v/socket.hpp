#pragma once

// Live transport: wire frames over TCP. Reads and writes on one stream are
// serialized independently, so a reader thread and writer threads can share it.

#include <atomic>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>

#include "i2v/bytes.hpp"

namespace i2v::transport {

inline constexpr std::uint16_t kDefaultPort = 5600;

class TcpStream {
 public:
  TcpStream() = default;
  explicit TcpStream(int fd) : fd_(fd) {}
  ~TcpStream();
  TcpStream(TcpStream&& other) noexcept;
  TcpStream& operator=(TcpStream&& other) noexcept;
  TcpStream(const TcpStream&) = delete;
  TcpStream& operator=(const TcpStream&) = delete;

  /// Throws Error(Io) when the peer cannot be reached.
  static TcpStream connect(const std::string& host, std::uint16_t port);

  /// Writes one complete frame. Returns false if the connection is gone.
  bool write_frame(ByteView frame);

  /// Blocks for one frame. nullopt on orderly close or I/O failure; throws
  /// i2v::Error if the peer sends a malformed header.
  std::optional<Bytes> read_frame();

  /// Unblocks a pending read_frame from another thread.
  void shutdown();
  bool valid() const { return fd_ >= 0; }

 private:
  int fd_ = -1;
  std::mutex write_mu_;
  std::mutex read_mu_;
};

class TcpListener {
 public:
  ~TcpListener();
  TcpListener(TcpListener&& other) noexcept : fd_(other.fd_.exchange(-1)), port_(other.port_) {}
  TcpListener(const TcpListener&) = delete;
  TcpListener& operator=(const TcpListener&) = delete;

  /// Binds 0.0.0.0:port (0 picks an ephemeral port). Throws Error(BindFailure).
  static TcpListener bind(std::uint16_t port);

  /// Blocks; returns nullopt once close() has been called.
  std::optional<int> accept_fd();
  void close();
  std::uint16_t port() const { return port_; }

 private:
  TcpListener(int fd, std::uint16_t port) : fd_(fd), port_(port) {}
  std::atomic<int> fd_{-1};
  std::uint16_t port_ = 0;
};

}  // namespace i2v::transport
