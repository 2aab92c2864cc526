#pragma once

// Append-only evidence store kept by the RSU. Every inbound frame is logged
// with its verdict; key bindings (sender token -> vehicle, public key) are
// logged as they are learned, so accepted envelopes can be re-verified offline
// from the log alone.

#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "i2v/bytes.hpp"
#include "i2v/domain.hpp"

namespace i2v::audit {

enum class Kind { Inbound, Binding, Removal };

struct Record {
  Kind kind = Kind::Inbound;
  Millis time = 0;
  std::string conn;

  // Inbound
  std::string type;       // message type name
  bool envelope = false;  // body is an encoded Envelope
  Bytes body;
  std::string sender;     // envelope sender token, hex
  std::string signature;  // hex
  bool accepted = false;
  std::string stage;      // failing stage, or "accepted"
  std::string reason;

  // Binding / Removal
  std::string token;  // hex
  std::string vehicle;
  Bytes public_key;
};

std::string to_json_line(const Record& r);
/// Throws Error(CorruptTrace) on malformed input.
Record from_json_line(const std::string& line);

struct ReverifyReport {
  std::size_t checked = 0;   // accepted envelopes examined
  std::size_t verified = 0;  // whose signature verified under the bound key
  bool all_ok() const { return checked == verified; }
};

class AuditLog {
 public:
  AuditLog() = default;
  AuditLog(const AuditLog&) = delete;
  AuditLog& operator=(const AuditLog&) = delete;

  /// Mirrors every subsequent record to `path` (appending). Throws Error(Io).
  void open_file(const std::string& path);
  void flush();

  void append(Record r);
  const std::vector<Record>& records() const { return records_; }

  std::size_t inbound_envelopes() const;

  /// Offline check of one inbound record against the bindings seen so far.
  bool reverify(const Record& inbound) const;
  ReverifyReport reverify_all() const;

  /// Vehicle bound to a sender token, if any.
  std::optional<std::string> vehicle_of(const std::string& token_hex) const;

 private:
  std::vector<Record> records_;
  std::map<std::string, std::pair<std::string, Bytes>> bindings_;
  std::ofstream file_;
};

/// Loads a JSONL audit file and re-verifies it. Throws Error(Io) / Error(CorruptTrace).
ReverifyReport reverify_file(const std::string& path);

/// Re-verifies an arbitrary record sequence (bindings are taken from the same sequence).
ReverifyReport reverify_records(const std::vector<Record>& records);

}  // namespace i2v::audit
