#pragma once

// Event traces: one JSON object per line, keys sorted, written in the order
// the engine produced them. Every record carries "time", "kind" and a running
// "seq" that breaks ties between records at the same millisecond.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "i2v/domain.hpp"

namespace i2v::trace {

class Trace {
 public:
  /// Appends a record, stamping "seq". The record must carry "time" and "kind".
  void add(nlohmann::json record);

  const std::vector<nlohmann::json>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }

  std::string to_jsonl() const;
  void write(std::ostream& out) const;
  /// Throws Error(Io).
  void save(const std::string& path) const;

  /// Throws Error(CorruptTrace) on malformed lines, missing fields or time going backwards.
  static Trace parse(std::istream& in);
  static Trace load(const std::string& path);

 private:
  std::vector<nlohmann::json> records_;
};

struct Filter {
  std::optional<std::string> vehicle;
  std::optional<std::string> kind;
  std::optional<Millis> from;  // inclusive
  std::optional<Millis> to;    // inclusive
};

/// True when the record names `vehicle` as subject, node, peer or recipient.
bool involves(const nlohmann::json& record, const std::string& vehicle);

std::vector<nlohmann::json> select(const Trace& trace, const Filter& filter);

struct Summary {
  std::size_t records = 0;
  std::size_t deliveries = 0;
  std::size_t broadcasts = 0;
  std::size_t accepted = 0;
  std::size_t rejections = 0;
  std::size_t duplicates = 0;
  std::size_t drops = 0;
  std::map<std::string, std::size_t> rejections_by_stage;
  std::map<std::string, std::size_t> events_by_kind;
  std::map<std::string, Millis> time_in_range;  // per vehicle, from ENTER_RSU/EXIT_RSU
  std::vector<std::string> registry;           // from the END record, if any
};

Summary summarize(const Trace& trace);
nlohmann::json to_json(const Summary& s);
std::string to_text(const Summary& s);

/// One human-readable line per record.
std::string format_record(const nlohmann::json& record);

}  // namespace i2v::trace
