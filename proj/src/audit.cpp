#include "i2v/audit.hpp"

#include <json.hpp>

#include "i2v/crypto.hpp"
#include "i2v/error.hpp"
#include "i2v/wire.hpp"

namespace i2v::audit {

using nlohmann::json;

namespace {

std::string_view kind_name(Kind k) {
  switch (k) {
    case Kind::Inbound: return "inbound";
    case Kind::Binding: return "binding";
    case Kind::Removal: return "removal";
  }
  return "unknown";
}

bool verify_with(const std::map<std::string, std::pair<std::string, Bytes>>& bindings, const Record& r) {
  if (r.kind != Kind::Inbound || !r.envelope) return false;
  try {
    const auto env = wire::decode_envelope(r.body);
    auto it = bindings.find(env.sender.hex());
    if (it == bindings.end()) return false;
    return crypto::verify(it->second.second, wire::envelope_signed_bytes(env), env.signature);
  } catch (const Error&) {
    return false;
  }
}

}  // namespace

std::string to_json_line(const Record& r) {
  json j;
  j["kind"] = kind_name(r.kind);
  j["time"] = r.time;
  j["conn"] = r.conn;
  switch (r.kind) {
    case Kind::Inbound:
      j["type"] = r.type;
      j["envelope"] = r.envelope;
      j["body"] = to_hex(r.body);
      j["sender"] = r.sender;
      j["signature"] = r.signature;
      j["accepted"] = r.accepted;
      j["stage"] = r.stage;
      j["reason"] = r.reason;
      break;
    case Kind::Binding:
      j["token"] = r.token;
      j["vehicle"] = r.vehicle;
      j["public_key"] = to_hex(r.public_key);
      break;
    case Kind::Removal:
      j["vehicle"] = r.vehicle;
      j["reason"] = r.reason;
      break;
  }
  return j.dump();
}

Record from_json_line(const std::string& line) {
  try {
    const auto j = json::parse(line);
    Record r;
    const auto kind = j.at("kind").get<std::string>();
    r.time = j.at("time").get<Millis>();
    r.conn = j.at("conn").get<std::string>();
    if (kind == "inbound") {
      r.kind = Kind::Inbound;
      r.type = j.at("type").get<std::string>();
      r.envelope = j.at("envelope").get<bool>();
      r.body = from_hex(j.at("body").get<std::string>());
      r.sender = j.at("sender").get<std::string>();
      r.signature = j.at("signature").get<std::string>();
      r.accepted = j.at("accepted").get<bool>();
      r.stage = j.at("stage").get<std::string>();
      r.reason = j.at("reason").get<std::string>();
    } else if (kind == "binding") {
      r.kind = Kind::Binding;
      r.token = j.at("token").get<std::string>();
      r.vehicle = j.at("vehicle").get<std::string>();
      r.public_key = from_hex(j.at("public_key").get<std::string>());
    } else if (kind == "removal") {
      r.kind = Kind::Removal;
      r.vehicle = j.at("vehicle").get<std::string>();
      r.reason = j.at("reason").get<std::string>();
    } else {
      throw Error(Errc::CorruptTrace, "unknown audit record kind " + kind);
    }
    return r;
  } catch (const json::exception& e) {
    throw Error(Errc::CorruptTrace, e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::CorruptTrace) throw;
    throw Error(Errc::CorruptTrace, e.what());
  }
}

void AuditLog::open_file(const std::string& path) {
  file_.open(path, std::ios::app);
  if (!file_) throw Error(Errc::Io, "cannot open audit log " + path);
  for (const auto& r : records_) file_ << to_json_line(r) << '\n';
}

void AuditLog::flush() {
  if (file_.is_open()) file_.flush();
}

void AuditLog::append(Record r) {
  if (r.kind == Kind::Binding) bindings_[r.token] = {r.vehicle, r.public_key};
  if (file_.is_open()) file_ << to_json_line(r) << '\n';
  records_.push_back(std::move(r));
}

std::size_t AuditLog::inbound_envelopes() const {
  std::size_t n = 0;
  for (const auto& r : records_) n += (r.kind == Kind::Inbound && r.envelope) ? 1 : 0;
  return n;
}

bool AuditLog::reverify(const Record& inbound) const { return verify_with(bindings_, inbound); }

ReverifyReport AuditLog::reverify_all() const { return reverify_records(records_); }

std::optional<std::string> AuditLog::vehicle_of(const std::string& token_hex) const {
  auto it = bindings_.find(token_hex);
  if (it == bindings_.end()) return std::nullopt;
  return it->second.first;
}

ReverifyReport reverify_records(const std::vector<Record>& records) {
  std::map<std::string, std::pair<std::string, Bytes>> bindings;
  for (const auto& r : records)
    if (r.kind == Kind::Binding) bindings[r.token] = {r.vehicle, r.public_key};
  ReverifyReport report;
  for (const auto& r : records) {
    if (r.kind != Kind::Inbound || !r.envelope || !r.accepted) continue;
    ++report.checked;
    if (verify_with(bindings, r)) ++report.verified;
  }
  return report;
}

ReverifyReport reverify_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  std::vector<Record> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(from_json_line(line));
  }
  return reverify_records(records);
}

}  // namespace i2v::audit
