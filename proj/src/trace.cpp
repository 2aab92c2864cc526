#include "i2v/trace.hpp"

#include <fstream>
#include <sstream>

#include "i2v/error.hpp"

namespace i2v::trace {

using nlohmann::json;

void Trace::add(json record) {
  if (!record.is_object() || !record.contains("time") || !record.contains("kind"))
    throw Error(Errc::PreconditionViolation, "trace record needs time and kind");
  record["seq"] = records_.size();
  records_.push_back(std::move(record));
}

std::string Trace::to_jsonl() const {
  std::string out;
  for (const auto& r : records_) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

void Trace::write(std::ostream& out) const { out << to_jsonl(); }

void Trace::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  write(out);
  if (!out) throw Error(Errc::Io, "write failed: " + path);
}

Trace Trace::parse(std::istream& in) {
  Trace t;
  std::string line;
  std::size_t lineno = 0;
  Millis last = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(Errc::CorruptTrace, "line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!j.is_object() || !j.contains("time") || !j["time"].is_number_integer() || !j.contains("kind") ||
        !j["kind"].is_string())
      throw Error(Errc::CorruptTrace, "line " + std::to_string(lineno) + ": missing time or kind");
    const auto time = j["time"].get<Millis>();
    if (time < last) throw Error(Errc::CorruptTrace, "line " + std::to_string(lineno) + ": time goes backwards");
    last = time;
    t.records_.push_back(std::move(j));
  }
  return t;
}

Trace Trace::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + path);
  return parse(in);
}

bool involves(const json& r, const std::string& vehicle) {
  for (const char* key : {"vehicle", "node", "peer", "to", "origin_vehicle"}) {
    auto it = r.find(key);
    if (it != r.end() && it->is_string() && it->get<std::string>() == vehicle) return true;
  }
  for (const char* key : {"recipients", "registry"}) {
    auto it = r.find(key);
    if (it == r.end() || !it->is_array()) continue;
    for (const auto& v : *it) {
      if (v.is_string() && v.get<std::string>() == vehicle) return true;
      if (v.is_object() && v.value("vehicle", "") == vehicle) return true;
    }
  }
  return false;
}

std::vector<json> select(const Trace& trace, const Filter& f) {
  std::vector<json> out;
  for (const auto& r : trace.records()) {
    const auto time = r["time"].get<Millis>();
    if (f.from && time < *f.from) continue;
    if (f.to && time > *f.to) continue;
    if (f.kind && r["kind"].get<std::string>() != *f.kind) continue;
    if (f.vehicle && !involves(r, *f.vehicle)) continue;
    out.push_back(r);
  }
  return out;
}

Summary summarize(const Trace& trace) {
  Summary s;
  std::map<std::string, Millis> entered;
  Millis last = 0;
  for (const auto& r : trace.records()) {
    ++s.records;
    const auto kind = r["kind"].get<std::string>();
    const auto time = r["time"].get<Millis>();
    last = time;
    ++s.events_by_kind[kind];
    if (kind == "DELIVERY") {
      ++s.deliveries;
    } else if (kind == "BROADCAST") {
      ++s.broadcasts;
    } else if (kind == "DROP") {
      ++s.drops;
    } else if (kind == "VERDICT") {
      const auto verdict = r.value("verdict", "");
      if (verdict == "accept") {
        ++s.accepted;
      } else if (verdict == "duplicate") {
        ++s.duplicates;
      } else {
        ++s.rejections;
        ++s.rejections_by_stage[r.value("stage", "?")];
      }
    } else if (kind == "ENTER_RSU") {
      entered[r.value("vehicle", "")] = time;
    } else if (kind == "EXIT_RSU") {
      const auto v = r.value("vehicle", "");
      if (auto it = entered.find(v); it != entered.end()) {
        s.time_in_range[v] += time - it->second;
        entered.erase(it);
      }
    } else if (kind == "END") {
      s.registry.clear();
      for (const auto& row : r.value("registry", json::array())) s.registry.push_back(row.value("vehicle", ""));
    }
  }
  for (const auto& [v, t] : entered) s.time_in_range[v] += last - t;
  return s;
}

json to_json(const Summary& s) {
  return json{{"records", s.records},
              {"deliveries", s.deliveries},
              {"broadcasts", s.broadcasts},
              {"accepted", s.accepted},
              {"rejections", s.rejections},
              {"duplicates", s.duplicates},
              {"drops", s.drops},
              {"rejections_by_stage", s.rejections_by_stage},
              {"events_by_kind", s.events_by_kind},
              {"time_in_range_ms", s.time_in_range},
              {"registry", s.registry}};
}

std::string to_text(const Summary& s) {
  std::ostringstream out;
  out << "records     " << s.records << '\n'
      << "deliveries  " << s.deliveries << '\n'
      << "broadcasts  " << s.broadcasts << '\n'
      << "accepted    " << s.accepted << '\n'
      << "rejections  " << s.rejections << '\n'
      << "duplicates  " << s.duplicates << '\n'
      << "drops       " << s.drops << '\n';
  for (const auto& [stage, n] : s.rejections_by_stage) out << "  rejected at " << stage << ": " << n << '\n';
  out << "time in range (ms):\n";
  for (const auto& [v, t] : s.time_in_range) out << "  " << v << ": " << t << '\n';
  out << "events by kind:\n";
  for (const auto& [k, n] : s.events_by_kind) out << "  " << k << ": " << n << '\n';
  if (!s.registry.empty()) {
    out << "final registry:";
    for (const auto& v : s.registry) out << ' ' << v;
    out << '\n';
  }
  return out.str();
}

std::string format_record(const json& r) {
  std::ostringstream out;
  out << r["time"].get<Millis>() << "ms " << r["kind"].get<std::string>();
  for (const auto& [key, value] : r.items()) {
    if (key == "time" || key == "kind" || key == "seq") continue;
    out << ' ' << key << '=' << (value.is_string() ? value.get<std::string>() : value.dump());
  }
  return out.str();
}

}  // namespace i2v::trace
