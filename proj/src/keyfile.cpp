#include "i2v/keyfile.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <sstream>

#include "i2v/error.hpp"

namespace i2v::keyfile {

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::BadKeyFile, "cannot open " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Bytes hex_field(const std::string& text, std::size_t lineno) {
  try {
    return from_hex(text);
  } catch (const Error&) {
    throw Error(Errc::BadKeyFile, "line " + std::to_string(lineno) + ": bad hex");
  }
}

}  // namespace

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + path);
  out << text;
  if (!out) throw Error(Errc::Io, "write failed: " + path);
}

rsu::Keys parse_keys(const std::string& text) {
  rsu::Keys keys;
  bool have_group = false;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream fields(line);
    std::vector<std::string> f;
    for (std::string w; fields >> w;) f.push_back(w);
    if (f.empty()) continue;
    const auto where = "line " + std::to_string(lineno);
    if (f[0] == "psk" && f.size() == 2) {
      keys.psk = hex_field(f[1], lineno);
    } else if (f[0] == "rsu-sign" && f.size() == 2) {
      keys.signing_seed = hex_field(f[1], lineno);
      if (keys.signing_seed.size() != crypto::kSeedSize) throw Error(Errc::BadKeyFile, where + ": seed length");
    } else if (f[0] == "group" && f.size() == 2) {
      const auto g = hex_field(f[1], lineno);
      if (g.size() != crypto::kKeySize) throw Error(Errc::BadKeyFile, where + ": group key length");
      std::copy(g.begin(), g.end(), keys.group_key.begin());
      have_group = true;
    } else if (f[0] == "obu-cred" && f.size() == 4) {
      auto role = policy::role_from_string(f[2]);
      if (!role || *role == policy::Role::Rsu) throw Error(Errc::BadKeyFile, where + ": bad role " + f[2]);
      rsu::Account account;
      account.role = *role;
      try {
        account.password = crypto::PasswordRecord::parse(hex_field(f[3], lineno));
      } catch (const Error& e) {
        throw Error(Errc::BadKeyFile, where + ": " + e.what());
      }
      if (!keys.accounts.emplace(f[1], account).second)
        throw Error(Errc::BadKeyFile, where + ": duplicate credential for " + f[1]);
    } else {
      throw Error(Errc::BadKeyFile, where + ": unrecognised entry '" + f[0] + "'");
    }
  }
  if (keys.psk.empty()) throw Error(Errc::BadKeyFile, "missing psk");
  if (keys.signing_seed.empty()) throw Error(Errc::BadKeyFile, "missing rsu-sign");
  if (!have_group) throw Error(Errc::BadKeyFile, "missing group");
  return keys;
}

rsu::Keys load_keys(const std::string& path) { return parse_keys(read_file(path)); }

std::string serialize_keys(const rsu::Keys& keys) {
  std::ostringstream out;
  out << "psk " << to_hex(keys.psk) << '\n';
  out << "rsu-sign " << to_hex(keys.signing_seed) << '\n';
  out << "group " << to_hex(keys.group_key) << '\n';
  for (const auto& [user, account] : keys.accounts)
    out << "obu-cred " << user << ' ' << policy::to_string(account.role) << ' '
        << to_hex(account.password.serialize()) << '\n';
  return out.str();
}

obu::Identity parse_identity(const std::string& text) {
  try {
    const auto node = YAML::Load(text);
    if (!node.IsMap()) throw Error(Errc::BadKeyFile, "identity must be a mapping");
    obu::Identity id;
    id.vehicle.value = node["vehicle_id"].as<std::string>();
    id.license = node["license"].as<std::string>();
    id.name = node["name"].as<std::string>();
    id.password = node["password"].as<std::string>();
    id.psk = from_hex(node["psk"].as<std::string>());
    id.signing_seed = from_hex(node["sign_key"].as<std::string>());
    if (id.signing_seed.size() != crypto::kSeedSize) throw Error(Errc::BadKeyFile, "sign_key must be 32 bytes");
    if (id.psk.empty()) throw Error(Errc::BadKeyFile, "empty psk");
    return id;
  } catch (const YAML::Exception& e) {
    throw Error(Errc::BadKeyFile, e.what());
  } catch (const Error& e) {
    if (e.code() == Errc::BadKeyFile) throw;
    throw Error(Errc::BadKeyFile, e.what());
  }
}

obu::Identity load_identity(const std::string& path) { return parse_identity(read_file(path)); }

std::string serialize_identity(const obu::Identity& id) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "vehicle_id" << YAML::Value << YAML::DoubleQuoted << id.vehicle.value;
  out << YAML::Key << "license" << YAML::Value << YAML::DoubleQuoted << id.license;
  out << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << id.name;
  out << YAML::Key << "password" << YAML::Value << YAML::DoubleQuoted << id.password;
  out << YAML::Key << "psk" << YAML::Value << to_hex(id.psk);
  out << YAML::Key << "sign_key" << YAML::Value << to_hex(id.signing_seed);
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

Generated generate(RandomSource& rng, const std::vector<std::string>& vehicles,
                   const std::set<std::string>& emergency, std::uint32_t password_iterations) {
  Generated g;
  g.keys.psk = rng.bytes(crypto::kKeySize);
  g.keys.signing_seed = rng.bytes(crypto::kSeedSize);
  rng.fill(g.keys.group_key);
  int n = 0;
  for (const auto& v : vehicles) {
    ++n;
    obu::Identity id;
    id.vehicle.value = v;
    id.license = "LIC-" + std::to_string(1000 + n);
    id.name = "Vehicle " + v;
    id.password = to_hex(rng.bytes(8));
    id.psk = g.keys.psk;
    id.signing_seed = rng.bytes(crypto::kSeedSize);
    rsu::Account account;
    account.role = emergency.count(v) ? policy::Role::EmergencyObu : policy::Role::Obu;
    account.password = crypto::hash_password(id.password, rng.bytes(crypto::kMinSaltSize), password_iterations);
    g.keys.accounts[v] = account;
    g.identities.push_back(std::move(id));
  }
  return g;
}

}  // namespace i2v::keyfile
