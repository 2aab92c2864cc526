#pragma once

// Key material on disk.
//
// RSU key file, one entry per line ('#' starts a comment):
//   psk <hex>
//   rsu-sign <hex 32-byte Ed25519 seed>
//   group <hex 32 bytes>
//   obu-cred <vehicle-id> <role> <PasswordRecord hex>
//
// OBU identity file, YAML: vehicle_id, license, name, password, psk, sign_key.

#include <set>
#include <string>
#include <vector>

#include "i2v/obu.hpp"
#include "i2v/random.hpp"
#include "i2v/rsu.hpp"

namespace i2v::keyfile {

/// Throws Error(BadKeyFile) with the offending line number.
rsu::Keys parse_keys(const std::string& text);
rsu::Keys load_keys(const std::string& path);
std::string serialize_keys(const rsu::Keys& keys);

/// Throws Error(BadKeyFile).
obu::Identity parse_identity(const std::string& text);
obu::Identity load_identity(const std::string& path);
std::string serialize_identity(const obu::Identity& id);

struct Generated {
  rsu::Keys keys;
  std::vector<obu::Identity> identities;
};

/// Fresh PSK, RSU seed, group key, and one identity plus credential per vehicle.
Generated generate(RandomSource& rng, const std::vector<std::string>& vehicles,
                   const std::set<std::string>& emergency = {},
                   std::uint32_t password_iterations = crypto::kDefaultPasswordIterations);

void write_file(const std::string& path, const std::string& text);

}  // namespace i2v::keyfile
