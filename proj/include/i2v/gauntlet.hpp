#pragma once

// Inbound envelope checks shared by the RSU and the OBU. Stages run in a fixed
// order and the first failure stops the pipeline:
//
//   decode -> session -> signature -> freshness -> replay -> authorization
//          -> rate limit -> decrypt
//
// The session stage resolves who the sender claims to be (and whether that
// sender may talk in the current session state); it has to run before the
// signature check because it supplies the verification key.

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include "i2v/bytes.hpp"
#include "i2v/crypto.hpp"
#include "i2v/policy.hpp"
#include "i2v/wire.hpp"

namespace i2v::gauntlet {

enum class Stage : std::uint8_t {
  Decode = 0,
  Session,
  Signature,
  Freshness,
  Replay,
  Authorization,
  RateLimit,
  Decrypt,
};

inline constexpr std::size_t kStageCount = 8;

std::string_view to_string(Stage s);

/// What the owner knows about the claimed sender of a decoded envelope.
struct SenderContext {
  std::optional<std::string> session_error;  // set => reject at the session stage
  Errc session_errc = Errc::ProtocolOrderViolation;
  Bytes public_key;
  policy::Role role = policy::Role::Obu;
  std::optional<std::string> rate_key;  // nullopt => exempt from rate limiting
  crypto::SymmetricKey key{};
  crypto::NonceDomain domain = crypto::NonceDomain::ObuToRsu;
};

using Resolver = std::function<SenderContext(const wire::Envelope&)>;

struct Verdict {
  bool accepted = false;
  Stage stage = Stage::Decode;  // failing stage; Decrypt when accepted
  std::string reason;
  std::optional<wire::Envelope> envelope;  // present from the session stage on
  Bytes plaintext;                        // set when accepted
  SenderContext sender;
};

struct Config {
  crypto::FreshnessPolicy freshness;
  std::uint64_t replay_width = 64;
  policy::RateLimit rate;
};

class Gauntlet {
 public:
  Gauntlet(Config config, policy::PolicyTable table);

  /// Runs every stage over a received frame (its type must match the envelope's payload type).
  Verdict check(const wire::Frame& frame, Millis now, const Resolver& resolve);

  /// entered[s]: times stage s ran; rejected[s]: times it was the failing stage.
  const std::array<std::uint64_t, kStageCount>& entered() const { return entered_; }
  const std::array<std::uint64_t, kStageCount>& rejected() const { return rejected_; }
  std::uint64_t accepted() const { return accepted_; }

  const policy::PolicyTable& table() const { return table_; }
  const Config& config() const { return config_; }

 private:
  Verdict reject(Verdict v, Stage s, std::string reason);

  Config config_;
  policy::PolicyTable table_;
  crypto::ReplayWindow replay_;
  policy::RateLimiter limiter_;
  std::array<std::uint64_t, kStageCount> entered_{};
  std::array<std::uint64_t, kStageCount> rejected_{};
  std::uint64_t accepted_ = 0;
};

/// Builds, seals and signs an outbound envelope and wraps it in a frame.
Bytes make_envelope_frame(wire::MessageType type, const Pseudonym& sender, std::uint64_t sequence, Millis timestamp,
                          ByteView plaintext, const crypto::SymmetricKey& key, crypto::NonceDomain domain,
                          const crypto::SigningKey& signer);

}  // namespace i2v::gauntlet
