#include "i2v/gauntlet.hpp"

#include "i2v/error.hpp"

namespace i2v::gauntlet {

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Decode: return "decode";
    case Stage::Session: return "session";
    case Stage::Signature: return "signature";
    case Stage::Freshness: return "freshness";
    case Stage::Replay: return "replay";
    case Stage::Authorization: return "authorization";
    case Stage::RateLimit: return "rate_limit";
    case Stage::Decrypt: return "decrypt";
  }
  return "unknown";
}

Gauntlet::Gauntlet(Config config, policy::PolicyTable table)
    : config_(config), table_(std::move(table)), replay_(config.replay_width), limiter_(config.rate) {
  if (config_.freshness.tau <= 0) throw Error(Errc::PreconditionViolation, "tau must be positive");
}

Verdict Gauntlet::reject(Verdict v, Stage s, std::string reason) {
  ++rejected_[static_cast<std::size_t>(s)];
  v.accepted = false;
  v.stage = s;
  v.reason = std::move(reason);
  return v;
}

Verdict Gauntlet::check(const wire::Frame& frame, Millis now, const Resolver& resolve) {
  Verdict v;
  auto enter = [&](Stage s) { ++entered_[static_cast<std::size_t>(s)]; };

  enter(Stage::Decode);
  wire::Envelope env;
  try {
    env = wire::decode_envelope(frame.body);
  } catch (const Error& e) {
    return reject(std::move(v), Stage::Decode, std::string(to_string(e.code())));
  }
  if (env.payload_type != frame.type) return reject(std::move(v), Stage::Decode, "frame/envelope type mismatch");
  v.envelope = env;

  enter(Stage::Session);
  v.sender = resolve(env);
  if (v.sender.session_error) return reject(std::move(v), Stage::Session, *v.sender.session_error);

  enter(Stage::Signature);
  if (!crypto::verify(v.sender.public_key, wire::envelope_signed_bytes(env), env.signature))
    return reject(std::move(v), Stage::Signature, "bad signature");

  enter(Stage::Freshness);
  if (auto f = crypto::check_freshness(now, env.timestamp, config_.freshness); f != crypto::Freshness::Fresh)
    return reject(std::move(v), Stage::Freshness, std::string(crypto::to_string(f)));

  enter(Stage::Replay);
  if (replay_.check(env.sender, env.sequence) == crypto::ReplayVerdict::Replay)
    return reject(std::move(v), Stage::Replay, "replay");

  enter(Stage::Authorization);
  if (table_.authorize(v.sender.role, env.payload_type) == policy::Decision::Deny)
    return reject(std::move(v), Stage::Authorization,
                  std::string(policy::to_string(v.sender.role)) + " may not send " +
                      std::string(wire::to_string(env.payload_type)));

  enter(Stage::RateLimit);
  if (v.sender.rate_key && limiter_.admit(*v.sender.rate_key, now) == policy::RateVerdict::Throttle)
    return reject(std::move(v), Stage::RateLimit, "throttled");

  enter(Stage::Decrypt);
  try {
    const auto nonce = crypto::make_nonce(v.sender.domain, env.sequence);
    v.plaintext = crypto::open(v.sender.key, wire::envelope_associated_data(env), env.sealed_payload, nonce);
  } catch (const Error& e) {
    return reject(std::move(v), Stage::Decrypt, std::string(to_string(e.code())));
  }
  ++accepted_;
  v.accepted = true;
  v.stage = Stage::Decrypt;
  return v;
}

Bytes make_envelope_frame(wire::MessageType type, const Pseudonym& sender, std::uint64_t sequence, Millis timestamp,
                          ByteView plaintext, const crypto::SymmetricKey& key, crypto::NonceDomain domain,
                          const crypto::SigningKey& signer) {
  wire::Envelope env;
  env.sender = sender;
  env.sequence = sequence;
  env.timestamp = timestamp;
  env.payload_type = type;
  env.sealed_payload =
      crypto::seal(key, wire::envelope_associated_data(env), plaintext, crypto::make_nonce(domain, sequence));
  env.signature = signer.sign(wire::envelope_signed_bytes(env));
  return wire::encode_frame(type, wire::encode_envelope(env));
}

}  // namespace i2v::gauntlet
