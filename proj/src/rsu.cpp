#include "i2v/rsu.hpp"

#include <algorithm>

#include "i2v/error.hpp"

namespace i2v::rsu {

using nlohmann::json;
using wire::MessageType;

namespace {

constexpr std::string_view kRsuIdentity = "rsu";

}  // namespace

std::string_view to_string(SessionState s) {
  switch (s) {
    case SessionState::Connected: return "CONNECTED";
    case SessionState::Authenticating: return "AUTHENTICATING";
    case SessionState::Authenticated: return "AUTHENTICATED";
    case SessionState::Registered: return "REGISTERED";
    case SessionState::Closed: return "CLOSED";
  }
  return "UNKNOWN";
}

json to_json(const ClientRecord& r) {
  return json{{"vehicle", r.vehicle.value},
              {"name", r.vehicle_name},
              {"license", r.license_number},
              {"speed_kmh", mps_to_kmh(r.speed)},
              {"address", r.address.to_string()},
              {"pseudonym", r.pseudonym.hex()},
              {"role", policy::to_string(r.role)},
              {"registered_at", r.registered_at},
              {"last_seen", r.last_seen}};
}

Rsu::Rsu(Config config, Keys keys, addressing::AddressPool pool, std::unique_ptr<RandomSource> rng, EventSink sink,
         Millis now)
    : config_(std::move(config)),
      keys_(std::move(keys)),
      signer_(crypto::SigningKey::from_seed(keys_.signing_seed)),
      pool_(std::move(pool)),
      rng_(std::move(rng)),
      sink_(std::move(sink)),
      gauntlet_(config_.checks, config_.policy) {
  if (keys_.psk.empty()) throw Error(Errc::BadKey, "empty pre-shared key");
  if (config_.client_timeout <= 0) throw Error(Errc::PreconditionViolation, "client timeout must be positive");
  if (config_.pseudonym_batch < 1 || config_.pseudonym_batch > 255)
    throw Error(Errc::PreconditionViolation, "pseudonym batch must be in [1, 255]");
  pseudonym_ = escrow_.issue(*rng_, VehicleId{std::string(kRsuIdentity)}, now, config_.pseudonym_lifetime).pseudonym;
}

void Rsu::emit(json event, Millis now) {
  if (!sink_) return;
  event["time"] = now;
  event["node"] = "rsu";
  sink_(event);
}

Rsu::Session& Rsu::session_for(const ConnId& conn, Millis now) {
  auto it = sessions_.find(conn);
  if (it == sessions_.end()) {
    Session s;
    s.conn = conn;
    s.last_seen = now;
    it = sessions_.emplace(conn, std::move(s)).first;
  }
  return it->second;
}

Outbound Rsu::error_to(const ConnId& conn, Errc code, const std::string& reason, bool close) {
  return {conn, wire::encode_frame(MessageType::Error, wire::encode_error_body(code, reason)), close};
}

Outbound Rsu::seal_to(const Session& s, MessageType type, ByteView plaintext, Millis now) {
  const auto seq = tx_sequence_++;
  return {s.conn, gauntlet::make_envelope_frame(type, pseudonym_, seq, now, plaintext, s.key.key_bytes,
                                                crypto::NonceDomain::RsuToObu, signer_)};
}

void Rsu::log_inbound(const ConnId& conn, const wire::Frame* frame, const wire::Envelope* env, bool accepted,
                      std::string_view stage, const std::string& reason, Millis now) {
  audit::Record r;
  r.kind = audit::Kind::Inbound;
  r.time = now;
  r.conn = conn;
  r.type = frame ? std::string(wire::to_string(frame->type)) : "?";
  r.envelope = frame && !wire::is_plain_type(frame->type);
  if (frame) r.body = frame->body;
  if (env) {
    r.sender = env->sender.hex();
    r.signature = to_hex(env->signature);
  }
  r.accepted = accepted;
  r.stage = std::string(stage);
  r.reason = reason;
  audit_.append(std::move(r));
  if (accepted)
    ++counters_.accepted;
  else
    ++counters_.rejected;

  json ev{{"kind", "VERDICT"},
          {"type", frame ? std::string(wire::to_string(frame->type)) : "?"},
          {"verdict", accepted ? "accept" : "reject"},
          {"stage", std::string(stage)},
          {"reason", reason}};
  auto it = sessions_.find(conn);
  ev["vehicle"] = (it != sessions_.end() && !it->second.vehicle.value.empty()) ? it->second.vehicle.value : conn;
  if (env) {
    ev["sender"] = env->sender.hex();
    ev["seq"] = env->sequence;
  }
  emit(std::move(ev), now);
}

void Rsu::remove_session(const ConnId& conn, const std::string& reason, Millis now) {
  auto it = sessions_.find(conn);
  if (it == sessions_.end()) return;
  if (it->second.state == SessionState::Registered) {
    audit::Record r;
    r.kind = audit::Kind::Removal;
    r.time = now;
    r.conn = conn;
    r.vehicle = it->second.vehicle.value;
    r.reason = reason;
    audit_.append(std::move(r));
    emit({{"kind", "REGISTRY"}, {"action", "remove"}, {"vehicle", it->second.vehicle.value}, {"reason", reason}},
         now);
    peers_dirty_ = true;
  }
  sessions_.erase(it);
}

std::vector<Outbound> Rsu::on_frame(const ConnId& conn, ByteView bytes, Millis now) {
  ++counters_.frames_in;
  wire::Frame frame;
  try {
    frame = wire::decode_frame(bytes);
  } catch (const Error& e) {
    log_inbound(conn, nullptr, nullptr, false, gauntlet::to_string(gauntlet::Stage::Decode),
                std::string(to_string(e.code())), now);
    return {};
  }
  if (wire::is_plain_type(frame.type)) return on_plain(conn, frame, now);
  ++counters_.envelopes_in;
  return on_envelope(conn, frame, now);
}

// ---------------------------------------------------------------------------
// Plain frames: HELLO, AUTH, address leases

std::vector<Outbound> Rsu::on_plain(const ConnId& conn, const wire::Frame& frame, Millis now) {
  auto existing = sessions_.find(conn);
  const auto role = existing != sessions_.end() ? existing->second.role : policy::Role::Obu;
  if (config_.policy.authorize(role, frame.type) == policy::Decision::Deny) {
    log_inbound(conn, &frame, nullptr, false, gauntlet::to_string(gauntlet::Stage::Authorization),
                std::string(policy::to_string(role)) + " may not send " + std::string(wire::to_string(frame.type)),
                now);
    return {};
  }

  switch (frame.type) {
    case MessageType::Hello: {
      if (existing != sessions_.end()) remove_session(conn, "rehandshake", now);
      auto& s = session_for(conn, now);
      s.state = SessionState::Authenticating;
      log_inbound(conn, &frame, nullptr, true, "accepted", "", now);
      return {};
    }
    case MessageType::Auth: {
      if (existing == sessions_.end() || existing->second.state != SessionState::Authenticating) {
        log_inbound(conn, &frame, nullptr, false, gauntlet::to_string(gauntlet::Stage::Session),
                    "AUTH before HELLO", now);
        return {error_to(conn, Errc::ProtocolOrderViolation, "AUTH before HELLO")};
      }
      return on_auth(existing->second, frame, now);
    }
    case MessageType::AddrDiscover:
    case MessageType::AddrRequest: {
      if (pool_.mode() != addressing::Mode::Lease) {
        log_inbound(conn, &frame, nullptr, false, gauntlet::to_string(gauntlet::Stage::Session),
                    "static addressing", now);
        return {};
      }
      log_inbound(conn, &frame, nullptr, true, "accepted", "", now);
      addressing::LeaseServer server(pool_);
      std::vector<Outbound> out;
      for (auto& reply : server.on_frame(frame, now)) out.push_back({conn, std::move(reply)});
      return out;
    }
    default:
      log_inbound(conn, &frame, nullptr, false, gauntlet::to_string(gauntlet::Stage::Session), "unexpected", now);
      return {};
  }
}

std::vector<Outbound> Rsu::on_auth(Session& s, const wire::Frame& frame, Millis now) {
  const ConnId conn = s.conn;
  auto reject = [&](const std::string& reason) {
    log_inbound(conn, &frame, nullptr, false, "credentials", reason, now);
    emit({{"kind", "HANDSHAKE"}, {"vehicle", conn}, {"stage", "REJECTED"}, {"reason", reason}}, now);
    sessions_.erase(conn);
    return std::vector<Outbound>{error_to(conn, Errc::BadCredentials, reason, true)};
  };

  msg::Auth auth;
  msg::AuthSecret secret;
  try {
    auth = msg::decode_auth(frame.body);
    const auto key = msg::auth_key(keys_.psk, auth.client_nonce);
    const auto nonce = crypto::make_nonce(crypto::NonceDomain::Handshake, 0);
    secret = msg::decode_auth_secret(crypto::open(key, to_bytes(auth.username), auth.sealed, nonce));
  } catch (const Error& e) {
    return reject(std::string(to_string(e.code())));
  }
  auto account = keys_.accounts.find(auth.username);
  if (account == keys_.accounts.end() || !crypto::verify_password(secret.password, account->second.password))
    return reject("unknown user or wrong password");
  if (secret.public_key.size() != crypto::kPublicKeySize) return reject("public key length");

  msg::HandshakeNonce server_nonce{};
  rng_->fill(server_nonce);
  s.key = crypto::establish_session(auth.client_nonce, server_nonce, keys_.psk, now);
  s.vehicle = VehicleId{auth.username};
  s.role = account->second.role;
  s.public_key = secret.public_key;
  s.state = SessionState::Authenticated;
  s.last_seen = now;

  log_inbound(conn, &frame, nullptr, true, "accepted", "", now);
  audit::Record binding;
  binding.kind = audit::Kind::Binding;
  binding.time = now;
  binding.conn = conn;
  binding.token = s.key.session_id.hex();
  binding.vehicle = s.vehicle.value;
  binding.public_key = s.public_key;
  audit_.append(std::move(binding));
  emit({{"kind", "HANDSHAKE"}, {"vehicle", s.vehicle.value}, {"stage", "AUTH_OK"}}, now);

  msg::Grant grant{signer_.public_key(), pseudonym_, s.role};
  msg::AuthOk ok;
  ok.server_nonce = server_nonce;
  ok.session_id = s.key.session_id;
  ok.sealed = crypto::seal(s.key, s.key.session_id.view(), msg::encode(grant),
                           crypto::make_nonce(crypto::NonceDomain::Handshake, 0));
  return {{conn, wire::encode_frame(MessageType::AuthOk, msg::encode(ok))}};
}

// ---------------------------------------------------------------------------
// Envelopes

std::vector<Outbound> Rsu::on_envelope(const ConnId& conn, const wire::Frame& frame, Millis now) {
  auto resolve = [&](const wire::Envelope& env) {
    gauntlet::SenderContext c;
    auto it = sessions_.find(conn);
    if (it == sessions_.end() ||
        (it->second.state != SessionState::Authenticated && it->second.state != SessionState::Registered)) {
      c.session_error = "no authenticated session";
      return c;
    }
    const auto& s = it->second;
    const auto session_token = Pseudonym::from(s.key.session_id.view());
    if (env.payload_type == MessageType::Register) {
      if (env.sender != session_token) c.session_error = "REGISTER must carry the session token";
    } else if (s.state != SessionState::Registered) {
      c.session_error = "not registered";
    } else if (std::find(s.pseudonyms.begin(), s.pseudonyms.end(), env.sender) == s.pseudonyms.end()) {
      c.session_error = "sender token not issued to this session";
    }
    c.public_key = s.public_key;
    c.role = s.role;
    c.rate_key = "session:" + s.key.session_id.hex();
    c.key = s.key.key_bytes;
    c.domain = crypto::NonceDomain::ObuToRsu;
    return c;
  };

  auto verdict = gauntlet_.check(frame, now, resolve);
  const wire::Envelope* env = verdict.envelope ? &*verdict.envelope : nullptr;
  if (!verdict.accepted) {
    log_inbound(conn, &frame, env, false, gauntlet::to_string(verdict.stage), verdict.reason, now);
    auto it = sessions_.find(conn);
    const bool live = it != sessions_.end() && (it->second.state == SessionState::Authenticated ||
                                                it->second.state == SessionState::Registered);
    if (verdict.stage == gauntlet::Stage::Session && !live)
      return {error_to(conn, Errc::ProtocolOrderViolation, verdict.reason)};
    return {};
  }

  auto& s = sessions_.at(conn);
  s.last_seen = now;
  try {
    switch (frame.type) {
      case MessageType::Register: {
        auto out = on_register(s, *env, verdict.plaintext, now);
        return out;
      }
      case MessageType::Beacon: {
        const auto beacon = msg::decode_beacon(verdict.plaintext);
        if (!(beacon.speed >= 0.0)) throw Error(Errc::MalformedLength, "negative speed");
        log_inbound(conn, &frame, env, true, "accepted", "", now);
        s.record.speed = beacon.speed;
        s.record.position = beacon.position;
        s.record.last_seen = now;
        return {};
      }
      case MessageType::Hazard: {
        auto hazard = msg::decode_hazard(verdict.plaintext);
        if (!is_valid(hazard)) throw Error(Errc::MalformedLength, "invalid hazard");
        log_inbound(conn, &frame, env, true, "accepted", "", now);
        s.record.last_seen = now;
        PendingBroadcast p;
        p.broadcast.origin = env->sender;
        p.broadcast.origin_sequence = env->sequence;
        p.broadcast.priority = s.role == policy::Role::EmergencyObu;
        p.broadcast.hazard = std::move(hazard);
        p.exclude = conn;
        p.order = broadcast_order_++;
        pending_.push_back(std::move(p));
        emit({{"kind", "HAZARD"}, {"vehicle", s.vehicle.value}, {"seq", env->sequence},
              {"hazard", to_string(pending_.back().broadcast.hazard.kind)}},
             now);
        return {};
      }
      case MessageType::Relay:
        return on_relay(s, *env, verdict.plaintext, now);
      case MessageType::Disconnect:
        log_inbound(conn, &frame, env, true, "accepted", "", now);
        remove_session(conn, "disconnect", now);
        return {};
      default:
        log_inbound(conn, &frame, env, false, "payload", "unhandled type", now);
        return {};
    }
  } catch (const Error& e) {
    log_inbound(conn, &frame, env, false, "payload", e.what(), now);
    return {};
  }
}

std::vector<Outbound> Rsu::on_register(Session& s, const wire::Envelope& env, ByteView plaintext, Millis now) {
  const auto reg = msg::decode_register(plaintext);
  const wire::Frame frame{MessageType::Register, wire::encode_envelope(env)};

  if (s.state == SessionState::Registered) {
    // A retransmitted REGISTER gets the same answer; no second record.
    log_inbound(s.conn, &frame, &env, true, "accepted", "duplicate register", now);
    s.record.speed = reg.speed;
    s.record.position = reg.position;
    s.record.last_seen = now;
    msg::RegisterOk ok{s.record.address, keys_.group_key, s.pseudonyms, now + config_.pseudonym_lifetime};
    return {seal_to(s, MessageType::RegisterOk, msg::encode(ok), now)};
  }

  VehicleIdentity identity{s.vehicle, reg.license, reg.name, s.public_key};
  if (auto violations = validate_identity(identity); !violations.empty() || !(reg.speed >= 0.0)) {
    std::string reason = violations.empty() ? "negative speed" : std::string(to_string(violations.front()));
    log_inbound(s.conn, &frame, &env, false, "payload", reason, now);
    return {};
  }

  addressing::Address address;
  if (pool_.mode() == addressing::Mode::Static) {
    try {
      address = pool_.assign_static(s.vehicle);
    } catch (const Error& e) {
      log_inbound(s.conn, &frame, &env, false, "payload", e.what(), now);
      return {error_to(s.conn, e.code(), e.what())};
    }
  } else {
    auto lease = pool_.lease_of(s.vehicle.value);
    if (!lease) {
      // No lease exchange was run (live clients): bind directly.
      if (auto offered = pool_.offer(s.vehicle.value, now)) lease = pool_.bind(s.vehicle.value, *offered, now);
    }
    if (!lease) {
      log_inbound(s.conn, &frame, &env, false, "payload", "pool exhausted", now);
      return {error_to(s.conn, Errc::PoolExhausted, "no free address")};
    }
    address = *lease;
  }

  log_inbound(s.conn, &frame, &env, true, "accepted", "", now);
  const Millis expires = now + config_.pseudonym_lifetime;
  s.pseudonyms.clear();
  for (int i = 0; i < config_.pseudonym_batch; ++i) {
    const auto& rec = escrow_.issue(*rng_, s.vehicle, now, config_.pseudonym_lifetime);
    s.pseudonyms.push_back(rec.pseudonym);
    audit::Record binding;
    binding.kind = audit::Kind::Binding;
    binding.time = now;
    binding.conn = s.conn;
    binding.token = rec.pseudonym.hex();
    binding.vehicle = s.vehicle.value;
    binding.public_key = s.public_key;
    audit_.append(std::move(binding));
  }
  s.state = SessionState::Registered;
  s.record = ClientRecord{s.vehicle,  reg.name,         reg.license, reg.speed, reg.position,
                          address,    s.pseudonyms[0],  s.key.session_id,       s.role,
                          now,        now,              s.conn,      s.in_range};
  peers_dirty_ = true;

  auto ev = to_json(s.record);
  ev["kind"] = "REGISTRY";
  ev["action"] = "add";
  emit(std::move(ev), now);

  msg::RegisterOk ok{address, keys_.group_key, s.pseudonyms, expires};
  return {seal_to(s, MessageType::RegisterOk, msg::encode(ok), now)};
}

std::vector<Outbound> Rsu::on_relay(Session& s, const wire::Envelope& env, ByteView plaintext, Millis now) {
  const auto relay = msg::decode_relay(plaintext);
  const wire::Frame frame{MessageType::Relay, wire::encode_envelope(env)};
  log_inbound(s.conn, &frame, &env, true, "accepted", "", now);
  ++counters_.relays;

  const Session* target = nullptr;
  for (const auto& [conn, t] : sessions_) {
    if (t.state != SessionState::Registered || !t.in_range || conn == s.conn) continue;
    if (std::find(t.pseudonyms.begin(), t.pseudonyms.end(), relay.peer) != t.pseudonyms.end()) target = &t;
  }
  emit({{"kind", "RELAY"},
        {"vehicle", s.vehicle.value},
        {"to", target ? target->vehicle.value : relay.peer.hex()},
        {"delivered", target != nullptr}},
       now);
  if (!target) {
    ++counters_.relays_undeliverable;
    return {};
  }
  msg::Relay forward{env.sender, relay.payload};
  return {seal_to(*target, MessageType::Relay, msg::encode(forward), now)};
}

// ---------------------------------------------------------------------------
// Timers and broadcasts

void Rsu::on_link_down(const ConnId& conn, Millis) {
  if (auto it = sessions_.find(conn); it != sessions_.end()) {
    it->second.in_range = false;
    it->second.record.in_range = false;
  }
}

void Rsu::on_link_up(const ConnId& conn, Millis) {
  if (auto it = sessions_.find(conn); it != sessions_.end()) {
    it->second.in_range = true;
    it->second.record.in_range = true;
  }
}

void Rsu::broadcast_hazard(const HazardReport& hazard, Millis now) {
  if (!is_valid(hazard)) throw Error(Errc::PreconditionViolation, "invalid hazard");
  PendingBroadcast p;
  p.broadcast.origin = pseudonym_;
  p.broadcast.origin_sequence = broadcast_order_;
  p.broadcast.priority = false;
  p.broadcast.hazard = hazard;
  p.order = broadcast_order_++;
  pending_.push_back(std::move(p));
  emit({{"kind", "HAZARD"}, {"vehicle", std::string(kRsuIdentity)}, {"hazard", to_string(hazard.kind)}}, now);
}

std::vector<ClientRecord> Rsu::expire_stale_clients(Millis now) {
  std::vector<ClientRecord> removed;
  std::vector<ConnId> stale;
  for (const auto& [conn, s] : sessions_)
    if (now - s.last_seen > config_.client_timeout) stale.push_back(conn);
  for (const auto& conn : stale) {
    auto& s = sessions_.at(conn);
    if (s.state == SessionState::Registered) removed.push_back(s.record);
    remove_session(conn, "timeout", now);
  }
  return removed;
}

std::vector<Outbound> Rsu::flush_peer_lists(Millis now) {
  std::vector<Outbound> out;
  if (!peers_dirty_) return out;
  peers_dirty_ = false;
  for (const auto& [conn, s] : sessions_) {
    if (s.state != SessionState::Registered || !s.in_range) continue;
    msg::PeerList list;
    for (const auto& [other_conn, other] : sessions_) {
      if (other_conn == conn || other.state != SessionState::Registered) continue;
      for (const auto& p : other.pseudonyms) list.peers.push_back({p, other.public_key});
    }
    out.push_back(seal_to(s, MessageType::PeerList, msg::encode(list), now));
  }
  return out;
}

std::vector<Outbound> Rsu::flush_broadcasts(Millis now) {
  std::vector<Outbound> out;
  if (pending_.empty()) return out;
  auto pending = std::move(pending_);
  pending_.clear();
  std::stable_sort(pending.begin(), pending.end(), [](const auto& a, const auto& b) {
    if (a.broadcast.priority != b.broadcast.priority) return a.broadcast.priority;
    return a.order < b.order;
  });
  for (const auto& p : pending) {
    ++counters_.broadcasts;
    const auto body = msg::encode(p.broadcast);
    json recipients = json::array();
    for (const auto& [conn, s] : sessions_) {
      if (s.state != SessionState::Registered || !s.in_range) continue;
      if (p.exclude && *p.exclude == conn) continue;
      out.push_back(seal_to(s, MessageType::HazardBcast, body, now));
      recipients.push_back(s.vehicle.value);
      ++counters_.broadcast_deliveries;
    }
    auto origin = escrow_.recover(p.broadcast.origin);
    emit({{"kind", "BROADCAST"},
          {"vehicle", origin ? origin->value : std::string("?")},
          {"priority", p.broadcast.priority},
          {"hazard", to_string(p.broadcast.hazard.kind)},
          {"recipients", recipients}},
         now);
  }
  return out;
}

std::vector<Outbound> Rsu::tick(Millis now) {
  expire_stale_clients(now);
  if (pool_.mode() == addressing::Mode::Lease) pool_.expire_leases(now);
  auto out = flush_peer_lists(now);
  auto bcast = flush_broadcasts(now);
  out.insert(out.end(), std::make_move_iterator(bcast.begin()), std::make_move_iterator(bcast.end()));
  return out;
}

std::optional<Millis> Rsu::next_deadline() const {
  std::optional<Millis> next;
  auto consider = [&](Millis t) { next = next ? std::min(*next, t) : t; };
  for (const auto& [conn, s] : sessions_) consider(s.last_seen + config_.client_timeout + 1);
  return next;
}

std::vector<ClientRecord> Rsu::list_clients() const {
  std::vector<ClientRecord> out;
  for (const auto& [conn, s] : sessions_)
    if (s.state == SessionState::Registered) out.push_back(s.record);
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return a.registered_at != b.registered_at ? a.registered_at < b.registered_at : a.conn < b.conn;
  });
  return out;
}

std::optional<SessionState> Rsu::session_state(const ConnId& conn) const {
  auto it = sessions_.find(conn);
  if (it == sessions_.end()) return std::nullopt;
  return it->second.state;
}

}  // namespace i2v::rsu
