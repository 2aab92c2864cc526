#include "i2v/obu.hpp"

#include <algorithm>

#include "i2v/error.hpp"

namespace i2v::obu {

using nlohmann::json;
using wire::MessageType;

std::string_view to_string(State s) {
  switch (s) {
    case State::OutOfRange: return "OUT_OF_RANGE";
    case State::Connecting: return "CONNECTING";
    case State::Authenticating: return "AUTHENTICATING";
    case State::Registered: return "REGISTERED";
    case State::Rejected: return "REJECTED";
  }
  return "UNKNOWN";
}

std::string_view to_string(V2vPath p) {
  switch (p) {
    case V2vPath::Direct: return "direct";
    case V2vPath::ViaRelay: return "via-relay";
    case V2vPath::Undeliverable: return "undeliverable";
  }
  return "unknown";
}

Obu::Obu(Identity identity, Config config, std::unique_ptr<RandomSource> rng, EventSink sink)
    : identity_(std::move(identity)),
      config_(std::move(config)),
      signer_(crypto::SigningKey::from_seed(identity_.signing_seed)),
      rng_(std::move(rng)),
      sink_(std::move(sink)),
      gauntlet_(config_.checks, config_.policy) {
  if (config_.beacon_interval <= 0 || config_.handshake_timeout <= 0 || config_.handshake_retries < 0)
    throw Error(Errc::PreconditionViolation, "obu timers");
}

void Obu::emit(json event, Millis now) {
  if (!sink_) return;
  event["time"] = now;
  event["node"] = identity_.vehicle.value;
  if (!event.contains("vehicle")) event["vehicle"] = identity_.vehicle.value;
  sink_(event);
}

std::optional<Pseudonym> Obu::pseudonym() const {
  if (pseudonyms_.empty()) return std::nullopt;
  return pseudonyms_.front();
}

void Obu::set_motion(double speed, const Vec2& position) {
  speed_ = speed;
  position_ = position;
}

void Obu::reset_session() {
  key_.reset();
  pseudonyms_.clear();
  rotation_ = 0;
  peers_.clear();
  sequence_ = 0;
  emitted_.clear();
  last_sent_.reset();
  next_beacon_.reset();
  handshake_deadline_.reset();
}

const Pseudonym& Obu::next_sender() {
  if (!config_.rotate_pseudonyms) return pseudonyms_.front();
  return pseudonyms_[rotation_++ % pseudonyms_.size()];
}

Outbound Obu::to_rsu(MessageType type, ByteView plaintext, Millis now) {
  if (!key_) throw Error(Errc::ProtocolOrderViolation, "no session key");
  const Pseudonym sender =
      (type == MessageType::Register || pseudonyms_.empty()) ? Pseudonym::from(key_->session_id.view()) : next_sender();
  const auto seq = sequence_++;
  emitted_.push_back(seq);
  last_sent_ = now;
  return {kRsuNode, gauntlet::make_envelope_frame(type, sender, seq, now, plaintext, key_->key_bytes,
                                                  crypto::NonceDomain::ObuToRsu, signer_)};
}

Outbound Obu::beacon(Millis now) { return to_rsu(MessageType::Beacon, msg::encode(msg::Beacon{speed_, position_}), now); }

// ---------------------------------------------------------------------------
// Range and handshake

std::vector<Outbound> Obu::on_enter_range(Millis now) {
  in_range_ = true;
  if (state_ != State::OutOfRange) return {};
  if (!pseudonyms_.empty() && key_ && last_sent_ && now - *last_sent_ <= config_.resume_window) {
    state_ = State::Registered;
    emit({{"kind", "HANDSHAKE"}, {"stage", "RESUMED"}}, now);
    std::vector<Outbound> out{beacon(now)};
    next_beacon_ = now + config_.beacon_interval;
    while (!buffer_.empty()) {
      out.push_back(to_rsu(MessageType::Hazard, msg::encode(buffer_.front()), now));
      buffer_.pop_front();
    }
    return out;
  }
  return start_handshake(now);
}

void Obu::on_exit_range(Millis now) {
  in_range_ = false;
  if (state_ == State::Rejected) return;
  if (state_ != State::Registered) reset_session();
  if (state_ != State::OutOfRange) emit({{"kind", "HANDSHAKE"}, {"stage", "OUT_OF_RANGE"}}, now);
  state_ = State::OutOfRange;
  handshake_deadline_.reset();
  next_beacon_.reset();
  lease_.reset();
}

std::vector<Outbound> Obu::start_handshake(Millis now) {
  reset_session();
  attempt_ = 0;
  if (config_.use_lease && !address_) {
    state_ = State::Connecting;
    lease_.emplace(identity_.vehicle.value, config_.lease_timers, static_cast<std::uint32_t>(rng_->next_u64()));
    return {{kRsuNode, lease_->start(now)}};
  }
  return send_hello_auth(now);
}

std::vector<Outbound> Obu::send_hello_auth(Millis now) {
  key_.reset();
  state_ = State::Connecting;
  ++attempts_total_;
  emit({{"kind", "HANDSHAKE"}, {"stage", "HELLO"}, {"attempt", attempt_}}, now);
  rng_->fill(client_nonce_);

  msg::AuthSecret secret{identity_.password, signer_.public_key()};
  msg::Auth auth;
  auth.username = identity_.vehicle.value;
  auth.client_nonce = client_nonce_;
  auth.sealed = crypto::seal(msg::auth_key(identity_.psk, client_nonce_), to_bytes(auth.username), msg::encode(secret),
                             crypto::make_nonce(crypto::NonceDomain::Handshake, 0));

  std::vector<Outbound> out;
  out.push_back({kRsuNode, wire::encode_frame(MessageType::Hello, {})});
  out.push_back({kRsuNode, wire::encode_frame(MessageType::Auth, msg::encode(auth))});
  state_ = State::Authenticating;
  handshake_deadline_ = now + config_.handshake_timeout * (Millis{1} << std::min(attempt_, 20));
  return out;
}

std::vector<Outbound> Obu::restart_or_give_up(Millis now, const std::string& why) {
  ++attempt_;
  if (attempt_ > config_.handshake_retries) {
    reset_session();
    state_ = State::OutOfRange;
    emit({{"kind", "HANDSHAKE"}, {"stage", "GAVE_UP"}, {"reason", why}}, now);
    return {};
  }
  emit({{"kind", "HANDSHAKE"}, {"stage", "RETRY"}, {"reason", why}, {"attempt", attempt_}}, now);
  return send_hello_auth(now);
}

std::vector<Outbound> Obu::on_registered(const msg::RegisterOk& ok, Millis now) {
  address_ = ok.address;
  group_key_ = ok.group_key;
  pseudonyms_ = ok.pseudonyms;
  rotation_ = 0;
  state_ = State::Registered;
  handshake_deadline_.reset();
  attempt_ = 0;
  emit({{"kind", "HANDSHAKE"}, {"stage", "REGISTERED"}, {"pseudonym", pseudonyms_.front().hex()},
        {"address", ok.address.to_string()}},
       now);
  if (!config_.use_lease)
    emit({{"kind", "ADDRESS"}, {"mode", "static"}, {"address", ok.address.to_string()}, {"time_to_address", 0}}, now);
  next_beacon_ = now + config_.beacon_interval;
  std::vector<Outbound> out;
  while (!buffer_.empty()) {
    out.push_back(to_rsu(MessageType::Hazard, msg::encode(buffer_.front()), now));
    emit({{"kind", "REPORT"}, {"hazard", to_string(buffer_.front().kind)}, {"result", "flushed"}}, now);
    buffer_.pop_front();
  }
  return out;
}

// ---------------------------------------------------------------------------
// Inbound

std::vector<Outbound> Obu::on_frame(const transport::NodeId& from, ByteView bytes, Millis now) {
  wire::Frame frame;
  try {
    frame = wire::decode_frame(bytes);
  } catch (const Error& e) {
    emit({{"kind", "VERDICT"}, {"type", "?"}, {"verdict", "reject"}, {"stage", "decode"},
          {"reason", std::string(to_string(e.code()))}},
         now);
    return {};
  }
  if (wire::is_plain_type(frame.type)) {
    if (from != kRsuNode) return {};
    return on_plain(frame, now);
  }
  return on_envelope(from, frame, now);
}

std::vector<Outbound> Obu::on_plain(const wire::Frame& frame, Millis now) {
  std::vector<Outbound> out;
  if (lease_ && (frame.type == MessageType::AddrOffer || frame.type == MessageType::AddrAck ||
                 frame.type == MessageType::Error)) {
    for (auto& f : lease_->on_frame(frame, now)) out.push_back({kRsuNode, std::move(f)});
    if (lease_->state() == addressing::LeaseState::Bound) {
      addressing::LeaseOutcome o;
      o.bound = true;
      o.address = *lease_->address();
      o.time_to_address = *lease_->bound_at() - lease_->started_at();
      o.attempts = lease_->attempts();
      lease_outcome_ = o;
      address_ = o.address;
      lease_.reset();
      emit({{"kind", "ADDRESS"}, {"mode", "lease"}, {"address", o.address.to_string()},
            {"time_to_address", o.time_to_address}, {"attempts", o.attempts}},
           now);
      auto hs = send_hello_auth(now);
      out.insert(out.end(), hs.begin(), hs.end());
    } else if (lease_->state() == addressing::LeaseState::Failed) {
      addressing::LeaseOutcome o;
      o.failure = lease_->failure();
      o.attempts = lease_->attempts();
      o.time_to_address = now - lease_->started_at();
      lease_outcome_ = o;
      lease_.reset();
      state_ = State::OutOfRange;
      emit({{"kind", "ADDRESS"}, {"mode", "lease"}, {"failure", std::string(i2v::to_string(*o.failure))}}, now);
    }
    return out;
  }

  switch (frame.type) {
    case MessageType::AuthOk: {
      if (state_ != State::Authenticating || key_) return {};
      try {
        const auto ok = msg::decode_auth_ok(frame.body);
        auto key = crypto::establish_session(client_nonce_, ok.server_nonce, identity_.psk, now);
        if (key.session_id != ok.session_id) return {};
        const auto grant = msg::decode_grant(crypto::open(key, key.session_id.view(), ok.sealed,
                                                          crypto::make_nonce(crypto::NonceDomain::Handshake, 0)));
        rsu_public_key_ = grant.rsu_public_key;
        rsu_pseudonym_ = grant.rsu_pseudonym;
        role_ = grant.role;
        key_ = key;
      } catch (const Error& e) {
        emit({{"kind", "HANDSHAKE"}, {"stage", "BAD_AUTH_OK"}, {"reason", e.what()}}, now);
        return {};
      }
      sequence_ = 0;
      emitted_.clear();
      emit({{"kind", "HANDSHAKE"}, {"stage", "AUTH_OK"}}, now);
      msg::Register reg{identity_.license, identity_.name, speed_, position_};
      return {to_rsu(MessageType::Register, msg::encode(reg), now)};
    }
    case MessageType::Error: {
      std::pair<Errc, std::string> err;
      try {
        err = wire::decode_error_body(frame.body);
      } catch (const Error&) {
        return {};
      }
      emit({{"kind", "HANDSHAKE"}, {"stage", "ERROR"}, {"reason", std::string(i2v::to_string(err.first))}}, now);
      switch (err.first) {
        case Errc::BadCredentials:
        case Errc::UnknownVehicle:
        case Errc::PoolExhausted:
          reset_session();
          state_ = State::Rejected;
          emit({{"kind", "HANDSHAKE"}, {"stage", "REJECTED"}}, now);
          return {};
        case Errc::ProtocolOrderViolation:
          // The RSU has no session for us any more.
          if (state_ == State::Registered || state_ == State::Authenticating) return start_handshake(now);
          return {};
        default:
          return {};
      }
    }
    default:
      return {};
  }
}

std::vector<Outbound> Obu::on_envelope(const transport::NodeId& from, const wire::Frame& frame, Millis now) {
  auto resolve = [&](const wire::Envelope& env) {
    gauntlet::SenderContext c;
    if (key_ && env.sender == rsu_pseudonym_ && from == kRsuNode) {
      const bool ok = state_ == State::Registered ||
                      (state_ == State::Authenticating && env.payload_type == MessageType::RegisterOk);
      if (!ok) c.session_error = "not registered";
      c.public_key = rsu_public_key_;
      c.role = policy::Role::Rsu;
      c.key = key_->key_bytes;
      c.domain = crypto::NonceDomain::RsuToObu;
      return c;
    }
    auto peer = peers_.find(env.sender);
    if (peer == peers_.end() || state_ != State::Registered) {
      c.session_error = "unknown sender";
      c.session_errc = Errc::UnknownPeer;
      return c;
    }
    c.public_key = peer->second;
    c.role = policy::Role::Obu;
    c.rate_key = env.sender.hex();
    c.key = msg::v2v_key(group_key_, env.sender);
    c.domain = crypto::NonceDomain::V2v;
    return c;
  };

  auto v = gauntlet_.check(frame, now, resolve);
  json ev{{"kind", "VERDICT"}, {"type", std::string(wire::to_string(frame.type))}, {"from", from}};
  if (v.envelope) {
    ev["sender"] = v.envelope->sender.hex();
    ev["seq"] = v.envelope->sequence;
  }
  if (!v.accepted) {
    ev["verdict"] = "reject";
    ev["stage"] = std::string(gauntlet::to_string(v.stage));
    ev["reason"] = v.reason;
    emit(std::move(ev), now);
    return {};
  }
  ev["verdict"] = "accept";
  ev["stage"] = "accepted";
  ev["reason"] = "";

  const auto& env = *v.envelope;
  try {
    switch (frame.type) {
      case MessageType::RegisterOk: {
        const auto ok = msg::decode_register_ok(v.plaintext);
        emit(std::move(ev), now);
        if (state_ != State::Authenticating) return {};
        return on_registered(ok, now);
      }
      case MessageType::HazardBcast: {
        auto bc = msg::decode_hazard_broadcast(v.plaintext);
        if (!seen_hazards_.insert({bc.origin, bc.origin_sequence}).second) {
          ev["verdict"] = "duplicate";
          ev["stage"] = "hazard_cache";
          emit(std::move(ev), now);
          return {};
        }
        emit(std::move(ev), now);
        emit({{"kind", "DELIVERY"},
              {"origin", bc.origin.hex()},
              {"origin_seq", bc.origin_sequence},
              {"priority", bc.priority},
              {"hazard", to_string(bc.hazard.kind)},
              {"description", bc.hazard.description}},
             now);
        hazards_.push_back({std::move(bc.hazard), bc.origin, bc.origin_sequence, bc.priority, now});
        return {};
      }
      case MessageType::PeerList: {
        auto list = msg::decode_peer_list(v.plaintext);
        emit(std::move(ev), now);
        peers_.clear();
        for (auto& p : list.peers) peers_[p.pseudonym] = std::move(p.public_key);
        return {};
      }
      case MessageType::Relay: {
        auto relay = msg::decode_relay(v.plaintext);
        const bool via_rsu = from == kRsuNode;
        if (!via_rsu && std::find(pseudonyms_.begin(), pseudonyms_.end(), relay.peer) == pseudonyms_.end()) {
          ev["verdict"] = "reject";
          ev["stage"] = "payload";
          ev["reason"] = "not addressed to us";
          emit(std::move(ev), now);
          return {};
        }
        emit(std::move(ev), now);
        ReceivedMessage m{via_rsu ? relay.peer : env.sender, std::move(relay.payload),
                          via_rsu ? V2vPath::ViaRelay : V2vPath::Direct, now};
        emit({{"kind", "V2V"}, {"direction", "rx"}, {"peer", m.from.hex()}, {"path", to_string(m.path)},
              {"bytes", m.payload.size()}},
             now);
        messages_.push_back(std::move(m));
        return {};
      }
      default:
        ev["verdict"] = "reject";
        ev["stage"] = "payload";
        ev["reason"] = "unhandled type";
        emit(std::move(ev), now);
        return {};
    }
  } catch (const Error& e) {
    ev["verdict"] = "reject";
    ev["stage"] = "payload";
    ev["reason"] = e.what();
    emit(std::move(ev), now);
    return {};
  }
}

// ---------------------------------------------------------------------------
// Timers and application sends

std::vector<Outbound> Obu::tick(Millis now) {
  std::vector<Outbound> out;
  if (lease_) {
    if (auto d = lease_->deadline(); d && now >= *d) {
      for (auto& f : lease_->on_timeout(now)) out.push_back({kRsuNode, std::move(f)});
      if (lease_->state() == addressing::LeaseState::Failed) {
        addressing::LeaseOutcome o;
        o.failure = lease_->failure();
        o.attempts = lease_->attempts();
        o.time_to_address = now - lease_->started_at();
        lease_outcome_ = o;
        lease_.reset();
        state_ = State::OutOfRange;
        emit({{"kind", "ADDRESS"}, {"mode", "lease"}, {"failure", std::string(i2v::to_string(*o.failure))},
              {"time_to_address", o.time_to_address}},
             now);
      }
    }
  }
  if (handshake_deadline_ && now >= *handshake_deadline_) {
    auto r = restart_or_give_up(now, "timeout");
    out.insert(out.end(), r.begin(), r.end());
  }
  if (state_ == State::Registered && in_range_ && next_beacon_ && now >= *next_beacon_) {
    out.push_back(beacon(now));
    while (*next_beacon_ <= now) *next_beacon_ += config_.beacon_interval;
  }
  return out;
}

std::optional<Millis> Obu::next_deadline() const {
  std::optional<Millis> next;
  auto consider = [&](std::optional<Millis> t) {
    if (t) next = next ? std::min(*next, *t) : *t;
  };
  if (lease_) consider(lease_->deadline());
  consider(handshake_deadline_);
  if (state_ == State::Registered && in_range_) consider(next_beacon_);
  return next;
}

std::pair<ReportResult, std::vector<Outbound>> Obu::report_hazard(const HazardReport& hazard, Millis now) {
  if (!is_valid(hazard)) throw Error(Errc::PreconditionViolation, "invalid hazard");
  if (state_ == State::Registered && in_range_) {
    emit({{"kind", "REPORT"}, {"hazard", to_string(hazard.kind)}, {"result", "sent"}}, now);
    return {ReportResult::Sent, {to_rsu(MessageType::Hazard, msg::encode(hazard), now)}};
  }
  buffer_.push_back(hazard);
  if (buffer_.size() > config_.hazard_buffer) {
    buffer_.pop_front();
    emit({{"kind", "REPORT"}, {"hazard", to_string(hazard.kind)}, {"result", "queued"}, {"dropped_oldest", true}},
         now);
  } else {
    emit({{"kind", "REPORT"}, {"hazard", to_string(hazard.kind)}, {"result", "queued"}}, now);
  }
  return {ReportResult::Queued, {}};
}

std::pair<V2vPath, std::vector<Outbound>> Obu::send_v2v(const Pseudonym& peer, ByteView payload, Millis now,
                                                        const std::optional<transport::NodeId>& direct_node) {
  auto record = [&](V2vPath path) {
    emit({{"kind", "V2V"}, {"direction", "tx"}, {"peer", peer.hex()}, {"path", to_string(path)},
          {"bytes", payload.size()}},
         now);
  };
  if (state_ != State::Registered) {
    record(V2vPath::Undeliverable);
    return {V2vPath::Undeliverable, {}};
  }
  if (!peers_.count(peer)) throw Error(Errc::UnknownPeer, peer.hex());
  const auto body = msg::encode(msg::Relay{peer, Bytes(payload.begin(), payload.end())});
  if (direct_node) {
    record(V2vPath::Direct);
    return {V2vPath::Direct, {{*direct_node, craft_v2v_envelope(MessageType::Relay, body, now)}}};
  }
  if (in_range_) {
    record(V2vPath::ViaRelay);
    return {V2vPath::ViaRelay, {to_rsu(MessageType::Relay, body, now)}};
  }
  record(V2vPath::Undeliverable);
  return {V2vPath::Undeliverable, {}};
}

Bytes Obu::craft_envelope(MessageType type, ByteView plaintext, Millis now) {
  return to_rsu(type, plaintext, now).frame;
}

Bytes Obu::craft_v2v_envelope(MessageType type, ByteView plaintext, Millis now) {
  if (pseudonyms_.empty()) throw Error(Errc::ProtocolOrderViolation, "not registered");
  const Pseudonym sender = next_sender();
  const auto seq = sequence_++;
  emitted_.push_back(seq);
  return gauntlet::make_envelope_frame(type, sender, seq, now, plaintext, msg::v2v_key(group_key_, sender),
                                       crypto::NonceDomain::V2v, signer_);
}

}  // namespace i2v::obu
