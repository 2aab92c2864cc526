#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "i2v/error.hpp"
#include "i2v/scenario.hpp"

namespace i2v::scenario {

using nlohmann::json;
using transport::NodeId;
using wire::MessageType;

namespace {

const NodeId kRsu = "rsu";

Vec2 heading_of(double deg) {
  if (deg == 0.0) return Vec2::UnitX();
  const double rad = deg * std::numbers::pi / 180.0;
  return Vec2(std::cos(rad), std::sin(rad));
}

keyfile::Generated make_keys(const Config& c) {
  std::vector<std::string> ids;
  std::set<std::string> emergency;
  for (const auto& v : c.vehicles) {
    ids.push_back(v.id);
    if (v.role == policy::Role::EmergencyObu) emergency.insert(v.id);
  }
  SeededRandom rng(c.seed, 1);
  auto g = keyfile::generate(rng, ids, emergency, c.obu.password_iterations);
  for (std::size_t i = 0; i < c.vehicles.size(); ++i) {
    const auto& v = c.vehicles[i];
    g.identities[i].license = v.license;
    g.identities[i].name = v.name;
    if (v.credential == Credential::WrongPassword) g.identities[i].password += "-wrong";
    if (v.credential == Credential::Unknown) g.keys.accounts.erase(v.id);
  }
  return g;
}

mobility::MobilityModel make_mobility(const Config& c) {
  std::vector<mobility::VehicleState> states;
  for (const auto& v : c.vehicles) {
    mobility::VehicleState s;
    s.id.value = v.id;
    s.kinematics.position = v.position;
    s.kinematics.speed = v.speed;
    s.kinematics.heading = heading_of(v.heading_deg);
    states.push_back(s);
  }
  return mobility::MobilityModel({c.range.rsu_position, c.range.rsu_radius, c.range.v2v_radius}, std::move(states));
}

addressing::AddressPool make_pool(const Config& c) {
  if (c.addressing.mode == addressing::Mode::Lease)
    return addressing::AddressPool::make_lease(addressing::Address::parse(c.addressing.pool_start),
                                               c.addressing.pool_size, c.addressing.lease);
  std::map<VehicleId, addressing::Address> table;
  if (!c.addressing.static_map.empty()) {
    for (const auto& [id, text] : c.addressing.static_map) table[VehicleId{id}] = addressing::Address::parse(text);
  } else {
    std::vector<std::string> ids;
    for (const auto& v : c.vehicles) ids.push_back(v.id);
    std::sort(ids.begin(), ids.end());
    std::uint32_t next = addressing::Address::parse("10.0.0.10").value();
    for (const auto& id : ids) table[VehicleId{id}] = addressing::Address::from_value(next++);
  }
  return addressing::AddressPool::make_static(std::move(table));
}

gauntlet::Config checks_of(const Config& c) {
  gauntlet::Config g;
  g.freshness.tau = c.security.tau;
  g.replay_width = c.security.replay_window;
  g.rate.capacity = c.security.rate_capacity;
  g.rate.per_second = c.security.rate_per_second;
  return g;
}

std::string_view drop_reason(transport::DropReason r) {
  return r == transport::DropReason::Loss ? "loss" : "disconnected";
}

}  // namespace

Engine::Engine(Config config, EventSink observer)
    : config_((validate(config), std::move(config))),
      observer_(std::move(observer)),
      keys_(make_keys(config_)),
      net_(config_.seed),
      mobility_(make_mobility(config_)) {
  auto sink = [this](const json& e) { record(e); };

  rsu::Config rc;
  rc.checks = checks_of(config_);
  rc.client_timeout = config_.security.client_timeout;
  rc.pseudonym_lifetime = config_.security.pseudonym_lifetime;
  rc.pseudonym_batch = config_.security.rotate_pseudonyms ? 4 : 1;
  rsu_ = std::make_unique<rsu::Rsu>(rc, keys_.keys, make_pool(config_),
                                    std::make_unique<SeededRandom>(config_.seed, 2), sink, 0);

  obu::Config oc;
  oc.checks = checks_of(config_);
  oc.beacon_interval = config_.obu.beacon_interval;
  oc.handshake_timeout = config_.obu.handshake_timeout;
  oc.handshake_retries = config_.obu.handshake_retries;
  oc.use_lease = config_.addressing.mode == addressing::Mode::Lease;
  oc.lease_timers = {config_.addressing.timer_initial, config_.addressing.backoff, config_.addressing.max_attempts};
  oc.rotate_pseudonyms = config_.security.rotate_pseudonyms;

  net_.add_endpoint(kRsu);
  const transport::LinkState down{false, config_.link.loss, config_.link.latency};
  for (std::size_t i = 0; i < config_.vehicles.size(); ++i) {
    const auto& id = config_.vehicles[i].id;
    obus_[id] = std::make_unique<obu::Obu>(keys_.identities[i], oc,
                                           std::make_unique<SeededRandom>(config_.seed, 100 + i), sink);
    net_.add_endpoint(id);
    net_.set_link(kRsu, id, down);
  }
  for (const auto& [a, _] : obus_)
    for (const auto& [b, __] : obus_)
      if (a < b) net_.set_link(a, b, down);

  schedule_config_scripts();
}

obu::Obu& Engine::obu(const std::string& id) {
  auto it = obus_.find(id);
  if (it == obus_.end()) throw Error(Errc::UnknownEndpoint, id);
  return *it->second;
}

void Engine::record(json event) {
  if (!event.contains("time")) event["time"] = now_;
  trace_.add(std::move(event));
  if (observer_) observer_(trace_.records().back());
}

void Engine::schedule(Millis t, std::function<void(Millis)> action) {
  if (t < now_) throw Error(Errc::PreconditionViolation, "cannot schedule in the past");
  scripts_.emplace(std::make_pair(t, script_order_++), std::move(action));
}

void Engine::run_scripts() {
  while (!scripts_.empty() && scripts_.begin()->first.first <= now_) {
    auto action = std::move(scripts_.begin()->second);
    scripts_.erase(scripts_.begin());
    action(now_);
  }
}

void Engine::send(const NodeId& from, const NodeId& to, Bytes frame) {
  try {
    const auto header = wire::decode_frame_header(ByteView(frame).first(std::min<std::size_t>(frame.size(), 8)));
    if (!wire::is_plain_type(header.type)) captured_.push_back({now_, from, to, header.type, frame});
  } catch (const Error&) {
  }
  const auto r = net_.send(from, to, std::move(frame), now_);
  if (r.outcome == transport::SendOutcome::Dropped) {
    const auto& d = net_.drops().back();
    record({{"kind", "DROP"},
            {"node", "sim"},
            {"from", from},
            {"to", to},
            {"vehicle", from == kRsu ? to : from},
            {"reason", drop_reason(d.reason)}});
  }
}

void Engine::inject(const NodeId& from, const NodeId& to, Bytes frame) { send(from, to, std::move(frame)); }

void Engine::route(const NodeId& from, std::vector<obu::Outbound> out) {
  for (auto& o : out) send(from, o.to, std::move(o.frame));
}

void Engine::route(std::vector<rsu::Outbound> out) {
  for (auto& o : out) send(kRsu, o.to, std::move(o.frame));
}

void Engine::apply(const std::vector<mobility::ConnectivityEvent>& events) {
  for (const auto& e : events) {
    const auto& id = e.subject.value;
    switch (e.kind) {
      case mobility::EventKind::EnterRsu:
        net_.set_connected(kRsu, id, true);
        record({{"kind", "ENTER_RSU"}, {"node", "sim"}, {"vehicle", id}});
        rsu_->on_link_up(id, now_);
        route(id, obu(id).on_enter_range(now_));
        break;
      case mobility::EventKind::ExitRsu:
        net_.set_connected(kRsu, id, false);
        record({{"kind", "EXIT_RSU"}, {"node", "sim"}, {"vehicle", id}});
        rsu_->on_link_down(id, now_);
        obu(id).on_exit_range(now_);
        break;
      case mobility::EventKind::EnterV2v:
      case mobility::EventKind::ExitV2v: {
        const bool up = e.kind == mobility::EventKind::EnterV2v;
        net_.set_connected(id, e.peer->value, up);
        record({{"kind", up ? "ENTER_V2V" : "EXIT_V2V"}, {"node", "sim"}, {"vehicle", id}, {"peer", e.peer->value}});
        break;
      }
    }
  }
}

void Engine::settle() {
  for (int round = 0; round < 1000000; ++round) {
    bool progress = false;
    for (auto& d : net_.poll(kRsu, now_)) {
      progress = true;
      route(rsu_->on_frame(d.from, d.frame, now_));
    }
    for (auto& [id, o] : obus_) {
      for (auto& d : net_.poll(id, now_)) {
        progress = true;
        route(id, o->on_frame(d.from, d.frame, now_));
      }
    }
    auto rsu_out = rsu_->tick(now_);
    progress = progress || !rsu_out.empty();
    route(std::move(rsu_out));
    for (auto& [id, o] : obus_) {
      auto out = o->tick(now_);
      progress = progress || !out.empty();
      route(id, std::move(out));
    }
    if (!progress) return;
  }
  throw Error(Errc::PreconditionViolation, "simulation did not settle");
}

void Engine::initialize() {
  initialized_ = true;
  now_ = 0;
  for (const auto& v : mobility_.vehicles()) obu(v.id.value).set_motion(v.kinematics.speed, v.kinematics.position);
  apply(mobility_.initialize(0));
  next_step_ = config_.step;
  run_scripts();
  settle();
}

std::optional<Millis> Engine::next_event_time() const {
  std::optional<Millis> next = next_step_;
  auto consider = [&](std::optional<Millis> t, bool clamp) {
    if (!t) return;
    Millis v = clamp ? std::max(*t, now_ + 1) : *t;
    next = next ? std::min(*next, v) : v;
  };
  consider(net_.next_delivery_time(), false);
  consider(rsu_->next_deadline(), true);
  for (const auto& [id, o] : obus_) consider(o->next_deadline(), true);
  if (!scripts_.empty()) consider(scripts_.begin()->first.first, false);
  return next;
}

void Engine::run_until(Millis t) {
  if (!initialized_) initialize();
  while (true) {
    const auto next = next_event_time();
    if (!next || *next > t) break;
    now_ = std::max(now_, *next);
    if (now_ == next_step_) {
      const auto events = mobility_.step(config_.step);
      next_step_ += config_.step;
      for (const auto& v : mobility_.vehicles())
        obu(v.id.value).set_motion(v.kinematics.speed, v.kinematics.position);
      apply(events);
    }
    run_scripts();
    settle();
  }
  now_ = std::max(now_, t);
}

void Engine::run() {
  if (config_.duration == 0) return;
  run_until(config_.duration);
  json rows = json::array();
  for (const auto& r : registry()) rows.push_back(rsu::to_json(r));
  record({{"kind", "END"},
          {"node", "sim"},
          {"registry", rows},
          {"frames_sent", net_.sent()},
          {"frames_dropped", net_.drops().size()}});
}

// ---------------------------------------------------------------------------
// Scripted behaviour

void Engine::schedule_config_scripts() {
  std::vector<const VehicleConfig*> sorted;
  for (const auto& v : config_.vehicles) sorted.push_back(&v);
  std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->id < b->id; });

  for (const auto* v : sorted) {
    const auto id = v->id;
    for (const auto& h : v->hazards) {
      schedule(h.time, [this, id, hazard = h.hazard](Millis t) {
        route(id, obu(id).report_hazard(hazard, t).second);
      });
    }
    for (const auto& e : v->v2v) {
      schedule(e.time, [this, id, e](Millis t) {
        auto& me = obu(id);
        const auto peer = obu(e.peer).pseudonym();
        auto undeliverable = [&](const std::string& why) {
          record({{"kind", "V2V"}, {"node", id}, {"vehicle", id}, {"peer", e.peer}, {"direction", "tx"},
                  {"path", "undeliverable"}, {"reason", why}});
        };
        if (!peer || me.state() != obu::State::Registered) return undeliverable("no session");
        std::optional<NodeId> direct;
        if (mobility_.v2v_linked(VehicleId{id}, VehicleId{e.peer})) direct = e.peer;
        try {
          route(id, me.send_v2v(*peer, to_bytes(e.payload), t, direct).second);
        } catch (const Error& err) {
          undeliverable(err.what());
        }
      });
    }
  }
  for (const auto& h : config_.rsu_hazards)
    schedule(h.time, [this, hazard = h.hazard](Millis t) { rsu_->broadcast_hazard(hazard, t); });
  for (const auto& a : config_.attacks) schedule_attack(a);
}

void Engine::schedule_attack(const AttackConfig& a) {
  const auto id = a.vehicle;
  const auto name = std::string(to_string(a.kind));
  auto skipped = [this, id, name](const std::string& why) {
    record({{"kind", "ATTACK"}, {"node", "sim"}, {"vehicle", id}, {"attack", name}, {"skipped", why}});
  };

  switch (a.kind) {
    case AttackKind::Tamper:
      schedule(a.time, [this, a, id, name, skipped](Millis t) {
        auto& victim = obu(id);
        if (!victim.session_key()) return skipped("victim has no session");
        const auto pos = mobility_.vehicle(VehicleId{id}).kinematics.position;
        const auto frame =
            victim.craft_envelope(MessageType::Hazard, msg::encode(HazardReport{HazardKind::Ice, pos, 2, "tamper probe"}), t);
        std::vector<std::size_t> bits = a.bits;
        if (bits.empty())
          for (std::size_t b = 0; b < frame.size() * 8; b += a.stride) bits.push_back(b);
        std::size_t sent = 0;
        for (auto b : bits) {
          if (b >= frame.size() * 8) continue;
          Bytes flipped = frame;
          flipped[b / 8] ^= static_cast<std::uint8_t>(0x80u >> (b % 8));
          send(id, kRsu, std::move(flipped));
          ++sent;
        }
        record({{"kind", "ATTACK"}, {"node", "sim"}, {"vehicle", id}, {"attack", name}, {"frames", sent}});
      });
      break;

    case AttackKind::Replay:
      schedule(a.time, [this, a, id, name](Millis) {
        std::vector<Captured> picked;
        for (const auto& c : captured_) {
          const bool uplink = a.target == "rsu" && c.from == id && c.to == kRsu;
          const bool downlink = a.target == "vehicle" && c.from == kRsu && c.to == id;
          if (uplink || downlink) picked.push_back(c);
        }
        for (auto& c : picked) send(c.from, c.to, c.frame);
        record({{"kind", "ATTACK"}, {"node", "sim"}, {"vehicle", id}, {"attack", name}, {"frames", picked.size()},
                {"target", a.target}});
      });
      break;

    case AttackKind::Flood: {
      const Millis interval = std::max<Millis>(1, std::llround(1000.0 / a.rate_per_second));
      schedule(a.time, [this, id, name, a, interval](Millis) {
        record({{"kind", "ATTACK"}, {"node", "sim"}, {"vehicle", id}, {"attack", name},
                {"rate_per_second", a.rate_per_second}, {"stop_ms", a.stop}});
      });
      for (Millis t = a.time; t <= a.stop; t += interval) {
        schedule(t, [this, id](Millis now) {
          auto& attacker = obu(id);
          if (!attacker.session_key() || attacker.state() != obu::State::Registered) return;
          const auto pos = mobility_.vehicle(VehicleId{id}).kinematics.position;
          send(id, kRsu,
               attacker.craft_envelope(MessageType::Hazard,
                                       msg::encode(HazardReport{HazardKind::Other, pos, 1, "flood"}), now));
        });
      }
      break;
    }

    case AttackKind::Masquerade:
      for (int k = 0; k < a.count; ++k) {
        schedule(a.time + k * a.interval, [this, id, name, k, skipped](Millis now) {
          auto& attacker = obu(id);
          if (attacker.state() != obu::State::Registered) return skipped("attacker not registered");
          msg::HazardBroadcast bc;
          bc.origin = *attacker.pseudonym();
          bc.origin_sequence = static_cast<std::uint64_t>(k);
          bc.priority = true;
          bc.hazard = HazardReport{HazardKind::Accident, mobility_.vehicle(VehicleId{id}).kinematics.position, 5,
                                   "emergency vehicle approaching"};
          const auto body = msg::encode(bc);
          send(id, kRsu, attacker.craft_envelope(MessageType::HazardBcast, body, now));
          std::size_t direct = 0;
          for (const auto& [peer, _] : obus_) {
            if (peer == id || !mobility_.v2v_linked(VehicleId{id}, VehicleId{peer})) continue;
            send(id, peer, attacker.craft_v2v_envelope(MessageType::HazardBcast, body, now));
            ++direct;
          }
          record({{"kind", "ATTACK"}, {"node", "sim"}, {"vehicle", id}, {"attack", name}, {"shot", k},
                  {"direct_frames", direct}});
        });
      }
      break;
  }
}

trace::Trace run(const Config& config) {
  Engine e(config);
  e.run();
  return e.trace();
}

const std::vector<std::string>& bundled() {
  static const std::vector<std::string> names{"fig1", "tamper", "replay", "flood", "dhcp-vs-static", "drive-by", "masquerade"};
  return names;
}

// ---------------------------------------------------------------------------
// Lease statistics

std::vector<LeaseSample> lease_samples(double p, int runs, std::uint64_t seed, Millis latency,
                                       const addressing::LeaseTimers& timers) {
  std::vector<LeaseSample> out;
  out.reserve(static_cast<std::size_t>(std::max(runs, 0)));
  const transport::LinkState link{true, p, latency};
  for (int i = 0; i < runs; ++i) {
    auto pool = addressing::AddressPool::make_lease(addressing::Address::parse("10.0.1.1"), 16, 60000);
    const auto s = seed + static_cast<std::uint64_t>(i);
    out.push_back({s, p, addressing::run_lease(pool, timers, link, s)});
  }
  return out;
}

std::string to_csv(const std::vector<LeaseSample>& samples) {
  std::ostringstream out;
  out << "seed,p,time_to_address_ms,outcome\n";
  for (const auto& s : samples) {
    out << s.seed << ',' << s.loss << ',' << s.outcome.time_to_address << ','
        << (s.outcome.bound ? std::string("bound") : std::string(to_string(*s.outcome.failure))) << '\n';
  }
  return out.str();
}

}  // namespace i2v::scenario
