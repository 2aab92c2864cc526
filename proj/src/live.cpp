#include "i2v/live.hpp"

#include <chrono>
#include <fstream>
#include <iostream>

#include "i2v/error.hpp"
#include "i2v/keyfile.hpp"

namespace i2v::live {

using nlohmann::json;

Millis wall_clock_ms() {
  using namespace std::chrono;
  return duration_cast<milliseconds>(system_clock::now().time_since_epoch()).count();
}

void Inbox::push(Item item) {
  {
    std::lock_guard lock(mu_);
    items_.push_back(std::move(item));
  }
  cv_.notify_one();
}

std::vector<Inbox::Item> Inbox::drain(Millis timeout_ms) {
  std::unique_lock lock(mu_);
  cv_.wait_for(lock, std::chrono::milliseconds(timeout_ms), [&] { return !items_.empty(); });
  std::vector<Item> out(std::make_move_iterator(items_.begin()), std::make_move_iterator(items_.end()));
  items_.clear();
  return out;
}

// ---------------------------------------------------------------------------
// RSU

LiveRsu::LiveRsu(rsu::Config config, rsu::Keys keys, std::uint16_t port, EventSink sink,
                 std::optional<std::string> audit_path)
    : sink_(std::move(sink)), listener_(transport::TcpListener::bind(port)) {
  auto pool = addressing::AddressPool::make_lease(addressing::Address::parse("10.0.1.1"), 250, 3600000);
  rsu_ = std::make_unique<rsu::Rsu>(std::move(config), std::move(keys), std::move(pool),
                                    std::make_unique<SystemRandom>(), sink_, wall_clock_ms());
  if (audit_path) rsu_->audit().open_file(*audit_path);
}

LiveRsu::~LiveRsu() { stop(); }

void LiveRsu::start() {
  running_ = true;
  accept_thread_ = std::thread([this] { accept_loop(); });
  loop_thread_ = std::thread([this] { event_loop(); });
}

void LiveRsu::accept_loop() {
  while (running_) {
    auto fd = listener_.accept_fd();
    if (!fd) return;
    auto stream = std::make_shared<transport::TcpStream>(*fd);
    std::lock_guard lock(conns_mu_);
    if (!running_) return;
    const auto conn = "conn-" + std::to_string(++next_conn_);
    conns_[conn] = stream;
    readers_.emplace_back([this, conn, stream] {
      while (true) {
        std::optional<Bytes> frame;
        try {
          frame = stream->read_frame();
        } catch (const Error&) {
          frame.reset();
        }
        inbox_.push({conn, frame});
        if (!frame) return;
      }
    });
  }
}

void LiveRsu::deliver(std::vector<rsu::Outbound> out) {
  for (auto& o : out) {
    std::shared_ptr<transport::TcpStream> stream;
    {
      std::lock_guard lock(conns_mu_);
      auto it = conns_.find(o.to);
      if (it == conns_.end()) continue;
      stream = it->second;
    }
    stream->write_frame(o.frame);
    if (o.close) stream->shutdown();
  }
}

void LiveRsu::event_loop() {
  while (running_) {
    auto items = inbox_.drain(50);
    const auto now = wall_clock_ms();
    for (auto& item : items) {
      if (item.frame) {
        deliver(rsu_->on_frame(item.conn, *item.frame, now));
      } else {
        rsu_->on_link_down(item.conn, now);
        std::lock_guard lock(conns_mu_);
        conns_.erase(item.conn);
      }
    }
    {
      std::vector<HazardReport> hazards;
      {
        std::lock_guard lock(hazards_mu_);
        hazards.swap(hazards_);
      }
      for (const auto& h : hazards) rsu_->broadcast_hazard(h, now);
    }
    deliver(rsu_->tick(now));
    auto clients = rsu_->list_clients();
    std::lock_guard lock(snapshot_mu_);
    snapshot_ = std::move(clients);
  }
}

void LiveRsu::stop() {
  if (stopped_.exchange(true)) return;
  running_ = false;
  listener_.close();
  if (accept_thread_.joinable()) accept_thread_.join();
  {
    std::lock_guard lock(conns_mu_);
    for (auto& [_, s] : conns_) s->shutdown();
  }
  for (auto& t : readers_)
    if (t.joinable()) t.join();
  if (loop_thread_.joinable()) loop_thread_.join();
  rsu_->audit().flush();
}

std::vector<rsu::ClientRecord> LiveRsu::snapshot() const {
  std::lock_guard lock(snapshot_mu_);
  return snapshot_;
}

void LiveRsu::broadcast_hazard(const HazardReport& hazard) {
  std::lock_guard lock(hazards_mu_);
  hazards_.push_back(hazard);
}

int rsu_serve(const ServeOptions& options, const std::atomic<bool>& stop) {
  rsu::Config config;
  config.policy = policy::PolicyTable::load(options.policy_path);
  config.checks.freshness.tau = options.tau;
  config.client_timeout = options.timeout;
  auto keys = keyfile::load_keys(options.keys_path);

  std::mutex out_mu;
  auto print = [&out_mu](const json& j) {
    std::lock_guard lock(out_mu);
    std::cout << j.dump() << std::endl;
  };
  LiveRsu server(config, std::move(keys), options.port, print, options.audit_path);
  print({{"kind", "LISTENING"}, {"port", server.port()}, {"time", wall_clock_ms()}});
  server.start();
  while (!stop) std::this_thread::sleep_for(std::chrono::milliseconds(20));
  server.stop();
  json rows = json::array();
  for (const auto& r : server.snapshot()) rows.push_back(rsu::to_json(r));
  print({{"kind", "SHUTDOWN"}, {"registry", rows}, {"time", wall_clock_ms()}});
  return 0;
}

// ---------------------------------------------------------------------------
// OBU

json hazards_json(const obu::Obu& obu) {
  json out = json::array();
  for (const auto& h : obu.hazards())
    out.push_back({{"kind", to_string(h.hazard.kind)},
                   {"location", {h.hazard.location.x(), h.hazard.location.y()}},
                   {"severity", h.hazard.severity},
                   {"description", h.hazard.description},
                   {"origin", h.origin.hex()},
                   {"priority", h.priority},
                   {"received_at", h.received_at}});
  return out;
}

int obu_join(const JoinOptions& options, const std::atomic<bool>& stop) {
  auto identity = keyfile::load_identity(options.identity_path);
  auto stream = std::make_shared<transport::TcpStream>(transport::TcpStream::connect(options.host, options.port));

  auto print = [](const json& j) { std::cout << j.dump() << std::endl; };
  obu::Obu obu(identity, obu::Config{}, std::make_unique<SystemRandom>(), print);
  obu.set_motion(options.speed, Vec2::Zero());

  Inbox inbox;
  std::thread reader([&] {
    while (true) {
      std::optional<Bytes> frame;
      try {
        frame = stream->read_frame();
      } catch (const Error&) {
        frame.reset();
      }
      inbox.push({"rsu", frame});
      if (!frame) return;
    }
  });

  auto send_all = [&](const std::vector<obu::Outbound>& out) {
    for (const auto& o : out) stream->write_frame(o.frame);
  };

  const auto started = wall_clock_ms();
  bool ever_registered = false;
  bool closed = false;
  std::optional<Millis> registered_at;
  bool hazards_sent = false;
  send_all(obu.on_enter_range(started));

  while (!stop && !closed) {
    const auto now = wall_clock_ms();
    if (options.duration > 0 && now - started >= options.duration) break;
    for (auto& item : inbox.drain(20)) {
      if (!item.frame) {
        closed = true;
        break;
      }
      send_all(obu.on_frame("rsu", *item.frame, wall_clock_ms()));
    }
    send_all(obu.tick(wall_clock_ms()));
    if (obu.state() == obu::State::Registered && !registered_at) {
      registered_at = wall_clock_ms();
      ever_registered = true;
    }
    if (registered_at && !hazards_sent && wall_clock_ms() - *registered_at >= options.hazard_delay) {
      hazards_sent = true;
      for (const auto& text : options.hazards)
        send_all(obu.report_hazard(HazardReport{HazardKind::Other, Vec2::Zero(), 3, text}, wall_clock_ms()).second);
    }
    if (obu.state() == obu::State::Rejected) break;
  }

  if (obu.state() == obu::State::Registered && !closed) {
    try {
      stream->write_frame(obu.craft_envelope(wire::MessageType::Disconnect, {}, wall_clock_ms()));
    } catch (const Error&) {
    }
  }
  stream->shutdown();
  reader.join();

  if (options.dump_hazards) {
    std::ofstream out(*options.dump_hazards, std::ios::trunc);
    out << hazards_json(obu).dump(2) << '\n';
  }
  if (obu.state() == obu::State::Rejected) return 2;
  return ever_registered ? 0 : 3;
}

}  // namespace i2v::live
