#include "i2v/addressing.hpp"

#include <cmath>
#include <limits>
#include <sstream>

namespace i2v::addressing {

std::string Address::to_string() const {
  std::ostringstream out;
  out << int{octets[0]} << '.' << int{octets[1]} << '.' << int{octets[2]} << '.' << int{octets[3]};
  return out.str();
}

Address Address::parse(std::string_view text) {
  Address a;
  std::size_t pos = 0;
  for (int i = 0; i < 4; ++i) {
    if (i > 0) {
      if (pos >= text.size() || text[pos] != '.') throw Error(Errc::ConfigValidation, "bad address: " + std::string(text));
      ++pos;
    }
    int value = 0;
    int digits = 0;
    while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9' && digits < 3) {
      value = value * 10 + (text[pos] - '0');
      ++pos;
      ++digits;
    }
    if (digits == 0 || value > 255) throw Error(Errc::ConfigValidation, "bad address: " + std::string(text));
    a.octets[i] = static_cast<std::uint8_t>(value);
  }
  if (pos != text.size()) throw Error(Errc::ConfigValidation, "bad address: " + std::string(text));
  return a;
}

Millis LeaseTimers::timeout(int attempt) const {
  return static_cast<Millis>(std::llround(static_cast<double>(initial) * std::pow(backoff, attempt)));
}

// ---------------------------------------------------------------------------
// AddressPool

AddressPool AddressPool::make_static(std::map<VehicleId, Address> table) {
  AddressPool p;
  p.mode_ = Mode::Static;
  std::map<Address, VehicleId> seen;
  for (const auto& [vehicle, address] : table) {
    auto [it, fresh] = seen.emplace(address, vehicle);
    if (!fresh)
      throw Error(Errc::ConfigValidation,
                  "address " + address.to_string() + " assigned to both " + it->second.value + " and " + vehicle.value);
  }
  p.static_table_ = std::move(table);
  return p;
}

AddressPool AddressPool::make_lease(Address first, std::uint32_t size, Millis lease_duration) {
  if (size == 0) throw Error(Errc::PreconditionViolation, "pool size must be positive");
  if (lease_duration <= 0) throw Error(Errc::PreconditionViolation, "lease duration must be positive");
  if (std::uint64_t{first.value()} + size - 1 > std::numeric_limits<std::uint32_t>::max())
    throw Error(Errc::PreconditionViolation, "pool overflows the address space");
  AddressPool p;
  p.mode_ = Mode::Lease;
  p.first_ = first.value();
  p.size_ = size;
  p.lease_duration_ = lease_duration;
  return p;
}

Address AddressPool::assign_static(const VehicleId& vehicle) const {
  if (mode_ != Mode::Static) throw Error(Errc::PreconditionViolation, "pool is in lease mode");
  auto it = static_table_.find(vehicle);
  if (it == static_table_.end()) throw Error(Errc::UnknownVehicle, vehicle.value);
  return it->second;
}

std::optional<Address> AddressPool::offer(const std::string& client, Millis now) {
  if (mode_ != Mode::Lease) throw Error(Errc::PreconditionViolation, "pool is in static mode");
  expire_leases(now);
  for (auto& [address, lease] : leases_) {
    if (lease.client != client) continue;
    if (!lease.bound) lease.expires_at = now + kOfferHold;
    return address;
  }
  for (std::uint32_t i = 0; i < size_; ++i) {
    auto address = Address::from_value(first_ + i);
    if (leases_.count(address)) continue;
    leases_[address] = {client, now + kOfferHold, false};
    return address;
  }
  return std::nullopt;
}

std::optional<Address> AddressPool::bind(const std::string& client, Address requested, Millis now) {
  if (mode_ != Mode::Lease) throw Error(Errc::PreconditionViolation, "pool is in static mode");
  expire_leases(now);
  auto it = leases_.find(requested);
  if (it == leases_.end()) {
    // The reservation lapsed; take the address again if nobody else holds it.
    const auto v = requested.value();
    if (v < first_ || v - first_ >= size_) return std::nullopt;
    if (lease_of(client)) return std::nullopt;
    it = leases_.emplace(requested, Lease{client, 0, false}).first;
  }
  if (it->second.client != client) return std::nullopt;
  it->second.bound = true;
  it->second.expires_at = now + lease_duration_;
  return requested;
}

std::vector<Address> AddressPool::expire_leases(Millis now) {
  std::vector<Address> released;
  for (auto it = leases_.begin(); it != leases_.end();) {
    if (it->second.expires_at <= now) {
      if (it->second.bound) released.push_back(it->first);
      it = leases_.erase(it);
    } else {
      ++it;
    }
  }
  return released;
}

void AddressPool::release(const std::string& client) {
  for (auto it = leases_.begin(); it != leases_.end();) {
    if (it->second.client == client)
      it = leases_.erase(it);
    else
      ++it;
  }
}

std::optional<Address> AddressPool::lease_of(const std::string& client) const {
  for (const auto& [address, lease] : leases_)
    if (lease.bound && lease.client == client) return address;
  return std::nullopt;
}

std::map<Address, std::string> AddressPool::holders() const {
  std::map<Address, std::string> out;
  for (const auto& [address, lease] : leases_)
    if (lease.bound) out.emplace(address, lease.client);
  return out;
}

// ---------------------------------------------------------------------------
// Lease messages

Bytes encode_lease_frame(wire::MessageType type, const LeaseMessage& msg) {
  ByteWriter w;
  w.u32(msg.xid).str8(msg.client).raw(msg.address.octets);
  return wire::encode_frame(type, w.data());
}

LeaseMessage decode_lease_body(ByteView body) {
  ByteReader r(body);
  LeaseMessage m;
  m.xid = r.u32();
  m.client = r.str8();
  auto octets = r.raw(4);
  std::copy(octets.begin(), octets.end(), m.address.octets.begin());
  r.expect_end();
  return m;
}

std::string_view to_string(LeaseState s) {
  switch (s) {
    case LeaseState::Init: return "INIT";
    case LeaseState::DiscoverSent: return "DISCOVER_SENT";
    case LeaseState::OfferReceived: return "OFFER_RECEIVED";
    case LeaseState::RequestSent: return "REQUEST_SENT";
    case LeaseState::Bound: return "BOUND";
    case LeaseState::Failed: return "FAILED";
  }
  return "UNKNOWN";
}

// ---------------------------------------------------------------------------
// LeaseClient

LeaseClient::LeaseClient(std::string client_id, LeaseTimers timers, std::uint32_t xid_base)
    : client_(std::move(client_id)), timers_(timers), xid_(xid_base) {
  if (timers_.initial <= 0 || !(timers_.backoff >= 1.0) || timers_.max_attempts < 1)
    throw Error(Errc::PreconditionViolation, "lease timers");
}

void LeaseClient::enter(LeaseState s) {
  state_ = s;
  history_.push_back(s);
}

Bytes LeaseClient::discover(Millis now) {
  attempt_started_ = now;
  offered_.reset();
  enter(LeaseState::DiscoverSent);
  return encode_lease_frame(wire::MessageType::AddrDiscover, {xid_, client_, {}});
}

Bytes LeaseClient::start(Millis now) {
  if (state_ != LeaseState::Init) throw Error(Errc::ProtocolOrderViolation, "lease already started");
  started_at_ = now;
  attempt_ = 0;
  return discover(now);
}

std::vector<Bytes> LeaseClient::on_frame(const wire::Frame& frame, Millis now) {
  if (state_ == LeaseState::Bound || state_ == LeaseState::Failed || state_ == LeaseState::Init) return {};
  if (auto d = deadline(); d && now > *d) return {};
  if (frame.type == wire::MessageType::Error) {
    auto [code, reason] = wire::decode_error_body(frame.body);
    if (code == Errc::PoolExhausted) {
      failure_ = code;
      enter(LeaseState::Failed);
    }
    return {};
  }
  LeaseMessage msg;
  try {
    msg = decode_lease_body(frame.body);
  } catch (const Error&) {
    return {};
  }
  if (msg.xid != xid_ || msg.client != client_) return {};
  if (frame.type == wire::MessageType::AddrOffer && state_ == LeaseState::DiscoverSent) {
    offered_ = msg.address;
    enter(LeaseState::OfferReceived);
    enter(LeaseState::RequestSent);
    return {encode_lease_frame(wire::MessageType::AddrRequest, {xid_, client_, msg.address})};
  }
  if (frame.type == wire::MessageType::AddrAck && state_ == LeaseState::RequestSent && offered_ == msg.address) {
    address_ = msg.address;
    bound_at_ = now;
    enter(LeaseState::Bound);
  }
  return {};
}

std::optional<Millis> LeaseClient::deadline() const {
  if (state_ != LeaseState::DiscoverSent && state_ != LeaseState::RequestSent) return std::nullopt;
  return attempt_started_ + timers_.timeout(attempt_);
}

std::vector<Bytes> LeaseClient::on_timeout(Millis now) {
  auto d = deadline();
  if (!d || now < *d) return {};
  if (attempt_ + 1 >= timers_.max_attempts) {
    failure_ = Errc::MaxRetriesExceeded;
    enter(LeaseState::Failed);
    return {};
  }
  ++attempt_;
  ++xid_;
  return {discover(*d)};
}

// ---------------------------------------------------------------------------
// LeaseServer

std::vector<Bytes> LeaseServer::on_frame(const wire::Frame& frame, Millis now) {
  if (frame.type != wire::MessageType::AddrDiscover && frame.type != wire::MessageType::AddrRequest) return {};
  LeaseMessage msg;
  try {
    msg = decode_lease_body(frame.body);
  } catch (const Error&) {
    return {};
  }
  if (frame.type == wire::MessageType::AddrDiscover) {
    auto address = pool_.offer(msg.client, now);
    if (!address)
      return {wire::encode_frame(wire::MessageType::Error,
                                 wire::encode_error_body(Errc::PoolExhausted, "no free address"))};
    return {encode_lease_frame(wire::MessageType::AddrOffer, {msg.xid, msg.client, *address})};
  }
  auto bound = pool_.bind(msg.client, msg.address, now);
  if (!bound) return {};
  return {encode_lease_frame(wire::MessageType::AddrAck, {msg.xid, msg.client, *bound})};
}

// ---------------------------------------------------------------------------
// run_lease

LeaseOutcome run_lease(AddressPool& pool, const LeaseTimers& timers, const transport::LinkState& link,
                       std::uint64_t seed, Millis start, const std::string& client_id) {
  transport::SimNetwork net(seed);
  const transport::NodeId client_node = "client";
  const transport::NodeId server_node = "server";
  net.add_endpoint(client_node);
  net.add_endpoint(server_node);
  net.set_link(client_node, server_node, link);
  net.set_link(server_node, client_node, link);

  LeaseClient client(client_id, timers, static_cast<std::uint32_t>(seed * 2654435761u));
  LeaseServer server(pool);

  Millis now = start;
  net.send(client_node, server_node, client.start(now), now);
  while (client.state() != LeaseState::Bound && client.state() != LeaseState::Failed) {
    auto next_delivery = net.next_delivery_time();
    auto timer = client.deadline();
    // A delivery due exactly at the deadline is processed before the timer fires.
    if (next_delivery && (!timer || *next_delivery <= *timer)) {
      now = *next_delivery;
      for (auto& d : net.poll(server_node, now))
        for (auto& reply : server.on_frame(wire::decode_frame(d.frame), now)) net.send(server_node, client_node, reply, now);
      for (auto& d : net.poll(client_node, now))
        for (auto& out : client.on_frame(wire::decode_frame(d.frame), now)) net.send(client_node, server_node, out, now);
    } else if (timer) {
      now = *timer;
      for (auto& out : client.on_timeout(now)) net.send(client_node, server_node, out, now);
    } else {
      break;
    }
  }

  LeaseOutcome out;
  out.attempts = client.attempts();
  out.failure = client.failure();
  if (client.state() == LeaseState::Bound) {
    out.bound = true;
    out.address = *client.address();
    out.time_to_address = *client.bound_at() - start;
  } else {
    out.time_to_address = now - start;
  }
  return out;
}

}  // namespace i2v::addressing
