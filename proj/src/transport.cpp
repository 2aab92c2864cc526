#include "i2v/transport.hpp"

#include "i2v/error.hpp"

namespace i2v::transport {

SimNetwork::SimNetwork(std::uint64_t seed) : rng_(seed, /*stream=*/0x6e6574) {}

void SimNetwork::add_endpoint(const NodeId& id) { queues_.try_emplace(id); }

void SimNetwork::set_link(const NodeId& a, const NodeId& b, LinkState state) {
  if (!(state.loss_probability >= 0.0 && state.loss_probability <= 1.0))
    throw Error(Errc::PreconditionViolation, "loss probability outside [0,1]");
  if (state.latency < 0) throw Error(Errc::PreconditionViolation, "negative latency");
  links_[link_key(a, b)] = state;
}

void SimNetwork::set_connected(const NodeId& a, const NodeId& b, bool connected) {
  links_[link_key(a, b)].connected = connected;
}

LinkState SimNetwork::link(const NodeId& a, const NodeId& b) const {
  auto it = links_.find(link_key(a, b));
  return it == links_.end() ? LinkState{} : it->second;
}

SendResult SimNetwork::send(const NodeId& from, const NodeId& to, Bytes frame, Millis now) {
  if (!has_endpoint(from)) throw Error(Errc::UnknownEndpoint, from);
  if (!has_endpoint(to)) throw Error(Errc::UnknownEndpoint, to);
  const auto seq = next_seq_++;
  const auto state = link(from, to);
  if (!state.connected) {
    drops_.push_back({from, to, now, DropReason::Disconnected, seq});
    return {SendOutcome::Dropped};
  }
  if (rng_.next_unit() < state.loss_probability) {
    drops_.push_back({from, to, now, DropReason::Loss, seq});
    return {SendOutcome::Dropped};
  }
  Millis due = now + state.latency;
  auto& last = last_due_[{from, to}];
  due = std::max(due, last);
  last = due;
  queues_[to].emplace(std::pair{due, seq}, Delivery{from, std::move(frame), due, seq});
  return {SendOutcome::Queued, due};
}

std::vector<Delivery> SimNetwork::poll(const NodeId& endpoint, Millis now) {
  std::vector<Delivery> out;
  auto it = queues_.find(endpoint);
  if (it == queues_.end()) return out;
  auto& q = it->second;
  while (!q.empty() && q.begin()->first.first <= now) {
    out.push_back(std::move(q.begin()->second));
    q.erase(q.begin());
  }
  return out;
}

std::optional<Millis> SimNetwork::next_delivery_time() const {
  std::optional<Millis> best;
  for (const auto& [id, q] : queues_)
    if (!q.empty() && (!best || q.begin()->first.first < *best)) best = q.begin()->first.first;
  return best;
}

}  // namespace i2v::transport
