// Acceptance gate: one line per criterion with its verdict and runtime.
// Usage: acceptance <path to the i2v CLI>

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "i2v/audit.hpp"
#include "i2v/error.hpp"
#include "i2v/gauntlet.hpp"
#include "i2v/keyfile.hpp"
#include "i2v/messages.hpp"
#include "i2v/scenario.hpp"
#include "i2v/trace.hpp"
#include "i2v/wire.hpp"

using namespace i2v;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kSource = I2V_SOURCE_DIR;
std::string g_cli;

struct Result {
  bool pass = false;
  std::string detail;
};

Result fail(std::string why) { return {false, std::move(why)}; }

scenario::Config bundled(const std::string& name) { return scenario::load(kSource + "/scenarios/" + name + ".yaml"); }

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

scenario::VehicleConfig parked(const std::string& id, Vec2 pos) {
  scenario::VehicleConfig v;
  v.id = id;
  v.license = "LIC-" + id;
  v.name = "Vehicle " + id;
  v.position = pos;
  return v;
}

struct TempDir {
  fs::path path;
  TempDir() {
    char tmpl[] = "/tmp/i2v-acceptance-XXXXXX";
    path = ::mkdtemp(tmpl);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

// ---------------------------------------------------------------------------
// Child processes

struct Child {
  pid_t pid = -1;
  int out_fd = -1;  // child's stdout, or -1
};

Child spawn(const std::vector<std::string>& args, bool capture_stdout, const std::string& stdout_file = "") {
  int fds[2] = {-1, -1};
  if (capture_stdout && ::pipe(fds) != 0) throw std::runtime_error("pipe failed");
  const pid_t pid = ::fork();
  if (pid < 0) throw std::runtime_error("fork failed");
  if (pid == 0) {
    if (capture_stdout) {
      ::dup2(fds[1], STDOUT_FILENO);
      ::close(fds[0]);
      ::close(fds[1]);
    } else {
      const int fd = ::open(stdout_file.empty() ? "/dev/null" : stdout_file.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
      ::dup2(fd, STDOUT_FILENO);
      ::close(fd);
    }
    const int null_fd = ::open("/dev/null", O_WRONLY);
    ::dup2(null_fd, STDERR_FILENO);
    std::vector<char*> argv;
    for (const auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    ::execv(argv[0], argv.data());
    ::_exit(127);
  }
  Child c{pid, -1};
  if (capture_stdout) {
    ::close(fds[1]);
    c.out_fd = fds[0];
  }
  return c;
}

// Exit code, or -1 if it had to be killed after `timeout_ms`.
int wait_for(const Child& c, int timeout_ms) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (std::chrono::steady_clock::now() < deadline) {
    int status = 0;
    const pid_t r = ::waitpid(c.pid, &status, WNOHANG);
    if (r == c.pid) return WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  ::kill(c.pid, SIGKILL);
  ::waitpid(c.pid, nullptr, 0);
  return -1;
}

int run_cli(const std::vector<std::string>& args, int timeout_ms = 20000) {
  std::vector<std::string> full{g_cli};
  full.insert(full.end(), args.begin(), args.end());
  return wait_for(spawn(full, false), timeout_ms);
}

// Reads one line from fd, waiting up to timeout_ms. Empty on EOF or timeout.
std::string read_line(int fd, std::string& buffer, int timeout_ms) {
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms);
  while (true) {
    const auto nl = buffer.find('\n');
    if (nl != std::string::npos) {
      auto line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) return {};
    fd_set set;
    FD_ZERO(&set);
    FD_SET(fd, &set);
    timeval tv{static_cast<long>(left.count() / 1000), static_cast<long>((left.count() % 1000) * 1000)};
    if (::select(fd + 1, &set, nullptr, nullptr, &tv) <= 0) return {};
    char chunk[4096];
    const auto n = ::read(fd, chunk, sizeof chunk);
    if (n <= 0) return {};
    buffer.append(chunk, static_cast<std::size_t>(n));
  }
}

// ---------------------------------------------------------------------------
// 1

Result fig1_registry() {
  scenario::Engine e(bundled("fig1"));
  e.run();
  std::set<std::string> ids;
  for (const auto& r : e.registry()) {
    ids.insert(r.vehicle.value);
    if (r.vehicle_name.empty() || r.license_number.empty() || r.address.value() == 0 || r.pseudonym == Pseudonym{} ||
        !(r.speed > 0) || r.role != policy::Role::Obu)
      return fail("unpopulated registry row for " + r.vehicle.value);
  }
  if (ids != std::set<std::string>{"V2", "V3"}) return fail("registry is not {V2, V3}");
  std::size_t v1_events = 0;
  for (const auto& r : e.trace().records())
    if (r.value("node", "") == "rsu" && trace::involves(r, "V1")) ++v1_events;
  for (const auto& rec : e.rsu().audit().records())
    if (rec.conn == "V1" || rec.vehicle == "V1") ++v1_events;
  if (v1_events != 0) return fail(std::to_string(v1_events) + " RSU events involve V1");
  return {true, "registry {V2, V3}, 0 RSU events for V1"};
}

// ---------------------------------------------------------------------------
// 2

Result bit_flip_sweep() {
  scenario::Config c;
  c.seed = 2;
  c.vehicles = {parked("V2", {-20, 0})};
  scenario::Engine e(c);
  e.run_until(2000);
  auto& victim = e.obu("V2");
  if (victim.state() != obu::State::Registered) return fail("victim not registered");
  const Millis now = e.now();
  const auto frame =
      victim.craft_envelope(wire::MessageType::Hazard, msg::encode(HazardReport{HazardKind::Ice, Vec2(1, 2), 2, "flip me"}), now);
  auto& rsu = e.rsu();
  const std::set<std::string> stages{"decode", "session", "signature", "freshness", "replay", "authorization",
                                     "rate_limit", "decrypt"};
  std::map<std::string, std::size_t> by_stage;
  const std::size_t bits = frame.size() * 8;
  for (std::size_t b = 0; b < bits; ++b) {
    Bytes flipped = frame;
    flipped[b / 8] ^= static_cast<std::uint8_t>(0x80u >> (b % 8));
    const auto before = rsu.audit().records().size();
    const auto accepted_before = rsu.counters().accepted;
    rsu.on_frame("V2", flipped, now);
    const auto& recs = rsu.audit().records();
    if (rsu.counters().accepted != accepted_before) return fail("bit " + std::to_string(b) + " accepted");
    if (recs.size() != before + 1 || recs.back().kind != audit::Kind::Inbound || recs.back().accepted)
      return fail("bit " + std::to_string(b) + " not logged as a rejection");
    if (!stages.count(recs.back().stage)) return fail("bit " + std::to_string(b) + " stage '" + recs.back().stage + "'");
    ++by_stage[recs.back().stage];
  }
  const auto accepted_before = rsu.counters().accepted;
  rsu.on_frame("V2", frame, now);
  if (rsu.counters().accepted != accepted_before + 1) return fail("pristine frame rejected after the sweep");
  std::string detail = std::to_string(bits) + "/" + std::to_string(bits) + " rejected (";
  for (const auto& [s, n] : by_stage) detail += s + " " + std::to_string(n) + ", ";
  detail.resize(detail.size() - 2);
  return {true, detail + ")"};
}

// ---------------------------------------------------------------------------
// 3

Result freshness() {
  SeededRandom rng(3);
  const auto signer = crypto::SigningKey::generate(rng);
  crypto::SymmetricKey key{};
  key[0] = 3;
  const auto sender = Pseudonym::from(rng.bytes(8));
  gauntlet::Resolver resolve = [&](const wire::Envelope&) {
    gauntlet::SenderContext ctx;
    ctx.public_key = signer.public_key();
    ctx.key = key;
    ctx.domain = crypto::NonceDomain::ObuToRsu;
    return ctx;
  };
  std::uint64_t seq = 0;
  const auto table = policy::PolicyTable::defaults();
  auto accepted = [&](Millis now, Millis ts, Millis tau) {
    gauntlet::Config cfg;
    cfg.freshness.tau = tau;
    gauntlet::Gauntlet g(cfg, table);
    const auto f = gauntlet::make_envelope_frame(wire::MessageType::Hazard, sender, ++seq, ts, Bytes{1}, key,
                                                 crypto::NonceDomain::ObuToRsu, signer);
    const auto v = g.check(wire::decode_frame(f), now, resolve);
    if (!v.accepted && v.stage != gauntlet::Stage::Freshness) throw std::runtime_error("rejected at another stage");
    return v.accepted;
  };
  int inside = 0;
  for (int i = 0; i < 10000; ++i) {
    const Millis tau = 1 + static_cast<Millis>(rng.next_u64() % 30000);
    const Millis now = static_cast<Millis>(rng.next_u64() % 4'000'000'000'000ll);
    const Millis ts = now - 2 * tau + static_cast<Millis>(rng.next_u64() % static_cast<std::uint64_t>(3 * tau + 1));
    const bool expected = ts >= now - tau && ts <= now;
    inside += expected;
    if (accepted(now, ts, tau) != expected)
      return fail("now " + std::to_string(now) + " ts " + std::to_string(ts) + " tau " + std::to_string(tau));
    const crypto::FreshnessPolicy policy{tau};
    if (crypto::check_freshness(now, now - tau, policy) != crypto::Freshness::Fresh ||
        crypto::check_freshness(now, now, policy) != crypto::Freshness::Fresh)
      return fail("boundary rejected");
    if (crypto::check_freshness(now, now - tau - 1, policy) != crypto::Freshness::Stale ||
        crypto::check_freshness(now, now + 1, policy) != crypto::Freshness::Future)
      return fail("1 ms outside accepted");
    if (i < 1000) {
      if (!accepted(now, now - tau, tau) || !accepted(now, now, tau)) return fail("boundary rejected by the gauntlet");
      if (accepted(now, now - tau - 1, tau) || accepted(now, now + 1, tau)) return fail("1 ms outside accepted by the gauntlet");
    }
  }
  return {true, "10000 triples agree (" + std::to_string(inside) + " inside), boundaries exact"};
}

// ---------------------------------------------------------------------------
// 4

Result replay() {
  // Gauntlet level: fresh envelopes interleaved with re-injections of earlier ones.
  SeededRandom rng(4);
  crypto::SymmetricKey key{};
  std::vector<crypto::SigningKey> signers;
  std::vector<Pseudonym> senders;
  for (int i = 0; i < 3; ++i) {
    signers.push_back(crypto::SigningKey::generate(rng));
    senders.push_back(Pseudonym::from(rng.bytes(8)));
  }
  gauntlet::Config cfg;
  cfg.freshness.tau = 1'000'000;
  gauntlet::Gauntlet g(cfg, policy::PolicyTable::defaults());
  std::map<Pseudonym, std::size_t> index;
  for (std::size_t i = 0; i < senders.size(); ++i) index[senders[i]] = i;
  gauntlet::Resolver resolve = [&](const wire::Envelope& env) {
    gauntlet::SenderContext ctx;
    ctx.public_key = signers[index.at(env.sender)].public_key();
    ctx.key = key;
    return ctx;
  };
  std::vector<Bytes> sent;
  std::vector<std::uint64_t> next_seq(3, 1);
  std::set<std::pair<Pseudonym, std::uint64_t>> oracle;
  std::multiset<std::pair<Pseudonym, std::uint64_t>> accepted;
  std::size_t reinjected = 0;
  for (int i = 0; i < 10000; ++i) {
    Bytes frame;
    if (!sent.empty() && rng.next_u64() % 3 == 0) {
      frame = sent[rng.next_u64() % sent.size()];
      ++reinjected;
    } else {
      const auto s = rng.next_u64() % 3;
      frame = gauntlet::make_envelope_frame(wire::MessageType::Hazard, senders[s], next_seq[s]++, 1000, Bytes{7}, key,
                                            crypto::NonceDomain::ObuToRsu, signers[s]);
      sent.push_back(frame);
    }
    const auto env = wire::decode_envelope(wire::decode_frame(frame).body);
    const bool expect = oracle.insert({env.sender, env.sequence}).second;
    const auto v = g.check(wire::decode_frame(frame), 1000, resolve);
    if (v.accepted != expect) return fail("gauntlet disagrees with the set oracle at step " + std::to_string(i));
    if (!v.accepted && v.stage != gauntlet::Stage::Replay) return fail("re-injection rejected at the wrong stage");
    if (v.accepted) accepted.insert({env.sender, env.sequence});
  }
  for (const auto& k : accepted)
    if (accepted.count(k) != 1) return fail("duplicate in the accepted multiset");

  // System level: once a captured envelope has been delivered, hand it to its
  // recipient again while it is still fresh. Every copy must die at replay.
  scenario::Engine e(bundled("fig1"));
  const auto replay_index = static_cast<std::size_t>(gauntlet::Stage::Replay);
  std::size_t injected = 0, next = 0;
  while (e.now() < 9000) {
    e.run_until(e.now() + 10);
    const auto& captured = e.captured();
    for (; next < captured.size() && captured[next].time + 100 <= e.now(); ++next) {
      const auto& c = captured[next];
      const auto& checks = c.to == "rsu" ? e.rsu().checks() : e.obu(c.to).checks();
      const auto accepted_before = checks.accepted();
      const auto replays_before = checks.rejected()[replay_index];
      if (c.to == "rsu")
        e.rsu().on_frame(c.from, c.frame, e.now());
      else
        e.obu(c.to).on_frame(c.from, c.frame, e.now());
      if (checks.accepted() != accepted_before || checks.rejected()[replay_index] != replays_before + 1)
        return fail("re-injected " + std::string(wire::to_string(c.type)) + " " + c.from + " -> " + c.to +
                    " not rejected at replay");
      ++injected;
    }
  }
  if (injected == 0) return fail("nothing captured");
  return {true, std::to_string(reinjected) + " gauntlet re-injections and " + std::to_string(injected) +
                    " captured frames all rejected; accepted multiset duplicate-free"};
}

// ---------------------------------------------------------------------------
// 5

Result audit_and_escrow() {
  scenario::Config c;
  c.seed = 5;
  c.duration = 11000;
  c.security.rate_capacity = 1000;
  c.security.rate_per_second = 1000;
  const Vec2 spots[] = {{0, 0}, {30, 0}, {-30, 0}, {0, 30}, {0, -30}};
  for (int i = 0; i < 5; ++i) {
    auto v = parked("V" + std::to_string(i + 1), spots[i]);
    for (int k = 0; k < 200; ++k)
      v.hazards.push_back({1000 + k * 50 + i, {HazardKind::Obstacle, spots[i], 1 + k % 5, "m" + std::to_string(k)}});
    c.vehicles.push_back(v);
  }
  scenario::Engine e(c);
  e.run();
  const auto& log = e.rsu().audit();
  std::size_t hazards = 0, recovered = 0, forged = 0;
  SeededRandom rng(55);
  std::map<std::string, Bytes> keys;
  for (const auto& r : log.records())
    if (r.kind == audit::Kind::Binding) keys[r.token] = r.public_key;
  for (const auto& r : log.records()) {
    if (r.kind != audit::Kind::Inbound || !r.accepted || !r.envelope) continue;
    if (!log.reverify(r)) return fail("accepted envelope does not re-verify offline");
    const auto env = wire::decode_envelope(r.body);
    if (env.payload_type != wire::MessageType::Hazard) continue;
    ++hazards;
    const auto who = policy::escrow_recover(e.rsu().escrow(), env.sender);
    if (!who || who->value != r.conn) return fail("escrow_recover returned the wrong sender");
    ++recovered;
    auto altered = env;
    do {
      altered.sender = Pseudonym::from(rng.bytes(8));
    } while (altered.sender == env.sender);
    if (crypto::verify(keys.at(env.sender.hex()), wire::envelope_signed_bytes(altered), altered.signature))
      return fail("signature survived a sender change");
    ++forged;
  }
  const auto report = log.reverify_all();
  if (!report.all_ok()) return fail("reverify_all failed");
  if (hazards != 1000) return fail("expected 1000 accepted hazards, got " + std::to_string(hazards));
  return {true, std::to_string(report.checked) + " accepted envelopes re-verify; " + std::to_string(recovered) +
                    " senders recovered; " + std::to_string(forged) + " sender edits break the signature"};
}

// ---------------------------------------------------------------------------
// 6

Result obu_broadcast_denied() {
  scenario::Config c;
  c.seed = 6;
  c.vehicles = {parked("V2", {-20, 0}), parked("V3", {20, 0})};
  scenario::Engine e(c);
  e.run_until(1500);
  auto& attacker = e.obu("V3");
  if (attacker.state() != obu::State::Registered) return fail("attacker not registered");
  msg::HazardBroadcast bc;
  bc.origin = *attacker.pseudonym();
  bc.priority = true;
  bc.hazard = HazardReport{HazardKind::Accident, Vec2(5, 5), 5, "emergency vehicle approaching"};
  const auto body = msg::encode(bc);
  std::size_t denied = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto now = e.now();
    const auto before = e.rsu().audit().records().size();
    e.rsu().on_frame("V3", attacker.craft_envelope(wire::MessageType::HazardBcast, body, now), now);
    const auto& recs = e.rsu().audit().records();
    if (recs.size() == before + 1 && !recs.back().accepted && recs.back().stage == "authorization") ++denied;
  }
  if (e.rsu().counters().broadcasts != 0) return fail("RSU broadcast something");
  if (!e.obu("V2").hazards().empty()) return fail("V2 received the forged broadcast");
  e.rsu().broadcast_hazard(bc.hazard, e.now());
  e.run_until(e.now() + 200);
  const auto& got = e.obu("V2").hazards();
  const bool delivered = got.size() == 1 && got[0].hazard == bc.hazard && e.obu("V3").hazards().size() == 1;
  if (denied != 1000) return fail(std::to_string(denied) + "/1000 denied at authorization");
  if (!delivered) return fail("RSU broadcast of the same payload not delivered");
  return {true, "1000/1000 denied at authorization; RSU copy delivered to V2 and V3"};
}

// ---------------------------------------------------------------------------
// 7

Result flood() {
  const auto cfg = bundled("flood");
  const auto& attack = cfg.attacks.at(0);
  scenario::Engine e(cfg);
  e.run();
  const auto cap = static_cast<double>(cfg.security.rate_capacity);
  const double rate = cfg.security.rate_per_second;
  std::vector<Millis> accepted;
  std::size_t attacker_rejects = 0, honest_rejects = 0;
  for (const auto& r : e.trace().records()) {
    if (r["kind"] != "VERDICT" || r.value("node", "") != "rsu") continue;
    const auto type = wire::message_type_from_name(r["type"].get<std::string>());
    if (!type || wire::is_plain_type(*type)) continue;
    const bool from_attacker = r.value("vehicle", "") == attack.vehicle;
    if (r["verdict"] == "accept") {
      if (from_attacker) accepted.push_back(r["time"].get<Millis>());
    } else {
      (from_attacker ? attacker_rejects : honest_rejects)++;
    }
  }
  for (std::size_t i = 0; i < accepted.size(); ++i)
    for (std::size_t j = i; j < accepted.size(); ++j)
      if (static_cast<double>(j - i + 1) > cap + rate * static_cast<double>(accepted[j] - accepted[i]) / 1000.0 + 1e-9)
        return fail("token bucket bound broken over [" + std::to_string(accepted[i]) + ", " + std::to_string(accepted[j]) + "]");
  if (honest_rejects != 0) return fail(std::to_string(honest_rejects) + " honest envelopes rejected");

  std::set<std::string> reached;
  for (const auto& r : e.trace().records())
    if (r["kind"] == "DELIVERY" && r.value("description", "") == cfg.vehicles.at(0).hazards.at(0).hazard.description)
      reached.insert(r["vehicle"].get<std::string>());
  std::set<std::string> others;
  for (const auto& v : cfg.vehicles)
    if (v.id != cfg.vehicles.at(0).id) others.insert(v.id);
  if (reached != others) return fail("honest hazard did not reach every other vehicle");
  return {true, std::to_string(accepted.size()) + " attacker envelopes accepted, " + std::to_string(attacker_rejects) +
                    " throttled; honest hazard reached " + std::to_string(reached.size()) + " vehicles, 0 honest rejections"};
}

// ---------------------------------------------------------------------------
// 8

Result drive_by() {
  SeededRandom rng(8);
  double worst = 0;
  for (int i = 0; i < 100; ++i) {
    const double R = 60.0 + 140.0 * rng.next_unit();
    const double d = (2.0 * rng.next_unit() - 1.0) * 0.9 * R;
    const double v = 5.0 + 25.0 * rng.next_unit();
    const Millis dt = 10 + static_cast<Millis>(rng.next_u64() % 191);
    scenario::Config c;
    c.seed = 800 + static_cast<std::uint64_t>(i);
    c.step = dt;
    c.range.rsu_radius = R;
    auto car = parked("V1", Vec2(-R - 10.0, d));
    car.speed = v;
    c.vehicles = {car};
    c.duration = static_cast<Millis>((2.0 * R + 30.0) / v * 1000.0) + 2 * dt;
    const auto s = trace::summarize(scenario::run(c));
    const auto it = s.time_in_range.find("V1");
    const double measured = it == s.time_in_range.end() ? 0.0 : static_cast<double>(it->second);
    const double expected = *mobility::connectivity_window(d, v, R);
    const double err = std::abs(measured - expected);
    worst = std::max(worst, err / static_cast<double>(dt));
    if (err > static_cast<double>(dt))
      return fail("run " + std::to_string(i) + ": measured " + std::to_string(measured) + " ms, expected " +
                  std::to_string(expected) + " ms, dt " + std::to_string(dt));
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", worst);
  return {true, std::string("100 drive-bys within dt (worst error ") + buf + " dt)"};
}

// ---------------------------------------------------------------------------
// 9

Result lease_monte_carlo() {
  // The static path assigns at registration, so its time-to-address is what
  // the OBU reports in its ADDRESS record.
  scenario::Engine fig1(bundled("fig1"));
  fig1.run();
  std::optional<Millis> static_time;
  for (const auto& r : fig1.trace().records())
    if (r["kind"] == "ADDRESS" && r.value("mode", "") == "static") {
      const auto t = r["time_to_address"].get<Millis>();
      static_time = std::max(static_time.value_or(t), t);
    }
  if (!static_time) return fail("no static ADDRESS record");

  const addressing::LeaseTimers timers;
  const Millis latency = 10;
  std::vector<double> means;
  std::string table;
  for (int k = 0; k <= 9; ++k) {
    const double p = k / 10.0;
    const auto samples = scenario::lease_samples(p, 10000, 9000, latency, timers);
    double sum = 0;
    for (const auto& s : samples) {
      if (*static_time > s.outcome.time_to_address) return fail("static slower than lease at p=" + std::to_string(p));
      if (k == 0 && (!s.outcome.bound || s.outcome.time_to_address != 4 * latency))
        return fail("p=0 run took " + std::to_string(s.outcome.time_to_address) + " ms");
      sum += static_cast<double>(s.outcome.time_to_address);
    }
    means.push_back(sum / static_cast<double>(samples.size()));
    char buf[48];
    std::snprintf(buf, sizeof buf, "%s%.1f:%.0f", k ? " " : "", p, means.back());
    table += buf;
  }
  for (std::size_t i = 1; i < means.size(); ++i)
    if (means[i] < means[i - 1]) return fail("mean decreases between p=" + std::to_string(i - 1) + "/10 and " + std::to_string(i) + "/10");
  return {true, "static " + std::to_string(*static_time) + " ms; mean ms by p " + table};
}

// ---------------------------------------------------------------------------
// 10

Result determinism() {
  TempDir dir;
  for (const auto& name : scenario::bundled()) {
    const auto config = bundled(name);
    const auto a = scenario::run(config).to_jsonl();
    const auto b = scenario::run(config).to_jsonl();
    if (a != b) return fail(name + ": two in-process runs differ");
    const auto golden = read_file(kSource + "/tests/golden/" + name + ".jsonl");
    if (golden.empty()) return fail(name + ": golden trace missing");
    if (a != golden) return fail(name + ": differs from the golden trace");
    for (const char* run : {"a", "b"}) {
      const auto out = dir.file(name + "." + run + ".jsonl");
      if (run_cli({"sim", "run", kSource + "/scenarios/" + name + ".yaml", "--trace", out}) != 0)
        return fail(name + ": CLI run failed");
      if (read_file(out) != golden) return fail(name + ": CLI trace differs from the golden trace");
    }
  }
  return {true, std::to_string(scenario::bundled().size()) + " scenarios byte-identical across runs, CLI and goldens"};
}

// ---------------------------------------------------------------------------
// 11

Result codec_fuzz() {
  SeededRandom rng(11);
  const std::set<Errc> frame_errors{Errc::BadMagic, Errc::BadVersion, Errc::UnknownType, Errc::OversizeBody,
                                    Errc::TruncatedFrame, Errc::TrailingBytes};
  const std::set<Errc> envelope_errors{Errc::Truncated, Errc::MalformedLength, Errc::UnknownType};
  static const wire::MessageType types[] = {wire::MessageType::Register, wire::MessageType::Beacon,
                                            wire::MessageType::Hazard, wire::MessageType::HazardBcast,
                                            wire::MessageType::PeerList, wire::MessageType::Relay,
                                            wire::MessageType::Disconnect};
  auto random_envelope = [&] {
    wire::Envelope env;
    env.sender = Pseudonym::from(rng.bytes(8));
    env.sequence = rng.next_u64();
    env.timestamp = static_cast<Millis>(rng.next_u64() >> 1);
    env.payload_type = types[rng.next_u64() % 7];
    env.sealed_payload = rng.bytes(16 + rng.next_u64() % 300);
    env.signature = rng.bytes(64);
    return env;
  };
  for (int i = 0; i < 10000; ++i) {
    const auto env = random_envelope();
    const auto body = wire::encode_envelope(env);
    const auto frame = wire::encode_frame(env.payload_type, body);
    const auto back = wire::decode_frame(frame);
    if (back.type != env.payload_type || back.body != body) return fail("frame round trip");
    if (wire::decode_envelope(back.body) != env) return fail("envelope round trip");
  }
  std::size_t ok = 0, declared = 0;
  for (int i = 0; i < 100000; ++i) {
    Bytes input;
    switch (i % 4) {
      case 0:
        input = rng.bytes(rng.next_u64() % 200);
        break;
      case 1:
        input = rng.bytes(rng.next_u64() % 200);
        if (input.size() >= 3) {
          input[0] = wire::kMagic0;
          input[1] = wire::kMagic1;
          input[2] = wire::kVersion;
        }
        break;
      default: {
        const auto env = random_envelope();
        input = (i % 4 == 2) ? wire::encode_frame(env.payload_type, wire::encode_envelope(env)) : wire::encode_envelope(env);
        const auto edits = 1 + rng.next_u64() % 4;
        for (std::uint64_t k = 0; k < edits && !input.empty(); ++k) {
          const auto pos = rng.next_u64() % input.size();
          switch (rng.next_u64() % 3) {
            case 0: input[pos] ^= static_cast<std::uint8_t>(1u << (rng.next_u64() % 8)); break;
            case 1: input.erase(input.begin() + static_cast<std::ptrdiff_t>(pos)); break;
            default: input.insert(input.begin() + static_cast<std::ptrdiff_t>(pos), static_cast<std::uint8_t>(rng.next_u64()));
          }
        }
      }
    }
    try {
      (void)wire::decode_frame(input);
      ++ok;
    } catch (const Error& e) {
      if (!frame_errors.count(e.code())) return fail("decode_frame raised undeclared " + std::string(to_string(e.code())));
      ++declared;
    }
    try {
      (void)wire::decode_envelope(input);
      ++ok;
    } catch (const Error& e) {
      if (!envelope_errors.count(e.code())) return fail("decode_envelope raised undeclared " + std::string(to_string(e.code())));
      ++declared;
    }
  }
  return {true, "10000 round trips; 100000 fuzz cases (" + std::to_string(ok) + " decoded, " + std::to_string(declared) +
                    " declared errors, 0 other)"};
}

// ---------------------------------------------------------------------------
// 12

Result live_smoke() {
  TempDir dir;
  if (run_cli({"keygen", "--out", dir.file("rsu.keys"), "--vehicles", "V1,V2", "--identity-dir", dir.path.string(),
               "--password-iterations", "2000"}) != 0)
    return fail("keygen failed");
  auto rsu = spawn({g_cli, "rsu", "serve", "--port", "0", "--keys", dir.file("rsu.keys"), "--policy",
                    kSource + "/config/policy.yaml", "--tau", "5000", "--timeout", "5000", "--audit",
                    dir.file("audit.jsonl")},
                   true);
  std::string buffer;
  const auto first = read_line(rsu.out_fd, buffer, 3000);
  json listening;
  try {
    listening = json::parse(first);
  } catch (const std::exception&) {
    ::kill(rsu.pid, SIGKILL);
    wait_for(rsu, 1000);
    return fail("no LISTENING line from rsu serve");
  }
  const auto port = std::to_string(listening.value("port", 0));
  auto join = [&](const std::string& id, std::vector<std::string> extra) {
    std::vector<std::string> args{g_cli, "obu", "join", "--host", "127.0.0.1", "--port", port, "--identity",
                                  dir.file(id + ".identity.yaml"), "--speed", "12", "--duration", "2500",
                                  "--dump-hazards", dir.file(id + ".hazards.json")};
    args.insert(args.end(), extra.begin(), extra.end());
    return spawn(args, false, dir.file(id + ".out"));
  };
  auto v1 = join("V1", {"--hazard", "smoke test hazard", "--hazard-delay", "700"});
  auto v2 = join("V2", {});
  const int c1 = wait_for(v1, 6000);
  const int c2 = wait_for(v2, 6000);

  std::set<std::string> registered;
  std::vector<std::string> lines;
  for (std::string line; !(line = read_line(rsu.out_fd, buffer, 200)).empty();) lines.push_back(line);
  ::kill(rsu.pid, SIGINT);
  const int rsu_code = wait_for(rsu, 3000);
  for (std::string line; !(line = read_line(rsu.out_fd, buffer, 500)).empty();) lines.push_back(line);
  ::close(rsu.out_fd);
  bool shutdown = false;
  for (const auto& line : lines) {
    const auto j = json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;
    if (j.value("kind", "") == "REGISTRY" && j.value("action", "") == "add") registered.insert(j.value("vehicle", ""));
    if (j.value("kind", "") == "SHUTDOWN") shutdown = true;
  }
  if (c1 != 0 || c2 != 0) return fail("obu join exit codes " + std::to_string(c1) + ", " + std::to_string(c2));
  if (registered != std::set<std::string>{"V1", "V2"}) return fail("registry did not show both vehicles");
  const auto hazards = json::parse(read_file(dir.file("V2.hazards.json")), nullptr, false);
  bool reached = false;
  if (hazards.is_array())
    for (const auto& h : hazards) reached = reached || h.value("description", "") == "smoke test hazard";
  if (!reached) return fail("V1's hazard did not reach V2");
  if (rsu_code != 0 || !shutdown) return fail("rsu serve did not shut down cleanly (exit " + std::to_string(rsu_code) + ")");
  const auto report = audit::reverify_file(dir.file("audit.jsonl"));
  if (report.checked == 0 || !report.all_ok()) return fail("audit log does not re-verify");
  return {true, "V1, V2 registered; hazard V1 -> V2 delivered; clean shutdown; " + std::to_string(report.checked) +
                    " audited envelopes re-verify"};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <i2v cli>\n";
    return 2;
  }
  g_cli = fs::absolute(argv[1]).string();
  ::signal(SIGPIPE, SIG_IGN);

  struct Criterion {
    const char* id;
    const char* name;
    double limit_s;
    std::function<Result()> run;
  };
  const std::vector<Criterion> criteria{
      {"C01", "fig1 registry and V1 isolation", 5, fig1_registry},
      {"C02", "exhaustive single-bit-flip sweep", 60, bit_flip_sweep},
      {"C03", "freshness window", 5, freshness},
      {"C04", "replay rejection", 5, replay},
      {"C05", "audit re-verification and escrow", 30, audit_and_escrow},
      {"C06", "OBU HAZARD_BCAST denied", 10, obu_broadcast_denied},
      {"C07", "flood rate limiting", 10, flood},
      {"C08", "drive-by time in range", 30, drive_by},
      {"C09", "lease vs static Monte Carlo", 60, lease_monte_carlo},
      {"C10", "deterministic traces and goldens", 30, determinism},
      {"C11", "codec fuzz and round trips", 60, codec_fuzz},
      {"C12", "live loopback smoke", 10, live_smoke},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Result r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = fail(std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (r.pass && secs > c.limit_s) r = fail("took longer than " + std::to_string(c.limit_s) + " s; " + r.detail);
    failed += !r.pass;
    char timing[64];
    std::snprintf(timing, sizeof timing, "%.2fs/%.0fs", secs, c.limit_s);
    std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << c.id << ' ' << c.name << " (" << timing << "): " << r.detail
              << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
