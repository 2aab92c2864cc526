#include <gtest/gtest.h>

#include <filesystem>
#include <future>
#include <thread>

#include "i2v/audit.hpp"
#include "i2v/keyfile.hpp"
#include "i2v/live.hpp"

using namespace i2v;

namespace {

struct TempDir {
  std::filesystem::path path;
  TempDir() {
    path = std::filesystem::temp_directory_path() /
           ("i2v-live-" + std::to_string(::getpid()) + "-" + std::to_string(counter()++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  static int& counter() {
    static int n = 0;
    return n;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

rsu::Config fast_config() {
  rsu::Config c;
  c.client_timeout = 5000;
  return c;
}

}  // namespace

TEST(LiveRsu, TwoClientsRegisterAndShareHazards) {
  TempDir dir;
  SeededRandom rng(61);
  const auto g = keyfile::generate(rng, {"V1", "V2"}, {}, 100);
  for (const auto& id : g.identities)
    keyfile::write_file(dir.file(id.vehicle.value + ".yaml"), keyfile::serialize_identity(id));
  live::LiveRsu server(fast_config(), g.keys, 0, {}, dir.file("audit.jsonl"));
  server.start();
  ASSERT_NE(server.port(), 0);

  std::atomic<bool> stop{false};
  auto join = [&](const std::string& id, std::vector<std::string> hazards) {
    live::JoinOptions o;
    o.port = server.port();
    o.identity_path = dir.file(id + ".yaml");
    o.hazards = std::move(hazards);
    o.hazard_delay = 300;
    o.duration = 1500;
    o.dump_hazards = dir.file(id + ".hazards.json");
    return live::obu_join(o, stop);
  };
  auto v1 = std::async(std::launch::async, join, "V1", std::vector<std::string>{"pothole"});
  auto v2 = std::async(std::launch::async, join, "V2", std::vector<std::string>{});

  bool saw_both = false;
  for (int i = 0; i < 100 && !saw_both; ++i) {
    saw_both = server.snapshot().size() == 2;
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  EXPECT_TRUE(saw_both);
  EXPECT_EQ(v1.get(), 0);
  EXPECT_EQ(v2.get(), 0);
  server.stop();
  server.stop();

  std::ifstream in(dir.file("V2.hazards.json"));
  const auto hazards = nlohmann::json::parse(in);
  ASSERT_EQ(hazards.size(), 1u);
  EXPECT_EQ(hazards[0]["description"], "pothole");

  const auto report = audit::reverify_file(dir.file("audit.jsonl"));
  EXPECT_GT(report.checked, 0u);
  EXPECT_TRUE(report.all_ok());
}

TEST(LiveRsu, WrongPasswordExitsWithTwo) {
  TempDir dir;
  SeededRandom rng(62);
  const auto g = keyfile::generate(rng, {"V1"}, {}, 100);
  auto id = g.identities[0];
  id.password += "-wrong";
  keyfile::write_file(dir.file("V1.yaml"), keyfile::serialize_identity(id));
  live::LiveRsu server(fast_config(), g.keys, 0);
  server.start();
  std::atomic<bool> stop{false};
  live::JoinOptions o;
  o.port = server.port();
  o.identity_path = dir.file("V1.yaml");
  o.duration = 3000;
  EXPECT_EQ(live::obu_join(o, stop), 2);
  EXPECT_TRUE(server.snapshot().empty());
  server.stop();
}

TEST(LiveRsu, SnapshotIsSafeUnderConcurrentReaders) {
  SeededRandom rng(63);
  const auto g = keyfile::generate(rng, {"V1"}, {}, 100);
  TempDir dir;
  keyfile::write_file(dir.file("V1.yaml"), keyfile::serialize_identity(g.identities[0]));
  live::LiveRsu server(fast_config(), g.keys, 0);
  server.start();
  std::atomic<bool> done{false};
  std::vector<std::thread> readers;
  std::atomic<std::size_t> max_seen{0};
  for (int i = 0; i < 4; ++i)
    readers.emplace_back([&, i] {
      for (std::uint64_t n = 0; !done; ++n) {
        const auto rows = server.snapshot();
        for (const auto& r : rows) EXPECT_EQ(r.vehicle.value, "V1");
        if (rows.size() > max_seen) max_seen = rows.size();
        if (i == 0 && n % 1000 == 0) server.broadcast_hazard({HazardKind::Ice, Vec2::Zero(), 1, "ice"});
      }
    });
  std::atomic<bool> stop{false};
  live::JoinOptions o;
  o.port = server.port();
  o.identity_path = dir.file("V1.yaml");
  o.duration = 800;
  EXPECT_EQ(live::obu_join(o, stop), 0);
  done = true;
  for (auto& t : readers) t.join();
  server.stop();
  EXPECT_EQ(max_seen.load(), 1u);
}

TEST(LiveRsu, ConnectionRefusedIsAnError) {
  std::atomic<bool> stop{false};
  TempDir dir;
  SeededRandom rng(64);
  const auto g = keyfile::generate(rng, {"V1"}, {}, 100);
  keyfile::write_file(dir.file("V1.yaml"), keyfile::serialize_identity(g.identities[0]));
  live::JoinOptions o;
  o.port = 1;  // privileged and unused
  o.identity_path = dir.file("V1.yaml");
  EXPECT_THROW(live::obu_join(o, stop), Error);
}
