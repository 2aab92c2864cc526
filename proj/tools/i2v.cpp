#include <CLI11.hpp>

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "i2v/error.hpp"
#include "i2v/keyfile.hpp"
#include "i2v/live.hpp"
#include "i2v/scenario.hpp"
#include "i2v/trace.hpp"

namespace {

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop = true; }

void install_signal_handlers() {
  struct sigaction sa {};
  sa.sa_handler = on_signal;
  sigemptyset(&sa.sa_mask);
  sigaction(SIGINT, &sa, nullptr);
  sigaction(SIGTERM, &sa, nullptr);
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');)
    if (!item.empty()) out.push_back(item);
  return out;
}

int exit_code_for(i2v::Errc code) {
  switch (code) {
    case i2v::Errc::ConfigParse:
    case i2v::Errc::ConfigValidation:
      return 2;
    case i2v::Errc::CorruptTrace:
      return 3;
    case i2v::Errc::BadKeyFile:
    case i2v::Errc::BindFailure:
      return 4;
    default:
      return 1;
  }
}

void print_registry(const std::vector<i2v::rsu::ClientRecord>& rows) {
  std::cout << "vehicle    name                 license          speed(km/h)  address       registered_at\n";
  for (const auto& r : rows) {
    char line[256];
    std::snprintf(line, sizeof line, "%-10s %-20s %-16s %11.1f  %-13s %lld\n", r.vehicle.value.c_str(),
                  r.vehicle_name.c_str(), r.license_number.c_str(), i2v::mps_to_kmh(r.speed),
                  r.address.to_string().c_str(), static_cast<long long>(r.registered_at));
    std::cout << line;
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace i2v;

  CLI::App app{"I2V/V2V secure messaging simulator and live node"};
  app.require_subcommand(1);

  // sim
  auto* sim = app.add_subcommand("sim", "Simulation runs");
  sim->require_subcommand(1);
  auto* sim_run = sim->add_subcommand("run", "Run a scenario config");
  std::string config_path, trace_out;
  bool registry_json = false;
  sim_run->add_option("config", config_path, "Scenario config (YAML or JSON)")->required();
  sim_run->add_option("--trace", trace_out, "Write the JSONL trace here");
  sim_run->add_flag("--json", registry_json, "Print the final registry as JSON");

  auto* sim_lease = sim->add_subcommand("lease", "Lease time-to-address Monte Carlo");
  double lease_p = 0.0;
  int lease_runs = 1000;
  std::uint64_t lease_seed = 1;
  i2v::Millis lease_latency = 10;
  std::string lease_csv;
  sim_lease->add_option("--p", lease_p, "Per-message loss probability")->check(CLI::Range(0.0, 1.0));
  sim_lease->add_option("--runs", lease_runs, "Number of runs")->check(CLI::PositiveNumber);
  sim_lease->add_option("--seed", lease_seed, "First seed");
  sim_lease->add_option("--latency", lease_latency, "One-way latency in ms");
  sim_lease->add_option("--csv", lease_csv, "Write CSV here instead of stdout");

  // rsu
  auto* rsu_cmd = app.add_subcommand("rsu", "Road-side unit");
  rsu_cmd->require_subcommand(1);
  auto* serve = rsu_cmd->add_subcommand("serve", "Serve over TCP");
  live::ServeOptions serve_opts;
  std::string audit_path;
  serve->add_option("--port", serve_opts.port, "TCP port (0 picks one)")->required();
  serve->add_option("--keys", serve_opts.keys_path, "Key file from keygen")->required();
  serve->add_option("--policy", serve_opts.policy_path, "Policy table (YAML)")->required();
  serve->add_option("--tau", serve_opts.tau, "Freshness window in ms");
  serve->add_option("--timeout", serve_opts.timeout, "Client timeout in ms");
  serve->add_option("--audit", audit_path, "Append the audit log to this file");

  // obu
  auto* obu_cmd = app.add_subcommand("obu", "On-board unit");
  obu_cmd->require_subcommand(1);
  auto* join = obu_cmd->add_subcommand("join", "Join a live RSU");
  live::JoinOptions join_opts;
  std::string dump_path;
  join->add_option("--host", join_opts.host, "RSU host")->required();
  join->add_option("--port", join_opts.port, "RSU port")->required();
  join->add_option("--identity", join_opts.identity_path, "Identity file from keygen")->required();
  join->add_option("--speed", join_opts.speed, "Speed in m/s");
  join->add_option("--hazard", join_opts.hazards, "Hazard description to report once registered");
  join->add_option("--hazard-delay", join_opts.hazard_delay, "Delay after registration before reporting, ms");
  join->add_option("--dump-hazards", dump_path, "Write received hazards as JSON on exit");
  join->add_option("--duration", join_opts.duration, "Leave after this many ms (0: until signalled)");

  // keygen
  auto* keygen = app.add_subcommand("keygen", "Generate RSU keys and OBU identities");
  std::string keys_out, vehicles_arg = "V1,V2,V3", identity_dir, emergency_arg;
  std::uint32_t iterations = crypto::kDefaultPasswordIterations;
  std::optional<std::uint64_t> keygen_seed;
  keygen->add_option("--out", keys_out, "RSU key file to write")->required();
  keygen->add_option("--vehicles", vehicles_arg, "Comma-separated vehicle ids");
  keygen->add_option("--identity-dir", identity_dir, "Write <id>.identity.yaml files here");
  keygen->add_option("--emergency", emergency_arg, "Comma-separated emergency vehicle ids");
  keygen->add_option("--password-iterations", iterations, "PBKDF2 iterations")->check(CLI::PositiveNumber);
  keygen->add_option("--seed", keygen_seed, "Deterministic output (testing only)");

  // trace
  auto* trace_cmd = app.add_subcommand("trace", "Trace tools");
  trace_cmd->require_subcommand(1);
  auto* inspect = trace_cmd->add_subcommand("inspect", "Filter and summarise a trace");
  std::string trace_path;
  trace::Filter filter;
  bool as_json = false;
  inspect->add_option("file", trace_path, "JSONL trace")->required();
  inspect->add_option("--vehicle", filter.vehicle, "Only records involving this vehicle");
  inspect->add_option("--kind", filter.kind, "Only records of this kind");
  inspect->add_option("--from", filter.from, "Earliest time, ms");
  inspect->add_option("--to", filter.to, "Latest time, ms");
  inspect->add_flag("--json", as_json, "JSON output");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim_run->parsed()) {
      const auto config = scenario::load(config_path);
      scenario::Engine engine(config);
      engine.run();
      if (!trace_out.empty()) engine.trace().save(trace_out);
      const auto rows = engine.registry();
      if (registry_json) {
        nlohmann::json out = nlohmann::json::array();
        for (const auto& r : rows) out.push_back(rsu::to_json(r));
        std::cout << out.dump(2) << '\n';
      } else {
        print_registry(rows);
      }
      return 0;
    }
    if (sim_lease->parsed()) {
      addressing::LeaseTimers timers;
      const auto csv = scenario::to_csv(scenario::lease_samples(lease_p, lease_runs, lease_seed, lease_latency, timers));
      if (lease_csv.empty()) {
        std::cout << csv;
      } else {
        keyfile::write_file(lease_csv, csv);
      }
      return 0;
    }
    if (serve->parsed()) {
      if (!audit_path.empty()) serve_opts.audit_path = audit_path;
      install_signal_handlers();
      return live::rsu_serve(serve_opts, g_stop);
    }
    if (join->parsed()) {
      if (!dump_path.empty()) join_opts.dump_hazards = dump_path;
      install_signal_handlers();
      return live::obu_join(join_opts, g_stop);
    }
    if (keygen->parsed()) {
      std::unique_ptr<RandomSource> rng;
      if (keygen_seed) {
        rng = std::make_unique<SeededRandom>(*keygen_seed);
      } else {
        rng = std::make_unique<SystemRandom>();
      }
      const auto vehicles = split_csv(vehicles_arg);
      const auto emergency_list = split_csv(emergency_arg);
      const std::set<std::string> emergency(emergency_list.begin(), emergency_list.end());
      const auto g = keyfile::generate(*rng, vehicles, emergency, iterations);
      keyfile::write_file(keys_out, keyfile::serialize_keys(g.keys));
      const std::filesystem::path dir = identity_dir.empty()
                                            ? std::filesystem::path(keys_out).parent_path()
                                            : std::filesystem::path(identity_dir);
      if (!dir.empty()) std::filesystem::create_directories(dir);
      for (const auto& id : g.identities) {
        const auto path = dir / (id.vehicle.value + ".identity.yaml");
        keyfile::write_file(path.string(), keyfile::serialize_identity(id));
        std::cout << path.string() << '\n';
      }
      std::cout << keys_out << '\n';
      return 0;
    }
    if (inspect->parsed()) {
      const auto all = trace::Trace::load(trace_path);
      const bool filtered = filter.vehicle || filter.kind || filter.from || filter.to;
      trace::Trace selection;
      for (auto r : trace::select(all, filter)) {
        r.erase("seq");
        selection.add(std::move(r));
      }
      const auto summary = trace::summarize(selection);
      if (as_json) {
        nlohmann::json out{{"summary", trace::to_json(summary)}};
        if (filtered) out["records"] = selection.records();
        std::cout << out.dump(2) << '\n';
      } else {
        if (filtered)
          for (const auto& r : selection.records()) std::cout << trace::format_record(r) << '\n';
        std::cout << trace::to_text(summary);
      }
      return 0;
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
