// cli_harness: runs the agent and reference server in-process and drives the
// full flow, the mutation matrix, latency benchmarks and seeded transcripts.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

#include "webagent/harness.hpp"

namespace h = webagent::harness;

namespace {

nlohmann::json to_json(const h::RunReport& r) {
  nlohmann::json j;
  j["outcome"] = r.ok ? "ok" : "fail";
  j["phases_ms"] = r.phase_ms;
  j["total_ms"] = r.total_ms;
  j["request_count"] = r.request_count;
  j["agent_requests"] = r.agent_requests;
  if (r.failure_reason) j["failure_reason"] = *r.failure_reason;
  if (!r.verdict.empty()) j["verdict"] = r.verdict;
  return j;
}

std::vector<webagent::TrustedServerEntry> read_trust(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return webagent::parse_trusted_file(ss.str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Desk-scale harness for ssh-webagent and the reference server"};
  app.require_subcommand(1);

  std::string fixtures = h::default_fixture_dir().string();
  app.add_option("--fixtures", fixtures, "Fixture directory (keys, trusted_servers, authorized_keys)")
      ->capture_default_str();

  auto* e2e = app.add_subcommand("e2e", "One complete session and authentication");
  std::string trusted_override;
  int ttl = 120;
  e2e->add_option("--trusted-servers", trusted_override, "Trusted servers file for the agent");
  e2e->add_option("--ttl", ttl, "Agent session lifetime in seconds")->capture_default_str();

  auto* bench = app.add_subcommand("bench", "Total flow time under injected server latency");
  int latency = 0, trials = 20;
  bench->add_option("--latency", latency, "Milliseconds per server leg")->capture_default_str();
  bench->add_option("--trials", trials, "Timed runs")->check(CLI::PositiveNumber)->capture_default_str();

  auto* mutate = app.add_subcommand("mutate", "Negative mutation matrix");

  auto* transcript = app.add_subcommand("transcript", "Deterministic message transcript");
  std::uint64_t seed = 1;
  std::string out_path;
  transcript->add_option("--seed", seed, "RNG seed")->capture_default_str();
  transcript->add_option("--out", out_path, "Output file (stdout if absent)");

  CLI11_PARSE(app, argc, argv);

  h::StackConfig config;
  config.fixtures = fixtures;

  try {
    if (*e2e) {
      if (!trusted_override.empty()) config.trusted = read_trust(trusted_override);
      config.sessions.ttl = std::chrono::seconds(ttl);
      auto report = h::run_e2e(config);
      std::cout << to_json(report).dump(2) << '\n';
      return report.ok && report.request_count == 4 ? 0 : 1;
    }

    if (*bench) {
      auto s = h::bench(config, latency, trials);
      nlohmann::json j{{"latency_ms", s.latency_ms},  {"trials", s.trials},   {"median_ms", s.median_ms},
                       {"p95_ms", s.p95_ms},          {"failures", s.failures}, {"totals_ms", s.totals_ms},
                       {"lower_bound_ms", 4 * latency}};
      std::cout << j.dump(2) << '\n';
      bool ok = s.failures == 0 && s.median_ms >= 4.0 * latency;
      if (s.median_ms > 4.0 * latency + 200.0)
        std::cerr << "warning: median exceeds the " << 4 * latency + 200 << " ms budget\n";
      return ok ? 0 : 1;
    }

    if (*mutate) {
      auto rows = h::mutate_suite(config);
      int passed = 0;
      for (const auto& r : rows) {
        std::cout << (r.pass() ? "rejected  " : "FAILED    ") << r.name << "  (" << r.observed << ")\n";
        passed += r.pass();
      }
      std::cout << passed << "/" << rows.size() << " mutations rejected with the expected error\n";
      return passed == static_cast<int>(rows.size()) ? 0 : 1;
    }

    if (*transcript) {
#ifdef WEBAGENT_TEST_HOOKS
      auto t = h::seeded_transcript(seed, config).str();
      if (out_path.empty()) {
        std::cout << t;
      } else {
        std::ofstream(out_path) << t;
      }
      return 0;
#else
      std::cerr << "transcript needs a build with WEBAGENT_TEST_HOOKS\n";
      return 1;
#endif
    }
  } catch (const std::exception& e) {
    std::cerr << "cli_harness: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
