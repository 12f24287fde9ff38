#include "webagent/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "webagent/error.hpp"

namespace webagent::harness {

namespace fs = std::filesystem;
using Millis = std::chrono::duration<double, std::milli>;

HttpResponse InProcessEndpoint::send(const HttpRequest& request) {
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);
  return handler_(request);
}

std::string Transcript::str() const {
  std::string out;
  for (const auto& [direction, message] : lines) out += direction + " " + message + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// Relay

namespace {

std::string agent_failure_reason(const HttpResponse& r) {
  if (r.status == 403) return "untrusted";
  if (r.status == 410) return "session expired";
  return "agent status " + std::to_string(r.status) + ": " + r.body;
}

}  // namespace

RunReport run_relay(Endpoint& server, Endpoint& agent, const RelayConfig& config, const RelayHooks& hooks,
                    Transcript* transcript) {
  RunReport report;
  const auto origin = url_origin(config.page_url);
  const auto started = Clock::now();
  auto mark = started;
  auto phase_done = [&](const char* name) {
    auto now = Clock::now();
    report.phase_ms[name] = Millis(now - mark).count();
    mark = now;
  };
  auto fail = [&](std::string phase, std::string reason) {
    report.ok = false;
    report.failed_phase = std::move(phase);
    report.failure_reason = std::move(reason);
    report.total_ms = Millis(Clock::now() - started).count();
    return report;
  };
  auto server_call = [&](std::string method, std::string path, std::string query, std::string body) {
    HttpRequest r;
    r.method = std::move(method);
    r.path = std::move(path);
    r.query = std::move(query);
    r.body = std::move(body);
    if (!r.body.empty()) r.headers.emplace_back("Content-Type", std::string(kFormContentType));
    ++report.request_count;
    return server.send(r);
  };
  auto agent_call = [&](int leg, std::string body) {
    HttpRequest r;
    r.method = "POST";
    r.path = "/";
    r.headers = {{"Content-Type", std::string(kFormContentType)}, {"Referer", config.page_url}};
    if (!origin.empty()) r.headers.emplace_back("Origin", origin);
    r.body = std::move(body);
    if (hooks.to_agent) hooks.to_agent(leg, r);
    ++report.agent_requests;
    if (transcript) {
      auto p = wire::form_field(wire::form_parse(r.body), "P");
      transcript->lines.emplace_back("server->agent", p.value_or(""));
    }
    auto resp = agent.send(r);
    report.agent_status = resp.status;
    return resp;
  };
  auto post_back = [&](int leg, const std::string& token, std::string reply) {
    if (hooks.to_server) hooks.to_server(leg, reply);
    if (transcript) transcript->lines.emplace_back("agent->server", reply);
    return server_call("POST", "/auth-step", {}, "T=" + wire::form_escape(token) + "&P=" + wire::form_escape(reply));
  };

  try {
    // Session establishment.
    auto kex = server_call("GET", "/kex", {}, {});
    if (kex.status != 200) return fail("kex_request", "server status " + std::to_string(kex.status));
    auto fields = wire::form_parse(kex.body);
    auto token = wire::form_field(fields, "T");
    auto p = wire::form_field(fields, "P");
    if (!token || !p) return fail("kex_request", "malformed server reply");
    phase_done("kex_request");

    auto agent_kex = agent_call(0, "P=" + wire::form_escape(*p));
    if (agent_kex.status != 200) return fail("kex_response", agent_failure_reason(agent_kex));
    auto established = post_back(0, *token, agent_kex.body);
    if (established.status != 200) {
      report.verdict = established.body;
      return fail("kex_response", established.body);
    }
    phase_done("kex_response");

    // Authentication.
    auto auth = server_call("GET", "/auth-step", "T=" + wire::form_escape(*token), {});
    if (auth.status != 200) return fail("auth_request", "server status " + std::to_string(auth.status));
    phase_done("auth_request");

    auto agent_auth = agent_call(1, auth.body);
    if (agent_auth.status != 200) return fail("auth_response", agent_failure_reason(agent_auth));
    auto verdict = post_back(1, *token, agent_auth.body);
    report.verdict = verdict.body;
    phase_done("auth_response");
    if (!verdict.body.starts_with("AUTH_OK")) return fail("auth_response", verdict.body);
  } catch (const std::exception& e) {
    return fail(report.phase_ms.empty() ? "kex_request" : "relay", e.what());
  }

  report.ok = true;
  report.total_ms = Millis(Clock::now() - started).count();
  return report;
}

// ---------------------------------------------------------------------------
// Stack

fs::path default_fixture_dir() {
  if (const char* env = std::getenv("WEBAGENT_FIXTURES")) return env;
#ifdef WEBAGENT_FIXTURE_DIR
  return WEBAGENT_FIXTURE_DIR;
#else
  return "tests/fixtures";
#endif
}

namespace {

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::unique_ptr<RandomSource> make_rng([[maybe_unused]] const std::optional<std::uint64_t>& seed,
                                       [[maybe_unused]] std::uint64_t salt) {
#ifdef WEBAGENT_TEST_HOOKS
  if (seed) return std::make_unique<SeededRandom>(*seed * 2 + salt);
#else
  if (seed) throw std::logic_error("seeded runs need a build with test hooks");
#endif
  return std::make_unique<SystemRandom>();
}

}  // namespace

Stack::Stack(StackConfig config) : config_(std::move(config)) {
  auto& c = config_;
  if (c.agent_keys.empty()) c.agent_keys = {c.fixtures / "keys/user_rsa", c.fixtures / "keys/user_ed25519"};
  if (c.server_key.empty()) c.server_key = c.fixtures / "keys/server_rsa.pem";
  if (c.authorized_keys.empty()) c.authorized_keys = c.fixtures / "authorized_keys";
  if (!c.trusted) c.trusted = parse_trusted_file(read_text(c.fixtures / "trusted_servers"));
  c.server.referer = c.relay.page_url;

  agent_rng_ = make_rng(c.seed, 0);
  server_rng_ = make_rng(c.seed, 1);

  auto trust = std::make_shared<TrustStore>(*c.trusted);
  AgentService::Options options{c.sessions, c.dh_policy, c.response_options};
  agent_ = std::make_unique<AgentService>(std::move(trust), load_keyring(c.agent_keys), std::move(options),
                                          *agent_rng_, EventLog(agent_log_.sink()));
  agent_->on_session_created = [this](const SessionState& s) { last_agent_session = s; };

  refserver::ServerIdentity identity{ssh::PrivateKey::load_file(c.server_key), {c.relay.page_url}};
  server_ = std::make_unique<refserver::RefServerApp>(std::move(identity),
                                                      refserver::load_authorized_keys(c.authorized_keys), c.server,
                                                      *server_rng_, EventLog::silent());
  server_->on_session_established = [this](const refserver::PendingAuth& pa) { last_server_session = pa; };

  agent_endpoint_ = std::make_unique<InProcessEndpoint>(
      [this](const HttpRequest& r) { return agent_->handle(r, Clock::now() + clock_offset_); });
  server_endpoint_ = std::make_unique<InProcessEndpoint>(
      [this](const HttpRequest& r) { return server_->handle(r); }, c.server_latency);
}

Stack::~Stack() = default;

RunReport Stack::run(const RelayHooks& hooks, Transcript* transcript) {
  agent_log_.clear();
  last_agent_session.reset();
  last_server_session.reset();
  return run_relay(*server_endpoint_, *agent_endpoint_, config_.relay, hooks, transcript);
}

std::optional<std::string> Stack::last_agent_error() const {
  auto events = agent_log_.events();
  for (auto it = events.rbegin(); it != events.rend(); ++it)
    if ((*it)["event"] == "request_rejected") return (*it)["error"].get<std::string>();
  return std::nullopt;
}

RunReport run_e2e(const StackConfig& config) {
  Stack stack(config);
  return stack.run();
}

// ---------------------------------------------------------------------------
// Bench

double percentile(std::vector<double> values, double p) {
  if (values.empty()) return 0;
  std::sort(values.begin(), values.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(values.size())));
  rank = std::clamp<std::size_t>(rank, 1, values.size());
  return values[rank - 1];
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0;
  std::sort(v.begin(), v.end());
  auto n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2;
}

}  // namespace

BenchSummary bench(StackConfig config, int latency_ms, int trials) {
  config.server_latency = std::chrono::milliseconds(latency_ms);
  config.sessions.capacity = std::max<std::size_t>(config.sessions.capacity, static_cast<std::size_t>(trials) + 8);
  Stack stack(std::move(config));

  BenchSummary s;
  s.latency_ms = latency_ms;
  s.trials = trials;
  // Untimed warm-up.
  stack.set_server_latency({});
  stack.run();
  stack.set_server_latency(std::chrono::milliseconds(latency_ms));

  for (int i = 0; i < trials; ++i) {
    auto r = stack.run();
    if (!r.ok) ++s.failures;
    s.totals_ms.push_back(r.total_ms);
  }
  s.median_ms = median(s.totals_ms);
  s.p95_ms = percentile(s.totals_ms, 95);
  return s;
}

// ---------------------------------------------------------------------------
// Mutation suite

namespace {

void edit_form(HttpRequest& r, const std::function<void(wire::FormRequest&)>& fn) {
  auto form = wire::form_decode(r.body);
  fn(form);
  r.body = wire::form_encode(form.message, form.user, form.service);
}

void edit_kex_request(HttpRequest& r, const std::function<void(wire::KexDhRequest&)>& fn) {
  edit_form(r, [&](wire::FormRequest& f) {
    auto kex = wire::decode_kex_request(f.message.data);
    fn(kex);
    f.message.data = wire::encode(kex);
  });
}

void edit_private_body(HttpRequest& r, const std::function<void(wire::MessageBody&)>& fn) {
  edit_form(r, [&](wire::FormRequest& f) {
    auto mb = wire::decode_message_body(f.message.data);
    fn(mb);
    f.message.data = wire::encode(mb);
  });
}

void set_header(HttpRequest& r, const std::string& name, const std::string& value) {
  for (auto& [k, v] : r.headers)
    if (k == name) v = value;
}

/// Rewrites the agent's AUTH_RESPONSE through the server's view of the
/// session, as an attacker holding the session keys could.
void edit_auth_response(const Stack& stack, std::string& reply,
                        const std::function<void(wire::AuthResponsePayload&)>& fn) {
  const auto& pa = stack.last_server_session.value();
  auto msg = wire::decode_message(base64_decode(reply));
  auto mb = wire::decode_message_body(msg.data);
  auto plain = crypto::body_decrypt(mb, pa.secrets, {wire::BodyType::AuthResponse});
  fn(std::get<wire::AuthResponsePayload>(plain.payload));
  auto sealed = crypto::body_encrypt(plain, pa.secrets, mb.algorithm, system_random());
  msg.data = wire::encode(sealed);
  reply = base64_encode(wire::encode(msg));
}

/// AUTH_REQUEST-leg body built by the harness under the live session keys.
void forge_private(const Stack& stack, HttpRequest& r, const std::function<wire::Plaintext(const refserver::PendingAuth&)>& make) {
  const auto& pa = stack.last_server_session.value();
  edit_private_body(r, [&](wire::MessageBody& mb) {
    auto sealed = crypto::body_encrypt(make(pa), pa.secrets, mb.algorithm, system_random());
    mb.ciphertext = sealed.ciphertext;
  });
}

std::string verdict_class(const std::string& body) {
  // "AUTH_FAIL <Class>: detail" / "KEX_FAIL <Class>"
  auto sp = body.find(' ');
  if (sp == std::string::npos) return body;
  auto rest = body.substr(sp + 1);
  return rest.substr(0, rest.find_first_of(": "));
}

struct Mutation {
  std::string name;
  std::set<std::string> expected;
  std::function<void(StackConfig&)> configure;
  std::function<RelayHooks(Stack&)> hooks;
};

std::vector<Mutation> mutations() {
  using W = wire::FormRequest;
  const std::set<std::string> garbled{"UnknownBodyType", "UnexpectedBodyType", "IdentifierMismatch", "Truncated",
                                      "EmptyField", "UnsupportedScheme"};
  const std::set<std::string> server_garbled{"DecryptFailure", "WrongBodyType", "IdentifierMismatch"};
  std::vector<Mutation> m;

  auto agent_leg = [](int want, std::function<void(Stack&, HttpRequest&)> fn) {
    return [want, fn](Stack& s) {
      RelayHooks h;
      h.to_agent = [&s, want, fn](int leg, HttpRequest& r) {
        if (leg == want) fn(s, r);
      };
      return h;
    };
  };
  auto server_leg = [](int want, std::function<void(Stack&, std::string&)> fn) {
    return [want, fn](Stack& s) {
      RelayHooks h;
      h.to_server = [&s, want, fn](int leg, std::string& reply) {
        if (leg == want) fn(s, reply);
      };
      return h;
    };
  };

  m.push_back({"version byte 0x12", {"UnsupportedVersion"}, {},
               agent_leg(0, [](Stack&, HttpRequest& r) { edit_form(r, [](W& f) { f.message.version = 0x12; }); })});
  m.push_back({"message type 0x05", {"UnknownType"}, {}, agent_leg(0, [](Stack&, HttpRequest& r) {
                 edit_form(r, [](W& f) { f.message.type = static_cast<wire::MessageType>(0x05); });
               })});
  m.push_back({"algorithm byte 0x03", {"UnsupportedAlgorithm"}, {},
               agent_leg(1, [](Stack&, HttpRequest& r) { edit_private_body(r, [](auto& mb) { mb.algorithm = 0x03; }); })});
  m.push_back({"encryption scheme byte 0x03", {"UnsupportedScheme"}, {}, server_leg(1, [](Stack& s, std::string& reply) {
                 edit_auth_response(s, reply, [](auto& p) { p.options.es = 0x03; });
               })});
  m.push_back({"kex signature byte", {"BadSignature"}, {}, agent_leg(0, [](Stack&, HttpRequest& r) {
                 edit_kex_request(r, [](auto& k) { k.sign.back() ^= 0x01; });
               })});
  m.push_back({"userauth signature byte", {"BadSignature"}, {}, server_leg(1, [](Stack& s, std::string& reply) {
                 edit_auth_response(s, reply, [](auto& p) {
                   for (auto& item : p.signatures) item.signature.back() ^= 0x01;
                 });
               })});
  m.push_back({"auth request ciphertext bit", garbled, {}, agent_leg(1, [](Stack&, HttpRequest& r) {
                 edit_private_body(r, [](auto& mb) { mb.ciphertext[0] ^= 0x01; });
               })});
  m.push_back({"kex response ciphertext bit", server_garbled, {}, server_leg(0, [](Stack&, std::string& reply) {
                 auto msg = wire::decode_message(base64_decode(reply));
                 auto resp = wire::decode_kex_response(msg.data);
                 auto mb = wire::decode_message_body(resp.encrypted_body);
                 mb.ciphertext[0] ^= 0x01;
                 resp.encrypted_body = wire::encode(mb);
                 msg.data = wire::encode(resp);
                 reply = base64_encode(wire::encode(msg));
               })});
  m.push_back({"auth response ciphertext bit", server_garbled, {}, server_leg(1, [](Stack&, std::string& reply) {
                 auto msg = wire::decode_message(base64_decode(reply));
                 auto mb = wire::decode_message_body(msg.data);
                 mb.ciphertext[0] ^= 0x01;
                 msg.data = wire::encode(mb);
                 reply = base64_encode(wire::encode(msg));
               })});
  m.push_back({"clear identifier", {"UnknownSession"}, {},
               agent_leg(1, [](Stack&, HttpRequest& r) { edit_private_body(r, [](auto& mb) { mb.identifier[0] ^= 0x01; }); })});
  m.push_back({"inner identifier", {"IdentifierMismatch"}, {}, agent_leg(1, [](Stack& s, HttpRequest& r) {
                 forge_private(s, r, [](const refserver::PendingAuth& pa) {
                   auto id = pa.identifier;
                   id[0] ^= 0x01;
                   return crypto::make_plaintext(id, wire::AuthRequestPayload{pa.ssh_session_identifier},
                                                 system_random());
                 });
               })});
  m.push_back({"body type NEW on auth leg", {"UnexpectedBodyType"}, {}, agent_leg(1, [](Stack& s, HttpRequest& r) {
                 forge_private(s, r, [](const refserver::PendingAuth& pa) {
                   return crypto::make_plaintext(pa.identifier, wire::NewPayload{}, system_random());
                 });
               })});
  m.push_back({"referer changed on auth leg", {"RefererMismatch"}, {}, agent_leg(1, [](Stack& s, HttpRequest& r) {
                 set_header(r, "Referer", s.config().relay.page_url + "other");
               })});
  m.push_back({"referer changed on kex leg", {"BadSignature"}, {}, agent_leg(0, [](Stack& s, HttpRequest& r) {
                 set_header(r, "Referer", s.config().relay.page_url + "other");
               })});
  m.push_back({"untrusted referer", {"UntrustedServer"}, {}, agent_leg(0, [](Stack&, HttpRequest& r) {
                 set_header(r, "Referer", "https://evil.example.net/ssh/");
               })});
  m.push_back({"missing referer", {"MissingReferer"}, {}, agent_leg(0, [](Stack&, HttpRequest& r) {
                 std::erase_if(r.headers, [](const auto& h) { return h.first == "Referer"; });
               })});
  m.push_back({"DH value e", {"BadSignature"}, {}, agent_leg(0, [](Stack&, HttpRequest& r) {
                 edit_kex_request(r, [](auto& k) { k.e = k.e + BigInt(1); });
               })});
  m.push_back({"DH value f", {"DecryptFailure", "WrongBodyType", "IdentifierMismatch", "OutOfRangePeer"}, {},
               server_leg(0, [](Stack&, std::string& reply) {
                 auto msg = wire::decode_message(base64_decode(reply));
                 auto resp = wire::decode_kex_response(msg.data);
                 resp.f = resp.f + BigInt(1);
                 msg.data = wire::encode(resp);
                 reply = base64_encode(wire::encode(msg));
               })});
  m.push_back({"expired session", {"UnknownSession"}, {}, agent_leg(1, [](Stack& s, HttpRequest&) {
                 s.advance_agent_clock(s.agent().sessions().config().ttl);
               })});
  m.push_back({"untrusted server key", {"UntrustedServer"},
               [](StackConfig& c) { c.server_key = c.fixtures / "keys/other_server_rsa.pem"; }, {}});
  m.push_back({"weak DH group", {"WeakParameters"},
               [](StackConfig& c) { c.server.group = crypto::DhGroup::rfc3526_1536(); }, {}});
  m.push_back({"missing user", {"MissingUserOrService"}, {},
               agent_leg(1, [](Stack&, HttpRequest& r) { edit_form(r, [](W& f) { f.user.reset(); }); })});
  m.push_back({"unauthorized user key", {"UnauthorizedKey"},
               [](StackConfig& c) { c.agent_keys = {c.fixtures / "keys/other_ed25519"}; }, {}});
  return m;
}

}  // namespace

std::vector<MutationOutcome> mutate_suite(const StackConfig& base) {
  std::vector<MutationOutcome> out;
  for (const auto& m : mutations()) {
    MutationOutcome o;
    o.name = m.name;
    o.expected = m.expected;
    try {
      StackConfig c = base;
      if (m.configure) m.configure(c);
      Stack stack(std::move(c));
      auto report = stack.run(m.hooks ? m.hooks(stack) : RelayHooks{});
      o.rejected = !report.ok;
      if (report.ok) {
        o.observed = "accepted";
      } else if (report.agent_status != 200 && report.agent_status != 0) {
        o.observed = stack.last_agent_error().value_or("agent status " + std::to_string(report.agent_status));
      } else {
        o.observed = verdict_class(report.verdict.empty() ? report.failure_reason.value_or("") : report.verdict);
      }
    } catch (const std::exception& e) {
      o.rejected = false;
      o.observed = std::string("harness error: ") + e.what();
    }
    out.push_back(std::move(o));
  }
  return out;
}

#ifdef WEBAGENT_TEST_HOOKS
Transcript seeded_transcript(std::uint64_t seed, StackConfig config) {
  config.seed = seed;
  Stack stack(std::move(config));
  Transcript t;
  auto report = stack.run({}, &t);
  if (!report.ok) throw std::runtime_error("transcript run failed: " + report.failure_reason.value_or("?"));
  return t;
}
#endif

}  // namespace webagent::harness
