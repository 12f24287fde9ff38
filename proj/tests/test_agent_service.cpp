#include <gtest/gtest.h>

#include <sys/stat.h>
#include <unistd.h>

#include "support.hpp"
#include "webagent/agent_service.hpp"
#include "webagent/error.hpp"
#include "webagent/refserver.hpp"

using namespace webagent;
using namespace std::chrono_literals;
using webagent::test::fixtures;

namespace {

const std::string kPage = "https://webssh.example.com/ssh/";
const std::string kOrigin = "https://webssh.example.com";

ssh::PrivateKey key(const char* name) { return ssh::PrivateKey::load_file(fixtures() / "keys" / name); }

HttpRequest post(std::string body, std::optional<std::string> referer = kPage) {
  HttpRequest r;
  r.body = std::move(body);
  r.headers.emplace_back("Content-Type", std::string(kFormContentType));
  if (referer) r.headers.emplace_back("Referer", *referer);
  return r;
}

wire::Message reply_of(const HttpResponse& r) { return wire::decode_message(base64_decode(r.body)); }

struct AgentFixture : ::testing::Test {
  refserver::ServerIdentity server{key("server_rsa.pem"), {kPage}};
  std::shared_ptr<TrustStore> trust = std::make_shared<TrustStore>(
      std::vector<TrustedServerEntry>{{server.key.public_key().blob(), {kPage, "https://webssh.example.com:444/ssh/"}}});
  CapturedLog log;
  AgentService::Options options;
  std::unique_ptr<AgentService> agent;
  TimePoint now = Clock::now();

  void SetUp() override { build(); }

  void build() {
    agent = std::make_unique<AgentService>(trust, KeyRing({key("user_ed25519"), key("user_rsa")}), options,
                                           system_random(), EventLog(log.sink()));
  }

  std::pair<wire::Message, refserver::PendingKex> kex_request(const std::string& referer = kPage,
                                                              const refserver::ServerIdentity* who = nullptr) {
    return refserver::make_kex_request(who ? *who : server, "POST", referer, to_bytes("token"),
                                       crypto::DhGroup::rfc3526_2048(), system_random());
  }

  refserver::PendingAuth establish() {
    auto [msg, kex] = kex_request();
    auto resp = agent->handle(post(wire::form_encode(msg)), now);
    EXPECT_EQ(resp.status, 200) << resp.body;
    auto reply = reply_of(resp);
    EXPECT_EQ(reply.type, wire::MessageType::KexDhResponse);
    return refserver::complete_kex(wire::decode_kex_response(reply.data), kex, system_random(), "alice",
                                   "ssh-connection");
  }

  HttpResponse auth(const refserver::PendingAuth& pa, std::optional<std::string> user = "alice",
                    const std::string& referer = kPage) {
    auto msg = refserver::make_auth_request(pa, system_random());
    return agent->handle(post(wire::form_encode(msg, user, std::string("ssh-connection")), referer), now);
  }

  std::string last_rejection() const {
    auto events = log.events();
    for (auto it = events.rbegin(); it != events.rend(); ++it)
      if ((*it)["event"] == "request_rejected") return (*it)["error"];
    return {};
  }
};

}  // namespace

TEST_F(AgentFixture, MethodAndPathGates) {
  HttpRequest get = post("");
  get.method = "GET";
  EXPECT_EQ(agent->handle(get, now).status, 405);
  HttpRequest other = post("");
  other.path = "/kex";
  EXPECT_EQ(agent->handle(other, now).status, 404);
  HttpRequest pre = post("");
  pre.method = "OPTIONS";
  pre.headers.emplace_back("Origin", kOrigin);
  auto r = agent->handle(pre, now);
  EXPECT_EQ(r.status, 204);
  EXPECT_EQ(r.header("access-control-allow-origin"), kOrigin);
  EXPECT_EQ(r.header("Access-Control-Allow-Methods"), "POST");
}

TEST_F(AgentFixture, KexSucceeds) {
  auto pa = establish();
  EXPECT_EQ(pa.identifier.size(), kSessionIdentifierSize);
  EXPECT_EQ(agent->sessions().size(), 1u);
  auto s = agent->sessions().lookup_valid(pa.identifier, now);
  ASSERT_TRUE(s);
  EXPECT_EQ(s->secrets, pa.secrets);
  EXPECT_EQ(s->referer, kPage);
  EXPECT_EQ(s->session_data_d, to_bytes("token"));
}

TEST_F(AgentFixture, ResponseHeadersAndCors) {
  auto [msg, kex] = kex_request();
  auto req = post(wire::form_encode(msg));
  auto r = agent->handle(req, now);
  EXPECT_EQ(r.content_type, "text/plain");
  EXPECT_EQ(r.header("Vary"), "Origin");
  EXPECT_EQ(r.header("Access-Control-Allow-Origin"), kOrigin);  // derived from Referer

  req.headers.emplace_back("Origin", "https://evil.example");
  r = agent->handle(req, now);
  EXPECT_FALSE(r.header("Access-Control-Allow-Origin"));

  auto trusted444 = post("", "https://webssh.example.com:444/ssh/");
  trusted444.method = "OPTIONS";
  EXPECT_EQ(agent->handle(trusted444, now).header("Access-Control-Allow-Origin"), "https://webssh.example.com:444");
}

TEST_F(AgentFixture, KexRejections) {
  auto [msg, kex] = kex_request();
  EXPECT_EQ(agent->handle(post(wire::form_encode(msg), std::nullopt), now).status, 403);
  EXPECT_EQ(last_rejection(), "MissingReferer");

  auto [msg2, kex2] = kex_request("https://webssh.example.com/admin/");
  EXPECT_EQ(agent->handle(post(wire::form_encode(msg2), "https://webssh.example.com/admin/"), now).status, 403);
  EXPECT_EQ(last_rejection(), "UntrustedServer");

  // Signed for one page, presented from another trusted page.
  EXPECT_EQ(agent->handle(post(wire::form_encode(msg), "https://webssh.example.com:444/ssh/"), now).status, 403);
  EXPECT_EQ(last_rejection(), "BadSignature");

  refserver::ServerIdentity other{key("other_server_rsa.pem"), {kPage}};
  auto [msg3, kex3] = kex_request(kPage, &other);
  EXPECT_EQ(agent->handle(post(wire::form_encode(msg3)), now).status, 403);
  EXPECT_EQ(last_rejection(), "UntrustedServer");

  auto [weak, kw] = refserver::make_kex_request(server, "POST", kPage, {}, crypto::DhGroup::rfc3526_1536(),
                                                system_random());
  EXPECT_EQ(agent->handle(post(wire::form_encode(weak)), now).status, 403);
  EXPECT_EQ(last_rejection(), "WeakParameters");
  EXPECT_EQ(agent->sessions().size(), 0u);
}

TEST_F(AgentFixture, DecodeRejections) {
  EXPECT_EQ(agent->handle(post("U=alice"), now).status, 400);
  EXPECT_EQ(last_rejection(), "MissingP");
  auto [msg, kex] = kex_request();
  msg.version = 0x12;
  EXPECT_EQ(agent->handle(post(wire::form_encode(msg)), now).status, 400);
  EXPECT_EQ(last_rejection(), "UnsupportedVersion");
  EXPECT_EQ(agent->handle(post("P=" + std::string(wire::kMaxEncodedMessage + 4, 'A')), now).status, 413);
  wire::Message resp{wire::kVersion_1_1, wire::MessageType::KexDhResponse, {}};
  EXPECT_EQ(agent->handle(post(wire::form_encode(resp)), now).status, 400);
  EXPECT_EQ(last_rejection(), "UnknownType");
  wire::Message junk{wire::kVersion_1_1, wire::MessageType::KexDhRequest, {1, 2, 3}};
  EXPECT_EQ(agent->handle(post(wire::form_encode(junk)), now).status, 400);
  EXPECT_EQ(last_rejection(), "Truncated");
}

TEST_F(AgentFixture, AuthSignsWithEveryKey) {
  auto pa = establish();
  auto r = auth(pa);
  ASSERT_EQ(r.status, 200) << r.body;
  auto payload = refserver::open_auth_response(reply_of(r), pa);
  EXPECT_TRUE(payload.status);
  ASSERT_EQ(payload.signatures.size(), 2u);
  EXPECT_EQ(ssh::blob_algorithm(payload.signatures[0].signature), "ssh-ed25519");
  EXPECT_EQ(ssh::blob_algorithm(payload.signatures[1].signature), "rsa-sha2-256");
  EXPECT_TRUE(payload.options.options.empty());

  std::vector<Bytes> authorized{key("user_rsa").public_key().blob()};
  auto v = refserver::verify_auth_response(payload, pa, "alice", "ssh-connection", authorized, server.key);
  EXPECT_TRUE(v.ok) << v.reason;
  EXPECT_EQ(v.authenticated_key, authorized[0]);

  // The session serves further requests until it expires.
  EXPECT_EQ(auth(pa).status, 200);
}

TEST_F(AgentFixture, AuthRejections) {
  auto pa = establish();
  EXPECT_EQ(auth(pa, std::nullopt).status, 400);
  EXPECT_EQ(last_rejection(), "MissingUserOrService");
  EXPECT_EQ(auth(pa, "alice", "https://webssh.example.com:444/ssh/").status, 403);
  EXPECT_EQ(last_rejection(), "RefererMismatch");

  auto unknown = pa;
  unknown.identifier = Bytes(16, 0x42);
  EXPECT_EQ(auth(unknown).status, 410);
  EXPECT_EQ(last_rejection(), "UnknownSession");

  auto wrong_key = pa;
  wrong_key.secrets.secret_key[0] ^= 1;
  EXPECT_EQ(auth(wrong_key).status, 403);

  now += 120s;
  EXPECT_EQ(auth(pa).status, 410);
  EXPECT_EQ(agent->sessions().size(), 0u);
}

TEST_F(AgentFixture, ResponseOptionsAreEncryptedToServer) {
  options.response_options = {{"mode", to_bytes("interactive")}};
  build();
  auto pa = establish();
  auto r = auth(pa);
  ASSERT_EQ(r.status, 200);
  auto payload = refserver::open_auth_response(reply_of(r), pa);
  ASSERT_EQ(payload.options.options.size(), 1u);
  EXPECT_NE(payload.options.options[0].value, to_bytes("interactive"));
  auto v = refserver::verify_auth_response(payload, pa, "alice", "ssh-connection",
                                           {key("user_ed25519").public_key().blob()}, server.key);
  ASSERT_TRUE(v.ok) << v.reason;
  ASSERT_EQ(v.options.size(), 1u);
  EXPECT_EQ(v.options[0].first, "mode");
  EXPECT_EQ(v.options[0].second, to_bytes("interactive"));
}

TEST_F(AgentFixture, UnencryptableOptionsAreOmitted) {
  options.response_options = {{"mode", to_bytes("x")}, {"big", Bytes(300, 7)}};
  build();
  auto pa = establish();
  auto r = auth(pa);
  ASSERT_EQ(r.status, 200);
  auto payload = refserver::open_auth_response(reply_of(r), pa);
  EXPECT_TRUE(payload.status);
  EXPECT_TRUE(payload.options.options.empty());
  bool logged = false;
  for (const auto& e : log.events()) logged |= e["event"] == "options_omitted" && e["error"] == "ValueTooLong";
  EXPECT_TRUE(logged);
}

TEST_F(AgentFixture, CapacityAndSweep) {
  options.sessions = {10s, 2};
  build();
  establish();
  establish();
  auto [msg, kex] = kex_request();
  EXPECT_EQ(agent->handle(post(wire::form_encode(msg)), now).status, 503);
  EXPECT_EQ(agent->sweep(now + 10s), 2u);
  EXPECT_EQ(agent->handle(post(wire::form_encode(msg)), now + 10s).status, 200);
}

TEST(AgentStatus, Mapping) {
  EXPECT_EQ(http_status_for(Errc::Oversize), 413);
  EXPECT_EQ(http_status_for(Errc::UntrustedServer), 403);
  EXPECT_EQ(http_status_for(Errc::BadSignature), 403);
  EXPECT_EQ(http_status_for(Errc::IdentifierMismatch), 403);
  EXPECT_EQ(http_status_for(Errc::UnknownSession), 410);
  EXPECT_EQ(http_status_for(Errc::CapacityExceeded), 503);
  EXPECT_EQ(http_status_for(Errc::BadMagic), 400);
  EXPECT_EQ(http_status_for(Errc::MissingP), 400);
}

TEST(AgentConfigCheck, Validate) {
  AgentConfig c;
  EXPECT_EQ(c.bind_address, "127.82.11.29");
  EXPECT_EQ(c.port, 8211);
  EXPECT_NO_THROW(validate(c));
  c.bind_address = "10.0.0.1";
  EXPECT_THROW(validate(c), std::invalid_argument);
  c.bind_address = "localhost";
  EXPECT_THROW(validate(c), std::invalid_argument);
  c.bind_address = "127.0.0.1";
  c.port = 0;
  EXPECT_THROW(validate(c), std::invalid_argument);
  EXPECT_NO_THROW(validate(c, true));
  c.port = 8211;
  c.tls_cert = "cert.pem";
  EXPECT_THROW(validate(c), std::invalid_argument);
  c.tls_key = "key.pem";
  EXPECT_NO_THROW(validate(c));
}

TEST(AgentKeys, LoadKeyring) {
  auto dir = fixtures() / "keys";
  std::vector<std::string> warnings;
  auto warn = [&](const std::string& w) { warnings.push_back(w); };
  auto ring = load_keyring({dir / "user_ed25519", dir / "user_rsa"}, {}, warn);
  ASSERT_EQ(ring.size(), 2u);
  EXPECT_EQ(ring.keys()[0].type(), ssh::KeyType::Ed25519);

  auto all = load_keyring({dir}, {}, warn);
  EXPECT_GE(all.size(), 6u);  // .pub files are skipped silently

  try {
    load_keyring({dir / "user_rsa.pub", fixtures() / "missing"}, {}, warn);
    FAIL() << "expected NoKeysLoaded";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::NoKeysLoaded);
  }
  EXPECT_FALSE(warnings.empty());
}

TEST(AgentKeys, StrictPermissions) {
  auto tmp = std::filesystem::temp_directory_path() / ("webagent-keys-" + std::to_string(::getpid()));
  std::filesystem::create_directories(tmp);
  auto path = tmp / "id";
  std::filesystem::copy_file(fixtures() / "keys" / "user_ed25519", path,
                             std::filesystem::copy_options::overwrite_existing);
  ::chmod(path.c_str(), 0644);
  EXPECT_EQ(load_keyring({path}).size(), 1u);
  EXPECT_THROW(load_keyring({path}, {.strict_permissions = true}), Error);
  ::chmod(path.c_str(), 0600);
  EXPECT_EQ(load_keyring({path}, {.strict_permissions = true}).size(), 1u);
  std::filesystem::remove_all(tmp);
}
