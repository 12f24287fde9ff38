#include "webagent/refserver.hpp"

#include <fstream>
#include <sstream>

namespace webagent::refserver {

namespace {

/// Collapses errors from opening an envelope into the refserver's classes:
/// body-type confusion, identifier mismatch and scheme errors stay visible,
/// everything else is a failed decryption.
[[noreturn]] void rethrow_open_error(const Error& e) {
  switch (e.code()) {
    case Errc::UnexpectedBodyType:
      throw Error(Errc::WrongBodyType, e.what());
    case Errc::IdentifierMismatch:
    case Errc::UnsupportedScheme:
      throw;
    default:
      throw Error(Errc::DecryptFailure, e.what());
  }
}

wire::Plaintext open_body(ByteView encoded, const crypto::SessionSecrets& secrets, wire::BodyType expected) {
  try {
    auto mb = wire::decode_message_body(encoded);
    return crypto::body_decrypt(mb, secrets, {expected});
  } catch (const Error& e) {
    rethrow_open_error(e);
  }
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

std::pair<wire::Message, PendingKex> make_kex_request(const ServerIdentity& identity, std::string_view method,
                                                      std::string_view referer, Bytes d, const crypto::DhGroup& group,
                                                      RandomSource& rng) {
  // The server picks its own group; the agent's policy decides whether to accept it.
  auto keys = crypto::dh_generate(group.p, group.g, rng, crypto::DhPolicy::permissive());
  wire::KexDhRequest req{group.p, group.g, keys.public_value, d, identity.key.public_key().blob(), {}};
  crypto::sign_kex_request(req, method, referer, identity.key);
  wire::Message msg{wire::kVersion_1_1, wire::MessageType::KexDhRequest, wire::encode(req)};
  return {std::move(msg), PendingKex{std::move(keys), std::string(method), std::string(referer), std::move(d)}};
}

crypto::SessionSecrets server_secrets(const wire::KexDhResponse& response, const PendingKex& kex) {
  auto shared = crypto::dh_shared(response.f, kex.keys);
  return crypto::derive_secrets(kex.method, kex.referer, kex.keys.public_value, response.f, shared);
}

PendingAuth complete_kex(const wire::KexDhResponse& response, const PendingKex& kex, RandomSource& rng,
                         std::string user, std::string service) {
  auto secrets = server_secrets(response, kex);
  auto plain = open_body(response.encrypted_body, secrets, wire::BodyType::New);
  return PendingAuth{plain.identifier, secrets, rng.bytes(kSshSessionIdentifierSize), kex.referer,
                     std::move(user), std::move(service)};
}

wire::Message make_auth_request(const PendingAuth& pa, RandomSource& rng) {
  auto plain = crypto::make_plaintext(pa.identifier, wire::AuthRequestPayload{pa.ssh_session_identifier}, rng);
  auto body = crypto::body_encrypt(plain, pa.secrets, static_cast<std::uint8_t>(wire::Algorithm::Aes256Cbc), rng);
  return wire::Message{wire::kVersion_1_1, wire::MessageType::Private, wire::encode(body)};
}

wire::AuthResponsePayload open_auth_response(const wire::Message& message, const PendingAuth& pa) {
  if (message.type != wire::MessageType::Private) throw Error(Errc::WrongBodyType, "expected PRIVATE");
  auto plain = open_body(message.data, pa.secrets, wire::BodyType::AuthResponse);
  if (!constant_time_equal(plain.identifier, pa.identifier)) throw Error(Errc::IdentifierMismatch);
  return std::get<wire::AuthResponsePayload>(std::move(plain.payload));
}

Verdict verify_auth_response(const wire::AuthResponsePayload& response, const PendingAuth& pa,
                             std::string_view user, std::string_view service,
                             const std::vector<Bytes>& authorized, const ssh::PrivateKey& server_key) {
  Verdict v;
  auto fail = [&](Errc code, std::string reason) {
    v.ok = false;
    v.error = code;
    v.reason = std::move(reason);
    return v;
  };

  if (!response.status) return fail(Errc::AgentFailure, "agent reported failure");
  if (response.signatures.empty()) return fail(Errc::AgentFailure, "no signatures");

  for (const auto& opt : response.options.options) {
    try {
      v.options.emplace_back(to_string(opt.key), crypto::option_decrypt(opt.value, server_key, response.options.es));
    } catch (const Error& e) {
      return fail(Errc::DecryptFailure, "option value does not decrypt");
    }
  }

  bool saw_authorized = false;
  bool saw_unauthorized = false;
  for (const auto& item : response.signatures) {
    bool listed = false;
    for (const auto& k : authorized)
      if (constant_time_equal(k, item.publickey)) listed = true;

    std::string alg;
    try {
      alg = ssh::blob_algorithm(item.signature);
    } catch (const Error&) {
      continue;
    }
    ssh::SshUserauthBlob blob{pa.ssh_session_identifier, std::string(user), std::string(service), alg,
                              item.publickey};
    bool valid = false;
    try {
      valid = ssh::ssh_verify(ssh::build_ssh_userauth_blob(blob), item);
    } catch (const Error&) {
      valid = false;
    }
    if (listed) saw_authorized = true;
    if (valid && listed) {
      v.ok = true;
      v.authenticated_key = item.publickey;
      v.reason.clear();
      return v;
    }
    if (valid) saw_unauthorized = true;
  }
  if (saw_authorized) return fail(Errc::BadSignature, "no signature verifies");
  if (saw_unauthorized) return fail(Errc::UnauthorizedKey, "signing key is not authorized");
  return fail(Errc::BadSignature, "no signature verifies");
}

std::vector<Bytes> parse_authorized_keys(std::string_view text) {
  std::vector<Bytes> keys;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    auto line = trim(raw);
    if (line.empty() || line[0] == '#') continue;
    std::istringstream words(line);
    std::string first, second;
    words >> first >> second;
    const std::string& b64 = second.empty() ? first : second;
    try {
      keys.push_back(base64_decode(b64));
    } catch (const Error&) {
      throw Error(Errc::BadBase64Key, line.substr(0, 24));
    }
  }
  return keys;
}

std::vector<Bytes> load_authorized_keys(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_authorized_keys(ss.str());
}

// ---------------------------------------------------------------------------
// RefServerApp

RefServerApp::RefServerApp(ServerIdentity identity, std::vector<Bytes> authorized, Options options,
                           RandomSource& rng, EventLog log)
    : identity_(std::move(identity)),
      authorized_(std::move(authorized)),
      options_(std::move(options)),
      rng_(rng),
      log_(std::move(log)) {}

namespace {

HttpResponse text(int status, std::string body, std::string_view type = "text/plain") {
  HttpResponse r;
  r.status = status;
  r.content_type = std::string(type);
  r.body = std::move(body);
  return r;
}

}  // namespace

HttpResponse RefServerApp::handle(const HttpRequest& request) {
  if (request.path == "/kex") {
    if (request.method != "GET") return text(405, "method not allowed");
    return start_kex();
  }
  if (request.path == "/auth-step") {
    if (request.method == "POST") return step_post(request);
    if (request.method == "GET") return step_get(request);
    return text(405, "method not allowed");
  }
  return text(404, "not found");
}

std::optional<RefServerApp::Flow> RefServerApp::take(const std::string& token) {
  std::lock_guard lock(mu_);
  auto it = flows_.find(token);
  if (it == flows_.end()) return std::nullopt;
  Flow f = std::move(it->second);
  flows_.erase(it);
  if (Clock::now() >= f.created + options_.pending_ttl) return std::nullopt;
  return f;
}

void RefServerApp::put(const std::string& token, Flow flow) {
  std::lock_guard lock(mu_);
  auto now = Clock::now();
  std::erase_if(flows_, [&](const auto& kv) { return now >= kv.second.created + options_.pending_ttl; });
  flows_.insert_or_assign(token, std::move(flow));
}

HttpResponse RefServerApp::start_kex() {
  auto token = to_hex(rng_.bytes(16));
  auto [msg, kex] = make_kex_request(identity_, options_.method, options_.referer, to_bytes(token), options_.group, rng_);
  put(token, Flow{std::move(kex), std::nullopt, Clock::now()});
  return text(200, "T=" + token + "&P=" + wire::form_escape(base64_encode(wire::encode(msg))),
              kFormContentType);
}

HttpResponse RefServerApp::step_get(const HttpRequest& request) {
  auto token = wire::form_field(wire::form_parse(request.query), "T");
  if (!token) return text(400, "missing T");
  auto flow = take(*token);
  if (!flow || !flow->auth) return text(404, "unknown token");
  auto msg = make_auth_request(*flow->auth, rng_);
  std::string user = flow->auth->expected_user;
  std::string service = flow->auth->expected_service;
  put(*token, std::move(*flow));
  return text(200, wire::form_encode(msg, user, service), kFormContentType);
}

HttpResponse RefServerApp::step_post(const HttpRequest& request) {
  auto fields = wire::form_parse(request.body);
  auto token = wire::form_field(fields, "T");
  auto payload = wire::form_field(fields, "P");
  if (!token || !payload) return text(400, "missing T or P");
  auto flow = take(*token);
  if (!flow) return text(404, "unknown token");

  wire::Message msg;
  try {
    msg = wire::decode_message(base64_decode(*payload));
  } catch (const Error& e) {
    auto reason = std::string(to_string(e.code()));
    return text(400, (flow->auth ? "AUTH_FAIL " : "KEX_FAIL ") + reason);
  }

  if (!flow->auth) {
    try {
      if (msg.type != wire::MessageType::KexDhResponse) throw Error(Errc::WrongBodyType, "expected KEX_DH_RESPONSE");
      auto resp = wire::decode_kex_response(msg.data);
      auto pa = complete_kex(resp, *flow->kex, rng_, options_.user, options_.service);
      log_.emit("session_established", {{"token", *token}});
      if (on_session_established) on_session_established(pa);
      put(*token, Flow{std::nullopt, std::move(pa), Clock::now()});
      return text(200, "SESSION_OK");
    } catch (const Error& e) {
      log_.emit("kex_failed", {{"error", std::string(to_string(e.code()))}});
      return text(403, "KEX_FAIL " + std::string(to_string(e.code())));
    }
  }

  const auto& pa = *flow->auth;
  Verdict verdict;
  try {
    auto resp = open_auth_response(msg, pa);
    verdict = verify_auth_response(resp, pa, pa.expected_user, pa.expected_service, authorized_, identity_.key);
  } catch (const Error& e) {
    verdict.ok = false;
    verdict.error = e.code();
    verdict.reason = "response does not open";
  }
  if (on_verdict) on_verdict(verdict);
  if (verdict.ok) {
    log_.emit("auth_ok", {{"user", pa.expected_user}});
    return text(200, "AUTH_OK " + pa.expected_user);
  }
  std::string reason = verdict.error ? std::string(to_string(*verdict.error)) + ": " + verdict.reason : verdict.reason;
  log_.emit("auth_fail", {{"reason", reason}});
  return text(403, "AUTH_FAIL " + reason);
}

}  // namespace webagent::refserver
