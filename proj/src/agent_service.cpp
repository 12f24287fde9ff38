#include "webagent/agent_service.hpp"

#include <arpa/inet.h>
#include <sys/stat.h>

#include <algorithm>
#include <stdexcept>

#include "webagent/error.hpp"

namespace webagent {

namespace fs = std::filesystem;

void validate(const AgentConfig& config, bool allow_ephemeral_port) {
  in_addr addr{};
  if (inet_pton(AF_INET, config.bind_address.c_str(), &addr) != 1)
    throw std::invalid_argument("bind address is not an IPv4 address: " + config.bind_address);
  if ((ntohl(addr.s_addr) >> 24) != 127)
    throw std::invalid_argument("bind address must be in 127.0.0.0/8: " + config.bind_address);
  if (config.port == 0 && !allow_ephemeral_port) throw std::invalid_argument("port must be non-zero");
  if (config.tls_cert.has_value() != config.tls_key.has_value())
    throw std::invalid_argument("--tls-cert and --tls-key go together");
}

// ---------------------------------------------------------------------------
// Key ring

namespace {

void load_one(const fs::path& file, const KeyLoadOptions& options,
              const std::function<void(const std::string&)>& warn, std::vector<ssh::PrivateKey>& out) {
  auto say = [&](const std::string& m) {
    if (warn) warn(file.string() + ": " + m);
  };
  if (options.strict_permissions) {
    struct stat st {};
    if (::stat(file.c_str(), &st) != 0) {
      say("cannot stat");
      return;
    }
    if (st.st_mode & (S_IRWXG | S_IRWXO)) {
      say("refusing key accessible by group or other");
      return;
    }
  }
  try {
    out.push_back(ssh::PrivateKey::load_file(file));
  } catch (const Error& e) {
    say(e.what());
  }
}

}  // namespace

KeyRing load_keyring(const std::vector<fs::path>& paths, const KeyLoadOptions& options,
                     const std::function<void(const std::string&)>& warn) {
  std::vector<ssh::PrivateKey> keys;
  for (const auto& path : paths) {
    std::error_code ec;
    if (fs::is_directory(path, ec)) {
      std::vector<fs::path> files;
      for (const auto& entry : fs::directory_iterator(path, ec))
        if (entry.is_regular_file() && entry.path().extension() != ".pub") files.push_back(entry.path());
      std::sort(files.begin(), files.end());
      for (const auto& f : files) load_one(f, options, warn, keys);
    } else {
      load_one(path, options, warn, keys);
    }
  }
  if (keys.empty()) throw Error(Errc::NoKeysLoaded);
  return KeyRing(std::move(keys));
}

// ---------------------------------------------------------------------------
// Service

int http_status_for(Errc code) {
  switch (code) {
    case Errc::Oversize:
      return 413;
    case Errc::UntrustedServer:
    case Errc::BadSignature:
    case Errc::WeakParameters:
    case Errc::MalformedKeyBlob:
    case Errc::MalformedSignatureBlob:
    case Errc::UnsupportedKeyType:
    case Errc::OutOfRangePeer:
    case Errc::DegenerateValue:
    case Errc::MissingReferer:
    case Errc::RefererMismatch:
    case Errc::IdentifierMismatch:
    case Errc::UnexpectedBodyType:
    case Errc::UnknownBodyType:
    case Errc::UnsupportedAlgorithm:
    case Errc::BlockAlignment:
    case Errc::UnsupportedScheme:
    case Errc::EmptyField:
    case Errc::DecryptFailure:
    case Errc::WrongBodyType:
      return 403;
    case Errc::UnknownSession:
      return 410;
    case Errc::CapacityExceeded:
      return 503;
    case Errc::CryptoFailure:
      return 500;
    default:
      return 400;
  }
}

namespace {

std::string_view reason_text(int status) {
  switch (status) {
    case 400: return "bad request";
    case 403: return "forbidden";
    case 404: return "not found";
    case 405: return "method not allowed";
    case 410: return "session expired";
    case 413: return "payload too large";
    case 503: return "busy";
    default: return "error";
  }
}

}  // namespace

AgentService::AgentService(std::shared_ptr<const TrustStore> trust, KeyRing keys, Options options,
                           RandomSource& rng, EventLog log)
    : trust_(std::move(trust)),
      keys_(std::move(keys)),
      options_(std::move(options)),
      rng_(rng),
      log_(std::move(log)),
      sessions_(options_.sessions, rng) {}

std::optional<std::string> AgentService::cors_origin(const HttpRequest& request) const {
  auto origin = request.header("Origin");
  if (!origin) {
    auto referer = request.header("Referer");
    if (!referer) return std::nullopt;
    origin = url_origin(*referer);
  }
  if (!origin || origin->empty()) return std::nullopt;
  auto snap = trust_->snapshot();
  for (const auto& entry : *snap)
    for (const auto& prefix : entry.referer_prefixes)
      if (url_origin(prefix) == *origin) return origin;
  return std::nullopt;
}

HttpResponse AgentService::respond(int status, std::string body, const std::optional<std::string>& origin) const {
  HttpResponse r;
  r.status = status;
  r.body = std::move(body);
  r.headers.emplace_back("Vary", "Origin");
  if (origin) r.headers.emplace_back("Access-Control-Allow-Origin", *origin);
  return r;
}

HttpResponse AgentService::handle(const HttpRequest& request, TimePoint now) {
  auto origin = cors_origin(request);

  if (request.method == "OPTIONS") {
    auto r = respond(204, {}, origin);
    if (origin) {
      r.headers.emplace_back("Access-Control-Allow-Methods", "POST");
      r.headers.emplace_back("Access-Control-Allow-Headers", "Content-Type");
    }
    return r;
  }
  if (request.method != "POST") return respond(405, std::string(reason_text(405)), origin);
  if (request.path != "/") return respond(404, std::string(reason_text(404)), origin);

  auto reject = [&](Errc code, std::string_view stage) {
    int status = http_status_for(code);
    log_.emit("request_rejected", {{"error", std::string(to_string(code))},
                                   {"stage", std::string(stage)},
                                   {"status", status}});
    return respond(status, std::string(reason_text(status)), origin);
  };

  wire::FormRequest form;
  try {
    form = wire::form_decode(request.body);
  } catch (const Error& e) {
    return reject(e.code(), "decode");
  }

  auto referer = request.header("Referer");
  if (!referer || referer->empty()) return reject(Errc::MissingReferer, "referer");

  try {
    wire::Message reply;
    switch (form.message.type) {
      case wire::MessageType::KexDhRequest: {
        auto kex = wire::decode_kex_request(form.message.data);
        reply = handle_kex(kex, request.method, *referer, now);
        break;
      }
      case wire::MessageType::Private: {
        auto body = wire::decode_message_body(form.message.data);
        reply = handle_private(body, form, *referer, now);
        break;
      }
      default:
        return reject(Errc::UnknownType, "dispatch");
    }
    reply.version = form.message.version;
    return respond(200, base64_encode(wire::encode(reply)), origin);
  } catch (const Error& e) {
    return reject(e.code(), form.message.type == wire::MessageType::KexDhRequest ? "kex" : "private");
  }
}

wire::Message AgentService::handle_kex(const wire::KexDhRequest& request, std::string_view method,
                                       std::string_view referer, TimePoint now) {
  auto server = trust_->lookup(referer, request.k);
  if (!server) throw Error(Errc::UntrustedServer);
  if (!crypto::verify_kex_signature(request, method, referer)) throw Error(Errc::BadSignature);

  auto keys = crypto::dh_generate(request.p, request.g, rng_, options_.dh_policy);
  auto shared = crypto::dh_shared(request.e, keys);
  auto secrets = crypto::derive_secrets(method, referer, request.e, keys.public_value, shared);

  auto state = sessions_.create_session(*server, std::string(referer), secrets, request.d, now);
  log_.emit("session_created", {{"referer", std::string(referer)}, {"sessions", sessions_.size()}});
  if (on_session_created) on_session_created(state);

  auto plain = crypto::make_plaintext(state.identifier, wire::NewPayload{}, rng_);
  auto body = crypto::body_encrypt(plain, secrets, static_cast<std::uint8_t>(wire::Algorithm::Aes256Cbc), rng_);
  wire::KexDhResponse resp{keys.public_value, wire::encode(body)};
  return wire::Message{wire::kVersion_1_1, wire::MessageType::KexDhResponse, wire::encode(resp)};
}

wire::Message AgentService::handle_private(const wire::MessageBody& body, const wire::FormRequest& form,
                                           std::string_view referer, TimePoint now) {
  if (!form.user || !form.service || form.user->empty() || form.service->empty())
    throw Error(Errc::MissingUserOrService);
  auto session = sessions_.lookup_valid(body.identifier, now);
  if (!session) throw Error(Errc::UnknownSession);
  if (referer != session->referer) throw Error(Errc::RefererMismatch);

  auto request = crypto::body_decrypt(body, session->secrets, {wire::BodyType::AuthRequest});
  const auto& ssh_id = std::get<wire::AuthRequestPayload>(request.payload).ssh_session_identifier;

  wire::AuthResponsePayload result;
  result.status = true;
  try {
    for (const auto& key : keys_.keys()) {
      auto alg = key.default_signature_algorithm();
      auto blob = ssh::build_ssh_userauth_blob(
          {ssh_id, *form.user, *form.service, std::string(alg), key.public_key().blob()});
      result.signatures.push_back(ssh::ssh_sign(blob, key, alg));
    }
  } catch (const Error& e) {
    log_.emit("signing_failed", {{"error", e.what()}});
    result.status = false;
    result.signatures.clear();
  }

  if (result.status && !options_.response_options.empty()) {
    try {
      auto server_key = ssh::PublicKey::from_blob(session->server.public_key);
      for (const auto& [name, value] : options_.response_options)
        result.options.options.push_back(
            {to_bytes(name), crypto::option_encrypt(value, server_key, result.options.es)});
    } catch (const Error& e) {
      log_.emit("options_omitted", {{"error", std::string(to_string(e.code()))}});
      result.options.options.clear();
    }
  }

  log_.emit("auth", {{"status", result.status},
                     {"signatures", result.signatures.size()},
                     {"user", *form.user},
                     {"service", *form.service}});

  auto plain = crypto::make_plaintext(session->identifier, std::move(result), rng_);
  auto reply = crypto::body_encrypt(plain, session->secrets, body.algorithm, rng_);
  return wire::Message{wire::kVersion_1_1, wire::MessageType::Private, wire::encode(reply)};
}

std::size_t AgentService::sweep(TimePoint now) {
  auto n = sessions_.sweep(now);
  if (n > 0) log_.emit("session_expired", {{"count", n}, {"sessions", sessions_.size()}});
  return n;
}

}  // namespace webagent
