#include "webagent/wire.hpp"

#include <algorithm>

#include "webagent/error.hpp"
#include "webagent/random.hpp"

namespace webagent::wire {

// ---------------------------------------------------------------------------
// Writer

Writer& Writer::byte(std::uint8_t v) {
  buf_.push_back(v);
  return *this;
}

Writer& Writer::boolean(bool v) { return byte(v ? 1 : 0); }

Writer& Writer::uint32(std::uint32_t v) {
  buf_.push_back(static_cast<std::uint8_t>(v >> 24));
  buf_.push_back(static_cast<std::uint8_t>(v >> 16));
  buf_.push_back(static_cast<std::uint8_t>(v >> 8));
  buf_.push_back(static_cast<std::uint8_t>(v));
  return *this;
}

Writer& Writer::string(ByteView v) {
  uint32(static_cast<std::uint32_t>(v.size()));
  return raw(v);
}

Writer& Writer::string(std::string_view v) {
  return string(ByteView(reinterpret_cast<const std::uint8_t*>(v.data()), v.size()));
}

Writer& Writer::mpint(const BigInt& v) { return raw(mpint_encode(v)); }

Writer& Writer::raw(ByteView v) {
  buf_.insert(buf_.end(), v.begin(), v.end());
  return *this;
}

Bytes mpint_encode(const BigInt& value) {
  Bytes magnitude = value.to_bytes();
  bool pad = !magnitude.empty() && (magnitude.front() & 0x80) != 0;
  Writer w;
  w.uint32(static_cast<std::uint32_t>(magnitude.size() + (pad ? 1 : 0)));
  if (pad) w.byte(0);
  w.raw(magnitude);
  return std::move(w).take();
}

// ---------------------------------------------------------------------------
// Reader

ByteView Reader::take(std::size_t n) {
  if (n > remaining()) throw Error(Errc::Truncated);
  ByteView out = in_.subspan(pos_, n);
  pos_ += n;
  return out;
}

std::uint8_t Reader::byte() { return take(1)[0]; }

bool Reader::boolean() { return byte() != 0; }

std::uint32_t Reader::uint32() {
  auto b = take(4);
  return static_cast<std::uint32_t>(b[0]) << 24 | static_cast<std::uint32_t>(b[1]) << 16 |
         static_cast<std::uint32_t>(b[2]) << 8 | static_cast<std::uint32_t>(b[3]);
}

Bytes Reader::string() {
  std::uint32_t len = uint32();
  auto b = take(len);
  return Bytes(b.begin(), b.end());
}

std::string Reader::text() {
  std::uint32_t len = uint32();
  auto b = take(len);
  return std::string(b.begin(), b.end());
}

BigInt Reader::mpint() {
  std::uint32_t len = uint32();
  auto b = take(len);
  if (b.empty()) return BigInt{};
  if (b[0] & 0x80) throw Error(Errc::MalformedMpint, "negative value");
  if (b[0] == 0 && (b.size() == 1 || (b[1] & 0x80) == 0))
    throw Error(Errc::MalformedMpint, "redundant leading zero");
  return BigInt::from_bytes(b);
}

Bytes Reader::raw(std::size_t n) {
  auto b = take(n);
  return Bytes(b.begin(), b.end());
}

void Reader::expect_end() const {
  if (!at_end()) throw Error(Errc::TrailingBytes);
}

Bytes Reader::rest() { return raw(remaining()); }

// ---------------------------------------------------------------------------
// Message

namespace {

bool known_message_type(std::uint8_t t) {
  return t == static_cast<std::uint8_t>(MessageType::KexDhRequest) ||
         t == static_cast<std::uint8_t>(MessageType::KexDhResponse) ||
         t == static_cast<std::uint8_t>(MessageType::Private);
}

bool known_body_type(std::uint8_t t) {
  return t == static_cast<std::uint8_t>(BodyType::New) ||
         t == static_cast<std::uint8_t>(BodyType::AuthRequest) ||
         t == static_cast<std::uint8_t>(BodyType::AuthResponse);
}

}  // namespace

Bytes encode(const Message& m) {
  Writer w;
  w.string(kMagic).byte(m.version).byte(static_cast<std::uint8_t>(m.type)).string(m.data);
  return std::move(w).take();
}

Message decode_message(ByteView b) {
  Reader r(b);
  if (r.text() != kMagic) throw Error(Errc::BadMagic);
  Message m;
  m.version = r.byte();
  if (m.version != kVersion_1_1) throw Error(Errc::UnsupportedVersion);
  std::uint8_t type = r.byte();
  if (!known_message_type(type)) throw Error(Errc::UnknownType);
  m.type = static_cast<MessageType>(type);
  m.data = r.string();
  r.expect_end();
  return m;
}

// ---------------------------------------------------------------------------
// KEX

Bytes encode(const KexDhRequest& req) {
  Writer w;
  w.mpint(req.p).mpint(req.g).mpint(req.e).string(req.d).string(req.k).string(req.sign);
  return std::move(w).take();
}

KexDhRequest decode_kex_request(ByteView b) {
  Reader r(b);
  KexDhRequest req;
  req.p = r.mpint();
  req.g = r.mpint();
  req.e = r.mpint();
  req.d = r.string();
  req.k = r.string();
  req.sign = r.string();
  r.expect_end();
  return req;
}

Bytes encode(const KexDhResponse& resp) {
  Writer w;
  w.mpint(resp.f).string(resp.encrypted_body);
  return std::move(w).take();
}

KexDhResponse decode_kex_response(ByteView b) {
  Reader r(b);
  KexDhResponse resp;
  resp.f = r.mpint();
  resp.encrypted_body = r.string();
  r.expect_end();
  return resp;
}

// ---------------------------------------------------------------------------
// MessageBody

Bytes encode(const MessageBody& mb) {
  Writer w;
  w.byte(mb.algorithm).string(mb.identifier).string(mb.ciphertext);
  return std::move(w).take();
}

MessageBody decode_message_body(ByteView b) {
  Reader r(b);
  MessageBody mb;
  mb.algorithm = r.byte();
  if (mb.algorithm != static_cast<std::uint8_t>(Algorithm::Aes256Cbc))
    throw Error(Errc::UnsupportedAlgorithm);
  mb.identifier = r.string();
  mb.ciphertext = r.string();
  r.expect_end();
  if (mb.ciphertext.empty() || mb.ciphertext.size() % kAesBlockSize != 0)
    throw Error(Errc::BlockAlignment);
  return mb;
}

// ---------------------------------------------------------------------------
// Plaintext

BodyType Plaintext::body_type() const {
  struct Visitor {
    BodyType operator()(const NewPayload&) const { return BodyType::New; }
    BodyType operator()(const AuthRequestPayload&) const { return BodyType::AuthRequest; }
    BodyType operator()(const AuthResponsePayload&) const { return BodyType::AuthResponse; }
  };
  return std::visit(Visitor{}, payload);
}

namespace {

void write_payload(Writer&, const NewPayload&) {}

void write_payload(Writer& w, const AuthRequestPayload& p) { w.string(p.ssh_session_identifier); }

void write_payload(Writer& w, const AuthResponsePayload& p) {
  w.boolean(p.status);
  w.uint32(static_cast<std::uint32_t>(p.signatures.size()));
  for (const auto& item : p.signatures) {
    Writer inner;
    inner.string(item.publickey).string(item.signature).string(item.comment);
    w.string(inner.bytes());
  }
  w.uint32(static_cast<std::uint32_t>(p.options.options.size()));
  w.byte(p.options.es);
  for (const auto& opt : p.options.options) {
    Writer inner;
    inner.string(opt.key).string(opt.value);
    w.string(inner.bytes());
  }
}

// Each list item is at least a 4-byte length prefix; reject counts that cannot
// fit before reserving anything.
void check_count(const Reader& r, std::uint32_t n) {
  if (static_cast<std::uint64_t>(n) * 4 > r.remaining()) throw Error(Errc::Truncated);
}

AuthResponsePayload read_auth_response(Reader& r) {
  AuthResponsePayload p;
  p.status = r.boolean();
  std::uint32_t n = r.uint32();
  check_count(r, n);
  p.signatures.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    Bytes item = r.string();
    Reader ir(item);
    SignatureItem s;
    s.publickey = ir.string();
    s.signature = ir.string();
    s.comment = ir.string();
    ir.expect_end();
    p.signatures.push_back(std::move(s));
  }
  std::uint32_t m = r.uint32();
  p.options.es = r.byte();
  if (p.options.es != static_cast<std::uint8_t>(EncryptionScheme::Pkcs1RsaesOaep))
    throw Error(Errc::UnsupportedScheme);
  check_count(r, m);
  p.options.options.reserve(m);
  for (std::uint32_t i = 0; i < m; ++i) {
    Bytes item = r.string();
    Reader ir(item);
    OptionEntry o;
    o.key = ir.string();
    o.value = ir.string();
    ir.expect_end();
    p.options.options.push_back(std::move(o));
  }
  return p;
}

}  // namespace

Bytes encode_payload(const Payload& payload) {
  Writer w;
  std::visit([&w](const auto& p) { write_payload(w, p); }, payload);
  return std::move(w).take();
}

Bytes plaintext_encode(const Plaintext& p, std::size_t block_size, RandomSource& rng) {
  Writer w;
  w.raw(p.random);
  w.byte(static_cast<std::uint8_t>(p.body_type()));
  w.string(p.identifier);
  std::visit([&w](const auto& payload) { write_payload(w, payload); }, p.payload);
  Bytes out = std::move(w).take();
  if (block_size > 1) {
    std::size_t pad = (block_size - out.size() % block_size) % block_size;
    Bytes padding = rng.bytes(pad);
    out.insert(out.end(), padding.begin(), padding.end());
  }
  return out;
}

Plaintext plaintext_decode(ByteView b, std::initializer_list<BodyType> expected_types) {
  Reader r(b);
  Plaintext p;
  Bytes random = r.raw(4);
  std::copy(random.begin(), random.end(), p.random.begin());
  std::uint8_t type = r.byte();
  if (!known_body_type(type)) throw Error(Errc::UnknownBodyType);
  auto body_type = static_cast<BodyType>(type);
  if (std::find(expected_types.begin(), expected_types.end(), body_type) == expected_types.end())
    throw Error(Errc::UnexpectedBodyType);
  p.identifier = r.string();
  switch (body_type) {
    case BodyType::New:
      p.payload = NewPayload{};
      break;
    case BodyType::AuthRequest: {
      AuthRequestPayload ar{r.string()};
      if (ar.ssh_session_identifier.empty()) throw Error(Errc::EmptyField, "ssh session identifier");
      p.payload = std::move(ar);
      break;
    }
    case BodyType::AuthResponse:
      p.payload = read_auth_response(r);
      break;
  }
  // residue is padding
  return p;
}

// ---------------------------------------------------------------------------
// Form transport

std::string form_escape(std::string_view s) {
  static constexpr char digits[] = "0123456789ABCDEF";
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) {
    if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '*' ||
        c == '-' || c == '.' || c == '_') {
      out.push_back(static_cast<char>(c));
    } else if (c == ' ') {
      out.push_back('+');
    } else {
      out.push_back('%');
      out.push_back(digits[c >> 4]);
      out.push_back(digits[c & 0x0f]);
    }
  }
  return out;
}

std::string form_unescape(std::string_view s) {
  auto hex = [](char c) -> int {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
  };
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (c == '+') {
      out.push_back(' ');
    } else if (c == '%' && i + 2 < s.size() && hex(s[i + 1]) >= 0 && hex(s[i + 2]) >= 0) {
      out.push_back(static_cast<char>(hex(s[i + 1]) << 4 | hex(s[i + 2])));
      i += 2;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

std::vector<std::pair<std::string, std::string>> form_parse(std::string_view body) {
  std::vector<std::pair<std::string, std::string>> fields;
  while (!body.empty()) {
    auto amp = body.find('&');
    std::string_view part = body.substr(0, amp);
    body = amp == std::string_view::npos ? std::string_view{} : body.substr(amp + 1);
    if (part.empty()) continue;
    auto eq = part.find('=');
    if (eq == std::string_view::npos) {
      fields.emplace_back(form_unescape(part), std::string{});
    } else {
      fields.emplace_back(form_unescape(part.substr(0, eq)), form_unescape(part.substr(eq + 1)));
    }
  }
  return fields;
}

std::optional<std::string> form_field(const std::vector<std::pair<std::string, std::string>>& fields,
                                      std::string_view key) {
  for (const auto& [k, v] : fields)
    if (k == key) return v;
  return std::nullopt;
}

std::string form_encode(const Message& m, const std::optional<std::string>& user,
                        const std::optional<std::string>& service) {
  std::string out = "P=" + form_escape(base64_encode(encode(m)));
  if (user) out += "&U=" + form_escape(*user);
  if (service) out += "&S=" + form_escape(*service);
  return out;
}

FormRequest form_decode(std::string_view body) {
  // A P value can grow at most 3x through percent-encoding.
  if (body.size() > 3 * kMaxEncodedMessage + 4096) throw Error(Errc::Oversize);
  auto fields = form_parse(body);
  auto p = form_field(fields, "P");
  if (!p) throw Error(Errc::MissingP);
  if (p->size() > kMaxEncodedMessage) throw Error(Errc::Oversize);
  FormRequest req;
  req.message = decode_message(base64_decode(*p));
  req.user = form_field(fields, "U");
  req.service = form_field(fields, "S");
  if ((req.user && req.user->empty()) || (req.service && req.service->empty()))
    throw Error(Errc::EmptyFormField);
  return req;
}

}  // namespace webagent::wire
