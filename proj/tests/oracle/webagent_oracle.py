#!/usr/bin/env python3
"""Independent reference computations for the C++ test suite.

Everything here is written from the wire-format definitions with the Python
standard library, `cryptography` and `paramiko`; nothing is shared with the
C++ implementation.

  goldens DIR            write golden vectors into DIR
  check-goldens DIR      recompute and compare with DIR (exit 1 on mismatch)
  verify-sigs            stdin lines "pubkey_b64 data_b64 sigblob_b64",
                         prints OK/BAD per line using paramiko
  verify-transcript FILE --seed N --fixtures DIR
                         replays a seeded transcript: re-derives the agent
                         exponent from the seed, recomputes all secrets,
                         decrypts every body and verifies every signature
"""

import argparse
import base64
import hashlib
import struct
import sys
from pathlib import Path

# ---------------------------------------------------------------------------
# SSH data types


def u32(n):
    return struct.pack(">I", n)


def sstr(b):
    if isinstance(b, str):
        b = b.encode()
    return u32(len(b)) + b


def mpint(n):
    if n == 0:
        return u32(0)
    raw = n.to_bytes((n.bit_length() + 7) // 8, "big")
    if raw[0] & 0x80:
        raw = b"\x00" + raw
    return u32(len(raw)) + raw


class Cursor:
    def __init__(self, data):
        self.data = data
        self.pos = 0

    def take(self, n):
        if self.pos + n > len(self.data):
            raise ValueError("truncated")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def byte(self):
        return self.take(1)[0]

    def u32(self):
        return struct.unpack(">I", self.take(4))[0]

    def string(self):
        return self.take(self.u32())

    def mpint(self):
        return int.from_bytes(self.string(), "big")

    def rest(self):
        return self.data[self.pos:]


MAGIC = b"SSHWebAgent"
VERSION = 0x11


def message(mtype, data, version=VERSION):
    return sstr(MAGIC) + bytes([version, mtype]) + sstr(data)


def parse_message(raw):
    c = Cursor(raw)
    assert c.string() == MAGIC
    version = c.byte()
    mtype = c.byte()
    data = c.string()
    assert not c.rest()
    return version, mtype, data


def kex_sign_bytes(p, g, e, method, referer, k, d):
    return mpint(p) + mpint(g) + mpint(e) + sstr(method) + sstr(referer) + sstr(k) + sstr(d)


def derive(method, referer, e, f, s):
    shared = hashlib.sha256(sstr(method) + sstr(referer) + mpint(e) + mpint(f) + mpint(s)).digest()
    key = hashlib.sha256(mpint(s) + sstr(shared) + b"A" + sstr(referer)).digest()
    iv = hashlib.sha256(mpint(s) + sstr(shared) + b"B" + sstr(referer)).digest()[:16]
    return shared, key, iv


def aes_cbc(key, iv, data, encrypt):
    from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

    c = Cipher(algorithms.AES(key), modes.CBC(iv))
    op = c.encryptor() if encrypt else c.decryptor()
    return op.update(data) + op.finalize()


def userauth_blob(session_id, user, service, alg, key_blob):
    return sstr(session_id) + bytes([50]) + sstr(user) + sstr(service) + sstr("publickey") + b"\x01" + sstr(alg) + sstr(key_blob)


def message_body(algorithm, identifier, ciphertext):
    return bytes([algorithm]) + sstr(identifier) + sstr(ciphertext)


def auth_response_payload(status, items, es, options):
    out = bytes([1 if status else 0]) + u32(len(items))
    for pub, sig, comment in items:
        out += sstr(sstr(pub) + sstr(sig) + sstr(comment))
    out += u32(len(options)) + bytes([es])
    for k, v in options:
        out += sstr(sstr(k) + sstr(v))
    return out


# ---------------------------------------------------------------------------
# Keys and signatures


def dh_group_14():
    # RFC 3526 group 14.
    hexp = (
        "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74020BBEA63B139B22514A08798E3404DD"
        "EF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
        "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF0598DA48361C55D39A69163FA8FD24CF5F"
        "83655D23DCA3AD961C62F356208552BB9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
        "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF6955817183995497CEA956AE515D2261898FA0510"
        "15728E5A8AACAA68FFFFFFFFFFFFFFFF"
    )
    return int(hexp, 16)


def load_openssh_private(path):
    from cryptography.hazmat.primitives import serialization

    data = Path(path).read_bytes()
    if b"OPENSSH PRIVATE KEY" in data:
        return serialization.load_ssh_private_key(data, password=None)
    return serialization.load_pem_private_key(data, password=None)


def public_blob_from_pub(path):
    return base64.b64decode(Path(path).read_text().split()[1])


def sign_ssh(private_key, data, alg):
    from cryptography.hazmat.primitives import hashes
    from cryptography.hazmat.primitives.asymmetric import ed25519, padding

    if isinstance(private_key, ed25519.Ed25519PrivateKey):
        return sstr(alg) + sstr(private_key.sign(data))
    h = {"ssh-rsa": hashes.SHA1(), "rsa-sha2-256": hashes.SHA256(), "rsa-sha2-512": hashes.SHA512()}[alg]
    return sstr(alg) + sstr(private_key.sign(data, padding.PKCS1v15(), h))


def paramiko_verify(pub_blob, data, sig_blob):
    import paramiko

    alg = Cursor(pub_blob).string().decode()
    if alg == "ssh-ed25519":
        key = paramiko.Ed25519Key(data=pub_blob)
    elif alg == "ssh-rsa":
        key = paramiko.RSAKey(data=pub_blob)
    else:
        return False
    return bool(key.verify_ssh_sig(data, paramiko.Message(sig_blob)))


# ---------------------------------------------------------------------------
# Seeded stream matching the test-hook generator

class SeededStream:
    def __init__(self, seed):
        self.seed = seed.to_bytes(8, "big")
        self.counter = 0
        self.block = b""
        self.used = 0

    def take(self, n):
        out = bytearray()
        while len(out) < n:
            if self.used == len(self.block):
                self.block = hashlib.sha256(self.seed + self.counter.to_bytes(8, "big")).digest()
                self.counter += 1
                self.used = 0
            out.append(self.block[self.used])
            self.used += 1
        return bytes(out)


# ---------------------------------------------------------------------------
# Goldens


def toy_session():
    p, g = 23, 5
    e = pow(g, 6, p)
    f = pow(g, 15, p)
    s = pow(e, 15, p)
    assert s == pow(f, 6, p)
    return p, g, e, f, s


def goldens(fixtures):
    out = {}
    out["mpint_0"] = mpint(0)
    out["mpint_80"] = mpint(0x80)
    out["mpint_9a378f9b2e332a7"] = mpint(0x9A378F9B2E332A7)
    out["mpint_ff"] = mpint(0xFF)
    out["message_kex_request_empty"] = message(0x02, b"")

    p, g, e, f, s = toy_session()
    out["toy_e"] = mpint(e)
    out["toy_f"] = mpint(f)
    out["toy_s"] = mpint(s)
    out["kex_sign_bytes_toy"] = kex_sign_bytes(p, g, e, "POST", "https://x/", b"", b"")
    shared, key, iv = derive("POST", "https://x/", e, f, s)
    out["toy_shared_secret"] = shared
    out["toy_secret_key"] = key
    out["toy_iv"] = iv

    identifier = bytes(range(16))
    random4 = bytes.fromhex("deadbeef")
    content = random4 + bytes([0x02]) + sstr(identifier)
    padding = bytes([0xA5]) * (-len(content) % 16)
    plain_new = content + padding
    out["plaintext_new"] = plain_new
    ct = aes_cbc(key, iv, plain_new, True)
    out["body_new_toy"] = message_body(0x02, identifier, ct)

    ssh_id = bytes([0x11]) * 32
    content = random4 + bytes([0x03]) + sstr(identifier) + sstr(ssh_id)
    plain_auth = content + bytes([0xA5]) * (-len(content) % 16)
    out["plaintext_auth_request"] = plain_auth
    out["body_auth_request_toy"] = message_body(0x02, identifier, aes_cbc(key, iv, plain_auth, True))

    out["payload_auth_response_empty"] = auth_response_payload(False, [], 0x02, [])

    keys = Path(fixtures) / "keys"
    ed_pub = public_blob_from_pub(keys / "user_ed25519.pub")
    rsa_pub = public_blob_from_pub(keys / "user_rsa.pub")
    session_id = bytes(range(32))
    blob_ed = userauth_blob(session_id, "alice", "ssh-connection", "ssh-ed25519", ed_pub)
    blob_rsa = userauth_blob(session_id, "alice", "ssh-connection", "rsa-sha2-256", rsa_pub)
    out["userauth_blob_ed25519"] = blob_ed
    out["userauth_blob_rsa"] = blob_rsa
    out["userauth_sig_ed25519"] = sign_ssh(load_openssh_private(keys / "user_ed25519"), blob_ed, "ssh-ed25519")
    out["userauth_sig_rsa_sha2_256"] = sign_ssh(load_openssh_private(keys / "user_rsa"), blob_rsa, "rsa-sha2-256")
    out["userauth_sig_ssh_rsa"] = sign_ssh(load_openssh_private(keys / "user_rsa"), blob_rsa, "ssh-rsa")

    item = (ed_pub, out["userauth_sig_ed25519"], b"alice@ed25519-fixture")
    out["payload_auth_response_one"] = auth_response_payload(True, [item], 0x02, [])
    return out


def hexdump(b):
    h = b.hex()
    return "\n".join(h[i:i + 64] for i in range(0, len(h), 64)) + "\n"


def cmd_goldens(args):
    d = Path(args.dir)
    d.mkdir(parents=True, exist_ok=True)
    for name, value in goldens(args.fixtures).items():
        (d / f"{name}.hex").write_text(hexdump(value))
    return 0


def cmd_check_goldens(args):
    bad = 0
    for name, value in goldens(args.fixtures).items():
        path = Path(args.dir) / f"{name}.hex"
        have = bytes.fromhex("".join(path.read_text().split())) if path.exists() else None
        if have != value:
            print(f"MISMATCH {name}")
            bad += 1
    print(f"{bad} mismatches")
    return 1 if bad else 0


def cmd_verify_sigs(_args):
    bad = 0
    for line in sys.stdin:
        parts = line.split()
        if len(parts) != 3:
            continue
        pub, data, sig = (base64.b64decode(x) for x in parts)
        try:
            ok = paramiko_verify(pub, data, sig)
        except Exception:
            ok = False
        print("OK" if ok else "BAD")
        bad += not ok
    return 1 if bad else 0


# ---------------------------------------------------------------------------
# Transcript replay


def parse_plain(plain, expected_type):
    c = Cursor(plain)
    c.take(4)
    btype = c.byte()
    assert btype == expected_type, f"body type {btype} != {expected_type}"
    ident = c.string()
    return ident, c


def cmd_verify_transcript(args):
    lines = [l.split() for l in Path(args.file).read_text().splitlines() if l.strip()]
    assert [l[0] for l in lines] == ["server->agent", "agent->server"] * 2, "unexpected direction order"
    msgs = [parse_message(base64.b64decode(l[1])) for l in lines]
    assert [m[1] for m in msgs] == [0x02, 0x03, 0x04, 0x04], "unexpected message order"

    referer = args.referer
    method = "POST"

    # KEX_DH_REQUEST
    c = Cursor(msgs[0][2])
    p, g, e = c.mpint(), c.mpint(), c.mpint()
    d, k, sign = c.string(), c.string(), c.string()
    assert not c.rest()
    assert p == dh_group_14() and g == 2
    if not paramiko_verify(k, kex_sign_bytes(p, g, e, method, referer, k, d), sign):
        print("BAD kex signature")
        return 1

    # Agent exponent: first 64 bytes of the agent's seeded stream.
    agent_rng = SeededStream(args.seed * 2)
    x = int.from_bytes(agent_rng.take(64), "big")
    c = Cursor(msgs[1][2])
    f, enc = c.mpint(), c.string()
    if pow(g, x, p) != f:
        print("BAD agent public value")
        return 1
    s = pow(e, x, p)
    _, key, iv = derive(method, referer, e, f, s)

    c = Cursor(enc)
    assert c.byte() == 0x02
    clear_id = c.string()
    ident, _ = parse_plain(aes_cbc(key, iv, c.string(), False), 0x02)
    assert ident == clear_id and len(ident) == 16

    c = Cursor(msgs[2][2])
    assert c.byte() == 0x02 and c.string() == clear_id
    ident, pc = parse_plain(aes_cbc(key, iv, c.string(), False), 0x03)
    assert ident == clear_id
    ssh_id = pc.string()

    c = Cursor(msgs[3][2])
    assert c.byte() == 0x02 and c.string() == clear_id
    ident, pc = parse_plain(aes_cbc(key, iv, c.string(), False), 0x04)
    assert ident == clear_id
    status = pc.byte()
    n = pc.u32()
    verified = 0
    for _ in range(n):
        item = Cursor(pc.string())
        pub, sig = item.string(), item.string()
        alg = Cursor(sig).string().decode()
        blob = userauth_blob(ssh_id, args.user, args.service, alg, pub)
        if not paramiko_verify(pub, blob, sig):
            print(f"BAD userauth signature ({alg})")
            return 1
        verified += 1
    m = pc.u32()
    es = pc.byte()
    assert status == 1 and es == 0x02 and m == 0
    print(f"OK transcript: 4 messages, secrets re-derived, {verified} userauth signatures verified")
    return 0


def main():
    ap = argparse.ArgumentParser()
    sub = ap.add_subparsers(dest="cmd", required=True)
    for name in ("goldens", "check-goldens"):
        s = sub.add_parser(name)
        s.add_argument("dir")
        s.add_argument("--fixtures", default=str(Path(__file__).resolve().parent.parent / "fixtures"))
    sub.add_parser("verify-sigs")
    s = sub.add_parser("verify-transcript")
    s.add_argument("file")
    s.add_argument("--seed", type=int, required=True)
    s.add_argument("--fixtures", default=str(Path(__file__).resolve().parent.parent / "fixtures"))
    s.add_argument("--referer", default="https://webssh.example.com/ssh/")
    s.add_argument("--user", default="alice")
    s.add_argument("--service", default="ssh-connection")
    args = ap.parse_args()
    return {
        "goldens": cmd_goldens,
        "check-goldens": cmd_check_goldens,
        "verify-sigs": cmd_verify_sigs,
        "verify-transcript": cmd_verify_transcript,
    }[args.cmd](args)


if __name__ == "__main__":
    sys.exit(main())
