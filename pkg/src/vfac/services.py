"""The four protocol roles and the transports that connect them.

Servers (authority, cloud) expose ``handle(WireMessage) -> WireMessage``;
clients hold an Endpoint and speak frames.  The in-process endpoint runs
the same encode/decode path as the TCP one — a message that survives the
test suite in-process is byte-for-byte the message that crosses a socket.

Key issuance is the one cross-service transaction.  The authority
generates key material, registers the cloud's share first, and releases
the user's share only after the cloud acknowledged durably.  If the
cloud is unreachable or refuses, the authority aborts: no envelope, no
cached state, at most one registration per (user, attribute) ever.

The user's share travels inside an envelope only that user can open:
a fresh exponent k gives eph = g^k, and the wrapping key is derived from
e(upk_first, H(gid))^k = e(eph, H(gid))^x — computable by the issuer
from public material and by the holder of x from eph, and nobody else.
"""

import hashlib
import os
import socket
import socketserver
import threading

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from . import scheme, wire
from .encoding import Reader, Writer
from .errors import (
    DecodeError,
    InvalidKey,
    IssuanceAborted,
    NotFound,
    ProtocolError,
    VfacError,
)
from .group import Rng, SourceElement
from .scheme import CskEntry, GlobalParams, UserKeys, UserPublicKey
from .storage import CiphertextStore, KeyTableStore
from .wire import WireMessage

NONCE_BYTES = 12
_MAX_LIST = 4096  # sanity cap on wire-side collection sizes

_ENVELOPE_TAG = b"vfac/envelope/v1"


# ---------------------------------------------------------------------------
# Secure-channel envelope


def _envelope_key(shared: bytes, gid: str, eph_bytes: bytes) -> bytes:
    return hashlib.sha256(
        _ENVELOPE_TAG + b"\x00" + shared + gid.encode() + eph_bytes
    ).digest()


def seal_envelope(
    gp: GlobalParams, upk: UserPublicKey, payload: bytes, rng: Rng
) -> bytes:
    """Encrypt payload so that only the holder of upk's exponent reads it."""
    k = rng.nonzero_scalar()
    eph = gp.g.exp(k)
    shared = scheme.pair(upk.first, gp.hashes.hash_gid(upk.gid)).exp(k)
    key = _envelope_key(shared.to_bytes(), upk.gid, eph.to_bytes())
    nonce = rng.bytes(NONCE_BYTES)
    sealed = nonce + AESGCM(key).encrypt(nonce, payload, b"")
    return Writer().u8(1).source(eph).blob(sealed).getvalue()


def open_envelope(gp: GlobalParams, usk: UserKeys, envelope: bytes) -> bytes:
    """Recover an envelope's payload using the user's retrieval secret."""
    r = Reader(envelope)
    if r.u8() != 1:
        raise DecodeError("unknown envelope format version")
    eph = r.source()
    sealed = r.blob()
    r.finish()
    x = usk.x_inv.inverse()
    shared = scheme.pair(eph, gp.hashes.hash_gid(usk.gid)).exp(x)
    key = _envelope_key(shared.to_bytes(), usk.gid, eph.to_bytes())
    if len(sealed) < NONCE_BYTES + 16:
        raise InvalidKey("envelope payload too short")
    try:
        return AESGCM(key).decrypt(sealed[:NONCE_BYTES], sealed[NONCE_BYTES:], b"")
    except InvalidTag:
        raise InvalidKey("envelope was not sealed for this user") from None


def _encode_k3_map(k3: dict[str, SourceElement]) -> bytes:
    w = Writer().u32(len(k3))
    for attr in sorted(k3):
        w.text(attr).source(k3[attr])
    return w.getvalue()


def _decode_k3_map(data: bytes) -> dict[str, SourceElement]:
    r = Reader(data)
    n = r.u32()
    if n > _MAX_LIST:
        raise ProtocolError("attribute list implausibly long")
    out = {}
    for _ in range(n):
        attr = r.text()
        out[attr] = r.source()
    r.finish()
    return out


# ---------------------------------------------------------------------------
# Endpoints (client side of a transport)


class Endpoint:
    """One-request/one-reply channel to a service."""

    def request(self, msg: WireMessage) -> WireMessage:
        raise NotImplementedError


class InprocEndpoint(Endpoint):
    """Loopback endpoint that still round-trips every frame through the
    codec, so in-process tests exercise the exact wire bytes."""

    def __init__(self, server):
        self._server = server

    def request(self, msg: WireMessage) -> WireMessage:
        frame = wire.encode_frame(msg)
        reply = self._server.handle(wire.decode_frame(frame))
        return wire.decode_frame(wire.encode_frame(reply))


class TcpEndpoint(Endpoint):
    def __init__(self, host: str, port: int, timeout: float = 30.0):
        self.addr = (host, port)
        self.timeout = timeout

    def request(self, msg: WireMessage) -> WireMessage:
        with socket.create_connection(self.addr, timeout=self.timeout) as sock:
            sock.sendall(wire.encode_frame(msg))
            sock.shutdown(socket.SHUT_WR)
            return wire.read_frame(sock.recv)


class _FrameHandler(socketserver.BaseRequestHandler):
    def handle(self):
        try:
            msg = wire.read_frame(self.request.recv)
        except ProtocolError as exc:
            self.request.sendall(wire.encode_frame(WireMessage.error(exc)))
            return
        reply = self.server.service.handle(msg)
        self.request.sendall(wire.encode_frame(reply))


class TcpServer(socketserver.ThreadingTCPServer):
    """One service behind a listening socket; requests handled per-thread."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, service, host: str = "127.0.0.1", port: int = 0):
        super().__init__((host, port), _FrameHandler)
        self.service = service
        self._thread = None

    @property
    def port(self) -> int:
        return self.server_address[1]

    def start(self) -> "TcpServer":
        self._thread = threading.Thread(target=self.serve_forever, daemon=True)
        self._thread.start()
        return self

    def stop(self) -> None:
        self.shutdown()
        self.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def endpoint(self) -> TcpEndpoint:
        return TcpEndpoint(*self.server_address)


# ---------------------------------------------------------------------------
# Cloud service


class CloudService:
    """Stores ciphertexts, keeps the key table, runs outsourced decryption."""

    def __init__(self, gp: GlobalParams, data_dir: str):
        self.gp = gp
        self.keys = KeyTableStore(data_dir)
        self.cts = CiphertextStore(data_dir)
        self._write_lock = threading.Lock()

    def close(self) -> None:
        self.keys.close()

    def handle(self, msg: WireMessage) -> WireMessage:
        try:
            return self._dispatch(msg)
        except VfacError as exc:
            return WireMessage.error(exc)

    def _dispatch(self, msg: WireMessage) -> WireMessage:
        if msg.kind == wire.STORE_CT:
            return self._store_ct(msg.body)
        if msg.kind == wire.FETCH_CT:
            return self._fetch_ct(msg.body)
        if msg.kind == wire.REQUEST_DEC:
            return self._request_dec(msg.body)
        if msg.kind == wire.REVOKE:
            return self._revoke(msg.body)
        if msg.kind == wire.REGISTER_KEY:
            return self._register_key(msg.body)
        raise ProtocolError(f"cloud service cannot handle kind 0x{msg.kind:02x}")

    def _store_ct(self, body: bytes) -> WireMessage:
        r = Reader(body)
        ct_bytes = r.blob()
        r.finish()
        # parse before storing: the store holds only well-formed ciphertexts
        scheme.Ciphertext.from_bytes(ct_bytes)
        with self._write_lock:
            ct_id = self.cts.put(ct_bytes)
        return WireMessage.ok(Writer().text(ct_id).getvalue())

    def _fetch_ct(self, body: bytes) -> WireMessage:
        r = Reader(body)
        ct_id = r.text()
        r.finish()
        data = self.cts.get(ct_id)
        if data is None:
            raise NotFound(f"no ciphertext {ct_id}")
        return WireMessage.ok(Writer().blob(data).getvalue())

    def _request_dec(self, body: bytes) -> WireMessage:
        r = Reader(body)
        gid = r.text()
        ct_id = r.text()
        n = r.u32()
        if n > _MAX_LIST:
            raise ProtocolError("label list implausibly long")
        labels = {}
        for _ in range(n):
            attr = r.text()
            labels[attr] = r.raw(32)
        r.finish()
        data = self.cts.get(ct_id)
        if data is None:
            raise NotFound(f"no ciphertext {ct_id}")
        ct = scheme.Ciphertext.from_bytes(data)
        pct = scheme.cs_dec(self.gp, self.keys.kt, gid, ct, labels)
        return WireMessage.ok(Writer().blob(pct.to_bytes()).getvalue())

    def _revoke(self, body: bytes) -> WireMessage:
        r = Reader(body)
        gid = r.text()
        r.finish()
        with self._write_lock:
            self.keys.revoke(gid)
        return WireMessage.ok()

    def _register_key(self, body: bytes) -> WireMessage:
        r = Reader(body)
        upk = UserPublicKey.from_bytes(r.blob())
        n = r.u32()
        if n > _MAX_LIST:
            raise ProtocolError("attribute list implausibly long")
        parts = {}
        for _ in range(n):
            attr = r.text()
            parts[attr] = CskEntry(k1=r.source(), k2=r.source())
        r.finish()
        with self._write_lock:
            self.keys.register(upk.gid, upk, parts)
        return WireMessage.ok()


# ---------------------------------------------------------------------------
# Authority service


class AuthorityService:
    """Issues keys for one authority's attribute domain.

    The cloud share is registered (and durably acknowledged) before the
    user share leaves this process.  Replaying an identical request
    returns the cached envelope; a request that re-asks for an attribute
    already issued to that user under a different request is refused by
    the cloud's table and aborts with no envelope.
    """

    def __init__(self, gp: GlobalParams, ak: scheme.AuthorityKeys, cs: Endpoint, rng: Rng):
        self.gp = gp
        self.ak = ak
        self.cs = cs
        self.rng = rng
        self._issued: dict[tuple[str, tuple[str, ...]], bytes] = {}
        self._lock = threading.Lock()

    def handle(self, msg: WireMessage) -> WireMessage:
        try:
            return self._dispatch(msg)
        except VfacError as exc:
            return WireMessage.error(exc)

    def _dispatch(self, msg: WireMessage) -> WireMessage:
        if msg.kind == wire.GET_PUBLIC_KEY:
            if msg.body:
                raise ProtocolError("GetPublicKey carries no body")
            return WireMessage.ok(Writer().blob(self.ak.public.to_bytes()).getvalue())
        if msg.kind == wire.ISSUE_KEYS:
            return self._issue(msg.body)
        raise ProtocolError(f"authority service cannot handle kind 0x{msg.kind:02x}")

    def _issue(self, body: bytes) -> WireMessage:
        r = Reader(body)
        gid = r.text()
        upk = UserPublicKey.from_bytes(r.blob())
        n = r.u32()
        if n > _MAX_LIST:
            raise ProtocolError("attribute list implausibly long")
        attrs = [r.text() for _ in range(n)]
        r.finish()

        with self._lock:
            cache_key = (gid, tuple(sorted(attrs)))
            held = self._issued.get(cache_key)
            if held is not None:
                return WireMessage.ok(Writer().blob(held).getvalue())

            cloud, user = scheme.authority_keygen(
                self.gp, self.ak, gid, upk, attrs, self.rng
            )
            reg = Writer().blob(upk.to_bytes()).u32(len(cloud))
            for attr in sorted(cloud):
                reg.text(attr).source(cloud[attr].k1).source(cloud[attr].k2)
            try:
                reply = self.cs.request(
                    WireMessage.request(wire.REGISTER_KEY, reg.getvalue())
                )
                reply.raise_if_error()
            except VfacError as exc:
                raise IssuanceAborted(
                    f"cloud did not accept the registration: {exc}"
                ) from None
            except OSError as exc:
                raise IssuanceAborted(f"cloud unreachable: {exc}") from None

            envelope = seal_envelope(self.gp, upk, _encode_k3_map(user), self.rng)
            self._issued[cache_key] = envelope
        return WireMessage.ok(Writer().blob(envelope).getvalue())


# ---------------------------------------------------------------------------
# Clients


class CloudClient:
    """Typed wrapper over the cloud service's endpoints."""

    def __init__(self, endpoint: Endpoint):
        self._ep = endpoint

    def store_ct(self, ct_bytes: bytes) -> str:
        reply = self._ep.request(
            WireMessage.request(wire.STORE_CT, Writer().blob(ct_bytes).getvalue())
        ).raise_if_error()
        r = Reader(reply.body)
        ct_id = r.text()
        r.finish()
        return ct_id

    def fetch_ct(self, ct_id: str) -> bytes:
        reply = self._ep.request(
            WireMessage.request(wire.FETCH_CT, Writer().text(ct_id).getvalue())
        ).raise_if_error()
        r = Reader(reply.body)
        data = r.blob()
        r.finish()
        return data

    def request_dec(self, gid: str, ct_id: str, labels: dict[str, bytes]) -> scheme.PartialCiphertext:
        w = Writer().text(gid).text(ct_id).u32(len(labels))
        for attr in sorted(labels):
            w.text(attr).raw(labels[attr])
        reply = self._ep.request(
            WireMessage.request(wire.REQUEST_DEC, w.getvalue())
        ).raise_if_error()
        r = Reader(reply.body)
        pct = scheme.PartialCiphertext.from_bytes(r.blob())
        r.finish()
        return pct

    def revoke(self, gid: str) -> None:
        self._ep.request(
            WireMessage.request(wire.REVOKE, Writer().text(gid).getvalue())
        ).raise_if_error()

    def register_key(self, upk: UserPublicKey, parts: dict[str, CskEntry]) -> None:
        w = Writer().blob(upk.to_bytes()).u32(len(parts))
        for attr in sorted(parts):
            w.text(attr).source(parts[attr].k1).source(parts[attr].k2)
        self._ep.request(
            WireMessage.request(wire.REGISTER_KEY, w.getvalue())
        ).raise_if_error()


class AuthorityClient:
    def __init__(self, endpoint: Endpoint):
        self._ep = endpoint

    def get_public_key(self) -> scheme.AuthorityPublic:
        reply = self._ep.request(
            WireMessage.request(wire.GET_PUBLIC_KEY)
        ).raise_if_error()
        r = Reader(reply.body)
        pk = scheme.AuthorityPublic.from_bytes(r.blob())
        r.finish()
        return pk

    def issue_keys(self, gid: str, upk: UserPublicKey, attrs) -> bytes:
        attrs = list(attrs)
        w = Writer().text(gid).blob(upk.to_bytes()).u32(len(attrs))
        for attr in attrs:
            w.text(attr)
        reply = self._ep.request(
            WireMessage.request(wire.ISSUE_KEYS, w.getvalue())
        ).raise_if_error()
        r = Reader(reply.body)
        envelope = r.blob()
        r.finish()
        return envelope


class DataOwner:
    """Encryptor-side state machine: precompute pool, encrypt, upload.

    The pool is persisted under the client's own data directory, so idle
    precomputation survives restarts.  Consumption is saved before the
    upload: a crash mid-encrypt costs pool entries, never reuses them.
    """

    def __init__(self, gp: GlobalParams, pks: dict[str, scheme.AuthorityPublic],
                 cs: CloudClient, data_dir: str, rng: Rng):
        self.gp = gp
        self.pks = pks
        self.cs = cs
        self.rng = rng
        self.pool_path = os.path.join(data_dir, "pool.bin")
        os.makedirs(data_dir, exist_ok=True)
        if os.path.exists(self.pool_path):
            with open(self.pool_path, "rb") as f:
                self.pool = scheme.IntermediateCiphertext.from_bytes(f.read())
        else:
            self.pool = scheme.IntermediateCiphertext()

    def _save_pool(self) -> None:
        tmp = self.pool_path + ".tmp"
        with open(tmp, "wb") as f:
            f.write(self.pool.to_bytes())
            f.flush()
            os.fsync(f.fileno())
        os.replace(tmp, self.pool_path)

    def precompute_pool(self, attrs, count: int) -> None:
        fresh = scheme.offline_enc(self.gp, self.pks, attrs, count, self.rng)
        self.pool.merge(fresh)
        self._save_pool()

    def encrypt(self, message: bytes, policy) -> str:
        ct = scheme.online_enc(self.gp, self.pks, message, self.pool, policy, self.rng)
        self._save_pool()
        return self.cs.store_ct(ct.to_bytes())


class DataUser:
    """Decryptor-side state machine: enroll, then the four-step retrieval."""

    def __init__(self, gp: GlobalParams, gid: str, cs: CloudClient, rng: Rng):
        self.gp = gp
        self.gid = gid
        self.cs = cs
        x, self.upk = scheme.user_key_init(gp, gid, rng)
        self.usk = UserKeys(gid=gid, x_inv=x.inverse())

    @classmethod
    def restore(cls, gp: GlobalParams, cs: CloudClient, upk: UserPublicKey,
                usk: UserKeys) -> "DataUser":
        """Rebuild a client around previously generated key material."""

        du = cls.__new__(cls)
        du.gp, du.gid, du.cs, du.upk, du.usk = gp, usk.gid, cs, upk, usk
        return du

    def enroll(self, authority: AuthorityClient, attrs) -> None:
        envelope = authority.issue_keys(self.gid, self.upk, attrs)
        k3 = _decode_k3_map(open_envelope(self.gp, self.usk, envelope))
        self.usk.add_k3(k3)

    def fetch_h(self, ct_id: str) -> SourceElement:
        return scheme.Ciphertext.from_bytes(self.cs.fetch_ct(ct_id)).h

    def derive_labels(self, h: SourceElement) -> dict[str, bytes]:
        return scheme.derive_labels(self.gp, self.usk, h, sorted(self.usk.k3))

    def request_dec(self, ct_id: str, labels: dict[str, bytes]) -> scheme.PartialCiphertext:
        return self.cs.request_dec(self.gid, ct_id, labels)

    def final_decrypt(self, pct: scheme.PartialCiphertext) -> bytes:
        return scheme.user_dec(self.gp, self.usk, pct)

    def decrypt(self, ct_id: str) -> bytes:
        h = self.fetch_h(ct_id)
        labels = self.derive_labels(h)
        pct = self.request_dec(ct_id, labels)
        return self.final_decrypt(pct)
