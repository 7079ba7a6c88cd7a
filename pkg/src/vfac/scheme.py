"""Multi-authority attribute-based encryption with outsourced decryption.

Roles and material
------------------

* ``global_setup`` fixes the pairing group, generators and hash suite.
* Each attribute authority owns a prefix (``aa1`` in ``aa1:doctor``) and
  three secret scalars (alpha, beta, y); ``authority_setup`` publishes
  ``(e(g,g)^alpha, g^beta, g^y)``.
* A user holds a private ``x``; their public key is ``(g^x, H(gid)^x)``.
  Authorities never see ``x``, so no single party can forge the user's
  full key.  ``authority_keygen`` issues, per attribute j:

  - cloud part  K1 = (g^x)^alpha (H(gid)^x)^y F(j)^t,  K2 = g^t
  - user part   K3 = F(j)^beta

  The cloud parts go into the cloud provider's key table; K3 stays with
  the user and is what lets them recognise their attributes inside a
  ciphertext whose policy is hidden.

Encryption is split. ``offline_enc`` precomputes, per pool entry, blinded
shares under throwaway randomness (lambda', w', r):

    C1 = e(g,g)^lambda' (e(g,g)^alpha)^r, C2 = g^-r,
    C3 = (g^y)^r g^w', C4 = F(j)^r

``online_enc`` then binds a pool entry to each row of the policy's
share-generating matrix with two correction scalars C5 = lambda - lambda'
and C6 = w - w', hides each row's attribute behind the label
H1(e((g^beta)^a, F(j))), and seals the message: a random target-group R
yields the data key h(R), C0 = R e(g,g)^s, and the verification digest
VK = H2(H1(R) || C_SE).

Decryption is outsourced. The user derives row labels from K3 (Eq. the
same value as the encryptor's: e(h, K3) with h = g^a), the cloud matches
labels, solves for reconstruction coefficients c_j and aggregates

    C1' = prod (C1_j e(g,g)^C5_j)^c_j
    C2' = prod (e(K1,C2_j) e(H(gid)^x, C3_j g^C6_j) e(C4_j, K2))^c_j

so the user finishes with the single exponentiation
e(g,g)^s = C1' * C2'^(1/x), recovers R = C0 / e(g,g)^s, checks VK and
opens the payload.  A tampered ciphertext or partial result fails the
digest check and is rejected, never returned.

Revocation removes the user's key-table record; the cloud then cannot
produce partial ciphertexts for them, old or new.

Cost accounting: every group operation routes through the counter
facade, tagged with the operation name and, inside ``online_enc``, the
buckets rng / sharing / hiding / assembly.  Aggregations below use
product-form rewrites (exponents folded into pairing inputs, shared
squaring chains) that change where work happens but not how much is
reported for the contract-pinned paths: online assembly stays at exactly
two exponentiations and ``user_dec`` at exactly one.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESGCM

from . import debug
from .counters import COUNTERS
from .encoding import Reader, Writer
from .errors import (
    DecodeError,
    DuplicateAttribute,
    InvalidInput,
    InvalidKey,
    MissingAttributeKey,
    NotSatisfied,
    PoolEmpty,
    UnknownAuthority,
    UnknownUser,
    UnsupportedParameter,
    VerificationFailed,
    WrongAuthority,
)
from .group import (
    ORDER,
    HashSuite,
    Rng,
    Scalar,
    SourceElement,
    TargetElement,
    pair,
    pair_product_pow,
    random_target,
    target_multi_exp,
)
from .lsss import (
    ATTR_RE,
    AccessMatrix,
    PolicyNode,
    compile_policy,
    parse_policy,
    reconstruct,
)
from .lsss import share as lsss_share

GROUP_PROFILE = "bn254/dual/v1"
SE_PROFILE = "aes-256-gcm/v1"
SECURITY_LEVEL = 128
NONCE_BYTES = 12


def _authority_of(attr: str) -> str:
    return attr.split(":", 1)[0]


def _check_attr(attr: str) -> str:
    if not ATTR_RE.match(attr):
        raise InvalidInput(f"attribute {attr!r} is not <authority>:<tag>")
    return attr


def _attr_elem(gp: "GlobalParams", attr: str) -> SourceElement:
    # memoised by the hash suite; window tables pay off because the same
    # attribute base is exponentiated by every pool entry and key issuance
    return gp.hashes.hash_attr(attr).enable_fixed_base()


# ---------------------------------------------------------------------------
# Global parameters


@dataclass(eq=False)
class GlobalParams:
    """Public group description shared by every party."""

    g: SourceElement
    gt: TargetElement  # e(g, g)
    hashes: HashSuite

    def __eq__(self, other):
        if not isinstance(other, GlobalParams):
            return NotImplemented
        return self.g == other.g and self.gt == other.gt

    def to_bytes(self) -> bytes:
        w = Writer().u8(1)
        w.text(GROUP_PROFILE).text(self.hashes.NAME).text(SE_PROFILE)
        w.source(self.g).target(self.gt)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "GlobalParams":
        r = Reader(data)
        if r.u8() != 1:
            raise DecodeError("unknown parameter format version")
        profile, hname, sename = r.text(), r.text(), r.text()
        if profile != GROUP_PROFILE:
            raise UnsupportedParameter(f"group profile {profile!r} not supported")
        if sename != SE_PROFILE:
            raise UnsupportedParameter(f"cipher suite {sename!r} not supported")
        hashes = HashSuite()
        if hname != hashes.NAME:
            raise UnsupportedParameter(f"hash suite {hname!r} not supported")
        g = r.source()
        gt = r.target()
        r.finish()
        if pair(g, g) != gt:
            raise DecodeError("stored pairing constant is inconsistent with g")
        g.enable_fixed_base()
        gt.enable_fixed_base()
        return cls(g=g, gt=gt, hashes=hashes)


def global_setup(security: int = SECURITY_LEVEL, rng: Rng | None = None) -> GlobalParams:
    """Produce the public parameters for the one supported curve profile."""

    if security != SECURITY_LEVEL:
        raise UnsupportedParameter(f"no group profile for {security}-bit security")
    with COUNTERS.phase("global_setup"):
        g = SourceElement.generator().enable_fixed_base()
        gt = pair(g, g).enable_fixed_base()
    return GlobalParams(g=g, gt=gt, hashes=HashSuite())


# ---------------------------------------------------------------------------
# Authorities


@dataclass(eq=False)
class AuthorityPublic:
    """Published per-authority values; tables enabled, these are hot bases."""

    id: str
    egg_alpha: TargetElement  # e(g,g)^alpha
    g_beta: SourceElement
    g_y: SourceElement

    def to_bytes(self) -> bytes:
        w = Writer().u8(1).text(self.id)
        w.target(self.egg_alpha).source(self.g_beta).source(self.g_y)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "AuthorityPublic":
        r = Reader(data)
        if r.u8() != 1:
            raise DecodeError("unknown authority key format version")
        aid = r.text()
        egg_alpha = r.target()
        g_beta = r.source()
        g_y = r.source()
        r.finish()
        egg_alpha.enable_fixed_base()
        g_beta.enable_fixed_base()
        g_y.enable_fixed_base()
        return cls(id=aid, egg_alpha=egg_alpha, g_beta=g_beta, g_y=g_y)


@dataclass(eq=False)
class AuthorityKeys:
    """An authority's three secret scalars plus its public half."""

    id: str
    alpha: Scalar
    beta: Scalar
    y: Scalar
    public: AuthorityPublic

    def to_bytes(self) -> bytes:
        w = Writer().u8(1).text(self.id)
        w.scalar(self.alpha).scalar(self.beta).scalar(self.y)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, gp: GlobalParams, data: bytes) -> "AuthorityKeys":
        r = Reader(data)
        if r.u8() != 1:
            raise DecodeError("unknown authority key format version")
        aid = r.text()
        alpha, beta, y = r.scalar(), r.scalar(), r.scalar()
        r.finish()
        return cls(
            id=aid,
            alpha=alpha,
            beta=beta,
            y=y,
            public=_authority_public(gp, aid, alpha, beta, y),
        )


def _authority_public(gp, aid, alpha, beta, y):
    return AuthorityPublic(
        id=aid,
        egg_alpha=gp.gt.exp(alpha).enable_fixed_base(),
        g_beta=gp.g.exp(beta).enable_fixed_base(),
        g_y=gp.g.exp(y).enable_fixed_base(),
    )


def authority_setup(gp: GlobalParams, authority_id: str, rng: Rng) -> AuthorityKeys:
    """Create an authority: three fresh secrets and their public images."""

    if not authority_id or ":" in authority_id:
        raise InvalidInput("authority id must be a non-empty prefix without ':'")
    with COUNTERS.phase("authority_setup"):
        alpha = rng.nonzero_scalar()
        beta = rng.nonzero_scalar()
        y = rng.nonzero_scalar()
        public = _authority_public(gp, authority_id, alpha, beta, y)
    return AuthorityKeys(id=authority_id, alpha=alpha, beta=beta, y=y, public=public)


# ---------------------------------------------------------------------------
# Users


@dataclass(eq=False)
class UserPublicKey:
    gid: str
    first: SourceElement  # g^x
    second: SourceElement  # H(gid)^x

    def __eq__(self, other):
        if not isinstance(other, UserPublicKey):
            return NotImplemented
        return self.gid == other.gid and self.first == other.first and self.second == other.second

    def to_bytes(self) -> bytes:
        return Writer().u8(1).text(self.gid).source(self.first).source(self.second).getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "UserPublicKey":
        r = Reader(data)
        if r.u8() != 1:
            raise DecodeError("unknown user key format version")
        gid = r.text()
        first = r.source()
        second = r.source()
        r.finish()
        return cls(gid=gid, first=first, second=second)


@dataclass(eq=False)
class UserKeys:
    """The user's private store: inverse secret and per-attribute K3 parts."""

    gid: str
    x_inv: Scalar
    k3: dict[str, SourceElement] = field(default_factory=dict)

    def add_k3(self, parts: dict[str, SourceElement]) -> None:
        for attr, elem in parts.items():
            held = self.k3.get(attr)
            if held is not None and held != elem:
                raise DuplicateAttribute(f"conflicting key for attribute {attr!r}")
            self.k3[attr] = elem

    def to_bytes(self) -> bytes:
        w = Writer().u8(1).text(self.gid).scalar(self.x_inv).u32(len(self.k3))
        for attr in sorted(self.k3):
            w.text(attr).source(self.k3[attr])
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "UserKeys":
        r = Reader(data)
        if r.u8() != 1:
            raise DecodeError("unknown user key format version")
        gid = r.text()
        x_inv = r.scalar()
        k3 = {}
        for _ in range(r.u32()):
            attr = r.text()
            k3[attr] = r.source()
        r.finish()
        return cls(gid=gid, x_inv=x_inv, k3=k3)


def user_key_init(gp: GlobalParams, gid: str, rng: Rng) -> tuple[Scalar, UserPublicKey]:
    """Pick the user's secret x and publish (g^x, H(gid)^x).

    x is returned to the caller, who should keep only its inverse (see
    ``UserKeys``); the public half is what authorities key against.
    """

    if not gid:
        raise InvalidInput("gid must be non-empty")
    with COUNTERS.phase("user_key_init"):
        x = rng.nonzero_scalar()
        base = gp.hashes.hash_gid(gid)
        upk = UserPublicKey(gid=gid, first=gp.g.exp(x), second=base.exp(x))
    return x, upk


def upk_well_formed(gp: GlobalParams, upk: UserPublicKey) -> bool:
    """Check both halves of a user public key carry the same exponent."""

    if not upk.gid:
        return False
    base = gp.hashes.hash_gid(upk.gid)
    return pair(upk.first, base) == pair(gp.g, upk.second)


# ---------------------------------------------------------------------------
# Key issuance


@dataclass(eq=False)
class CskEntry:
    """Cloud-side key pair for one attribute."""

    k1: SourceElement
    k2: SourceElement
    t: Scalar | None = None  # issuance randomness; populated only in debug mode


def authority_keygen(
    gp: GlobalParams,
    ak: AuthorityKeys,
    gid: str,
    upk: UserPublicKey,
    attrs,
    rng: Rng,
) -> tuple[dict[str, CskEntry], dict[str, SourceElement]]:
    """Issue keys for the authority's attributes to one user.

    Returns (cloud_parts, user_parts): K1/K2 per attribute for the cloud
    key table, K3 per attribute for the user.  The common factor
    (g^x)^alpha (H(gid)^x)^y is computed once and reused across
    attributes, so issuing l attributes costs 2 + 3l exponentiations.
    """

    if not gid or gid != upk.gid:
        raise InvalidInput("gid is empty or does not match the public key")
    attrs = list(attrs)
    if len(set(attrs)) != len(attrs):
        raise DuplicateAttribute("repeated attribute in issuance request")
    for attr in attrs:
        _check_attr(attr)
        if _authority_of(attr) != ak.id:
            raise WrongAuthority(f"{attr!r} is not managed by authority {ak.id!r}")
    with COUNTERS.phase("authority_keygen"):
        if not upk_well_formed(gp, upk):
            raise InvalidKey(f"public key for {gid!r} fails its pairing check")
        cloud: dict[str, CskEntry] = {}
        user: dict[str, SourceElement] = {}
        if attrs:
            base = upk.first.exp(ak.alpha) * upk.second.exp(ak.y)
            for attr in attrs:
                f_j = _attr_elem(gp, attr)
                t = rng.nonzero_scalar()
                cloud[attr] = CskEntry(
                    k1=base * f_j.exp(t),
                    k2=gp.g.exp(t),
                    t=t if debug.enabled else None,
                )
                user[attr] = f_j.exp(ak.beta)
    return cloud, user


# ---------------------------------------------------------------------------
# Cloud key table


@dataclass(eq=False)
class CloudUserKey:
    gid: str
    upk: UserPublicKey
    entries: dict[str, CskEntry] = field(default_factory=dict)


class KeyList:
    """The cloud's registry of transformation keys, one record per user."""

    def __init__(self):
        self._users: dict[str, CloudUserKey] = {}

    def lookup(self, gid: str) -> CloudUserKey | None:
        return self._users.get(gid)

    def gids(self) -> list[str]:
        return sorted(self._users)

    def __len__(self):
        return len(self._users)

    def to_bytes(self) -> bytes:
        w = Writer().u8(1).u32(len(self._users))
        for gid in sorted(self._users):
            rec = self._users[gid]
            w.blob(rec.upk.to_bytes()).u32(len(rec.entries))
            for attr in sorted(rec.entries):
                ent = rec.entries[attr]
                w.text(attr).source(ent.k1).source(ent.k2)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "KeyList":
        r = Reader(data)
        if r.u8() != 1:
            raise DecodeError("unknown key table format version")
        kt = cls()
        for _ in range(r.u32()):
            upk = UserPublicKey.from_bytes(r.blob())
            entries = {}
            for _ in range(r.u32()):
                attr = r.text()
                entries[attr] = CskEntry(k1=r.source(), k2=r.source())
            kt._users[upk.gid] = CloudUserKey(gid=upk.gid, upk=upk, entries=entries)
        r.finish()
        return kt


def register_key(
    kt: KeyList, gid: str, upk: UserPublicKey, csk_parts: dict[str, CskEntry]
) -> KeyList:
    """Add cloud key parts for a user; strict about attribute collisions.

    Re-registering an attribute that is already on file is refused even
    with identical material — retries must be deduplicated a layer up,
    where the issuance protocol keeps its replay cache.
    """

    if not gid or gid != upk.gid:
        raise InvalidInput("gid is empty or does not match the public key")
    rec = kt._users.get(gid)
    if rec is None:
        rec = CloudUserKey(gid=gid, upk=upk)
        kt._users[gid] = rec
    elif rec.upk != upk:
        raise InvalidKey(f"user {gid!r} already registered under a different public key")
    for attr in csk_parts:
        if attr in rec.entries:
            raise DuplicateAttribute(f"attribute {attr!r} already registered for {gid!r}")
    for attr, ent in csk_parts.items():
        rec.entries[attr] = CskEntry(k1=ent.k1, k2=ent.k2)
    return kt


def revoke(kt: KeyList, gid: str) -> KeyList:
    """Remove a user's record; idempotent, unknown gids are a no-op."""

    kt._users.pop(gid, None)
    return kt


# ---------------------------------------------------------------------------
# Offline encryption pool


@dataclass(eq=False)
class PoolEntry:
    """One precomputed row: blinded share material under throwaway randomness."""

    attr: str
    lam_p: Scalar  # lambda'
    w_p: Scalar  # w'
    r: Scalar
    c1: TargetElement
    c2: SourceElement
    c3: SourceElement
    c4: SourceElement
    used: bool = False


class IntermediateCiphertext:
    """Per-attribute pools of single-use offline entries."""

    def __init__(self):
        self.pool: dict[str, list[PoolEntry]] = {}

    def available(self, attr: str) -> int:
        return sum(1 for e in self.pool.get(attr, ()) if not e.used)

    def attrs(self) -> list[str]:
        return sorted(self.pool)

    def take(self, attr: str) -> PoolEntry:
        for entry in self.pool.get(attr, ()):
            if not entry.used:
                entry.used = True
                return entry
        raise PoolEmpty(f"no unused offline entry for attribute {attr!r}")

    def merge(self, other: "IntermediateCiphertext") -> None:
        for attr, entries in other.pool.items():
            self.pool.setdefault(attr, []).extend(entries)

    def to_bytes(self) -> bytes:
        w = Writer().u8(1).u32(len(self.pool))
        for attr in sorted(self.pool):
            entries = self.pool[attr]
            w.text(attr).u32(len(entries))
            for e in entries:
                w.scalar(e.lam_p).scalar(e.w_p).scalar(e.r)
                w.target(e.c1).source(e.c2).source(e.c3).source(e.c4)
                w.u8(1 if e.used else 0)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "IntermediateCiphertext":
        r = Reader(data)
        if r.u8() != 1:
            raise DecodeError("unknown pool format version")
        ic = cls()
        for _ in range(r.u32()):
            attr = r.text()
            entries = []
            for _ in range(r.u32()):
                lam_p, w_p, rr = r.scalar(), r.scalar(), r.scalar()
                c1 = r.target()
                c2, c3, c4 = r.source(), r.source(), r.source()
                used = r.u8() == 1
                entries.append(
                    PoolEntry(
                        attr=attr, lam_p=lam_p, w_p=w_p, r=rr,
                        c1=c1, c2=c2, c3=c3, c4=c4, used=used,
                    )
                )
            ic.pool[attr] = entries
        r.finish()
        return ic


def offline_enc(
    gp: GlobalParams,
    pks: dict[str, AuthorityPublic],
    attrs,
    count: int,
    rng: Rng,
) -> IntermediateCiphertext:
    """Precompute ``count`` single-use entries for each attribute.

    Needs only the public keys of the involved authorities; the message
    and policy come later.  Six exponentiations per entry as written
    (two target, four source); C1's pair and C3's pair could each fold
    into one multi-exponentiation, which is what the headline per-row
    figure of four assumes — the cost report carries both numbers.
    """

    attrs = list(attrs)
    if count < 0:
        raise InvalidInput("count must be non-negative")
    if len(set(attrs)) != len(attrs):
        raise DuplicateAttribute("repeated attribute in pool request")
    for attr in attrs:
        _check_attr(attr)
        if _authority_of(attr) not in pks:
            raise UnknownAuthority(f"no public key for authority {_authority_of(attr)!r}")
    ic = IntermediateCiphertext()
    with COUNTERS.phase("offline_enc"):
        for attr in attrs:
            pk = pks[_authority_of(attr)]
            f_j = _attr_elem(gp, attr)
            entries = []
            for _ in range(count):
                lam_p = rng.scalar()
                w_p = rng.scalar()
                r = rng.nonzero_scalar()
                entries.append(
                    PoolEntry(
                        attr=attr,
                        lam_p=lam_p,
                        w_p=w_p,
                        r=r,
                        c1=gp.gt.exp(lam_p) * pk.egg_alpha.exp(r),
                        c2=gp.g.exp(-r),
                        c3=pk.g_y.exp(r) * gp.g.exp(w_p),
                        c4=f_j.exp(r),
                    )
                )
            ic.pool[attr] = entries
    return ic


# ---------------------------------------------------------------------------
# Online encryption


@dataclass(eq=False)
class CtRow:
    """One hidden policy row: label instead of attribute name."""

    label: bytes
    vector: tuple[int, ...]
    c1: TargetElement
    c2: SourceElement
    c3: SourceElement
    c4: SourceElement
    c5: Scalar
    c6: Scalar


@dataclass(eq=False)
class Ciphertext:
    width: int
    rows: list[CtRow]
    h: SourceElement  # g^a, the session handle labels are derived against
    c0: TargetElement
    c_se: bytes
    vk: bytes
    dbg: dict | None = None

    def to_bytes(self) -> bytes:
        w = Writer().u8(1).u16(self.width).u16(len(self.rows))
        w.source(self.h).target(self.c0).raw(self.vk).blob(self.c_se)
        for row in self.rows:
            w.raw(row.label)
            for v in row.vector:
                w.raw(v.to_bytes(32, "big"))
            w.target(row.c1).source(row.c2).source(row.c3).source(row.c4)
            w.scalar(row.c5).scalar(row.c6)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "Ciphertext":
        r = Reader(data)
        if r.u8() != 1:
            raise DecodeError("unknown ciphertext format version")
        width = r.u16()
        nrows = r.u16()
        h = r.source()
        c0 = r.target()
        vk = r.raw(32)
        c_se = r.blob()
        rows = []
        for _ in range(nrows):
            label = r.raw(32)
            vector = tuple(int.from_bytes(r.raw(32), "big") for _ in range(width))
            if any(v >= ORDER for v in vector):
                raise DecodeError("matrix entry out of range")
            c1 = r.target()
            c2, c3, c4 = r.source(), r.source(), r.source()
            c5, c6 = r.scalar(), r.scalar()
            rows.append(CtRow(label, vector, c1, c2, c3, c4, c5, c6))
        r.finish()
        return cls(width=width, rows=rows, h=h, c0=c0, c_se=c_se, vk=vk)

    def ct_id(self) -> str:
        return hashlib.sha256(self.to_bytes()).hexdigest()


def _seal(key: bytes, nonce: bytes, plaintext: bytes) -> bytes:
    return nonce + AESGCM(key).encrypt(nonce, plaintext, b"")


def _open(key: bytes, blob: bytes) -> bytes:
    if len(blob) < NONCE_BYTES + 16:
        raise VerificationFailed("sealed payload too short")
    try:
        return AESGCM(key).decrypt(blob[:NONCE_BYTES], blob[NONCE_BYTES:], b"")
    except InvalidTag:
        raise VerificationFailed("payload failed authenticated decryption") from None


def online_enc(
    gp: GlobalParams,
    pks: dict[str, AuthorityPublic],
    message: bytes,
    ic: IntermediateCiphertext,
    policy: PolicyNode | str,
    rng: Rng,
) -> Ciphertext:
    """Bind pooled entries to a policy and seal the message.

    Consumes one unused pool entry per policy row (all-or-nothing: the
    pool is only touched once every row is known to be coverable).  The
    produced ciphertext carries no attribute names — each row is
    addressable only by the label H1(e((g^beta)^a, F(j))).
    """

    if isinstance(policy, str):
        policy = parse_policy(policy)
    matrix = compile_policy(policy)
    for attr in matrix.attrs:
        if _authority_of(attr) not in pks:
            raise UnknownAuthority(f"no public key for authority {_authority_of(attr)!r}")
    shortfall = [a for a in matrix.attrs if ic.available(a) < 1]
    if shortfall:
        raise PoolEmpty(f"no unused offline entry for: {', '.join(sorted(shortfall))}")

    with COUNTERS.phase("online_enc"):
        with COUNTERS.bucket("rng"):
            a = rng.nonzero_scalar()
            s = rng.scalar()
            big_r = random_target(rng, gp.gt)
            nonce = rng.bytes(NONCE_BYTES)
        with COUNTERS.bucket("sharing"):
            lambdas, ws = lsss_share(matrix, s, rng)
        with COUNTERS.bucket("hiding"):
            labels = []
            for attr, _ in matrix.rows:
                pk = pks[_authority_of(attr)]
                sigma = pair(pk.g_beta.exp(a), _attr_elem(gp, attr))
                labels.append(gp.hashes.label(sigma))
        assert len(set(labels)) == len(labels), "label collision across rows"
        rows = []
        for idx, (attr, vector) in enumerate(matrix.rows):
            entry = ic.take(attr)
            rows.append(
                CtRow(
                    label=labels[idx],
                    vector=vector,
                    c1=entry.c1,
                    c2=entry.c2,
                    c3=entry.c3,
                    c4=entry.c4,
                    c5=lambdas[idx] - entry.lam_p,
                    c6=ws[idx] - entry.w_p,
                )
            )
        with COUNTERS.bucket("assembly"):
            h = gp.g.exp(a)
            egg_s = gp.gt.exp(s)
            c0 = big_r * egg_s
        key = gp.hashes.seal_key(big_r)
        c_se = _seal(key, nonce, message)
        tag = gp.hashes.label(big_r)
        vk = gp.hashes.verify_digest(tag + c_se)

    ct = Ciphertext(width=matrix.width, rows=rows, h=h, c0=c0, c_se=c_se, vk=vk)
    if debug.enabled:
        ct.dbg = {
            "a": a,
            "s": s,
            "R": big_r,
            "rows": [
                {"attr": attr, "lam": lambdas[i], "w": ws[i]}
                for i, (attr, _) in enumerate(matrix.rows)
            ],
        }
    return ct


# ---------------------------------------------------------------------------
# Decryption


def derive_labels(
    gp: GlobalParams, usk: UserKeys, h: SourceElement, attrs
) -> dict[str, bytes]:
    """Compute this user's row labels for a ciphertext handle h = g^a.

    e(h, K3_j) = e((g^beta)^a, F(j)), the same value the encryptor hashed,
    so the label matches exactly when the user holds attribute j.  One
    pairing per requested attribute.
    """

    attrs = list(attrs)
    out: dict[str, bytes] = {}
    with COUNTERS.phase("derive_labels"):
        for attr in attrs:
            k3 = usk.k3.get(attr)
            if k3 is None:
                raise MissingAttributeKey(f"no user key part for attribute {attr!r}")
            out[attr] = gp.hashes.label(pair(h, k3))
    return out


@dataclass(eq=False)
class PartialCiphertext:
    """Cloud-aggregated decryption state; one exponentiation from plaintext."""

    c0: TargetElement
    c1_gid: TargetElement
    c2_gid: TargetElement
    vk: bytes
    c_se: bytes
    dbg: dict | None = None

    def to_bytes(self) -> bytes:
        w = Writer().u8(1)
        w.target(self.c0).target(self.c1_gid).target(self.c2_gid)
        w.raw(self.vk).blob(self.c_se)
        return w.getvalue()

    @classmethod
    def from_bytes(cls, data: bytes) -> "PartialCiphertext":
        r = Reader(data)
        if r.u8() != 1:
            raise DecodeError("unknown partial ciphertext format version")
        c0 = r.target()
        c1_gid = r.target()
        c2_gid = r.target()
        vk = r.raw(32)
        c_se = r.blob()
        r.finish()
        return cls(c0=c0, c1_gid=c1_gid, c2_gid=c2_gid, vk=vk, c_se=c_se)


def cs_dec(
    gp: GlobalParams,
    kt: KeyList,
    gid: str,
    ct: Ciphertext,
    labels: dict[str, bytes],
) -> PartialCiphertext:
    """Cloud-side aggregation for one user against one ciphertext.

    Rows are matched by the user-supplied labels, reconstruction
    coefficients are solved from the exposed matrix rows, and the two
    aggregates are formed.  The coefficients are folded into the pairing
    inputs and the share-correction exponents into one fixed-base
    multi-exponentiation — the same group elements, materially fewer
    target-group operations than the row-by-row reading.

    Raises UnknownUser for unregistered (or revoked) gids and
    NotSatisfied when the matched rows cannot reconstruct the secret.
    """

    with COUNTERS.phase("cs_dec"):
        rec = kt.lookup(gid)
        if rec is None:
            raise UnknownUser(f"no key table record for {gid!r}")
        by_label: dict[bytes, str] = {}
        for attr, label in labels.items():
            if label in by_label:
                raise InvalidInput("two attributes map to the same label")
            by_label[label] = attr
        matched: list[tuple[int, str]] = []
        for j, row in enumerate(ct.rows):
            attr = by_label.get(row.label)
            if attr is not None and attr in rec.entries:
                matched.append((j, attr))
        matrix = AccessMatrix(
            rows=tuple((f"row-{j}", row.vector) for j, row in enumerate(ct.rows)),
            width=ct.width,
        )
        coeffs = reconstruct(matrix, [j for j, _ in matched])
        if coeffs is None:
            raise NotSatisfied(f"labels held by {gid!r} do not satisfy the policy")

        c1_parts: list[tuple[TargetElement, Scalar]] = []
        c5_fold = Scalar.zero()
        paired: list[tuple[SourceElement, SourceElement, Scalar]] = []
        for j, attr in matched:
            c = coeffs.get(j)
            if c is None:
                continue
            row = ct.rows[j]
            ent = rec.entries[attr]
            c1_parts.append((row.c1, c))
            c5_fold = c5_fold + row.c5 * c
            c3_adj = row.c3 * gp.g.exp(row.c6)
            paired.append((ent.k1, row.c2, c))
            paired.append((rec.upk.second, c3_adj, c))
            paired.append((row.c4, ent.k2, c))
        c1_gid = target_multi_exp(c1_parts) * gp.gt.exp(c5_fold)
        c2_gid = pair_product_pow(paired)

    pct = PartialCiphertext(c0=ct.c0, c1_gid=c1_gid, c2_gid=c2_gid, vk=ct.vk, c_se=ct.c_se)
    if debug.enabled:
        pct.dbg = {"coeffs": coeffs, "matched": matched}
    return pct


def user_dec(gp: GlobalParams, usk: UserKeys, pct: PartialCiphertext) -> bytes:
    """Finish decryption: one exponentiation, then verify-and-open.

    e(g,g)^s = C1' * C2'^(1/x) unblinds C0; the recovered R must
    reproduce the ciphertext's verification digest before any plaintext
    is released.  Wrong or tampered inputs raise VerificationFailed.
    """

    with COUNTERS.phase("user_dec"):
        egg_s = pct.c1_gid * pct.c2_gid.exp(usk.x_inv)
        big_r = pct.c0 / egg_s
        tag = gp.hashes.label(big_r)
        if gp.hashes.verify_digest(tag + pct.c_se) != pct.vk:
            raise VerificationFailed("recovered value does not match the verification digest")
        key = gp.hashes.seal_key(big_r)
        return _open(key, pct.c_se)
