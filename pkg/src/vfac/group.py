"""Pairing-group facade: scalars, dual source elements, target elements.

This is the only module the scheme and protocol layers touch for group
arithmetic; every exponentiation, multiplication, pairing, hash and RNG
draw is reported to vfac.counters.COUNTERS.

Dual representation
-------------------
The construction is written for a symmetric pairing e: G x G -> GT, but the
backend curve is asymmetric.  A SourceElement therefore carries two halves
with the same exponent: `left` in G1 and `right` in G2.  Group operations
act on both halves; `pair(x, y)` evaluates e(x.left, y.right).

Hash outputs are the one exception to the synchronized-exponent rule: a
hashed element's halves are independent hash-to-curve outputs, so formulas
must pair any hash-derived operand on a fixed side.  The frozen convention
used by vfac.scheme is:

  label derivation:  pair(g-derived, F(attr))           (F on the right)
  decryption:        pair(K1, C2), pair(upk2, C3*g^C6), pair(C4, K2)
                     -- hash-derived operands left, g-derived right

Each cancellation group in the decryption identity then meets the same
hash half on both of its sides, which is what makes the scheme correct in
dual representation.  Tests check the identity bit-exactly.

Serialization: Scalar = 32 bytes big-endian; SourceElement = 96 bytes
(compressed G1 then compressed G2); TargetElement = 384 bytes (twelve Fp
coefficients).  Target decode validates coefficient range but not subgroup
membership (a full order check costs a ^R exponentiation per element);
end-to-end integrity of decryptions is enforced by the verification tag,
not by target-group decode.
"""

import hashlib
import random as _random

from gmpy2 import invert, mpz

from .backend import curve as _c
from .backend import pairing as _p
from .backend.fields import R
from .counters import (
    COUNTERS,
    EXP_SRC,
    EXP_TGT,
    HASH_BITS,
    HASH_SRC,
    MUL_SRC,
    MUL_TGT,
    PAIR,
    RNG_SCALAR,
    RNG_TGT,
)
from .errors import DecodeError, InvalidElement, InvalidInput

SCALAR_BYTES = 32
SOURCE_BYTES = 96
TARGET_BYTES = 384

ORDER = int(R)


class Scalar:
    """Immutable residue mod the group order."""

    __slots__ = ("v",)

    def __init__(self, value):
        self.v = mpz(value) % R

    @classmethod
    def zero(cls):
        return cls(0)

    @classmethod
    def one(cls):
        return cls(1)

    def __add__(self, other):
        return Scalar(self.v + other.v)

    def __sub__(self, other):
        return Scalar(self.v - other.v)

    def __mul__(self, other):
        return Scalar(self.v * other.v)

    def __neg__(self):
        return Scalar(-self.v)

    def inverse(self):
        if self.v == 0:
            raise InvalidInput("zero scalar has no inverse")
        return Scalar(invert(self.v, R))

    def is_zero(self):
        return self.v == 0

    def __eq__(self, other):
        return isinstance(other, Scalar) and self.v == other.v

    def __hash__(self):
        return hash(int(self.v))

    def __repr__(self):
        return f"Scalar({int(self.v)})"

    def to_bytes(self):
        return int(self.v).to_bytes(SCALAR_BYTES, "big")

    @classmethod
    def from_bytes(cls, data):
        if len(data) != SCALAR_BYTES:
            raise DecodeError("scalar must be 32 bytes")
        v = int.from_bytes(data, "big")
        if v >= ORDER:
            raise InvalidElement("scalar out of range")
        return cls(v)


class Rng:
    """Randomness source; deterministic when seeded (testing), OS-backed otherwise."""

    def __init__(self, seed=None):
        self._r = _random.Random(seed) if seed is not None else _random.SystemRandom()

    def scalar(self):
        COUNTERS.count(RNG_SCALAR)
        return Scalar(self._r.randrange(ORDER))

    def nonzero_scalar(self):
        while True:
            s = self.scalar()
            if not s.is_zero():
                return s

    def bytes(self, n):
        return self._r.getrandbits(n * 8).to_bytes(n, "big")


class SourceElement:
    """Dual source-group element: left half in G1, right half in G2."""

    __slots__ = ("left", "right", "_t1", "_t2")

    def __init__(self, left, right):
        self.left = left
        self.right = right
        self._t1 = None
        self._t2 = None

    @classmethod
    def generator(cls):
        return cls(_c.g1_from_affine(_c.G1_GEN), _c.g2_from_affine(_c.G2_GEN))

    @classmethod
    def identity(cls):
        return cls(_c.G1_INF, _c.G2_INF)

    def is_identity(self):
        return _c.g1_is_inf(self.left) and _c.g2_is_inf(self.right)

    def enable_fixed_base(self):
        """Build per-base window tables; later exponentiations reuse them."""
        if self._t1 is None and not _c.g1_is_inf(self.left):
            self._t1 = _c.FixedBaseTable(self.left, 1)
        if self._t2 is None and not _c.g2_is_inf(self.right):
            self._t2 = _c.FixedBaseTable(self.right, 2)
        return self

    def exp(self, k):
        COUNTERS.count(EXP_SRC)
        kv = k.v
        left = self._t1.mul(kv) if self._t1 is not None else _c.g1_mul(self.left, kv)
        right = self._t2.mul(kv) if self._t2 is not None else _c.g2_mul(self.right, kv)
        return SourceElement(left, right)

    def __mul__(self, other):
        COUNTERS.count(MUL_SRC)
        return SourceElement(
            _c.g1_add(self.left, other.left), _c.g2_add(self.right, other.right)
        )

    def __eq__(self, other):
        if not isinstance(other, SourceElement):
            return NotImplemented
        return _c.g1_eq(self.left, other.left) and _c.g2_eq(self.right, other.right)

    __hash__ = None

    def __repr__(self):
        return f"SourceElement({self.to_bytes().hex()[:16]}...)"

    def to_bytes(self):
        return _c.g1_to_bytes(self.left) + _c.g2_to_bytes(self.right)

    @classmethod
    def from_bytes(cls, data):
        if len(data) != SOURCE_BYTES:
            raise DecodeError("source element must be 96 bytes")
        try:
            left = _c.g1_from_bytes(data[:32])
            right = _c.g2_from_bytes(data[32:])
        except _c.PointDecodeError as exc:
            raise InvalidElement(str(exc)) from None
        return cls(left, right)

    def has_synchronized_halves(self):
        """Debug/test check: do both halves carry the same exponent?

        True for g-derived elements, false (with overwhelming probability)
        for hash outputs.  Costs two Miller loops; not for hot paths.
        """
        gen = SourceElement.generator()
        lhs = _p.multi_miller([(self.left, gen.right)])
        rhs = _p.multi_miller([(gen.left, self.right)])
        return _p.final_exponentiation(lhs) == _p.final_exponentiation(rhs)


class TargetElement:
    """Element of the target group GT (canonical Fp12 tuple)."""

    __slots__ = ("v", "_tab")

    def __init__(self, value):
        self.v = value
        self._tab = None

    @classmethod
    def one(cls):
        return cls(_p.GT_ONE)

    def is_one(self):
        return self.v == _p.GT_ONE

    def enable_fixed_base(self):
        if self._tab is None:
            self._tab = _p.GtFixedBaseTable(self.v)
        return self

    def exp(self, k):
        COUNTERS.count(EXP_TGT)
        if self._tab is not None:
            return TargetElement(self._tab.exp(k.v))
        return TargetElement(_p.gt_exp(self.v, k.v))

    def __mul__(self, other):
        COUNTERS.count(MUL_TGT)
        return TargetElement(_p.gt_mul(self.v, other.v))

    def inverse(self):
        # unitary inverse (conjugation); cheap, not counted as an exponentiation
        return TargetElement(_p.gt_inv(self.v))

    def __truediv__(self, other):
        COUNTERS.count(MUL_TGT)
        return TargetElement(_p.gt_mul(self.v, _p.gt_inv(other.v)))

    def __eq__(self, other):
        if not isinstance(other, TargetElement):
            return NotImplemented
        return self.v == other.v

    __hash__ = None

    def __repr__(self):
        return f"TargetElement({self.to_bytes().hex()[:16]}...)"

    def to_bytes(self):
        return _p.f12_to_bytes(self.v)

    @classmethod
    def from_bytes(cls, data):
        if len(data) != TARGET_BYTES:
            raise DecodeError("target element must be 384 bytes")
        try:
            return cls(_p.f12_from_bytes(data))
        except ValueError as exc:
            raise InvalidElement(str(exc)) from None


def pair(x, y):
    """e(x.left, y.right) -> TargetElement."""
    COUNTERS.count(PAIR)
    return TargetElement(_p.pairing(x.left, y.right))


def pair_product(pairs):
    """prod e(x_i.left, y_i.right), one shared final exponentiation."""
    COUNTERS.count(PAIR, n=len(pairs))
    return TargetElement(_p.multi_pairing([(x.left, y.right) for x, y in pairs]))


def pair_product_pow(items):
    """prod e(x_i, y_i)^(k_i) with the exponent folded into the left input.

    Each item is (x, y, k) with k a Scalar or None (treated as 1).  Raising
    the pairing's first argument to k gives the same value as raising the
    pairing output, but a source exponentiation is an order of magnitude
    cheaper than a target one, and the whole product shares a single final
    exponentiation.  Counted as one pairing per item plus one source
    exponentiation per scaled item.
    """
    pairs = []
    for x, y, k in items:
        if k is None:
            pairs.append((x.left, y.right))
        else:
            COUNTERS.count(EXP_SRC)
            pairs.append((_c.g1_mul(x.left, k.v), y.right))
    COUNTERS.count(PAIR, n=len(pairs))
    return TargetElement(_p.multi_pairing(pairs))


def target_multi_exp(items):
    """prod t_i^(k_i) over (TargetElement, Scalar) pairs, squarings shared."""
    items = list(items)
    COUNTERS.count(EXP_TGT, n=len(items))
    return TargetElement(_p.gt_multi_exp([t.v for t, _ in items], [k.v for _, k in items]))


def random_target(rng, gt_base):
    """Uniform random target element as gt_base^rho.

    Counted as an RNG draw, not as a phase exponentiation: cost accounting
    for encryption reports sampling separately from ciphertext assembly.
    """
    COUNTERS.count(RNG_TGT)
    rho = rng._r.randrange(1, ORDER)
    if gt_base._tab is not None:
        return TargetElement(gt_base._tab.exp(mpz(rho)))
    return TargetElement(_p.gt_exp(gt_base.v, mpz(rho)))


# ---------------------------------------------------------------------------
# Hash suite


class HashSuite:
    """Domain-separated hash roles.

    H  (tag_gid):    user identity -> source element
    F  (tag_attr):   attribute name -> source element
    h  (tag_seal):   target element -> symmetric key bytes
    H1 (tag_label):  target element -> hidden label / message tag bytes
    H2 (tag_verify): bytes -> verification key bytes

    All bit-string outputs are 256-bit.  Hash-to-group uses one shared tag
    per role plus a per-half branch byte, so the G1 and G2 halves of one
    input are independent points.
    """

    NAME = "sha256/try-and-increment/v1"

    TAG_GID = b"vfac/H"
    TAG_ATTR = b"vfac/F"
    TAG_SEAL = b"vfac/h"
    TAG_LABEL = b"vfac/H1"
    TAG_VERIFY = b"vfac/H2"

    BITS = 256

    def __init__(self):
        self._cache = {}

    def _to_source(self, tag, data):
        key = (tag, data)
        hit = self._cache.get(key)
        if hit is not None:
            return hit
        el = SourceElement(_c.hash_to_g1(tag, data), _c.hash_to_g2(tag, data))
        self._cache[key] = el
        return el

    def hash_gid(self, gid):
        """H: identity bytes -> source element (memoized)."""
        COUNTERS.count(HASH_SRC)
        if not isinstance(gid, bytes):
            gid = str(gid).encode()
        if not gid:
            raise InvalidInput("cannot hash an empty identity")
        return self._to_source(self.TAG_GID, gid)

    def hash_attr(self, attr):
        """F: attribute name -> source element (memoized)."""
        COUNTERS.count(HASH_SRC)
        if not isinstance(attr, bytes):
            attr = str(attr).encode()
        if not attr:
            raise InvalidInput("cannot hash an empty attribute name")
        return self._to_source(self.TAG_ATTR, attr)

    def _bits(self, tag, data):
        COUNTERS.count(HASH_BITS)
        return hashlib.sha256(tag + b"\x00" + data).digest()

    def seal_key(self, t):
        """h: target element -> 32-byte symmetric key."""
        return self._bits(self.TAG_SEAL, t.to_bytes())

    def label(self, t):
        """H1: target element -> 32-byte label/tag."""
        return self._bits(self.TAG_LABEL, t.to_bytes())

    def verify_digest(self, data):
        """H2: bytes -> 32-byte verification digest."""
        return self._bits(self.TAG_VERIFY, data)
