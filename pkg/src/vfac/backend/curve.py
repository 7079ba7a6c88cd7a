"""BN254 curve groups.

G1: y^2 = x^3 + 3 over Fp, prime order R (cofactor 1), generator (1, 2).
G2: the order-R subgroup of E'(Fp2): y^2 = x^3 + 3/XI (the sextic D-twist),
    cofactor H2 = 2P - R.

Points are Jacobian tuples (X, Y, Z); infinity is Z == 0.  G1 coordinates
are mpz, G2 coordinates are Fp2 tuples.  Affine points (from `g1_affine` /
`g2_affine`) are (x, y) pairs, or None for infinity; they are the canonical
form used for equality, hashing and serialization.

Scalar multiplication is 5-bit wNAF; long-lived bases can be wrapped in a
FixedBaseTable (4-bit chunk tables with batch-normalized entries), which
performs the same exponentiation about an order of magnitude faster.
"""

import hashlib

from gmpy2 import invert, mpz, powmod

from .fields import (
    P,
    R,
    U,
    F2_ZERO,
    f2_add,
    f2_conj,
    f2_inv,
    f2_is_zero,
    f2_mul,
    f2_mul_scalar,
    f2_neg,
    f2_sqr,
    f2_sqrt,
    f2_sub,
    XI_TO_P_MINUS1_OVER3,
    XI_TO_P_MINUS1_OVER2,
)

B1 = mpz(3)
# 3 / (9 + i), the twist curve constant.
B2 = f2_mul((mpz(0), B1), f2_inv((mpz(1), mpz(9))))

H2 = 2 * P - R  # cofactor of the order-R subgroup on the twist

G1_GEN = (mpz(1), mpz(2))
# Standard generator of the order-R twist subgroup (imaginary-first Fp2).
G2_GEN = (
    (
        mpz(11559732032986387107991004021392285783925812861821192530917403151452391805634),
        mpz(10857046999023057135944570762232829481370756359578518086990519993285655852781),
    ),
    (
        mpz(4082367875863433681332203403145435568316851327593401208105741076214120093531),
        mpz(8495653923123431417604973247489272438418190587263600148770280649306958101930),
    ),
)

G1_INF = (mpz(0), mpz(1), mpz(0))
G2_INF = (F2_ZERO, (mpz(0), mpz(1)), F2_ZERO)


# ---------------------------------------------------------------------------
# G1 arithmetic (inline mpz)


def g1_is_inf(a):
    return a[2] == 0


def g1_neg(a):
    return (a[0], (-a[1]) % P, a[2])


def g1_double(a):
    x, y, z = a
    if z == 0:
        return a
    A = x * x % P
    B = y * y % P
    C = B * B % P
    t = x + B
    D = (t * t - A - C) * 2 % P
    E = 3 * A % P
    F = E * E % P
    X3 = (F - 2 * D) % P
    Y3 = (E * (D - X3) - 8 * C) % P
    Z3 = 2 * y * z % P
    return (X3, Y3, Z3)


def g1_add(a, b):
    if a[2] == 0:
        return b
    if b[2] == 0:
        return a
    x1, y1, z1 = a
    x2, y2, z2 = b
    z1z1 = z1 * z1 % P
    z2z2 = z2 * z2 % P
    u1 = x1 * z2z2 % P
    u2 = x2 * z1z1 % P
    s1 = y1 * z2 * z2z2 % P
    s2 = y2 * z1 * z1z1 % P
    if u1 == u2:
        if s1 != s2:
            return G1_INF
        return g1_double(a)
    h = (u2 - u1) % P
    i = (2 * h) ** 2 % P
    j = h * i % P
    rr = 2 * (s2 - s1) % P
    v = u1 * i % P
    X3 = (rr * rr - j - 2 * v) % P
    Y3 = (rr * (v - X3) - 2 * s1 * j) % P
    Z3 = ((z1 + z2) ** 2 - z1z1 - z2z2) * h % P
    return (X3, Y3, Z3)


def g1_add_mixed(a, b_affine):
    """a (Jacobian) + b (affine, not infinity)."""
    if a[2] == 0:
        return (b_affine[0], b_affine[1], mpz(1))
    x1, y1, z1 = a
    x2, y2 = b_affine
    z1z1 = z1 * z1 % P
    u2 = x2 * z1z1 % P
    s2 = y2 * z1 * z1z1 % P
    if u2 == x1:
        if s2 != y1:
            return G1_INF
        return g1_double(a)
    h = (u2 - x1) % P
    hh = h * h % P
    i = 4 * hh % P
    j = h * i % P
    rr = 2 * (s2 - y1) % P
    v = x1 * i % P
    X3 = (rr * rr - j - 2 * v) % P
    Y3 = (rr * (v - X3) - 2 * y1 * j) % P
    Z3 = ((z1 + h) ** 2 - z1z1 - hh) % P
    return (X3, Y3, Z3)


def g1_affine(a):
    if a[2] == 0:
        return None
    zinv = invert(a[2], P)
    zinv2 = zinv * zinv % P
    return (a[0] * zinv2 % P, a[1] * zinv2 * zinv % P)


def g1_from_affine(aff):
    if aff is None:
        return G1_INF
    return (aff[0], aff[1], mpz(1))


def g1_eq(a, b):
    if a[2] == 0 or b[2] == 0:
        return a[2] == 0 and b[2] == 0
    z1z1 = a[2] * a[2] % P
    z2z2 = b[2] * b[2] % P
    if (a[0] * z2z2 - b[0] * z1z1) % P != 0:
        return False
    return (a[1] * b[2] * z2z2 - b[1] * a[2] * z1z1) % P == 0


def g1_on_curve(a):
    if a[2] == 0:
        return True
    x, y, z = a
    z2 = z * z % P
    z6 = z2 * z2 % P * z2 % P
    return (y * y - (x * x % P * x + B1 * z6)) % P == 0


def _wnaf(k, w):
    digits = []
    full = 1 << w
    half = 1 << (w - 1)
    while k:
        if k & 1:
            d = k & (full - 1)
            if d >= half:
                d -= full
            k -= d
        else:
            d = 0
        digits.append(d)
        k >>= 1
    return digits


def g1_mul(a, k):
    k = int(k) % int(R)
    if k == 0 or a[2] == 0:
        return G1_INF
    digits = _wnaf(k, 5)
    base = g1_affine(a)
    tab = [g1_from_affine(base)]  # odd multiples 1,3,5,...,15
    twice = g1_double(tab[0])
    for _ in range(7):
        tab.append(g1_add(tab[-1], twice))
    acc = G1_INF
    for d in reversed(digits):
        acc = g1_double(acc)
        if d > 0:
            acc = g1_add(acc, tab[d >> 1])
        elif d < 0:
            acc = g1_add(acc, g1_neg(tab[(-d) >> 1]))
    return acc


# ---------------------------------------------------------------------------
# G2 arithmetic (Fp2 coordinates)


def g2_is_inf(a):
    return f2_is_zero(a[2])


def g2_neg(a):
    return (a[0], f2_neg(a[1]), a[2])


def g2_double(a):
    x, y, z = a
    if f2_is_zero(z):
        return a
    A = f2_sqr(x)
    B = f2_sqr(y)
    C = f2_sqr(B)
    D = f2_sub(f2_sub(f2_sqr(f2_add(x, B)), A), C)
    D = f2_add(D, D)
    E = f2_add(f2_add(A, A), A)
    F = f2_sqr(E)
    C8 = f2_add(C, C)
    C8 = f2_add(C8, C8)
    C8 = f2_add(C8, C8)
    X3 = f2_sub(F, f2_add(D, D))
    Y3 = f2_sub(f2_mul(E, f2_sub(D, X3)), C8)
    Z3 = f2_mul(y, z)
    Z3 = f2_add(Z3, Z3)
    return (X3, Y3, Z3)


def g2_add(a, b):
    if f2_is_zero(a[2]):
        return b
    if f2_is_zero(b[2]):
        return a
    x1, y1, z1 = a
    x2, y2, z2 = b
    z1z1 = f2_sqr(z1)
    z2z2 = f2_sqr(z2)
    u1 = f2_mul(x1, z2z2)
    u2 = f2_mul(x2, z1z1)
    s1 = f2_mul(f2_mul(y1, z2), z2z2)
    s2 = f2_mul(f2_mul(y2, z1), z1z1)
    if u1 == u2:
        if s1 != s2:
            return G2_INF
        return g2_double(a)
    h = f2_sub(u2, u1)
    i = f2_sqr(f2_add(h, h))
    j = f2_mul(h, i)
    rr = f2_sub(s2, s1)
    rr = f2_add(rr, rr)
    v = f2_mul(u1, i)
    X3 = f2_sub(f2_sub(f2_sqr(rr), j), f2_add(v, v))
    t = f2_mul(s1, j)
    Y3 = f2_sub(f2_mul(rr, f2_sub(v, X3)), f2_add(t, t))
    Z3 = f2_mul(f2_sub(f2_sub(f2_sqr(f2_add(z1, z2)), z1z1), z2z2), h)
    return (X3, Y3, Z3)


def g2_add_mixed(a, b_affine):
    if f2_is_zero(a[2]):
        return (b_affine[0], b_affine[1], (mpz(0), mpz(1)))
    x1, y1, z1 = a
    x2, y2 = b_affine
    z1z1 = f2_sqr(z1)
    u2 = f2_mul(x2, z1z1)
    s2 = f2_mul(f2_mul(y2, z1), z1z1)
    if u2 == x1:
        if s2 != y1:
            return G2_INF
        return g2_double(a)
    h = f2_sub(u2, x1)
    hh = f2_sqr(h)
    i = f2_add(hh, hh)
    i = f2_add(i, i)
    j = f2_mul(h, i)
    rr = f2_sub(s2, y1)
    rr = f2_add(rr, rr)
    v = f2_mul(x1, i)
    X3 = f2_sub(f2_sub(f2_sqr(rr), j), f2_add(v, v))
    t = f2_mul(y1, j)
    Y3 = f2_sub(f2_mul(rr, f2_sub(v, X3)), f2_add(t, t))
    Z3 = f2_sub(f2_sub(f2_sqr(f2_add(z1, h)), z1z1), hh)
    return (X3, Y3, Z3)


def g2_affine(a):
    if f2_is_zero(a[2]):
        return None
    zinv = f2_inv(a[2])
    zinv2 = f2_sqr(zinv)
    return (f2_mul(a[0], zinv2), f2_mul(f2_mul(a[1], zinv2), zinv))


def g2_from_affine(aff):
    if aff is None:
        return G2_INF
    return (aff[0], aff[1], (mpz(0), mpz(1)))


def g2_eq(a, b):
    ainf, binf = f2_is_zero(a[2]), f2_is_zero(b[2])
    if ainf or binf:
        return ainf and binf
    z1z1 = f2_sqr(a[2])
    z2z2 = f2_sqr(b[2])
    if f2_mul(a[0], z2z2) != f2_mul(b[0], z1z1):
        return False
    return f2_mul(f2_mul(a[1], b[2]), z2z2) == f2_mul(f2_mul(b[1], a[2]), z1z1)


def g2_on_curve(a):
    if f2_is_zero(a[2]):
        return True
    x, y, z = a
    z2 = f2_sqr(z)
    z6 = f2_mul(f2_sqr(z2), z2)
    return f2_sqr(y) == f2_add(f2_mul(f2_sqr(x), x), f2_mul(B2, z6))


def g2_mul(a, k):
    k = int(k) % int(R)
    if k == 0 or f2_is_zero(a[2]):
        return G2_INF
    digits = _wnaf(k, 5)
    base = g2_affine(a)
    tab = [g2_from_affine(base)]
    twice = g2_double(tab[0])
    for _ in range(7):
        tab.append(g2_add(tab[-1], twice))
    acc = G2_INF
    for d in reversed(digits):
        acc = g2_double(acc)
        if d > 0:
            acc = g2_add(acc, tab[d >> 1])
        elif d < 0:
            acc = g2_add(acc, g2_neg(tab[(-d) >> 1]))
    return acc


def g2_psi(a):
    """Untwist-Frobenius endomorphism on the twist (acts as [P] on G2)."""
    x, y, z = a
    return (
        f2_mul(f2_conj(x), XI_TO_P_MINUS1_OVER3),
        f2_mul(f2_conj(y), XI_TO_P_MINUS1_OVER2),
        f2_conj(z),
    )


_PSI_EIGENVALUE = 6 * U * U  # == P mod R; the order-R eigenspace of psi


def g2_in_subgroup(a):
    """Membership in the order-R subgroup, for points already on the twist.

    psi has eigenvalue 6U^2 exactly on the order-R eigenspace, and
    P - 6U^2 == R with gcd(R, H2) == 1, so a single eigenvalue check
    replaces the full [R]Q == O test.
    """
    if f2_is_zero(a[2]):
        return True
    return g2_eq(g2_psi(a), g2_mul_small(a, _PSI_EIGENVALUE))


def g2_mul_small(a, k):
    """Scalar multiple without the mod-R reduction (for cofactor/eigen work)."""
    if k == 0 or f2_is_zero(a[2]):
        return G2_INF
    digits = _wnaf(int(k), 5)
    base = g2_affine(a)
    tab = [g2_from_affine(base)]
    twice = g2_double(tab[0])
    for _ in range(7):
        tab.append(g2_add(tab[-1], twice))
    acc = G2_INF
    for d in reversed(digits):
        acc = g2_double(acc)
        if d > 0:
            acc = g2_add(acc, tab[d >> 1])
        elif d < 0:
            acc = g2_add(acc, g2_neg(tab[(-d) >> 1]))
    return acc


# ---------------------------------------------------------------------------
# Batch normalization and fixed-base tables


def _batch_affine_g1(points):
    nz = [(i, pt) for i, pt in enumerate(points) if pt[2] != 0]
    if not nz:
        return [None] * len(points)
    acc = mpz(1)
    prefix = []
    for _, pt in nz:
        prefix.append(acc)
        acc = acc * pt[2] % P
    inv = invert(acc, P)
    out = [None] * len(points)
    for (i, pt), pre in zip(reversed(nz), reversed(prefix)):
        zinv = inv * pre % P
        inv = inv * pt[2] % P
        zinv2 = zinv * zinv % P
        out[i] = (pt[0] * zinv2 % P, pt[1] * zinv2 * zinv % P)
    return out


def _batch_affine_g2(points):
    nz = [(i, pt) for i, pt in enumerate(points) if not f2_is_zero(pt[2])]
    if not nz:
        return [None] * len(points)
    acc = (mpz(0), mpz(1))
    prefix = []
    for _, pt in nz:
        prefix.append(acc)
        acc = f2_mul(acc, pt[2])
    inv = f2_inv(acc)
    out = [None] * len(points)
    for (i, pt), pre in zip(reversed(nz), reversed(prefix)):
        zinv = f2_mul(inv, pre)
        inv = f2_mul(inv, pt[2])
        zinv2 = f2_sqr(zinv)
        out[i] = (f2_mul(pt[0], zinv2), f2_mul(f2_mul(pt[1], zinv2), zinv))
    return out


class FixedBaseTable:
    """Per-base precomputation: T[c][d-1] = (d * 16^c) * base, entries affine.

    mul(k) evaluates base*k with at most 64 mixed additions and no doublings.
    """

    __slots__ = ("_tab", "_add_mixed", "_inf")

    CHUNKS = 64  # ceil(254 / 4)

    def __init__(self, base_jac, group):
        if group == 1:
            dbl, add, batch, inf = g1_double, g1_add, _batch_affine_g1, G1_INF
            self._add_mixed = g1_add_mixed
        else:
            dbl, add, batch, inf = g2_double, g2_add, _batch_affine_g2, G2_INF
            self._add_mixed = g2_add_mixed
        self._inf = inf
        flat = []
        chunk_base = base_jac
        for _ in range(self.CHUNKS):
            entry = chunk_base
            for _ in range(15):
                flat.append(entry)
                entry = add(entry, chunk_base)
            chunk_base = dbl(dbl(dbl(dbl(chunk_base))))
        aff = batch(flat)
        self._tab = [aff[c * 15 : (c + 1) * 15] for c in range(self.CHUNKS)]

    def mul(self, k):
        k = int(k) % int(R)
        acc = self._inf
        add_mixed = self._add_mixed
        tab = self._tab
        c = 0
        while k:
            d = k & 15
            if d:
                entry = tab[c][d - 1]
                if entry is not None:
                    acc = add_mixed(acc, entry)
            k >>= 4
            c += 1
        return acc


# ---------------------------------------------------------------------------
# Hash-to-point (try and increment; deterministic, not constant-time)


def _digest(tag, data, counter, branch):
    h = hashlib.sha256()
    h.update(tag)
    h.update(len(data).to_bytes(4, "big"))
    h.update(data)
    h.update(bytes((counter, branch)))
    return h.digest()


def hash_to_g1(tag, data):
    for counter in range(256):
        d = _digest(tag, data, counter, 0)
        x = mpz(int.from_bytes(d, "big") % P)
        y2 = (x * x % P * x + B1) % P
        y = powmod(y2, (P + 1) // 4, P)
        if y * y % P != y2:
            continue
        if (int(y) & 1) != (d[0] & 1):
            y = (-y) % P
        return (x, y, mpz(1))
    raise AssertionError("hash_to_g1 failed to find a point in 256 tries")


def hash_to_g2(tag, data):
    for counter in range(256):
        di = _digest(tag, data, counter, 1)
        dr = _digest(tag, data, counter, 2)
        x = (
            mpz(int.from_bytes(di, "big") % P),
            mpz(int.from_bytes(dr, "big") % P),
        )
        y2 = f2_add(f2_mul(f2_sqr(x), x), B2)
        y = f2_sqrt(y2)
        if y is None:
            continue
        if (int(y[1]) & 1) != (di[0] & 1):
            y = f2_neg(y)
        pt = g2_mul_small((x, y, (mpz(0), mpz(1))), H2)  # clear cofactor
        if f2_is_zero(pt[2]):
            continue
        return pt
    raise AssertionError("hash_to_g2 failed to find a point in 256 tries")


# ---------------------------------------------------------------------------
# Compression: G1 = 32 bytes, G2 = 64 bytes.  Top two bits of the first byte
# carry flags: 0x80 = infinity, 0x40 = sign of y.


class PointDecodeError(ValueError):
    pass


def _g2_sign(y):
    yi, yr = y
    return int(yr) & 1 if yr != 0 else int(yi) & 1


def g1_to_bytes(a):
    aff = g1_affine(a)
    if aff is None:
        return bytes([0x80]) + b"\x00" * 31
    x, y = aff
    buf = bytearray(int(x).to_bytes(32, "big"))
    if int(y) & 1:
        buf[0] |= 0x40
    return bytes(buf)


def g1_from_bytes(data):
    if len(data) != 32:
        raise PointDecodeError("G1 encoding must be 32 bytes")
    flags = data[0] & 0xC0
    if flags & 0x80:
        if data != bytes([0x80]) + b"\x00" * 31:
            raise PointDecodeError("malformed G1 infinity encoding")
        return G1_INF
    x = mpz(int.from_bytes(bytes([data[0] & 0x3F]) + data[1:], "big"))
    if x >= P:
        raise PointDecodeError("G1 x coordinate out of range")
    y2 = (x * x % P * x + B1) % P
    y = powmod(y2, (P + 1) // 4, P)
    if y * y % P != y2:
        raise PointDecodeError("G1 x coordinate not on curve")
    if (int(y) & 1) != bool(flags & 0x40):
        y = (-y) % P
    return (x, y, mpz(1))


def g2_to_bytes(a):
    aff = g2_affine(a)
    if aff is None:
        return bytes([0x80]) + b"\x00" * 63
    (xi, xr), y = aff
    buf = bytearray(int(xi).to_bytes(32, "big") + int(xr).to_bytes(32, "big"))
    if _g2_sign(y):
        buf[0] |= 0x40
    return bytes(buf)


def g2_from_bytes(data):
    if len(data) != 64:
        raise PointDecodeError("G2 encoding must be 64 bytes")
    flags = data[0] & 0xC0
    if flags & 0x80:
        if data != bytes([0x80]) + b"\x00" * 63:
            raise PointDecodeError("malformed G2 infinity encoding")
        return G2_INF
    xi = mpz(int.from_bytes(bytes([data[0] & 0x3F]) + data[1:32], "big"))
    xr = mpz(int.from_bytes(data[32:], "big"))
    if xi >= P or xr >= P:
        raise PointDecodeError("G2 x coordinate out of range")
    x = (xi, xr)
    y2 = f2_add(f2_mul(f2_sqr(x), x), B2)
    y = f2_sqrt(y2)
    if y is None:
        raise PointDecodeError("G2 x coordinate not on twist")
    if _g2_sign(y) != bool(flags & 0x40):
        y = f2_neg(y)
    pt = (x, y, (mpz(0), mpz(1)))
    if not g2_in_subgroup(pt):
        raise PointDecodeError("G2 point not in the prime-order subgroup")
    return pt
