"""Optimal ate pairing over BN254 and target-group (GT) utilities.

e(P, Q) with P in G1 and Q in G2 is computed as a Miller loop over the
signed binary expansion of 6U+2 followed by the two Frobenius correction
steps and the final exponentiation (easy part + hard-part addition chain).

multi_pairing evaluates prod_i e(P_i, Q_i) with one shared accumulator
squaring per loop iteration and a single final exponentiation.

GT elements are Fp12 tuples in the cyclotomic subgroup (every value
produced here is a final-exponentiation output or a product/power of
them), so inversion is conjugation and squaring uses the cyclotomic
formulas.
"""

from gmpy2 import mpz

from .fields import (
    P,
    R,
    U,
    F2_ZERO,
    F12_ONE,
    f2_add,
    f2_conj,
    f2_is_zero,
    f2_mul,
    f2_mul_scalar,
    f2_neg,
    f2_sqr,
    f2_sub,
    f6_add,
    f6_mul,
    f6_mul_f2,
    f6_mul_tau,
    f6_sub,
    f12_conj,
    f12_cyclotomic_sqr,
    f12_exp,
    f12_frobenius,
    f12_frobenius_p2,
    f12_inv,
    f12_mul,
    f12_sqr,
    XI_TO_P_MINUS1_OVER2,
    XI_TO_P_MINUS1_OVER3,
    XI_TO_PSQ_MINUS1_OVER3,
)
from .curve import g1_affine, g2_affine, g1_is_inf, g2_is_inf

# Signed expansion of 6U+2 consumed by the Miller loop, least-significant
# digit first; the leading 1 (index 64) seeds the loop accumulator.
SIX_U_PLUS_2_NAF = [
    0, 0, 0, 1, 0, 1, 0, -1, 0, 0, 1, -1, 0, 0, 1, 0,
    0, 1, 1, 0, -1, 0, 0, 1, 0, -1, 0, 0, 0, 0, 1, 1,
    1, 0, 0, -1, 0, 0, 1, 0, 0, 0, 0, 0, -1, 0, 0, 1,
    1, 0, 0, -1, 0, 0, 0, 1, 1, 0, -1, 0, 0, 1, 0, 1, 1,
]

_acc = 1
for _i in range(len(SIX_U_PLUS_2_NAF) - 1, 0, -1):
    _acc = 2 * _acc + SIX_U_PLUS_2_NAF[_i - 1]
assert _acc == 6 * U + 2, "Miller loop encoding does not reconstruct 6U+2"
del _acc, _i


def _line_double(r, p_aff):
    """Doubling step: line through T,T evaluated at the G1 point p_aff.

    r is (X, Y, Z, T=Z^2) on the twist; returns (a, b, c, r_out).
    """
    px, py = p_aff
    A = f2_sqr(r[0])
    B = f2_sqr(r[1])
    C = f2_sqr(B)

    D = f2_add(r[0], B)
    D = f2_sqr(D)
    D = f2_sub(D, A)
    D = f2_sub(D, C)
    D = f2_add(D, D)

    E = f2_add(f2_add(A, A), A)
    F = f2_sqr(E)

    C8 = f2_add(C, C)
    C8 = f2_add(C8, C8)
    C8 = f2_add(C8, C8)

    rX = f2_sub(F, f2_add(D, D))
    rY = f2_sub(f2_mul(E, f2_sub(D, rX)), C8)
    rZ = f2_sqr(f2_add(r[1], r[2]))
    rZ = f2_sub(f2_sub(rZ, B), r[3])

    a = f2_sqr(f2_add(r[0], E))
    B4 = f2_add(B, B)
    B4 = f2_add(B4, B4)
    a = f2_sub(a, f2_add(A, f2_add(F, B4)))

    t = f2_mul(E, r[3])
    t = f2_add(t, t)
    b = f2_mul_scalar(f2_neg(t), px)

    c = f2_mul(rZ, r[3])
    c = f2_add(c, c)
    c = f2_mul_scalar(c, py)

    rT = f2_sqr(rZ)
    return a, b, c, (rX, rY, rZ, rT)


def _line_add(r, q_aff4, p_aff, r2):
    """Addition step: line through T and Q evaluated at p_aff.

    q_aff4 is (x, y, 1, 1) affine on the twist; r2 = y^2 precomputed.
    """
    px, py = p_aff
    B = f2_mul(q_aff4[0], r[3])
    D = f2_add(q_aff4[1], r[2])
    D = f2_sqr(D)
    D = f2_sub(D, r2)
    D = f2_sub(D, r[3])
    D = f2_mul(D, r[3])

    H = f2_sub(B, r[0])
    I = f2_sqr(H)

    E = f2_add(I, I)
    E = f2_add(E, E)

    J = f2_mul(H, E)

    L1 = f2_sub(D, r[1])
    L1 = f2_sub(L1, r[1])

    V = f2_mul(r[0], E)

    rX = f2_sqr(L1)
    rX = f2_sub(rX, J)
    rX = f2_sub(rX, f2_add(V, V))

    rZ = f2_add(r[2], H)
    rZ = f2_sqr(rZ)
    rZ = f2_sub(rZ, r[3])
    rZ = f2_sub(rZ, I)

    t = f2_sub(V, rX)
    t = f2_mul(t, L1)
    t2 = f2_mul(r[1], J)
    t2 = f2_add(t2, t2)
    rY = f2_sub(t, t2)
    rT = f2_sqr(rZ)

    t = f2_add(q_aff4[1], rZ)
    t = f2_sqr(t)
    t = f2_sub(t, r2)
    t = f2_sub(t, rT)

    t2 = f2_mul(L1, q_aff4[0])
    t2 = f2_add(t2, t2)
    a = f2_sub(t2, t)

    c = f2_mul_scalar(rZ, py)
    c = f2_add(c, c)

    b = f2_neg(L1)
    b = f2_mul_scalar(b, px)
    b = f2_add(b, b)

    return a, b, c, (rX, rY, rZ, rT)


def _mul_line(ret, a, b, c):
    """ret * (the sparse Fp12 line value with coefficients a, b, c)."""
    a2 = f6_mul((F2_ZERO, a, b), ret[0])
    t3 = f6_mul_f2(ret[1], c)
    t = f2_add(b, c)
    t2 = (F2_ZERO, a, t)
    rX = f6_add(ret[0], ret[1])
    rY = t3
    rX = f6_mul(rX, t2)
    rX = f6_sub(rX, a2)
    rX = f6_sub(rX, rY)
    a2 = f6_mul_tau(a2)
    rY = f6_add(rY, a2)
    return (rX, rY)


def _frobenius_endpoints(q_aff):
    """The two correction points pi(Q) and -pi^2(Q) in (x, y, 1, 1) form."""
    one = (mpz(0), mpz(1))
    q1 = (
        f2_mul(f2_conj(q_aff[0]), XI_TO_P_MINUS1_OVER3),
        f2_mul(f2_conj(q_aff[1]), XI_TO_P_MINUS1_OVER2),
        one,
        one,
    )
    minus_q2 = (
        f2_mul_scalar(q_aff[0], XI_TO_PSQ_MINUS1_OVER3),
        q_aff[1],
        one,
        one,
    )
    return q1, minus_q2


def multi_miller(pairs):
    """Product of Miller loops for [(g1_point, g2_point), ...] (Jacobian)."""
    state = []
    for p_pt, q_pt in pairs:
        if g1_is_inf(p_pt) or g2_is_inf(q_pt):
            continue
        p_aff = g1_affine(p_pt)
        q_aff = g2_affine(q_pt)
        one = (mpz(0), mpz(1))
        q4 = (q_aff[0], q_aff[1], one, one)
        minus_q4 = (q_aff[0], f2_neg(q_aff[1]), one, one)
        r2 = f2_sqr(q_aff[1])
        state.append([p_aff, q4, minus_q4, r2, q4])  # last slot = running T
    if not state:
        return F12_ONE

    ret = F12_ONE
    first = True
    for i in range(len(SIX_U_PLUS_2_NAF) - 1, 0, -1):
        if not first:
            ret = f12_sqr(ret)
        first = False
        s = SIX_U_PLUS_2_NAF[i - 1]
        for st in state:
            p_aff, q4, minus_q4, r2, r = st
            a, b, c, r = _line_double(r, p_aff)
            ret = _mul_line(ret, a, b, c)
            if s == 1:
                a, b, c, r = _line_add(r, q4, p_aff, r2)
                ret = _mul_line(ret, a, b, c)
            elif s == -1:
                a, b, c, r = _line_add(r, minus_q4, p_aff, r2)
                ret = _mul_line(ret, a, b, c)
            st[4] = r

    for st in state:
        p_aff, q4, _minus_q4, _r2, r = st
        q1, minus_q2 = _frobenius_endpoints((q4[0], q4[1]))
        r2 = f2_sqr(q1[1])
        a, b, c, r = _line_add(r, q1, p_aff, r2)
        ret = _mul_line(ret, a, b, c)
        r2 = f2_sqr(minus_q2[1])
        a, b, c, r = _line_add(r, minus_q2, p_aff, r2)
        ret = _mul_line(ret, a, b, c)
    return ret


_U_BITS = tuple(int(b) for b in bin(int(U))[3:])  # bits of U below the leading 1


def _cyclo_exp_u(a):
    # a^U for unitary a: square-and-multiply with cyclotomic squarings
    acc = a
    for b in _U_BITS:
        acc = f12_cyclotomic_sqr(acc)
        if b:
            acc = f12_mul(acc, a)
    return acc


def final_exponentiation(f):
    t1 = f12_conj(f)
    inv = f12_inv(f)
    t1 = f12_mul(t1, inv)  # f^(p^6 - 1)
    t2 = f12_frobenius_p2(t1)
    t1 = f12_mul(t1, t2)  # ^(p^2 + 1); unitary from here on

    fp = f12_frobenius(t1)
    fp2 = f12_frobenius_p2(t1)
    fp3 = f12_frobenius(fp2)

    fu = _cyclo_exp_u(t1)
    fu2 = _cyclo_exp_u(fu)
    fu3 = _cyclo_exp_u(fu2)

    y3 = f12_frobenius(fu)
    fu2p = f12_frobenius(fu2)
    fu3p = f12_frobenius(fu3)
    y2 = f12_frobenius_p2(fu2)

    y0 = f12_mul(f12_mul(fp, fp2), fp3)
    y1 = f12_conj(t1)
    y5 = f12_conj(fu2)
    y3 = f12_conj(y3)
    y4 = f12_conj(f12_mul(fu, fu2p))
    y6 = f12_conj(f12_mul(fu3, fu3p))

    t0 = f12_mul(f12_cyclotomic_sqr(y6), y4)
    t0 = f12_mul(t0, y5)
    t1 = f12_mul(y3, y5)
    t1 = f12_mul(t1, t0)
    t0 = f12_mul(t0, y2)
    t1 = f12_cyclotomic_sqr(t1)
    t1 = f12_mul(t1, t0)
    t1 = f12_cyclotomic_sqr(t1)
    t0 = f12_mul(t1, y1)
    t1 = f12_mul(t1, y0)
    t0 = f12_cyclotomic_sqr(t0)
    return f12_mul(t0, t1)


def pairing(p_pt, q_pt):
    """e(P, Q) for P in G1 (Jacobian), Q in G2 (Jacobian on the twist)."""
    return final_exponentiation(multi_miller([(p_pt, q_pt)]))


def multi_pairing(pairs):
    return final_exponentiation(multi_miller(pairs))


# ---------------------------------------------------------------------------
# GT = the order-R cyclotomic subgroup of Fp12*


GT_ONE = F12_ONE


def gt_mul(a, b):
    return f12_mul(a, b)


def gt_inv(a):
    # unitary elements: inverse == conjugate
    return f12_conj(a)


def gt_exp(a, k):
    k = int(k) % int(R)
    if k == 0:
        return F12_ONE
    # 4-bit wNAF with conjugation for negative digits
    digits = []
    n = k
    while n:
        if n & 1:
            d = n & 15
            if d >= 8:
                d -= 16
            n -= d
        else:
            d = 0
        digits.append(d)
        n >>= 1
    tab = [a]  # odd powers a^1, a^3, a^5, a^7
    sq = f12_cyclotomic_sqr(a)
    for _ in range(3):
        tab.append(f12_mul(tab[-1], sq))
    acc = None
    for d in reversed(digits):
        if acc is not None:
            acc = f12_cyclotomic_sqr(acc)
        if d > 0:
            acc = tab[d >> 1] if acc is None else f12_mul(acc, tab[d >> 1])
        elif d < 0:
            neg = f12_conj(tab[(-d) >> 1])
            acc = neg if acc is None else f12_mul(acc, neg)
    return acc


def gt_multi_exp(bases, exps):
    """prod bases[i]^exps[i] with one shared run of squarings.

    Each base gets its own 4-bit wNAF digit stream and small odd-power
    table; the squaring chain down the digit positions is shared, so k
    exponentiations cost ~254 squarings total instead of ~254k.
    """
    items = []
    maxlen = 0
    for a, k in zip(bases, exps):
        k = int(k) % int(R)
        if k == 0:
            continue
        digits = []
        n = k
        while n:
            if n & 1:
                d = n & 15
                if d >= 8:
                    d -= 16
                n -= d
            else:
                d = 0
            digits.append(d)
            n >>= 1
        tab = [a]
        sq = f12_cyclotomic_sqr(a)
        for _ in range(3):
            tab.append(f12_mul(tab[-1], sq))
        items.append((digits, tab))
        maxlen = max(maxlen, len(digits))
    acc = None
    for i in range(maxlen - 1, -1, -1):
        if acc is not None:
            acc = f12_cyclotomic_sqr(acc)
        for digits, tab in items:
            if i < len(digits):
                d = digits[i]
                if d == 0:
                    continue
                t = tab[d >> 1] if d > 0 else f12_conj(tab[(-d) >> 1])
                acc = t if acc is None else f12_mul(acc, t)
    return F12_ONE if acc is None else acc


def gt_is_one(a):
    return a == F12_ONE


class GtFixedBaseTable:
    """T[c][d-1] = base^(d * 16^c); exponentiation by <= 63 Fp12 products."""

    __slots__ = ("_tab",)

    CHUNKS = 64

    def __init__(self, base):
        tab = []
        chunk_base = base
        for _ in range(self.CHUNKS):
            row = []
            entry = chunk_base
            for _ in range(15):
                row.append(entry)
                entry = f12_mul(entry, chunk_base)
            tab.append(row)
            chunk_base = f12_cyclotomic_sqr(
                f12_cyclotomic_sqr(f12_cyclotomic_sqr(f12_cyclotomic_sqr(chunk_base)))
            )
        self._tab = tab

    def exp(self, k):
        k = int(k) % int(R)
        acc = None
        tab = self._tab
        c = 0
        while k:
            d = k & 15
            if d:
                entry = tab[c][d - 1]
                acc = entry if acc is None else f12_mul(acc, entry)
            k >>= 4
            c += 1
        return F12_ONE if acc is None else acc


# ---------------------------------------------------------------------------
# Canonical GT serialization: the twelve Fp coefficients big-endian, in
# tower order ((xx, xy, xz), (yx, yy, yz)) with each Fp2 as (im, re).


def f12_to_bytes(a):
    out = bytearray()
    for half in a:
        for coeff in half:
            out += int(coeff[0]).to_bytes(32, "big")
            out += int(coeff[1]).to_bytes(32, "big")
    return bytes(out)


def f12_from_bytes(data):
    if len(data) != 384:
        raise ValueError("GT encoding must be 384 bytes")
    vals = []
    for i in range(12):
        v = mpz(int.from_bytes(data[i * 32 : (i + 1) * 32], "big"))
        if v >= P:
            raise ValueError("GT coefficient out of range")
        vals.append(v)
    halves = []
    for h in range(2):
        coeffs = []
        for c in range(3):
            base = h * 6 + c * 2
            coeffs.append((vals[base], vals[base + 1]))
        halves.append(tuple(coeffs))
    return (halves[0], halves[1])
