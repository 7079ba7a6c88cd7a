"""Tower-field arithmetic for the BN254 pairing backend.

Layout conventions (fixed; everything downstream depends on them):

  Fp   : gmpy2.mpz reduced mod P.
  Fp2  : tuple (x, y) meaning x*i + y with i^2 = -1 (imaginary part first).
  Fp6  : tuple (x, y, z) meaning x*v^2 + y*v + z, with v^3 = XI = 9 + i.
  Fp12 : tuple (x, y) meaning x*w + y, with w^2 = v.

All functions are free functions over plain tuples; hot paths inline the
Fp2 arithmetic to keep interpreter overhead down.  Nothing in this module
is constant-time and none of it is meant to be.
"""

from gmpy2 import mpz, invert, powmod

# BN254 ("alt_bn128") parameters.
P = mpz(21888242871839275222246405745257275088696311157297823662689037894645226208583)
R = mpz(21888242871839275222246405745257275088548364400416034343698204186575808495617)
U = mpz(4965661367192848881)  # BN loop parameter; 36u^4 + 36u^3 + 24u^2 + 6u + 1 = r

XI = (mpz(1), mpz(9))  # the sextic non-residue 9 + i

_ZERO = mpz(0)
_ONE = mpz(1)

F2_ZERO = (_ZERO, _ZERO)
F2_ONE = (_ZERO, _ONE)
F6_ZERO = (F2_ZERO, F2_ZERO, F2_ZERO)
F6_ONE = (F2_ZERO, F2_ZERO, F2_ONE)
F12_ZERO = (F6_ZERO, F6_ZERO)
F12_ONE = (F6_ZERO, F6_ONE)


# ---------------------------------------------------------------------------
# Fp2


def f2_add(a, b):
    return ((a[0] + b[0]) % P, (a[1] + b[1]) % P)


def f2_sub(a, b):
    return ((a[0] - b[0]) % P, (a[1] - b[1]) % P)


def f2_neg(a):
    return ((-a[0]) % P, (-a[1]) % P)


def f2_conj(a):
    return ((-a[0]) % P, a[1])


def f2_mul(a, b):
    ax, ay = a
    bx, by = b
    # Karatsuba: im = (ax+ay)(bx+by) - axbx - ayby, re = ayby - axbx
    t1 = ax * bx
    t2 = ay * by
    return (((ax + ay) * (bx + by) - t1 - t2) % P, (t2 - t1) % P)


def f2_sqr(a):
    ax, ay = a
    return ((ax * ay * 2) % P, ((ay + ax) * (ay - ax)) % P)


def f2_mul_scalar(a, s):
    return ((a[0] * s) % P, (a[1] * s) % P)


def f2_mul_xi(a):
    # multiply by XI = 9 + i: (x*i + y)(i + 9) = (9x + y)i + (9y - x)
    ax, ay = a
    return ((ax * 9 + ay) % P, (ay * 9 - ax) % P)


def f2_inv(a):
    ax, ay = a
    norm = (ax * ax + ay * ay) % P
    inv = invert(norm, P)
    return ((-ax * inv) % P, (ay * inv) % P)


def f2_exp(a, e):
    result = F2_ONE
    for bit in bin(int(e))[2:]:
        result = f2_sqr(result)
        if bit == "1":
            result = f2_mul(result, a)
    return result


def f2_is_zero(a):
    return a[0] == 0 and a[1] == 0


def f2_legendre(a):
    """1 if a is a nonzero square in Fp2, -1 if non-square, 0 if zero."""
    if f2_is_zero(a):
        return 0
    norm = (a[0] * a[0] + a[1] * a[1]) % P
    return 1 if powmod(norm, (P - 1) // 2, P) == 1 else -1


def f2_sqrt(a):
    """Square root in Fp2 for P = 3 mod 4, or None if a is a non-square."""
    ax, ay = a
    if ax == 0:
        # element lies in Fp
        if powmod(ay, (P - 1) // 2, P) <= 1:
            return (_ZERO, powmod(ay, (P + 1) // 4, P))
        # ay is a non-square in Fp, so sqrt = i * sqrt(-ay)
        return (powmod((-ay) % P, (P + 1) // 4, P), _ZERO)
    alpha = (ax * ax + ay * ay) % P  # norm
    s = powmod(alpha, (P + 1) // 4, P)
    if (s * s - alpha) % P != 0:
        return None
    delta = (ay + s) * invert(2, P) % P
    if powmod(delta, (P - 1) // 2, P) > 1:
        delta = (delta - s) % P
    y0 = powmod(delta, (P + 1) // 4, P)
    if y0 == 0:
        return None
    x0 = ax * invert(2 * y0 % P, P) % P
    cand = (x0, y0)
    return cand if f2_sqr(cand) == (ax % P, ay % P) else None


# ---------------------------------------------------------------------------
# Fp6 = Fp2[v]/(v^3 - XI), coefficient order (x, y, z) = x*v^2 + y*v + z


def f6_add(a, b):
    return (f2_add(a[0], b[0]), f2_add(a[1], b[1]), f2_add(a[2], b[2]))


def f6_sub(a, b):
    return (f2_sub(a[0], b[0]), f2_sub(a[1], b[1]), f2_sub(a[2], b[2]))


def f6_neg(a):
    return (f2_neg(a[0]), f2_neg(a[1]), f2_neg(a[2]))


def f6_mul(a, b):
    # Karatsuba with 6 Fp2 multiplications, Fp2 arithmetic inlined.
    ax, ay, az = a
    bx, by, bz = b

    axi, axr = ax
    ayi, ayr = ay
    azi, azr = az
    bxi, bxr = bx
    byi, byr = by
    bzi, bzr = bz

    # v0 = az*bz, v1 = ay*by, v2 = ax*bx
    t1 = azi * bzi
    t2 = azr * bzr
    v0 = (((azi + azr) * (bzi + bzr) - t1 - t2) % P, (t2 - t1) % P)
    t1 = ayi * byi
    t2 = ayr * byr
    v1 = (((ayi + ayr) * (byi + byr) - t1 - t2) % P, (t2 - t1) % P)
    t1 = axi * bxi
    t2 = axr * bxr
    v2 = (((axi + axr) * (bxi + bxr) - t1 - t2) % P, (t2 - t1) % P)

    # z = v0 + xi*((ay+ax)(by+bx) - v1 - v2)
    s0i, s0r = (ayi + axi), (ayr + axr)
    s1i, s1r = (byi + bxi), (byr + bxr)
    t1 = s0i * s1i
    t2 = s0r * s1r
    mi = ((s0i + s0r) * (s1i + s1r) - t1 - t2 - v1[0] - v2[0]) % P
    mr = (t2 - t1 - v1[1] - v2[1]) % P
    rz = ((mi * 9 + mr + v0[0]) % P, (mr * 9 - mi + v0[1]) % P)

    # y = (az+ay)(bz+by) - v0 - v1 + xi*v2
    s0i, s0r = (azi + ayi), (azr + ayr)
    s1i, s1r = (bzi + byi), (bzr + byr)
    t1 = s0i * s1i
    t2 = s0r * s1r
    mi = ((s0i + s0r) * (s1i + s1r) - t1 - t2 - v0[0] - v1[0]) % P
    mr = (t2 - t1 - v0[1] - v1[1]) % P
    ry = ((mi + v2[0] * 9 + v2[1]) % P, (mr + v2[1] * 9 - v2[0]) % P)

    # x = (az+ax)(bz+bx) - v0 - v2 + v1
    s0i, s0r = (azi + axi), (azr + axr)
    s1i, s1r = (bzi + bxi), (bzr + bxr)
    t1 = s0i * s1i
    t2 = s0r * s1r
    rx = (
        ((s0i + s0r) * (s1i + s1r) - t1 - t2 - v0[0] - v2[0] + v1[0]) % P,
        (t2 - t1 - v0[1] - v2[1] + v1[1]) % P,
    )
    return (rx, ry, rz)


def f6_sqr(a):
    ax, ay, az = a
    s0 = f2_sqr(az)
    ab = f2_mul(az, ay)
    s1 = f2_add(ab, ab)
    s2 = f2_sqr(f2_add(f2_sub(az, ay), ax))
    bc = f2_mul(ay, ax)
    s3 = f2_add(bc, bc)
    s4 = f2_sqr(ax)
    rz = f2_add(s0, f2_mul_xi(s3))
    ry = f2_add(s1, f2_mul_xi(s4))
    rx = f2_sub(f2_add(f2_add(s1, s2), s3), f2_add(s0, s4))
    return (rx, ry, rz)


def f6_mul_tau(a):
    """Multiply by v:  (x v^2 + y v + z) * v = y v^2 + z v + x*XI."""
    return (a[1], a[2], f2_mul_xi(a[0]))


def f6_mul_f2(a, s):
    return (f2_mul(a[0], s), f2_mul(a[1], s), f2_mul(a[2], s))


def f6_mul_scalar(a, s):
    return (f2_mul_scalar(a[0], s), f2_mul_scalar(a[1], s), f2_mul_scalar(a[2], s))


def f6_inv(a):
    ax, ay, az = a
    A = f2_sub(f2_sqr(az), f2_mul_xi(f2_mul(ax, ay)))
    B = f2_sub(f2_mul_xi(f2_sqr(ax)), f2_mul(az, ay))
    C = f2_sub(f2_sqr(ay), f2_mul(az, ax))
    F = f2_add(f2_mul_xi(f2_add(f2_mul(ax, B), f2_mul(ay, C))), f2_mul(az, A))
    Finv = f2_inv(F)
    return (f2_mul(C, Finv), f2_mul(B, Finv), f2_mul(A, Finv))


def f6_frobenius(a):
    return (
        f2_mul(f2_conj(a[0]), XI_TO_2P_MINUS2_OVER3),
        f2_mul(f2_conj(a[1]), XI_TO_P_MINUS1_OVER3),
        f2_conj(a[2]),
    )


def f6_frobenius_p2(a):
    return (
        f2_mul_scalar(a[0], XI_TO_2PSQ_MINUS2_OVER3),
        f2_mul_scalar(a[1], XI_TO_PSQ_MINUS1_OVER3),
        a[2],
    )


# ---------------------------------------------------------------------------
# Fp12 = Fp6[w]/(w^2 - v), coefficient order (x, y) = x*w + y


def f12_mul(a, b):
    ax, ay = a
    bx, by = b
    txx = f6_mul(ax, bx)
    tyy = f6_mul(ay, by)
    rx = f6_sub(f6_sub(f6_mul(f6_add(ax, ay), f6_add(bx, by)), txx), tyy)
    ry = f6_add(f6_mul_tau(txx), tyy)
    return (rx, ry)


def f12_sqr(a):
    ax, ay = a
    t = f6_mul(ax, ay)
    ry = f6_sub(f6_sub(f6_mul(f6_add(ax, ay), f6_add(f6_mul_tau(ax), ay)), t), f6_mul_tau(t))
    rx = f6_add(t, t)
    return (rx, ry)


def f12_conj(a):
    return (f6_neg(a[0]), a[1])


def f12_inv(a):
    ax, ay = a
    t = f6_inv(f6_sub(f6_sqr(ay), f6_mul_tau(f6_sqr(ax))))
    return (f6_neg(f6_mul(ax, t)), f6_mul(ay, t))


def f12_frobenius(a):
    return (f6_mul_f2(f6_frobenius(a[0]), XI_TO_P_MINUS1_OVER6), f6_frobenius(a[1]))


def f12_frobenius_p2(a):
    return (f6_mul_scalar(f6_frobenius_p2(a[0]), XI_TO_PSQ_MINUS1_OVER6), f6_frobenius_p2(a[1]))


def f12_exp(a, e):
    """Plain square-and-multiply; use pairing.gt_exp for cyclotomic elements."""
    result = F12_ONE
    for bit in bin(int(e))[2:]:
        result = f12_sqr(result)
        if bit == "1":
            result = f12_mul(result, a)
    return result


def f12_cyclotomic_sqr(a):
    """Squaring for elements of the cyclotomic subgroup (unitary elements only).

    Granger-Scott formulas over the three Fp4 sub-slices; roughly twice as
    fast as f12_sqr.  Invalid for general Fp12 elements.
    """
    (xx, xy, xz), (yx, yy, yz) = a
    # gnark-style coordinates: x0=yz x1=yy x2=yx x3=xz x4=xy x5=xx
    t0 = f2_sqr(xy)
    t1 = f2_sqr(yz)
    t6 = f2_sub(f2_sqr(f2_add(xy, yz)), f2_add(t0, t1))  # 2*x4*x0
    t2 = f2_sqr(yx)
    t3 = f2_sqr(xz)
    t7 = f2_sub(f2_sqr(f2_add(yx, xz)), f2_add(t2, t3))  # 2*x2*x3
    t4 = f2_sqr(xx)
    t5 = f2_sqr(yy)
    t8 = f2_mul_xi(f2_sub(f2_sqr(f2_add(xx, yy)), f2_add(t4, t5)))  # 2*x5*x1*xi

    t0 = f2_add(f2_mul_xi(t0), t1)  # xi*x4^2 + x0^2
    t2 = f2_add(f2_mul_xi(t2), t3)  # xi*x2^2 + x3^2
    t4 = f2_add(f2_mul_xi(t4), t5)  # xi*x5^2 + x1^2

    rz0 = f2_add(f2_add(f2_sub(t0, yz), f2_sub(t0, yz)), t0)  # 3t0 - 2x0
    ry0 = f2_add(f2_add(f2_sub(t2, yy), f2_sub(t2, yy)), t2)  # 3t2 - 2x1
    rx0 = f2_add(f2_add(f2_sub(t4, yx), f2_sub(t4, yx)), t4)  # 3t4 - 2x2

    rz1 = f2_add(f2_add(f2_add(t8, xz), f2_add(t8, xz)), t8)  # 3t8 + 2x3
    ry1 = f2_add(f2_add(f2_add(t6, xy), f2_add(t6, xy)), t6)  # 3t6 + 2x4
    rx1 = f2_add(f2_add(f2_add(t7, xx), f2_add(t7, xx)), t7)  # 3t7 + 2x5

    return ((rx1, ry1, rz1), (rx0, ry0, rz0))


def f12_eq(a, b):
    return a == b


# ---------------------------------------------------------------------------
# Frobenius constants, computed from XI at import and cross-checked against
# the closed forms they must satisfy.


def _f2_exp_int(a, e):
    result = F2_ONE
    for bit in bin(int(e))[2:]:
        result = f2_sqr(result)
        if bit == "1":
            result = f2_mul(result, a)
    return result


XI_TO_P_MINUS1_OVER6 = _f2_exp_int(XI, (P - 1) // 6)
XI_TO_P_MINUS1_OVER3 = _f2_exp_int(XI, (P - 1) // 3)
XI_TO_P_MINUS1_OVER2 = _f2_exp_int(XI, (P - 1) // 2)
XI_TO_2P_MINUS2_OVER3 = f2_sqr(XI_TO_P_MINUS1_OVER6)  # == XI^((2p-2)/6) = XI^((p-1)/3)... see below

# XI^((2p-2)/3) for the v^2 coefficient of the Fp6 Frobenius:
XI_TO_2P_MINUS2_OVER3 = _f2_exp_int(XI, 2 * (P - 1) // 3)

# Frobenius^2 constants are norms and therefore live in Fp.
_t = _f2_exp_int(XI, (P * P - 1) // 3)
assert _t[0] == 0
XI_TO_PSQ_MINUS1_OVER3 = _t[1]
_t = _f2_exp_int(XI, 2 * (P * P - 1) // 3)
assert _t[0] == 0
XI_TO_2PSQ_MINUS2_OVER3 = _t[1]
_t = _f2_exp_int(XI, (P * P - 1) // 6)
assert _t[0] == 0
XI_TO_PSQ_MINUS1_OVER6 = _t[1]
del _t

# Sanity: the sextic relations the tower depends on.
assert f2_mul(XI_TO_P_MINUS1_OVER6, XI_TO_P_MINUS1_OVER3) == _f2_exp_int(XI, (P - 1) // 2)
assert (XI_TO_PSQ_MINUS1_OVER6 * XI_TO_PSQ_MINUS1_OVER6 - XI_TO_PSQ_MINUS1_OVER3) % P == 0
