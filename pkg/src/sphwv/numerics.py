"""Arbitrary-precision scalar arithmetic and classical special functions.

Everything here is built on mpmath (mpf/mpc); every public operation takes a
``prec`` argument in bits of mantissa and internally runs with a fixed number
of guard bits, rounding back on return.  The associated Legendre functions are
provided on both branches:

* ``branch="cut"``   -- Ferrers functions on (-1, 1), Condon-Shortley phase;
* ``branch="off"``   -- the (z^2 - 1)^(m/2) branch for real x > 1 and for
  complex z off the cut, with the principal square root.

Family evaluators return, for a whole range of degrees at fixed order, triples
(value, first derivative, second derivative); the second derivative comes from
the defining ODE, the first from differentiated recurrences.  Spherical Bessel
functions of the first kind use backward (minimal-solution) recurrence seeded
by a continued-fraction ratio; Neumann functions use forward recurrence.
"""
from __future__ import annotations

import math
from contextlib import contextmanager
from dataclasses import dataclass
from functools import lru_cache

from mpmath import mp, mpf, mpc, mpmathify

from .core import DomainError, ConvergenceError, EvalPair

#: Guard bits used by every series/recurrence evaluation.
GUARD_BITS = 32


@contextmanager
def working_prec(prec: int):
    """Run the enclosed computation at prec + GUARD_BITS bits."""
    with mp.workprec(prec + GUARD_BITS):
        yield


def round_to(x, prec: int):
    """Round x to prec bits."""
    with mp.workprec(prec):
        return +x


@lru_cache(maxsize=None)
def _ifact(n: int) -> int:
    return math.factorial(n)


def fact(n: int):
    """n! as an mpf at the current working precision."""
    if n < 0:
        raise DomainError(f"factorial of negative integer {n}")
    return mpf(_ifact(n))


@lru_cache(maxsize=None)
def _idfact(n: int) -> int:
    # double factorial, n!! with (-1)!! = 0!! = 1
    if n <= 0:
        return 1
    r = 1
    while n > 0:
        r *= n
        n -= 2
    return r


def double_fact(n: int):
    return mpf(_idfact(n))


# ---------------------------------------------------------------------------
# Continued fractions
# ---------------------------------------------------------------------------

def lentz(b0, a, b, prec: int, max_terms: int = 200000):
    """Evaluate b0 + K(a_k / b_k) by the modified Lentz algorithm.

    ``a`` and ``b`` are callables of the 1-based term index.  Converges when
    the per-step multiplier is within 2**-prec of 1.
    """
    tiny = mpf(2) ** (-(prec + GUARD_BITS) * 8 - 100)
    eps = mpf(2) ** (-prec)
    f = mpmathify(b0)
    if f == 0:
        f = tiny
    C = f
    D = mpf(0)
    for k in range(1, max_terms + 1):
        ak = a(k)
        bk = b(k)
        D = bk + ak * D
        if D == 0:
            D = tiny
        C = bk + ak / C
        if C == 0:
            C = tiny
        D = 1 / D
        delta = C * D
        f = f * delta
        if abs(delta - 1) < eps:
            return f
    raise ConvergenceError(
        f"continued fraction did not converge in {max_terms} terms")


# ---------------------------------------------------------------------------
# Banded linear solve (for the nonhomogeneous Olver-style recurrence method)
# ---------------------------------------------------------------------------

def solve_tridiagonal(sub, diag, sup, rhs):
    """Solve a tridiagonal system in exact working precision.

    Gaussian elimination with partial row pivoting (fill-in limited to one
    extra superdiagonal).  ``sub[i]`` couples row i to column i-1, ``sup[i]``
    couples row i to column i+1.
    """
    n = len(diag)
    # band storage: d[i] (col i), u1[i] (col i+1), u2[i] (col i+2)
    d = [mpmathify(v) for v in diag]
    u1 = [mpmathify(v) for v in sup] + [mpf(0)]
    u2 = [mpf(0)] * n
    lo = [mpmathify(v) for v in sub]
    y = [mpmathify(v) for v in rhs]
    for i in range(n - 1):
        pivot_next = lo[i + 1]
        if abs(pivot_next) > abs(d[i]):
            d[i], pivot_next = pivot_next, d[i]
            u1[i], d[i + 1] = d[i + 1], u1[i]
            u2[i], u1[i + 1] = u1[i + 1], u2[i]
            y[i], y[i + 1] = y[i + 1], y[i]
        if d[i] == 0:
            raise ConvergenceError("singular tridiagonal system")
        f = pivot_next / d[i]
        d[i + 1] -= f * u1[i]
        u1[i + 1] -= f * u2[i]
        y[i + 1] -= f * y[i]
    x = [mpf(0)] * n
    if d[n - 1] == 0:
        raise ConvergenceError("singular tridiagonal system")
    x[n - 1] = y[n - 1] / d[n - 1]
    if n > 1:
        x[n - 2] = (y[n - 2] - u1[n - 2] * x[n - 1]) / d[n - 2]
    for i in range(n - 3, -1, -1):
        x[i] = (y[i] - u1[i] * x[i + 1] - u2[i] * x[i + 2]) / d[i]
    return x


# ---------------------------------------------------------------------------
# Factored factorial / Pochhammer term updates
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RatioShape:
    """Linear-factor descriptor for one-step term-aggregate updates.

    Each entry is a (slope, offset) pair; the factor value at index k is
    slope * k + offset.  The update multiplies by every numerator factor and
    divides by every denominator factor, so successive factorial/Pochhammer
    aggregates cost O(1) multiplies per term.
    """

    num: tuple = ()
    den: tuple = ()


IDENTITY_SHAPE = RatioShape()


def term_ratio_update(prev_term_aux, index: int, shape: RatioShape):
    """Advance a factorial/Pochhammer aggregate from term index-1 to index."""
    out = prev_term_aux
    for slope, offset in shape.num:
        out = out * (slope * index + offset)
    for slope, offset in shape.den:
        f = slope * index + offset
        if f == 0:
            raise DomainError(
                f"ratio denominator factor vanishes at index {index}")
        out = out / f
    return out


# ---------------------------------------------------------------------------
# Associated Legendre families
# ---------------------------------------------------------------------------

def _sqrt_w(z, branch: str):
    if branch == "cut":
        return mp.sqrt(1 - z * z)
    return mp.sqrt(z * z - 1)


def _legendre_triples(vals, m, z, branch, numin):
    """Attach first/second derivatives to a degree-indexed value chain."""
    out = {}
    omz2 = 1 - z * z  # the ODE factor is the same analytic expression on
    # both branches
    for nu, f in vals.items():
        if nu - 1 in vals:
            below = vals[nu - 1]
            if branch == "cut":
                d1 = ((nu + m) * below - nu * z * f) / (1 - z * z)
            else:
                d1 = (nu * z * f - (nu + m) * below) / (z * z - 1)
        else:
            above = vals[nu + 1]
            # same identity rewritten through the degree recurrence
            if branch == "cut":
                d1 = ((nu + 1) * z * f - (nu - m + 1) * above) / (1 - z * z)
            else:
                d1 = ((nu - m + 1) * above - (nu + 1) * z * f) / (z * z - 1)
        d2 = (2 * z * d1 - (nu * (nu + 1) - m * m / omz2) * f) / omz2
        out[nu] = (f, d1, d2)
    return out


def legendre_p_family(m: int, nu_max: int, z, prec: int, branch: str):
    """P_nu^m(z) with derivatives for nu = m .. nu_max (forward recurrence).

    P grows with degree, so the forward direction is stable.
    """
    if nu_max < m:
        raise DomainError("nu_max must be >= m")
    with working_prec(prec):
        z = mpmathify(z)
        w = _sqrt_w(z, branch)
        pmm = double_fact(2 * m - 1) * w ** m
        if branch == "cut" and m % 2 == 1:
            pmm = -pmm
        vals = {m: pmm}
        if nu_max > m:
            vals[m + 1] = (2 * m + 1) * z * pmm
        for nu in range(m + 1, nu_max):
            vals[nu + 1] = ((2 * nu + 1) * z * vals[nu]
                            - (nu + m) * vals[nu - 1]) / (nu - m + 1)
        if nu_max == m:
            # derivative needs a neighbor; extend one degree up
            vals[m + 1] = (2 * m + 1) * z * pmm
            trip = _legendre_triples(vals, m, z, branch, m)
            trip.pop(m + 1)
            return trip
        return _legendre_triples(vals, m, z, branch, m)


def _q_order0_chain(nu_max: int, z, branch: str, prec: int):
    """Q_nu(z) for nu = 0..nu_max at order 0."""
    if branch == "cut":
        q0 = mp.log((1 + z) / (1 - z)) / 2
        vals = {0: q0}
        if nu_max >= 1:
            vals[1] = z * q0 - 1
        for nu in range(1, nu_max):
            vals[nu + 1] = ((2 * nu + 1) * z * vals[nu]
                            - nu * vals[nu - 1]) / (nu + 1)
        return vals
    # off the cut Q decays in degree: continued-fraction ratio at the top,
    # backward recurrence, normalization by the closed-form Q_0
    q0 = mp.log((z + 1) / (z - 1)) / 2
    top = nu_max + 1

    def a(k, _nu=top):
        if k == 1:
            return mpf(_nu)
        j = _nu + k - 1
        return -mpf(j) * j

    def b(k, _nu=top):
        return (2 * (_nu + k) - 1) * z

    h = lentz(0, a, b, prec + GUARD_BITS)
    vals = {top: h, top - 1: mpmathify(1)}
    for nu in range(top - 1, 0, -1):
        vals[nu - 1] = ((2 * nu + 1) * z * vals[nu]
                        - (nu + 1) * vals[nu + 1]) / nu
    scale = q0 / vals[0]
    return {nu: v * scale for nu, v in vals.items() if nu <= nu_max}


def _raise_order(f0, f1prev, nu, m, z, w, branch):
    """Chain f_nu^0 -> f_nu^m through the order recurrence."""
    # seeds: f^0 and f^1 = -w f' (cut) / +w f' (off-cut)
    cur = [f0, f1prev]
    if m == 0:
        return f0
    if m == 1:
        return f1prev
    for mu in range(0, m - 1):
        if branch == "cut":
            nxt = (-2 * (mu + 1) * z / w * cur[1]
                   - (nu - mu) * (nu + mu + 1) * cur[0])
        else:
            nxt = (-2 * (mu + 1) * z / w * cur[1]
                   + (nu - mu) * (nu + mu + 1) * cur[0])
        cur = [cur[1], nxt]
    return cur[1]


def legendre_q_family(m: int, nu_min: int, nu_max: int, z, prec: int,
                      branch: str):
    """Q_nu^m(z) with derivatives for nu = nu_min .. nu_max.

    nu_min may go down to -m (the boundary where the degree recurrence
    degenerates).  On the cut the degree chain runs forward; off the cut the
    minimal solution is recovered backward from a continued-fraction ratio.
    """
    if nu_min < -m:
        raise DomainError(f"Q family degree cannot go below -m = {-m}")
    if branch == "cut" and not (abs(z) < 1):
        raise DomainError("cut branch requires |x| < 1")
    with working_prec(prec):
        z = mpmathify(z)
        w = _sqrt_w(z, branch)
        if m == 0:
            ch = _q_order0_chain(nu_max + 1, z, branch, prec)
            vals = {nu: ch[nu] for nu in range(max(nu_min, 0), nu_max + 1)}
            vals[nu_max + 1] = ch[nu_max + 1]
        else:
            ch0 = _q_order0_chain(m + 2, z, branch, prec)

            def d0(nu):
                if nu == 0:
                    return (1 / (1 - z * z)) if branch == "cut" \
                        else (-1 / (z * z - 1))
                if branch == "cut":
                    return (nu * ch0[nu - 1] - nu * z * ch0[nu]) / (1 - z * z)
                return (nu * z * ch0[nu] - nu * ch0[nu - 1]) / (z * z - 1)

            qm = {}
            for nu in (m, m + 1):
                f1 = (-w * d0(nu)) if branch == "cut" else (w * d0(nu))
                qm[nu] = _raise_order(ch0[nu], f1, nu, m, z, w, branch)
            if branch == "cut":
                vals = {m: qm[m], m + 1: qm[m + 1]}
                for nu in range(m + 1, nu_max + 1):
                    vals[nu + 1] = ((2 * nu + 1) * z * vals[nu]
                                    - (nu + m) * vals[nu - 1]) / (nu - m + 1)
            else:
                top = max(nu_max + 1, m + 2)

                def a(k, _nu=top):
                    if k == 1:
                        return mpf(_nu + m)
                    j = _nu + k - 1
                    return -mpf(j - m) * (j + m)

                def b(k, _nu=top):
                    return (2 * (_nu + k) - 1) * z

                h = lentz(0, a, b, prec + GUARD_BITS)
                tr = {top: h, top - 1: mpmathify(1)}
                for nu in range(top - 1, m, -1):
                    tr[nu - 1] = ((2 * nu + 1) * z * tr[nu]
                                  - (nu - m + 1) * tr[nu + 1]) / (nu + m)
                scale = qm[m] / tr[m]
                vals = {nu: v * scale for nu, v in tr.items()}
            # extend to negative degrees (down to -m) by backward recurrence
            for nu in range(min(vals), nu_min, -1):
                vals[nu - 1] = ((2 * nu + 1) * z * vals[nu]
                                - (nu - m + 1) * vals[nu + 1]) / (nu + m)
        trip = _legendre_triples(vals, m, z, branch, nu_min)
        return {nu: t for nu, t in trip.items() if nu_min <= nu <= nu_max}


def legendre_p(m: int, n: int, x, prec: int) -> EvalPair:
    """P_n^m(x) and its derivative; |x| <= 1 (Ferrers) or x >= 1."""
    if m < 0 or n < m:
        raise DomainError(f"need 0 <= m <= n, got m={m}, n={n}")
    with working_prec(prec):
        x = mpmathify(x)
        if abs(x) <= 1:
            branch = "cut"
        elif x > 1:
            branch = "off"
        else:
            raise DomainError(f"legendre_p argument {x} < -1")
        if abs(x) == 1:
            val, der = _legendre_p_at_unit(m, n, x)
            return EvalPair(round_to(val, prec), round_to(der, prec))
        fam = legendre_p_family(m, n, x, prec, branch)
        f, d1, _ = fam[n]
    return EvalPair(round_to(f, prec), round_to(d1, prec))


def _legendre_p_at_unit(m, n, x):
    # P_n(+-1) = (+-1)^n, P'_n(+-1) = (+-1)^(n+1) n(n+1)/2; for m > 0 the
    # value vanishes and the m = 1 derivative is unbounded.
    if m == 0:
        s = mpf(1) if x > 0 else mpf((-1) ** n)
        ds = mpf(1) if x > 0 else mpf((-1) ** (n + 1))
        return s, ds * n * (n + 1) / 2
    if m == 1:
        return mpf(0), mpf("inf") if x > 0 else mpf("-inf") * (-1) ** n
    return mpf(0), mpf(0)


def legendre_q(m: int, n: int, x, prec: int) -> EvalPair:
    """Q_n^m(x) and its derivative for x > 1."""
    if m < 0 or n < m:
        raise DomainError(f"need 0 <= m <= n, got m={m}, n={n}")
    with working_prec(prec):
        x = mpmathify(x)
        if not x > 1:
            raise DomainError(f"legendre_q requires x > 1, got {x}")
        fam = legendre_q_family(m, n, n, x, prec, "off")
        f, d1, _ = fam[n]
    return EvalPair(round_to(f, prec), round_to(d1, prec))


# ---------------------------------------------------------------------------
# Spherical Bessel / Neumann families
# ---------------------------------------------------------------------------

def _sph_triples(vals, x, n_max):
    out = {}
    for n in range(0, n_max + 1):
        f = vals[n]
        if n == 0:
            d1 = -vals[1]
        else:
            d1 = vals[n - 1] - (n + 1) / x * f
        d2 = -2 * d1 / x - (1 - n * (n + 1) / (x * x)) * f
        out[n] = (f, d1, d2)
    return out


def sph_bessel_j_family(n_max: int, x, prec: int):
    """j_n(x) with derivatives for n = 0..n_max by backward recurrence."""
    with working_prec(prec):
        x = mpmathify(x)
        if not x > 0:
            raise DomainError(f"spherical Bessel requires x > 0, got {x}")
        top = n_max + 1

        def a(k):
            return x if k == 1 else -x * x

        def b(k):
            return mpf(2 * (top + k) - 1)

        h = lentz(0, a, b, prec + GUARD_BITS)
        vals = {top: h, top - 1: mpmathify(1)}
        for n in range(top - 1, 0, -1):
            vals[n - 1] = (2 * n + 1) / x * vals[n] - vals[n + 1]
        j0 = mp.sin(x) / x
        j1 = mp.sin(x) / (x * x) - mp.cos(x) / x
        # anchor on whichever reference value is better conditioned
        if abs(j0) >= abs(j1):
            scale = j0 / vals[0]
        else:
            scale = j1 / vals[1]
        vals = {n: v * scale for n, v in vals.items()}
        return _sph_triples(vals, x, n_max)


def sph_neumann_y_family(n_max: int, x, prec: int):
    """y_n(x) with derivatives for n = 0..n_max by forward recurrence."""
    with working_prec(prec):
        x = mpmathify(x)
        if not x > 0:
            raise DomainError(f"spherical Neumann requires x > 0, got {x}")
        vals = {0: -mp.cos(x) / x,
                1: -mp.cos(x) / (x * x) - mp.sin(x) / x}
        for n in range(1, n_max):
            vals[n + 1] = (2 * n + 1) / x * vals[n] - vals[n - 1]
        if n_max == 0:
            trip = _sph_triples(vals, x, 1)
            return {0: trip[0]}
        return _sph_triples(vals, x, n_max)


def sph_bessel_j(n: int, x, prec: int) -> EvalPair:
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    fam = sph_bessel_j_family(n, x, prec)
    f, d1, _ = fam[n]
    return EvalPair(round_to(f, prec), round_to(d1, prec))


def sph_neumann_y(n: int, x, prec: int) -> EvalPair:
    if n < 0:
        raise DomainError(f"n must be >= 0, got {n}")
    fam = sph_neumann_y_family(n, x, prec)
    f, d1, _ = fam[n]
    return EvalPair(round_to(f, prec), round_to(d1, prec))


# ---------------------------------------------------------------------------
# Coordinates
# ---------------------------------------------------------------------------

def spheroidal_to_cartesian(kind: str, a, eta, xi, phi, prec: int = 53):
    """Map spheroidal (eta, xi, phi) to Cartesian (x, y, z).

    2a is the interfocal distance; for the oblate system the radial factor is
    (xi^2 + 1)^(1/2) and xi >= 0.
    """
    with working_prec(prec):
        a, eta, xi, phi = (mpmathify(v) for v in (a, eta, xi, phi))
        if abs(eta) > 1:
            raise DomainError(f"|eta| must be <= 1, got {eta}")
        if kind == "prolate":
            if xi < 1:
                raise DomainError(f"prolate xi must be >= 1, got {xi}")
            rad = mp.sqrt(xi * xi - 1)
        elif kind == "oblate":
            if xi < 0:
                raise DomainError(f"oblate xi must be >= 0, got {xi}")
            rad = mp.sqrt(xi * xi + 1)
        else:
            raise DomainError(f"unknown kind {kind!r}")
        s = a * mp.sqrt(1 - eta * eta) * rad
        x = s * mp.cos(phi)
        y = s * mp.sin(phi)
        z = a * eta * xi
    return round_to(x, prec), round_to(y, prec), round_to(z, prec)
