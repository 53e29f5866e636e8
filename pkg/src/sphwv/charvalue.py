"""Characteristic values of the spheroidal wave equation.

Two cooperating methods: a double-precision tridiagonal eigensolve provides a
seed for each mode, and arbitrary-precision secant iteration on the
continued-fraction transcendental equation refines it.  The oblate kind uses
the same machinery with c**2 -> -c**2 in the recurrence coefficients.
"""
from __future__ import annotations

import math

import numpy as np
from mpmath import mp, mpf, mpmathify
from scipy.linalg import eigh_tridiagonal

from .core import (
    CharacteristicValue,
    ConvergenceError,
    DomainError,
    OBLATE,
    parity_of,
    validate_kind,
)
from .numerics import GUARD_BITS, working_prec, round_to


def csq_for(kind: str, c):
    """The squared size parameter entering the recurrence (negated for oblate)."""
    validate_kind(kind)
    c2 = c * c
    return -c2 if kind == OBLATE else c2


def recurrence_alpha(m: int, r: int, csq):
    return ((2 * m + r + 2) * (2 * m + r + 1) * csq
            / ((2 * m + 2 * r + 5) * (2 * m + 2 * r + 3)))


def recurrence_beta(m: int, r: int, csq):
    mr = (m + r) * (m + r + 1)
    return mr + (2 * mr - 2 * m * m - 1) * csq \
        / ((2 * m + 2 * r - 1) * (2 * m + 2 * r + 3))


def recurrence_gamma(m: int, r: int, csq):
    return r * (r - 1) * csq / ((2 * m + 2 * r - 3) * (2 * m + 2 * r - 1))


def recurrence_abc(kind: str, c, m: int, r: int):
    """(alpha_r, beta_r, gamma_r) of the three-term coefficient recurrence."""
    csq = csq_for(kind, c)
    return (recurrence_alpha(m, r, csq),
            recurrence_beta(m, r, csq),
            recurrence_gamma(m, r, csq))


# Continued-fraction building blocks: beta^m_r = gamma_r * alpha_{r-2} and
# gamma^m_r = beta_r.

def _beta_cf(m, r, csq):
    return recurrence_gamma(m, r, csq) * recurrence_alpha(m, r - 2, csq)


def _gamma_cf(m, r, csq):
    return recurrence_beta(m, r, csq)


def seed_characteristic_values(kind: str, c: float, m: int, count: int,
                               parity: int = 0):
    """Double-precision eigenvalue seeds for lambda_{m, m+parity+2j}.

    The truncated tridiagonal matrix is similar to a symmetric one (the
    off-diagonal products alpha_r * gamma_{r+2} are nonnegative for both
    kinds), so a symmetric tridiagonal eigensolver is used.
    """
    validate_kind(kind)
    if count < 1:
        raise DomainError(f"count must be >= 1, got {count}")
    if parity not in (0, 1):
        raise DomainError(f"parity must be 0 or 1, got {parity}")
    csq = float(c) * float(c) * (-1.0 if kind == OBLATE else 1.0)
    size = count + max(32, math.ceil(abs(float(c))))
    diag = np.empty(size)
    off = np.empty(size - 1)
    for j in range(size):
        r = parity + 2 * j
        diag[j] = recurrence_beta(m, r, csq)
        if j < size - 1:
            prod = (recurrence_alpha(m, r, csq)
                    * recurrence_gamma(m, r + 2, csq))
            off[j] = math.sqrt(prod) if prod > 0 else 0.0
    try:
        vals = eigh_tridiagonal(diag, off, eigvals_only=True,
                                select="i", select_range=(0, count - 1))
    except Exception as exc:  # pragma: no cover - solver failure surface
        raise ConvergenceError(f"tridiagonal eigensolve failed: {exc}") from exc
    if not np.all(np.isfinite(vals)):
        raise ConvergenceError("eigensolver produced non-finite seeds")
    return [float(v) for v in np.sort(vals)]


def transcendental_U(lam, kind: str, c, m: int, n: int, prec: int,
                     max_depth: int = 200000):
    """U(lambda) = U1 + U2; its roots are the characteristic values.

    U1 is the finite descending continued fraction, U2 the infinite ascending
    one, truncated adaptively until successive convergents agree to 2**-prec.
    """
    with working_prec(prec):
        lam = mpmathify(lam)
        c = mpmathify(c)
        csq = csq_for(kind, c)
        N = n - m
        p = parity_of(m, n)
        tiny = mpf(2) ** (-(prec + GUARD_BITS) * 4 - 64)
        # U1: bottom-up through the finite chain
        den = _gamma_cf(m, p, csq) - lam
        u1 = den
        for r in range(p + 2, N + 1, 2):
            if den == 0:
                den = tiny
            den = _gamma_cf(m, r, csq) - lam - _beta_cf(m, r, csq) / den
            u1 = den
        # U2: ascending continued fraction via modified Lentz
        if csq == 0:
            u2 = mpf(0)
        else:
            from .numerics import lentz

            def a(k):
                return -_beta_cf(m, N + 2 * k, csq)

            def b(k):
                return _gamma_cf(m, N + 2 * k, csq) - lam

            u2 = lentz(0, a, b, prec + GUARD_BITS, max_terms=max_depth)
        out = u1 + u2
    return round_to(out, prec)


def refine_characteristic_value(kind: str, c, m: int, n: int, seed: float,
                                prec: int, max_iter: int = 200):
    """Secant refinement of a seed to the working precision.

    Falls back to damped steps if the secant iterate tries to leave a
    neighborhood of the seed wider than the gap to adjacent eigenvalue seeds.
    """
    validate_kind(kind)
    with working_prec(prec):
        c = mpmathify(c)
        if c == 0:
            lam = mpf(n) * (n + 1)
            return CharacteristicValue(round_to(lam, prec), mpf(0),
                                       float(seed))
        # gap to neighboring modes bounds how far refinement may wander
        p = parity_of(m, n)
        j = (n - m) // 2
        try:
            seeds = seed_characteristic_values(kind, float(c), m, j + 2, p)
            gaps = []
            if j > 0:
                gaps.append(abs(seeds[j] - seeds[j - 1]))
            gaps.append(abs(seeds[j + 1] - seeds[j]))
            gap = mpf(min(gaps)) / 2
        except (ConvergenceError, DomainError):
            gap = mpf(1) + abs(mpf(seed))

        def U(x):
            return transcendental_U(x, kind, c, m, n, prec + GUARD_BITS)

        x0 = mpf(seed)
        x1 = x0 * (1 + mpf(2) ** -20) + mpf(2) ** -20
        f0 = U(x0)
        f1 = U(x1)
        tol = mpf(2) ** (-prec + 16)
        lam = x1
        for _ in range(max_iter):
            if f1 == f0:
                break
            step = f1 * (x1 - x0) / (f1 - f0)
            x2 = x1 - step
            if abs(x2 - mpf(seed)) > gap:
                # damp toward the seed neighborhood rather than jumping out
                x2 = x1 - step / 2
                if abs(x2 - mpf(seed)) > gap:
                    raise ConvergenceError(
                        f"secant iterate left the seed bracket for "
                        f"(m={m}, n={n}): {x2}")
            x0, f0 = x1, f1
            x1 = x2
            f1 = U(x1)
            lam = x1
            if abs(x1 - x0) < tol * max(1, abs(x1)):
                break
        else:
            raise ConvergenceError(
                f"secant did not converge in {max_iter} iterations "
                f"for (m={m}, n={n})")
        residual = abs(f1)
    return CharacteristicValue(round_to(lam, prec), round_to(residual, prec),
                               float(seed))


def characteristic_value(kind: str, c, m: int, n: int, prec: int,
                         seed: float = None) -> CharacteristicValue:
    """Seed internally (method 1) and refine (method 2)."""
    if seed is None:
        p = parity_of(m, n)
        j = (n - m) // 2
        seeds = seed_characteristic_values(kind, float(c), m, j + 1, p)
        seed = seeds[j]
    return refine_characteristic_value(kind, c, m, n, seed, prec)
