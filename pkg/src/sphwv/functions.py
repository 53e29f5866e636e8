"""Spheroidal angle and radial function evaluation.

Angle functions S1 (two methods) and S2, radial functions R1/R2 by every
available method, and automatic method selection driven by the relative
error of the computed Wronskian against its closed form.

All series are differentiated termwise; values, first and second
derivatives travel together as (v, d1, d2) triples so the Wronskian and the
ODE-residual diagnostics never touch finite differences.
"""
from __future__ import annotations

from mpmath import mp, mpc, mpf, mpmathify

from .core import (
    ConvergenceError,
    DomainError,
    EvalPair,
    LowConfidenceError,
    OBLATE,
    OBLATE_COMBINATIONS,
    PROLATE,
    PROLATE_COMBINATIONS,
    RadialResult,
    validate_kind,
)
from .charvalue import csq_for
from .numerics import (
    fact,
    legendre_p_family,
    legendre_q_family,
    round_to,
    sph_bessel_j_family,
    sph_neumann_y_family,
    working_prec,
)


# ---------------------------------------------------------------------------
# (value, d1, d2) triple algebra
# ---------------------------------------------------------------------------

def _mul3(a, b):
    return (a[0] * b[0],
            a[1] * b[0] + a[0] * b[1],
            a[2] * b[0] + 2 * a[1] * b[1] + a[0] * b[2])


def _add3(a, b):
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2])


def _scale3(a, s):
    return (s * a[0], s * a[1], s * a[2])


def _pow3(u, e):
    """u(x)**e as a triple, u given as a triple, e a half-integer."""
    if e == 0:
        return (mpf(1), mpf(0), mpf(0))
    v = u[0]
    if v == 0:
        # only nonnegative integer exponents have two finite derivatives
        if e == int(e) and e >= 1:
            if e == 1:
                return u
            if e == 2:
                return (mpf(0), mpf(0), 2 * u[1] * u[1])
            return (mpf(0), mpf(0), mpf(0))
        raise DomainError(f"power {e} of a vanishing base is singular here")
    p = v ** e
    d1 = e * v ** (e - 1) * u[1]
    d2 = e * (e - 1) * v ** (e - 2) * u[1] * u[1] + e * v ** (e - 1) * u[2]
    return (p, d1, d2)


def _poly3(coeffs_by_power, t):
    """sum(a_k * t**k) with two derivatives, t itself a triple in x.

    Horner evaluation in t[0]; sparse exponents are handled by multiplying
    through the gaps.
    """
    t0 = t[0]
    fp = {k - 1: k * v for k, v in coeffs_by_power.items() if k >= 1}
    fpp = {k - 1: k * v for k, v in fp.items() if k >= 1}

    def horner(poly):
        acc = mpf(0) * t0
        last = None
        for kk in sorted(poly, reverse=True):
            if last is not None:
                for _ in range(last - kk):
                    acc *= t0
            acc += poly[kk]
            last = kk
        if last is not None:
            for _ in range(last):
                acc *= t0
        return acc

    f = horner(coeffs_by_power)
    ft = horner(fp)
    ftt = horner(fpp)
    # chain rule through t(x)
    return (f, ft * t[1], ftt * t[1] * t[1] + ft * t[2])


def _pair(trip, prec):
    return EvalPair(round_to(trip[0], prec), round_to(trip[1], prec),
                    round_to(trip[2], prec))


# ---------------------------------------------------------------------------
# Angle functions
# ---------------------------------------------------------------------------

def angle_S1(params, coeffs, eta, prec: int = None,
             method: str = "legendre") -> EvalPair:
    """S1(eta) with dS1/deta, by the Legendre sum or the power series."""
    prec = prec or params.prec
    m, n = params.m, params.n
    if method not in ("legendre", "power"):
        raise DomainError(f"unknown S1 method {method!r}")
    with working_prec(prec):
        eta = mpmathify(eta)
        if abs(eta) > 1:
            raise DomainError(f"S1 needs |eta| <= 1, got {eta}")
        d = coeffs.dr.entries
        if method == "legendre":
            if abs(eta) == 1:
                return _s1_at_unit(d, m, eta, prec)
            fam = legendre_p_family(m, m + max(d), eta, prec, "cut")
            tot = (mpf(0), mpf(0), mpf(0))
            for r in sorted(d):
                tot = _add3(tot, _scale3(fam[m + r], d[r]))
            return _pair(tot, prec)
        # power series in w = 1 - eta**2
        c2k = coeffs.c2k.entries
        w = (1 - eta * eta, -2 * eta, mpf(-2))
        f = _poly3(c2k, w)
        out = _mul3(_pow3(w, mpf(m) / 2), f)
        if params.parity == 1:
            out = _mul3((eta, mpf(1), mpf(0)), out)
        out = _scale3(out, mpf(-1) ** m)
        return _pair(out, prec)


def _s1_at_unit(d, m, eta, prec):
    from .numerics import _legendre_p_at_unit
    tot = mpf(0)
    dtot = mpf(0)
    for r in sorted(d):
        v, dv = _legendre_p_at_unit(m, m + r, eta)
        tot += d[r] * v
        dtot += d[r] * dv
    return EvalPair(round_to(tot, prec),
                    dtot if mp.isinf(dtot) or mp.isnan(dtot)
                    else round_to(dtot, prec))


def angle_S2(params, coeffs, eta, prec: int = None) -> EvalPair:
    """S2(eta): the two-sided Legendre-Q sum with the epsilon-tail P terms."""
    prec = prec or params.prec
    m = params.m
    with working_prec(prec):
        eta = mpmathify(eta)
        if not abs(eta) < 1:
            raise DomainError(f"S2 needs |eta| < 1, got {eta}")
        d = dict(coeffs.dr.entries)
        if coeffs.dr_neg is not None:
            d.update(coeffs.dr_neg.entries)
        eps = coeffs.dr_neg.eps_entries if coeffs.dr_neg is not None else {}
        qfam = legendre_q_family(m, -m, m + max(d), eta, prec, "cut")
        tot = (mpf(0), mpf(0), mpf(0))
        for r in sorted(d):
            tot = _add3(tot, _scale3(qfam[m + r], d[r]))
        if eps:
            deg_max = max(-r - m - 1 for r in eps)
            pfam = legendre_p_family(m, deg_max, eta, prec, "cut")
            for r in sorted(eps):
                tot = _add3(tot, _scale3(pfam[-r - m - 1], eps[r]))
        return _pair(tot, prec)


# ---------------------------------------------------------------------------
# Radial functions, one evaluator per method tag
# ---------------------------------------------------------------------------

def _bessel_series(params, coeffs, xi, prec, neumann):
    """Shared core of R1_1/R2_1: prefactor times a Bessel/Neumann sum."""
    kind, c, m, n = params.kind, params.c, params.m, params.n
    with working_prec(prec):
        xi = mpmathify(xi)
        c = mpmathify(c)
        if kind == PROLATE and xi < 1:
            raise DomainError(f"prolate radial argument must be >= 1: {xi}")
        if kind == OBLATE and xi <= 0:
            # the 1/xi**2 prefactor makes xi = 0 a genuine divide by zero
            raise DomainError("Bessel-series radial method undefined at "
                              "xi = 0")
        d = coeffs.dr.entries
        x = c * xi
        fam = (sph_neumann_y_family if neumann
               else sph_bessel_j_family)(m + max(d), x, prec)
        N = n - m
        g = fact(2 * m + params.parity) / fact(params.parity)
        tot = (mpf(0), mpf(0), mpf(0))
        for r in range(params.parity, max(d) + 1, 2):
            dr = d.get(r)
            if dr is not None:
                sgn = mpf(-1) ** ((r - N) // 2)
                trip = fam[m + r]
                # d/dxi = c * d/dx
                trip = (trip[0], c * trip[1], c * c * trip[2])
                tot = _add3(tot, _scale3(trip, sgn * dr * g))
            g = g * ((2 * m + r + 1) * (2 * m + r + 2)) / ((r + 1) * (r + 2))
        s = mpf(1) if kind == PROLATE else mpf(-1)
        # u = 1 -+ xi**-2
        u = (1 - s / (xi * xi), 2 * s / xi ** 3, -6 * s / xi ** 4)
        out = _mul3(_pow3(u, mpf(m) / 2), tot)
        out = _scale3(out, 1 / coeffs.specials.F)
        return _pair(out, prec)


def _r1_power(params, coeffs, xi, prec):
    """R1 from the c_2k power series (entire in xi**2 -+ 1)."""
    kind, m = params.kind, params.m
    with working_prec(prec):
        xi = mpmathify(xi)
        if kind == PROLATE:
            if xi < 1:
                raise DomainError(f"prolate radial argument must be >= 1: "
                                  f"{xi}")
            u = (xi * xi - 1, 2 * xi, mpf(2))
            a = {k: mpf(-1) ** k * v for k, v in coeffs.c2k.entries.items()}
        else:
            if xi < 0:
                raise DomainError(f"oblate radial argument must be >= 0: "
                                  f"{xi}")
            u = (xi * xi + 1, 2 * xi, mpf(2))
            a = dict(coeffs.c2k.entries)
        f = _poly3(a, u)
        out = _mul3(_pow3(u, mpf(m) / 2), f)
        if params.parity == 1:
            out = _mul3((xi, mpf(1), mpf(0)), out)
        out = _scale3(out, 1 / coeffs.specials.k1)
        return _pair(out, prec)


def _legendre_T(params, coeffs, z, prec):
    """The two-piece Legendre sum behind R2_2 at argument z (off the cut)."""
    m = params.m
    d = dict(coeffs.dr.entries)
    if coeffs.dr_neg is not None:
        d.update(coeffs.dr_neg.entries)
    eps = coeffs.dr_neg.eps_entries if coeffs.dr_neg is not None else {}
    qfam = legendre_q_family(m, -m, m + max(d), z, prec, "off")
    tot = (z * 0, z * 0, z * 0)
    for r in sorted(d):
        tot = _add3(tot, _scale3(qfam[m + r], d[r]))
    if eps:
        deg_max = max(-r - m - 1 for r in eps)
        pfam = legendre_p_family(m, deg_max, z, prec, "off")
        for r in sorted(eps):
            tot = _add3(tot, _scale3(pfam[-r - m - 1], eps[r]))
    return tot


def _r2_legendre(params, coeffs, xi, prec):
    """R2 from the Legendre-Q expansion (the S2 relation)."""
    kind, m = params.kind, params.m
    with working_prec(prec):
        xi = mpmathify(xi)
        if kind == PROLATE:
            if xi <= 1:
                raise DomainError("Legendre-Q radial method needs xi > 1")
            tot = _legendre_T(params, coeffs, xi, prec)
            out = _scale3(tot, 1 / coeffs.specials.k2)
            return _pair(out, prec)
        if xi <= 0:
            raise DomainError("Legendre-Q radial method needs xi > 0")
        # complex intermediate at z = i xi; the stored k2 carries the
        # constant phase, so the projected combination is real
        z = mpc(0, 1) * xi
        T = _legendre_T(params, coeffs, z, prec)
        phase = mpc(0, 1) ** (-(m - 1) if params.parity == 0 else -(m - 2))
        v = (phase * T[0]).real
        d1 = (phase * mpc(0, 1) * T[1]).real   # d/dxi = i d/dz
        d2 = (-phase * T[2]).real
        k2 = coeffs.specials.k2
        return EvalPair(round_to(v / k2, prec), round_to(d1 / k2, prec),
                        round_to(d2 / k2, prec))


def _r2_power(params, coeffs, xi, prec, r1pair):
    """Oblate tertiary R2: Q* R1 (arctan(xi) - pi/2) plus the B_2r series."""
    m = params.m
    with working_prec(prec):
        xi = mpmathify(xi)
        if xi < 0:
            raise DomainError(f"oblate radial argument must be >= 0: {xi}")
        qstar = coeffs.specials.Qstar
        if qstar is None or coeffs.b2r is None:
            raise DomainError("tertiary R2 needs Q* and B_2r")
        r1 = (r1pair.value, r1pair.derivative, r1pair.second)
        opx2 = 1 + xi * xi
        at = (mp.atan(xi) - mp.pi / 2, 1 / opx2, -2 * xi / (opx2 * opx2))
        out = _scale3(_mul3(r1, at), qstar)
        u = (opx2, 2 * xi, mpf(2))
        g = _mul3(_pow3(u, -mpf(m) / 2), _poly3(coeffs.b2r.entries,
                                                (xi * xi, 2 * xi, mpf(2))))
        if params.parity == 0:
            g = _mul3((xi, mpf(1), mpf(0)), g)
        out = _add3(out, g)
        return _pair(out, prec)


def radial(params, coeffs, xi, method: str, prec: int = None) -> EvalPair:
    """One radial function by one named method."""
    prec = prec or params.prec
    validate_kind(params.kind)
    if method in ("R2_31", "R2_32") and params.kind != OBLATE:
        raise DomainError(f"{method} exists only for the oblate kind")
    if method == "R1_1":
        return _bessel_series(params, coeffs, xi, prec, neumann=False)
    if method == "R2_1":
        return _bessel_series(params, coeffs, xi, prec, neumann=True)
    if method == "R1_2":
        return _r1_power(params, coeffs, xi, prec)
    if method == "R2_2":
        return _r2_legendre(params, coeffs, xi, prec)
    if method == "R2_31":
        r1 = _bessel_series(params, coeffs, xi, prec, neumann=False)
        return _r2_power(params, coeffs, xi, prec, r1)
    if method == "R2_32":
        r1 = _r1_power(params, coeffs, xi, prec)
        return _r2_power(params, coeffs, xi, prec, r1)
    raise DomainError(f"unknown radial method {method!r}")


def wronskian_exact(kind: str, c, xi, prec: int = 53):
    """Closed-form Wronskian of R1 and R2."""
    validate_kind(kind)
    with working_prec(prec):
        c = mpmathify(c)
        xi = mpmathify(xi)
        if kind == PROLATE:
            if xi <= 1:
                raise DomainError("prolate Wronskian needs xi > 1 (infinite "
                                  "at xi = 1)")
            return round_to(1 / (c * (xi * xi - 1)), prec)
        if xi < 0:
            raise DomainError(f"oblate radial argument must be >= 0: {xi}")
        return round_to(1 / (c * (xi * xi + 1)), prec)


def radial_auto(params, coeffs, xi, prec: int = None,
                ceiling=mpf("1e-6")) -> RadialResult:
    """Evaluate every admissible (R1, R2) pairing and keep the one whose
    computed Wronskian is closest to the closed form."""
    prec = prec or params.prec
    kind = params.kind
    combos = PROLATE_COMBINATIONS if kind == PROLATE else OBLATE_COMBINATIONS
    tags = sorted({t for pair in combos for t in pair})
    results = {}
    for tag in tags:
        try:
            results[tag] = radial(params, coeffs, xi, tag, prec)
        except (DomainError, ConvergenceError, ZeroDivisionError):
            continue
    with working_prec(prec):
        wex = wronskian_exact(kind, params.c, xi, prec)
        errors = {}
        for pair in combos:
            t1, t2 = pair
            if t1 not in results or t2 not in results:
                continue
            r1, r2 = results[t1], results[t2]
            w = (r1.value * r2.derivative - r1.derivative * r2.value)
            errors[pair] = abs(w - wex) / abs(wex)
        if not errors:
            raise DomainError(f"no radial method combination is admissible "
                              f"at xi = {xi}")
        best = min(errors, key=lambda k: errors[k])
        r1, r2 = results[best[0]], results[best[1]]
        neg = EvalPair(-r2.value, -r2.derivative,
                       None if r2.second is None else -r2.second)
        out = RadialResult(r1=r1, r2=r2, r3=(r1, r2), r4=(r1, neg),
                           chosen=best,
                           wronskian_rel_error=round_to(errors[best], prec),
                           all_errors={k: round_to(v, prec)
                                       for k, v in errors.items()})
    if out.wronskian_rel_error > ceiling:
        raise LowConfidenceError(
            f"best Wronskian relative error {out.wronskian_rel_error} "
            f"exceeds ceiling {ceiling}", out)
    return out


# ---------------------------------------------------------------------------
# ODE residuals (diagnostics; second derivatives come from the series)
# ---------------------------------------------------------------------------

def angle_ode_residual(params, lam, pair: EvalPair, eta, prec: int = None):
    """Residual of the angle equation for a (v, d1, d2) evaluation."""
    prec = prec or params.prec
    with working_prec(prec):
        eta = mpmathify(eta)
        csq = csq_for(params.kind, mpmathify(params.c))
        m = params.m
        w = 1 - eta * eta
        res = (w * pair.second - 2 * eta * pair.derivative
               + (lam - csq * eta * eta - m * m / w) * pair.value)
        return round_to(res, prec)


def radial_ode_residual(params, lam, pair: EvalPair, xi, prec: int = None):
    """Residual of the radial equation for a (v, d1, d2) evaluation."""
    prec = prec or params.prec
    with working_prec(prec):
        xi = mpmathify(xi)
        c = mpmathify(params.c)
        m = params.m
        if params.kind == PROLATE:
            u = xi * xi - 1
            res = (u * pair.second + 2 * xi * pair.derivative
                   - (lam - c * c * xi * xi + m * m / u) * pair.value)
        else:
            u = xi * xi + 1
            res = (u * pair.second + 2 * xi * pair.derivative
                   - (lam - c * c * xi * xi - m * m / u) * pair.value)
        return round_to(res, prec)
