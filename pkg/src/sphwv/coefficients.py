"""Expansion-coefficient families and scalar special values.

For one (kind, c, m, n) this module produces: the Legendre expansion
coefficients d_r (r >= 0), their negative-index continuation and the
regularized epsilon tail, the power-series coefficients c_2k, the scalars
N, F, k1, k2, and - for the oblate kind - Q*, the reciprocal-square series
coefficients alpha_r, and the nonhomogeneous power-series coefficients B_2r.

Index conventions: every family is stored keyed by the true index r (or k),
with only the parity of n - m present.  For the oblate kind the stored
joining factors carry their constant imaginary phase detached (see
``core.ScalarSpecials``), which keeps every stored quantity real.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from mpmath import mp, mpf, mpmathify

from .core import (
    B2rSet,
    C2kSet,
    CoefficientSet,
    ConvergenceError,
    DomainError,
    DrNegSet,
    DrSet,
    OBLATE,
    Params,
    ScalarSpecials,
    parity_of,
    validate_kind,
)
from .charvalue import (
    characteristic_value,
    csq_for,
    recurrence_alpha,
    recurrence_beta,
    recurrence_gamma,
)
from .numerics import (
    GUARD_BITS,
    fact,
    legendre_p_family,
    lentz,
    round_to,
    solve_tridiagonal,
    working_prec,
)


@dataclass(frozen=True)
class ModeSpec:
    """How many coefficients to compute: an exact count, a magnitude floor,
    or both (union semantics: at least `count`, and keep going until the
    next coefficient magnitude is below `floor`)."""

    count: Optional[int] = None
    floor: Optional[mpf] = None

    def __post_init__(self):
        if self.count is None and self.floor is None:
            raise DomainError("mode needs a count, a floor, or both")
        if self.count is not None and self.count < 1:
            raise DomainError(f"count must be >= 1, got {self.count}")


DEFAULT_MODE = ModeSpec(floor=mpf("1e-200"))


def _abc(kind, c, m):
    csq = csq_for(kind, c)

    def A(r):  # A_r = alpha_{r-2}
        return recurrence_alpha(m, r - 2, csq)

    def B(r, lam):
        return recurrence_beta(m, r, csq) - lam

    def C(r):  # C_r = gamma_{r+2}
        return recurrence_gamma(m, r + 2, csq)

    return A, B, C


def _floor_done(series_vals, floor):
    """Adaptive-stop rule: the last value and its predecessor's trend are
    both below the floor, so we are not inside an oscillation null."""
    if floor is None:
        return True
    if len(series_vals) < 2:
        return False
    return abs(series_vals[-1]) < floor and abs(series_vals[-2]) < floor


# ---------------------------------------------------------------------------
# d_r for r >= 0
# ---------------------------------------------------------------------------

def compute_dr(kind: str, c, m: int, n: int, lam, prec: int,
               mode: ModeSpec = DEFAULT_MODE) -> DrSet:
    """Coefficients d_r, r >= 0 of the parity of n - m, Flammer-normalized.

    The non-decaying head (r <= n - m) comes from the forward recurrence;
    past the transition the ratios d_{r+2}/d_r come from the ascending
    continued fraction, filled by a single downward pass from a deep
    Lentz-evaluated anchor.
    """
    validate_kind(kind)
    p = parity_of(m, n)
    N = n - m
    with working_prec(prec):
        c = mpmathify(c)
        lam = mpmathify(lam)
        csq = csq_for(kind, c)
        if c == 0:
            entries = {N: mpf(1)}
            return _normalize_dr(entries, m, n, p, prec, mode)

        def al(r):
            return recurrence_alpha(m, r, csq)

        def be(r):
            return recurrence_beta(m, r, csq)

        def ga(r):
            return recurrence_gamma(m, r, csq)

        # head: forward recurrence from d_p = 1
        d = {p: mpf(1)}
        for r in range(p, N, 2):
            prev2 = d.get(r - 2, mpf(0))
            d[r + 2] = -((be(r) - lam) * d[r] + ga(r) * prev2) / al(r)

        want = mode.count
        depth = max(N + 2 * max(32, int(abs(c))) + 80,
                    N + 2 * (want or 0) + 10)
        for _attempt in range(12):
            # N^m_r = beta^m_r / (gamma^m_r - lam - N^m_{r+2}); anchor the
            # chain with a fully converged Lentz value at the deep end.
            r_deep = p + 2 * ((depth - p) // 2)

            def a_cf(k, r0=r_deep):
                r = r0 + 2 * (k - 1)
                return -ga(r) * al(r - 2)

            def b_cf(k, r0=r_deep):
                r = r0 + 2 * (k - 1)
                return be(r) - lam

            nm_deep = lentz(0, lambda k: a_cf(k + 1), lambda k: b_cf(k + 1),
                            prec + GUARD_BITS)
            nm_deep = ga(r_deep) * al(r_deep - 2) / (be(r_deep) - lam
                                                     - nm_deep)
            nm = {r_deep: nm_deep}
            for r in range(r_deep - 2, N + 1, -2):
                nm[r] = ga(r) * al(r - 2) / (be(r) - lam - nm[r + 2])
            dd = dict(d)
            series = [dd[r] for r in range(p, N + 1, 2)]
            done_at = None
            for r in range(N + 2, r_deep + 1, 2):
                dd[r] = -nm[r] / al(r - 2) * dd[r - 2]
                series.append(dd[r])
                enough = want is None or len(series) >= want
                if enough and _floor_done(series, mode.floor):
                    done_at = r
                    break
            if done_at is not None:
                entries = {r: v for r, v in dd.items() if r <= done_at}
                return _normalize_dr(entries, m, n, p, prec, mode)
            if want is not None and mode.floor is None \
                    and len(series) >= want:
                entries = {r: dd[r] for r in range(p, p + 2 * want, 2)}
                return _normalize_dr(entries, m, n, p, prec, mode)
            depth *= 2
        raise ConvergenceError(
            f"d_r did not fall below the floor by r = {depth // 2}")


def _flammer_weights(m, p):
    """w_r and the first index for the parity-appropriate Flammer sum."""
    if p == 0:
        w0 = fact(2 * m) / fact(m)

        def step(w, r):  # w_{r+2} from w_r
            return -w * (2 * m + r + 1) / (r + 2)

        return w0, step
    w1 = fact(2 * m + 2) / (2 * fact(m + 1))

    def step(w, r):
        return -w * (2 * m + r + 2) / (r + 1)

    return w1, step


def flammer_rhs(m, n):
    """Closed-form right side of the normalization identity."""
    p = parity_of(m, n)
    if p == 0:
        return ((-1) ** ((n - m) // 2) * fact(n + m)
                / (mpf(2) ** (n - m) * fact((n + m) // 2)
                   * fact((n - m) // 2)))
    return ((-1) ** ((n - m - 1) // 2) * fact(n + m + 1)
            / (mpf(2) ** (n - m) * fact((n + m + 1) // 2)
               * fact((n - m - 1) // 2)))


def flammer_sum(entries, m, p):
    w, step = _flammer_weights(m, p)
    total = mpf(0)
    for r in range(p, max(entries) + 1, 2):
        total += entries.get(r, mpf(0)) * w
        w = step(w, r)
    return total

def _normalize_dr(entries, m, n, p, prec, mode):
    total = flammer_sum(entries, m, p)
    rhs = flammer_rhs(m, n)
    if total == 0 or abs(total) < abs(rhs) * mpf(2) ** (-4 * (prec + 32)):
        raise ConvergenceError(
            "normalization sum vanished; lambda is on the wrong branch")
    scale = rhs / total
    out = {r: round_to(v * scale, prec) for r, v in entries.items()}
    return DrSet(entries=out, count=mode.count, floor=mode.floor)


# ---------------------------------------------------------------------------
# d_r for r < 0 plus the epsilon tail
# ---------------------------------------------------------------------------

def compute_dr_neg(kind: str, c, m: int, n: int, lam, drset: DrSet,
                   prec: int, mode: ModeSpec = DEFAULT_MODE) -> DrNegSet:
    """Negative-index coefficients and the d_{r|eps} tail.

    The plain negative range ends where the recurrence coefficient A
    vanishes (r = -2m for even parity, -2m+1 for odd); beyond it the plain
    coefficients are identically zero and the epsilon tail pairs with
    Legendre P instead of the divergent Legendre Q.
    """
    validate_kind(kind)
    p = parity_of(m, n)
    with working_prec(prec):
        c = mpmathify(c)
        lam = mpmathify(lam)
        A, B, C = _abc(kind, c, m)
        entries = {}
        if c == 0:
            return DrNegSet(entries={}, eps_entries={})
        L = -2 * m if p == 0 else -2 * m + 1  # plain boundary index
        anchor = drset.entries[p]
        if L < 0:
            # terminating continued fraction, evaluated bottom-up:
            # D_r = B_r - C_{r-2} A_r / D_{r-2}, ratio_r = -A_{r+2} / D_r.
            # The bottom denominator is B alone: the row below the boundary
            # has a vanishing coefficient, which the Wronskian check on the
            # resulting radial functions confirms empirically.
            D = {L: B(L, lam)}
            for r in range(L + 2, 0, 2):
                D[r] = B(r, lam) - C(r - 2) * A(r) / D[r - 2]
            cur = anchor
            for r in range(p - 2, L - 1, -2):
                cur = -A(r + 2) / D[r] * cur
                entries[r] = round_to(cur, prec)
        # epsilon tail seed; the explicit c**2 is the signed one
        csq = csq_for(kind, c)
        s = -2 * m - 2 if p == 0 else -2 * m - 1
        if p == 0:
            pref = csq / ((2 * m - 1) * (2 * m + 1))
            base = entries.get(-2 * m, anchor if m == 0 else None)
        else:
            pref = -csq / ((2 * m - 1) * (2 * m - 3))
            base = entries.get(-2 * m + 1, anchor if m == 0 else None)
        if base is None:
            raise DomainError("missing negative-r coefficient for the "
                              "epsilon-tail seed")

        def a_seed(k):
            if k == 1:
                return mpf(1)
            r = s - 2 * (k - 2)
            return -C(r - 2) * A(r)

        def b_seed(k):
            return B(s - 2 * (k - 1), lam)

        seed_cf = lentz(0, a_seed, b_seed, prec + GUARD_BITS)
        eps = {s: round_to(pref * seed_cf * base, prec)}
        # extend the tail: same continued-fraction ratios, non-terminating
        want = mode.count
        floor = mode.floor
        depth = 2 * (want or 0) + 2 * max(16, int(abs(c))) + 60
        for _attempt in range(12):
            r_bot = s - 2 * (depth // 2)

            def a_bot(k, r0=r_bot):
                r = r0 - 2 * (k - 1)
                return -C(r - 2) * A(r)

            def b_bot(k, r0=r_bot):
                return B(r0 - 2 * k, lam)

            tail_cf = lentz(0, a_bot, b_bot, prec + GUARD_BITS)
            D = {r_bot: B(r_bot, lam) + tail_cf}
            for r in range(r_bot + 2, s - 1, 2):
                D[r] = B(r, lam) - C(r - 2) * A(r) / D[r - 2]
            vals = [eps[s]]
            ok_at = None
            cur = eps[s]
            out = dict(eps)
            for r in range(s - 2, r_bot - 1, -2):
                cur = -A(r + 2) / D[r] * cur
                out[r] = round_to(cur, prec)
                vals.append(cur)
                enough = want is None or len(vals) >= want
                if enough and _floor_done(vals, floor):
                    ok_at = r
                    break
            if ok_at is not None:
                out = {r: v for r, v in out.items() if r >= ok_at}
                return DrNegSet(entries=entries, eps_entries=out)
            if want is not None and floor is None and len(vals) >= want:
                keep = sorted(out, reverse=True)[:want]
                return DrNegSet(entries=entries,
                                eps_entries={r: out[r] for r in keep})
            depth *= 2
        raise ConvergenceError("epsilon tail did not fall below the floor")


# ---------------------------------------------------------------------------
# c_2k
# ---------------------------------------------------------------------------

def compute_c2k(kind: str, c, m: int, n: int, drset: DrSet, prec: int,
                mode: ModeSpec = DEFAULT_MODE) -> C2kSet:
    """Power-series coefficients c_2k of the hypergeometric rewrite.

    The inner sum over r runs over the available d_r; its Pochhammer and
    factorial aggregates are advanced with O(1) multiplies per term.
    """
    validate_kind(kind)
    p = parity_of(m, n)
    with working_prec(prec):
        rmax = drset.rmax()
        d = drset.entries
        eps = mpf(2) ** (-(prec + GUARD_BITS))
        out = {}
        vals = []
        k = 0
        while True:
            r0 = 2 * k + p
            if r0 > rmax:
                break
            # u_r = (2m+r)!/r! * poch1 * poch2 at the starting index
            if p == 0:
                u = (fact(2 * m + 2 * k) / fact(2 * k)
                     * (-1) ** k * fact(k) * _poch(m + k + mpf(1) / 2, k))
            else:
                u = (fact(2 * m + 2 * k + 1) / fact(2 * k + 1)
                     * (-1) ** k * fact(k) * _poch(m + k + mpf(3) / 2, k))
            total = mpf(0)
            converged = False
            small = 0
            term = mpf(0)
            for r in range(r0, rmax + 1, 2):
                term = d[r] * u
                total += term
                if abs(term) <= abs(total) * eps or term == 0:
                    small += 1
                    if small >= 2:
                        converged = True
                        break
                else:
                    small = 0
                # advance the aggregate from r to r+2
                if p == 0:
                    u = u * ((2 * m + r + 2) * (2 * m + r + 1 + 2 * k)) \
                        / ((r + 1) * (r + 2 - 2 * k))
                else:
                    u = u * ((2 * m + r + 1) * (2 * m + r + 2 + 2 * k)) \
                        / ((r + 2) * (r + 1 - 2 * k))
            norm = mpf(2) ** m * fact(m + k) * fact(k)
            c2k = total / norm
            if not converged and mpmathify(c) == 0:
                converged = True  # the d_r sum is finite and exact
            if not converged:
                # the d_r supply ran out; fine when the truncation error is
                # negligible against the family's leading scale (trailing
                # coefficients below that scale carry no usable digits), or
                # below an explicit floor
                scale = max([abs(c2k)] + [abs(v) for v in vals])
                ok = abs(term) / norm <= scale * mpf(2) ** (-prec)
                if not ok and mode.floor is not None:
                    ok = abs(term) / norm < mode.floor
                if not ok:
                    raise ConvergenceError(
                        f"insufficient d_r supplied for c_2k at k = {k}")
            out[k] = round_to(c2k, prec)
            vals.append(c2k)
            enough = mode.count is None or len(vals) >= mode.count
            if enough and _floor_done(vals, mode.floor):
                break
            k += 1
        if mode.count is not None and len(vals) < mode.count:
            raise ConvergenceError(
                f"insufficient d_r supplied for {mode.count} c_2k values")
        return C2kSet(entries=out, parity=p,
                      exhausted=not _floor_done(vals, mode.floor))


def _poch(a, k):
    out = mpf(1)
    for i in range(k):
        out *= a + i
    return out


# ---------------------------------------------------------------------------
# Scalars
# ---------------------------------------------------------------------------

def compute_scalars(kind: str, c, m: int, n: int, drset: DrSet,
                    drneg: Optional[DrNegSet], prec: int) -> ScalarSpecials:
    """N, F and the joining factors k1, k2.

    For the oblate kind the returned k1/k2 are the phase-detached real
    values; every formula in this package consumes them in that form.
    """
    validate_kind(kind)
    p = parity_of(m, n)
    with working_prec(prec):
        c = mpmathify(c)
        d = drset.entries
        # N and F share the (2m+r)!/r! aggregate
        g = fact(2 * m + p) / fact(p)
        Nsum = mpf(0)
        Fsum = mpf(0)
        for r in range(p, drset.rmax() + 1, 2):
            dr = d.get(r, mpf(0))
            Nsum += dr * dr * g / (2 * m + 2 * r + 1)
            Fsum += dr * g
            g = g * ((2 * m + r + 1) * (2 * m + r + 2)) / ((r + 1) * (r + 2))
        Nval = 2 * Nsum
        F = Fsum
        if p == 0:
            k1 = ((2 * m + 1) * fact(m + n) * F
                  / (mpf(2) ** (m + n) * d[0] * c ** m * fact(m)
                     * fact((n - m) // 2) * fact((m + n) // 2)))
            dneg = d[0] if m == 0 else (drneg.entries[-2 * m]
                                        if drneg is not None else None)
            if dneg is None:
                raise DomainError("k2 needs the negative-index coefficient "
                                  f"d_{-2 * m}")
            k2 = (mpf(2) ** (n - m) * fact(2 * m) * fact((n - m) // 2)
                  * fact((m + n) // 2) * dneg * F * c ** (1 - m)
                  / ((2 * m - 1) * fact(m) * fact(m + n)))
        else:
            k1 = ((2 * m + 3) * fact(m + n + 1) * F
                  / (mpf(2) ** (m + n) * d[1] * c ** (m + 1) * fact(m)
                     * fact((n - m - 1) // 2) * fact((m + n + 1) // 2)))
            dneg = d[1] if m == 0 else (drneg.entries[-2 * m + 1]
                                        if drneg is not None else None)
            if dneg is None:
                raise DomainError("k2 needs the negative-index coefficient "
                                  f"d_{-2 * m + 1}")
            k2 = (-mpf(2) ** (n - m) * fact(2 * m) * fact((n - m - 1) // 2)
                  * fact((m + n + 1) // 2) * dneg * F * c ** (2 - m)
                  / ((2 * m - 3) * (2 * m - 1) * fact(m) * fact(m + n + 1)))
        return ScalarSpecials(N=round_to(Nval, prec), F=round_to(F, prec),
                              k1=round_to(k1, prec), k2=round_to(k2, prec))


# ---------------------------------------------------------------------------
# Oblate-only: alpha_r (Cauchy-product reciprocal), Q*, B_2r
# ---------------------------------------------------------------------------

def compute_alpha(kind: str, c, m: int, n: int, c2kset: C2kSet, r_max: int,
                  prec: int):
    """alpha_r = A_r * r! with sum(A_n x^n) the reciprocal of the squared
    c_2k power series."""
    if kind != OBLATE:
        raise DomainError("alpha_r exists only for the oblate kind")
    with working_prec(prec):
        C = [c2kset.entries.get(k, mpf(0)) for k in range(r_max + 1)]
        B = [sum(C[j] * C[i - j] for j in range(i + 1))
             for i in range(r_max + 1)]
        if B[0] == 0:
            raise DomainError("degenerate c_0: reciprocal series undefined")
        A = [1 / B[0]]
        for i in range(1, r_max + 1):
            A.append(-sum(A[j] * B[i - j] for j in range(i)) / B[0])
        return [round_to(A[r] * fact(r), prec) for r in range(r_max + 1)]


def compute_qstar(kind: str, c, m: int, n: int, k1, alpha, prec: int):
    """The arctan-term amplitude of the tertiary oblate R2 method.

    ``k1`` is the phase-detached joining factor, so the result is real.
    """
    if kind != OBLATE:
        raise DomainError("Q* exists only for the oblate kind")
    p = parity_of(m, n)
    with working_prec(prec):
        c = mpmathify(c)
        total = mpf(0)
        for r in range(0, m + 1):
            den = fact(r) * (mpf(2) ** (m - r) * fact(m - r)) ** 2
            if p == 0:
                total += alpha[r] * fact(2 * m - 2 * r) / den
            else:
                total += alpha[r] * fact(2 * m - 2 * r + 1) / den
        q = k1 * k1 / c * total
        if p == 1:
            q = -q
        return round_to(q, prec)


def _b2r_abc(m, p, lam, csq_abs):
    """Recurrence coefficients of the nonhomogeneous B_2r relation."""
    if p == 0:
        def a(r):
            return mpf((2 * r + 2) * (2 * r + 3))

        def b(r):
            return (2 * r + 1) * (2 * r - 2 * m + 2) + m * (m - 1) - lam
    else:
        def a(r):
            return mpf((2 * r + 1) * (2 * r + 2))

        def b(r):
            return 2 * r * (2 * r - 2 * m + 1) + m * (m - 1) - lam

    def g(r):
        return csq_abs

    return a, b, g


def b2r_rhs(c, m: int, n: int, qstar, k1, c2kset: C2kSet, r: int, prec: int):
    """h_2r, the nonhomogeneous right side, with factored term updates."""
    p = parity_of(m, n)
    with working_prec(prec):
        c2k = c2kset.entries
        kmax = max(c2k)
        eps = mpf(2) ** (-(prec + GUARD_BITS))

        def series(offset):
            # offset 0: weight (m+2k) (m+k-1)!/((m+k-1-r)! r!), k >= r-m+1
            # offset 1: weight (m+2k+1) (m+k)!/((m+k-r)! r!),  k >= r-m
            k0 = max(0, r - m + 1 - offset)
            if offset == 0:
                aux = fact(m + k0 - 1) / (fact(m + k0 - 1 - r) * fact(r))
            else:
                aux = fact(m + k0) / (fact(m + k0 - r) * fact(r))
            total = mpf(0)
            small = 0
            for k in range(k0, kmax + 1):
                w = (m + 2 * k) if offset == 0 else (m + 2 * k + 1)
                term = c2k.get(k, mpf(0)) * w * aux
                total += term
                if abs(term) <= abs(total) * eps or term == 0:
                    small += 1
                    if small >= 3:
                        break
                else:
                    small = 0
                if offset == 0:
                    aux = aux * (m + k) / (m + k - r)
                else:
                    aux = aux * (m + k + 1) / (m + k + 1 - r)
            return total

        if p == 0:
            h = -2 * qstar / k1 * series(0)
        else:
            h = -2 * qstar / k1 * (series(1) - series(0))
        return round_to(h, prec)


def compute_B2r(kind: str, c, m: int, n: int, lam, qstar, k1,
                c2kset: C2kSet, prec: int,
                mode: ModeSpec = DEFAULT_MODE,
                force_tridiagonal: bool = False,
                drset: Optional[DrSet] = None) -> B2rSet:
    """B_2r by forward recurrence while the solution grows, then an
    Olver-style tridiagonal solve once it decays.

    ``force_tridiagonal`` solves the whole range (r >= 1) as one banded
    system, which the hybrid is cross-checked against.
    """
    if kind != OBLATE:
        raise DomainError("B_2r exists only for the oblate kind")
    p = parity_of(m, n)
    with working_prec(prec):
        c = mpmathify(c)
        lam = mpmathify(lam)
        csq = c * c
        a, b, g = _b2r_abc(m, p, lam, csq)

        # starting value from the power-series R1 at xi = 0; the c_2k sum
        # there can cancel catastrophically (each coefficient carries only
        # its own rounding), so prefer the Legendre-route value of the same
        # quantity when the d_r are available: its terms do not cancel
        if drset is not None:
            d = drset.entries
            fam = legendre_p_family(m, m + max(d), mpf(0),
                                    prec + GUARD_BITS, "cut")
            s0 = mpf(0)
            for r in sorted(d):
                s0 += d[r] * fam[m + r][p]
            s0 *= mpf(-1) ** m
        else:
            s0 = sum(c2kset.entries.values())
        if s0 == 0:
            raise ConvergenceError("power-series R1 vanished at xi = 0")

        # the same cancellation sits inside the h series at small row
        # index, where it amplifies the rounding of the stored c_2k; when
        # it exceeds the guard bits, recompute the head of the family at
        # a precision that absorbs it (the tail terms do not cancel and
        # keep their stored accuracy)
        h_c2k = c2kset
        h_prec = prec + GUARD_BITS
        if drset is not None:
            mxc = max(abs(v) for v in c2kset.entries.values())
            extra = int(mp.ceil(mp.log(mxc / abs(s0), 2))) + 8
            extra = min(max(extra, 0), 4 * prec)
            if extra > GUARD_BITS:
                try:
                    head = compute_c2k(kind, c, m, n, drset,
                                       prec + GUARD_BITS + extra,
                                       ModeSpec(floor=abs(s0) * mpf(2)
                                                ** (-(prec + GUARD_BITS))))
                    merged = dict(c2kset.entries)
                    merged.update(head.entries)
                    h_c2k = C2kSet(entries=merged, parity=c2kset.parity,
                                   exhausted=c2kset.exhausted)
                    h_prec = prec + GUARD_BITS + extra
                except ConvergenceError:
                    pass

        def h(r):
            return b2r_rhs(c, m, n, qstar, k1, h_c2k, r, h_prec)
        r10 = s0 / k1
        if p == 0:
            b0 = 1 / (c * r10) - qstar * r10
        else:
            b0 = -1 / (c * r10)
        entries = {0: round_to(b0, prec)}
        want = mode.count
        floor = mode.floor

        # forward while growing
        crossover = 0
        if not force_tridiagonal:
            prev2 = mpf(0)
            cur = b0
            r = 0
            decays = 0
            hard_cap = 100000
            while r < hard_cap:
                nxt = (h(r) - b(r) * cur - (g(r) * prev2 if r > 0 else 0)) \
                    / a(r)
                if abs(nxt) < abs(cur):
                    decays += 1
                    if decays >= 2:
                        break
                else:
                    decays = 0
                prev2, cur = cur, nxt
                r += 1
                entries[r] = round_to(cur, prec)
            crossover = max(0, r - 2)
            entries = {k: v for k, v in entries.items() if k <= crossover}

        # tridiagonal solve for the decaying range (or the whole range)
        r_known = crossover
        need = max(want or 0, r_known + 8)
        size = need + max(24, int(abs(c)))
        prev_sol = None
        for _attempt in range(10):
            lo_idx = r_known + 1
            nrows = size - r_known
            sub = [g(lo_idx + i) for i in range(nrows)]
            dia = [b(lo_idx + i) for i in range(nrows)]
            sup = [a(lo_idx + i) for i in range(nrows)]
            rhs = [h(lo_idx + i) for i in range(nrows)]
            rhs[0] -= g(lo_idx) * entries[r_known]
            sub[0] = mpf(0)
            sup[-1] = mpf(0)  # truncation row: B beyond the window is 0
            sol = solve_tridiagonal(sub, dia, sup, rhs)
            scale = max(abs(entries[0]), max(abs(v) for v in sol))
            stable = prev_sol is not None and all(
                abs(sol[i] - prev_sol[i]) <= mpf(2) ** (-prec) * scale
                for i in range(min(need, len(prev_sol))))
            tail_ok = floor is None or abs(sol[-1]) < floor
            if stable and tail_ok:
                break
            prev_sol = sol
            size = int(size * 2)
        out = dict(entries)
        vals = [out[k] for k in sorted(out)]
        done = None
        for i, v in enumerate(sol):
            r = lo_idx + i
            out[r] = round_to(v, prec)
            vals.append(v)
            enough = want is None or len(vals) >= want
            if enough and _floor_done(vals, floor):
                done = r
                break
        if done is not None:
            out = {k: v for k, v in out.items() if k <= done}
        elif floor is not None:
            raise ConvergenceError(
                "B_2r did not fall below the floor inside the solve window")
        return B2rSet(entries=out, growth_crossover=crossover)


# ---------------------------------------------------------------------------
# Orchestration
# ---------------------------------------------------------------------------

def compute_everything(params: Params,
                       dr_mode: ModeSpec = DEFAULT_MODE,
                       dr_neg_mode: ModeSpec = DEFAULT_MODE,
                       c2k_mode: ModeSpec = DEFAULT_MODE,
                       b2r_mode: ModeSpec = DEFAULT_MODE,
                       seed: float = None) -> CoefficientSet:
    """Run the full dependency chain for one parameter set."""
    kind, c, m, n, prec = (params.kind, params.c, params.m, params.n,
                           params.prec)
    cv = characteristic_value(kind, c, m, n, prec, seed=seed)
    lam = cv.lam
    dr = compute_dr(kind, c, m, n, lam, prec, dr_mode)
    dr_neg = compute_dr_neg(kind, c, m, n, lam, dr, prec, dr_neg_mode)
    specials = compute_scalars(kind, c, m, n, dr, dr_neg, prec)
    c2k = compute_c2k(kind, c, m, n, dr, prec, c2k_mode)
    out = CoefficientSet(params=params, lam=lam, dr=dr, dr_neg=dr_neg,
                         c2k=c2k, specials=specials)
    if kind == OBLATE:
        alpha = compute_alpha(kind, c, m, n, c2k, m, prec)
        out.alpha = alpha
        specials.Qstar = compute_qstar(kind, c, m, n, specials.k1, alpha,
                                       prec)
        out.b2r = compute_B2r(kind, c, m, n, lam, specials.Qstar,
                              specials.k1, c2k, prec, b2r_mode, drset=dr)
    return out
