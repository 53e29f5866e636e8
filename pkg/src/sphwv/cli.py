"""Command-line front end: ``pro_sphwv`` and ``obl_sphwv``.

Both programs share one argument contract.  Seven base arguments are always
required (-max_memory, -prec, -verbose, -c, -m, -n, -w); the work tag given
to -w selects zero or more follow-up arguments.  Computed quantities are
stored under ./data/ and reused by later invocations when the stored
precision suffices.  Grid work (-w S1 / -w R) prints rows to stdout with -p
significant digits; diagnostics go to stderr.

Exit codes: 0 success, 2 argument error, 3 domain error, 4 convergence
failure, 5 memory budget exceeded.
"""
from __future__ import annotations

import argparse
import resource
import sys
import time

from mpmath import mp, mpf

from . import cache
from .core import (
    ConvergenceError,
    DomainError,
    LowConfidenceError,
    OBLATE,
    OBLATE_R1_METHODS,
    OBLATE_R2_METHODS,
    PROLATE,
    PROLATE_R1_METHODS,
    PROLATE_R2_METHODS,
    CoefficientSet,
    C2kSet,
    DrNegSet,
    DrSet,
    B2rSet,
    Params,
    ScalarSpecials,
)
from .charvalue import characteristic_value
from .coefficients import (
    ModeSpec,
    compute_alpha,
    compute_B2r,
    compute_c2k,
    compute_dr,
    compute_dr_neg,
    compute_qstar,
    compute_scalars,
)
from .functions import angle_S1, radial, radial_auto

EXIT_OK = 0
EXIT_ARGS = 2
EXIT_DOMAIN = 3
EXIT_CONVERGENCE = 4
EXIT_MEMORY = 5

SCALAR_WORKS = ("lambda", "N", "F", "k1", "k2", "Q")
ALL_WORKS = ("lambda", "dr", "dr_neg", "N", "F", "k1", "k2", "c2k",
             "Q", "B2r", "everything", "S1", "R")


def build_parser(prog: str, kind: str) -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog=prog, prefix_chars="-",
        description=f"compute {kind} spheroidal wave functions")
    ap.add_argument("-max_memory", type=int, required=True,
                    help="memory budget in MB")
    ap.add_argument("-prec", type=int, required=True,
                    help="bits of precision")
    ap.add_argument("-verbose", choices=("y", "n"), required=True)
    ap.add_argument("-c", type=str, required=True,
                    help="size parameter (wavenumber times half the "
                         "interfocal distance)")
    ap.add_argument("-m", type=int, required=True)
    ap.add_argument("-n", type=int, required=True)
    ap.add_argument("-w", required=True, choices=ALL_WORKS,
                    help="what to compute")
    ap.add_argument("-n_dr", type=int)
    ap.add_argument("-dr_min", type=str)
    ap.add_argument("-n_dr_neg", type=int)
    ap.add_argument("-dr_neg_min", type=str)
    ap.add_argument("-n_c2k", type=int)
    ap.add_argument("-c2k_min", type=str)
    ap.add_argument("-n_B2r", type=int)
    ap.add_argument("-B2r_min", type=str)
    ap.add_argument("-a", type=str, help="grid start")
    ap.add_argument("-b", type=str, help="grid end")
    ap.add_argument("-d", type=str, help="grid spacing")
    ap.add_argument("-arg_type", type=str)
    ap.add_argument("-which", type=str,
                    help="comma-separated radial method tags")
    ap.add_argument("-p", type=int, help="significant digits to print")
    # reproduces the two-step workflow where the seed is supplied externally
    ap.add_argument("-lambda_approx", type=float, help=argparse.SUPPRESS)
    return ap


class Job:
    """One invocation: parameter set, modes, cache root, and lazy stages."""

    def __init__(self, kind: str, args):
        self.kind = kind
        self.args = args
        self.prec = args.prec
        self.c = mpf(args.c)
        self.m = args.m
        self.n = args.n
        self.params = Params(kind, self.c, self.m, self.n, self.prec)
        self.root = "."
        self.verbose = args.verbose == "y"
        self.seed = args.lambda_approx
        self.modes = {
            "dr": self._mode(args.n_dr, args.dr_min),
            "dr_neg": self._mode(args.n_dr_neg, args.dr_neg_min),
            "c2k": self._mode(args.n_c2k, args.c2k_min),
            "B2r": self._mode(args.n_B2r, args.B2r_min),
        }
        self._cs = CoefficientSet(params=self.params)
        self._alpha = None

    @staticmethod
    def _mode(count, floor):
        if count is None and floor is None:
            return ModeSpec(floor=mpf("1e-200"))
        return ModeSpec(count=count,
                        floor=None if floor is None else mpf(floor))

    def log(self, msg: str) -> None:
        if self.verbose:
            print(msg, file=sys.stderr)

    def check_memory(self) -> None:
        used_mb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024
        if used_mb > self.args.max_memory:
            print(f"memory budget exceeded: {used_mb:.0f} MB > "
                  f"{self.args.max_memory} MB", file=sys.stderr)
            sys.exit(EXIT_MEMORY)

    # --- lazy stages, each backed by one cache file -----------------------

    def _scalar_cached(self, tag: str):
        try:
            value, stored = cache.load_scalar(self.root, self.kind, self.c,
                                              self.m, self.n, tag)
        except (cache.CacheMissError, cache.CorruptRecordError):
            return None
        if stored < self.prec:
            return None
        self.log(f"{tag}: cache hit ({stored} bits)")
        return value

    def _indexed_cached(self, tag: str, mode: ModeSpec, with_eps=False):
        try:
            entries, eps, stored, exhausted = cache.load_indexed(
                self.root, self.kind, self.c, self.m, self.n, tag)
        except (cache.CacheMissError, cache.CorruptRecordError):
            return None
        if stored < self.prec:
            return None
        check = eps if with_eps else entries
        if mode.count is not None and len(check) < mode.count:
            return None
        # an exhausted record already carries every value representable at
        # the stored precision, so no recomputation could reach a deeper
        # floor at this precision
        if mode.floor is not None and check and not exhausted:
            smallest = min(abs(v) for v in check.values())
            if smallest > mode.floor:
                return None
        self.log(f"{tag}: cache hit ({stored} bits, {len(entries)} entries)")
        return entries, eps, exhausted

    def get_lambda(self):
        if self._cs.lam is None:
            lam = self._scalar_cached("lambda")
            if lam is None:
                t0 = time.time()
                cv = characteristic_value(self.kind, self.c, self.m, self.n,
                                          self.prec, seed=self.seed)
                lam = cv.lam
                cache.save_scalar(self.root, self.kind, self.c, self.m,
                                  self.n, "lambda", lam, self.prec)
                self.log(f"lambda: {mp.nstr(lam, 20)} (seed {cv.seed}, "
                         f"residual {mp.nstr(cv.residual, 3)}, "
                         f"{time.time() - t0:.2f}s)")
            self._cs.lam = lam
            self.check_memory()
        return self._cs.lam

    def get_dr(self) -> DrSet:
        if self._cs.dr is None:
            mode = self.modes["dr"]
            hit = self._indexed_cached("dr", mode)
            if hit is not None:
                self._cs.dr = DrSet(entries=hit[0], count=mode.count,
                                    floor=mode.floor)
            else:
                lam = self.get_lambda()
                self._cs.dr = compute_dr(self.kind, self.c, self.m, self.n,
                                         lam, self.prec, mode)
                cache.save_indexed(self.root, self.kind, self.c, self.m,
                                   self.n, "dr", self._cs.dr.entries,
                                   self.prec)
                self.log(f"dr: {len(self._cs.dr.entries)} entries up to "
                         f"r = {self._cs.dr.rmax()}")
            self.check_memory()
        return self._cs.dr

    def get_dr_neg(self) -> DrNegSet:
        if self._cs.dr_neg is None:
            mode = self.modes["dr_neg"]
            hit = self._indexed_cached("dr_neg", mode, with_eps=True)
            if hit is not None and hit[1] is not None:
                self._cs.dr_neg = DrNegSet(entries=hit[0],
                                           eps_entries=hit[1])
            else:
                lam = self.get_lambda()
                self._cs.dr_neg = compute_dr_neg(
                    self.kind, self.c, self.m, self.n, lam, self.get_dr(),
                    self.prec, mode)
                cache.save_indexed(self.root, self.kind, self.c, self.m,
                                   self.n, "dr_neg",
                                   self._cs.dr_neg.entries, self.prec,
                                   eps_entries=self._cs.dr_neg.eps_entries)
                self.log(f"dr_neg: {len(self._cs.dr_neg.entries)} plain + "
                         f"{len(self._cs.dr_neg.eps_entries)} tail entries")
            self.check_memory()
        return self._cs.dr_neg

    def get_scalars(self) -> ScalarSpecials:
        if self._cs.specials is None:
            cached = {t: self._scalar_cached(t) for t in
                      ("N", "F", "k1", "k2")}
            if all(v is not None for v in cached.values()):
                self._cs.specials = ScalarSpecials(**cached)
            else:
                sp = compute_scalars(self.kind, self.c, self.m, self.n,
                                     self.get_dr(), self.get_dr_neg(),
                                     self.prec)
                for tag in ("N", "F", "k1", "k2"):
                    cache.save_scalar(self.root, self.kind, self.c, self.m,
                                      self.n, tag, getattr(sp, tag),
                                      self.prec)
                self._cs.specials = sp
                self.log(f"N = {mp.nstr(sp.N, 12)}, F = {mp.nstr(sp.F, 12)}"
                         f", k1 = {mp.nstr(sp.k1, 12)}, "
                         f"k2 = {mp.nstr(sp.k2, 12)}")
            self.check_memory()
        return self._cs.specials

    def get_c2k(self) -> C2kSet:
        if self._cs.c2k is None:
            mode = self.modes["c2k"]
            hit = self._indexed_cached("c2k", mode)
            if hit is not None:
                self._cs.c2k = C2kSet(entries=hit[0],
                                      parity=self.params.parity,
                                      exhausted=hit[2])
            else:
                self._cs.c2k = compute_c2k(self.kind, self.c, self.m,
                                           self.n, self.get_dr(), self.prec,
                                           mode)
                cache.save_indexed(self.root, self.kind, self.c, self.m,
                                   self.n, "c2k", self._cs.c2k.entries,
                                   self.prec,
                                   exhausted=self._cs.c2k.exhausted)
                self.log(f"c2k: {len(self._cs.c2k.entries)} entries")
            self.check_memory()
        return self._cs.c2k

    def get_qstar(self):
        if self.kind != OBLATE:
            raise DomainError("Q* exists only for the oblate kind")
        sp = self.get_scalars()
        if sp.Qstar is None:
            q = self._scalar_cached("Q")
            if q is None:
                self._alpha = compute_alpha(self.kind, self.c, self.m,
                                            self.n, self.get_c2k(), self.m,
                                            self.prec)
                q = compute_qstar(self.kind, self.c, self.m, self.n, sp.k1,
                                  self._alpha, self.prec)
                cache.save_scalar(self.root, self.kind, self.c, self.m,
                                  self.n, "Q", q, self.prec)
                self.log(f"Q* = {mp.nstr(q, 12)}")
            sp.Qstar = q
            self.check_memory()
        return sp.Qstar

    def get_b2r(self) -> B2rSet:
        if self.kind != OBLATE:
            raise DomainError("B_2r exists only for the oblate kind")
        if self._cs.b2r is None:
            mode = self.modes["B2r"]
            hit = self._indexed_cached("B2r", mode)
            if hit is not None:
                self._cs.b2r = B2rSet(entries=hit[0], growth_crossover=-1)
            else:
                qstar = self.get_qstar()
                self._cs.b2r = compute_B2r(
                    self.kind, self.c, self.m, self.n, self.get_lambda(),
                    qstar, self.get_scalars().k1, self.get_c2k(), self.prec,
                    mode, drset=self.get_dr())
                cache.save_indexed(self.root, self.kind, self.c, self.m,
                                   self.n, "B2r", self._cs.b2r.entries,
                                   self.prec)
                self.log(f"B2r: {len(self._cs.b2r.entries)} entries, "
                         f"crossover {self._cs.b2r.growth_crossover}")
            self.check_memory()
        return self._cs.b2r

    def coefficient_set(self, need_b2r=None) -> CoefficientSet:
        self.get_lambda()
        self.get_dr()
        self.get_dr_neg()
        self.get_scalars()
        self.get_c2k()
        if self.kind == OBLATE and (need_b2r or need_b2r is None):
            self.get_qstar()
            self.get_b2r()
        return self._cs


def _grid(a, b, d):
    out = []
    k = 0
    tol = d * mpf("1e-9")
    while True:
        t = a + k * d
        if t > b + tol:
            break
        out.append(t)
        k += 1
    return out


def _fmt(x, p: int) -> str:
    if x is None:
        return "nan"
    return mp.nstr(mpf(x), p, strip_zeros=False, min_fixed=1, max_fixed=0)


def _require(args, names):
    missing = [f"-{n}" for n in names if getattr(args, n) is None]
    if missing:
        print(f"missing required arguments for -w {args.w}: "
              f"{', '.join(missing)}", file=sys.stderr)
        raise SystemExit(EXIT_ARGS)


def run_S1(job: Job) -> None:
    args = job.args
    _require(args, ("a", "b", "d", "arg_type", "p"))
    if args.arg_type not in ("eta", "theta/pi"):
        raise DomainError(f"invalid -arg_type {args.arg_type!r} for S1")
    job.get_lambda()
    job.get_dr()
    p = args.p
    with mp.workprec(job.prec):
        a, b, d = mpf(args.a), mpf(args.b), mpf(args.d)
        for t in _grid(a, b, d):
            eta = t if args.arg_type == "eta" else mp.cos(t * mp.pi)
            pair = angle_S1(job.params, job._cs, eta, job.prec)
            print(f"{_fmt(t, p)} {_fmt(pair.value, p)} "
                  f"{_fmt(pair.derivative, p)}")


def run_R(job: Job) -> None:
    args = job.args
    _require(args, ("a", "b", "d", "arg_type", "which", "p"))
    valid_arg = ("xi", "x") if job.kind == PROLATE else ("xi",)
    if args.arg_type not in valid_arg:
        raise DomainError(f"invalid -arg_type {args.arg_type!r} for this "
                          f"kind")
    r1_tags = (PROLATE_R1_METHODS if job.kind == PROLATE
               else OBLATE_R1_METHODS)
    r2_tags = (PROLATE_R2_METHODS if job.kind == PROLATE
               else OBLATE_R2_METHODS)
    which = args.which.split(",")
    for tag in which:
        if tag not in r1_tags + r2_tags:
            raise DomainError(f"invalid method tag {tag!r} in -which")
    job.coefficient_set(need_b2r=any(t.startswith("R2_3") for t in which)
                        or job.kind == OBLATE)
    p = args.p
    with mp.workprec(job.prec):
        a, b, d = mpf(args.a), mpf(args.b), mpf(args.d)
        for t in _grid(a, b, d):
            xi = t if args.arg_type == "xi" else mp.sqrt(t * t + 1)
            cols = [_fmt(t, p)]
            for tag in which:
                try:
                    pair = radial(job.params, job._cs, xi, tag, job.prec)
                    cols += [_fmt(pair.value, p), _fmt(pair.derivative, p)]
                except (DomainError, ConvergenceError):
                    cols += ["nan", "nan"]
            try:
                auto = radial_auto(job.params, job._cs, xi, job.prec)
            except LowConfidenceError as exc:
                auto = exc.result
                job.log(f"xi = {mp.nstr(xi, 8)}: {exc}")
            except (DomainError, ConvergenceError) as exc:
                job.log(f"xi = {mp.nstr(xi, 8)}: no admissible combination "
                        f"({exc})")
                auto = None
            if auto is not None:
                cols += [auto.chosen[0], auto.chosen[1],
                         _fmt(auto.wronskian_rel_error, p)]
            else:
                cols += ["none", "none", "nan"]
            print(" ".join(cols))


def run(job: Job) -> None:
    w = job.args.w
    if w == "lambda":
        job.get_lambda()
    elif w == "dr":
        job.get_dr()
    elif w == "dr_neg":
        job.get_dr_neg()
    elif w in ("N", "F", "k1", "k2"):
        job.get_scalars()
    elif w == "c2k":
        job.get_c2k()
    elif w == "Q":
        job.get_qstar()
    elif w == "B2r":
        job.get_b2r()
    elif w == "everything":
        job.coefficient_set()
    elif w == "S1":
        run_S1(job)
    elif w == "R":
        run_R(job)
    else:  # pragma: no cover - argparse already restricts choices
        raise DomainError(f"unknown work {w!r}")


def _main(kind: str, prog: str, argv=None) -> int:
    ap = build_parser(prog, kind)
    args = ap.parse_args(argv)
    try:
        job = Job(kind, args)
        if kind == PROLATE and args.w in ("Q", "B2r"):
            raise DomainError(f"-w {args.w} is only valid for obl_sphwv")
        run(job)
    except SystemExit:
        raise
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except ConvergenceError as exc:
        print(f"convergence failure: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except MemoryError:
        print("out of memory", file=sys.stderr)
        return EXIT_MEMORY
    return EXIT_OK


def main_pro(argv=None) -> int:
    return _main(PROLATE, "pro_sphwv", argv)


def main_obl(argv=None) -> int:
    return _main(OBLATE, "obl_sphwv", argv)


if __name__ == "__main__":  # pragma: no cover
    prog = "obl_sphwv" if "obl" in sys.argv[0] else "pro_sphwv"
    kind = OBLATE if prog == "obl_sphwv" else PROLATE
    sys.exit(_main(kind, prog))
