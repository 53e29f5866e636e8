"""ASCII disk cache for characteristic values and coefficient families.

Every record lives in its own file under ``data/`` with the key encoded in
the name: ``data/{pro|obl}_{C8}_{MMM}_{NNN}_{tag}.txt`` where C8 is
round(c * 1000) zero-padded to 8 digits and MMM/NNN are zero-padded m and n.
Scalar files hold the decimal value on the first line and the precision in
bits on the second.  Indexed files open with a ``precision`` header followed
by ascending ``index value`` pairs; the negative-index family appends its
epsilon tail after a sentinel line.  A family that stopped at the
representability limit of its precision (rather than at the requested
floor) ends with an ``exhausted`` marker line, so reruns know the record
cannot be deepened at that precision and reuse it.

Values are rendered with ceil(bits * log10(2)) + 2 digits, enough for the
reparse at the stored precision to be bit-exact.
"""
from __future__ import annotations

import math
import os
import tempfile

from mpmath import mp, mpf

from .core import (
    CacheMissError,
    CorruptRecordError,
    DomainError,
    OBLATE,
    PROLATE,
    validate_kind,
)

#: every quantity the cache can hold (S1/R name CLI output captures)
QUANTITY_TAGS = ("lambda", "dr", "dr_neg", "N", "F", "k1", "k2", "c2k",
                 "Q", "B2r", "S1", "R")

_EPS_SENTINEL = "eps"
_EXHAUSTED_SENTINEL = "exhausted"


def digits_for(prec: int) -> int:
    return int(math.ceil(prec * math.log10(2))) + 2


def format_value(x, prec: int) -> str:
    """Deterministic decimal rendering that round-trips at ``prec`` bits."""
    with mp.workprec(prec):
        x = +mpf(x)
        return mp.nstr(x, digits_for(prec), strip_zeros=False,
                       min_fixed=1, max_fixed=0)


def parse_value(s: str, prec: int):
    with mp.workprec(prec):
        return +mpf(s)


def cache_path(kind: str, c, m: int, n: int, tag: str) -> str:
    validate_kind(kind)
    if tag not in QUANTITY_TAGS:
        raise DomainError(f"unknown cache tag {tag!r}")
    c1000 = float(c) * 1000
    if abs(c1000 - round(c1000)) > 1e-9:
        raise DomainError(
            f"c = {c} is not representable in the file encoding "
            f"(c*1000 must be integral)")
    enc = int(round(c1000))
    if not 0 <= enc < 10 ** 8:
        raise DomainError(f"c = {c} outside the 8-digit file encoding")
    prefix = "pro" if kind == PROLATE else "obl"
    return os.path.join("data", f"{prefix}_{enc:08d}_{m:03d}_{n:03d}_"
                                f"{tag}.txt")


def _atomic_write(path: str, text: str) -> None:
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _read(path: str) -> str:
    if not os.path.exists(path):
        raise CacheMissError(f"no cache record at {path}")
    with open(path) as f:
        return f.read()


def save_scalar(root: str, kind: str, c, m: int, n: int, tag: str,
                value, prec: int) -> str:
    path = os.path.join(root, cache_path(kind, c, m, n, tag))
    _atomic_write(path, f"{format_value(value, prec)}\n{prec}\n")
    return path


def load_scalar(root: str, kind: str, c, m: int, n: int, tag: str):
    """Return (value, precision_bits)."""
    path = os.path.join(root, cache_path(kind, c, m, n, tag))
    lines = _read(path).splitlines()
    try:
        if len(lines) < 2:
            raise ValueError("truncated scalar record")
        prec = int(lines[1])
        value = parse_value(lines[0], prec)
    except (ValueError, ArithmeticError) as exc:
        raise CorruptRecordError(f"cannot parse {path}: {exc}") from exc
    return value, prec


def save_indexed(root: str, kind: str, c, m: int, n: int, tag: str,
                 entries: dict, prec: int, eps_entries: dict = None,
                 exhausted: bool = False) -> str:
    path = os.path.join(root, cache_path(kind, c, m, n, tag))
    out = [f"precision {prec}"]
    for r in sorted(entries):
        out.append(f"{r} {format_value(entries[r], prec)}")
    if eps_entries is not None:
        out.append(_EPS_SENTINEL)
        for r in sorted(eps_entries):
            out.append(f"{r} {format_value(eps_entries[r], prec)}")
    if exhausted:
        out.append(_EXHAUSTED_SENTINEL)
    _atomic_write(path, "\n".join(out) + "\n")
    return path


def load_indexed(root: str, kind: str, c, m: int, n: int, tag: str):
    """Return (entries, eps_entries or None, precision_bits, exhausted)."""
    path = os.path.join(root, cache_path(kind, c, m, n, tag))
    lines = [ln.strip() for ln in _read(path).splitlines() if ln.strip()]
    try:
        head = lines[0].split()
        if len(head) != 2 or head[0] != "precision":
            raise ValueError("missing precision header")
        prec = int(head[1])
        entries = {}
        eps = None
        exhausted = False
        target = entries
        for ln in lines[1:]:
            if exhausted:
                raise ValueError("content after the exhausted marker")
            if ln == _EPS_SENTINEL:
                if eps is not None:
                    raise ValueError("duplicate sentinel")
                eps = {}
                target = eps
                continue
            if ln == _EXHAUSTED_SENTINEL:
                exhausted = True
                continue
            idx_s, val_s = ln.split()
            target[int(idx_s)] = parse_value(val_s, prec)
    except (ValueError, ArithmeticError, IndexError) as exc:
        raise CorruptRecordError(f"cannot parse {path}: {exc}") from exc
    return entries, eps, prec, exhausted
