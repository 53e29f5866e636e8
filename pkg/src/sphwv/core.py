"""Shared parameter and result types for the spheroidal wave function library."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from mpmath import mpf

PROLATE = "prolate"
OBLATE = "oblate"
KINDS = (PROLATE, OBLATE)

#: Radial-method tags.  R2_31/R2_32 exist only for the oblate kind.
PROLATE_R1_METHODS = ("R1_1", "R1_2")
PROLATE_R2_METHODS = ("R2_1", "R2_2")
OBLATE_R1_METHODS = ("R1_1", "R1_2")
OBLATE_R2_METHODS = ("R2_1", "R2_2", "R2_31", "R2_32")

#: Admissible (R1, R2) pairings.  The oblate list is fixed to six combinations:
#: a power-series R2_3 evaluation is only paired with the R1 method it uses
#: internally.
PROLATE_COMBINATIONS = (
    ("R1_1", "R2_1"),
    ("R1_1", "R2_2"),
    ("R1_2", "R2_1"),
    ("R1_2", "R2_2"),
)
OBLATE_COMBINATIONS = (
    ("R1_1", "R2_1"),
    ("R1_1", "R2_2"),
    ("R1_1", "R2_31"),
    ("R1_2", "R2_1"),
    ("R1_2", "R2_2"),
    ("R1_2", "R2_32"),
)


class SphwvError(Exception):
    """Base class for all library errors."""


class DomainError(SphwvError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class ConvergenceError(SphwvError, ArithmeticError):
    """An iteration or continued fraction failed to converge."""


class LowConfidenceError(SphwvError):
    """Every admissible radial method combination exceeded the error ceiling.

    The best result found is attached as ``.result``.
    """

    def __init__(self, message, result):
        super().__init__(message)
        self.result = result


class CacheMissError(SphwvError, FileNotFoundError):
    """A requested cache record does not exist on disk."""


class CorruptRecordError(SphwvError, ValueError):
    """A cache record exists but could not be parsed."""


def parity_of(m: int, n: int) -> int:
    """0 when n - m is even, 1 when odd."""
    return (n - m) % 2


def validate_kind(kind: str) -> str:
    if kind not in KINDS:
        raise DomainError(f"kind must be one of {KINDS}, got {kind!r}")
    return kind


def validate_mode(kind: str, m: int, n: int) -> None:
    if m < 0:
        raise DomainError(f"m must be >= 0, got {m}")
    if n < m:
        raise DomainError(f"n must be >= m, got n={n}, m={m}")


@dataclass(frozen=True)
class Params:
    """The problem triple plus working precision.

    ``c`` is the size parameter (wavenumber times half the interfocal
    distance); for the oblate kind all internal formulas substitute
    ``c**2 -> -c**2`` where the prolate-to-oblate transform requires it.
    """

    kind: str
    c: mpf
    m: int
    n: int
    prec: int = 100

    def __post_init__(self):
        validate_kind(self.kind)
        validate_mode(self.kind, self.m, self.n)
        if self.prec < 2:
            raise DomainError(f"prec must be >= 2 bits, got {self.prec}")

    @property
    def parity(self) -> int:
        return parity_of(self.m, self.n)


@dataclass
class EvalPair:
    """A function value with its derivative in the evaluation argument.

    ``second`` carries the second derivative when the evaluation route
    provides one analytically; it is used by the ODE-residual diagnostics.
    """

    value: mpf
    derivative: mpf
    second: Optional[mpf] = None


@dataclass
class CharacteristicValue:
    lam: mpf
    residual: mpf
    seed: float


@dataclass
class DrSet:
    """Expansion coefficients d_r for r >= 0 of the parity of n - m."""

    entries: dict  # r -> mpf
    count: Optional[int] = None
    floor: Optional[mpf] = None

    def rmax(self) -> int:
        return max(self.entries)

    def rmin(self) -> int:
        return min(self.entries)


@dataclass
class DrNegSet:
    """Negative-index coefficients plus the regularized epsilon tail."""

    entries: dict  # -2m <= r < 0 (even) / -2m+1 <= r < 0 (odd) -> mpf
    eps_entries: dict  # r <= -2m-2 (even) / -2m-1 (odd) -> mpf


@dataclass
class C2kSet:
    entries: dict  # k -> mpf
    parity: int
    #: True when the family stopped at the representability limit of its
    #: working precision instead of reaching the requested floor
    exhausted: bool = False


@dataclass
class B2rSet:
    entries: dict  # r -> mpf (coefficient of xi**(2r))
    growth_crossover: int


@dataclass
class ScalarSpecials:
    """Norm, series normalizer, joining factors, and oblate extras.

    For the oblate kind the joining factors are stored with their constant
    imaginary phase detached, so every stored number is real:
    ``k1`` holds ``i**-m * k1`` (n - m even) or ``i**-(m+1) * k1`` (odd) and
    ``k2`` holds ``i**-(m-1) * k2`` (even) or ``i**-(m-2) * k2`` (odd).
    """

    N: mpf
    F: mpf
    k1: mpf
    k2: mpf
    Qstar: Optional[mpf] = None


@dataclass
class CoefficientSet:
    """Everything needed to evaluate the functions for one parameter set."""

    params: Params
    lam: Optional[mpf] = None
    dr: Optional[DrSet] = None
    dr_neg: Optional[DrNegSet] = None
    c2k: Optional[C2kSet] = None
    specials: Optional[ScalarSpecials] = None
    alpha: Optional[list] = None  # oblate reciprocal-square series coefficients
    b2r: Optional[B2rSet] = None


@dataclass
class RadialResult:
    """R1..R4 with the chosen method pair and achieved Wronskian error.

    R3 = R1 + i R2 and R4 = R1 - i R2; since all inputs are real they are
    stored as (real, imaginary) component pairs.
    """

    r1: EvalPair
    r2: EvalPair
    r3: tuple  # (EvalPair, EvalPair) = (R1, +R2)
    r4: tuple  # (EvalPair, EvalPair) = (R1, -R2)
    chosen: tuple  # (r1 method tag, r2 method tag)
    wronskian_rel_error: mpf
    all_errors: dict = field(default_factory=dict)  # (tag1, tag2) -> mpf
