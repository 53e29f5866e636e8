"""Shared fixtures.

Coefficient sets are expensive to build at high precision, so a single
session-scoped cache hands out lazily computed sets keyed by the full
parameter tuple.  Tests ask for them through the ``coeffs`` factory.
"""
import pytest
from mpmath import mpf

from sphwv.core import Params
from sphwv.coefficients import ModeSpec, compute_everything


@pytest.fixture(scope="session")
def coeffs():
    cache = {}

    def get(kind, c, m, n, prec=150, floor="1e-150"):
        key = (kind, str(c), m, n, prec, floor)
        if key not in cache:
            params = Params(kind, mpf(c), m, n, prec)
            mode = ModeSpec(floor=mpf(floor))
            cache[key] = compute_everything(params, mode, mode, mode, mode)
        return cache[key]

    return get
