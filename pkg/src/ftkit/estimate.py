"""Convergence-time upper bounds and the published reference tables.

A bound is produced by an *estimator*: any callable taking a
:class:`BoundInput` and returning seconds. Three are provided:
:class:`PowerLawBound` (the default), :class:`ReferenceTable` and
:class:`UserEstimator`, which wraps an arbitrary function.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources
from typing import Callable, Protocol, Sequence

import numpy as np

from .errors import ReferenceLookupError, ValidationError
from .laws import ExponentLadder
from .numkit import LyapunovCertificate


@dataclass(frozen=True)
class BoundInput:
    cert: LyapunovCertificate
    ladder: ExponentLadder
    v0: float
    x0_scale: float | None = None  # only needed for table lookups

    def __post_init__(self):
        if not self.v0 >= 0:
            raise ValidationError(f"v0 must be non-negative, got {self.v0}")


class Estimator(Protocol):
    def __call__(self, inp: BoundInput) -> float: ...


def lyapunov_value(x0: Sequence[float], p) -> float:
    """Quadratic form ``x0^T P x0``."""
    x = np.asarray(x0, dtype=float).ravel()
    p = np.asarray(p, dtype=float)
    if p.shape != (x.size, x.size):
        raise ValidationError(f"state has {x.size} entries but P is {p.shape}")
    return float(x @ p @ x)


@dataclass(frozen=True)
class PowerLawBound:
    """``T <= c * v0 ** e`` for a Lyapunov function with ``dV/dt <= -a V^((1+g1)/2)``.

    Without overrides, ``c = 2 lambda_max(P) / (lambda_min(Q) (1 - g1))`` and
    ``e = (1 - g1) / 2`` where g1 is the smallest ladder exponent.
    """

    prefactor: float | None = None
    exponent: float | None = None

    def __call__(self, inp: BoundInput) -> float:
        g1 = inp.ladder.values[0]
        if g1 >= 1:
            raise ValidationError("not a finite-time ladder (gamma_1 >= 1)")
        c = self.prefactor
        if c is None:
            c = 2.0 * inp.cert.lambda_max_p / (inp.cert.lambda_min_q * (1.0 - g1))
        e = self.exponent if self.exponent is not None else 0.5 * (1.0 - g1)
        if inp.v0 == 0:
            return 0.0
        return c * inp.v0 ** e


@dataclass(frozen=True)
class ReferenceRow:
    n: int
    x0_scale: float
    simulated_s: float
    estimated_s: float
    rate: float
    note: str = ""


@lru_cache(maxsize=1)
def reference_rows() -> tuple[ReferenceRow, ...]:
    """The 17 embedded table cells, ordered by (n, x0_scale)."""
    text = resources.files("ftkit").joinpath("data/reference_tables.json").read_text()
    doc = json.loads(text)
    rows = (ReferenceRow(**r) for r in doc["rows"])
    return tuple(sorted(rows, key=lambda r: (r.n, r.x0_scale)))


def reference_row(n: int, x0_scale: float) -> ReferenceRow:
    for row in reference_rows():
        if row.n == n and math.isclose(row.x0_scale, x0_scale, rel_tol=1e-12):
            return row
    raise ReferenceLookupError(f"no reference row for n={n}, x0={x0_scale:g}")


class ReferenceTable:
    """Looks the bound up in the published "Estimated Time" columns."""

    def __call__(self, inp: BoundInput) -> float:
        if inp.x0_scale is None:
            raise ReferenceLookupError("no reference row: x0_scale not given")
        return reference_row(inp.ladder.n, inp.x0_scale).estimated_s


@dataclass(frozen=True)
class UserEstimator:
    fn: Callable[[BoundInput], float]

    def __call__(self, inp: BoundInput) -> float:
        value = float(self.fn(inp))
        if not value >= 0:
            raise ValidationError(f"estimator returned a negative or NaN bound: {value}")
        return value


def finite_time_bound(inp: BoundInput, estimator: Estimator | None = None) -> float:
    if inp.ladder.values[0] >= 1:
        raise ValidationError("not a finite-time ladder (gamma_1 >= 1)")
    return (estimator or PowerLawBound())(inp)


def rate(simulated: float, estimated: float) -> float:
    """Estimated over simulated convergence time."""
    if not simulated > 0:
        raise ValidationError(f"simulated time must be positive, got {simulated}")
    return estimated / simulated
