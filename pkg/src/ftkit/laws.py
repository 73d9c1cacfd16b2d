"""Closed-form design artifacts.

Exponent ladders, binomial gain assignment, the Bhat-Bernstein control law
for an integrator chain, the right-hand side of the fixed-time
differentiator with a discontinuous correction term, and the scalar margins
built on a Lyapunov certificate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Literal, Sequence

import numpy as np

from .errors import LadderError, MarginUndefinedError, ValidationError
from .numkit import LyapunovCertificate, validate_gains

Variant = Literal["basic", "modified", "smooth"]
VARIANTS: tuple[str, ...] = ("basic", "modified", "smooth")

DEFAULT_GAMMA = 10.0 / 11.0


@dataclass(frozen=True)
class ExponentLadder:
    """Exponents gamma_1..gamma_n, with gamma_n equal to ``seed``."""

    seed: float
    values: tuple[float, ...]

    @property
    def n(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.array(self.values)

    def recursion_defect(self) -> float:
        """Largest violation of ``g[i-1] (2 g[i+1] - g[i]) = g[i] g[i+1]``."""
        g = list(self.values) + [1.0]
        worst = 0.0
        for i in range(1, self.n):
            lhs = g[i - 1] * (2.0 * g[i + 1] - g[i])
            worst = max(worst, abs(lhs - g[i] * g[i + 1]))
        return worst


def exponent_ladder(n: int, seed: float = DEFAULT_GAMMA) -> ExponentLadder:
    """Run the homogeneity recursion downward from ``gamma_{n+1} = 1``.

    >>> exponent_ladder(2, 10 / 11).values
    (0.8333333333333334, 0.9090909090909091)
    """
    if int(n) != n or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n}")
    n = int(n)
    if not seed > 0 or not math.isfinite(seed):
        raise ValidationError(f"seed must be positive and finite, got {seed}")
    g = [0.0] * (n + 2)
    g[n + 1] = 1.0
    g[n] = float(seed)
    for i in range(n, 1, -1):
        denom = 2.0 * g[i + 1] - g[i]
        if denom <= 0:
            raise LadderError(f"ladder undefined for seed {seed}: denominator {denom:.3g} at i={i}")
        g[i - 1] = g[i] * g[i + 1] / denom
    return ExponentLadder(float(seed), tuple(g[1 : n + 1]))


def binomial_gains(n: int, mu: float = 1.0) -> np.ndarray:
    """Gains placing every closed-loop pole at ``-mu``: ``k_i = C(n, i-1) mu^(n-i+1)``."""
    if int(n) != n or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n}")
    if not mu > 0 or not math.isfinite(mu):
        raise ValidationError(f"mu must be positive, got {mu}")
    n = int(n)
    return np.array([math.comb(n, i - 1) * mu ** (n - i + 1) for i in range(1, n + 1)], dtype=float)


@dataclass(frozen=True)
class GainScheme:
    mu: float
    n: int
    kind: str = "binomial-multiple-root"

    def __post_init__(self):
        if self.kind != "binomial-multiple-root":
            raise ValidationError(f"unknown gain scheme {self.kind!r}")
        if not self.mu > 0:
            raise ValidationError(f"mu must be positive, got {self.mu}")

    def gains(self) -> np.ndarray:
        return binomial_gains(self.n, self.mu)


def signed_power(x, p):
    """``|x|^p sign(x)`` with ``sign(0) = 0``."""
    return np.sign(x) * np.abs(x) ** p


def bb_control(x: Sequence[float], gains: Sequence[float], ladder: ExponentLadder | Sequence[float]) -> float:
    """Bhat-Bernstein input ``u = -sum_i k_i |x_i|^g_i sign(x_i)``."""
    x = np.asarray(x, dtype=float)
    k = validate_gains(gains)
    g = ladder.as_array() if isinstance(ladder, ExponentLadder) else np.asarray(ladder, dtype=float)
    if not (x.shape == k.shape == g.shape):
        raise ValidationError(f"dimension mismatch: x{x.shape}, gains{k.shape}, ladder{g.shape}")
    return float(-np.sum(k * signed_power(x, g)))


def differentiator_ladder(m: int, seed: float) -> tuple[float, ...]:
    """Arithmetic exponents ``i*seed - (i-1)`` for i = 1..m.

    A seed below one yields the finite-time family in (0, 1], which needs
    ``seed > (m-1)/m``; a seed above one yields exponents >= 1.
    """
    vals = tuple(i * seed - (i - 1) for i in range(1, m + 1))
    if seed < 1 and vals[-1] <= 0:
        raise LadderError(f"seed {seed} must exceed {(m - 1) / m:.4g} for {m} states")
    if seed <= 0:
        raise LadderError(f"seed must be positive, got {seed}")
    return vals


def observer_gains(m: int, mu: float = 1.0) -> np.ndarray:
    """Binomial gains in observer order, ``k_i = C(m, i) mu^i``.

    The linearised error dynamics then have characteristic polynomial
    ``(s + mu)^m``. This is :func:`binomial_gains` reversed.
    """
    return binomial_gains(m, mu)[::-1].copy()


@dataclass(frozen=True)
class DifferentiatorConfig:
    """Parameters of the differentiator.

    ``n`` is the number of derivatives the basic and modified forms track;
    the smooth form carries one extra state. ``k`` and ``kappa`` must have
    :attr:`dim` entries.
    """

    n: int
    k: tuple[float, ...]
    kappa: tuple[float, ...]
    lam: float = 0.0
    alpha_seed: float = 0.9
    beta_seed: float = 1.1
    variant: Variant = "basic"
    alpha: tuple[float, ...] = field(init=False)
    beta: tuple[float, ...] = field(init=False)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValidationError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if int(self.n) != self.n or self.n < 1:
            raise ValidationError(f"n must be a positive integer, got {self.n}")
        k = validate_gains(self.k)
        kappa = validate_gains(self.kappa, allow_zero=True)
        if k.size != self.dim or kappa.size != self.dim:
            raise ValidationError(f"{self.variant} differentiator needs {self.dim} gains, got {k.size} and {kappa.size}")
        if self.lam < 0 or not math.isfinite(self.lam):
            raise ValidationError(f"lambda must be non-negative, got {self.lam}")
        if self.variant == "basic" and self.lam != 0:
            raise ValidationError("basic variant has no discontinuous term; use lambda=0")
        if self.variant != "basic" and self.lam <= 0:
            raise ValidationError(f"{self.variant} variant needs lambda > 0")
        lo = (self.dim - 1) / self.dim
        if not lo < self.alpha_seed < 1:
            raise ValidationError(f"alpha seed must lie in ({lo:.4g}, 1), got {self.alpha_seed}")
        if not self.beta_seed > 1:
            raise ValidationError(f"beta seed must exceed 1, got {self.beta_seed}")
        object.__setattr__(self, "k", tuple(float(v) for v in k))
        object.__setattr__(self, "kappa", tuple(float(v) for v in kappa))
        object.__setattr__(self, "alpha", differentiator_ladder(self.dim, self.alpha_seed))
        object.__setattr__(self, "beta", differentiator_ladder(self.dim, self.beta_seed))

    @property
    def dim(self) -> int:
        return self.n + 1 if self.variant == "smooth" else self.n

    @classmethod
    def default(cls, n: int, variant: Variant = "basic", lam: float = 0.0,
                alpha_seed: float | None = None, beta_seed: float = 1.1, mu: float = 1.0):
        """Unit binomial gains (observer order) for both k and kappa.

        The smooth form defaults to ``alpha_seed=0.7``: with exponents close
        to one the relay term on a third-order chain sustains a limit cycle.
        """
        if variant not in VARIANTS:
            raise ValidationError(f"variant must be one of {VARIANTS}, got {variant!r}")
        m = n + 1 if variant == "smooth" else n
        if alpha_seed is None:
            alpha_seed = 0.7 if variant == "smooth" else 0.9
        g = tuple(observer_gains(m, mu))
        return cls(n=n, k=g, kappa=g, lam=lam, alpha_seed=alpha_seed,
                   beta_seed=beta_seed, variant=variant)


def differentiator_rhs(z: Sequence[float], y: float, cfg: DifferentiatorConfig) -> np.ndarray:
    """Time derivative of the differentiator state given the measurement ``y``."""
    z = np.asarray(z, dtype=float)
    if z.shape != (cfg.dim,):
        raise ValidationError(f"state must have {cfg.dim} entries, got shape {z.shape}")
    e = z[0] - y
    s = np.sign(e)
    a = abs(e)
    k = np.array(cfg.k)
    kappa = np.array(cfg.kappa)
    corr = -(k * a ** np.array(cfg.alpha) + kappa * a ** np.array(cfg.beta)) * s
    dz = np.empty_like(z)
    dz[:-1] = z[1:] + corr[:-1]
    dz[-1] = corr[-1] - cfg.lam * s
    return dz


def mu_margin(mu: float, cert: LyapunovCertificate) -> float:
    """``mu * lambda_max(P) / lambda_min(Q)``; exceeds one for every mu > 0."""
    return mu * cert.lambda_max_p / cert.lambda_min_q


def fixed_time_margin(k1: float, k2: float, cert: LyapunovCertificate) -> float:
    """``(k2 - sqrt(k2^2 - 4 k1)) * lambda_max(P) / lambda_min(Q)``."""
    if k1 <= 0 or k2 <= 0:
        raise ValidationError("gains must be positive")
    disc = k2 * k2 - 4.0 * k1
    if disc < 0:
        raise MarginUndefinedError("complex roots; margin undefined")
    return (k2 - math.sqrt(disc)) * cert.lambda_max_p / cert.lambda_min_q
