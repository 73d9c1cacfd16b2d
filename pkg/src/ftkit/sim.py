"""Fixed-step simulation of nonsmooth closed loops and differentiators.

Integration is explicit Euler or classical RK4 on a uniform grid starting
at t = 0, with no event localisation at the sign switches. Chattering from
the discontinuous terms shrinks with the step and is absorbed by the
convergence threshold.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Literal, Sequence

import numpy as np

from . import _kernels
from .errors import BlowUpError, ValidationError
from .laws import DEFAULT_GAMMA, DifferentiatorConfig, GainScheme, exponent_ladder, signed_power

Method = Literal["euler", "rk4"]
_METHOD_CODES = {"euler": _kernels.EULER, "rk4": _kernels.RK4}


def default_t_max(n: int) -> float:
    """Horizon for the integrator-chain experiments."""
    return 300.0 if n <= 3 else 600.0


@dataclass(frozen=True)
class SimConfig:
    step_h: float = 1e-4
    method: Method = "rk4"
    t_max: float | None = None  # None: chosen by the caller (see default_t_max)
    record_stride: int = 1

    def __post_init__(self):
        if not self.step_h > 0 or not math.isfinite(self.step_h):
            raise ValidationError(f"step_h must be positive, got {self.step_h}")
        if self.method not in _METHOD_CODES:
            raise ValidationError(f"method must be 'euler' or 'rk4', got {self.method!r}")
        if self.t_max is not None and not self.t_max >= self.step_h:
            raise ValidationError(f"t_max must be >= step_h, got {self.t_max}")
        if int(self.record_stride) != self.record_stride or self.record_stride < 1:
            raise ValidationError(f"record_stride must be a positive integer, got {self.record_stride}")

    def with_t_max(self, t_max: float) -> "SimConfig":
        return SimConfig(self.step_h, self.method, t_max, self.record_stride)

    def n_steps(self) -> int:
        if self.t_max is None:
            raise ValidationError("t_max is not set")
        return int(round(self.t_max / self.step_h))

    @property
    def sample_spacing(self) -> float:
        return self.step_h * self.record_stride


@dataclass(frozen=True)
class Trajectory:
    times: np.ndarray
    states: np.ndarray
    inputs: np.ndarray | None = None
    state_prefix: str = "x"

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def header(self) -> list[str]:
        cols = ["t"] + [f"{self.state_prefix}{i + 1}" for i in range(self.dim)]
        if self.inputs is not None:
            cols.append("u")
        return cols

    def write_csv(self, dest: str | Path | io.TextIOBase) -> None:
        """Write one row per recorded sample at 17 significant digits."""
        cols = [self.times[:, None], self.states]
        if self.inputs is not None:
            cols.append(self.inputs[:, None])
        data = np.hstack(cols)
        if isinstance(dest, (str, Path)):
            with open(dest, "w", newline="") as fh:
                self._write(fh, data)
        else:
            self._write(dest, data)

    def _write(self, fh, data: np.ndarray) -> None:
        fh.write(",".join(self.header()) + "\n")
        np.savetxt(fh, data, fmt="%.17g", delimiter=",")


@dataclass(frozen=True)
class ConvergenceCriterion:
    epsilon: float = 1e-6
    dwell: float = 1.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ValidationError(f"epsilon must be positive, got {self.epsilon}")
        if not self.dwell >= 0:
            raise ValidationError(f"dwell must be non-negative, got {self.dwell}")


@dataclass(frozen=True)
class ConvergenceReport:
    converged: bool
    t_conv: float | None
    final_norm: float


def _check_finite(x: np.ndarray, t: float) -> None:
    if not np.all(np.isfinite(x)):
        raise BlowUpError(t)


def integrate(rhs: Callable[[float, np.ndarray], np.ndarray], x0: Sequence[float], cfg: SimConfig) -> Trajectory:
    """March ``dx/dt = rhs(t, x)`` from ``x(0) = x0`` on a uniform grid.

    Deterministic: identical inputs give bit-identical output. Raises
    :class:`BlowUpError` at the first step producing a non-finite state.
    """
    x = np.array(x0, dtype=float).ravel()
    _check_finite(x, 0.0)
    h = cfg.step_h
    nsteps = cfg.n_steps()
    stride = cfg.record_stride
    rec = np.empty((nsteps // stride + 1, x.size))
    rec[0] = x
    r = 1
    for s in range(nsteps):
        t = s * h
        k1 = np.asarray(rhs(t, x), dtype=float)
        if cfg.method == "euler":
            x = x + h * k1
        else:
            k2 = np.asarray(rhs(t + 0.5 * h, x + 0.5 * h * k1), dtype=float)
            k3 = np.asarray(rhs(t + 0.5 * h, x + 0.5 * h * k2), dtype=float)
            k4 = np.asarray(rhs(t + h, x + h * k3), dtype=float)
            x = x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        _check_finite(x, (s + 1) * h)
        if (s + 1) % stride == 0:
            rec[r] = x
            r += 1
    return Trajectory(np.arange(rec.shape[0]) * cfg.sample_spacing, rec)


def detect_convergence(traj: Trajectory, crit: ConvergenceCriterion) -> ConvergenceReport:
    """Earliest sample time after which the max-norm stays below epsilon for ``dwell`` seconds."""
    if traj.times.size == 0:
        raise ValidationError("empty trajectory")
    norms = np.max(np.abs(traj.states), axis=1)
    final = float(norms[-1])
    times = traj.times
    spacing = times[1] - times[0] if times.size > 1 else 1.0
    dwell_steps = max(0, math.ceil(crit.dwell / spacing - 1e-9))
    good = norms <= crit.epsilon
    idx = np.arange(times.size)
    # first bad sample at or after each index (size if none)
    next_bad = np.minimum.accumulate(np.where(good, times.size, idx)[::-1])[::-1]
    ok = good & (next_bad - 1 - idx >= dwell_steps)
    if not np.any(ok):
        return ConvergenceReport(False, None, final)
    i = int(np.argmax(ok))
    return ConvergenceReport(True, float(times[i]), final)


def _f64(a) -> np.ndarray:
    return np.ascontiguousarray(a, dtype=float)


def _run_chain(x0, cfg: SimConfig, k, g) -> np.ndarray:
    x0 = _f64(x0)
    _check_finite(x0, 0.0)
    rec, bad = _kernels.march_chain(_METHOD_CODES[cfg.method], x0, float(cfg.step_h), cfg.n_steps(),
                                    int(cfg.record_stride), _f64(k), _f64(g))
    if bad >= 0:
        raise BlowUpError(bad * cfg.step_h)
    return rec


def _run_differentiator(z0, cfg: SimConfig, dcfg: DifferentiatorConfig, signal: "Signal") -> np.ndarray:
    z0 = _f64(z0)
    _check_finite(z0, 0.0)
    sig_kind, sig_par = signal.kernel_args()
    rec, bad = _kernels.march_differentiator(
        _METHOD_CODES[cfg.method], z0, float(cfg.step_h), cfg.n_steps(), int(cfg.record_stride),
        _f64(dcfg.k), _f64(dcfg.alpha), _f64(dcfg.kappa), _f64(dcfg.beta), float(dcfg.lam),
        sig_kind, _f64(sig_par))
    if bad >= 0:
        raise BlowUpError(bad * cfg.step_h)
    return rec


def closed_loop_rhs(gains, ladder):
    """Python right-hand side of the controlled chain, for :func:`integrate`."""
    k = np.asarray(gains, dtype=float)
    g = ladder.as_array() if hasattr(ladder, "as_array") else np.asarray(ladder, dtype=float)

    def rhs(t, x):
        dx = np.empty_like(x)
        dx[:-1] = x[1:]
        dx[-1] = -np.sum(k * signed_power(x, g))
        return dx

    return rhs


def simulate_closed_loop(n: int, x0_scale: float, gamma_seed: float = DEFAULT_GAMMA,
                         scheme: GainScheme | None = None, cfg: SimConfig | None = None,
                         crit: ConvergenceCriterion | None = None) -> tuple[Trajectory, ConvergenceReport]:
    """Chain of ``n`` integrators under the Bhat-Bernstein law.

    Every coordinate starts at ``x0_scale``. A missing ``cfg.t_max`` is
    filled from :func:`default_t_max`.
    """
    scheme = scheme or GainScheme(mu=1.0, n=n)
    if scheme.n != n:
        raise ValidationError(f"gain scheme is for n={scheme.n}, not {n}")
    cfg = cfg or SimConfig()
    if cfg.t_max is None:
        cfg = cfg.with_t_max(default_t_max(n))
    crit = crit or ConvergenceCriterion()
    k = scheme.gains()
    g = exponent_ladder(n, gamma_seed).as_array()
    states = _run_chain(np.full(n, float(x0_scale)), cfg, k, g)
    inputs = -np.sum(k * signed_power(states, g), axis=1)
    traj = Trajectory(np.arange(states.shape[0]) * cfg.sample_spacing, states, inputs)
    return traj, detect_convergence(traj, crit)


@dataclass(frozen=True)
class Signal:
    """Measured output y(t) with analytic derivatives.

    ``polynomial`` params are ascending coefficients; ``sinusoid`` params
    are (amplitude, angular frequency, phase) for ``A sin(w t + phase)``.
    """

    kind: Literal["polynomial", "sinusoid", "constant"]
    params: tuple[float, ...]

    def __post_init__(self):
        if self.kind not in ("polynomial", "sinusoid", "constant"):
            raise ValidationError(f"unknown signal kind {self.kind!r}")
        if self.kind == "sinusoid" and len(self.params) != 3:
            raise ValidationError("sinusoid needs (amplitude, omega, phase)")
        if self.kind == "constant" and len(self.params) != 1:
            raise ValidationError("constant signal takes one value")
        if self.kind == "polynomial" and len(self.params) == 0:
            raise ValidationError("polynomial needs at least one coefficient")

    @classmethod
    def polynomial(cls, *coeffs: float) -> "Signal":
        return cls("polynomial", tuple(float(c) for c in coeffs))

    @classmethod
    def sinusoid(cls, amplitude: float, omega: float, phase: float = 0.0) -> "Signal":
        return cls("sinusoid", (float(amplitude), float(omega), float(phase)))

    @classmethod
    def constant(cls, value: float) -> "Signal":
        return cls("constant", (float(value),))

    @classmethod
    def parse(cls, text: str) -> "Signal":
        """Parse ``poly:c0,c1,...``, ``sin:amp,omega[,phase]`` or ``const:c``."""
        head, _, body = text.partition(":")
        try:
            vals = [float(v) for v in body.split(",")] if body else []
        except ValueError as exc:
            raise ValidationError(f"bad signal {text!r}: {exc}") from exc
        if head == "poly":
            return cls.polynomial(*vals)
        if head == "sin" and len(vals) in (2, 3):
            return cls.sinusoid(*vals)
        if head == "const" and len(vals) == 1:
            return cls.constant(vals[0])
        raise ValidationError(f"bad signal {text!r}; expected poly:..., sin:amp,omega[,phase] or const:c")

    def derivative(self, t, order: int = 0):
        t = np.asarray(t, dtype=float)
        if self.kind == "sinusoid":
            amp, w, ph = self.params
            return amp * w**order * np.sin(w * t + ph + order * np.pi / 2)
        poly = np.polynomial.Polynomial(self.params).deriv(order)
        return poly(t) + 0.0 * t

    def __call__(self, t):
        return self.derivative(t, 0)

    def kernel_args(self) -> tuple[int, np.ndarray]:
        if self.kind == "sinusoid":
            return _kernels.SIG_SIN, np.array(self.params)
        return _kernels.SIG_POLY, np.array(self.params)


def differentiator_python_rhs(signal: Signal, dcfg: DifferentiatorConfig):
    """Right-hand side closed over the signal, for :func:`integrate`."""
    from .laws import differentiator_rhs

    return lambda t, z: differentiator_rhs(z, float(signal(t)), dcfg)


def simulate_differentiator(signal: Signal, z0: Sequence[float], dcfg: DifferentiatorConfig,
                            cfg: SimConfig | None = None, window: float = 5.0) -> tuple[Trajectory, np.ndarray]:
    """Run the differentiator on ``signal`` and measure its trailing error.

    Entry ``i`` of the returned metrics is the sup over the last ``window``
    seconds of ``|z_{i+1}(t) - y^(i)(t)|``. A missing ``cfg.t_max`` means 30 s.
    """
    z0 = np.asarray(z0, dtype=float)
    if z0.shape != (dcfg.dim,):
        raise ValidationError(f"z0 must have {dcfg.dim} entries for the {dcfg.variant} variant")
    cfg = cfg or SimConfig(record_stride=10)
    if cfg.t_max is None:
        cfg = cfg.with_t_max(30.0)
    if not 0 < window <= cfg.t_max:
        raise ValidationError(f"window must lie in (0, t_max], got {window}")
    states = _run_differentiator(z0, cfg, dcfg, signal)
    times = np.arange(states.shape[0]) * cfg.sample_spacing
    traj = Trajectory(times, states, None, state_prefix="z")
    tail = times >= times[-1] - window - 1e-12
    errors = np.array([np.max(np.abs(states[tail, i] - signal.derivative(times[tail], i)))
                       for i in range(dcfg.dim)])
    return traj, errors
