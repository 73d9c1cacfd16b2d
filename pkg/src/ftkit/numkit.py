"""Dense linear algebra for small matrices (n <= 8).

Companion matrices, the continuous Lyapunov equation ``A^T P + P A = -Q``
and extremal eigenvalues of symmetric matrices. Everything here is a pure
function of its inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import NotHurwitzError, NumericalError, ValidationError

MAX_DIM = 8


def _as_square(a, name: str = "matrix") -> np.ndarray:
    a = np.array(a, dtype=float)
    if a.ndim != 2 or a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise ValidationError(f"{name} must be a non-empty square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError(f"{name} has non-finite entries")
    return a


def _as_symmetric(p, name: str = "matrix") -> np.ndarray:
    p = _as_square(p, name)
    if not np.array_equal(p, p.T):
        raise ValidationError(f"{name} is not symmetric")
    return p


def validate_gains(gains: Sequence[float], allow_zero: bool = False) -> np.ndarray:
    """Return ``gains`` as a 1-D float array after checking positivity."""
    k = np.atleast_1d(np.asarray(gains, dtype=float))
    if k.ndim != 1 or k.size == 0:
        raise ValidationError("gain vector must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(k)):
        raise ValidationError("gain vector has non-finite entries")
    if allow_zero:
        if np.any(k < 0):
            raise ValidationError(f"gains must be non-negative, got {k.tolist()}")
    elif np.any(k <= 0):
        raise ValidationError(f"gains must be strictly positive, got {k.tolist()}")
    return k


def companion_from_gains(gains: Sequence[float]) -> np.ndarray:
    """Closed-loop companion matrix of the integrator chain.

    Ones on the superdiagonal and ``-k_1 ... -k_n`` in the last row, so the
    characteristic polynomial is ``s^n + k_n s^(n-1) + ... + k_1``.
    """
    k = validate_gains(gains)
    n = k.size
    a = np.zeros((n, n))
    a[np.arange(n - 1), np.arange(1, n)] = 1.0
    a[-1, :] = -k
    return a


def characteristic_polynomial(a) -> np.ndarray:
    """Monic characteristic polynomial, highest power first (Faddeev-LeVerrier)."""
    a = _as_square(a)
    n = a.shape[0]
    coeffs = np.zeros(n + 1)
    coeffs[0] = 1.0
    m = np.zeros_like(a)
    eye = np.eye(n)
    for k in range(1, n + 1):
        m = a @ m + coeffs[k - 1] * eye
        coeffs[k] = -np.trace(a @ m) / k
    return coeffs


def routh_hurwitz(coeffs: Sequence[float]) -> bool:
    """True iff every root of the polynomial lies in the open left half-plane.

    ``coeffs`` are highest power first. A zero in the first column counts as
    failure, so marginally stable polynomials are rejected.
    """
    c = np.asarray(coeffs, dtype=float)
    if c[0] < 0:
        c = -c
    if c[0] == 0:
        raise ValidationError("leading coefficient must be non-zero")
    deg = c.size - 1
    if deg == 0:
        return True
    if np.any(c <= 0):
        return False
    width = deg // 2 + 1
    prev = np.zeros(width)
    cur = np.zeros(width)
    prev[: len(c[0::2])] = c[0::2]
    cur[: len(c[1::2])] = c[1::2]
    for _ in range(deg - 1):
        if cur[0] <= 0:
            return False
        nxt = np.zeros(width)
        nxt[:-1] = (cur[0] * prev[1:] - prev[0] * cur[1:]) / cur[0]
        prev, cur = cur, nxt
    return bool(cur[0] > 0)


def is_hurwitz(a) -> bool:
    return routh_hurwitz(characteristic_polynomial(a))


def _upper_index(n: int) -> np.ndarray:
    idx = -np.ones((n, n), dtype=int)
    count = 0
    for i in range(n):
        for j in range(i, n):
            idx[i, j] = idx[j, i] = count
            count += 1
    return idx


def solve_lyapunov(a, q) -> np.ndarray:
    """Solve ``A^T P + P A = -Q`` for the symmetric matrix ``P``.

    The n(n+1)/2 upper-triangle unknowns are collected into one dense
    linear system. ``a`` must be Hurwitz and ``q`` symmetric positive
    definite; the result is then unique and positive definite.
    """
    a = _as_square(a, "A")
    q = _as_symmetric(q, "Q")
    n = a.shape[0]
    if q.shape != a.shape:
        raise ValidationError(f"A is {a.shape} but Q is {q.shape}")
    if n > MAX_DIM:
        raise ValidationError(f"dimension {n} exceeds the supported maximum {MAX_DIM}")
    if not is_hurwitz(a):
        raise NotHurwitzError("A is not Hurwitz: no unique positive definite solution")
    lo, _ = sym_extreme_eigen(q)
    if lo <= 0:
        raise ValidationError("Q must be positive definite")

    idx = _upper_index(n)
    m = n * (n + 1) // 2
    lhs = np.zeros((m, m))
    rhs = np.zeros(m)
    for i in range(n):
        for j in range(i, n):
            row = idx[i, j]
            # (A^T P)_ij = sum_k A_ki P_kj ; (P A)_ij = sum_k P_ik A_kj
            for k in range(n):
                lhs[row, idx[k, j]] += a[k, i]
                lhs[row, idx[i, k]] += a[k, j]
            rhs[row] = -q[i, j]
    try:
        sol = np.linalg.solve(lhs, rhs)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"singular Lyapunov system: {exc}") from exc
    if not np.all(np.isfinite(sol)):
        raise NumericalError("Lyapunov solve returned non-finite values")
    return sol[idx]


def lyapunov_residual(a, p, q) -> float:
    """Max-abs entry of ``A^T P + P A + Q``."""
    a, p, q = (np.asarray(x, dtype=float) for x in (a, p, q))
    return float(np.max(np.abs(a.T @ p + p @ a + q)))


def jacobi_eigenvalues(p, tol: float = 1e-15, max_sweeps: int = 64) -> np.ndarray:
    """All eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending."""
    s = _as_symmetric(p).copy()
    n = s.shape[0]
    scale = max(float(np.max(np.abs(s))), np.finfo(float).tiny)
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.triu(s, 1) ** 2)))
        if off <= tol * scale:
            break
        for k in range(n - 1):
            for l in range(k + 1, n):
                skl = s[k, l]
                if skl == 0.0:
                    continue
                theta = (s[l, l] - s[k, k]) / (2.0 * skl)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                sn = t * c
                rot = np.eye(n)
                rot[k, k] = rot[l, l] = c
                rot[k, l] = sn
                rot[l, k] = -sn
                s = rot.T @ s @ rot
                s[k, l] = s[l, k] = 0.0
    else:
        raise NumericalError("Jacobi iteration did not converge")
    return np.sort(np.diag(s))


def eig2_closed_form(p) -> tuple[float, float]:
    """Eigenvalues of a symmetric 2x2 matrix from its trace and determinant."""
    p = _as_symmetric(p)
    if p.shape != (2, 2):
        raise ValidationError("closed form only applies to 2x2 matrices")
    half_tr = 0.5 * (p[0, 0] + p[1, 1])
    rad = math.hypot(0.5 * (p[0, 0] - p[1, 1]), p[0, 1])
    return half_tr - rad, half_tr + rad


def sym_extreme_eigen(p) -> tuple[float, float]:
    """``(lambda_min, lambda_max)`` of a symmetric matrix."""
    w = jacobi_eigenvalues(p)
    return float(w[0]), float(w[-1])


@dataclass(frozen=True)
class LyapunovCertificate:
    a: np.ndarray
    q: np.ndarray
    p: np.ndarray
    lambda_max_p: float
    lambda_min_p: float
    lambda_min_q: float
    residual_norm: float

    def to_dict(self) -> dict:
        return {
            "A": self.a.tolist(),
            "Q": self.q.tolist(),
            "P": self.p.tolist(),
            "lambda_min_P": self.lambda_min_p,
            "lambda_max_P": self.lambda_max_p,
            "lambda_min_Q": self.lambda_min_q,
            "residual": self.residual_norm,
        }


def certify(a, q=None) -> LyapunovCertificate:
    """Solve the Lyapunov equation and package P with its spectral data.

    ``q`` defaults to the identity. Raises :class:`NumericalError` when the
    residual or positive definiteness checks fail.
    """
    a = _as_square(a, "A")
    q = np.eye(a.shape[0]) if q is None else _as_symmetric(q, "Q")
    p = solve_lyapunov(a, q)
    lo_p, hi_p = sym_extreme_eigen(p)
    lo_q, _ = sym_extreme_eigen(q)
    res = lyapunov_residual(a, p, q)
    if res >= 1e-10 * (1.0 + float(np.max(np.abs(q)))):
        raise NumericalError(f"Lyapunov residual {res:.3e} too large")
    if lo_p <= 0:
        raise NumericalError("solution P is not positive definite")
    for m in (a, q, p):
        m.setflags(write=False)
    return LyapunovCertificate(a, q, p, hi_p, lo_p, lo_q, res)
