"""Compiled fixed-step marching for the two built-in models.

The pure-Python :func:`ftkit.sim.integrate` accepts any callable; the
table runs need millions of steps, so the chain controller and the
differentiator are also available here as numba kernels with the same
stepping arithmetic.
"""
import math

import numpy as np
from numba import njit

EULER = 0
RK4 = 1

SIG_POLY = 0
SIG_SIN = 1


@njit(cache=True, nogil=True)
def _sgn(e):
    if e > 0.0:
        return 1.0
    if e < 0.0:
        return -1.0
    return 0.0


@njit(cache=True, nogil=True)
def signal_value(kind, par, t):
    if kind == SIG_POLY:
        acc = 0.0
        for i in range(par.shape[0] - 1, -1, -1):
            acc = acc * t + par[i]
        return acc
    return par[0] * math.sin(par[1] * t + par[2])


@njit(cache=True, nogil=True)
def chain_rhs(t, x, k, g, out):
    n = x.shape[0]
    u = 0.0
    for i in range(n):
        xi = x[i]
        if xi > 0.0:
            u -= k[i] * xi ** g[i]
        elif xi < 0.0:
            u += k[i] * (-xi) ** g[i]
    for i in range(n - 1):
        out[i] = x[i + 1]
    out[n - 1] = u


@njit(cache=True, nogil=True)
def differentiator_rhs(t, x, k, alpha, kappa, beta, lam, sig_kind, sig_par, out):
    n = x.shape[0]
    e = x[0] - signal_value(sig_kind, sig_par, t)
    s = _sgn(e)
    a = abs(e)
    for i in range(n):
        corr = -(k[i] * a ** alpha[i] + kappa[i] * a ** beta[i]) * s
        if i < n - 1:
            out[i] = x[i + 1] + corr
        else:
            out[i] = corr - lam * s


# The two marches below differ only in the rhs call; numba cannot cache a
# kernel that receives the rhs as an argument, so the loop is spelled out twice.

@njit(cache=True, nogil=True)
def march_chain(method, x0, h, nsteps, stride, k, g):
    """Returns (recorded states, index of first non-finite step or -1)."""
    n = x0.shape[0]
    rec = np.empty((nsteps // stride + 1, n))
    x = x0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    rec[0, :] = x
    r = 1
    for s in range(nsteps):
        t = s * h
        chain_rhs(t, x, k, g, k1)
        if method == EULER:
            for i in range(n):
                x[i] = x[i] + h * k1[i]
        else:
            for i in range(n):
                tmp[i] = x[i] + 0.5 * h * k1[i]
            chain_rhs(t + 0.5 * h, tmp, k, g, k2)
            for i in range(n):
                tmp[i] = x[i] + 0.5 * h * k2[i]
            chain_rhs(t + 0.5 * h, tmp, k, g, k3)
            for i in range(n):
                tmp[i] = x[i] + h * k3[i]
            chain_rhs(t + h, tmp, k, g, k4)
            for i in range(n):
                x[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        for i in range(n):
            if not math.isfinite(x[i]):
                return rec[:r], s + 1
        if (s + 1) % stride == 0:
            rec[r, :] = x
            r += 1
    return rec, -1


@njit(cache=True, nogil=True)
def march_differentiator(method, z0, h, nsteps, stride, k, alpha, kappa, beta, lam, sig_kind, sig_par):
    n = z0.shape[0]
    rec = np.empty((nsteps // stride + 1, n))
    x = z0.copy()
    k1 = np.empty(n)
    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    tmp = np.empty(n)
    rec[0, :] = x
    r = 1
    for s in range(nsteps):
        t = s * h
        differentiator_rhs(t, x, k, alpha, kappa, beta, lam, sig_kind, sig_par, k1)
        if method == EULER:
            for i in range(n):
                x[i] = x[i] + h * k1[i]
        else:
            for i in range(n):
                tmp[i] = x[i] + 0.5 * h * k1[i]
            differentiator_rhs(t + 0.5 * h, tmp, k, alpha, kappa, beta, lam, sig_kind, sig_par, k2)
            for i in range(n):
                tmp[i] = x[i] + 0.5 * h * k2[i]
            differentiator_rhs(t + 0.5 * h, tmp, k, alpha, kappa, beta, lam, sig_kind, sig_par, k3)
            for i in range(n):
                tmp[i] = x[i] + h * k3[i]
            differentiator_rhs(t + h, tmp, k, alpha, kappa, beta, lam, sig_kind, sig_par, k4)
            for i in range(n):
                x[i] = x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
        for i in range(n):
            if not math.isfinite(x[i]):
                return rec[:r], s + 1
        if (s + 1) % stride == 0:
            rec[r, :] = x
            r += 1
    return rec, -1
