"""Independent reference computations used by the self-test and the test suite.

Nothing here touches the cached kernel tables or the log-domain sums: the
seminorm is a plain double loop, and the minimizers are found by lattice
search followed by local refinement.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

__all__ = [
    "direct_seminorm_power_1d",
    "direct_frac_laplacian_1d",
    "extremal_oracle_1d",
    "holder_quotient_oracle_1d",
    "mu_closed_form_interval",
    "k_delta_closed_form",
]


def _tail(x, a, b, sp):
    return ((x - a) ** -sp + (b - x) ** -sp) / sp


def direct_seminorm_power_1d(u, a, b, s, p):
    """``[u]_{s,p}^p`` on the lattice a + i h, i = 1..n, by a double loop."""
    n = len(u)
    h = (b - a) / (n + 1)
    x = [a + (i + 1) * h for i in range(n)]
    total = 0.0
    for i in range(n):
        for j in range(n):
            if i != j:
                total += abs(u[i] - u[j]) ** p / abs(x[i] - x[j]) ** (1 + s * p) * h * h
        total += 2 * abs(u[i]) ** p * _tail(x[i], a, b, s * p) * h
    return total


def direct_frac_laplacian_1d(u, a, b, s, p, i):
    n = len(u)
    h = (b - a) / (n + 1)
    x = [a + (k + 1) * h for k in range(n)]
    total = 0.0
    for j in range(n):
        if j != i:
            diff = u[j] - u[i]
            total += abs(diff) ** (p - 2) * diff / abs(x[j] - x[i]) ** (1 + s * p) * h
    total -= abs(u[i]) ** (p - 2) * u[i] * _tail(x[i], a, b, s * p)
    return 2 * total


def _zoom_search(f, center, radius, points=41, tol=1e-11):
    """Repeated grid search on a shrinking box around the incumbent."""
    center = np.asarray(center, dtype=float)
    best = f(center)
    while radius > tol:
        axes = [np.linspace(c - radius, c + radius, points) for c in center]
        for cand in itertools.product(*axes):
            val = f(np.array(cand))
            if val < best:
                best, center = val, np.array(cand)
        radius *= 0.25
    return best, center


def extremal_oracle_1d(n, a, b, s, p, omega):
    """Minimum of ``[u]^p / k(u)^p`` over positive u with n interior nodes.

    ``omega`` holds normalized node weights.  The constraint sum(log u *
    omega h) = 0 eliminates the middle coordinate; the other coordinates are
    searched on a zoomed lattice.
    """
    h = (b - a) / (n + 1)
    omega = np.asarray(omega, dtype=float)
    mid = n // 2
    free = [i for i in range(n) if i != mid]

    def lift(z):
        w = np.empty(n)
        w[free] = z
        w[mid] = -float(np.dot(omega[free], z)) / omega[mid]
        return np.exp(w)

    def objective(z):
        return direct_seminorm_power_1d(list(lift(z)), a, b, s, p)

    lam, z = _zoom_search(objective, np.zeros(n - 1), 3.0)
    u = lift(z)
    return lam, u / math.exp(float(np.sum(np.log(u) * omega * h)))


def _holder_quotients(u, x, a, b, s):
    """Hoelder quotient and log k for a batch of fields ``u`` (rows)."""
    n = u.shape[1]
    best = np.zeros(u.shape[0])
    for i in range(n):
        dist = min(x[i] - a, b - x[i])
        best = np.maximum(best, np.abs(u[:, i]) / dist**s)
        for j in range(i + 1, n):
            best = np.maximum(best, np.abs(u[:, i] - u[:, j]) / abs(x[i] - x[j]) ** s)
    return best


def holder_quotient_oracle_1d(n, a, b, s, omega, levels=21, seed=0):
    """Minimum of ``|u|_s / k(u)`` over positive node values.

    Exhaustive search over ``levels**n`` lattice points in (0, 1], then a
    seeded random pattern search in log coordinates with a shrinking radius.
    Returns ``(mu, v)`` with v normalized to k(v) = 1.
    """
    h = (b - a) / (n + 1)
    x = [a + (i + 1) * h for i in range(n)]
    omega = np.asarray(omega, dtype=float)
    quad = omega * h
    grid = np.linspace(1.0 / levels, 1.0, levels)

    def q_batch(u):
        return _holder_quotients(u, x, a, b, s) / np.exp(np.log(u) @ quad)

    best_val, best_u = math.inf, None
    rest = np.array(list(itertools.product(grid, repeat=n - 1)))
    for first in grid:
        batch = np.column_stack((np.full(len(rest), first), rest))
        vals = q_batch(batch)
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val, best_u = float(vals[k]), batch[k].copy()

    rng = np.random.default_rng(seed)
    z = np.log(best_u)
    radius = 0.1
    dirs = np.vstack((np.eye(n), -np.eye(n)))
    while radius > 1e-13:
        trial = np.vstack((z + radius * dirs, z + radius * rng.standard_normal((64, n)) / math.sqrt(n)))
        vals = q_batch(np.exp(trial))
        k = int(np.argmin(vals))
        if vals[k] < best_val:
            best_val, z = float(vals[k]), trial[k]
        else:
            radius *= 0.5
    v = np.exp(z)
    return best_val, v / math.exp(float(np.log(v) @ quad))


def mu_closed_form_interval(s: float) -> float:
    """Continuum minimum of |u|_s / k(u) on (0, 1) with uniform weight.

    The largest function with s-Hoelder constant 1 vanishing outside the
    interval is delta^s, so the minimizer is proportional to delta^s and
    mu_s = 1 / k(delta^s) = exp(s (1 + log 2)).
    """
    return math.exp(s * (1 + math.log(2)))


def k_delta_closed_form() -> float:
    """k(delta) on (0, 1) with uniform weight: exp(-1 - log 2) = e^-1 / 2."""
    return math.exp(-1) / 2
