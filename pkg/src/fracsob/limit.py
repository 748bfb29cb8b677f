"""Minimizer of the Hoelder quotient |u|_s / k(u) and viscosity residuals of
the limit equations.

The sup in |u|_s is replaced by a q-power mean of the difference quotients,
minimized over an increasing ladder of q with warm starts; the reported mu is
the exact discrete seminorm of the final iterate.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .descent import DescentOptions, minimize
from .extremal import InvalidInitError
from .geometry import Domain, as_field
from .nonlocal_ops import holder_seminorm, kernel_table, linf_minus, linf_plus
from .weights import Weight, build_xi, log_geometric_mean

log = logging.getLogger(__name__)

__all__ = [
    "LimitOptions",
    "LimitSolution",
    "holder_quotient",
    "smoothed_quotient_grad",
    "minimize_holder_quotient",
    "viscosity_residual_minus",
    "supersolution_check_linf",
]

DEFAULT_LADDER = (16, 64, 256, 1024, 4096, 16384, 65536)


@dataclass
class LimitOptions:
    q_ladder: tuple = DEFAULT_LADDER
    grad_tol: float = 1e-8
    max_iter: int = 20_000


@dataclass
class LimitSolution:
    s: float
    mu: float
    v: np.ndarray = field(repr=False)
    residual_minus: np.ndarray = field(repr=False)
    residual_sup_check: np.ndarray = field(repr=False)
    q_ladder_trace: list = field(default_factory=list)
    converged: bool = True

    @property
    def residual_minus_sup(self) -> float:
        return float(np.max(np.abs(self.residual_minus)))

    @property
    def sup_check_max(self) -> float:
        return float(np.max(self.residual_sup_check))


def holder_quotient(u, d: Domain, w: Weight, s: float) -> float:
    """Q_s(u) = |u|_s / k(u); infinite when k(u) = 0."""
    lk = log_geometric_mean(u, w)
    if lk == -math.inf:
        return math.inf
    return holder_seminorm(u, d, s).value * math.exp(-lk)


class _Quotients:
    """Log difference quotients of a positive field: unordered interior pairs
    followed by the nearest-boundary quotient u_i / delta_i^s of each node."""

    def __init__(self, d: Domain, s: float):
        table = kernel_table(d)
        self.n = d.n
        self.iu, self.ju = np.triu_indices(d.n, 1)
        self.log_scale = np.concatenate((-s * table.log_dist[self.iu, self.ju], -s * table.log_delta))

    def log_values(self, u):
        with np.errstate(divide="ignore"):
            pair = np.log(np.abs(u[self.iu] - u[self.ju]))
        return np.concatenate((pair, np.log(u))) + self.log_scale


def smoothed_quotient_grad(wlog, quot: _Quotients, w: Weight, q: float):
    """``G(w) = (1/q) log mean_e r_e^q - sum w_i omega_i h^N`` and its gradient."""
    u = np.exp(wlog)
    lr = quot.log_values(u)
    m = float(np.max(lr))
    e = np.exp(q * (lr - m))
    z = float(np.sum(e))
    value = m + math.log(z / lr.size) / q - float(np.sum(wlog * w.quad))
    pi = e / z
    npair = quot.iu.size
    i, j = quot.iu, quot.ju
    # d log|u_i - u_j| / d w_i = u_i / (u_i - u_j), and symmetrically for w_j
    diff = u[i] - u[j]
    with np.errstate(divide="ignore", invalid="ignore"):
        ppair = np.where(diff != 0, pi[:npair] / diff, 0.0)
    grad = np.bincount(i, ppair * u[i], minlength=quot.n) - np.bincount(j, ppair * u[j], minlength=quot.n)
    grad += pi[npair:]
    return value, grad - w.quad


def _initial_field(init, d: Domain, w: Weight, s: float):
    if isinstance(init, str):
        if init == "xi":
            return build_xi(w, d.delta, d).xi
        if init == "delta_s":
            return d.delta**s
        raise InvalidInitError(f"unknown init {init!r}")
    u0 = np.asarray(init, dtype=float)
    if u0.shape != (d.n,) or not np.all(np.isfinite(u0)) or np.any(u0 <= 0):
        raise InvalidInitError("initial field must be finite and strictly positive")
    return u0


def minimize_holder_quotient(d: Domain, w: Weight, s: float, init="xi", opts: LimitOptions | None = None) -> LimitSolution:
    opts = opts or LimitOptions()
    u0 = _initial_field(init, d, w, s)
    quot = _Quotients(d, s)
    x = np.log(u0)
    trace = []
    converged = True
    for q in opts.q_ladder:
        res = minimize(
            lambda z, q=q: smoothed_quotient_grad(z, quot, w, q),
            x,
            DescentOptions(grad_tol=opts.grad_tol, max_iter=opts.max_iter),
        )
        x = res.x - float(np.sum(res.x * w.quad)) / w.mass
        trace.append((float(q), math.exp(res.f)))
        converged = converged and res.converged
        log.debug("q=%g: smoothed quotient %.10g, %s (%d it)", q, math.exp(res.f), res.message, res.iterations)
    v = np.exp(x)
    v = v / math.exp(log_geometric_mean(v, w))
    mu = holder_seminorm(v, d, s).value
    res_minus, _ = viscosity_residual_minus(v, mu, d, s)
    sup_check, _ = supersolution_check_linf(v, d, s)
    return LimitSolution(
        s=s,
        mu=mu,
        v=v,
        residual_minus=res_minus,
        residual_sup_check=sup_check,
        q_ladder_trace=trace,
        converged=converged,
    )


def viscosity_residual_minus(u, mu: float, d: Domain, s: float):
    """Per-node ``L_inf^- u + mu`` and its sup norm."""
    u = as_field(u, d)
    r = linf_minus(u, d, s) + mu
    return r, float(np.max(np.abs(r)))


def supersolution_check_linf(u, d: Domain, s: float):
    """Per-node positive part of ``L_inf^+ u + L_inf^- u`` and its maximum.

    A supersolution of ``L_inf u = 0`` has this sum nonpositive at every node.
    """
    u = as_field(u, d)
    c = np.maximum(linf_plus(u, d, s) + linf_minus(u, d, s), 0.0)
    return c, float(np.max(c))
