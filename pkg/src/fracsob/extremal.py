"""Best constant Lambda_p and extremal u_p of the log-constrained inequality.

The quotient ``[u]_{s,p} / k(u)`` is homogeneous of degree zero, so with
``u = exp(w)`` its logarithm

    F(w) = log [exp(w)]_{s,p} - sum_i w_i omega_i h^N

is invariant under ``w -> w + c``.  F is minimized without constraints and
the minimizer is shifted afterwards so that k(u_p) = 1.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .descent import DescentOptions, minimize
from .geometry import Domain, as_field
from .nonlocal_ops import SeminormParams, seminorm_power_grad, seminorm_power_log
from .weights import Weight, build_xi, log_geometric_mean

log = logging.getLogger(__name__)

__all__ = [
    "ExtremalOptions",
    "ExtremalSolution",
    "InvalidInitError",
    "log_rayleigh",
    "log_rayleigh_grad",
    "solve_extremal",
    "euler_lagrange_residual",
    "el_residual_field",
]


class InvalidInitError(ValueError):
    pass


@dataclass
class ExtremalOptions:
    init: object = "xi"  # "xi", "delta_s" or an explicit positive field
    grad_tol: float | None = None  # None: 1e-8 up to 200 nodes, 1e-6 beyond
    max_iter: int = 50_000
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    history: int = 10


@dataclass
class ExtremalSolution:
    p: float
    log_lambda: float
    u_p: np.ndarray = field(repr=False)
    el_residual: float
    iterations: int
    converged: bool
    degenerate: bool = False
    grad_history: list = field(default_factory=list, repr=False)

    @property
    def lambda_root(self) -> float:
        return math.exp(self.log_lambda / self.p)


def log_rayleigh_grad(wlog, d: Domain, w: Weight, prm: SeminormParams):
    """``(F(w), dF/dw)`` for ``F(w) = log [exp(w)]_{s,p} - sum w_i omega_i h^N``."""
    u = np.exp(wlog)
    log_s, g = seminorm_power_grad(u, d, prm)
    value = log_s / prm.p - float(np.sum(wlog * w.quad))
    return value, u * g - w.quad


def log_rayleigh(wlog, d: Domain, w: Weight, prm: SeminormParams) -> float:
    wlog = as_field(wlog, d)
    return seminorm_power_log(np.exp(wlog), d, prm) / prm.p - float(np.sum(wlog * w.quad))


def _initial_field(init, d: Domain, w: Weight, s: float) -> np.ndarray:
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


def el_residual_field(u, log_lambda: float, d: Domain, w: Weight, prm: SeminormParams) -> np.ndarray:
    """``|<(-Delta_p)^s u, e_i> - Lambda omega_i h^N / u_i| / Lambda`` per node."""
    u = as_field(u, d)
    log_s, g = seminorm_power_grad(u, d, prm)
    pairing_over_lambda = g * math.exp(log_s - log_lambda)
    return np.abs(pairing_over_lambda - w.quad / u)


def euler_lagrange_residual(sol: ExtremalSolution, d: Domain, w: Weight, prm: SeminormParams) -> float:
    """Sup over the nodal basis of the weak-form residual, relative to Lambda_p."""
    return float(np.max(el_residual_field(sol.u_p, sol.log_lambda, d, w, prm)))


def solve_extremal(d: Domain, w: Weight, prm: SeminormParams, opts: ExtremalOptions | None = None) -> ExtremalSolution:
    opts = opts or ExtremalOptions()
    u0 = _initial_field(opts.init, d, w, prm.s)
    grad_tol = opts.grad_tol
    if grad_tol is None:
        grad_tol = 1e-8 if d.n <= 200 else 1e-6
    res = minimize(
        lambda x: log_rayleigh_grad(x, d, w, prm),
        np.log(u0),
        DescentOptions(
            grad_tol=grad_tol,
            max_iter=opts.max_iter,
            armijo_c=opts.armijo_c,
            backtrack=opts.backtrack,
            history=opts.history,
        ),
    )
    wlog = res.x - float(np.sum(res.x * w.quad)) / w.mass
    u_p = np.exp(wlog)
    # one more exact renormalization against rounding in the shift
    u_p = u_p / math.exp(log_geometric_mean(u_p, w))
    log_lambda = seminorm_power_log(u_p, d, prm)
    sol = ExtremalSolution(
        p=prm.p,
        log_lambda=log_lambda,
        u_p=u_p,
        el_residual=math.nan,
        iterations=res.iterations,
        converged=res.converged,
        degenerate=bool(np.min(u_p) < 1e-12 * np.max(u_p)),
        grad_history=res.grad_history,
    )
    sol.el_residual = euler_lagrange_residual(sol, d, w, prm)
    if not res.converged:
        log.warning("p=%g: %s after %d iterations (|grad|=%.2e)",
                    prm.p, res.message, res.iterations, res.grad_history[-1])
    return sol
