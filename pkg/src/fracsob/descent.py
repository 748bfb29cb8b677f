"""Gradient descent with Armijo backtracking on limited-memory quasi-Newton
directions.  Used by both solvers; the objectives are translation invariant
in log coordinates, which the method does not need to know about.
"""
from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field

import numpy as np

log = logging.getLogger(__name__)


@dataclass
class DescentOptions:
    grad_tol: float = 1e-8
    max_iter: int = 50_000
    armijo_c: float = 1e-4
    backtrack: float = 0.5
    history: int = 10
    min_step: float = 1e-20


@dataclass
class DescentResult:
    x: np.ndarray
    f: float
    grad: np.ndarray
    iterations: int
    converged: bool
    message: str
    grad_history: list = field(default_factory=list, repr=False)


def _two_loop(g, mem):
    q = g.copy()
    alphas = []
    for s, y, rho in reversed(mem):
        a = rho * np.dot(s, q)
        alphas.append(a)
        q -= a * y
    s, y, _ = mem[-1]
    q *= np.dot(s, y) / np.dot(y, y)
    for (s, y, rho), a in zip(mem, reversed(alphas)):
        b = rho * np.dot(y, q)
        q += (a - b) * s
    return -q


def minimize(fun_grad, x0, opts: DescentOptions | None = None) -> DescentResult:
    """Minimize ``f`` given ``fun_grad(x) -> (f, grad)``.

    Stops when ``max|grad| <= grad_tol`` (converged), when the line search can
    no longer produce a measurable decrease, or at ``max_iter``.
    """
    opts = opts or DescentOptions()
    x = np.array(x0, dtype=float)
    f, g = fun_grad(x)
    mem = deque(maxlen=opts.history)
    gnorm = float(np.max(np.abs(g)))
    history = [gnorm]
    message = "max_iter reached"
    it = 0
    while it < opts.max_iter:
        if gnorm <= opts.grad_tol:
            message = "gradient tolerance reached"
            break
        if mem:
            d = _two_loop(g, mem)
            if not np.dot(g, d) < 0:
                mem.clear()
        if not mem:
            d = -g / max(gnorm, 1.0)
        slope = float(np.dot(g, d))
        step = 1.0
        while step >= opts.min_step:
            x_new = x + step * d
            f_new, g_new = fun_grad(x_new)
            if np.isfinite(f_new) and f_new <= f + opts.armijo_c * step * slope:
                break
            step *= opts.backtrack
        else:
            if mem:
                mem.clear()
                continue
            message = "line search stalled"
            break
        s_vec, y_vec = x_new - x, g_new - g
        sy = float(np.dot(s_vec, y_vec))
        if sy > 1e-16 * float(np.dot(y_vec, y_vec)) and sy > 0:
            mem.append((s_vec, y_vec, 1.0 / sy))
        x, f, g = x_new, f_new, g_new
        gnorm = float(np.max(np.abs(g)))
        history.append(gnorm)
        it += 1
    converged = gnorm <= opts.grad_tol
    log.debug("descent: %s after %d iterations, |g|=%.3e", message, it, gnorm)
    return DescentResult(x, f, g, it, converged, message, history)
