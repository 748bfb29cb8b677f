"""Nonlocal functionals on lattice fields extended by zero outside the domain.

All p-power sums are accumulated in the log domain with a max shift, since
``|u(x)-u(y)|**p`` over- or underflows doubles long before p = 128.
"""
from __future__ import annotations

import math
import weakref
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .geometry import Domain, as_field

__all__ = [
    "SeminormParams",
    "PairKernelTable",
    "kernel_table",
    "logsumexp",
    "gagliardo_seminorm_log",
    "seminorm_power_log",
    "seminorm_power_grad",
    "holder_seminorm",
    "HolderResult",
    "frac_p_laplacian",
    "frac_p_laplacian_parts",
    "weak_pairing",
    "linf_plus",
    "linf_minus",
]


@dataclass(frozen=True)
class SeminormParams:
    s: float
    p: float
    log_domain: bool = True

    def __post_init__(self):
        if not (0 < self.s < 1 < self.p):
            raise ValueError(f"need 0 < s < 1 < p, got s={self.s}, p={self.p}")

    @property
    def sp(self) -> float:
        return self.s * self.p


def logsumexp(a) -> float:
    a = np.asarray(a, dtype=float)
    if a.size == 0:
        return -math.inf
    m = float(np.max(a))
    if m == -math.inf:
        return -math.inf
    return m + math.log(float(np.sum(np.exp(a - m))))


class PairKernelTable:
    """Cached pair geometry of a domain.

    Holds ``log|x_i - x_j|`` over interior pairs (zero on the diagonal, which
    is always masked out), the nearest and farthest collar distance of each
    interior node, and per-(s*p) exterior kernel masses

        E_i = integral over R^N minus the domain of |x_i - y|^(-N-sp) dy.

    In 1D E_i is exact.  In 2D it is the collar-node quadrature plus the
    isotropic bound for everything beyond the collar.
    """

    def __init__(self, d: Domain):
        self.domain = d
        x = d.interior
        diff = x[:, None, :] - x[None, :, :]
        dist = np.sqrt(np.sum(diff**2, axis=-1))
        self.offdiag = ~np.eye(d.n, dtype=bool)
        self.log_dist = np.log(np.where(self.offdiag, dist, 1.0))
        self.log_delta = np.log(d.delta)
        self.collar_min, self.collar_max, self.collar_argmin = self._collar_extremes()
        self._exterior = {}

    def _collar_extremes(self, chunk: int = 256):
        d = self.domain
        n, y = d.n, d.collar
        lo, hi, arg = np.empty(n), np.empty(n), np.empty(n, dtype=int)
        for start in range(0, n, chunk):
            xs = d.interior[start:start + chunk]
            r = np.sqrt(np.sum((xs[:, None, :] - y[None, :, :]) ** 2, axis=-1))
            arg[start:start + chunk] = np.argmin(r, axis=1)
            lo[start:start + chunk] = np.min(r, axis=1)
            hi[start:start + chunk] = np.max(r, axis=1)
        return lo, hi, arg

    def log_exterior_mass(self, sp: float) -> np.ndarray:
        key = float(sp)
        if key not in self._exterior:
            self._exterior[key] = self._log_exterior_mass(key)
        return self._exterior[key]

    def _log_exterior_mass(self, sp: float, chunk: int = 128) -> np.ndarray:
        d = self.domain
        if d.dim == 1:
            (a, b) = d.bounds[0]
            x = d.interior[:, 0]
            return np.logaddexp(-sp * np.log(x - a), -sp * np.log(b - x)) - math.log(sp)
        expo = d.dim + sp
        log_mass = np.empty(d.n)
        for start in range(0, d.n, chunk):
            xs = d.interior[start:start + chunk]
            r2 = np.sum((xs[:, None, :] - d.collar[None, :, :]) ** 2, axis=-1)
            terms = -0.5 * expo * np.log(r2)
            m = np.max(terms, axis=1)
            log_mass[start:start + chunk] = m + np.log(np.sum(np.exp(terms - m[:, None]), axis=1))
        log_mass += math.log(d.cell_measure)
        depth = min(math.floor(d.collar_width / h + 1e-9) for h in d.spacing)
        reach = d.delta + (depth + 0.5) * min(d.spacing)
        # |S^1| r^(-sp) / sp bounds the kernel mass outside the ball of radius r
        log_tail = math.log(2 * math.pi / sp) - sp * np.log(reach)
        return np.logaddexp(log_mass, log_tail)


_TABLES: "weakref.WeakKeyDictionary[Domain, PairKernelTable]" = weakref.WeakKeyDictionary()


def kernel_table(d: Domain) -> PairKernelTable:
    table = _TABLES.get(d)
    if table is None:
        table = _TABLES[d] = PairKernelTable(d)
    return table


def _log_abs(x):
    with np.errstate(divide="ignore"):
        return np.log(np.abs(x))


def _pair_terms(u, table: PairKernelTable, prm: SeminormParams):
    """Log of every term of the discrete ``[u]^p`` sum.

    Interior ordered pairs carry ``h^(2N) |u_i-u_j|^p / |x_i-x_j|^(N+sp)``;
    each node also carries twice its exterior term ``h^N |u_i|^p E_i``.
    """
    d = table.domain
    log_h = math.log(d.cell_measure)
    diff = u[:, None] - u[None, :]
    inner = prm.p * _log_abs(diff) - (d.dim + prm.sp) * table.log_dist + 2 * log_h
    inner = np.where(table.offdiag, inner, -np.inf)
    outer = math.log(2.0) + prm.p * _log_abs(u) + table.log_exterior_mass(prm.sp) + log_h
    return diff, inner, outer


def seminorm_power_log(u, d: Domain, prm: SeminormParams) -> float:
    """``log [u]_{s,p}^p`` of the discrete double sum (``-inf`` for u = 0)."""
    u = as_field(u, d)
    table = kernel_table(d)
    if not prm.log_domain:
        return _seminorm_power_direct(u, table, prm)
    _, inner, outer = _pair_terms(u, table, prm)
    return logsumexp(np.concatenate((inner.ravel(), outer)))


def _seminorm_power_direct(u, table: PairKernelTable, prm: SeminormParams) -> float:
    d = table.domain
    h = d.cell_measure
    kern = np.exp(-(d.dim + prm.sp) * table.log_dist) * table.offdiag
    inner = np.sum(np.abs(u[:, None] - u[None, :]) ** prm.p * kern) * h * h
    outer = 2 * np.sum(np.abs(u) ** prm.p * np.exp(table.log_exterior_mass(prm.sp))) * h
    total = inner + outer
    return math.log(total) if total > 0 else -math.inf


def gagliardo_seminorm_log(u, d: Domain, prm: SeminormParams) -> float:
    """``log [u]_{s,p}``; ``-inf`` stands for the zero seminorm."""
    return seminorm_power_log(u, d, prm) / prm.p


def seminorm_power_grad(u, d: Domain, prm: SeminormParams):
    """Return ``(log S, g)`` with ``S = [u]^p`` and ``g_i = <(-Delta_p)^s u, e_i> / S``.

    Since ``dS/du_i = p <(-Delta_p)^s u, e_i>``, ``g`` is the gradient of
    ``log [u]_{s,p}``.  Every term is formed relative to S, so nothing overflows.
    """
    u = as_field(u, d)
    table = kernel_table(d)
    diff, inner, outer = _pair_terms(u, table, prm)
    log_s = logsumexp(np.concatenate((inner.ravel(), outer)))
    if log_s == -math.inf:
        return log_s, np.zeros_like(u)
    with np.errstate(divide="ignore", invalid="ignore"):
        # one factor |u_i - u_j| fewer than the seminorm term, times the sign
        rel = np.where(diff != 0, np.exp(inner - log_s - _log_abs(diff)), 0.0)
        rel_out = np.where(u != 0, np.exp(outer - log_s - _log_abs(u)), 0.0)
    g = 2 * np.sum(np.sign(diff) * rel, axis=1) + np.sign(u) * rel_out
    return log_s, g


def weak_pairing(u, v, d: Domain, prm: SeminormParams) -> float:
    """Discrete ``<(-Delta_p)^s u, v>`` over all pairs, zero outside the domain."""
    u = as_field(u, d)
    v = as_field(v, d)
    table = kernel_table(d)
    diff, inner, outer = _pair_terms(u, table, prm)
    dv = v[:, None] - v[None, :]
    with np.errstate(divide="ignore", invalid="ignore"):
        t_in = inner - _log_abs(diff) + _log_abs(dv)
        t_out = outer - _log_abs(u) + _log_abs(v)
    t_in = np.where((diff != 0) & table.offdiag, t_in, -np.inf)
    t_out = np.where(u != 0, t_out, -np.inf)
    # the outer term already carries the factor 2 of both orderings
    logs = np.concatenate((t_in.ravel(), t_out))
    signs = np.concatenate(((np.sign(diff) * np.sign(dv)).ravel(), np.sign(u) * np.sign(v)))
    m = float(np.max(logs))
    if m == -math.inf:
        return 0.0
    return float(np.sum(signs * np.exp(logs - m))) * math.exp(m)


def frac_p_laplacian_parts(u, d: Domain, prm: SeminormParams, i=None):
    """``(log A, log B)`` with ``L_p u(x_i) = A - B``.

    A collects neighbours above u(x_i), B those below, the zero exterior
    included via its kernel mass.
    """
    u = as_field(u, d)
    table = kernel_table(d)
    idx = np.arange(d.n) if i is None else np.atleast_1d(i)
    log_h = math.log(d.cell_measure)
    pm1 = prm.p - 1
    diff = u[None, :] - u[idx, None]
    logk = -(d.dim + prm.sp) * table.log_dist[idx]
    mag = pm1 * _log_abs(diff) + logk + log_h
    mag = np.where(table.offdiag[idx], mag, -np.inf)
    ext = pm1 * _log_abs(u[idx]) + table.log_exterior_mass(prm.sp)[idx]
    ln2 = math.log(2.0)
    log_a = np.empty(len(idx))
    log_b = np.empty(len(idx))
    for r, k in enumerate(idx):
        up = mag[r][diff[r] > 0]
        down = mag[r][diff[r] < 0]
        # the exterior value 0 sits below a positive u(x_i), above a negative one
        if u[k] > 0:
            down = np.append(down, ext[r])
        elif u[k] < 0:
            up = np.append(up, ext[r])
        log_a[r] = ln2 + logsumexp(up)
        log_b[r] = ln2 + logsumexp(down)
    if i is not None and np.ndim(i) == 0:
        return float(log_a[0]), float(log_b[0])
    return log_a, log_b


def frac_p_laplacian(u, d: Domain, prm: SeminormParams, i=None):
    """``L_p u = 2 * sum |u(y)-u(x)|^(p-2) (u(y)-u(x)) / |y-x|^(N+sp)`` at node(s) ``i``."""
    log_a, log_b = frac_p_laplacian_parts(u, d, prm, i)
    return np.exp(log_a) - np.exp(log_b)


class HolderResult(NamedTuple):
    value: float
    pair: tuple


def holder_seminorm(u, d: Domain, s: float) -> HolderResult:
    """Discrete ``|u|_s`` over the zero-extended field.

    Candidates are interior pairs, interior-collar pairs and, for every node,
    the nearest boundary point, where u = 0 (``|u_i| / delta_i^s``).  ``pair``
    is ``(i, j)`` with ``j`` an interior index, ``n + k`` for collar node ``k``,
    or ``-1`` for the boundary point; ties go to the lexicographically
    smallest pair.
    """
    u = as_field(u, d)
    table = kernel_table(d)
    n = d.n
    with np.errstate(divide="ignore"):
        inner = _log_abs(u[:, None] - u[None, :]) - s * table.log_dist
    iu, ju = np.triu_indices(n, 1)
    cand_val = [inner[iu, ju]]
    cand_i = [iu]
    cand_j = [ju]
    log_u = _log_abs(u)
    cand_val.append(log_u - s * np.log(table.collar_min))
    cand_i.append(np.arange(n))
    cand_j.append(n + table.collar_argmin)
    cand_val.append(log_u - s * table.log_delta)
    cand_i.append(np.arange(n))
    cand_j.append(np.full(n, -1))
    vals = np.concatenate(cand_val)
    ii = np.concatenate(cand_i)
    jj = np.concatenate(cand_j)
    top = np.max(vals)
    if top == -np.inf:
        return HolderResult(0.0, (0, -1))
    hits = np.flatnonzero(vals == top)
    best = min(zip(ii[hits].tolist(), jj[hits].tolist()))
    return HolderResult(float(np.exp(top)), best)


def _linf_candidates(u, table: PairKernelTable, s: float, idx):
    """Difference quotients ``(u(y) - u(x_i)) / |y - x_i|^s`` for y over the
    other nodes, the collar extremes, the nearest boundary point and the far
    field (limit 0)."""
    d = table.domain
    q = (u[None, :] - u[idx, None]) * np.exp(-s * table.log_dist[idx])
    q = np.where(table.offdiag[idx], q, np.nan)
    ui = u[idx]
    ext = np.stack([
        -ui / table.collar_min[idx] ** s,
        -ui / table.collar_max[idx] ** s,
        -ui / d.delta[idx] ** s,
        np.zeros_like(ui),
    ], axis=1)
    return np.concatenate((q, ext), axis=1)


def _linf(u, d, s, i, reduce):
    u = as_field(u, d)
    table = kernel_table(d)
    idx = np.arange(d.n) if i is None else np.atleast_1d(i)
    out = reduce(_linf_candidates(u, table, s, idx), axis=1)
    return float(out[0]) if (i is not None and np.ndim(i) == 0) else out


def linf_plus(u, d: Domain, s: float, i=None):
    """``sup_y (u(y) - u(x_i)) / |y - x_i|^s`` over the zero-extended field."""
    return _linf(u, d, s, i, np.nanmax)


def linf_minus(u, d: Domain, s: float, i=None):
    """``inf_y (u(y) - u(x_i)) / |y - x_i|^s`` over the zero-extended field."""
    return _linf(u, d, s, i, np.nanmin)
