"""Weight normalization, the weight distribution of the boundary distance,
the dyadic construction of the admissible function xi, and the
geometric-mean functional k(u).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Domain, as_field

__all__ = [
    "Weight",
    "InvalidWeightError",
    "DegenerateLevelError",
    "XiConstruction",
    "normalize_weight",
    "weight_from_spec",
    "omega_distribution",
    "dyadic_levels",
    "build_xi",
    "k_eps",
    "log_geometric_mean",
    "geometric_mean_k",
    "coarea_check_1d",
]


class InvalidWeightError(ValueError):
    pass


class DegenerateLevelError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class Weight:
    values: np.ndarray = field(repr=False)
    cell_measure: float

    @property
    def quad(self) -> np.ndarray:
        """Per-node quadrature mass ``omega_i * cell_measure``."""
        return self.values * self.cell_measure

    @property
    def mass(self) -> float:
        return float(np.sum(self.quad))


def normalize_weight(raw, d: Domain) -> Weight:
    """Rescale nonnegative node values so that their quadrature sum is one."""
    try:
        raw = as_field(raw, d)
    except ValueError as exc:
        raise InvalidWeightError(str(exc)) from None
    if np.any(raw < 0):
        raise InvalidWeightError("weight has negative entries")
    total = float(np.sum(raw)) * d.cell_measure
    if total <= 0:
        raise InvalidWeightError("weight is identically zero")
    return Weight(values=raw / total, cell_measure=d.cell_measure)


def weight_from_spec(spec, d: Domain) -> Weight:
    """Build a weight from a config entry.

    Accepted forms: ``"uniform"``, ``{"type": "power", "alpha": a}`` (weight
    proportional to delta**a), ``{"type": "gaussian", "center": c, "width": w}``,
    ``{"type": "values", "values": [...]}`` or a bare list of node values.
    """
    if isinstance(spec, str):
        spec = {"type": spec}
    if isinstance(spec, (list, tuple, np.ndarray)):
        spec = {"type": "values", "values": spec}
    kind = spec.get("type")
    if kind == "uniform":
        raw = np.ones(d.n)
    elif kind == "power":
        raw = d.delta ** float(spec["alpha"])
    elif kind == "gaussian":
        center = np.atleast_1d(np.asarray(spec["center"], dtype=float))
        width = float(spec["width"])
        if center.shape != (d.dim,) or width <= 0:
            raise InvalidWeightError(f"bad gaussian weight spec {spec!r}")
        r2 = np.sum((d.interior - center) ** 2, axis=1)
        raw = np.exp(-0.5 * r2 / width**2)
    elif kind == "values":
        raw = np.asarray(spec["values"], dtype=float)
    else:
        raise InvalidWeightError(f"unknown weight type {kind!r}")
    try:
        return normalize_weight(raw, d)
    except ValueError as exc:
        raise InvalidWeightError(str(exc)) from exc


def omega_distribution(w: Weight, delta: np.ndarray, t: float) -> float:
    """Weight mass of the superlevel set ``{delta > t}``."""
    top = float(np.max(delta))
    if not (0.0 <= t <= top * (1 + 1e-12)):
        raise ValueError(f"level {t} outside [0, {top}]")
    return float(np.sum(w.quad[delta > t]))


@dataclass(frozen=True)
class DyadicLevels:
    levels: tuple
    requested: int
    truncated: bool


def dyadic_levels(w: Weight, delta: np.ndarray, n_max: int, h: float | None = None) -> DyadicLevels:
    """Levels t_n with sigma(t_n) = 1 - 2**-n on the step-function sigma.

    Each t_n is the smallest candidate level (zero or a node distance) at which
    sigma has dropped to the target.  The list stops at the first level that
    fails to decrease strictly or falls below ``h`` (default: smallest node
    distance, which is the lattice step).
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    delta = np.asarray(delta, dtype=float)
    if h is None:
        h = float(np.min(delta))
    cand = np.concatenate(([0.0], np.unique(delta)))
    # sigma at each candidate: mass strictly above it
    order = np.argsort(delta, kind="stable")
    sorted_delta = delta[order]
    tail = np.concatenate((np.cumsum(w.quad[order][::-1])[::-1], [0.0]))
    sigma = tail[np.searchsorted(sorted_delta, cand, side="right")]

    levels = []
    for n in range(1, n_max + 1):
        target = 1.0 - 0.5**n
        t_n = float(cand[np.argmax(sigma <= target + 1e-12)])
        if t_n < h or (levels and t_n >= levels[-1]):
            break
        levels.append(t_n)
    return DyadicLevels(levels=tuple(levels), requested=n_max, truncated=len(levels) < n_max)


@dataclass(frozen=True, eq=False)
class XiConstruction:
    levels: tuple
    phi_breakpoints: tuple
    xi1: np.ndarray = field(repr=False)
    xi: np.ndarray = field(repr=False)
    scale_k: float
    truncated: bool

    def phi(self, t):
        return _phi(np.asarray(t, dtype=float), self.phi_breakpoints)


def _phi(t, breakpoints):
    ts = np.array([0.0] + [b[0] for b in reversed(breakpoints)])
    vs = np.array([0.0] + [b[1] for b in reversed(breakpoints)])
    slope = (vs[-1] - vs[-2]) / (ts[-1] - ts[-2])
    inner = np.interp(t, ts, vs)
    return np.where(t > ts[-1], vs[-1] + slope * (t - ts[-1]), inner)


def build_xi(w: Weight, delta: np.ndarray, d: Domain, n_max: int = 60) -> XiConstruction:
    """Admissible function xi = scale_k * phi(delta) with k(xi) = 1.

    phi is piecewise linear through (0, 0) and (t_n, 2**-n); past t_1 it
    continues with the slope of its last segment so xi stays positive.
    """
    lv = dyadic_levels(w, delta, n_max, h=d.h)
    if not lv.levels:
        raise DegenerateLevelError("no dyadic level is resolvable on this grid")
    breakpoints = tuple((t, 0.5 ** (i + 1)) for i, t in enumerate(lv.levels))
    xi1 = _phi(np.asarray(delta, dtype=float), breakpoints)
    if np.any((xi1 <= 0) & (w.values > 0)):
        raise DegenerateLevelError("xi_1 vanishes where the weight is positive")
    scale = math.exp(-log_geometric_mean(xi1, w))
    return XiConstruction(
        levels=lv.levels,
        phi_breakpoints=breakpoints,
        xi1=xi1,
        xi=scale * xi1,
        scale_k=scale,
        truncated=lv.truncated,
    )


def k_eps(w: Weight, d: Domain, eps: float, n_levels: int = 2001) -> float:
    """Largest weight mass carried by a level set {delta = t}, 0 <= t <= eps.

    1D: the level set is the two points a+t and b-t; the weight there is read
    off the nearest node.  2D: the level-set integral is replaced by the band
    quadrature over ``|delta - t| < h/2`` divided by the band width.
    """
    top = float(np.max(d.delta))
    if not (0 < eps < top):
        raise ValueError(f"eps={eps} outside (0, {top})")
    ts = np.linspace(0.0, eps, n_levels)
    if d.dim == 1:
        (a, b), h = d.bounds[0], d.spacing[0]
        x1 = d.interior[0, 0]

        def nearest(x):
            return np.clip(np.rint((x - x1) / h).astype(int), 0, d.n - 1)

        vals = w.values[nearest(a + ts)] + w.values[nearest(b - ts)]
        return float(np.max(vals))
    h = d.h
    band = np.abs(d.delta[None, :] - ts[:, None]) < 0.5 * h
    return float(np.max(band @ w.quad) / h)


def log_geometric_mean(u, w: Weight) -> float:
    """``sum_i log|u_i| omega_i h^N``; ``-inf`` if u vanishes where omega > 0."""
    u = np.abs(np.asarray(u, dtype=float))
    live = w.values > 0
    if np.any(u[live] == 0):
        return -math.inf
    return float(np.sum(np.log(u[live]) * w.quad[live]))


def geometric_mean_k(u, w: Weight, return_flag: bool = False):
    """k(u) = exp(sum log|u_i| omega_i h^N).

    Returns 0 when u vanishes somewhere on the support of the weight; with
    ``return_flag`` the result is ``(value, degenerate)``.
    """
    lk = log_geometric_mean(u, w)
    degenerate = lk == -math.inf
    value = 0.0 if degenerate else math.exp(lk)
    return (value, degenerate) if return_flag else value


def coarea_check_1d(g, d: Domain) -> float:
    """Discrepancy between the volume integral of g and its integral over the
    two-point level sets {a+t, b-t} of delta, t in [0, (b-a)/2].

    Both sides integrate the same piecewise-linear reconstruction of g (node
    values, linearly extrapolated to the endpoints), each with a rule that is
    exact on its own breakpoints.
    """
    if d.dim != 1:
        raise NotImplementedError("co-area self-test is only defined in 1D")
    g = as_field(g, d)
    (a, b) = d.bounds[0]
    x = d.interior[:, 0]
    ga = g[0] + (g[0] - g[1]) * (x[0] - a) / (x[1] - x[0])
    gb = g[-1] + (g[-1] - g[-2]) * (b - x[-1]) / (x[-1] - x[-2])
    knots = np.concatenate(([a], x, [b]))
    vals = np.concatenate(([ga], g, [gb]))
    volume = np.trapezoid(vals, knots)

    half = 0.5 * (b - a)
    ts = np.unique(np.concatenate(([0.0, half], x - a, b - x)))
    ts = ts[(ts >= 0) & (ts <= half)]
    level = np.interp(a + ts, knots, vals) + np.interp(b - ts, knots, vals)
    levelset = np.trapezoid(level, ts)
    return float(abs(volume - levelset))
