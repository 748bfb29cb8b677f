"""Discretized domains: interior lattice, exterior collar and boundary distance.

Nodes sit on the uniform lattice ``a + i*h`` (``i = 1..n`` inside), so the
boundary itself carries no node.  Fields are stored on interior nodes only and
are implicitly zero on the collar and everywhere else outside the domain.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Union

import numpy as np

__all__ = [
    "Interval",
    "Rectangle",
    "Domain",
    "InvalidSpecError",
    "build_domain",
    "distance_field",
    "as_field",
]


class InvalidSpecError(ValueError):
    """Raised for a domain description that cannot be discretized."""


@dataclass(frozen=True)
class Interval:
    a: float
    b: float

    @property
    def extents(self):
        return ((self.a, self.b),)


@dataclass(frozen=True)
class Rectangle:
    a: float
    b: float
    c: float
    d: float

    @property
    def extents(self):
        return ((self.a, self.b), (self.c, self.d))


DomainSpec = Union[Interval, Rectangle]


@dataclass(frozen=True, eq=False)
class Domain:
    """Immutable lattice discretization of an interval or a rectangle.

    ``interior`` and ``collar`` have shape ``(count, dim)``.  ``spacing`` holds
    the lattice step per axis; ``h`` is the largest of them.
    """

    dim: int
    bounds: tuple
    shape: tuple
    spacing: tuple
    collar_width: float
    interior: np.ndarray = field(repr=False)
    collar: np.ndarray = field(repr=False)

    @property
    def n(self) -> int:
        return self.interior.shape[0]

    @property
    def h(self) -> float:
        return max(self.spacing)

    @property
    def cell_measure(self) -> float:
        return float(np.prod(self.spacing))

    @property
    def diameter(self) -> float:
        return float(np.sqrt(sum((hi - lo) ** 2 for lo, hi in self.bounds)))

    @property
    def inradius(self) -> float:
        return 0.5 * min(hi - lo for lo, hi in self.bounds)

    @cached_property
    def delta(self) -> np.ndarray:
        return distance_field(self)

    def reflect_index(self, axis: int = 0) -> np.ndarray:
        """Permutation sending each interior node to its mirror image across
        the midline orthogonal to ``axis``."""
        grid = np.arange(self.n).reshape(self.shape)
        return np.flip(grid, axis=axis).ravel()


def build_domain(spec: DomainSpec, n_per_axis: int, collar_width: float | None = None) -> Domain:
    """Lay a uniform lattice over ``spec`` with ``n_per_axis`` interior nodes per axis.

    The collar holds the lattice nodes strictly outside the closed domain and
    within ``collar_width`` of it (Chebyshev distance).  The default width is
    the domain diameter.
    """
    if not isinstance(spec, (Interval, Rectangle)):
        raise InvalidSpecError(f"unsupported domain spec {spec!r}")
    if int(n_per_axis) != n_per_axis or n_per_axis < 3:
        raise InvalidSpecError(f"n_per_axis must be an integer >= 3, got {n_per_axis}")
    n_per_axis = int(n_per_axis)
    extents = spec.extents
    for lo, hi in extents:
        if not (np.isfinite(lo) and np.isfinite(hi) and hi > lo):
            raise InvalidSpecError(f"degenerate extent ({lo}, {hi})")
    spacing = tuple((hi - lo) / (n_per_axis + 1) for lo, hi in extents)
    if collar_width is None:
        collar_width = float(np.sqrt(sum((hi - lo) ** 2 for lo, hi in extents)))
    if not collar_width > 0:
        raise InvalidSpecError(f"collar_width must be positive, got {collar_width}")
    if collar_width < max(spacing) * (1 - 1e-12):
        raise InvalidSpecError(
            f"collar_width {collar_width} is narrower than the lattice step {max(spacing)}"
        )

    # lattice index ranges per axis; index 0 and n+1 lie on the boundary
    depth = [int(np.floor(collar_width / h_a + 1e-9)) for h_a in spacing]
    axes_idx = [np.arange(-k, n_per_axis + 2 + k) for k in depth]
    mesh = np.meshgrid(*axes_idx, indexing="ij")
    idx = np.stack([m.ravel() for m in mesh], axis=1)
    coords = np.stack(
        [lo + idx[:, a] * spacing[a] for a, (lo, _) in enumerate(extents)], axis=1
    )
    inside = np.all((idx >= 1) & (idx <= n_per_axis), axis=1)
    in_closure = np.all((idx >= 0) & (idx <= n_per_axis + 1), axis=1)

    dim = len(extents)
    return Domain(
        dim=dim,
        bounds=tuple((float(lo), float(hi)) for lo, hi in extents),
        shape=(n_per_axis,) * dim,
        spacing=spacing,
        collar_width=float(collar_width),
        interior=coords[inside],
        collar=coords[~in_closure],
    )


def distance_field(d: Domain) -> np.ndarray:
    """Exact Euclidean distance from each interior node to the boundary."""
    dist = np.full(d.n, np.inf)
    for axis, (lo, hi) in enumerate(d.bounds):
        x = d.interior[:, axis]
        dist = np.minimum(dist, np.minimum(x - lo, hi - x))
    return dist


def as_field(values, d: Domain) -> np.ndarray:
    """Validate node values against ``d`` and return them as a float array."""
    u = np.asarray(values, dtype=float)
    if u.shape != (d.n,):
        raise ValueError(f"field has shape {u.shape}, domain has {d.n} interior nodes")
    if not np.all(np.isfinite(u)):
        raise ValueError("field values must be finite")
    return u
