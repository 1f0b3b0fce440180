"""Forward divergent-beam operators.

beam_integral computes int_0^inf t^w <f(x + t xi), xi^m> dt by a Gauss-Jacobi
rule on [0,1] (weight t^w, exact for the endpoint singularity when w < 0)
plus dyadic Gauss-Legendre panels on [1, T].  forward_grid vectorizes over a
source set for each direction.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field as dc_field
from functools import lru_cache
from math import prod

import numpy as np
from scipy import ndimage
from scipy.special import roots_jacobi, roots_legendre

from .fields import SymTensorField
from .phantoms import PhantomSpec, directional_profile
from .spectral import SpectralGrid
from .symtensor import index_table

__all__ = [
    "QuadratureSpec",
    "SourceLattice",
    "BeamSamples",
    "beam_integral",
    "forward_grid",
    "momentum_reduce",
    "GridFieldEvaluator",
    "make_evaluator",
    "default_truncation",
    "circle_directions",
    "fibonacci_directions",
]


def default_truncation(w: float, tail_tol: float = 1e-14, decay: float = 16.0) -> float:
    """Smallest dyadic T with (1+T^2)^(-decay/2) * T^w below tail_tol."""
    T = 2.0
    while (1.0 + T * T) ** (-decay / 2.0) * T ** max(w, 0.0) > tail_tol and T < 2**20:
        T *= 2.0
    return max(T, 32.0)


@dataclass(frozen=True)
class QuadratureSpec:
    """Singular-weight ray rule: Gauss-Jacobi head on [0,1], Legendre tail.

    The head rule integrates t^w * (polynomial) exactly; tail panels double
    in width ([1,2],[2,4],...) up to the truncation T.  tail_tol documents
    the magnitude below which the truncated tail is guaranteed for fields
    with the default Gaussian-class decay.
    """

    head_nodes: int = 40
    tail_nodes: int = 24
    truncation: float = 32.0
    tail_tol: float = 1e-14

    def __post_init__(self):
        if self.head_nodes < 2 or self.tail_nodes < 2:
            raise ValueError("need at least 2 nodes per rule")
        if self.truncation <= 1.0:
            raise ValueError("truncation must exceed the head interval [0,1]")

    def nodes(self, w: float) -> tuple[np.ndarray, np.ndarray]:
        """Quadrature nodes and weights for weight exponent w > -1.

        The t^w factor is folded into the weights, so integrands are
        evaluated without the singular factor.
        """
        if w <= -1.0:
            raise ValueError(f"weight exponent w={w} must be > -1")
        return _rule(self.head_nodes, self.tail_nodes, self.truncation, float(w))

    def refined(self, factor: int = 2) -> "QuadratureSpec":
        return QuadratureSpec(self.head_nodes * factor, self.tail_nodes * factor,
                              self.truncation, self.tail_tol)


@lru_cache(maxsize=128)
def _rule(head_nodes: int, tail_nodes: int, truncation: float, w: float):
    xj, wj = roots_jacobi(head_nodes, 0.0, w)
    t = [(xj + 1.0) / 2.0]
    wt = [wj * 0.5 ** (w + 1.0)]
    xl, wl = roots_legendre(tail_nodes)
    lo = 1.0
    while lo < truncation:
        hi = min(2.0 * lo, truncation)
        mid, half = (lo + hi) / 2.0, (hi - lo) / 2.0
        tp = half * xl + mid
        t.append(tp)
        wt.append(half * wl * tp**w)
        lo = hi
    t = np.concatenate(t)
    wt = np.concatenate(wt)
    t.flags.writeable = False
    wt.flags.writeable = False
    return t, wt


@dataclass(frozen=True)
class SourceLattice:
    """Regular (non-periodic) lattice of source points."""

    shape: tuple[int, ...]
    origin: tuple[float, ...]
    spacing: tuple[float, ...]

    @classmethod
    def from_grid(cls, grid: SpectralGrid) -> "SourceLattice":
        return cls(grid.sizes, grid.origin, grid.spacing)

    @property
    def dim(self) -> int:
        return len(self.shape)

    def axes(self) -> list[np.ndarray]:
        return [o + h * np.arange(n) for o, h, n in
                zip(self.origin, self.spacing, self.shape)]

    def nodes(self) -> np.ndarray:
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def trim(self, cells: int) -> "SourceLattice":
        shape = tuple(n - 2 * cells for n in self.shape)
        if any(n < 1 for n in shape):
            raise ValueError(
                f"lattice {self.shape} exhausted by trimming {cells} cells per side"
            )
        origin = tuple(o + cells * h for o, h in zip(self.origin, self.spacing))
        return SourceLattice(shape, origin, self.spacing)


@dataclass
class BeamSamples:
    """Transform values on (source set) x (direction set).

    weight is the exponent of t in the ray weight; weight_kind records
    whether it arose as an integer order k or a fractional exponent s
    (w = 2s - 1).  values[i, j] belongs to sources[i], directions[j].
    """

    sources: np.ndarray
    directions: np.ndarray
    values: np.ndarray
    weight: float
    order: int
    weight_kind: str = "k"
    lattice: SourceLattice | None = None
    quality: dict = dc_field(default_factory=dict)

    def __post_init__(self):
        self.sources = np.asarray(self.sources, dtype=np.float64)
        self.directions = np.asarray(self.directions, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        norms = np.linalg.norm(self.directions, axis=1)
        if np.max(np.abs(norms - 1.0)) > 1e-14:
            raise ValueError("directions must be unit vectors to 1e-14")
        if self.values.shape != (len(self.sources), len(self.directions)):
            raise ValueError("values must have shape (n_sources, n_directions)")

    @property
    def dim(self) -> int:
        return self.sources.shape[1]


def circle_directions(count: int = 64) -> np.ndarray:
    """Equispaced unit directions on S^1 (trapezoid weights are uniform)."""
    th = 2.0 * np.pi * np.arange(count) / count
    return np.stack([np.cos(th), np.sin(th)], axis=1)


def fibonacci_directions(count: int = 266) -> np.ndarray:
    """Fibonacci-spiral node set on S^2 (uniform weights 4 pi / count)."""
    k = np.arange(count) + 0.5
    phi = np.arccos(1.0 - 2.0 * k / count)
    theta = np.pi * (1.0 + 5.0**0.5) * k
    return np.stack([
        np.sin(phi) * np.cos(theta),
        np.sin(phi) * np.sin(theta),
        np.cos(phi),
    ], axis=1)


class GridFieldEvaluator:
    """Off-grid evaluation of a sampled field by separable cubic splines.

    Points outside the grid box evaluate to zero.
    """

    def __init__(self, field: SymTensorField):
        self.field = field
        self.grid = field.grid
        self._filtered = [
            ndimage.spline_filter(comp, order=3, mode="constant")
            for comp in field.components
        ]

    def _coords(self, points: np.ndarray) -> np.ndarray:
        rel = (points - np.asarray(self.grid.origin)) / np.asarray(self.grid.spacing)
        return rel.reshape(-1, self.grid.dim).T

    def components_at(self, points: np.ndarray) -> np.ndarray:
        coords = self._coords(np.asarray(points, dtype=np.float64))
        out = np.stack([
            ndimage.map_coordinates(comp, coords, order=3, mode="constant",
                                    cval=0.0, prefilter=False)
            for comp in self._filtered
        ])
        return out.reshape((len(self._filtered),) + np.asarray(points).shape[:-1])

    def __call__(self, points: np.ndarray, xi: np.ndarray) -> np.ndarray:
        comps = self.components_at(points)
        indices, mult, _ = index_table(self.field.dim, self.field.order)
        if self.field.order == 0:
            return comps[0]
        out = np.zeros(comps.shape[1:])
        for j, idx in enumerate(indices):
            out += float(mult[j]) * prod(xi[i] for i in idx) * comps[j]
        return out

    def contains(self, points: np.ndarray) -> np.ndarray:
        lo = np.asarray(self.grid.origin)
        hi = lo + np.asarray(self.grid.lengths)
        p = np.asarray(points)
        return np.all((p >= lo) & (p < hi), axis=-1)


def make_evaluator(field, m: int | None = None):
    """Normalize a phantom spec / sampled field / callable to (points, xi) form."""
    if isinstance(field, PhantomSpec):
        return (lambda pts, xi: directional_profile(field, pts, xi)), field.order
    if isinstance(field, SymTensorField):
        return GridFieldEvaluator(field), field.order
    if callable(field):
        if m is None:
            raise ValueError("callable field requires explicit order m")
        return field, m
    raise TypeError(f"cannot evaluate field of type {type(field)!r}")


def _ray_block(field, evaluator, sources: np.ndarray, t: np.ndarray,
               xi: np.ndarray) -> np.ndarray:
    """(S, Q) directional values along rays; fast path for analytic phantoms."""
    if isinstance(field, PhantomSpec):
        from .phantoms import ray_values
        return ray_values(field, sources, t, xi)
    pts = sources[:, None, :] + t[None, :, None] * xi[None, None, :]
    return np.asarray(evaluator(pts, xi))


def beam_integral(field_eval, x, xi, w: float, quad: QuadratureSpec) -> float:
    """Ray integral int_0^inf t^w <f(x + t xi), xi^m> dt from a single source.

    The head rule on [0,1] absorbs the t^w factor exactly; dyadic tail
    panels on [1, T] are bisected recursively until the Gauss-Legendre
    estimate is converged to quad.tail_tol (relative to the running total).
    """
    if w <= -1.0:
        raise ValueError(f"weight exponent w={w} must be > -1")
    xi = np.asarray(xi, dtype=np.float64)
    norm = float(np.linalg.norm(xi))
    if abs(norm - 1.0) > 1e-12:
        warnings.warn("non-unit direction normalized", RuntimeWarning, stacklevel=2)
        xi = xi / norm
    x = np.asarray(x, dtype=np.float64)
    if callable(field_eval):
        evaluator = field_eval
        line = lambda t: np.asarray(
            evaluator(x[None, :] + t[:, None] * xi[None, :], xi),
            dtype=np.float64).ravel()
    else:
        evaluator, _ = make_evaluator(field_eval)
        line = lambda t: _ray_block(field_eval, evaluator, x[None, :], t, xi)[0]

    xl, wl = roots_legendre(quad.tail_nodes)
    xl2, wl2 = roots_legendre(2 * quad.tail_nodes)

    def panel(a: float, b: float, depth: int, scale: float) -> float:
        mid, half = (a + b) / 2.0, (b - a) / 2.0
        t1 = half * xl + mid
        t2 = half * xl2 + mid
        coarse = float((half * wl * t1**w) @ line(t1))
        fine = float((half * wl2 * t2**w) @ line(t2))
        if abs(fine - coarse) <= quad.tail_tol * max(scale, abs(fine)) or depth >= 24:
            return fine
        return (panel(a, mid, depth + 1, scale)
                + panel(mid, b, depth + 1, scale))

    if w < 0:
        # singular weight: fixed Gauss-Jacobi head, exact for t^w x polynomial
        xj, wj = roots_jacobi(quad.head_nodes, 0.0, w)
        th = (xj + 1.0) / 2.0
        total = float(wj * 0.5 ** (w + 1.0) @ line(th))
    else:
        total = panel(0.0, 1.0, 0, 1.0)
    scale = max(abs(total), 1.0)
    lo = 1.0
    while lo < quad.truncation:
        hi = min(2.0 * lo, quad.truncation)
        total += panel(lo, hi, 0, scale)
        lo = hi
    return total


def forward_grid(field, sources, directions, w: float,
                 quad: QuadratureSpec | None = None, m: int | None = None,
                 weight_kind: str = "k", chunk: int = 4096) -> BeamSamples:
    """Beam integrals at every (source, direction) pair.

    sources may be a SpectralGrid, a SourceLattice, or an (S, n) array;
    directions is a (D, n) array of unit vectors.
    """
    if quad is None:
        quad = QuadratureSpec()
    evaluator, order = make_evaluator(field, m)
    lattice = None
    if isinstance(sources, SpectralGrid):
        lattice = SourceLattice.from_grid(sources)
        src = lattice.nodes()
    elif isinstance(sources, SourceLattice):
        lattice = sources
        src = lattice.nodes()
    else:
        src = np.asarray(sources, dtype=np.float64)
    directions = np.asarray(directions, dtype=np.float64)
    if directions.size == 0:
        raise ValueError("direction set is empty")
    t, wt = quad.nodes(w)
    values = np.empty((len(src), len(directions)))
    for d, xi in enumerate(directions):
        for c0 in range(0, len(src), chunk):
            block = src[c0:c0 + chunk]
            values[c0:c0 + chunk, d] = _ray_block(field, evaluator, block, t, xi) @ wt
    quality = {}
    if isinstance(evaluator, GridFieldEvaluator):
        inside = evaluator.contains(src)
        if not inside.all():
            scale = float(np.max(np.abs(evaluator.field.components)))
            outside_vals = np.max(np.abs(values[~inside])) if (~inside).any() else 0.0
            quality["outside_sources"] = int(np.sum(~inside))
            quality["outside_max_value"] = float(outside_vals)
            quality["significant_outside"] = bool(outside_vals > 1e-12 * max(scale, 1.0))
    return BeamSamples(src, directions, values, float(w), order,
                       weight_kind=weight_kind, lattice=lattice, quality=quality)


def _fd4(u: np.ndarray, axis: int, h: float) -> np.ndarray:
    """4th-order central first derivative; output trimmed by 2 on `axis`."""
    sl = lambda a, b: tuple(
        slice(a, b if b != 0 else None) if ax == axis else slice(None)
        for ax in range(u.ndim)
    )
    return (-u[sl(4, 0)] + 8.0 * u[sl(3, -1)] - 8.0 * u[sl(1, -3)] + u[sl(0, -4)]) / (12.0 * h)


def _crop(u: np.ndarray, axis: int, cells: int) -> np.ndarray:
    sl = tuple(
        slice(cells, -cells if cells else None) if ax == axis else slice(None)
        for ax in range(u.ndim)
    )
    return u[sl]


def directional_derivative_grid(values: np.ndarray, lattice: SourceLattice,
                                xi: np.ndarray) -> tuple[np.ndarray, SourceLattice]:
    """sum_a xi_a d/dx_a of lattice data by 4th-order stencils; trims 2 cells."""
    grid_vals = values.reshape(lattice.shape)
    out = np.zeros(tuple(n - 4 for n in lattice.shape))
    for a in range(lattice.dim):
        if xi[a] == 0.0:
            continue
        d = _fd4(grid_vals, a, lattice.spacing[a])
        for b in range(lattice.dim):
            if b != a:
                d = _crop(d, b, 2)
        out += xi[a] * d
    return out, lattice.trim(2)


def momentum_reduce(samples: BeamSamples, l: int | None = None) -> BeamSamples:
    """One weight-reduction step: D^{l-1,m} = -(1/l) sum_a xi^a d_a D^{l,m}.

    Requires lattice sources; the output lattice loses a 2-cell ring.
    """
    if samples.lattice is None:
        raise ValueError("momentum reduction needs sources on a regular lattice")
    if l is None:
        l = int(round(samples.weight))
    if l < 1:
        raise ValueError("momentum reduction requires weight l >= 1")
    new_lat = samples.lattice.trim(2)
    out = np.empty((int(np.prod(new_lat.shape)), len(samples.directions)))
    for d, xi in enumerate(samples.directions):
        dv, _ = directional_derivative_grid(samples.values[:, d], samples.lattice, xi)
        out[:, d] = -dv.ravel() / float(l)
    return BeamSamples(new_lat.nodes(), samples.directions, out,
                       samples.weight - 1.0, samples.order,
                       weight_kind=samples.weight_kind, lattice=new_lat,
                       quality=dict(samples.quality))
