"""Analytic test fields: Gaussian tensors, polynomial-Gaussian tensors, and
compactly supported gradient (potential) fields.

Gaussian and polynomial-Gaussian phantoms factor as constant coefficient
tensor times scalar profile; their Fourier transforms are closed-form.  The
potential bump is the gradient of A*exp(-1/(1-|x-c|^2/r^2)) and exists for
order 1 only.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field as dc_field
from math import prod

import numpy as np

from .fields import SymTensorField
from .spectral import SpectralGrid
from .symtensor import SymTensor, index_table

__all__ = [
    "PhantomSpec",
    "gaussian_phantom",
    "polynomial_gaussian_phantom",
    "potential_bump_phantom",
    "eval_field",
    "eval_fourier",
    "sample_on_grid",
    "directional_profile",
]

_KINDS = ("gaussian-tensor", "polynomial-gaussian-tensor", "potential-bump")


@dataclass(frozen=True)
class PhantomSpec:
    """Declarative description of an analytic test field.

    coeffs holds one scalar per nondecreasing multi-index (the constant
    coefficient tensor); poly maps exponent tuples to coefficients of the
    polynomial factor in x - center.  amplitude and radius configure the
    potential bump.
    """

    kind: str
    order: int
    dim: int
    center: tuple[float, ...]
    width: float = 1.0
    coeffs: tuple[float, ...] = ()
    poly: tuple[tuple[tuple[int, ...], float], ...] = ()
    radius: float = 1.0
    amplitude: float = 1.0

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown phantom kind {self.kind!r}")
        if len(self.center) != self.dim:
            raise ValueError("center length must equal dim")
        if self.kind == "potential-bump":
            if self.order != 1:
                raise ValueError("potential-bump is a vector (order-1) phantom")
            if self.radius <= 0:
                raise ValueError("radius must be > 0")
        else:
            if self.width <= 0:
                raise ValueError("width must be > 0")
            n_comp = len(index_table(self.dim, self.order)[0])
            if len(self.coeffs) != n_comp:
                raise ValueError(f"need {n_comp} stored coefficients")
            if self.kind == "polynomial-gaussian-tensor" and not self.poly:
                raise ValueError("polynomial-gaussian needs poly terms")

    def to_json(self) -> str:
        doc = {
            "kind": self.kind,
            "order": self.order,
            "dim": self.dim,
            "center": list(self.center),
            "width": self.width,
            "coeffs": list(self.coeffs),
            "poly": [[list(a), c] for a, c in self.poly],
            "radius": self.radius,
            "amplitude": self.amplitude,
        }
        return json.dumps(doc, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "PhantomSpec":
        doc = json.loads(text)
        return cls(
            kind=doc["kind"],
            order=int(doc["order"]),
            dim=int(doc["dim"]),
            center=tuple(float(c) for c in doc["center"]),
            width=float(doc.get("width", 1.0)),
            coeffs=tuple(float(c) for c in doc.get("coeffs", ())),
            poly=tuple((tuple(int(e) for e in a), float(c)) for a, c in doc.get("poly", ())),
            radius=float(doc.get("radius", 1.0)),
            amplitude=float(doc.get("amplitude", 1.0)),
        )


def gaussian_phantom(order: int, dim: int, coeffs, center=None, width: float = 1.0) -> PhantomSpec:
    center = tuple(center) if center is not None else (0.0,) * dim
    return PhantomSpec("gaussian-tensor", order, dim, center, width, tuple(coeffs))


def polynomial_gaussian_phantom(order: int, dim: int, coeffs, poly,
                                center=None, width: float = 1.0) -> PhantomSpec:
    center = tuple(center) if center is not None else (0.0,) * dim
    poly = tuple((tuple(a), float(c)) for a, c in poly)
    return PhantomSpec("polynomial-gaussian-tensor", order, dim, center, width,
                       tuple(coeffs), poly)


def potential_bump_phantom(dim: int, center=None, radius: float = 1.0,
                           amplitude: float = 1.0) -> PhantomSpec:
    center = tuple(center) if center is not None else (0.0,) * dim
    return PhantomSpec("potential-bump", 1, dim, center, radius=radius,
                       amplitude=amplitude)


def _poly_eval(poly, u: np.ndarray) -> np.ndarray:
    """Evaluate sum of c * u^alpha at points u of shape (..., dim)."""
    out = np.zeros(u.shape[:-1])
    for alpha, c in poly:
        term = np.full(u.shape[:-1], c)
        for a, e in enumerate(alpha):
            if e:
                term = term * u[..., a] ** e
        out += term
    return out


def scalar_profile(spec: PhantomSpec, points: np.ndarray) -> np.ndarray:
    """Scalar factor phi(x) for coefficient-times-profile phantoms."""
    if spec.kind == "potential-bump":
        raise ValueError("potential-bump has no scalar profile")
    u = np.asarray(points, dtype=np.float64) - np.asarray(spec.center)
    g = np.exp(-spec.width * np.sum(u * u, axis=-1))
    if spec.kind == "polynomial-gaussian-tensor":
        g = g * _poly_eval(spec.poly, u)
    return g


def bump_potential(spec: PhantomSpec, points: np.ndarray) -> np.ndarray:
    """v(x) = A exp(-1/(1 - |x-c|^2/r^2)) inside the ball, 0 outside."""
    u = np.asarray(points, dtype=np.float64) - np.asarray(spec.center)
    rho2 = np.sum(u * u, axis=-1) / spec.radius**2
    out = np.zeros(rho2.shape)
    inside = rho2 < 1.0
    w = 1.0 - rho2[inside]
    out[inside] = spec.amplitude * np.exp(-1.0 / w)
    return out


def _bump_gradient(spec: PhantomSpec, points: np.ndarray) -> np.ndarray:
    """grad v at points; shape (dim, ...)."""
    points = np.asarray(points, dtype=np.float64)
    squeeze = points.ndim == 1
    if squeeze:
        points = points[None, :]
    u = points - np.asarray(spec.center)
    rho2 = np.sum(u * u, axis=-1) / spec.radius**2
    out = np.zeros((spec.dim,) + rho2.shape)
    inside = rho2 < 1.0
    w = 1.0 - rho2[inside]
    common = -2.0 * spec.amplitude * np.exp(-1.0 / w) / (spec.radius**2 * w * w)
    for a in range(spec.dim):
        out[a][inside] = common * u[..., a][inside]
    return out[:, 0] if squeeze else out


def eval_components(spec: PhantomSpec, points: np.ndarray) -> np.ndarray:
    """Stored components at points; shape (n_stored, ...)."""
    points = np.asarray(points, dtype=np.float64)
    if spec.kind == "potential-bump":
        return _bump_gradient(spec, points)
    g = scalar_profile(spec, points)
    coeffs = np.asarray(spec.coeffs)
    return coeffs.reshape((-1,) + (1,) * g.ndim) * g[None, ...]


def eval_field(spec: PhantomSpec, x) -> SymTensor:
    """Exact field value at a single point."""
    comp = eval_components(spec, np.asarray(x, dtype=np.float64))
    return SymTensor(spec.order, spec.dim, comp)


def directional_profile(spec: PhantomSpec, points: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """<f(x), xi^(sym m)> at points; the ray-transform integrand factor."""
    points = np.asarray(points, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    if spec.kind == "potential-bump":
        grad = _bump_gradient(spec, points)
        return np.tensordot(xi, grad, axes=(0, 0))
    indices, mult, _ = index_table(spec.dim, spec.order)
    factor = sum(
        float(m) * c * prod(xi[i] for i in idx)
        for idx, m, c in zip(indices, mult, spec.coeffs)
    ) if spec.order > 0 else float(spec.coeffs[0])
    return factor * scalar_profile(spec, points)


def ray_values(spec: PhantomSpec, sources: np.ndarray, t: np.ndarray,
               xi: np.ndarray) -> np.ndarray:
    """<f(sources + t xi), xi^(sym m)> on the (S, Q) ray lattice.

    Avoids materializing point coordinates for the radial Gaussian factor:
    |u0 + t xi|^2 = |u0|^2 + 2 t <u0, xi> + t^2 with u0 = source - center.
    """
    sources = np.asarray(sources, dtype=np.float64)
    t = np.asarray(t, dtype=np.float64)
    xi = np.asarray(xi, dtype=np.float64)
    if spec.kind == "potential-bump":
        pts = sources[:, None, :] + t[None, :, None] * xi[None, None, :]
        return directional_profile(spec, pts, xi)
    u0 = sources - np.asarray(spec.center)
    # |u0 + t xi|^2 built in place: outer(2<u0,xi>, t) + |u0|^2 + t^2
    g = np.multiply.outer(2.0 * (u0 @ xi), t)
    g += np.sum(u0 * u0, axis=1)[:, None]
    g += (t * t)[None, :]
    g *= -spec.width
    np.exp(g, out=g)
    if spec.kind == "polynomial-gaussian-tensor":
        if len(spec.poly) == 1:
            alpha, c = spec.poly[0]
            g *= c
            for a, e in enumerate(alpha):
                for _ in range(e):
                    g *= u0[:, a][:, None] + t[None, :] * xi[a]
        else:
            poly_val = np.zeros_like(g)
            for alpha, c in spec.poly:
                term = np.full_like(g, c)
                for a, e in enumerate(alpha):
                    for _ in range(e):
                        term *= u0[:, a][:, None] + t[None, :] * xi[a]
                poly_val += term
            g *= poly_val
    indices, mult, _ = index_table(spec.dim, spec.order)
    factor = sum(
        float(mu) * c * prod(xi[i] for i in idx)
        for idx, mu, c in zip(indices, mult, spec.coeffs)
    ) if spec.order > 0 else float(spec.coeffs[0])
    return factor * g


def _gaussian_hat(spec: PhantomSpec, y: np.ndarray) -> np.ndarray:
    a, n = spec.width, spec.dim
    return (np.pi / a) ** (n / 2.0) * np.exp(-np.sum(y * y, axis=-1) / (4.0 * a))


def _poly_diff(poly: dict, axis: int) -> dict:
    out: dict = {}
    for alpha, c in poly.items():
        if alpha[axis] == 0:
            continue
        beta = list(alpha)
        beta[axis] -= 1
        beta = tuple(beta)
        out[beta] = out.get(beta, 0.0) + c * alpha[axis]
    return out


def _hermite_coeffs(spec: PhantomSpec) -> dict:
    """Polynomial Q with F[P(u) g(u)](y) = Q(y) exp(-|y|^2/(4a)) * (pi/a)^{n/2}.

    Built by repeated application of F[u_a h] = i d/dy_a F[h] to the Gaussian:
    each derivative acts on the current polynomial and pulls down -y_a/(2a).
    """
    a, n = spec.width, spec.dim
    total: dict = {}
    for alpha, c in spec.poly:
        q = {(0,) * n: complex(c)}
        for axis in range(n):
            for _ in range(alpha[axis]):
                new: dict = {}
                for beta, qc in _poly_diff(q, axis).items():
                    new[beta] = new.get(beta, 0.0) + 1j * qc
                for beta, qc in q.items():
                    gb = list(beta)
                    gb[axis] += 1
                    gb = tuple(gb)
                    new[gb] = new.get(gb, 0.0) + 1j * qc * (-1.0 / (2.0 * a))
                q = new
        for beta, qc in q.items():
            total[beta] = total.get(beta, 0.0) + qc
    return total


def eval_fourier(spec: PhantomSpec, y) -> np.ndarray:
    """Analytic transform (components, complex) under int exp(-i<x,y>) f dx."""
    if spec.kind == "potential-bump":
        raise ValueError("potential-bump has no closed-form transform")
    y = np.asarray(y, dtype=np.float64)
    ghat = _gaussian_hat(spec, y)
    if spec.kind == "polynomial-gaussian-tensor":
        q = _hermite_coeffs(spec)
        poly_y = np.zeros(y.shape[:-1], dtype=np.complex128)
        for beta, qc in q.items():
            term = np.full(y.shape[:-1], qc, dtype=np.complex128)
            for a, e in enumerate(beta):
                if e:
                    term = term * y[..., a] ** e
            poly_y = poly_y + term
        ghat = ghat * poly_y
    shift = np.exp(-1j * np.tensordot(y, np.asarray(spec.center), axes=(-1, 0)))
    coeffs = np.asarray(spec.coeffs)
    return coeffs.reshape((-1,) + (1,) * np.ndim(ghat)) * (ghat * shift)[None, ...]


def sample_on_grid(spec: PhantomSpec, grid: SpectralGrid) -> SymTensorField:
    """Evaluate the phantom at every grid node."""
    if grid.dim != spec.dim:
        raise ValueError("grid/phantom dim mismatch")
    pts = np.stack(grid.meshgrid(), axis=-1)
    return SymTensorField(spec.order, grid, eval_components(spec, pts))
