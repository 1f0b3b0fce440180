"""Spherical averages of the fractional divergent beam transform.

Three routes produce the same m+1 average fields:
  * sphere quadrature of beam samples (production path),
  * direct spatial convolution with the singular kernel (small-grid oracle),
  * Fourier multipliers composed from Riesz transforms and |zeta|^(-2s)
    (m = 1 and m = 2 only).
"""
from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from math import prod

import numpy as np
from scipy.signal import convolve2d
from scipy.special import gamma as gamma_fn

from . import spectral
from .fields import SymTensorField
from .raytransform import BeamSamples
from .spectral import SpectralGrid
from .symtensor import index_table

__all__ = [
    "AvgConstant",
    "AverageField",
    "constant_c",
    "riesz_kernel_constant",
    "sphere_area",
    "average_by_quadrature",
    "average_field_by_quadrature",
    "average_by_convolution",
    "average_spectral_vector",
    "average_spectral_2tensor",
]


def sphere_area(n: int) -> float:
    """Surface measure of the unit sphere in R^n."""
    return float(2.0 * np.pi ** (n / 2.0) / gamma_fn(n / 2.0))


def _check_s(s: float) -> None:
    if not (0.0 < s < 1.0) or s == 0.5:
        raise ValueError(f"s={s} must lie in (0,1) excluding 1/2")


def constant_c(n: int, s: float, m: int, k: int) -> float:
    """Normalizing constant of the rank-k average of the order-m transform.

    -Gamma((n+m+k-2s)/2) / (2^(2s-floor((m+k)/2)) pi^(n/2)
      Gamma(s + ((m+k) mod 2)/2)).
    """
    if not 0 <= k <= m:
        raise ValueError("need 0 <= k <= m")
    _check_s(s)
    num_arg = (n + m + k - 2.0 * s) / 2.0
    den_arg = s + ((m + k) % 2) / 2.0
    for arg in (num_arg, den_arg):
        if arg <= 0 and abs(arg - round(arg)) < 1e-12:
            raise ValueError(f"gamma pole at argument {arg}")
    return float(
        -gamma_fn(num_arg)
        / (2.0 ** (2.0 * s - (m + k) // 2) * np.pi ** (n / 2.0) * gamma_fn(den_arg))
    )


def riesz_kernel_constant(n: int, gamma_exp: float) -> float:
    """h_n(gamma) = Gamma((n-gamma)/2) / (2^gamma pi^(n/2) Gamma(gamma/2))."""
    return float(
        gamma_fn((n - gamma_exp) / 2.0)
        / (2.0**gamma_exp * np.pi ** (n / 2.0) * gamma_fn(gamma_exp / 2.0))
    )


@dataclass(frozen=True)
class AvgConstant:
    n: int
    s: float
    m: int
    k: int

    @property
    def value(self) -> float:
        return constant_c(self.n, self.s, self.m, self.k)


@dataclass
class AverageField:
    """The m+1 averages on a grid: rank k holds a (n_stored_k, *sizes) array.

    Free indices of each rank are symmetric; storage follows
    symtensor.index_table(n, k).
    """

    order: int
    s: float
    grid: SpectralGrid
    ranks: dict = dc_field(default_factory=dict)
    provenance: str = "quadrature"

    def entry(self, *idx) -> np.ndarray:
        k = len(idx)
        _, _, position = index_table(self.grid.dim, k)
        return self.ranks[k][position[tuple(sorted(idx))]]

    def rank_array(self, k: int) -> np.ndarray:
        return self.ranks[k]

    def __add__(self, other: "AverageField") -> "AverageField":
        ranks = {k: v + other.ranks[k] for k, v in self.ranks.items()}
        return AverageField(self.order, self.s, self.grid, ranks, self.provenance)

    def __mul__(self, scalar: float) -> "AverageField":
        ranks = {k: v * float(scalar) for k, v in self.ranks.items()}
        return AverageField(self.order, self.s, self.grid, ranks, self.provenance)

    __rmul__ = __mul__


def _direction_weights(directions: np.ndarray, m: int) -> float:
    n = directions.shape[1]
    count = len(directions)
    if n == 2 and count < 2 * m + 4:
        raise ValueError(f"need at least {2 * m + 4} directions for order {m}")
    if n == 3 and count < 4 * (m + 1):
        raise ValueError("direction set too small for order m on S^2")
    return sphere_area(n) / count


def average_by_quadrature(beams: BeamSamples, k: int, indices=()) -> np.ndarray:
    """One average entry: c * sum_dirs w_xi xi^{i1}..xi^{ik} chi(x, xi).

    Directions must form an equal-weight sphere rule (equispaced angles on
    S^1, Fibonacci nodes on S^2).  Returns a flat array over the sources.
    """
    if beams.weight_kind != "s":
        raise ValueError("averages are defined for fractional-weight samples")
    if len(indices) != k:
        raise ValueError("rank k needs k indices")
    s = (beams.weight + 1.0) / 2.0
    w = _direction_weights(beams.directions, beams.order)
    mono = np.ones(len(beams.directions))
    for i in indices:
        mono = mono * beams.directions[:, i]
    c = constant_c(beams.dim, s, beams.order, k)
    return c * w * (beams.values @ mono)


def average_field_by_quadrature(beams: BeamSamples, grid: SpectralGrid) -> AverageField:
    """All ranks 0..m of the averages from grid-sampled beams."""
    if beams.lattice is None or beams.lattice.shape != grid.sizes:
        raise ValueError("beam sources must cover the given grid")
    m = beams.order
    s = (beams.weight + 1.0) / 2.0
    ranks = {}
    for k in range(m + 1):
        indices_k, _, _ = index_table(grid.dim, k)
        ranks[k] = np.stack([
            average_by_quadrature(beams, k, idx).reshape(grid.sizes)
            for idx in indices_k
        ])
    return AverageField(m, s, grid, ranks, provenance="quadrature")


def _sphere_monomial(beta: tuple[int, ...]) -> float:
    """int_{S^{n-1}} theta_1^{b1} ... theta_n^{bn} dS, zero for odd powers."""
    if any(b % 2 for b in beta):
        return 0.0
    n = len(beta)
    num = prod(float(gamma_fn((b + 1) / 2.0)) for b in beta)
    return float(2.0 * num / gamma_fn((sum(beta) + n) / 2.0))


def singular_displacement_kernel(spacing: tuple[float, float],
                                 shape: tuple[int, int], power: float,
                                 beta: tuple[int, int],
                                 refine_radius: int = 4,
                                 refine_factor: int = 16,
                                 with_moments: bool = False):
    """Cell-averaged |d|^power d1^b1 d2^b2 on the displacement lattice.

    Far cells use the midpoint value; cells within refine_radius of the
    origin are subsampled refine_factor^2 times; the origin cell integrates
    the kernel analytically over the equal-area disc (requires
    power + b1 + b2 + 2 > 0 for local integrability).

    with_moments additionally returns the two first-moment kernels
    mean_cell[K(d) (d - d_cell)_a], supported on the refined neighborhood;
    convolved against the field gradient they restore the linear Taylor term
    that dominates near the singularity when the kernel parity is odd.
    """
    hx, hy = spacing
    N1, N2 = shape
    d1 = hx * np.arange(-(N1 - 1), N1)
    d2 = hy * np.arange(-(N2 - 1), N2)
    D1, D2 = np.meshgrid(d1, d2, indexing="ij")
    r = np.hypot(D1, D2)
    center = (N1 - 1, N2 - 1)
    r[center] = 1.0
    kern = r**power * D1 ** beta[0] * D2 ** beta[1]
    moments = [np.zeros_like(kern), np.zeros_like(kern)] if with_moments else None
    # subsampled near-singularity ring
    off = (np.arange(refine_factor) + 0.5) / refine_factor - 0.5
    O1, O2 = np.meshgrid(off * hx, off * hy, indexing="ij")
    for i in range(-refine_radius, refine_radius + 1):
        for j in range(-refine_radius, refine_radius + 1):
            if i == 0 and j == 0:
                continue
            if i * i + j * j > refine_radius * refine_radius:
                continue
            p1, p2 = i * hx + O1, j * hy + O2
            vals = np.hypot(p1, p2) ** power * p1 ** beta[0] * p2 ** beta[1]
            kern[center[0] + i, center[1] + j] = np.mean(vals)
            if with_moments:
                moments[0][center[0] + i, center[1] + j] = np.mean(vals * O1)
                moments[1][center[0] + i, center[1] + j] = np.mean(vals * O2)
    # analytic equal-area-disc integrals of the origin cell
    total = power + beta[0] + beta[1] + 2.0
    if total <= 0:
        raise ValueError("kernel is not locally integrable")
    rho = (hx * hy / np.pi) ** 0.5
    cell = hx * hy

    def disc_moment(extra: tuple[int, int]) -> float:
        b = (beta[0] + extra[0], beta[1] + extra[1])
        deg = total + extra[0] + extra[1]
        return (rho**deg / deg) * _sphere_monomial(b) / cell

    kern[center] = disc_moment((0, 0))
    if with_moments:
        moments[0][center] = disc_moment((1, 0))
        moments[1][center] = disc_moment((0, 1))
        return kern, moments
    return kern


def average_by_convolution(field: SymTensorField, s: float, k: int,
                           indices=(), max_size: int = 96) -> np.ndarray:
    """Oracle route: direct spatial convolution with the singular kernel.

    out = c (-1)^(m+k) (|x|^(2s-n-m-k) x^{i1}..x^{ik} x^{j1}..x^{jm})
          * f_{j1..jm}, summed over all j tuples.  The singular cell uses
    analytic polar integration over the equal-area disc.  Direct O(N^4)
    sums only; grids beyond max_size per axis are rejected.
    """
    _check_s(s)
    grid = field.grid
    n, m = grid.dim, field.order
    if n != 2:
        raise ValueError("the convolution oracle is implemented for n=2")
    if any(sz > max_size for sz in grid.sizes):
        raise ValueError(f"grid {grid.sizes} too large for the O(N^4) oracle")
    if len(indices) != k:
        raise ValueError("rank k needs k indices")
    power = 2.0 * s - n - m - k
    sign = (-1.0) ** (m + k)
    c = constant_c(n, s, m, k)
    j_indices, j_mult, _ = index_table(n, m)
    out = np.zeros(grid.sizes)
    for jdx, mu, comp in zip(j_indices, j_mult, field.components):
        beta = [0] * n
        for i in tuple(indices) + jdx:
            beta[i] += 1
        kernel, mom = singular_displacement_kernel(
            grid.spacing, grid.sizes, power, tuple(beta), with_moments=True)
        term = convolve2d(kernel, comp, mode="valid")
        for a in range(n):
            term -= convolve2d(mom[a], _fd4_roll(comp, a, grid.spacing[a]),
                               mode="valid")
        out += float(mu) * term
    return c * sign * out * grid.cell_volume


def _fd4_roll(u: np.ndarray, axis: int, h: float) -> np.ndarray:
    """Periodic 4th-order central derivative (fields decay at the edge)."""
    return (-np.roll(u, -2, axis) + 8.0 * np.roll(u, -1, axis)
            - 8.0 * np.roll(u, 1, axis) + np.roll(u, 2, axis)) / (12.0 * h)


def average_spectral_vector(field: SymTensorField, s: float,
                            check_decay: bool = True) -> AverageField:
    """Multiplier route for m=1: the rank-0 and rank-1 averages.

    hat(A0) = |y|^(-2s) hat(R_j f_j);
    hat(A1_i) = -|y|^(-2s) hat(f_i) - 2s hat(R_i A0).
    """
    _check_s(s)
    if field.order != 1:
        raise ValueError("vector route needs an order-1 field")
    grid = field.grid
    if check_decay:
        for comp in field.components:
            spectral.check_periodizable(grid, comp)
    rf = sum(
        spectral.riesz_transform(grid, field.components[j], j)
        for j in range(grid.dim)
    )
    a0 = spectral.frac_laplacian(grid, rf, s, sign=-1)
    a1 = np.stack([
        -spectral.frac_laplacian(grid, field.components[i], s, sign=-1)
        - 2.0 * s * spectral.riesz_transform(grid, a0, i)
        for i in range(grid.dim)
    ])
    return AverageField(1, s, grid, {0: a0[None], 1: a1}, provenance="spectral")


def average_spectral_2tensor(field: SymTensorField, s: float,
                             check_decay: bool = True) -> AverageField:
    """Multiplier route for m=2: the rank-0, 1, 2 averages."""
    _check_s(s)
    if field.order != 2:
        raise ValueError("2-tensor route needs an order-2 field")
    grid = field.grid
    n = grid.dim
    if check_decay:
        for comp in field.components:
            spectral.check_periodizable(grid, comp)
    R = lambda u, i: spectral.riesz_transform(grid, u, i)
    I2s = lambda u: spectral.frac_laplacian(grid, u, s, sign=-1)
    comp = field.component
    trace = sum(comp(j, j) for j in range(n))
    rr = sum(R(R(comp(j1, j2), j1), j2) for j1 in range(n) for j2 in range(n))
    a0 = -I2s(trace + 2.0 * s * rr)
    a1 = np.stack([
        -R(a0, i1)
        + I2s(2.0 * sum(R(comp(j, i1), j) for j in range(n)) + R(rr, i1))
        for i1 in range(n)
    ])
    indices2, _, _ = index_table(n, 2)
    a2 = np.stack([
        -2.0 * I2s(comp(i1, i2))
        + (a0 if i1 == i2 else 0.0)
        - 2.0 * s * R(R(a0, i1), i2)
        - 2.0 * s * (R(a1[i2], i1) + R(a1[i1], i2))
        for (i1, i2) in indices2
    ])
    return AverageField(2, s, grid, {0: a0[None], 1: a1, 2: a2}, provenance="spectral")
