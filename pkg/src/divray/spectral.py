"""Periodic-grid FFT engine and Fourier-multiplier operators.

Convention: the continuum transform is F(y) = int exp(-i<x,y>) f(x) dx with
inverse (2pi)^-n int exp(+i<x,y>) F(y) dy.  On the grid the multiplier
operators act on raw FFT coefficients (the dx^n scale factors cancel);
`continuum_fft` supplies the scaled, phase-corrected transform for
comparisons against analytic formulas.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft

__all__ = [
    "SpectralGrid",
    "MultiplierOp",
    "riesz_transform",
    "frac_laplacian",
    "riesz_potential",
    "bessel_apply",
    "sobolev_norm",
    "sobolev_norm_field",
    "gradient",
    "divergence",
    "check_periodizable",
]


@dataclass(frozen=True)
class SpectralGrid:
    """Uniform periodic grid on a rectangular box with its frequency lattice.

    sizes must be powers of two.  Node j on axis a sits at
    origin[a] + j * lengths[a] / sizes[a]; the box upper edge is excluded
    (periodic wrap).  zero_mode_policy governs negative-order multipliers at
    the zero frequency: "zero" maps the mean to 0, "error" rejects input
    with a nonzero mean.
    """

    sizes: tuple[int, ...]
    lengths: tuple[float, ...]
    origin: tuple[float, ...]
    zero_mode_policy: str = "zero"

    def __post_init__(self):
        if len(self.sizes) != len(self.lengths) or len(self.sizes) != len(self.origin):
            raise ValueError("sizes, lengths, origin must have equal length")
        if self.dim < 2:
            raise ValueError("dim must be >= 2")
        for sz in self.sizes:
            if sz < 2 or (sz & (sz - 1)) != 0:
                raise ValueError(f"grid size {sz} is not a power of two")
        if self.zero_mode_policy not in ("zero", "error"):
            raise ValueError("zero_mode_policy must be 'zero' or 'error'")

    @classmethod
    def centered(cls, dim: int = 2, size: int = 256, length: float = 16.0,
                 zero_mode_policy: str = "zero") -> "SpectralGrid":
        return cls(
            sizes=(size,) * dim,
            lengths=(float(length),) * dim,
            origin=(-float(length) / 2,) * dim,
            zero_mode_policy=zero_mode_policy,
        )

    @property
    def dim(self) -> int:
        return len(self.sizes)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / N for L, N in zip(self.lengths, self.sizes))

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))

    def axes(self) -> list[np.ndarray]:
        return [
            o + (L / N) * np.arange(N)
            for o, L, N in zip(self.origin, self.lengths, self.sizes)
        ]

    def meshgrid(self) -> list[np.ndarray]:
        return list(np.meshgrid(*self.axes(), indexing="ij"))

    def nodes(self) -> np.ndarray:
        """All grid nodes as a (prod(sizes), dim) array, row-major order."""
        mesh = self.meshgrid()
        return np.stack([m.ravel() for m in mesh], axis=1)

    def freq_axes(self) -> list[np.ndarray]:
        """Angular frequencies 2*pi*k/L per axis, FFT ordering."""
        return [
            2.0 * np.pi * np.fft.fftfreq(N, d=L / N)
            for N, L in zip(self.sizes, self.lengths)
        ]

    def freq_meshgrid(self) -> list[np.ndarray]:
        return _freq_mesh(self)

    def abs_freq(self) -> np.ndarray:
        """|zeta| on the lattice; the zero mode holds 0."""
        return _abs_freq(self)

    def half_nyquist(self) -> float:
        return min(np.pi / h for h in self.spacing) / 2.0

    def fft(self, u: np.ndarray) -> np.ndarray:
        return scipy.fft.fftn(u)

    def ifft(self, uh: np.ndarray) -> np.ndarray:
        return scipy.fft.ifftn(uh)

    def continuum_fft(self, u: np.ndarray) -> np.ndarray:
        """Grid approximation of int exp(-i<x,y>) u(x) dx on the lattice."""
        uh = scipy.fft.fftn(u) * self.cell_volume
        for a, (za, oa) in enumerate(zip(self.freq_axes(), self.origin)):
            shape = [1] * self.dim
            shape[a] = -1
            uh = uh * np.exp(-1j * za * oa).reshape(shape)
        return uh

    def continuum_ifft(self, uh: np.ndarray) -> np.ndarray:
        for a, (za, oa) in enumerate(zip(self.freq_axes(), self.origin)):
            shape = [1] * self.dim
            shape[a] = -1
            uh = uh * np.exp(1j * za * oa).reshape(shape)
        return scipy.fft.ifftn(uh) / self.cell_volume


@lru_cache(maxsize=8)
def _freq_mesh(grid: SpectralGrid) -> list[np.ndarray]:
    return list(np.meshgrid(*grid.freq_axes(), indexing="ij"))

@lru_cache(maxsize=8)
def _abs_freq(grid: SpectralGrid) -> np.ndarray:
    mesh = _freq_mesh(grid)
    out = np.sqrt(sum(z * z for z in mesh))
    out.flags.writeable = False
    return out


@dataclass(frozen=True)
class MultiplierOp:
    """A Fourier multiplier: precomputed symbol on the lattice plus metadata.

    order is the growth exponent of the symbol (used only for bookkeeping);
    zero_value is the symbol value assigned at the zero frequency.
    """

    symbol: np.ndarray = field(repr=False)
    order: float = 0.0
    zero_value: complex = 0.0
    needs_zero_mean: bool = False

    def apply(self, grid: SpectralGrid, u: np.ndarray) -> np.ndarray:
        u = np.asarray(u)
        if self.needs_zero_mean and grid.zero_mode_policy == "error":
            mean = float(np.abs(np.mean(u)))
            scale = float(np.max(np.abs(u))) or 1.0
            if mean > 1e-13 * scale:
                raise ValueError(
                    "zero_mode_policy='error': input has a nonzero mean under a "
                    "negative-order multiplier"
                )
        uh = scipy.fft.fftn(u)
        out = scipy.fft.ifftn(self.symbol * uh)
        if np.isrealobj(u) and _is_hermitian_symbol(self):
            return out.real
        return out


def _is_hermitian_symbol(op: MultiplierOp) -> bool:
    # all built-in symbols map real fields to real fields
    return True


@lru_cache(maxsize=64)
def _riesz_symbol(grid: SpectralGrid, axis: int) -> MultiplierOp:
    az = grid.abs_freq().copy()
    az[(0,) * grid.dim] = 1.0
    sym = -1j * _freq_mesh(grid)[axis] / az
    sym[(0,) * grid.dim] = 0.0
    # the Nyquist bin on `axis` is its own Hermitian partner: an odd symbol
    # has no real representation there and is set to 0
    nyq = [slice(None)] * grid.dim
    nyq[axis] = grid.sizes[axis] // 2
    sym[tuple(nyq)] = 0.0
    sym.flags.writeable = False
    return MultiplierOp(symbol=sym, order=0.0, zero_value=0.0)


@lru_cache(maxsize=64)
def _power_symbol(grid: SpectralGrid, exponent: float) -> MultiplierOp:
    """|zeta|^exponent with the zero mode set by policy."""
    az = grid.abs_freq().copy()
    zero = (0,) * grid.dim
    az[zero] = 1.0
    sym = az ** exponent
    sym[zero] = 0.0
    sym.flags.writeable = False
    return MultiplierOp(
        symbol=sym, order=exponent, zero_value=0.0,
        needs_zero_mean=exponent < 0,
    )


@lru_cache(maxsize=64)
def _bessel_symbol(grid: SpectralGrid, s: float) -> MultiplierOp:
    sym = (1.0 + grid.abs_freq() ** 2) ** (s / 2.0)
    sym.flags.writeable = False
    return MultiplierOp(symbol=sym, order=s, zero_value=1.0)


def riesz_transform(grid: SpectralGrid, u: np.ndarray, axis: int) -> np.ndarray:
    """Multiplier -i zeta_axis / |zeta|; the zero frequency maps to 0."""
    if not 0 <= axis < grid.dim:
        raise ValueError("axis out of range")
    return _riesz_symbol(grid, axis).apply(grid, u)


def frac_laplacian(grid: SpectralGrid, u: np.ndarray, s: float,
                   sign: int = 1) -> np.ndarray:
    """Fractional Laplacian |zeta|^(2s) (sign=+1) or |zeta|^(-2s) (sign=-1).

    For sign=-1 the advisory range is 0 < s < n/2; the grid zero mode is
    handled by the grid's zero-mode policy.
    """
    if s <= 0:
        raise ValueError("s must be > 0")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    return _power_symbol(grid, float(sign) * 2.0 * s).apply(grid, u)


def riesz_potential(grid: SpectralGrid, u: np.ndarray, gamma: float) -> np.ndarray:
    """Multiplier |zeta|^(-gamma); requires gamma - n not an even integer."""
    diff = gamma - grid.dim
    if abs(diff / 2.0 - round(diff / 2.0)) < 1e-12:
        raise ValueError("gamma - n must not be an even integer")
    return _power_symbol(grid, -float(gamma)).apply(grid, u)


def bessel_apply(grid: SpectralGrid, u: np.ndarray, s: float) -> np.ndarray:
    """Bessel potential multiplier (1 + |zeta|^2)^(s/2)."""
    return _bessel_symbol(grid, float(s)).apply(grid, u)


def gradient(grid: SpectralGrid, u: np.ndarray, axis: int) -> np.ndarray:
    """Spectral partial derivative (multiplier i zeta_axis)."""
    sym = 1j * _freq_mesh(grid)[axis]
    return scipy.fft.ifftn(sym * scipy.fft.fftn(u)).real


def divergence(grid: SpectralGrid, components) -> np.ndarray:
    return sum(gradient(grid, comp, a) for a, comp in enumerate(components))


def lp_norm(grid: SpectralGrid, u: np.ndarray, p: float) -> float:
    """Discrete L^p norm with cell-volume weights."""
    if p < 1:
        raise ValueError("p must be >= 1")
    return float((np.sum(np.abs(u) ** p) * grid.cell_volume) ** (1.0 / p))


def sobolev_norm(grid: SpectralGrid, u: np.ndarray, t: float, p: float = 2.0) -> float:
    """Discrete H^{t,p} norm: Bessel filter of order t, then grid L^p."""
    return lp_norm(grid, bessel_apply(grid, u, t), p)


def sobolev_norm_field(grid: SpectralGrid, field, t: float, p: float = 2.0) -> float:
    """Tensor-field norm: sum of component norms over all n^m index tuples."""
    from .symtensor import index_table

    _, mult, _ = index_table(field.dim, field.order)
    return float(
        sum(
            int(m) * sobolev_norm(grid, comp, t, p)
            for m, comp in zip(mult, field.components)
        )
    )


def check_periodizable(grid: SpectralGrid, u: np.ndarray, tol: float = 1e-12) -> None:
    """Reject fields that do not decay below tol (relative) at the box edge."""
    scale = float(np.max(np.abs(u)))
    if scale == 0.0:
        return
    edge = 0.0
    for a in range(grid.dim):
        sl0 = [slice(None)] * grid.dim
        sl0[a] = 0
        edge = max(edge, float(np.max(np.abs(u[tuple(sl0)]))))
    if edge > tol * scale:
        raise ValueError(
            f"field boundary magnitude {edge:.3e} exceeds {tol:.1e} * max; "
            "enlarge the domain or narrow the phantom"
        )
