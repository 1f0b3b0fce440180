"""Numerical experiments: stability ratios, forward-boundedness ratios, and
unique-continuation demonstrations.

Inequality constants are existence statements, so each ratio is recorded as
an empirical envelope over a phantom family; nothing is asserted against a
literature value.
"""
from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field as dc_field, asdict

import numpy as np

from . import spectral
from .averaging import (
    AverageField,
    average_spectral_vector,
    average_spectral_2tensor,
    sphere_area,
)
from .fields import SymTensorField
from .phantoms import (
    PhantomSpec,
    bump_potential,
    gaussian_phantom,
    polynomial_gaussian_phantom,
    potential_bump_phantom,
    sample_on_grid,
)
from .raytransform import QuadratureSpec, beam_integral, circle_directions, forward_grid
from .spectral import SpectralGrid
from .symtensor import index_table

__all__ = [
    "RatioRecord",
    "UcpExperiment",
    "stability_ratio_vector",
    "stability_ratio_2tensor",
    "forward_bound_ratio",
    "chi_stability_check",
    "ucp_function_experiment",
    "ucp_counterexample",
    "gaussian_family",
    "write_ratio_csv",
    "write_jsonl",
    "disc_sources",
]


@dataclass
class RatioRecord:
    """One measured norm ratio: left / right, with its space parameters."""

    phantom_id: str
    kind: str
    m: int
    s: float
    t: float
    p: float
    left_norm: float
    right_norm: float
    ratio: float
    grid_size: int
    approx: bool = False

    def validate(self) -> "RatioRecord":
        if not np.isfinite(self.ratio) or self.ratio <= 0:
            raise ValueError(f"ratio must be finite and positive, got {self.ratio}")
        return self


@dataclass
class UcpExperiment:
    """Record of a unique-continuation experiment around an open ball U."""

    label: str
    center: tuple[float, ...]
    radius: float
    n_sources: int
    n_directions: int
    max_abs_transform: float
    field_l2: float
    recovery_max_error: float | None = None
    details: dict = dc_field(default_factory=dict)

    def to_json(self) -> str:
        doc = asdict(self)
        doc["center"] = list(self.center)
        return json.dumps(doc, sort_keys=True)


def _rank_norm(grid: SpectralGrid, rank_array: np.ndarray, k: int,
               t: float, p: float) -> float:
    """H^{t,p} norm of a rank-k average, summed over all n^k index tuples."""
    _, mult, _ = index_table(grid.dim, k)
    return float(sum(
        int(mu) * spectral.sobolev_norm(grid, comp, t, p)
        for mu, comp in zip(mult, rank_array)
    ))


def _avg_for(field: SymTensorField, s: float) -> AverageField:
    if field.order == 1:
        return average_spectral_vector(field, s, check_decay=False)
    if field.order == 2:
        return average_spectral_2tensor(field, s, check_decay=False)
    raise ValueError("spectral averages exist for m = 1, 2 only")


def stability_ratio_vector(field: SymTensorField, s: float, t: float,
                           phantom_id: str = "phantom") -> RatioRecord:
    """||f||_{H^t} / (||A1 f||_{H^{t+2s}} + 2s ||A0 f||_{H^{t+2s}}), p = 2."""
    if field.order != 1:
        raise ValueError("vector stability needs an order-1 field")
    if t <= -2.0 * s:
        raise ValueError("requires t > -2s")
    grid = field.grid
    avg = _avg_for(field, s)
    left = spectral.sobolev_norm_field(grid, field.mean_free(), t, 2.0)
    right = (_rank_norm(grid, avg.ranks[1], 1, t + 2.0 * s, 2.0)
             + 2.0 * s * _rank_norm(grid, avg.ranks[0], 0, t + 2.0 * s, 2.0))
    if right == 0.0:
        raise ValueError("zero denominator: field has no mean-free content")
    return RatioRecord(phantom_id, "stability-vector", 1, s, t, 2.0,
                       left, right, left / right, grid.sizes[0]).validate()


def stability_ratio_2tensor(field: SymTensorField, s: float, t: float,
                            phantom_id: str = "phantom") -> RatioRecord:
    """||f||_{H^t} / (||A2|| + ||A1|| + ||A0|| in H^{t+2s}), p = 2."""
    if field.order != 2:
        raise ValueError("2-tensor stability needs an order-2 field")
    if t <= -2.0 * s:
        raise ValueError("requires t > -2s")
    grid = field.grid
    avg = _avg_for(field, s)
    left = spectral.sobolev_norm_field(grid, field.mean_free(), t, 2.0)
    right = sum(_rank_norm(grid, avg.ranks[k], k, t + 2.0 * s, 2.0)
                for k in (0, 1, 2))
    if right == 0.0:
        raise ValueError("zero denominator: field has no mean-free content")
    return RatioRecord(phantom_id, "stability-2tensor", 2, s, t, 2.0,
                       left, right, left / right, grid.sizes[0]).validate()


def forward_bound_ratio(field: SymTensorField, s: float, t: float, p: float,
                        k: int, pairing: str = "sobolev",
                        phantom_id: str = "phantom") -> RatioRecord:
    """||A^k f|| / ||f|| in the stated space pairing.

    pairing="sobolev": H^{t,p} -> H^{t+2s,p}.  pairing="lp-lq": L^p -> L^q
    with 1/q = 1/p - 2s/n; both exponents must lie in (1, inf).
    """
    grid = field.grid
    avg = _avg_for(field, s)
    if k not in avg.ranks:
        raise ValueError(f"rank {k} not available for order {field.order}")
    fld = field.mean_free()
    if pairing == "sobolev":
        left = _rank_norm(grid, avg.ranks[k], k, t + 2.0 * s, p)
        right = spectral.sobolev_norm_field(grid, fld, t, p)
    elif pairing == "lp-lq":
        inv_q = 1.0 / p - 2.0 * s / grid.dim
        if not (0.0 < inv_q < 1.0) or p <= 1.0:
            raise ValueError("need 1 < p < q < inf with 1/q = 1/p - 2s/n")
        q = 1.0 / inv_q
        left = _rank_norm(grid, avg.ranks[k], k, 0.0, q)
        right = spectral.sobolev_norm_field(grid, fld, 0.0, p)
    else:
        raise ValueError(f"unknown pairing {pairing!r}")
    if right == 0.0:
        raise ValueError("zero field")
    return RatioRecord(phantom_id, f"forward-{pairing}-k{k}", field.order, s,
                       t, p, left, right, left / right, grid.sizes[0],
                       approx=(p != 2.0 or pairing == "lp-lq")).validate()


def chi_stability_check(field_or_phantom, m: int, s: float, t: float,
                        grid: SpectralGrid, n_directions: int = 32,
                        quad: QuadratureSpec | None = None,
                        phantom_id: str = "phantom") -> RatioRecord:
    """Direction-integrated transform norm against the field norm.

    For each direction eta the source-grid samples of the fractional
    transform are Bessel-filtered at order t+2s and measured in L^2; the
    sphere integral of those norms forms the denominator.
    """
    if grid.dim != 2:
        raise ValueError("implemented for n=2 direction sets")
    if n_directions < 2 * m + 4:
        raise ValueError("direction set too small")
    dirs = circle_directions(n_directions)
    beams = forward_grid(field_or_phantom, grid, dirs, 2.0 * s - 1.0,
                         quad=quad, m=m, weight_kind="s")
    weight = sphere_area(grid.dim) / n_directions
    right = 0.0
    for d in range(n_directions):
        u = beams.values[:, d].reshape(grid.sizes)
        right += weight * spectral.sobolev_norm(grid, u, t + 2.0 * s, 2.0)
    if isinstance(field_or_phantom, SymTensorField):
        field = field_or_phantom
    else:
        field = sample_on_grid(field_or_phantom, grid)
    left = spectral.sobolev_norm_field(grid, field, t, 2.0)
    if right == 0.0:
        raise ValueError("zero transform")
    return RatioRecord(phantom_id, "chi-momentum", m, s, t, 2.0,
                       left, right, left / right, grid.sizes[0]).validate()


def disc_sources(center, radius: float, count: int = 25) -> np.ndarray:
    """Deterministic point set inside a disc: center plus concentric rings."""
    center = np.asarray(center, dtype=np.float64)
    pts = [center]
    n_rings = 3
    per_ring = max(8, int(np.ceil((count - 1) / n_rings)))
    for ring in range(1, n_rings + 1):
        r = radius * ring / (n_rings + 0.5)
        th = 2.0 * np.pi * (np.arange(per_ring) + 0.13 * ring) / per_ring
        ring_pts = center + r * np.stack([np.cos(th), np.sin(th)], axis=1)
        pts.extend(ring_pts)
    return np.asarray(pts[:max(count, 1 + n_rings * per_ring)])


def ucp_function_experiment(center, radius: float, phantom: PhantomSpec,
                            n_directions: int = 32, n_sources: int = 25,
                            quad: QuadratureSpec | None = None,
                            fd_step: float = 1.0 / 32.0) -> UcpExperiment:
    """Function-case experiment: beams from U detect f, and the directional
    derivative of the transform returns f on U pointwise."""
    if phantom.order != 0:
        raise ValueError("function experiment needs an order-0 phantom")
    if quad is None:
        quad = QuadratureSpec()
    sources = disc_sources(center, radius, n_sources)
    dirs = circle_directions(n_directions)
    beams = forward_grid(phantom, sources, dirs, 0.0, quad=quad, weight_kind="k")
    max_abs = float(np.max(np.abs(beams.values)))

    from .reconstruct import _directional_slope
    from .phantoms import eval_field

    rec_err = 0.0
    cache: dict = {}
    provider = lambda pts, xi: _beam_batch(phantom, pts, xi, 0.0, quad)
    for x in sources[:9]:
        for xi in dirs[::8]:
            slope = _directional_slope(provider, np.array(x), xi, xi, fd_step, cache)
            rec = -slope
            rec_err = max(rec_err, abs(rec - float(eval_field(phantom, x).components[0])))
    ref_grid = SpectralGrid.centered(2, 128, 16.0)
    fld = sample_on_grid(phantom, ref_grid)
    l2 = spectral.lp_norm(ref_grid, fld.components[0], 2.0)
    return UcpExperiment("ucp-function", tuple(np.asarray(center, float)), radius,
                         len(sources), n_directions, max_abs, l2,
                         recovery_max_error=rec_err)


def _beam_batch(phantom, pts, xi, w, quad):
    return np.array([beam_integral(
        lambda p, x_: _directional(phantom, p, x_), pt, xi, w, quad) for pt in pts])


def _directional(phantom, pts, xi):
    from .phantoms import directional_profile
    return directional_profile(phantom, pts, xi)


def ucp_counterexample(center, radius: float, bump: PhantomSpec,
                       n_directions: int = 32, n_sources: int = 25,
                       quad: QuadratureSpec | None = None) -> UcpExperiment:
    """Gradient-field witness: every beam from U integrates to zero while the
    field norm stays bounded away from zero; the potential is recovered by
    line integration and vanishes on U."""
    if bump.kind != "potential-bump":
        raise ValueError("counterexample needs a potential-bump phantom")
    center = np.asarray(center, dtype=np.float64)
    gap = float(np.linalg.norm(center - np.asarray(bump.center)))
    if gap <= radius + bump.radius:
        raise ValueError("bump support must be disjoint from U")
    if quad is None:
        quad = QuadratureSpec()
    sources = disc_sources(center, radius, n_sources)
    dirs = circle_directions(n_directions)
    # per-ray adaptive integration: near-tangent rays brush the bump edge
    max_abs = max(
        abs(beam_integral(bump, src, xi, 0.0, quad))
        for src in sources for xi in dirs)

    span = float(np.linalg.norm(np.asarray(bump.center))) + bump.radius + 2.0
    length = 2.0 ** np.ceil(np.log2(2.0 * span))
    ref_grid = SpectralGrid.centered(2, 256, length)
    fld = sample_on_grid(bump, ref_grid)
    l2 = float(np.sqrt(sum(
        spectral.lp_norm(ref_grid, c, 2.0) ** 2 for c in fld.components)))

    probe = np.asarray(bump.center) + np.array([0.25 * bump.radius, 0.1 * bump.radius])
    xi = np.array([1.0, 0.0])
    v_rec = -beam_integral(lambda p, x_: _directional(bump, p, x_),
                           probe, xi, 0.0, quad)
    v_true = float(bump_potential(bump, probe))
    return UcpExperiment("ucp-counterexample", tuple(center), radius,
                         len(sources), n_directions, max_abs, l2,
                         recovery_max_error=abs(v_rec - v_true),
                         details={"v_recovered": v_rec, "v_true": v_true,
                                  "support_gap": gap})


def gaussian_family(m: int, grid: SpectralGrid, count: int = 20,
                    seed: int = 20240, mean_free: bool = False):
    """Deterministic family of Gaussian-class phantoms sampled on a grid."""
    rng = np.random.default_rng(seed)
    n = grid.dim
    n_comp = len(index_table(n, m)[0])
    out = []
    for j in range(count):
        center = rng.uniform(-1.0, 1.0, size=n)
        width = float(rng.uniform(0.7, 1.8))
        coeffs = rng.uniform(-1.0, 1.0, size=n_comp)
        coeffs[np.argmax(np.abs(coeffs))] += np.sign(coeffs[np.argmax(np.abs(coeffs))])
        if mean_free:
            axis = int(rng.integers(0, n))
            alpha = tuple(1 if a == axis else 0 for a in range(n))
            spec = polynomial_gaussian_phantom(m, n, coeffs, [(alpha, 1.0)],
                                               center=center, width=width)
        else:
            spec = gaussian_phantom(m, n, coeffs, center=center, width=width)
        out.append((f"family-{m}-{j}", spec, sample_on_grid(spec, grid)))
    return out


_CSV_FIELDS = ["phantom_id", "kind", "m", "s", "t", "p", "left_norm",
               "right_norm", "ratio", "grid_size", "approx"]


def write_ratio_csv(records, path) -> None:
    """Locale-independent CSV: '.' decimals, '\\n' line ends, header row."""
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=_CSV_FIELDS, lineterminator="\n")
        writer.writeheader()
        for rec in records:
            row = {k: getattr(rec, k) for k in _CSV_FIELDS}
            for key, val in row.items():
                if isinstance(val, float):
                    row[key] = repr(val)
            writer.writerow(row)


def write_jsonl(objects, path) -> None:
    with open(path, "w") as fh:
        for obj in objects:
            fh.write(obj.to_json() if hasattr(obj, "to_json") else json.dumps(obj, sort_keys=True))
            fh.write("\n")
