"""Command-line pipeline: phantom -> forward -> average -> reconstruct,
plus norms and the verification suites.

Exit codes: 0 success, 2 validation error, 3 numerical-quality failure.
"""
from __future__ import annotations

import argparse
import os
import sys

import numpy as np
import scipy.fft

from . import spectral, verify
from .averaging import average_field_by_quadrature
from .fields import SymTensorField
from .phantoms import PhantomSpec, sample_on_grid
from .raytransform import QuadratureSpec, circle_directions, forward_grid
from .reconstruct import (
    build_report,
    reconstruct_2tensor,
    reconstruct_from_weighted,
    reconstruct_vector,
)
from .spectral import SpectralGrid
from .tfld import read_tfld, write_tfld

VALIDATION_ERROR = 2
QUALITY_ERROR = 3


class CliError(Exception):
    def __init__(self, message: str, code: int = VALIDATION_ERROR):
        super().__init__(message)
        self.code = code


def _load_phantom(path: str) -> PhantomSpec:
    try:
        with open(path) as fh:
            return PhantomSpec.from_json(fh.read())
    except (OSError, ValueError, KeyError) as exc:
        raise CliError(f"cannot read phantom spec {path}: {exc}")


def _grid_from_args(args, dim: int) -> SpectralGrid:
    return SpectralGrid.centered(dim, args.grid, args.length)


def cmd_phantom(args) -> int:
    spec = _load_phantom(args.spec)
    grid = _grid_from_args(args, spec.dim)
    field = sample_on_grid(spec, grid)
    write_tfld(field, args.out, provenance=f"phantom:{spec.kind}")
    return 0


def _load_field_or_phantom(path: str, args):
    if path.endswith(".json"):
        spec = _load_phantom(path)
        return spec, spec.order, spec.dim, None
    obj, header, role = read_tfld(path)
    if role not in ("field", "recon") or not isinstance(obj, SymTensorField):
        raise CliError(f"{path} does not hold a grid field (role {role})")
    return obj, obj.order, obj.dim, obj.grid


def cmd_forward(args) -> int:
    field, m, n, grid = _load_field_or_phantom(args.input, args)
    if args.m is not None and args.m != m:
        raise CliError(f"--m {args.m} conflicts with input order {m}")
    if args.weight is not None and args.s is not None:
        raise CliError("give either --weight or --s, not both")
    if args.weight is None and args.s is None:
        raise CliError("one of --weight / --s is required")
    if args.s is not None:
        w, kind = 2.0 * args.s - 1.0, "s"
    else:
        w, kind = float(args.weight), "k"
        if w < 0 or w != int(w):
            raise CliError("--weight must be a nonnegative integer")
    if args.directions:
        directions = np.loadtxt(args.directions, ndmin=2)
        if directions.shape[1] != n:
            raise CliError("direction file dimension mismatch")
    else:
        if n != 2:
            raise CliError("--n-angles applies to n=2 only")
        directions = circle_directions(args.n_angles)
    if grid is None:
        grid = _grid_from_args(args, n)
    quad = QuadratureSpec(truncation=args.truncation)
    beams = forward_grid(field, grid, directions, w, quad=quad, m=m,
                         weight_kind=kind)
    write_tfld(beams, args.out, provenance="forward")
    if beams.quality.get("significant_outside"):
        print("quality: sources outside the field grid carry signal",
              file=sys.stderr)
        return QUALITY_ERROR
    return 0


def cmd_average(args) -> int:
    beams, header, role = read_tfld(args.input)
    if role != "beam":
        raise CliError(f"{args.input} does not hold beam samples")
    if beams.weight_kind != "s":
        raise CliError("averages need fractional-weight beams (--s forward)")
    if beams.lattice is None:
        raise CliError("beam sources must lie on a grid lattice")
    try:
        grid = SpectralGrid(
            sizes=beams.lattice.shape,
            lengths=tuple(h * n for h, n in zip(beams.lattice.spacing,
                                                beams.lattice.shape)),
            origin=beams.lattice.origin,
        )
    except ValueError as exc:
        raise CliError(f"beam lattice is not FFT-compatible: {exc}")
    avg = average_field_by_quadrature(beams, grid)
    if args.rank != "all":
        k = int(args.rank)
        if k not in avg.ranks:
            raise CliError(f"rank {k} outside 0..{avg.order}")
        avg.ranks = {k: avg.ranks[k]}
    write_tfld(avg, args.out, provenance="quadrature-average")
    return 0


def cmd_reconstruct(args) -> int:
    obj, header, role = read_tfld(args.input)
    if args.method == "pointwise":
        if role != "beam":
            raise CliError("pointwise reconstruction consumes beam samples")
        if obj.weight_kind != "k":
            raise CliError("pointwise reconstruction needs integer-weight data")
        recon = reconstruct_from_weighted(obj)
        write_tfld(recon, args.out, provenance="pointwise")
        report = build_report_lattice(recon)
    elif args.method in ("spectral-vec", "spectral-2t"):
        if role != "avg":
            raise CliError("spectral reconstruction consumes averages")
        want_m = 1 if args.method == "spectral-vec" else 2
        if obj.order != want_m:
            raise CliError(f"{args.method} needs order-{want_m} averages, "
                           f"got {obj.order}")
        if len(obj.ranks) != want_m + 1:
            raise CliError("average container is missing ranks")
        recon = (reconstruct_vector if want_m == 1 else reconstruct_2tensor)(obj)
        write_tfld(recon, args.out, role="recon", provenance=args.method)
        report = build_report(recon, None, method=args.method)
    else:
        raise CliError(f"unknown method {args.method}")
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(report.to_json())
            fh.write("\n")
    return 0


def build_report_lattice(recon):
    from .reconstruct import ReconReport
    return ReconReport(method="pointwise", notes="lattice reconstruction")


def cmd_norms(args) -> int:
    obj, header, role = read_tfld(args.input)
    if not isinstance(obj, SymTensorField):
        raise CliError("norms apply to grid fields")
    value = spectral.sobolev_norm_field(obj.grid, obj, args.t, args.p)
    print(f"H^({args.t},{args.p}) norm = {value!r}")
    return 0


def _suite_identities(out_path: str) -> list:
    """Deterministic operator-identity residuals on a small grid."""
    grid = SpectralGrid.centered(2, 64, 16.0)
    rng = np.random.default_rng(7)
    u = rng.standard_normal(grid.sizes)
    u -= u.mean()
    rows = []

    def add(name, value):
        rows.append({"check": name, "value": repr(float(value))})

    rr = sum(spectral.riesz_transform(grid, spectral.riesz_transform(grid, u, j), j)
             for j in range(2))
    add("riesz_square_sum_residual", np.max(np.abs(rr + u)))
    v1 = spectral.riesz_potential(grid, spectral.riesz_potential(grid, u, 0.3), 0.4)
    v2 = spectral.riesz_potential(grid, u, 0.7)
    add("riesz_potential_composition_residual", np.max(np.abs(v1 - v2)))
    w1 = spectral.frac_laplacian(grid, spectral.frac_laplacian(grid, u, 0.25, -1),
                                 0.25, 1)
    add("frac_laplacian_inverse_residual", np.max(np.abs(w1 - u)))
    b = spectral.bessel_apply(grid, spectral.bessel_apply(grid, u, 1.3), -1.3)
    add("bessel_inverse_residual", np.max(np.abs(b - u)))
    t_ord = spectral.sobolev_norm(grid, spectral.riesz_transform(grid, u, 0), 0.7)
    add("riesz_sobolev_ratio", t_ord / spectral.sobolev_norm(grid, u, 0.7))
    return rows


def cmd_verify(args) -> int:
    import csv as csv_mod

    if args.suite == "identities":
        rows = _suite_identities(args.out)
        with open(args.out, "w", newline="") as fh:
            writer = csv_mod.DictWriter(fh, fieldnames=["check", "value"],
                                        lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)
        return 0
    if args.suite == "stability":
        grid = SpectralGrid.centered(2, args.grid, args.length)
        records = []
        for m in (1, 2):
            family = verify.gaussian_family(m, grid, count=20, seed=args.seed)
            for s in (0.25, 0.75):
                for t in (0.0, 1.0):
                    for pid, spec, field in family:
                        fn = (verify.stability_ratio_vector if m == 1
                              else verify.stability_ratio_2tensor)
                        records.append(fn(field, s, t, phantom_id=pid))
        verify.write_ratio_csv(records, args.out)
        return 0
    if args.suite == "ucp":
        from .phantoms import gaussian_phantom, potential_bump_phantom
        fn_exp = verify.ucp_function_experiment(
            (-4.0, 0.0), 1.0, gaussian_phantom(0, 2, [1.0]))
        bump = potential_bump_phantom(2, center=(4.0, 0.0), radius=1.0)
        cex = verify.ucp_counterexample((-4.0, 0.0), 1.0, bump)
        verify.write_jsonl([fn_exp, cex], args.out)
        return 0
    raise CliError(f"unknown suite {args.suite}")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="divray",
        description="divergent beam ray transforms of symmetric tensor fields",
    )
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("DIVRAY_THREADS", "0")) or None,
                        help="FFT worker threads (env DIVRAY_THREADS)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="sample an analytic phantom to TFLD")
    p.add_argument("spec")
    p.add_argument("out")
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--length", type=float, default=16.0)
    p.set_defaults(fn=cmd_phantom)

    p = sub.add_parser("forward", help="beam transform of a field or phantom")
    p.add_argument("input", help="field .tfld or phantom .json")
    p.add_argument("out")
    p.add_argument("--weight", type=float, default=None, help="integer weight k")
    p.add_argument("--s", type=float, default=None, help="fractional exponent s")
    p.add_argument("--m", type=int, default=None)
    p.add_argument("--directions", default=None, help="text file of unit rows")
    p.add_argument("--n-angles", type=int, default=64)
    p.add_argument("--grid", type=int, default=256)
    p.add_argument("--length", type=float, default=16.0)
    p.add_argument("--truncation", type=float, default=32.0)
    p.set_defaults(fn=cmd_forward)

    p = sub.add_parser("average", help="sphere-average beam samples")
    p.add_argument("input")
    p.add_argument("out")
    p.add_argument("--rank", default="all")
    p.set_defaults(fn=cmd_average)

    p = sub.add_parser("reconstruct", help="invert beams or averages")
    p.add_argument("input")
    p.add_argument("out")
    p.add_argument("--method", required=True,
                   choices=["pointwise", "spectral-vec", "spectral-2t"])
    p.add_argument("--report", default=None)
    p.set_defaults(fn=cmd_reconstruct)

    p = sub.add_parser("norms", help="Sobolev norm of a stored field")
    p.add_argument("input")
    p.add_argument("--t", type=float, default=0.0)
    p.add_argument("--p", type=float, default=2.0)
    p.set_defaults(fn=cmd_norms)

    p = sub.add_parser("verify", help="run a verification suite")
    p.add_argument("--suite", required=True,
                   choices=["identities", "stability", "ucp"])
    p.add_argument("--out", required=True)
    p.add_argument("--grid", type=int, default=128)
    p.add_argument("--length", type=float, default=16.0)
    p.add_argument("--seed", type=int, default=20240)
    p.set_defaults(fn=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    workers = args.threads or os.cpu_count()
    try:
        with scipy.fft.set_workers(workers):
            return args.fn(args)
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.code
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return VALIDATION_ERROR


if __name__ == "__main__":
    sys.exit(main())
