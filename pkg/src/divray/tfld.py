"""TFLD single-file binary container.

Layout: magic "TFLD" | version u16 LE | role u8 | header-length u32 LE |
UTF-8 JSON header | payload of row-major little-endian float64.  Field-like
roles order components by nondecreasing multi-index; beam payloads hold
sources, directions, then the value matrix.  Writes are bit-exact
reproducible: the header JSON is serialized with sorted keys and no
whitespace.
"""
from __future__ import annotations

import json
import struct

import numpy as np

from .averaging import AverageField
from .fields import SymTensorField
from .raytransform import BeamSamples, SourceLattice
from .reconstruct import LatticeTensorField
from .spectral import SpectralGrid
from .symtensor import index_table

__all__ = ["write_tfld", "read_tfld", "ROLES"]

MAGIC = b"TFLD"
VERSION = 1
ROLES = {"field": 0, "beam": 1, "avg": 2, "recon": 3}
ROLE_NAMES = {v: k for k, v in ROLES.items()}


def _pack(role: str, header: dict, payload_arrays) -> bytes:
    header_bytes = json.dumps(header, sort_keys=True, separators=(",", ":")).encode()
    chunks = [MAGIC, struct.pack("<H", VERSION), struct.pack("<B", ROLES[role]),
              struct.pack("<I", len(header_bytes)), header_bytes]
    for arr in payload_arrays:
        chunks.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    return b"".join(chunks)


def _grid_header(grid: SpectralGrid) -> dict:
    return {
        "sizes": list(grid.sizes),
        "lengths": list(grid.lengths),
        "origin": list(grid.origin),
        "zero_mode_policy": grid.zero_mode_policy,
    }


def _grid_from_header(doc: dict) -> SpectralGrid:
    return SpectralGrid(
        sizes=tuple(int(v) for v in doc["sizes"]),
        lengths=tuple(float(v) for v in doc["lengths"]),
        origin=tuple(float(v) for v in doc["origin"]),
        zero_mode_policy=doc.get("zero_mode_policy", "zero"),
    )


def write_tfld(obj, path, role: str | None = None, provenance: str = "") -> None:
    """Serialize a field / beam set / average family / reconstruction."""
    if isinstance(obj, SymTensorField):
        role = role or "field"
        header = {
            "n": obj.dim, "m": obj.order, "grid": _grid_header(obj.grid),
            "provenance": provenance, "layout": "components",
        }
        blob = _pack(role, header, [obj.components])
    elif isinstance(obj, BeamSamples):
        header = {
            "n": obj.dim, "m": obj.order,
            "weight": {"kind": obj.weight_kind, "value": obj.weight},
            "n_sources": int(len(obj.sources)),
            "n_directions": int(len(obj.directions)),
            "lattice": None if obj.lattice is None else {
                "shape": list(obj.lattice.shape),
                "origin": list(obj.lattice.origin),
                "spacing": list(obj.lattice.spacing),
            },
            "quality": obj.quality, "provenance": provenance,
        }
        blob = _pack("beam", header, [obj.sources, obj.directions, obj.values])
    elif isinstance(obj, AverageField):
        header = {
            "n": obj.grid.dim, "m": obj.order, "s": obj.s,
            "grid": _grid_header(obj.grid),
            "ranks": sorted(obj.ranks), "provenance": provenance or obj.provenance,
        }
        blob = _pack("avg", header, [obj.ranks[k] for k in sorted(obj.ranks)])
    elif isinstance(obj, LatticeTensorField):
        header = {
            "n": obj.lattice.dim, "m": obj.order,
            "lattice": {
                "shape": list(obj.lattice.shape),
                "origin": list(obj.lattice.origin),
                "spacing": list(obj.lattice.spacing),
            },
            "provenance": provenance, "layout": "components",
        }
        blob = _pack(role or "recon", header, [obj.components])
    else:
        raise TypeError(f"cannot serialize {type(obj)!r} to TFLD")
    with open(path, "wb") as fh:
        fh.write(blob)


def read_tfld(path):
    """Read a TFLD container back into its in-memory object."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[:4] != MAGIC:
        raise ValueError("not a TFLD container (bad magic)")
    version, = struct.unpack_from("<H", blob, 4)
    if version != VERSION:
        raise ValueError(f"unsupported TFLD version {version}")
    role_code, = struct.unpack_from("<B", blob, 6)
    header_len, = struct.unpack_from("<I", blob, 7)
    header = json.loads(blob[11:11 + header_len].decode())
    payload = np.frombuffer(blob[11 + header_len:], dtype="<f8")
    role = ROLE_NAMES[role_code]
    n, m = int(header["n"]), int(header["m"])
    if role in ("field",) or (role == "recon" and "grid" in header):
        grid = _grid_from_header(header["grid"])
        n_comp = len(index_table(n, m)[0])
        comps = payload.reshape((n_comp,) + grid.sizes)
        return SymTensorField(m, grid, comps.copy()), header, role
    if role == "recon":
        lat = header["lattice"]
        lattice = SourceLattice(tuple(lat["shape"]), tuple(lat["origin"]),
                                tuple(lat["spacing"]))
        n_comp = len(index_table(n, m)[0])
        comps = payload.reshape((n_comp,) + lattice.shape)
        return LatticeTensorField(m, lattice, comps.copy()), header, role
    if role == "beam":
        S, D = int(header["n_sources"]), int(header["n_directions"])
        sources = payload[:S * n].reshape(S, n)
        directions = payload[S * n:S * n + D * n].reshape(D, n)
        values = payload[S * n + D * n:].reshape(S, D)
        lattice = None
        if header.get("lattice"):
            lat = header["lattice"]
            lattice = SourceLattice(tuple(lat["shape"]), tuple(lat["origin"]),
                                    tuple(lat["spacing"]))
        w = header["weight"]
        beams = BeamSamples(sources.copy(), directions.copy(), values.copy(),
                            float(w["value"]), m, weight_kind=w["kind"],
                            lattice=lattice, quality=header.get("quality", {}))
        return beams, header, role
    if role == "avg":
        grid = _grid_from_header(header["grid"])
        ranks = {}
        offset = 0
        for k in header["ranks"]:
            n_comp = len(index_table(n, int(k))[0])
            count = n_comp * int(np.prod(grid.sizes))
            ranks[int(k)] = payload[offset:offset + count].reshape(
                (n_comp,) + grid.sizes).copy()
            offset += count
        avg = AverageField(m, float(header["s"]), grid, ranks,
                           provenance=header.get("provenance", ""))
        return avg, header, role
    raise ValueError(f"unhandled role {role}")
