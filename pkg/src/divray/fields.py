"""Grid-sampled symmetric tensor fields."""
from __future__ import annotations

import numpy as np

from .spectral import SpectralGrid
from .symtensor import SymTensor, index_table

__all__ = ["SymTensorField", "interior_mask"]


class SymTensorField:
    """Symmetric m-tensor field sampled on a SpectralGrid.

    components has shape (n_stored, *grid.sizes), one slab per nondecreasing
    multi-index in the order produced by symtensor.index_table.
    """

    def __init__(self, order: int, grid: SpectralGrid, components: np.ndarray):
        components = np.asarray(components, dtype=np.float64)
        indices, _, _ = index_table(grid.dim, order)
        if components.shape != (len(indices),) + grid.sizes:
            raise ValueError(
                f"components shape {components.shape} does not match "
                f"({len(indices)},) + {grid.sizes}"
            )
        self.order = order
        self.grid = grid
        self.components = components

    @property
    def dim(self) -> int:
        return self.grid.dim

    @classmethod
    def zero(cls, order: int, grid: SpectralGrid) -> "SymTensorField":
        indices, _, _ = index_table(grid.dim, order)
        return cls(order, grid, np.zeros((len(indices),) + grid.sizes))

    def component(self, *idx) -> np.ndarray:
        """Component slab for a multi-index (any index order)."""
        _, _, position = index_table(self.dim, self.order)
        return self.components[position[tuple(sorted(idx))]]

    def tensor_at(self, node_index: tuple[int, ...]) -> SymTensor:
        return SymTensor(self.order, self.dim, self.components[(slice(None),) + node_index])

    def contract_direction(self, xi: np.ndarray) -> np.ndarray:
        """<f(x), xi^(sym m)> as a scalar grid, via stored multiplicities."""
        xi = np.asarray(xi, dtype=np.float64)
        indices, mult, _ = index_table(self.dim, self.order)
        out = np.zeros(self.grid.sizes)
        for j, idx in enumerate(indices):
            mono = float(mult[j]) * np.prod([xi[i] for i in idx]) if idx else 1.0
            out += mono * self.components[j]
        return out

    def __add__(self, other: "SymTensorField") -> "SymTensorField":
        if self.order != other.order or self.grid != other.grid:
            raise ValueError("field mismatch")
        return SymTensorField(self.order, self.grid, self.components + other.components)

    def __sub__(self, other: "SymTensorField") -> "SymTensorField":
        if self.order != other.order or self.grid != other.grid:
            raise ValueError("field mismatch")
        return SymTensorField(self.order, self.grid, self.components - other.components)

    def __mul__(self, scalar: float) -> "SymTensorField":
        return SymTensorField(self.order, self.grid, self.components * float(scalar))

    __rmul__ = __mul__

    def mean_free(self) -> "SymTensorField":
        """Subtract each component's grid mean (zero-mode removal)."""
        axes = tuple(range(1, 1 + self.dim))
        means = self.components.mean(axis=axes, keepdims=True)
        return SymTensorField(self.order, self.grid, self.components - means)


def interior_mask(grid: SpectralGrid, margin_cells: int = 8) -> np.ndarray:
    """Boolean mask excluding a boundary ring of margin_cells per side."""
    mask = np.zeros(grid.sizes, dtype=bool)
    sl = tuple(slice(margin_cells, sz - margin_cells) for sz in grid.sizes)
    mask[sl] = True
    if not mask.any():
        raise ValueError("margin leaves no interior nodes")
    return mask


def relative_l2(a: np.ndarray, b: np.ndarray, mask: np.ndarray) -> float:
    """||a - b|| / ||b|| over the masked nodes."""
    num = float(np.sqrt(np.sum((a - b)[mask] ** 2)))
    den = float(np.sqrt(np.sum(b[mask] ** 2)))
    if den == 0.0:
        return num
    return num / den


def relative_l2_field(a: SymTensorField, b: SymTensorField, mask: np.ndarray) -> float:
    """Relative L2 distance over all n^m components (with multiplicity)."""
    _, mult, _ = index_table(a.dim, a.order)
    num = 0.0
    den = 0.0
    for j, m in enumerate(mult):
        d = (a.components[j] - b.components[j])[mask]
        num += float(m) * float(np.sum(d * d))
        den += float(m) * float(np.sum(b.components[j][mask] ** 2))
    if den == 0.0:
        return float(np.sqrt(num))
    return float(np.sqrt(num / den))
