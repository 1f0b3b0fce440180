"""Symmetric tensor algebra over R^n.

Order-m symmetric tensors are stored compressed: one scalar per
nondecreasing multi-index (i1 <= ... <= im), together with the
multiplicity of that index class.  The compressed length is
binomial(n+m-1, m).
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations_with_replacement, permutations
from math import comb, factorial, prod

import numpy as np

__all__ = [
    "SymTensor",
    "SubsetFamily",
    "index_table",
    "symmetrize",
    "sym_product",
    "contract_power",
    "polarization_family",
    "polarize",
    "basis_vector",
]


@lru_cache(maxsize=None)
def index_table(dim: int, order: int):
    """Nondecreasing multi-indices of given order over {0..dim-1}.

    Returns (indices, multiplicities, position) where `indices` is a tuple of
    index tuples, `multiplicities[j]` counts the distinct permutations of
    `indices[j]`, and `position` maps a sorted index tuple to its slot.
    """
    indices = tuple(combinations_with_replacement(range(dim), order))
    mult = np.array(
        [len(set(permutations(idx))) for idx in indices], dtype=np.int64
    )
    position = {idx: j for j, idx in enumerate(indices)}
    return indices, mult, position


class SymTensor:
    """Dense symmetric m-tensor with compressed component storage."""

    __slots__ = ("order", "dim", "components")

    def __init__(self, order: int, dim: int, components):
        if order < 0:
            raise ValueError("order must be >= 0")
        if dim < 2:
            raise ValueError("dim must be >= 2")
        components = np.asarray(components, dtype=np.float64)
        expected = comb(dim + order - 1, order) if order > 0 else 1
        if components.shape != (expected,):
            raise ValueError(
                f"expected {expected} stored components for order {order}, "
                f"dim {dim}; got shape {components.shape}"
            )
        self.order = order
        self.dim = dim
        self.components = components
        self.components.flags.writeable = False

    @classmethod
    def zero(cls, order: int, dim: int) -> "SymTensor":
        n_comp = comb(dim + order - 1, order) if order > 0 else 1
        return cls(order, dim, np.zeros(n_comp))

    @classmethod
    def from_full(cls, full) -> "SymTensor":
        """Build from a dense n^m array that is already symmetric."""
        full = np.asarray(full, dtype=np.float64)
        if full.ndim == 0:
            raise ValueError("use SymTensor(0, dim, [value]) for scalars")
        dim = full.shape[0]
        if any(sz != dim for sz in full.shape):
            raise ValueError("full tensor must have equal axis lengths")
        indices, _, _ = index_table(dim, full.ndim)
        return cls(full.ndim, dim, np.array([full[idx] for idx in indices]))

    def __getitem__(self, idx) -> float:
        if self.order == 0:
            if idx not in ((), None):
                raise IndexError("scalar tensor takes an empty index")
            return float(self.components[0])
        idx = tuple(sorted(idx))
        _, _, position = index_table(self.dim, self.order)
        return float(self.components[position[idx]])

    def to_full(self) -> np.ndarray:
        """Materialize the full n^m array."""
        if self.order == 0:
            return np.array(self.components[0])
        full = np.empty((self.dim,) * self.order)
        indices, _, _ = index_table(self.dim, self.order)
        for j, idx in enumerate(indices):
            for p in set(permutations(idx)):
                full[p] = self.components[j]
        return full

    def __add__(self, other: "SymTensor") -> "SymTensor":
        self._check_compatible(other)
        return SymTensor(self.order, self.dim, self.components + other.components)

    def __sub__(self, other: "SymTensor") -> "SymTensor":
        self._check_compatible(other)
        return SymTensor(self.order, self.dim, self.components - other.components)

    def __mul__(self, scalar: float) -> "SymTensor":
        return SymTensor(self.order, self.dim, self.components * float(scalar))

    __rmul__ = __mul__

    def _check_compatible(self, other: "SymTensor") -> None:
        if self.order != other.order or self.dim != other.dim:
            raise ValueError("order/dim mismatch")

    def allclose(self, other: "SymTensor", atol: float = 1e-12) -> bool:
        self._check_compatible(other)
        return bool(np.allclose(self.components, other.components, atol=atol))

    def __repr__(self) -> str:
        return f"SymTensor(order={self.order}, dim={self.dim}, components={self.components})"


def basis_vector(j: int, dim: int) -> SymTensor:
    comp = np.zeros(dim)
    comp[j] = 1.0
    return SymTensor(1, dim, comp)


def symmetrize(raw) -> SymTensor:
    """Project a raw n^m array onto its symmetric part.

    Averages over all index permutations; idempotent on symmetric input.
    """
    raw = np.asarray(raw, dtype=np.float64)
    if raw.ndim == 0:
        return SymTensor(0, 2, raw.reshape(1))
    dim = raw.shape[0]
    if any(sz != dim for sz in raw.shape):
        raise ValueError("raw tensor must have equal axis lengths")
    order = raw.ndim
    indices, _, _ = index_table(dim, order)
    comp = np.empty(len(indices))
    for j, idx in enumerate(indices):
        perms = set(permutations(idx))
        comp[j] = sum(raw[p] for p in perms) / len(perms)
    return SymTensor(order, dim, comp)


def sym_product(u: SymTensor, v: SymTensor) -> SymTensor:
    """Symmetric product: symmetrization of the tensor product."""
    if u.dim != v.dim:
        raise ValueError("dim mismatch")
    if u.order == 0:
        return float(u.components[0]) * v
    if v.order == 0:
        return float(v.components[0]) * u
    full = np.multiply.outer(u.to_full(), v.to_full())
    return symmetrize(full)


def sym_power(u: SymTensor, m: int) -> SymTensor:
    """m-th symmetric power of a vector or tensor."""
    if m == 0:
        return SymTensor(0, u.dim, [1.0])
    out = u
    for _ in range(m - 1):
        out = sym_product(out, u)
    return out


def contract_power(f: SymTensor, xi, m: int | None = None) -> float:
    """Full contraction of f with the m-fold tensor power of xi.

    Sums f_{i1..im} xi^{i1} ... xi^{im} over all n^m index tuples, using the
    stored multiplicities.  xi need not be a unit vector.
    """
    xi = np.asarray(xi, dtype=np.float64)
    if xi.shape != (f.dim,):
        raise ValueError("dim mismatch")
    if m is None:
        m = f.order
    if m != f.order:
        raise ValueError("order mismatch")
    if m == 0:
        return float(f.components[0])
    indices, mult, _ = index_table(f.dim, m)
    monomials = np.array([prod(xi[i] for i in idx) for idx in indices])
    return float(np.dot(mult * f.components, monomials))


@dataclass(frozen=True)
class SubsetFamily:
    """Signed subsets used by the polarization decomposition.

    entries: ((j1,..,jk) strictly increasing over {1..m}, (-1)^(m-k)/m!).
    """

    order: int
    entries: tuple[tuple[tuple[int, ...], float], ...]

    def __len__(self) -> int:
        return len(self.entries)


@lru_cache(maxsize=None)
def polarization_family(m: int) -> SubsetFamily:
    """All nonempty increasing subsets of {1..m} with their signed weights."""
    if m < 1:
        raise ValueError("m must be >= 1")
    from itertools import combinations

    entries = []
    for k in range(1, m + 1):
        coeff = (-1.0) ** (m - k) / factorial(m)
        for subset in combinations(range(1, m + 1), k):
            entries.append((subset, coeff))
    return SubsetFamily(m, tuple(entries))


def polarize(values: dict, family: SubsetFamily) -> float:
    """Recombine m-th power contractions into a mixed contraction.

    `values[J]` must hold <f, Theta_J^{sym m}> where Theta_J is the sum of the
    vectors selected by subset J.  Returns <f, xi_1 sym ... sym xi_m>.
    """
    total = 0.0
    for subset, coeff in family.entries:
        if subset not in values:
            raise KeyError(f"missing subset value for {subset}")
        total += coeff * values[subset]
    return total
