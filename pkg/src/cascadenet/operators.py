"""Dense operators on tensor-product Hilbert spaces.

Factors are ordered by declaration and indexed row-major, slot 0 slowest:
the basis state ``|n_0 n_1 ... n_{F-1}>`` sits at flat index
``n_0 * prod(factors[1:]) + n_1 * prod(factors[2:]) + ...``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np
import scipy.linalg

from .errors import InvalidDimension, NotHermitian


@dataclass(frozen=True)
class SpaceLayout:
    factors: tuple[int, ...]

    def __post_init__(self):
        factors = tuple(int(f) for f in self.factors)
        if not factors:
            raise InvalidDimension("layout needs at least one factor")
        if any(f < 2 for f in factors):
            raise InvalidDimension(f"every factor must be >= 2, got {factors}")
        object.__setattr__(self, "factors", factors)

    @property
    def total_dim(self) -> int:
        return int(np.prod(self.factors))

    def __len__(self):
        return len(self.factors)

    def __add__(self, other: "SpaceLayout") -> "SpaceLayout":
        return SpaceLayout(self.factors + other.factors)

    def basis_index(self, occupations: Sequence[int]) -> int:
        if len(occupations) != len(self.factors):
            raise InvalidDimension("occupation list does not match layout")
        index = 0
        for n, d in zip(occupations, self.factors):
            if not 0 <= n < d:
                raise InvalidDimension(f"occupation {n} outside factor of dimension {d}")
            index = index * d + int(n)
        return index


class OperatorMatrix:
    """Square complex matrix tagged with the layout it acts on.

    Instances are immutable: the stored array is marked read-only.
    """

    __slots__ = ("layout", "entries")

    def __init__(self, layout: SpaceLayout, entries):
        entries = np.array(entries, dtype=complex)
        n = layout.total_dim
        if entries.shape != (n, n):
            raise InvalidDimension(
                f"entries of shape {entries.shape} do not match layout {layout.factors}"
            )
        entries.setflags(write=False)
        self.layout = layout
        self.entries = entries

    @classmethod
    def single(cls, entries) -> "OperatorMatrix":
        """Wrap a matrix acting on one factor."""
        entries = np.asarray(entries)
        return cls(SpaceLayout((entries.shape[0],)), entries)

    @property
    def dim(self) -> int:
        return self.layout.total_dim

    def dag(self) -> "OperatorMatrix":
        return OperatorMatrix(self.layout, self.entries.conj().T)

    def _check(self, other: "OperatorMatrix"):
        if other.layout != self.layout:
            raise InvalidDimension(
                f"layout mismatch: {self.layout.factors} vs {other.layout.factors}"
            )

    def __matmul__(self, other):
        if isinstance(other, OperatorMatrix):
            self._check(other)
            return OperatorMatrix(self.layout, self.entries @ other.entries)
        return self.entries @ other

    def __add__(self, other):
        self._check(other)
        return OperatorMatrix(self.layout, self.entries + other.entries)

    def __sub__(self, other):
        self._check(other)
        return OperatorMatrix(self.layout, self.entries - other.entries)

    def __neg__(self):
        return OperatorMatrix(self.layout, -self.entries)

    def __mul__(self, scalar):
        return OperatorMatrix(self.layout, scalar * self.entries)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return OperatorMatrix(self.layout, self.entries / scalar)

    def __repr__(self):
        return f"OperatorMatrix(layout={self.layout.factors})"


@dataclass(frozen=True)
class HermitianEigen:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def _entries(op) -> np.ndarray:
    return op.entries if isinstance(op, OperatorMatrix) else np.asarray(op, dtype=complex)


def annihilation(dim: int) -> OperatorMatrix:
    """Truncated bosonic lowering operator; for ``dim == 2`` this is sigma^-."""
    if int(dim) != dim or dim < 2:
        raise InvalidDimension(f"dimension must be an integer >= 2, got {dim}")
    dim = int(dim)
    return OperatorMatrix.single(np.diag(np.sqrt(np.arange(1, dim)), k=1))


def creation(dim: int) -> OperatorMatrix:
    return annihilation(dim).dag()


def number(dim: int) -> OperatorMatrix:
    a = annihilation(dim)
    return a.dag() @ a


def identity(layout: SpaceLayout) -> OperatorMatrix:
    return OperatorMatrix(layout, np.eye(layout.total_dim))


def embed(op: OperatorMatrix, layout: SpaceLayout, slot: int) -> OperatorMatrix:
    """Lift a single-factor operator into ``layout`` at position ``slot``."""
    if not 0 <= slot < len(layout):
        raise InvalidDimension(f"slot {slot} out of range for {len(layout)} factors")
    local = _entries(op)
    if local.shape != (layout.factors[slot],) * 2:
        raise InvalidDimension(
            f"operator of dimension {local.shape[0]} cannot sit in slot {slot} "
            f"of dimension {layout.factors[slot]}"
        )
    left = int(np.prod(layout.factors[:slot], dtype=int))
    right = int(np.prod(layout.factors[slot + 1:], dtype=int))
    full = np.kron(np.kron(np.eye(left), local), np.eye(right))
    return OperatorMatrix(layout, full)


def tensor(*ops: OperatorMatrix) -> OperatorMatrix:
    layout = reduce(lambda a, b: a + b, (op.layout for op in ops))
    return OperatorMatrix(layout, reduce(np.kron, (op.entries for op in ops)))


def commutator(a, b) -> np.ndarray:
    a, b = _entries(a), _entries(b)
    return a @ b - b @ a


def anticommutator(a, b) -> np.ndarray:
    a, b = _entries(a), _entries(b)
    return a @ b + b @ a


def matrix_exponential(m: OperatorMatrix, scale: complex = 1.0) -> OperatorMatrix:
    """Return ``exp(scale * m)`` (scaling-and-squaring Pade)."""
    entries = _entries(m)
    if not np.all(np.isfinite(entries)) or not np.isfinite(scale):
        raise ValueError("matrix_exponential requires finite input")
    out = scipy.linalg.expm(scale * entries)
    if isinstance(m, OperatorMatrix):
        return OperatorMatrix(m.layout, out)
    return OperatorMatrix.single(out)


def hermiticity_defect(m) -> float:
    entries = _entries(m)
    return float(np.max(np.abs(entries - entries.conj().T))) if entries.size else 0.0


def hermitian_eigen(m, rtol: float = 1e-9) -> HermitianEigen:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    Raises NotHermitian when ``max|M - M^dag| > rtol * max|M|``.
    """
    entries = _entries(m)
    scale = float(np.max(np.abs(entries))) if entries.size else 0.0
    if hermiticity_defect(entries) > rtol * max(scale, np.finfo(float).tiny):
        raise NotHermitian(
            f"matrix is not Hermitian (defect {hermiticity_defect(entries):.3e})"
        )
    herm = 0.5 * (entries + entries.conj().T)
    values, vectors = np.linalg.eigh(herm)
    return HermitianEigen(values, vectors)


def partial_trace(rho: np.ndarray, factors: Sequence[int], keep: Sequence[int]) -> np.ndarray:
    """Trace out every factor not listed in ``keep`` (kept order preserved)."""
    factors = list(factors)
    keep = sorted(keep)
    n = len(factors)
    tensor_rho = np.asarray(rho).reshape(factors + factors)
    letters = "abcdefghijklmnopqrstuvwxyz"
    if 2 * n > len(letters):
        raise InvalidDimension("too many factors for partial_trace")
    row = list(letters[:n])
    col = list(letters[n:2 * n])
    for i in range(n):
        if i not in keep:
            col[i] = row[i]
    out = "".join(row[i] for i in keep) + "".join(col[i] for i in keep)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, tensor_rho)
    d = int(np.prod([factors[i] for i in keep], dtype=int))
    return reduced.reshape(d, d)


def trace_distance(rho: np.ndarray, sigma: np.ndarray) -> float:
    diff = np.asarray(rho) - np.asarray(sigma)
    diff = 0.5 * (diff + diff.conj().T)
    return 0.5 * float(np.sum(np.abs(np.linalg.eigvalsh(diff))))


def basis_projector(layout: SpaceLayout, occupations: Sequence[int]) -> np.ndarray:
    """Density matrix of the product Fock state with the given occupations."""
    rho = np.zeros((layout.total_dim,) * 2, dtype=complex)
    i = layout.basis_index(occupations)
    rho[i, i] = 1.0
    return rho
