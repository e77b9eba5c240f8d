"""Dense vector/matrix primitives: the dictionary type and spectral utilities.

Vectors are plain 1-D float64 numpy arrays throughout the package;
``as_vector`` is the single validation entry point. Atoms are the columns
of a :class:`Dictionary`, which checks unit norms on construction and is
immutable afterwards. All arithmetic is 64-bit floating point.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

# Column norms must sit within this distance of 1. This module only
# validates; renormalising drifted data is the file loader's job (see
# `instances`).
UNIT_NORM_TOL = 1e-10

# Gram-matrix eigenvalues this far below zero are round-off and get clamped
# to zero; anything more negative means the input was not a Gram matrix.
EIGENVALUE_CLAMP = -1e-12


class DimensionMismatchError(ValueError):
    """A vector's length does not match the dimension it is used against."""

    def __init__(self, name: str, expected: int, actual: int):
        super().__init__(f"{name}: expected length {expected}, got {actual}")
        self.expected = expected
        self.actual = actual


def as_vector(values, length: int | None = None, name: str = "vector") -> np.ndarray:
    """Return ``values`` as a finite 1-D float64 array, validating its length.

    Raises
    ------
    DimensionMismatchError
        If ``length`` is given and does not match.
    ValueError
        If the input is not 1-D or contains NaN/Inf.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {v.shape}")
    if length is not None and v.shape[0] != length:
        raise DimensionMismatchError(name, length, v.shape[0])
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


class Dictionary:
    """A d x n matrix whose columns are unit-norm atoms.

    Parameters
    ----------
    atoms : array_like, shape (d, n)
        Atom j is column j. Every column must have unit l2 norm within
        ``UNIT_NORM_TOL``; off-norm input is rejected, never rescaled.

    The wrapped array is frozen after construction, so instances are safe
    to share across threads.
    """

    __slots__ = ("_atoms",)

    def __init__(self, atoms):
        a = np.array(atoms, dtype=np.float64, order="C")
        if a.ndim != 2:
            raise ValueError(f"atom matrix must be 2-D, got shape {a.shape}")
        d, n = a.shape
        if d < 1 or n < 1:
            raise ValueError(f"atom matrix must be at least 1x1, got {d}x{n}")
        if not np.all(np.isfinite(a)):
            raise ValueError("atom matrix contains non-finite entries")
        norms = np.linalg.norm(a, axis=0)
        off = np.flatnonzero(np.abs(norms - 1.0) > UNIT_NORM_TOL)
        if off.size:
            raise ValueError(
                f"columns {off.tolist()} are not unit-norm "
                f"(worst |norm - 1| = {np.max(np.abs(norms - 1.0)):.3e}); "
                "normalise the data before constructing a Dictionary"
            )
        a.setflags(write=False)
        self._atoms = a

    @property
    def atoms(self) -> np.ndarray:
        """Read-only (d, n) array; column j is atom j."""
        return self._atoms

    @property
    def d(self) -> int:
        return self._atoms.shape[0]

    @property
    def n(self) -> int:
        return self._atoms.shape[1]

    def atom(self, j: int) -> np.ndarray:
        """Column j as a read-only view."""
        return self._atoms[:, j]

    def gram(self) -> np.ndarray:
        """The n x n matrix of pairwise atom inner products."""
        return self._atoms.T @ self._atoms

    def __repr__(self) -> str:
        return f"Dictionary(d={self.d}, n={self.n})"


@dataclass(frozen=True)
class SupportSet:
    """Strictly increasing atom indices; the nonzero positions of a coefficient vector."""

    indices: tuple[int, ...]

    def __post_init__(self):
        idx = tuple(int(i) for i in self.indices)
        object.__setattr__(self, "indices", idx)
        if any(i < 0 for i in idx):
            raise ValueError(f"support indices must be nonnegative, got {idx}")
        if any(a >= b for a, b in zip(idx, idx[1:])):
            raise ValueError(f"support indices must be strictly increasing, got {idx}")

    @classmethod
    def from_nonzeros(cls, x) -> "SupportSet":
        """Support of a coefficient vector: indices of its nonzero entries."""
        return cls(tuple(int(i) for i in np.flatnonzero(as_vector(x))))

    def __len__(self) -> int:
        return len(self.indices)

    def __iter__(self):
        return iter(self.indices)

    def __contains__(self, i) -> bool:
        return i in self.indices


def mat_vec(D: Dictionary, x) -> np.ndarray:
    """The linear combination of atoms weighted by the coefficient vector ``x``."""
    x = as_vector(x, D.n, "coefficient vector")
    return D.atoms @ x


def correlations(D: Dictionary, v) -> np.ndarray:
    """Inner products of every atom with ``v``: entry i is <atom_i, v>."""
    v = as_vector(v, D.d, "signal")
    return D.atoms.T @ v


def submatrix(D: Dictionary, support: SupportSet) -> np.ndarray:
    """The d x |support| matrix of the atoms indexed by ``support``, in order.

    Columns inherit unit norms from the dictionary and are not re-checked.
    """
    if len(support) == 0:
        raise ValueError("empty support: spectral quantities are undefined")
    idx = list(support)
    if idx[-1] >= D.n:
        raise ValueError(f"support index {idx[-1]} out of range for a dictionary with n={D.n}")
    return D.atoms[:, idx]


def extremal_singular_values(M) -> tuple[float, float]:
    """Smallest and largest singular values of a d x k matrix, k <= d.

    Computed from a symmetric eigensolve of the k x k Gram matrix M^T M,
    with eigenvalues in [EIGENVALUE_CLAMP, 0) clamped to zero. The Gram
    route is stable here because k never exceeds the (small) support size.
    """
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2:
        raise ValueError(f"expected a 2-D matrix, got shape {M.shape}")
    d, k = M.shape
    if k < 1:
        raise ValueError("matrix must have at least one column")
    if k > d:
        raise ValueError(f"more columns ({k}) than rows ({d}): support exceeds the ambient dimension")
    w = np.linalg.eigvalsh(M.T @ M)
    if w[0] < EIGENVALUE_CLAMP:
        raise ValueError(f"Gram matrix numerically indefinite (eigenvalue {w[0]:.3e})")
    w = np.clip(w, 0.0, None)
    return float(np.sqrt(w[0])), float(np.sqrt(w[-1]))
