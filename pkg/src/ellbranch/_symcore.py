"""
Small dense symmetric matrices, the space S(N).

Every matrix handled by the library is a :class:`SymMat`. Spectra are
computed with a cyclic Jacobi rotation kernel, which is deterministic and
accurate on the tiny matrices (N at most 4) that dominate the hot loops.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, Iterable, Sequence

import numpy as np

from ._exceptions import (
    DimensionMismatchException,
    InvalidInputException,
    InvalidParameterException,
)

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

MAX_DIM = 4
"""Largest supported dimension N."""

DEFAULT_TOL = 1e-9
"""Default tolerance for order comparisons."""

_JACOBI_MAX_SWEEPS = 64


class SymMat:
    """
    An immutable real symmetric N×N matrix.

    The input is symmetrized as ``(A + Aᵀ) / 2`` on construction, so
    slightly asymmetric numerical Hessians are accepted.

    :param entries: a square, finite, row-major array-like.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries: ArrayLike) -> None:
        array = np.array(entries, dtype=float)
        if array.ndim != 2 or array.shape[0] != array.shape[1]:
            raise InvalidInputException(
                f"expected a square matrix, got shape {array.shape}"
            )
        if not 1 <= array.shape[0] <= MAX_DIM:
            raise InvalidInputException(
                f"dimension {array.shape[0]} is outside [1, {MAX_DIM}]"
            )
        if not np.all(np.isfinite(array)):
            raise InvalidInputException("matrix has non-finite entries")

        array = (array + array.T) / 2
        array.setflags(write=False)
        self._entries = array

    @classmethod
    def identity(cls, dim: int) -> SymMat:
        return cls(np.eye(dim))

    @classmethod
    def zeros(cls, dim: int) -> SymMat:
        return cls(np.zeros((dim, dim)))

    @classmethod
    def diag(cls, values: Sequence[float]) -> SymMat:
        return cls(np.diag(np.asarray(values, dtype=float)))

    @property
    def dim(self) -> int:
        return int(self._entries.shape[0])

    @property
    def entries(self) -> NDArray[np.float64]:
        """Read-only view of the entries."""
        return self._entries

    def trace(self) -> float:
        return float(np.trace(self._entries))

    def shift(self, t: float) -> SymMat:
        """Return ``A + t·I``."""
        return SymMat(self._entries + t * np.eye(self.dim))

    def to_list(self) -> list[list[float]]:
        return [[float(value) for value in row] for row in self._entries]

    def _check_same_dim(self, other: SymMat) -> None:
        if other.dim != self.dim:
            raise DimensionMismatchException(self.dim, other.dim)

    def __add__(self, other: SymMat) -> SymMat:
        self._check_same_dim(other)
        return SymMat(self._entries + other.entries)

    def __sub__(self, other: SymMat) -> SymMat:
        self._check_same_dim(other)
        return SymMat(self._entries - other.entries)

    def __neg__(self) -> SymMat:
        return SymMat(-self._entries)

    def __mul__(self, scalar: float) -> SymMat:
        return SymMat(float(scalar) * self._entries)

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, SymMat):
            return NotImplemented
        return bool(np.array_equal(self._entries, other.entries))

    def __hash__(self) -> int:
        return hash(self._entries.tobytes())

    def __repr__(self) -> str:
        return f"SymMat({self.to_list()})"


@dataclass(frozen=True, eq=False)
class EigDecomp:
    """Ascending eigenvalues with the matching orthonormal frame."""

    values: NDArray[np.float64]
    """λ₁ ≤ … ≤ λ_N."""

    frame: NDArray[np.float64]
    """Eigenvectors stored as columns, ``frame[:, i]`` belongs to ``values[i]``."""

    def matrix(self) -> SymMat:
        """Reconstruct ``Σ λᵢ vᵢvᵢᵀ``."""
        return SymMat((self.frame * self.values) @ self.frame.T)


def _jacobi(
    array: NDArray[np.float64],
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    a = np.array(array, dtype=float)
    n = a.shape[0]
    vectors = np.eye(n)
    scale = max(float(np.linalg.norm(a)), 1e-300)

    for _ in range(_JACOBI_MAX_SWEEPS):
        off_diagonal = float(np.linalg.norm(a - np.diag(np.diag(a))))
        if off_diagonal <= 1e-15 * scale:
            break

        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue

                theta = (a[q, q] - a[p, p]) / (2 * apq)
                t = math.copysign(1.0, theta) / (
                    abs(theta) + math.sqrt(theta * theta + 1)
                )
                c = 1 / math.sqrt(t * t + 1)
                s = t * c

                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q

                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q

                vec_p = vectors[:, p].copy()
                vec_q = vectors[:, q].copy()
                vectors[:, p] = c * vec_p - s * vec_q
                vectors[:, q] = s * vec_p + c * vec_q

    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")
    values = values[order]
    vectors = vectors[:, order]

    # Sign convention: the largest component of each vector is positive
    for i in range(n):
        pivot = int(np.argmax(np.abs(vectors[:, i])))
        if vectors[pivot, i] < 0:
            vectors[:, i] = -vectors[:, i]

    return values, vectors


def eigs(A: SymMat) -> EigDecomp:
    """
    Eigen-decomposition of ``A`` by cyclic Jacobi rotations.

    Repeated calls on identical input give identical output.
    """
    values, vectors = _jacobi(A.entries)
    values.setflags(write=False)
    vectors.setflags(write=False)
    return EigDecomp(values=values, frame=vectors)


def eigenvalues(A: SymMat) -> NDArray[np.float64]:
    return eigs(A).values


def symmetric_eigenvalues(array: ArrayLike) -> NDArray[np.float64]:
    """
    Ascending eigenvalues of a symmetric array of any size.

    Used for block matrices, which may exceed :data:`MAX_DIM`.
    """
    matrix = np.array(array, dtype=float)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise InvalidInputException(
            f"expected a square matrix, got shape {matrix.shape}"
        )
    if not np.all(np.isfinite(matrix)):
        raise InvalidInputException("matrix has non-finite entries")
    return _jacobi((matrix + matrix.T) / 2)[0]


def opnorm(A: SymMat) -> float:
    """``‖A‖ = max |λᵢ(A)|``."""
    values = eigenvalues(A)
    return float(max(abs(values[0]), abs(values[-1])))


def lambda_k(A: SymMat, k: int) -> float:
    """The k-th smallest eigenvalue, 1-based."""
    if not 1 <= k <= A.dim:
        raise InvalidParameterException("k", k, f"must be in [1, {A.dim}]")
    return float(eigenvalues(A)[k - 1])


def outer(v: Sequence[float], w: Sequence[float]) -> SymMat:
    """Symmetrized outer product ``(vwᵀ + wvᵀ) / 2``."""
    first = np.asarray(v, dtype=float)
    second = np.asarray(w, dtype=float)
    if first.shape != second.shape or first.ndim != 1:
        raise DimensionMismatchException(
            first.shape[0] if first.ndim == 1 else -1,
            second.shape[0] if second.ndim == 1 else -1,
            "vector",
        )
    return SymMat(np.outer(first, second))


def loewner_geq(A: SymMat, B: SymMat, tol: float = DEFAULT_TOL) -> bool:
    """``A ⪰ B`` up to ``tol``, tested as ``λ₁(A − B) ≥ −tol``."""
    return lambda_k(A - B, 1) >= -tol


def is_psd(A: SymMat, tol: float = DEFAULT_TOL) -> bool:
    return lambda_k(A, 1) >= -tol


def _spectral_map(A: SymMat, func: Any) -> SymMat:
    decomposition = eigs(A)
    mapped = func(decomposition.values)
    return SymMat((decomposition.frame * mapped) @ decomposition.frame.T)


def positive_part(A: SymMat) -> SymMat:
    """``A⁺``, the spectral positive part."""
    return _spectral_map(A, lambda values: np.maximum(values, 0.0))


def negative_part(A: SymMat) -> SymMat:
    """``A⁻ = (−A)⁺``, so that ``A = A⁺ − A⁻``."""
    return _spectral_map(A, lambda values: np.maximum(-values, 0.0))


def determinant(A: SymMat) -> float:
    return float(np.linalg.det(A.entries))


def as_point(
    x: Iterable[float], dim: int | None = None
) -> NDArray[np.float64]:
    """Validate and convert a point of ℝᴺ."""
    if not isinstance(x, np.ndarray):
        x = list(x)
    point = np.asarray(x, dtype=float)
    if point.ndim != 1:
        raise InvalidInputException(
            f"expected a point, got shape {point.shape}"
        )
    if dim is not None and point.shape[0] != dim:
        raise DimensionMismatchException(dim, point.shape[0], "point")
    if not np.all(np.isfinite(point)):
        raise InvalidInputException("point has non-finite coordinates")
    return point
