"""
Closed-form scalar and matrix descriptors: f, φ, M(x) and a(x).

Descriptors are formulas defined on all of ℝᴺ. Each carries a declared
modulus of continuity so that continuity-based checks can reason about
them explicitly.
"""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, ClassVar, Sequence

import numpy as np

from ._exceptions import InvalidParameterException
from ._symcore import SymMat, as_point, opnorm

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray


class ScalarField(abc.ABC):
    """A continuous function ℝᴺ → ℝ given by a closed-form formula."""

    kind: ClassVar[str]

    def __call__(self, x: ArrayLike) -> float:
        return float(self.evaluate_many(np.atleast_2d(as_point(x)))[0])

    @abc.abstractmethod
    def evaluate_many(
        self, points: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        """Evaluate on an ``(m, N)`` array of points."""

    @abc.abstractmethod
    def modulus(self, delta: float, radius: float) -> float:
        """Bound on ``|f(x) − f(y)|`` for ``|x − y| ≤ delta``, ``|x|, |y| ≤ radius``."""

    @abc.abstractmethod
    def sup_norm(self, radius: float) -> float:
        """Bound on ``|f|`` over the ball of the given radius."""

    @abc.abstractmethod
    def parameters(self) -> dict[str, Any]:
        pass

    def lipschitz(self, radius: float) -> float:
        """Lipschitz bound on the ball of the given radius."""
        step = 1e-3 * max(radius, 1.0)
        return self.modulus(step, radius) / step

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, **self.parameters()}


@dataclass(frozen=True)
class Constant(ScalarField):
    kind: ClassVar[str] = "constant"

    value: float

    def evaluate_many(
        self, points: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        return np.full(points.shape[0], float(self.value))

    def modulus(self, delta: float, radius: float) -> float:  # noqa: ARG002
        return 0.0

    def sup_norm(self, radius: float) -> float:  # noqa: ARG002
        return abs(float(self.value))

    def parameters(self) -> dict[str, Any]:
        return {"value": float(self.value)}


@dataclass(frozen=True)
class Norm(ScalarField):
    """``scale·|x − center| + offset``."""

    kind: ClassVar[str] = "norm"

    scale: float = 1.0
    offset: float = 0.0
    center: tuple[float, ...] | None = None

    def evaluate_many(
        self, points: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        if self.center is not None:
            points = points - np.asarray(self.center, dtype=float)
        norms = np.linalg.norm(points, axis=1)
        return self.scale * norms + self.offset

    def modulus(self, delta: float, radius: float) -> float:  # noqa: ARG002
        return abs(self.scale) * delta

    def sup_norm(self, radius: float) -> float:
        reach = radius
        if self.center is not None:
            reach += float(np.linalg.norm(self.center))
        return abs(self.scale) * reach + abs(self.offset)

    def parameters(self) -> dict[str, Any]:
        result: dict[str, Any] = {"scale": self.scale, "offset": self.offset}
        if self.center is not None:
            result["center"] = list(self.center)
        return result


@dataclass(frozen=True)
class Affine(ScalarField):
    """``slope·x + intercept``."""

    kind: ClassVar[str] = "affine"

    slope: tuple[float, ...]
    intercept: float = 0.0

    def evaluate_many(
        self, points: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        return points @ np.asarray(self.slope, dtype=float) + self.intercept

    def modulus(self, delta: float, radius: float) -> float:  # noqa: ARG002
        return float(np.linalg.norm(self.slope)) * delta

    def sup_norm(self, radius: float) -> float:
        return float(np.linalg.norm(self.slope)) * radius + abs(self.intercept)

    def parameters(self) -> dict[str, Any]:
        return {"slope": list(self.slope), "intercept": self.intercept}


@dataclass(frozen=True)
class Quadratic(ScalarField):
    """``½ xᵀQx + b·x + c``."""

    kind: ClassVar[str] = "quadratic"

    hessian: tuple[tuple[float, ...], ...]
    slope: tuple[float, ...] | None = None
    constant: float = 0.0

    @property
    def hessian_matrix(self) -> SymMat:
        return SymMat(self.hessian)

    def _slope(self) -> NDArray[np.float64]:
        if self.slope is None:
            return np.zeros(len(self.hessian))
        return np.asarray(self.slope, dtype=float)

    def evaluate_many(
        self, points: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        q = self.hessian_matrix.entries
        quadratic = 0.5 * np.einsum("mi,ij,mj->m", points, q, points)
        return quadratic + points @ self._slope() + self.constant

    def modulus(self, delta: float, radius: float) -> float:
        norm = opnorm(self.hessian_matrix)
        gradient = norm * radius + float(np.linalg.norm(self._slope()))
        return gradient * delta + 0.5 * norm * delta * delta

    def sup_norm(self, radius: float) -> float:
        norm = opnorm(self.hessian_matrix)
        return (
            0.5 * norm * radius * radius
            + float(np.linalg.norm(self._slope())) * radius
            + abs(self.constant)
        )

    def parameters(self) -> dict[str, Any]:
        result: dict[str, Any] = {
            "hessian": [list(row) for row in self.hessian]
        }
        if self.slope is not None:
            result["slope"] = list(self.slope)
        result["constant"] = self.constant
        return result


@dataclass(frozen=True)
class RadialTable(ScalarField):
    """Piecewise linear interpolation in ``|x|``, constant outside the table."""

    kind: ClassVar[str] = "radial_table"

    radii: tuple[float, ...]
    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.radii) != len(self.values) or len(self.radii) < 2:
            raise InvalidParameterException(
                "radii", self.radii, "needs at least two (radius, value) pairs"
            )
        if any(b <= a for a, b in zip(self.radii, self.radii[1:])):
            raise InvalidParameterException(
                "radii", self.radii, "must be strictly increasing"
            )

    def evaluate_many(
        self, points: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        radii = np.linalg.norm(points, axis=1)
        return np.interp(radii, self.radii, self.values)

    def _max_slope(self) -> float:
        radii = np.asarray(self.radii)
        values = np.asarray(self.values)
        return float(np.max(np.abs(np.diff(values) / np.diff(radii))))

    def modulus(self, delta: float, radius: float) -> float:  # noqa: ARG002
        return self._max_slope() * delta

    def sup_norm(self, radius: float) -> float:  # noqa: ARG002
        return float(np.max(np.abs(self.values)))

    def parameters(self) -> dict[str, Any]:
        return {"radii": list(self.radii), "values": list(self.values)}


@dataclass(frozen=True)
class Sum(ScalarField):
    kind: ClassVar[str] = "sum"

    terms: tuple[ScalarField, ...]

    def evaluate_many(
        self, points: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        total = np.zeros(points.shape[0])
        for term in self.terms:
            total = total + term.evaluate_many(points)
        return total

    def modulus(self, delta: float, radius: float) -> float:
        return sum(term.modulus(delta, radius) for term in self.terms)

    def sup_norm(self, radius: float) -> float:
        return sum(term.sup_norm(radius) for term in self.terms)

    def parameters(self) -> dict[str, Any]:
        return {"terms": [term.to_dict() for term in self.terms]}


SCALAR_FIELDS: dict[str, type[ScalarField]] = {
    cls.kind: cls
    for cls in (Constant, Norm, Affine, Quadratic, RadialTable, Sum)
}


def scalar_field_from_dict(data: dict[str, Any]) -> ScalarField:
    """Decode a scalar descriptor, see :meth:`ScalarField.to_dict`."""
    params = dict(data)
    kind = params.pop("kind", None)
    if kind not in SCALAR_FIELDS:
        raise InvalidParameterException(
            "kind",
            kind,
            f"unknown scalar field, expected one of {sorted(SCALAR_FIELDS)}",
        )

    if kind == "sum":
        return Sum(tuple(scalar_field_from_dict(t) for t in params["terms"]))
    if kind == "norm" and params.get("center") is not None:
        params["center"] = tuple(float(c) for c in params["center"])
    if kind == "affine":
        params["slope"] = tuple(float(s) for s in params["slope"])
    if kind == "quadratic":
        params["hessian"] = tuple(
            tuple(float(v) for v in row) for row in params["hessian"]
        )
        if params.get("slope") is not None:
            params["slope"] = tuple(float(s) for s in params["slope"])
    if kind == "radial_table":
        params["radii"] = tuple(float(r) for r in params["radii"])
        params["values"] = tuple(float(v) for v in params["values"])

    try:
        return SCALAR_FIELDS[kind](**params)
    except TypeError as exc:
        raise InvalidParameterException(kind, data, str(exc)) from exc


def zero_field() -> ScalarField:
    return Constant(0.0)


@dataclass(frozen=True)
class MatrixField:
    """
    ``x ↦ base + Σᵢ fᵢ(x)·Bᵢ``, a continuous symmetric-matrix valued map.

    The modulus of continuity is ``Σᵢ ωᵢ(δ)·‖Bᵢ‖``.
    """

    base: SymMat
    terms: tuple[tuple[ScalarField, SymMat], ...] = ()

    @classmethod
    def constant(cls, matrix: SymMat) -> MatrixField:
        return cls(matrix)

    @property
    def dim(self) -> int:
        return self.base.dim

    def at(self, x: ArrayLike) -> SymMat:
        point = as_point(x, self.dim)
        entries = np.array(self.base.entries)
        for field, matrix in self.terms:
            entries = entries + field(point) * matrix.entries
        return SymMat(entries)

    def at_many(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        """Entries at an ``(m, N)`` array of points, shape ``(m, N, N)``."""
        result = np.broadcast_to(
            self.base.entries, (points.shape[0], self.dim, self.dim)
        ).copy()
        for field, matrix in self.terms:
            weights = field.evaluate_many(points)[:, None, None]
            result += weights * matrix.entries
        return result

    def is_constant(self) -> bool:
        return all(
            isinstance(field, Constant) or not np.any(matrix.entries)
            for field, matrix in self.terms
        )

    def modulus(self, delta: float, radius: float) -> float:
        return sum(
            field.modulus(delta, radius) * opnorm(matrix)
            for field, matrix in self.terms
        )

    def sup_norm(self, radius: float) -> float:
        return opnorm(self.base) + sum(
            field.sup_norm(radius) * opnorm(matrix)
            for field, matrix in self.terms
        )

    def negated(self) -> MatrixField:
        return MatrixField(
            -self.base,
            tuple((field, -matrix) for field, matrix in self.terms),
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "base": self.base.to_list(),
            "terms": [
                {"field": field.to_dict(), "matrix": matrix.to_list()}
                for field, matrix in self.terms
            ],
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any] | Sequence[Any]) -> MatrixField:
        # A bare matrix literal is a constant field
        if not isinstance(data, dict):
            return cls(SymMat(data))
        return cls(
            SymMat(data["base"]),
            tuple(
                (scalar_field_from_dict(term["field"]), SymMat(term["matrix"]))
                for term in data.get("terms", [])
            ),
        )


def norm_bound(field: ScalarField, radius: float) -> float:
    """``‖f‖`` on the ball, rounded up to avoid spurious tightness."""
    return math.nextafter(field.sup_norm(radius), math.inf)
