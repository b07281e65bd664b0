"""Bounded domains Ω ⊂ ℝᴺ with a defining function ρ (ρ < 0 inside)."""

from __future__ import annotations

import abc
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Any, ClassVar

import numpy as np

from ._exceptions import InvalidParameterException, SamplerExhaustedException
from ._symcore import SymMat, as_point

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

_RAY_MARCH_STEPS = 64
_BISECTION_STEPS = 60


class DomainSpec(abc.ABC):
    """
    A domain described by its defining function.

    ``ρ < 0`` inside, ``ρ = 0`` on ∂Ω and ``Dρ ≠ 0`` on ∂Ω.
    """

    shape: ClassVar[str]

    @property
    @abc.abstractmethod
    def dim(self) -> int:
        pass

    @abc.abstractmethod
    def rho_many(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        pass

    @abc.abstractmethod
    def gradient(self, x: ArrayLike) -> NDArray[np.float64]:
        pass

    @abc.abstractmethod
    def hessian(self, x: ArrayLike) -> SymMat:
        pass

    @abc.abstractmethod
    def bounding_box(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        pass

    @abc.abstractmethod
    def project(self, x: ArrayLike) -> NDArray[np.float64]:
        """A point of ∂Ω close to ``x`` (exact nearest point for balls)."""

    @abc.abstractmethod
    def sample_boundary(
        self, rng: np.random.Generator, count: int
    ) -> NDArray[np.float64]:
        pass

    @abc.abstractmethod
    def parameters(self) -> dict[str, Any]:
        pass

    def rho(self, x: ArrayLike) -> float:
        return float(self.rho_many(np.atleast_2d(as_point(x, self.dim)))[0])

    def contains_many(self, points: NDArray[np.float64]) -> NDArray[np.bool_]:
        """Strict interior test."""
        return self.rho_many(points) < -1e-12 * max(1.0, self.extent)

    def contains(self, x: ArrayLike) -> bool:
        points = np.atleast_2d(as_point(x, self.dim))
        return bool(self.contains_many(points)[0])

    @property
    def extent(self) -> float:
        """Longest side of the bounding box."""
        lower, upper = self.bounding_box()
        return float(np.max(upper - lower))

    @property
    def radius_bound(self) -> float:
        """``max |x|`` over the closure of Ω."""
        lower, upper = self.bounding_box()
        corners = np.maximum(np.abs(lower), np.abs(upper))
        return float(np.linalg.norm(corners))

    def inward_normal(self, x: ArrayLike) -> NDArray[np.float64]:
        gradient = self.gradient(x)
        return -gradient / np.linalg.norm(gradient)

    def sample_interior(
        self, rng: np.random.Generator, count: int, max_rounds: int = 100
    ) -> NDArray[np.float64]:
        """Uniform samples in Ω by rejection from the bounding box."""
        lower, upper = self.bounding_box()
        accepted: list[NDArray[np.float64]] = []
        total = 0
        for _ in range(max_rounds):
            candidates = rng.uniform(
                lower, upper, size=(2 * count + 8, self.dim)
            )
            inside = candidates[self.contains_many(candidates)]
            accepted.append(inside)
            total += inside.shape[0]
            if total >= count:
                return np.concatenate(accepted)[:count]
        raise SamplerExhaustedException(
            f"could not draw {count} interior points of the {self.shape}",
            max_rounds,
        )

    def ray_exit(self, x: ArrayLike, direction: ArrayLike) -> float:
        """
        Fraction ``t ∈ (0, 1]`` at which ``x + t·direction`` first leaves Ω.

        Returns 1 when the whole segment stays inside.
        """
        start = as_point(x, self.dim)
        step = np.asarray(direction, dtype=float)
        ts = np.linspace(0.0, 1.0, _RAY_MARCH_STEPS + 1)
        values = self.rho_many(start[None, :] + ts[:, None] * step[None, :])
        outside = np.nonzero(values[1:] >= 0)[0]
        if outside.size == 0:
            return 1.0

        high = float(ts[outside[0] + 1])
        low = float(ts[outside[0]])
        for _ in range(_BISECTION_STEPS):
            middle = (low + high) / 2
            if self.rho(start + middle * step) < 0:
                low = middle
            else:
                high = middle
        return high

    def to_dict(self) -> dict[str, Any]:
        return {"shape": self.shape, **self.parameters()}


@dataclass(frozen=True)
class Ball(DomainSpec):
    """``ρ = (|x − c|² − R²) / 2``."""

    shape: ClassVar[str] = "ball"

    center: tuple[float, ...]
    radius: float = 1.0

    def __post_init__(self) -> None:
        if self.radius <= 0:
            raise InvalidParameterException(
                "radius", self.radius, "must be positive"
            )

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def _center(self) -> NDArray[np.float64]:
        return np.asarray(self.center, dtype=float)

    def rho_many(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        offsets = points - self._center
        return (np.sum(offsets * offsets, axis=1) - self.radius**2) / 2

    def gradient(self, x: ArrayLike) -> NDArray[np.float64]:
        return as_point(x, self.dim) - self._center

    def hessian(self, x: ArrayLike) -> SymMat:  # noqa: ARG002
        return SymMat.identity(self.dim)

    def bounding_box(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        return self._center - self.radius, self._center + self.radius

    @property
    def extent(self) -> float:
        return 2 * self.radius

    def project(self, x: ArrayLike) -> NDArray[np.float64]:
        offset = as_point(x, self.dim) - self._center
        norm = float(np.linalg.norm(offset))
        if norm == 0:
            offset = np.eye(self.dim)[0]
            norm = 1.0
        return self._center + self.radius * offset / norm

    def sample_boundary(
        self, rng: np.random.Generator, count: int
    ) -> NDArray[np.float64]:
        directions = rng.standard_normal((count, self.dim))
        directions /= np.linalg.norm(directions, axis=1)[:, None]
        return self._center + self.radius * directions

    def ray_exit(self, x: ArrayLike, direction: ArrayLike) -> float:
        offset = as_point(x, self.dim) - self._center
        step = np.asarray(direction, dtype=float)
        a = float(step @ step)
        b = float(offset @ step)
        c = float(offset @ offset) - self.radius**2
        if c >= 0:
            return 0.0
        t = (-b + math.sqrt(b * b - a * c)) / a
        return min(1.0, t)

    def parameters(self) -> dict[str, Any]:
        return {"center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class Ellipsoid(DomainSpec):
    """``ρ = (Σ ((xᵢ − cᵢ)/aᵢ)² − 1) / 2``."""

    shape: ClassVar[str] = "ellipsoid"

    axes: tuple[float, ...]
    center: tuple[float, ...] | None = None

    def __post_init__(self) -> None:
        if any(axis <= 0 for axis in self.axes):
            raise InvalidParameterException(
                "axes", self.axes, "must be positive"
            )

    @property
    def dim(self) -> int:
        return len(self.axes)

    @property
    def _center(self) -> NDArray[np.float64]:
        if self.center is None:
            return np.zeros(self.dim)
        return np.asarray(self.center, dtype=float)

    @property
    def _axes(self) -> NDArray[np.float64]:
        return np.asarray(self.axes, dtype=float)

    def rho_many(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        scaled = (points - self._center) / self._axes
        return (np.sum(scaled * scaled, axis=1) - 1) / 2

    def gradient(self, x: ArrayLike) -> NDArray[np.float64]:
        return (as_point(x, self.dim) - self._center) / self._axes**2

    def hessian(self, x: ArrayLike) -> SymMat:  # noqa: ARG002
        return SymMat.diag(1 / self._axes**2)

    def bounding_box(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        return self._center - self._axes, self._center + self._axes

    def project(self, x: ArrayLike) -> NDArray[np.float64]:
        # Radial projection along the ray from the center
        offset = as_point(x, self.dim) - self._center
        scale = float(np.linalg.norm(offset / self._axes))
        if scale == 0:
            offset = np.eye(self.dim)[0] * self._axes[0]
            scale = 1.0
        return self._center + offset / scale

    def sample_boundary(
        self, rng: np.random.Generator, count: int
    ) -> NDArray[np.float64]:
        directions = rng.standard_normal((count, self.dim))
        directions /= np.linalg.norm(directions, axis=1)[:, None]
        return self._center + directions * self._axes

    def parameters(self) -> dict[str, Any]:
        result: dict[str, Any] = {"axes": list(self.axes)}
        if self.center is not None:
            result["center"] = list(self.center)
        return result


@dataclass(frozen=True)
class Box(DomainSpec):
    """``ρ = maxᵢ max(lᵢ − xᵢ, xᵢ − uᵢ)``; flat faces, not strictly convex."""

    shape: ClassVar[str] = "box"

    lower: tuple[float, ...]
    upper: tuple[float, ...]

    def __post_init__(self) -> None:
        if len(self.lower) != len(self.upper) or any(
            low >= high for low, high in zip(self.lower, self.upper)
        ):
            raise InvalidParameterException(
                "upper", self.upper, "must be componentwise above 'lower'"
            )

    @classmethod
    def unit(cls, dim: int) -> Box:
        return cls((0.0,) * dim, (1.0,) * dim)

    @property
    def dim(self) -> int:
        return len(self.lower)

    def _faces(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        return np.concatenate([lower - points, points - upper], axis=1)

    def rho_many(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        return np.max(self._faces(points), axis=1)

    def gradient(self, x: ArrayLike) -> NDArray[np.float64]:
        point = as_point(x, self.dim)
        active = int(np.argmax(self._faces(point[None, :])[0]))
        gradient = np.zeros(self.dim)
        if active < self.dim:
            gradient[active] = -1.0
        else:
            gradient[active - self.dim] = 1.0
        return gradient

    def hessian(self, x: ArrayLike) -> SymMat:  # noqa: ARG002
        return SymMat.zeros(self.dim)

    def bounding_box(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        return (
            np.asarray(self.lower, dtype=float),
            np.asarray(self.upper, dtype=float),
        )

    def project(self, x: ArrayLike) -> NDArray[np.float64]:
        lower, upper = self.bounding_box()
        point = np.clip(as_point(x, self.dim), lower, upper)
        if self.rho(point) < 0:
            distances = np.concatenate([point - lower, upper - point])
            face = int(np.argmin(distances))
            if face < self.dim:
                point[face] = lower[face]
            else:
                point[face - self.dim] = upper[face - self.dim]
        return point

    def sample_boundary(
        self, rng: np.random.Generator, count: int
    ) -> NDArray[np.float64]:
        lower, upper = self.bounding_box()
        points = rng.uniform(lower, upper, size=(count, self.dim))
        axes = rng.integers(0, self.dim, size=count)
        sides = rng.integers(0, 2, size=count)
        rows = np.arange(count)
        points[rows, axes] = np.where(sides == 0, lower[axes], upper[axes])
        return points

    def parameters(self) -> dict[str, Any]:
        return {"lower": list(self.lower), "upper": list(self.upper)}


@dataclass(frozen=True)
class Annulus(DomainSpec):
    """
    ``inner < |x − c| < outer`` with ``ρ = (r − inner)(r − outer) / (outer − inner)``.

    The inner boundary is concave: the tangential Hessian of ρ there is
    ``−I / inner``.
    """

    shape: ClassVar[str] = "annulus"

    center: tuple[float, ...]
    inner: float
    outer: float

    def __post_init__(self) -> None:
        if not 0 < self.inner < self.outer:
            raise InvalidParameterException(
                "inner", self.inner, "must satisfy 0 < inner < outer"
            )

    @property
    def dim(self) -> int:
        return len(self.center)

    @property
    def _center(self) -> NDArray[np.float64]:
        return np.asarray(self.center, dtype=float)

    def rho_many(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        radii = np.linalg.norm(points - self._center, axis=1)
        return (radii - self.inner) * (radii - self.outer) / (
            self.outer - self.inner
        )

    def _radial(self, x: ArrayLike) -> tuple[float, NDArray[np.float64]]:
        offset = as_point(x, self.dim) - self._center
        radius = float(np.linalg.norm(offset))
        if radius == 0:
            return 0.0, np.eye(self.dim)[0]
        return radius, offset / radius

    def gradient(self, x: ArrayLike) -> NDArray[np.float64]:
        radius, unit = self._radial(x)
        slope = (2 * radius - self.inner - self.outer) / (
            self.outer - self.inner
        )
        return slope * unit

    def hessian(self, x: ArrayLike) -> SymMat:
        radius, unit = self._radial(x)
        width = self.outer - self.inner
        slope = (2 * radius - self.inner - self.outer) / width
        normal = np.outer(unit, unit)
        tangential = np.eye(self.dim) - normal
        return SymMat(2 / width * normal + slope / radius * tangential)

    def bounding_box(self) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
        return self._center - self.outer, self._center + self.outer

    def project(self, x: ArrayLike) -> NDArray[np.float64]:
        radius, unit = self._radial(x)
        target = (
            self.inner
            if radius < (self.inner + self.outer) / 2
            else self.outer
        )
        return self._center + target * unit

    def sample_boundary(
        self, rng: np.random.Generator, count: int
    ) -> NDArray[np.float64]:
        directions = rng.standard_normal((count, self.dim))
        directions /= np.linalg.norm(directions, axis=1)[:, None]
        radii = np.where(
            rng.integers(0, 2, size=count) == 0, self.inner, self.outer
        )
        return self._center + radii[:, None] * directions

    def sample_inner_boundary(
        self, rng: np.random.Generator, count: int
    ) -> NDArray[np.float64]:
        directions = rng.standard_normal((count, self.dim))
        directions /= np.linalg.norm(directions, axis=1)[:, None]
        return self._center + self.inner * directions

    def parameters(self) -> dict[str, Any]:
        return {
            "center": list(self.center),
            "inner": self.inner,
            "outer": self.outer,
        }


DOMAINS: dict[str, type[DomainSpec]] = {
    cls.shape: cls for cls in (Ball, Ellipsoid, Box, Annulus)
}


def domain_from_dict(data: dict[str, Any]) -> DomainSpec:
    params = dict(data)
    shape = params.pop("shape", None)
    if shape not in DOMAINS:
        raise InvalidParameterException(
            "shape",
            shape,
            f"unknown domain, expected one of {sorted(DOMAINS)}",
        )
    for key in ("center", "axes", "lower", "upper"):
        if params.get(key) is not None:
            params[key] = tuple(float(value) for value in params[key])
    try:
        return DOMAINS[shape](**params)
    except TypeError as exc:
        raise InvalidParameterException(shape, data, str(exc)) from exc
