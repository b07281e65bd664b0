"""
Grid functions and point tests for weak (viscosity) notions.

Everything here works on values sampled on a uniform lattice of spacing
``h``. Each node is tagged interior, boundary or outside; outside nodes hold
the sentinel :data:`NEG_INF`, which plays the role of ``−∞`` in maxima.
"""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TYPE_CHECKING, Any, Callable, Iterator, Sequence, Union

import numpy as np

from ._ellset import DEFAULT_EPS, EllipticMapSpec, interior_contains
from ._exceptions import (
    DimensionMismatchException,
    InvalidInputException,
    InvalidParameterException,
    PreconditionException,
    StencilOutOfDomainException,
)
from ._io import atomic_write
from ._sampling import random_rotations
from ._symcore import SymMat

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from ._domains import DomainSpec
    from ._fields import ScalarField

    Formula = Union[
        ScalarField, Callable[[NDArray[np.float64]], NDArray[np.float64]]
    ]

LOGGER = logging.getLogger(__name__)

OUTSIDE, BOUNDARY, INTERIOR = 0, 1, 2
MASK_LETTERS = {OUTSIDE: "O", BOUNDARY: "B", INTERIOR: "I"}
MASK_CODES = {letter: code for code, letter in MASK_LETTERS.items()}

NEG_INF = -1e30
"""
Stand-in for ``−∞``. Arithmetic saturates: results are clipped back to
``NEG_INF`` so that ``NEG_INF − c`` never drifts below it.
"""

DEFAULT_SHIFT = 0.05
DEFAULT_BALL_RADIUS = 3.0

Node = tuple[int, ...]


def lattice_directions(dim: int, radius: int) -> list[Node]:
    """
    Primitive lattice vectors with ``max |dᵢ| ≤ radius``, one per antipodal
    pair (the first nonzero coordinate is positive).
    """
    if radius < 1:
        raise InvalidParameterException("radius", radius, "must be at least 1")
    directions = []
    for vector in itertools.product(range(-radius, radius + 1), repeat=dim):
        nonzero = [value for value in vector if value != 0]
        if not nonzero or nonzero[0] < 0:
            continue
        if math.gcd(*(abs(value) for value in nonzero)) != 1:
            continue
        directions.append(tuple(vector))
    return sorted(directions, key=lambda d: (sum(v * v for v in d), d))


def lattice_ball(dim: int, radius: float) -> list[Node]:
    """Nonzero lattice offsets with Euclidean norm at most ``radius``."""
    reach = int(math.floor(radius))
    return [
        offset
        for offset in itertools.product(range(-reach, reach + 1), repeat=dim)
        if 0 < sum(v * v for v in offset) <= radius * radius + 1e-12
    ]


def _add(node: Sequence[int], offset: Sequence[int], scale: int = 1) -> Node:
    return tuple(a + scale * b for a, b in zip(node, offset))


@dataclass(eq=False)
class GridFunction:
    """
    Values on a uniform lattice ``origin + h·index``.

    :param origin: position of the node with index ``(0, …, 0)``.
    :param h: lattice spacing.
    :param mask: per node :data:`INTERIOR`, :data:`BOUNDARY` or :data:`OUTSIDE`.
    :param values: per node values, :data:`NEG_INF` on outside nodes.
    """

    origin: NDArray[np.float64]
    h: float
    mask: NDArray[np.int8]
    values: NDArray[np.float64]

    def __post_init__(self) -> None:
        self.origin = np.asarray(self.origin, dtype=float)
        self.mask = np.asarray(self.mask, dtype=np.int8)
        self.values = np.array(self.values, dtype=float)
        if not self.h > 0:
            raise InvalidParameterException("h", self.h, "must be positive")
        if self.mask.shape != self.values.shape:
            raise InvalidInputException(
                f"mask of shape {self.mask.shape} does not match values of"
                f" shape {self.values.shape}"
            )
        if self.origin.shape != (self.mask.ndim,):
            raise DimensionMismatchException(
                self.mask.ndim, self.origin.shape[0], "origin"
            )
        if not np.all(np.isfinite(self.values[self.mask != OUTSIDE])):
            raise InvalidInputException("grid values must be finite inside")

        self.values[self.mask == OUTSIDE] = NEG_INF
        interior = np.argwhere(self.mask == INTERIOR)
        for axis in range(self.dim):
            if np.unique(interior[:, axis]).size < 3:
                raise InvalidParameterException(
                    "h",
                    self.h,
                    f"leaves fewer than 3 interior nodes on axis {axis}",
                )

    @classmethod
    def from_domain(
        cls,
        domain: DomainSpec,
        h: float,
        formula: Formula,
        *,
        boundary: ScalarField | None = None,
        boundary_values: str = "node",
    ) -> GridFunction:
        """
        Sample ``formula`` on the lattice ``h·ℤᴺ`` over ``domain``.

        Interior nodes are the lattice points in Ω. Boundary nodes are the
        remaining nodes with an interior axis neighbour; they carry
        ``boundary`` (``formula`` by default) at the node itself, or at its
        projection on ∂Ω when ``boundary_values`` is ``"projection"``.
        """
        if not h > 0:
            raise InvalidParameterException("h", h, "must be positive")
        if boundary_values not in ("node", "projection"):
            raise InvalidParameterException(
                "boundary_values",
                boundary_values,
                "expected 'node' or 'projection'",
            )
        lower, upper = domain.bounding_box()
        first = np.floor(lower / h).astype(int) - 1
        last = np.ceil(upper / h).astype(int) + 1
        shape = tuple(int(n) for n in last - first + 1)
        origin = first * h

        positions = _positions(origin, h, shape)
        flat = positions.reshape(-1, domain.dim)
        interior = domain.contains_many(flat).reshape(shape)
        near = np.zeros(shape, dtype=bool)
        for axis in range(domain.dim):
            for step in (1, -1):
                near |= _shifted(interior, axis, step)
        mask = np.full(shape, OUTSIDE, dtype=np.int8)
        mask[near] = BOUNDARY
        mask[interior] = INTERIOR

        values = np.full(shape, NEG_INF)
        values[interior] = _evaluate(formula, positions[interior])
        edge = mask == BOUNDARY
        edge_points = positions[edge]
        if boundary_values == "projection":
            edge_points = np.array([domain.project(p) for p in edge_points])
        values[edge] = _evaluate(
            boundary if boundary is not None else formula, edge_points
        )
        return cls(origin, h, mask, values)

    @classmethod
    def on_box(
        cls,
        lower: Sequence[float],
        upper: Sequence[float],
        h: float,
        formula: Formula,
    ) -> GridFunction:
        """Sample on every node of a box; the outer layer is the boundary."""
        low = np.asarray(lower, dtype=float)
        high = np.asarray(upper, dtype=float)
        counts = np.rint((high - low) / h).astype(int) + 1
        shape = tuple(int(n) for n in counts)
        positions = _positions(low, h, shape)
        mask = np.full(shape, BOUNDARY, dtype=np.int8)
        mask[tuple(slice(1, -1) for _ in shape)] = INTERIOR
        values = _evaluate(formula, positions.reshape(-1, low.size))
        values = values.reshape(shape)
        return cls(low, h, mask, values)

    @property
    def dim(self) -> int:
        return self.mask.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return tuple(self.mask.shape)

    def positions(self) -> NDArray[np.float64]:
        return _positions(self.origin, self.h, self.shape)

    def position(self, node: Sequence[int]) -> NDArray[np.float64]:
        return self.origin + self.h * np.asarray(node, dtype=float)

    def in_grid(self, node: Sequence[int]) -> bool:
        return all(0 <= i < n for i, n in zip(node, self.shape))

    def is_inside(self, node: Sequence[int]) -> bool:
        """Within the array and not an outside node."""
        return self.in_grid(node) and self.mask[tuple(node)] != OUTSIDE

    def is_interior(self, node: Sequence[int]) -> bool:
        return self.in_grid(node) and self.mask[tuple(node)] == INTERIOR

    def __getitem__(self, node: Sequence[int]) -> float:
        return float(self.values[tuple(node)])

    def interior_nodes(self) -> Iterator[Node]:
        """Interior nodes in lexicographic order."""
        for node in np.argwhere(self.mask == INTERIOR):
            yield tuple(int(i) for i in node)

    def node_of(self, x: ArrayLike) -> Node:
        """The lattice node closest to ``x``."""
        index = np.rint((np.asarray(x, dtype=float) - self.origin) / self.h)
        return tuple(int(i) for i in index)

    def with_values(self, values: NDArray[np.float64]) -> GridFunction:
        return GridFunction(self.origin, self.h, self.mask, values)

    def _check_compatible(self, other: GridFunction) -> None:
        if (
            self.shape != other.shape
            or self.h != other.h
            or not np.array_equal(self.origin, other.origin)
            or not np.array_equal(self.mask, other.mask)
        ):
            raise InvalidParameterException(
                "grid",
                other.shape,
                "grids do not share the same lattice and mask",
            )

    def add_formula(
        self,
        formula: Formula,
    ) -> GridFunction:
        values = self.values.copy()
        inside = self.mask != OUTSIDE
        values[inside] += _evaluate(formula, self.positions()[inside])
        return self.with_values(values)

    def maximum(self, other: GridFunction) -> GridFunction:
        self._check_compatible(other)
        return self.with_values(np.maximum(self.values, other.values))

    def __sub__(self, other: GridFunction) -> GridFunction:
        self._check_compatible(other)
        values = self.values - other.values
        values[self.mask == OUTSIDE] = NEG_INF
        return self.with_values(values)

    def __neg__(self) -> GridFunction:
        values = -self.values
        values[self.mask == OUTSIDE] = NEG_INF
        return self.with_values(values)

    def shift(self, offset: Sequence[int]) -> GridFunction:
        """
        ``x ↦ u(x + offset·h)`` on the shrunk grid.

        A node stays interior when both it and its translate are interior.
        """
        if len(offset) != self.dim:
            raise DimensionMismatchException(self.dim, len(offset), "offset")
        source = tuple(
            slice(max(0, o), n + min(0, o)) for o, n in zip(offset, self.shape)
        )
        target = tuple(
            slice(max(0, -o), n - max(0, o))
            for o, n in zip(offset, self.shape)
        )
        moved_mask = np.full(self.shape, OUTSIDE, dtype=np.int8)
        moved_mask[target] = self.mask[source]
        moved_values = np.full(self.shape, NEG_INF)
        moved_values[target] = self.values[source]

        mask = np.minimum(self.mask, moved_mask).astype(np.int8)
        values = np.where(mask != OUTSIDE, moved_values, NEG_INF)
        return GridFunction(self.origin, self.h, mask, values)

    def sample_at(self, points: NDArray[np.float64]) -> NDArray[np.float64]:
        """Values at lattice points given by position; ``nan`` off the grid."""
        result = np.full(points.shape[0], np.nan)
        for index, point in enumerate(points):
            node = self.node_of(point)
            if (
                self.is_inside(node)
                and np.linalg.norm(self.position(node) - point)
                <= 1e-9 * self.h
            ):
                result[index] = self[node]
        return result

    def to_csv(self, path: Path | None = None) -> str:
        """
        Serialize as ``x1,…,xN,mask,value`` rows in lexicographic node order.

        Values use the shortest round-tripping decimal form.
        """
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        coordinates = [f"x{i + 1}" for i in range(self.dim)]
        writer.writerow([*coordinates, "mask", "value"])
        positions = self.positions()
        for node in itertools.product(*(range(n) for n in self.shape)):
            code = int(self.mask[node])
            value = (
                "-inf" if code == OUTSIDE else repr(float(self.values[node]))
            )
            writer.writerow(
                [
                    *(repr(float(c)) for c in positions[node]),
                    MASK_LETTERS[code],
                    value,
                ]
            )
        text = buffer.getvalue()
        if path is not None:
            atomic_write(path, text)
        return text

    @classmethod
    def from_csv(cls, source: Path | str) -> GridFunction:
        """Read a grid written by :meth:`to_csv` from a path or CSV text."""
        if isinstance(source, Path):
            text = source.read_text(encoding="utf-8")
        else:
            text = source
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or rows[0][-2:] != ["mask", "value"]:
            raise InvalidInputException(
                "grid CSV must start with x1..xN,mask,value"
            )
        dim = len(rows[0]) - 2
        body = rows[1:]
        try:
            coordinates = np.array(
                [[float(v) for v in row[:dim]] for row in body]
            )
            letters = [row[dim] for row in body]
            values = np.array([float(row[dim + 1]) for row in body])
        except (ValueError, IndexError) as exc:
            raise InvalidInputException(f"malformed grid CSV: {exc}") from exc
        if any(letter not in MASK_CODES for letter in letters):
            raise InvalidInputException("mask entries must be I, B or O")

        axes = [np.unique(coordinates[:, axis]) for axis in range(dim)]
        shape = tuple(axis.size for axis in axes)
        if len(body) != math.prod(shape):
            raise InvalidInputException(
                "grid CSV does not list a full lattice"
            )
        origin = np.array([axis[0] for axis in axes])
        h = float((axes[0][-1] - axes[0][0]) / (shape[0] - 1))
        order = np.lexsort(coordinates.T[::-1])
        mask = np.array([MASK_CODES[letters[i]] for i in order], dtype=np.int8)
        values = np.where(mask == OUTSIDE, NEG_INF, values[order])
        return cls(origin, h, mask.reshape(shape), values.reshape(shape))


def _positions(
    origin: NDArray[np.float64], h: float, shape: tuple[int, ...]
) -> NDArray[np.float64]:
    axes = [origin[i] + h * np.arange(n) for i, n in enumerate(shape)]
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)


def _shifted(
    array: NDArray[np.bool_], axis: int, step: int
) -> NDArray[np.bool_]:
    """``result[i] = array[i + step]`` along ``axis``, ``False`` past the edge."""
    result = np.zeros_like(array)
    source = [slice(None)] * array.ndim
    target = [slice(None)] * array.ndim
    if step > 0:
        source[axis] = slice(step, None)
        target[axis] = slice(None, -step)
    else:
        source[axis] = slice(None, step)
        target[axis] = slice(-step, None)
    result[tuple(target)] = array[tuple(source)]
    return result


def _evaluate(
    formula: Formula,
    points: NDArray[np.float64],
) -> NDArray[np.float64]:
    if points.shape[0] == 0:
        return np.zeros(0)
    evaluate_many = getattr(formula, "evaluate_many", None)
    if evaluate_many is not None:
        return np.asarray(evaluate_many(points), dtype=float)
    return np.asarray(formula(points), dtype=float)


def _require(u: GridFunction, node: Sequence[int]) -> float:
    if not u.is_inside(node):
        raise StencilOutOfDomainException(node)
    return u[node]


def stencil_hessian(u: GridFunction, node: Sequence[int]) -> SymMat:
    """Central second differences, exact on quadratics."""
    dim = u.dim
    center = _require(u, node)
    basis = np.eye(dim, dtype=int)
    hessian = np.zeros((dim, dim))
    for i in range(dim):
        forward = _require(u, _add(node, basis[i]))
        backward = _require(u, _add(node, basis[i], -1))
        hessian[i, i] = (forward + backward - 2 * center) / u.h**2
        for j in range(i + 1, dim):
            plus = basis[i] + basis[j]
            minus = basis[i] - basis[j]
            value = (
                _require(u, _add(node, plus))
                + _require(u, _add(node, plus, -1))
                - _require(u, _add(node, minus))
                - _require(u, _add(node, minus, -1))
            ) / (4 * u.h**2)
            hessian[i, j] = hessian[j, i] = value
    return SymMat(hessian)


def stencil_gradient(
    u: GridFunction, node: Sequence[int]
) -> NDArray[np.float64]:
    basis = np.eye(u.dim, dtype=int)
    return np.array(
        [
            (
                _require(u, _add(node, basis[i]))
                - _require(u, _add(node, basis[i], -1))
            )
            / (2 * u.h)
            for i in range(u.dim)
        ]
    )


@dataclass(frozen=True)
class ContactTriple:
    """
    Witness that ``u`` is not subaffine.

    With ``q(y) = slope·y + intercept − eps·|y − x0|²``, the grid function
    touches ``q`` at ``x0`` while ``u < q`` on the boundary of ``box``.
    """

    x0: Node
    eps: float
    affine: tuple[tuple[float, ...], float]
    hessian: SymMat
    box: tuple[Node, Node]

    def quadratic(self, u: GridFunction, node: Sequence[int]) -> float:
        slope, intercept = self.affine
        y = u.position(node)
        center = u.position(self.x0)
        return float(
            np.dot(slope, y) + intercept - self.eps * np.sum((y - center) ** 2)
        )

    def replay(self, u: GridFunction, tol: float = 1e-9) -> bool:
        """Whether the strict domination still holds on ``u``."""
        lower, upper = self.box
        scale = tol * max(1.0, abs(u[self.x0]))
        if abs(u[self.x0] - self.quadratic(u, self.x0)) > scale:
            return False
        for node in _box_nodes(lower, upper):
            on_face = any(
                i in (low, high) for i, low, high in zip(node, lower, upper)
            )
            if on_face and not u[node] < self.quadratic(u, node):
                return False
        return True

    def to_dict(self) -> dict[str, Any]:
        return {
            "x0": list(self.x0),
            "eps": self.eps,
            "slope": list(self.affine[0]),
            "intercept": self.affine[1],
            "hessian": self.hessian.to_list(),
            "box": [list(self.box[0]), list(self.box[1])],
        }


def _box_nodes(lower: Sequence[int], upper: Sequence[int]) -> Iterator[Node]:
    return itertools.product(*(range(a, b + 1) for a, b in zip(lower, upper)))


def _dyadic_boxes(
    lower: Sequence[int], upper: Sequence[int], levels: int
) -> list[tuple[Node, Node]]:
    boxes: list[tuple[Node, Node]] = []
    for level in range(levels + 1):
        cuts = [
            np.unique(np.rint(np.linspace(a, b, 2**level + 1)).astype(int))
            for a, b in zip(lower, upper)
        ]
        ranges = [list(zip(c[:-1], c[1:])) for c in cuts]
        for parts in itertools.product(*ranges):
            low = tuple(int(p[0]) for p in parts)
            high = tuple(int(p[1]) for p in parts)
            wide = all(b - a >= 2 for a, b in zip(low, high))
            if wide and (low, high) not in boxes:
                boxes.append((low, high))
    return boxes


def _affine_candidates(
    points: NDArray[np.float64],
    values: NDArray[np.float64],
    on_face: NDArray[np.bool_],
    corners: list[tuple[NDArray[np.float64], float]],
) -> Iterator[tuple[NDArray[np.float64], float]]:
    design = np.hstack([points[on_face], np.ones((int(on_face.sum()), 1))])
    solution = np.linalg.lstsq(design, values[on_face], rcond=None)[0]
    yield solution[:-1], float(solution[-1])

    dim = points.shape[1]
    positions = {tuple(p): value for p, value in corners}
    for corner, value in corners:
        rows = [np.append(corner, 1.0)]
        rhs = [value]
        for other, other_value in corners:
            if np.count_nonzero(other != corner) == 1:
                rows.append(np.append(other, 1.0))
                rhs.append(other_value)
        if len(rows) == dim + 1 and tuple(corner) in positions:
            coefficients = np.linalg.solve(np.array(rows), np.array(rhs))
            yield coefficients[:-1], float(coefficients[-1])


def subaffine_check(
    u: GridFunction,
    region: tuple[Sequence[int], Sequence[int]] | None = None,
    *,
    levels: int = 2,
    tol: float = 1e-9,
) -> ContactTriple | None:
    """
    Maximum principle against affine functions on a dyadic family of boxes.

    For each box ``K`` and each affine ``a`` of a fitted dictionary, checks
    ``max_K (u − a) ≤ max_∂K (u − a) + tol``. Returns ``None`` when every
    comparison holds, and the :class:`ContactTriple` of the first violation
    otherwise.
    """
    if region is None:
        inside = np.argwhere(u.mask != OUTSIDE)
        region = (tuple(inside.min(axis=0)), tuple(inside.max(axis=0)))
    lower = tuple(int(i) for i in region[0])
    upper = tuple(int(i) for i in region[1])
    if len(lower) != u.dim or len(upper) != u.dim:
        raise DimensionMismatchException(u.dim, len(lower), "region")
    if any(b - a < 2 for a, b in zip(lower, upper)):
        raise InvalidParameterException(
            "region", region, "needs at least 3 nodes per axis"
        )
    if not all(u.is_inside(node) for node in _box_nodes(lower, upper)):
        raise InvalidParameterException(
            "region", region, "must lie inside the grid mask"
        )

    positions = u.positions()
    for low, high in _dyadic_boxes(lower, upper, levels):
        window = tuple(slice(a, b + 1) for a, b in zip(low, high))
        values = u.values[window].reshape(-1)
        points = positions[window].reshape(-1, u.dim)
        indices = np.array(list(_box_nodes(low, high)))
        on_face = np.any((indices == low) | (indices == high), axis=1)
        corner_nodes = list(itertools.product(*zip(low, high)))
        corners = [(u.position(c), u[c]) for c in corner_nodes]
        scale = tol * max(1.0, float(np.max(np.abs(values))))

        candidates = _affine_candidates(points, values, on_face, corners)
        for slope, intercept in candidates:
            difference = values - points @ slope - intercept
            inner = np.where(on_face, -np.inf, difference)
            top = float(np.max(inner))
            rim = float(np.max(difference[on_face]))
            if top <= rim + scale:
                continue

            best = int(np.argmax(inner))
            x0 = tuple(int(i) for i in indices[best])
            center = points[best]
            distances = np.sum((points[on_face] - center) ** 2, axis=1)
            reach = float(np.max(distances))
            eps = (top - rim) / (2 * reach)
            LOGGER.debug(
                "subaffinity violated on box %s-%s at %s", low, high, x0
            )
            return ContactTriple(
                x0=x0,
                eps=eps,
                affine=(tuple(float(s) for s in slope), intercept + top),
                hessian=SymMat(-2 * eps * np.eye(u.dim)),
                box=(low, high),
            )
    return None


def hessian_dictionary(
    u: GridFunction,
    node: Sequence[int],
    *,
    shift: float = DEFAULT_SHIFT,
    multiples: int = 3,
    rotations: int = 8,
    seed: int = 0,
) -> list[SymMat]:
    """
    Test Hessians at a node: the stencil Hessian ``H``, ``H ± k·shift·I``
    for ``k = 1..multiples`` and ``rotations`` random rotations of ``H``.
    """
    center = stencil_hessian(u, node)
    dictionary = [center]
    for k in range(1, multiples + 1):
        dictionary.extend([center.shift(k * shift), center.shift(-k * shift)])
    if rotations:
        rng = np.random.default_rng(seed)
        for frame in random_rotations(rng, u.dim, rotations):
            dictionary.append(SymMat(frame @ center.entries @ frame.T))
    return dictionary


def _touches(
    u: GridFunction,
    node: Sequence[int],
    H: SymMat,
    gradient: NDArray[np.float64],
    ball: list[Node],
    *,
    above: bool,
    tol: float,
) -> bool:
    center = u[node]
    scale = tol * max(1.0, abs(center))
    for offset in ball:
        neighbour = _add(node, offset)
        if not u.is_inside(neighbour):
            continue
        step = u.h * np.asarray(offset, dtype=float)
        quadratic = center + gradient @ step + 0.5 * step @ H.entries @ step
        gap = quadratic - u[neighbour] if above else u[neighbour] - quadratic
        if gap < -scale:
            return False
    return True


def viscosity_test(
    u: GridFunction,
    M: EllipticMapSpec,
    node: Sequence[int],
    dictionary: Sequence[SymMat] | None = None,
    *,
    side: str = "sub",
    constraint: EllipticMapSpec | None = None,
    radius: float = DEFAULT_BALL_RADIUS,
    margin: float = 0.0,
    tol: float = 1e-10,
) -> dict[str, Any] | None:
    """
    Viscosity test of ``u`` at a node against quadratic test functions.

    ``side="sub"``: every quadratic touching ``u`` from above on the lattice
    ball must have its Hessian in Θ(x); with a ``constraint`` map Φ only
    Hessians in Φ(x) are tested. ``side="super"``: every quadratic touching
    from below must have its Hessian outside the interior of Θ(x).

    Returns ``None`` on success and a witness otherwise.
    """
    if side not in ("sub", "super"):
        raise InvalidParameterException(
            "side", side, "expected 'sub' or 'super'"
        )
    if dictionary is None:
        dictionary = hessian_dictionary(u, node)
    if not dictionary:
        raise InvalidParameterException("dictionary", dictionary, "is empty")
    if not u.is_interior(node):
        raise StencilOutOfDomainException(node)

    x = u.position(node)
    theta = M.at(x)
    admissible = constraint.at(x) if constraint is not None else None
    gradient = stencil_gradient(u, node)
    ball = lattice_ball(u.dim, radius)

    for H in dictionary:
        above = side == "sub"
        if not _touches(u, node, H, gradient, ball, above=above, tol=tol):
            continue
        if side == "sub":
            if admissible is not None and not admissible.contains(H):
                continue
            ok = theta.contains(H.shift(margin))
        else:
            ok = not interior_contains(theta, H, max(margin, DEFAULT_EPS))
        if not ok:
            return {"node": list(node), "x": x, "H": H, "side": side}
    return None


def theta_subharmonic_test(
    u: GridFunction,
    M: EllipticMapSpec,
    node: Sequence[int],
    dictionary: Sequence[SymMat] | None = None,
    *,
    radius: float = DEFAULT_BALL_RADIUS,
    margin: float = 0.0,
    tol: float = 1e-10,
) -> dict[str, Any] | None:
    """Θ-subharmonicity at a node: the upper viscosity test without constraint."""
    return viscosity_test(
        u,
        M,
        node,
        dictionary,
        side="sub",
        radius=radius,
        margin=margin,
        tol=tol,
    )


def sup_convolution(
    u: GridFunction, eps: float, reach: float | None = None
) -> GridFunction:
    """
    ``u^ε(x) = max_z u(x − z) − |z|²/ε`` over lattice shifts ``z``.

    ``u`` is extended by ``−∞`` off the grid mask. Without ``reach``, every
    shift that could realize the maximum is visited, which makes
    ``u^ε + |·|²/ε`` exactly convex along lattice lines. Those shifts have
    ``|z|² ≤ ε·(max u − min u)`` and never exceed the grid diagonal.

    The cost is one pass over the grid per shift, ``O((reach/h)^N)`` passes.
    A smaller ``reach`` truncates the maximum and still gives ``u^ε ≥ u``.
    """
    if not eps > 0:
        raise InvalidParameterException("eps", eps, "must be positive")
    inside = u.mask != OUTSIDE
    finite = u.values[inside]
    if reach is None:
        spread = float(finite.max() - finite.min())
        diagonal = u.h * math.hypot(*(n - 1 for n in u.shape))
        reach = min(math.sqrt(eps * spread) + u.h, diagonal)
    elif not reach >= 0:
        raise InvalidParameterException("reach", reach, "must be nonnegative")
    steps = int(reach // u.h)
    LOGGER.debug("sup-convolution over shifts of reach %.3g", reach)

    padded = np.pad(u.values, steps, constant_values=NEG_INF)
    result = np.full(u.shape, NEG_INF)
    for offset in itertools.product(range(-steps, steps + 1), repeat=u.dim):
        distance = u.h**2 * sum(v * v for v in offset)
        if distance > reach**2 + 1e-12:
            continue
        window = tuple(
            slice(steps - z, steps - z + n) for z, n in zip(offset, u.shape)
        )
        np.maximum(result, padded[window] - distance / eps, out=result)

    result = np.maximum(result, NEG_INF)
    result[~inside] = NEG_INF
    return u.with_values(result)


def slodkowski_K(
    u: GridFunction,
    node: Sequence[int],
    eps_ladder: Sequence[float],
    radius: int = 3,
) -> float:
    """
    Discrete ``limsup_{ε→0} 2ε⁻² max_{|y|=1} {u(x + εy) − u(x) − ε⟨Du(x), y⟩}``.

    Directions are the primitive lattice directions of max-norm ``radius``,
    in both orientations; each ``ε`` is rounded to a lattice multiple along
    the direction. The limsup is the largest value over the smaller half of
    the ladder.
    """
    if not eps_ladder:
        raise InvalidParameterException("eps_ladder", eps_ladder, "is empty")
    if any(not eps > 0 for eps in eps_ladder):
        raise InvalidParameterException(
            "eps_ladder", eps_ladder, "must be positive"
        )

    gradient = stencil_gradient(u, node)
    center = u[node]
    directions = lattice_directions(u.dim, radius)
    ladder = sorted(eps_ladder)
    tail = ladder[: max(1, math.ceil(len(ladder) / 2))]

    best = -math.inf
    for eps in tail:
        for direction in directions:
            for sign in (1, -1):
                vector = sign * np.asarray(direction, dtype=float)
                length = u.h * float(np.linalg.norm(vector))
                multiple = max(1, round(eps / length))
                offset = (sign * np.asarray(direction)).tolist()
                target = _add(node, offset, multiple)
                if not u.is_inside(target):
                    continue
                step = multiple * length
                unit = vector / np.linalg.norm(vector)
                value = u[target] - center - step * float(gradient @ unit)
                best = max(best, 2 * value / step**2)

    if best == -math.inf:
        raise StencilOutOfDomainException(node)
    return best


@dataclass(frozen=True)
class ComparisonViolation:
    """A node where ``u > w + tol`` and the subaffine witness for ``u − w``."""

    node: Node
    excess: float
    contact: ContactTriple | None

    def to_dict(self) -> dict[str, Any]:
        return {
            "node": list(self.node),
            "excess": self.excess,
            "contact": self.contact.to_dict() if self.contact else None,
        }


def _inner_box(u: GridFunction, node: Node) -> tuple[Node, Node]:
    lower, upper = list(node), list(node)
    grown = True
    while grown:
        grown = False
        for axis in range(u.dim):
            for bound, step in ((lower, -1), (upper, 1)):
                bound[axis] += step
                if all(u.is_inside(n) for n in _box_nodes(lower, upper)):
                    grown = True
                else:
                    bound[axis] -= step
    return tuple(lower), tuple(upper)


def _stencil_fits(u: GridFunction, node: Node) -> bool:
    return all(
        u.is_inside(_add(node, offset)) for offset in lattice_ball(u.dim, 1.5)
    )


def comparison_harness(
    u: GridFunction,
    w: GridFunction,
    M: EllipticMapSpec,
    *,
    tol: float = 1e-8,
    check_preconditions: bool = True,
    dual_eps: float = DEFAULT_EPS,
    margin: float = 0.0,
) -> ComparisonViolation | None:
    """
    Check ``u ≤ w`` inside given ``u ≤ w`` on the boundary nodes.

    With ``check_preconditions``, ``u`` must pass the Θ test and ``−w`` the
    Θ̃ test at every interior node whose stencil fits in the grid; failures
    raise :class:`PreconditionException`, distinct from a comparison
    violation, which is returned.
    """
    u._check_compatible(w)
    boundary = u.mask == BOUNDARY
    excess = u.values[boundary] - w.values[boundary]
    if excess.size and float(np.max(excess)) > tol:
        raise PreconditionException(
            f"boundary ordering fails by {float(np.max(excess)):.3e}"
        )

    if check_preconditions:
        dual_map = M.dual(dual_eps)
        negated = -w
        for node in u.interior_nodes():
            if not _stencil_fits(u, node):
                continue
            if theta_subharmonic_test(u, M, node, margin=margin) is not None:
                raise PreconditionException(
                    f"u is not Θ-subharmonic at node {list(node)}"
                )
            if theta_subharmonic_test(negated, dual_map, node, margin=margin):
                raise PreconditionException(
                    f"-w is not dual-subharmonic at node {list(node)}"
                )

    difference = u - w
    interior = u.mask == INTERIOR
    masked = np.where(interior, difference.values, -np.inf)
    worst = int(np.argmax(masked))
    largest = float(masked.reshape(-1)[worst])
    if largest <= tol:
        return None

    node = tuple(int(i) for i in np.unravel_index(worst, u.shape))
    region = _inner_box(u, node)
    contact = None
    if all(b - a >= 2 for a, b in zip(*region)):
        contact = subaffine_check(difference, region)
    return ComparisonViolation(node, largest, contact)
