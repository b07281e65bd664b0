"""
Perron-style Dirichlet solver for branch equations on grids.

The discretization is a wide-stencil monotone scheme. Along every lattice
direction ``y`` of the stencil, the second difference ``Δ_y u(x)`` (with
unequal arms where the stencil is cut back at ∂Ω) approximates
``⟨D²u(x)y, y⟩``. Each operator combines these differences over the
orthogonal lattice frames of the stencil. Every interior node is then
relaxed to the root of its nodewise equation, neighbours frozen, starting
from a maximum of boundary barriers, until no node moves by more than the
tolerance.
"""

from __future__ import annotations

import abc
import csv
import dataclasses
import io
import itertools
import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any, Sequence

import numpy as np
from scipy.optimize import nnls

from ._branches import (
    BellmanMA,
    BranchSpec,
    KthEigenvalue,
    LinearTrace,
    MongeAmpere,
    OperatorSpec,
    PerturbedMA,
    PucciMinus,
    PucciPlus,
    TruncatedLinear,
    branch_condition_check,
    nondegeneracy_check,
)
from ._ellset import (
    DEFAULT_C_MAX,
    DEFAULT_EPS_GRID,
    EllipticMapSpec,
    EllipticSetSpec,
    cone_certificate,
    uusc_check,
)
from ._exceptions import (
    ConditionFailedException,
    InvalidParameterException,
    NonConvergenceException,
    PreconditionException,
    StencilOutOfDomainException,
    UnsupportedOperationException,
)
from ._io import atomic_write
from ._reports import ConditionReport, Verdict, to_jsonable
from ._sampling import SamplerSpec
from ._symcore import SymMat, outer
from ._timing import format_timedelta, get_timedelta_since
from ._weaksol import (
    BOUNDARY,
    INTERIOR,
    GridFunction,
    comparison_harness,
    lattice_directions,
)

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from ._domains import DomainSpec
    from ._fields import ScalarField

LOGGER = logging.getLogger(__name__)

DEFAULT_STENCIL_RADIUS = 2
DEFAULT_ALPHA_GRID = (0.0, 1.0, 10.0, 100.0, 1000.0)
BARRIER_COUNT = 16
PROGRESS_EVERY = 500
MODES = ("colored", "sequential")

_BISECTION_STEPS = 100
_NNLS_TOL = 1e-8
_MIN_ARM_FRACTION = 1e-6


def orthogonal_frames(
    directions: Sequence[Sequence[int]],
) -> list[tuple[int, ...]]:
    """
    Index tuples of pairwise orthogonal directions spanning ℝᴺ.

    Frames are listed in lexicographic order of their indices.
    """
    vectors = np.asarray(directions, dtype=int)
    dim = vectors.shape[1]
    gram = vectors @ vectors.T
    frames: list[tuple[int, ...]] = []

    def extend(frame: list[int]) -> None:
        if len(frame) == dim:
            frames.append(tuple(frame))
            return
        start = frame[-1] + 1 if frame else 0
        for index in range(start, len(vectors)):
            if all(gram[other, index] == 0 for other in frame):
                extend([*frame, index])

    extend([])
    return frames


@dataclass
class Stencil:
    """
    Arms of every interior node along the lattice directions.

    ``neighbours[n, j, s]`` is the interior row read by the arm of node ``n``
    along ``±directions[j]`` (``s = 0`` for ``+``), or ``-1`` when the arm
    reads the fixed value ``fixed[n, j, s]`` instead. Arms ending on a
    boundary-layer node keep their full length and read that node's value;
    arms going further are cut back to ∂Ω and read the boundary data at the
    crossing.
    """

    grid: GridFunction
    directions: list[tuple[int, ...]]
    nodes: NDArray[np.intp]
    neighbours: NDArray[np.intp]
    fixed: NDArray[np.float64]
    lengths: NDArray[np.float64]
    frames: NDArray[np.intp]

    @property
    def size(self) -> int:
        return int(self.nodes.shape[0])

    @property
    def positions(self) -> NDArray[np.float64]:
        return self.grid.origin + self.grid.h * self.nodes

    @property
    def units(self) -> NDArray[np.float64]:
        vectors = np.asarray(self.directions, dtype=float)
        return vectors / np.linalg.norm(vectors, axis=1, keepdims=True)

    @property
    def beta(self) -> NDArray[np.float64]:
        return 2 / (self.lengths[..., 0] * self.lengths[..., 1])

    def row_of(self, node: Sequence[int]) -> int:
        matches = np.nonzero(np.all(self.nodes == np.asarray(node), axis=1))[0]
        if matches.size == 0:
            raise StencilOutOfDomainException(node)
        return int(matches[0])

    def alpha(
        self, values: NDArray[np.float64], rows: NDArray[np.intp]
    ) -> NDArray[np.float64]:
        """
        The part of ``Δ_y u`` not involving the centre value.

        ``Δ_y u(x) = alpha − beta·u(x)``.
        """
        neighbours = self.neighbours[rows]
        arms = np.where(neighbours >= 0, values[neighbours], self.fixed[rows])
        lengths = self.lengths[rows]
        plus, minus = lengths[..., 0], lengths[..., 1]
        scale = 2 / (plus + minus)
        return scale * (arms[..., 0] / plus + arms[..., 1] / minus)

    def second_differences(
        self, values: NDArray[np.float64], rows: NDArray[np.intp]
    ) -> NDArray[np.float64]:
        return self.alpha(values, rows) - self.beta[rows] * values[rows, None]

    def interior_values(self, u: GridFunction) -> NDArray[np.float64]:
        return u.values[tuple(self.nodes.T)]

    def colours(self, mode: str) -> list[NDArray[np.intp]]:
        """
        Update classes: neighbour-disjoint colour classes, or single nodes in
        lexicographic order.
        """
        if mode == "sequential":
            return [np.array([row]) for row in range(self.size)]
        period = max(max(abs(v) for v in d) for d in self.directions) + 1
        labels = np.zeros(self.size, dtype=int)
        for axis in range(self.grid.dim):
            labels = labels * period + self.nodes[:, axis] % period
        return [np.nonzero(labels == label)[0] for label in np.unique(labels)]


def build_stencil(
    grid: GridFunction,
    domain: DomainSpec | None = None,
    boundary: ScalarField | None = None,
    radius: int = DEFAULT_STENCIL_RADIUS,
) -> Stencil:
    """
    Arms for every interior node of ``grid``.

    Without a ``domain``, arms leaving the boundary layer cannot be cut back
    and are marked unusable (``nan``).
    """
    if (domain is None) != (boundary is None):
        raise InvalidParameterException(
            "boundary", boundary, "domain and boundary data go together"
        )
    directions = lattice_directions(grid.dim, radius)
    nodes = np.array(list(grid.interior_nodes()), dtype=np.intp)
    lookup = np.full(grid.shape, -1, dtype=np.intp)
    lookup[tuple(nodes.T)] = np.arange(nodes.shape[0])
    positions = grid.origin + grid.h * nodes
    shape = np.asarray(grid.shape)

    count = nodes.shape[0]
    neighbours = np.full((count, len(directions), 2), -1, dtype=np.intp)
    fixed = np.zeros((count, len(directions), 2))
    lengths = np.zeros((count, len(directions), 2))
    cut_points: list[NDArray[np.float64]] = []
    cut_slots: list[tuple[int, int, int]] = []

    for j, direction in enumerate(directions):
        step = np.asarray(direction, dtype=np.intp)
        full = grid.h * float(np.linalg.norm(step))
        for side, sign in enumerate((1, -1)):
            targets = nodes + sign * step
            in_grid = np.all((targets >= 0) & (targets < shape), axis=1)
            codes = np.zeros(count, dtype=np.int8)
            codes[in_grid] = grid.mask[tuple(targets[in_grid].T)]
            lengths[:, j, side] = full

            interior = codes == INTERIOR
            neighbours[interior, j, side] = lookup[tuple(targets[interior].T)]
            layer = codes == BOUNDARY
            fixed[layer, j, side] = grid.values[tuple(targets[layer].T)]

            for row in np.nonzero(~interior & ~layer)[0]:
                if domain is None:
                    fixed[row, j, side] = np.nan
                    continue
                offset = sign * grid.h * step
                t = max(
                    domain.ray_exit(positions[row], offset), _MIN_ARM_FRACTION
                )
                lengths[row, j, side] = t * full
                cut_points.append(positions[row] + t * offset)
                cut_slots.append((row, j, side))

    if cut_points and boundary is not None:
        values = boundary.evaluate_many(np.array(cut_points))
        for (row, j, side), value in zip(cut_slots, values):
            fixed[row, j, side] = value
        LOGGER.debug(
            "cut back %d stencil arms to the boundary", len(cut_slots)
        )

    return Stencil(
        grid=grid,
        directions=directions,
        nodes=nodes,
        neighbours=neighbours,
        fixed=fixed,
        lengths=lengths,
        frames=np.array(orthogonal_frames(directions), dtype=np.intp),
    )


def _pucci_terms(
    values: NDArray[np.float64], low: float, high: float
) -> NDArray[np.float64]:
    return low * np.maximum(values, 0) + high * np.minimum(values, 0)


def _piecewise_roots(
    alpha: NDArray[np.float64],
    beta: NDArray[np.float64],
    low: float,
    high: float,
    target: NDArray[np.float64],
) -> NDArray[np.float64]:
    """
    Root in ``u`` of ``Σᵢ g(αᵢ − βᵢu) = target`` per frame, where ``g`` has
    slope ``low`` on the positives and ``high`` on the negatives.

    The left side is piecewise linear and strictly decreasing; the piece
    holding the root is located from its values at the breakpoints.
    """
    breakpoints = alpha / beta
    order = np.argsort(breakpoints, axis=-1)
    breakpoints = np.take_along_axis(breakpoints, order, axis=-1)
    alpha = np.take_along_axis(alpha, order, axis=-1)
    beta = np.take_along_axis(beta, order, axis=-1)
    tau = target[:, None]

    arguments = (
        alpha[..., None, :] - beta[..., None, :] * breakpoints[..., :, None]
    )
    at_breakpoints = (
        _pucci_terms(arguments, low, high).sum(axis=-1) - tau[..., None]
    )
    piece = np.sum(at_breakpoints > 0, axis=-1)

    index = np.arange(alpha.shape[-1])
    coefficients = np.where(index >= piece[..., None], low, high)
    return (np.sum(coefficients * alpha, axis=-1) - tau) / np.sum(
        coefficients * beta, axis=-1
    )


def _product_roots(
    alpha: NDArray[np.float64],
    beta: NDArray[np.float64],
    target: NDArray[np.float64],
) -> NDArray[np.float64]:
    """
    Largest root in ``u`` of ``Πᵢ (αᵢ − βᵢu)⁺ = target`` per frame.

    With ``target ≤ 0`` every ``u`` up to ``min αᵢ/βᵢ`` solves the equation
    and that end point is returned.
    """
    ends = alpha / beta
    top = ends.min(axis=-1)
    tau = np.maximum(target, 0)[:, None]
    dim = alpha.shape[-1]

    if dim == 1:
        roots = top - tau / beta[..., 0]
    elif dim == 2:
        first, second = ends[..., 0], ends[..., 1]
        scale = beta[..., 0] * beta[..., 1]
        roots = (
            first + second - np.sqrt((first - second) ** 2 + 4 * tau / scale)
        ) / 2
    else:
        lower = top - (tau / np.prod(beta, axis=-1)) ** (1 / dim)
        upper = top.copy()
        for _ in range(_BISECTION_STEPS):
            middle = (lower + upper) / 2
            product = np.prod(
                beta * np.maximum(ends - middle[..., None], 0), axis=-1
            )
            above = product >= tau
            lower = np.where(above, middle, lower)
            upper = np.where(above, upper, middle)
        roots = lower
    return np.where(tau > 0, roots, top)


class Scheme(abc.ABC):
    """A monotone discretization of one operator on one stencil."""

    def __init__(self, stencil: Stencil, op: OperatorSpec) -> None:
        self.stencil = stencil
        self.operator = op
        self.rhs = op.f.evaluate_many(stencil.positions)

    @abc.abstractmethod
    def value(
        self, rows: NDArray[np.intp], differences: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        """The discrete operator given the second differences of the rows."""

    @abc.abstractmethod
    def roots(
        self, rows: NDArray[np.intp], alpha: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        """Centre values zeroing the discrete operator, neighbours frozen."""

    def relax(
        self, values: NDArray[np.float64], rows: NDArray[np.intp]
    ) -> NDArray[np.float64]:
        return self.roots(rows, self.stencil.alpha(values, rows))

    def evaluate(
        self, values: NDArray[np.float64], rows: NDArray[np.intp]
    ) -> NDArray[np.float64]:
        return self.value(rows, self.stencil.second_differences(values, rows))


class KthEigenvalueScheme(Scheme):
    """
    Courant-Fischer over the stencil: ``λ_k ≈ max_V min_{y ∈ V} Δ_y u``,
    with ``V`` the spans of ``N − k + 1`` directions of an orthogonal frame,
    and the minimum over every stencil direction lying in ``V``.
    """

    operator: KthEigenvalue

    def __init__(self, stencil: Stencil, op: KthEigenvalue) -> None:
        super().__init__(stencil, op)
        units = stencil.units
        size = op.size - op.k + 1
        spans: dict[tuple[bool, ...], None] = {}
        for frame in stencil.frames:
            for subset in itertools.combinations(frame, size):
                basis = units[list(subset)]
                projected = units @ basis.T
                inside = np.abs(np.sum(projected**2, axis=1) - 1) < 1e-12
                spans.setdefault(tuple(bool(v) for v in inside), None)
        self.members = np.array(list(spans), dtype=bool)

    def _max_min(self, array: NDArray[np.float64]) -> NDArray[np.float64]:
        restricted = np.where(self.members[None], array[:, None, :], np.inf)
        return restricted.min(axis=-1).max(axis=-1)

    def value(
        self, rows: NDArray[np.intp], differences: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        return self._max_min(differences) - self.rhs[rows]

    def roots(
        self, rows: NDArray[np.intp], alpha: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        return self._max_min(
            (alpha - self.rhs[rows, None]) / self.stencil.beta[rows]
        )


class DeterminantScheme(Scheme):
    """
    ``det(A + M) ≈ min over frames of Πᵢ (Δ_{yᵢ}u + yᵢᵀMyᵢ)⁺``.

    Monge-Ampère compares the product itself with ``f``; the perturbed and
    Bellman kinds compare its ``N``-th root, so their target is ``(f⁺)ᴺ``.
    """

    def __init__(self, stencil: Stencil, op: OperatorSpec) -> None:
        super().__init__(stencil, op)
        dim = stencil.grid.dim
        if isinstance(op, MongeAmpere):
            self.offsets = np.zeros((stencil.size, len(stencil.directions)))
            self.power = 1
            self.target = self.rhs
        else:
            assert isinstance(op, (PerturbedMA, BellmanMA))
            matrices = op.offset.at_many(stencil.positions)
            units = stencil.units
            self.offsets = np.einsum("nab,da,db->nd", matrices, units, units)
            self.power = dim
            self.target = np.maximum(self.rhs, 0) ** dim

    def value(
        self, rows: NDArray[np.intp], differences: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        shifted = np.maximum(differences + self.offsets[rows], 0)
        products = np.prod(shifted[:, self.stencil.frames], axis=-1)
        products = products.min(axis=-1)
        if self.power == 1:
            return products - self.rhs[rows]
        return products ** (1 / self.power) - self.rhs[rows]

    def roots(
        self, rows: NDArray[np.intp], alpha: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        frames = self.stencil.frames
        shifted = (alpha + self.offsets[rows])[:, frames]
        beta = self.stencil.beta[rows][:, frames]
        return _product_roots(shifted, beta, self.target[rows]).min(axis=-1)


class PucciScheme(Scheme):
    """
    Pucci's extremal operators over frames: ``Σᵢ g(Δ_{yᵢ}u)`` minimized over
    frames for the minimal operator and maximized for the maximal one.
    """

    def __init__(
        self,
        stencil: Stencil,
        op: OperatorSpec,
        low: float,
        high: float,
        *,
        minimize: bool,
        shift: float = 0.0,
        rhs: NDArray[np.float64] | None = None,
    ) -> None:
        super().__init__(stencil, op)
        self.low = low
        self.high = high
        self.minimize = minimize
        if rhs is not None:
            self.rhs = rhs
        self.target = self.rhs - shift

    def _extreme(self, array: NDArray[np.float64]) -> NDArray[np.float64]:
        return array.min(axis=-1) if self.minimize else array.max(axis=-1)

    def value(
        self, rows: NDArray[np.intp], differences: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        frames = differences[:, self.stencil.frames]
        sums = _pucci_terms(frames, self.low, self.high).sum(axis=-1)
        return self._extreme(sums) - self.target[rows]

    def roots(
        self, rows: NDArray[np.intp], alpha: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        frames = self.stencil.frames
        return self._extreme(
            _piecewise_roots(
                alpha[:, frames],
                self.stencil.beta[rows][:, frames],
                self.low,
                self.high,
                self.target[rows],
            )
        )


def linear_weights(stencil: Stencil, field: Any) -> NDArray[np.float64]:
    """
    Nonnegative ``w`` with ``a(x) = Σ_y w_y yyᵀ`` at every node, from
    nonnegative least squares.
    """
    units = stencil.units
    dim = units.shape[1]
    upper = np.triu_indices(dim)
    design = np.stack([np.outer(y, y)[upper] for y in units], axis=1)
    matrices = field.at_many(stencil.positions)

    weights = np.zeros((stencil.size, len(stencil.directions)))
    for row, matrix in enumerate(matrices):
        solution, residual = nnls(design, matrix[upper])
        if residual > _NNLS_TOL * max(1.0, float(np.max(np.abs(matrix)))):
            raise InvalidParameterException(
                "stencil_radius",
                len(stencil.directions),
                f"a(x) at x={stencil.positions[row].tolist()} is not a"
                " nonnegative combination of stencil directions",
            )
        if not np.any(solution > 0):
            raise InvalidParameterException(
                "a", matrix.tolist(), "must be positive definite"
            )
        weights[row] = solution
    return weights


class LinearScheme(Scheme):
    """``tr(a(x)D²u) ≈ Σ_y w_y(x) Δ_y u`` with nonnegative weights."""

    def __init__(
        self, stencil: Stencil, op: LinearTrace | TruncatedLinear
    ) -> None:
        super().__init__(stencil, op)
        self.weights = linear_weights(stencil, op.a)

    def value(
        self, rows: NDArray[np.intp], differences: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        weighted = np.sum(self.weights[rows] * differences, axis=-1)
        return weighted - self.rhs[rows]

    def roots(
        self, rows: NDArray[np.intp], alpha: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        weights = self.weights[rows]
        return (np.sum(weights * alpha, axis=-1) - self.rhs[rows]) / np.sum(
            weights * self.stencil.beta[rows], axis=-1
        )


class TruncatedScheme(Scheme):
    """Minimum of the linear scheme and Pucci's ``𝓜⁻_{λ/2,Λ} + h``."""

    operator: TruncatedLinear

    def __init__(self, stencil: Stencil, op: TruncatedLinear) -> None:
        super().__init__(stencil, op)
        self.linear = LinearScheme(stencil, op)
        self.truncation = PucciScheme(
            stencil,
            op,
            op.lam / 2,
            op.Lam,
            minimize=True,
            shift=op.h,
            rhs=np.zeros(stencil.size),
        )

    def value(
        self, rows: NDArray[np.intp], differences: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        return np.minimum(
            self.linear.value(rows, differences),
            self.truncation.value(rows, differences),
        )

    def roots(
        self, rows: NDArray[np.intp], alpha: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        return np.minimum(
            self.linear.roots(rows, alpha), self.truncation.roots(rows, alpha)
        )


def make_scheme(op: OperatorSpec, stencil: Stencil) -> Scheme:
    if op.dim != stencil.grid.dim:
        raise InvalidParameterException(
            "operator",
            op.kind,
            f"is {op.dim}-dimensional on a {stencil.grid.dim}-D grid",
        )
    if isinstance(op, KthEigenvalue):
        return KthEigenvalueScheme(stencil, op)
    if isinstance(op, (MongeAmpere, PerturbedMA, BellmanMA)):
        return DeterminantScheme(stencil, op)
    if isinstance(op, PucciMinus):
        return PucciScheme(stencil, op, op.lam, op.Lam, minimize=True)
    if isinstance(op, PucciPlus):
        return PucciScheme(stencil, op, op.Lam, op.lam, minimize=False)
    if isinstance(op, LinearTrace):
        return LinearScheme(stencil, op)
    if isinstance(op, TruncatedLinear):
        return TruncatedScheme(stencil, op)
    raise UnsupportedOperationException(
        f"No discretization for operator {op.kind}"
    )


def discrete_operator(
    branch: BranchSpec,
    u: GridFunction,
    node: Sequence[int],
    stencil: Stencil | None = None,
) -> float:
    """
    Value of the discrete operator of ``branch`` at an interior node of ``u``.

    Without an explicit stencil, arms read ``u`` on the boundary layer and
    must not leave it.
    """
    if stencil is None:
        stencil = build_stencil(u)
    row = stencil.row_of(node)
    rows = np.array([row])
    if np.any(np.isnan(stencil.fixed[row])):
        raise StencilOutOfDomainException(node)
    scheme = make_scheme(branch.operator, stencil)
    return float(scheme.evaluate(stencil.interior_values(u), rows)[0])


@dataclass(frozen=True)
class Barrier:
    """
    ``level + sign·(C(ρ(x) − ε|x − x₀|²) − δ)``.

    With ``sign = 1`` a subsolution below the boundary data, with
    ``sign = −1`` a supersolution above it.
    """

    domain: DomainSpec
    anchor: tuple[float, ...]
    level: float
    C: float
    eps: float
    delta: float = 0.0
    sign: int = 1

    def evaluate_many(
        self, points: NDArray[np.float64]
    ) -> NDArray[np.float64]:
        distances = np.sum((points - np.asarray(self.anchor)) ** 2, axis=1)
        inner = self.C * (self.domain.rho_many(points) - self.eps * distances)
        return self.level + self.sign * (inner - self.delta)

    def __call__(self, x: ArrayLike) -> float:
        points = np.atleast_2d(np.asarray(x, dtype=float))
        return float(self.evaluate_many(points)[0])

    def hessian(self, x: ArrayLike) -> SymMat:
        hessian = self.domain.hessian(x).shift(-2 * self.eps)
        return hessian * (self.sign * self.C)

    def to_dict(self) -> dict[str, Any]:
        return {
            "anchor": list(self.anchor),
            "level": self.level,
            "C": self.C,
            "eps": self.eps,
            "delta": self.delta,
            "side": "lower" if self.sign > 0 else "upper",
        }


def barrier_constant(
    domain: DomainSpec,
    theta: EllipticMapSpec,
    eps: float,
    sampler: SamplerSpec,
    *,
    upper: bool = False,
) -> float:
    """
    Smallest certified ``R`` with ``C(D²ρ − 2εI)`` in Θ(x), or in the dual
    Θ̃(x) when ``upper``, for ``C ≥ R`` at sampled interior points.
    """
    if not eps > 0:
        raise InvalidParameterException("eps", eps, "must be positive")
    points = domain.sample_interior(sampler.rng(1), min(sampler.count, 64))
    largest = 0.0
    for x in points:
        fibre = theta.at(x)
        if upper:
            fibre = fibre.dual()
        certificate = cone_certificate(
            fibre, domain.hessian(x).shift(-2 * eps)
        )
        if certificate is None:
            raise PreconditionException(
                f"no barrier constant certifies D²ρ − 2εI at x={x.tolist()}"
                f" (eps={eps})"
            )
        largest = max(largest, certificate[1])
    return largest


def barrier(
    domain: DomainSpec,
    x0: ArrayLike,
    C: float,
    eps: float,
    *,
    level: float = 0.0,
    delta: float = 0.0,
    upper: bool = False,
    theta: EllipticMapSpec | None = None,
    sampler: SamplerSpec | None = None,
) -> Barrier:
    """
    The barrier ``C(ρ − ε|x − x₀|²)`` anchored at a boundary point.

    With ``theta``, ``C`` is checked against the certified constant.
    """
    if not eps > 0:
        raise InvalidParameterException("eps", eps, "must be positive")
    if not C > 0:
        raise InvalidParameterException("C", C, "must be positive")
    if theta is not None:
        certified = barrier_constant(
            domain, theta, eps, sampler or SamplerSpec(count=64), upper=upper
        )
        if C < certified:
            raise InvalidParameterException(
                "C", C, f"is below the certified constant {certified:.6g}"
            )
    anchor = tuple(float(v) for v in np.asarray(x0, dtype=float))
    return Barrier(domain, anchor, level, C, eps, delta, -1 if upper else 1)


def boundary_barriers(
    problem: DirichletProblem,
    sampler: SamplerSpec,
    *,
    upper: bool = False,
) -> list[Barrier]:
    """
    Barriers at :data:`BARRIER_COUNT` sampled boundary points, below (or
    above) the boundary data on ∂Ω.
    """
    domain = problem.domain
    certified = barrier_constant(
        domain, problem.branch.theta, problem.barrier_eps, sampler, upper=upper
    )
    slope = problem.boundary.lipschitz(domain.radius_bound)
    C = max(
        certified,
        slope**2 / (4 * problem.barrier_delta * problem.barrier_eps),
        1e-12,
    )
    anchors = domain.sample_boundary(sampler.rng(2), BARRIER_COUNT)
    levels = problem.boundary.evaluate_many(anchors)
    return [
        barrier(
            domain,
            anchor,
            C,
            problem.barrier_eps,
            level=float(level),
            delta=problem.barrier_delta,
            upper=upper,
        )
        for anchor, level in zip(anchors, levels)
    ]


def convexity_check(
    domain: DomainSpec,
    cone: EllipticSetSpec | EllipticMapSpec,
    sampler: SamplerSpec,
    alpha_grid: Sequence[float] = DEFAULT_ALPHA_GRID,
    *,
    C_max: float = DEFAULT_C_MAX,
) -> ConditionReport:
    """
    Strict boundary convexity: at every boundary sample, some ``α`` puts
    ``D²ρ + α·Dρ⊗Dρ`` in the interior of the cone.

    A certificate needing a scale within a decade of ``C_max`` is
    inconclusive and yields :attr:`Verdict.PASS_UP_TO_CAP`.
    """
    if not alpha_grid:
        raise InvalidParameterException("alpha_grid", alpha_grid, "is empty")

    def run_chunk(
        offset: int, count: int, rng: np.random.Generator
    ) -> tuple[dict[str, Any] | None, float]:
        largest = 0.0
        for index, x in enumerate(domain.sample_boundary(rng, count)):
            fibre = cone.at(x) if isinstance(cone, EllipticMapSpec) else cone
            hessian = domain.hessian(x)
            gradient = domain.gradient(x)
            normal = outer(gradient, gradient)
            for alpha in alpha_grid:
                certificate = cone_certificate(
                    fibre, hessian + normal * alpha, DEFAULT_EPS_GRID, C_max
                )
                if certificate is not None:
                    largest = max(largest, certificate[1])
                    break
            else:
                witness = {
                    "sample": offset + index,
                    "x": x,
                    "hessian": hessian,
                    "gradient": gradient,
                    "alpha_grid": list(alpha_grid),
                }
                return witness, largest
        return None, largest

    outcomes = sampler.map_chunks(run_chunk)
    witnesses = [witness for witness, _ in outcomes if witness is not None]
    largest = max(scale for _, scale in outcomes)
    if witnesses:
        verdict = Verdict.FAIL
    elif largest >= C_max / 10:
        verdict = Verdict.PASS_UP_TO_CAP
    else:
        verdict = Verdict.PASS
    return ConditionReport(
        check="boundary-convexity",
        verdict=verdict,
        witness=witnesses[0] if witnesses else None,
        samples_used=sampler.count,
        parameters={"alpha_grid": list(alpha_grid), "C_max": C_max},
        details={"largest_scale": largest},
    )


@dataclass(frozen=True)
class CheckSettings:
    """Parameters of the preflight condition checks."""

    uusc_eps: float = 0.5
    uusc_delta: float = 0.25
    nondegeneracy_eps: float = 1e-3
    alpha_grid: tuple[float, ...] = DEFAULT_ALPHA_GRID


@dataclass(frozen=True)
class DirichletProblem:
    """
    ``F(x, D²u) = 0`` in Ω with ``u = φ`` on ∂Ω, on a lattice of spacing ``h``.

    :param branch: the branch whose harmonic functions are sought.
    :param boundary: the boundary data φ, defined on all of ℝᴺ.
    :param h: lattice spacing.
    :param tol: the iteration stops once no node moves by more than this.
    :param max_sweeps: sweeps before giving up.
    :param stencil_radius: largest coordinate of the stencil directions.
    :param mode: ``"colored"`` (vectorized colour classes) or ``"sequential"``.
    :param boundary_values: φ on boundary-layer nodes at the node itself
        (``"node"``) or at its projection on ∂Ω (``"projection"``).
    :param barrier_eps: ``ε`` of the initial barriers.
    :param barrier_delta: gap ``δ`` between barriers and boundary data.
    :param reference: exact solution, when known.
    :param preflight: run the condition checks before solving.
    :param checks: parameters of the condition checks.
    :param seed: root seed for every sampled quantity.
    """

    branch: BranchSpec
    boundary: ScalarField
    h: float
    tol: float = 1e-10
    max_sweeps: int = 20_000
    stencil_radius: int = DEFAULT_STENCIL_RADIUS
    mode: str = "colored"
    boundary_values: str = "projection"
    barrier_eps: float = 0.1
    barrier_delta: float = 0.01
    reference: ScalarField | None = None
    preflight: bool = True
    checks: CheckSettings = field(default_factory=CheckSettings)
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("h", "tol", "barrier_eps", "barrier_delta"):
            if not getattr(self, name) > 0:
                raise InvalidParameterException(
                    name, getattr(self, name), "must be positive"
                )
        if self.max_sweeps < 1:
            raise InvalidParameterException(
                "max_sweeps", self.max_sweeps, "must be at least 1"
            )
        if self.mode not in MODES:
            raise InvalidParameterException(
                "mode", self.mode, f"expected one of {', '.join(MODES)}"
            )
        origin = np.zeros((1, self.branch.dim))
        if self.boundary.evaluate_many(origin).shape != (1,):
            raise InvalidParameterException(
                "boundary", self.boundary, "must be a scalar field"
            )

    @property
    def domain(self) -> DomainSpec:
        return self.branch.domain

    def replace(self, **changes: Any) -> DirichletProblem:
        return dataclasses.replace(self, **changes)

    def grid(self) -> GridFunction:
        return GridFunction.from_domain(
            self.domain,
            self.h,
            self.boundary,
            boundary_values=self.boundary_values,
        )

    def to_dict(self) -> dict[str, Any]:
        return {
            "branch": self.branch.to_dict(),
            "boundary": self.boundary.to_dict(),
            "h": self.h,
            "tol": self.tol,
            "max_sweeps": self.max_sweeps,
            "stencil_radius": self.stencil_radius,
            "mode": self.mode,
            "boundary_values": self.boundary_values,
            "seed": self.seed,
        }


def preflight(
    problem: DirichletProblem, sampler: SamplerSpec | None = None
) -> dict[str, str]:
    """
    Run the conditions under which the Dirichlet problem is well posed.

    A failing check raises :class:`ConditionFailedException`. Inconclusive
    boundary convexity proceeds with a warning.
    """
    if sampler is None:
        sampler = SamplerSpec(count=256, cap=1e2, seed=problem.seed)
    branch = problem.branch
    settings = problem.checks
    theta = branch.theta

    reports = [
        uusc_check(theta, settings.uusc_eps, settings.uusc_delta, sampler),
        branch_condition_check(branch, sampler),
        nondegeneracy_check(branch, sampler, settings.nondegeneracy_eps),
    ]
    convexity = [
        (
            "convexity",
            convexity_check(
                problem.domain, theta, sampler, settings.alpha_grid
            ),
        ),
        (
            "dual-convexity",
            convexity_check(
                problem.domain, theta.dual(), sampler, settings.alpha_grid
            ),
        ),
    ]

    flags: dict[str, str] = {}
    for name, report in [(r.check, r) for r in reports] + convexity:
        flags[name] = report.verdict.value
        if report.verdict is Verdict.FAIL:
            raise ConditionFailedException(report)
        if report.verdict is Verdict.PASS_UP_TO_CAP and name in (
            "convexity",
            "dual-convexity",
        ):
            LOGGER.warning(
                "Boundary %s is only certified up to the scale cap", name
            )
        LOGGER.debug("preflight %s: %s", name, report.verdict.value)
    return flags


@dataclass
class SolveReport:
    """Summary of a Perron solve; free of timestamps."""

    h: float
    nodes: int
    sweeps: int
    residual: float
    history: list[float]
    flags: dict[str, str] = field(default_factory=dict)
    comparison: bool | None = None
    above_lower_barriers: bool | None = None
    below_upper_barriers: bool | None = None
    max_error: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return to_jsonable(dataclasses.asdict(self))  # type: ignore[no-any-return]


@dataclass
class PerronResult:
    solution: GridFunction
    report: SolveReport
    elapsed: float = 0.0


def _barrier_values(
    barriers: list[Barrier], points: NDArray[np.float64], *, upper: bool
) -> NDArray[np.float64]:
    values = np.array([b.evaluate_many(points) for b in barriers])
    return values.min(axis=0) if upper else values.max(axis=0)


def _initial_values(
    problem: DirichletProblem,
    stencil: Stencil,
    sampler: SamplerSpec,
) -> tuple[NDArray[np.float64], list[Barrier], list[Barrier]]:
    try:
        lower = boundary_barriers(problem, sampler)
    except PreconditionException as exc:
        LOGGER.warning(
            "No lower barrier, starting from the boundary minimum: %s", exc
        )
        boundary = problem.grid()
        floor = float(np.min(boundary.values[boundary.mask == BOUNDARY]))
        return np.full(stencil.size, floor), [], []

    try:
        upper = boundary_barriers(problem, sampler, upper=True)
    except PreconditionException as exc:
        LOGGER.debug("No upper barrier: %s", exc)
        upper = []
    return _barrier_values(lower, stencil.positions, upper=False), lower, upper


def _max_error(
    u: GridFunction, reference: ScalarField | GridFunction
) -> float:
    interior = u.mask == INTERIOR
    if isinstance(reference, GridFunction):
        expected = reference.sample_at(u.positions()[interior])
    else:
        expected = reference.evaluate_many(u.positions()[interior])
    return float(np.nanmax(np.abs(u.values[interior] - expected)))


def perron_solve(
    problem: DirichletProblem, sampler: SamplerSpec | None = None
) -> PerronResult:
    """
    Largest discrete subsolution, reached by monotone relaxation from below.

    Raises :class:`NonConvergenceException`, which carries the update
    history, when ``max_sweeps`` is exhausted.
    """
    start = time.monotonic()
    if sampler is None:
        sampler = SamplerSpec(count=256, cap=1e2, seed=problem.seed)

    flags = preflight(problem, sampler) if problem.preflight else {}
    grid = problem.grid()
    stencil = build_stencil(
        grid, problem.domain, problem.boundary, problem.stencil_radius
    )
    scheme = make_scheme(problem.branch.operator, stencil)
    values, lower, upper = _initial_values(problem, stencil, sampler)
    initial = values.copy()
    colours = stencil.colours(problem.mode)
    LOGGER.debug(
        "solving on %d interior nodes, %d directions, %d colour classes",
        stencil.size,
        len(stencil.directions),
        len(colours),
    )

    history: list[float] = []
    for sweep in range(1, problem.max_sweeps + 1):
        change = 0.0
        for rows in colours:
            updated = scheme.relax(values, rows)
            change = max(change, float(np.max(np.abs(updated - values[rows]))))
            values[rows] = updated
        history.append(change)
        if sweep % PROGRESS_EVERY == 0:
            LOGGER.debug("sweep %d: largest update %.3e", sweep, change)
        if change < problem.tol:
            break
    else:
        raise NonConvergenceException(problem.max_sweeps, history)

    everything = np.arange(stencil.size)
    residual = float(np.max(np.abs(scheme.relax(values, everything) - values)))

    solution_values = grid.values.copy()
    solution_values[tuple(stencil.nodes.T)] = values
    solution = grid.with_values(solution_values)
    start_values = grid.values.copy()
    start_values[tuple(stencil.nodes.T)] = initial
    start_grid = grid.with_values(start_values)

    slack = max(problem.tol, 1e-9) * stencil.size
    report = SolveReport(
        h=problem.h,
        nodes=stencil.size,
        sweeps=len(history),
        residual=residual,
        history=history,
        flags=flags,
        comparison=comparison_harness(
            start_grid,
            solution,
            problem.branch.theta,
            tol=slack,
            check_preconditions=False,
        )
        is None,
    )
    if lower:
        bound = _barrier_values(lower, stencil.positions, upper=False)
        report.above_lower_barriers = bool(np.all(values >= bound - slack))
    if upper:
        bound = _barrier_values(upper, stencil.positions, upper=True)
        report.below_upper_barriers = bool(np.all(values <= bound + slack))
    if problem.reference is not None:
        report.max_error = _max_error(solution, problem.reference)

    elapsed = get_timedelta_since(start)
    LOGGER.info(
        "Solved h=%s in %d sweeps (%s), residual %.3e%s",
        problem.h,
        report.sweeps,
        format_timedelta(elapsed),
        residual,
        (
            ""
            if report.max_error is None
            else f", max error {report.max_error:.3e}"
        ),
    )
    return PerronResult(solution, report, elapsed.total_seconds())


@dataclass(frozen=True)
class ConvergenceRow:
    h: float
    max_error: float
    sweeps: int


def convergence_table(rows: Sequence[ConvergenceRow]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["h", "max_error", "sweeps"])
    for row in rows:
        writer.writerow([repr(row.h), repr(row.max_error), row.sweeps])
    return buffer.getvalue()


def convergence_study(
    problem: DirichletProblem,
    h_ladder: Sequence[float],
    *,
    output: Path | None = None,
    sampler: SamplerSpec | None = None,
) -> list[ConvergenceRow]:
    """
    Solve on every spacing of ``h_ladder`` and measure the error against the
    exact solution, or against the finest solve when none is known.

    Coarse lattices must be sublattices of the finest one for the finest
    solve to serve as reference, as with dyadic ladders.
    """
    if not h_ladder:
        raise InvalidParameterException("h_ladder", h_ladder, "is empty")
    ladder = sorted(h_ladder, reverse=True)
    checked = problem.preflight

    results: dict[float, PerronResult] = {}
    for h in ladder:
        results[h] = perron_solve(
            problem.replace(h=h, preflight=checked), sampler
        )
        checked = False

    reference: ScalarField | GridFunction
    if problem.reference is not None:
        reference = problem.reference
    else:
        reference = results[ladder[-1]].solution

    rows = [
        ConvergenceRow(
            h=h,
            max_error=_max_error(results[h].solution, reference),
            sweeps=results[h].report.sweeps,
        )
        for h in ladder
    ]
    for row in rows:
        LOGGER.info(
            "h=%s: max error %.3e after %d sweeps",
            row.h,
            row.max_error,
            row.sweeps,
        )
    if output is not None:
        atomic_write(output, convergence_table(rows))
    return rows


def is_decreasing(rows: Sequence[ConvergenceRow]) -> bool:
    """Whether the error column strictly decreases as ``h`` shrinks."""
    errors = [row.max_error for row in sorted(rows, key=lambda r: -r.h)]
    if len(errors) == 1:
        return True
    return all(later < earlier for earlier, later in zip(errors, errors[1:]))

