"""
Elliptic subsets of S(N) and elliptic maps x ↦ Θ(x).

Every set here is *elliptic*: stable under addition of positive
semidefinite matrices. The workhorse is :meth:`EllipticSetSpec.min_shift`,
the smallest ``t`` with ``B + tI ∈ S``. Membership, interiors, duals,
distances and boundary sampling are all expressed through it.
"""

from __future__ import annotations

import abc
import logging
import math
from dataclasses import dataclass
from typing import (
    TYPE_CHECKING,
    Any,
    Callable,
    ClassVar,
    Protocol,
    Sequence,
)

import numpy as np

from ._exceptions import (
    BracketException,
    DimensionMismatchException,
    EmptyBranchException,
    InvalidParameterException,
    SamplerExhaustedException,
    UnsupportedOperationException,
)
from ._reports import ConditionReport, Verdict
from ._sampling import SamplerSpec, random_symmetric, sample_pairs
from ._symcore import DEFAULT_TOL, SymMat, as_point, eigenvalues, opnorm

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from ._domains import DomainSpec
    from ._fields import MatrixField

LOGGER = logging.getLogger(__name__)

DEFAULT_EPS = 1e-6
"""Default interiority margin for interior and dual tests."""

DEFAULT_EPS_GRID = (0.1, 0.01, 1e-3, 1e-4)
DEFAULT_C_MAX = 1e6

SHIFT_TOL = 1e-10
"""Step tolerance of the bisection along the identity ray."""

_MAX_BRACKET = 1e12


class BranchOperator(Protocol):
    """What a sublevel branch needs from an operator ``F(x, A)``."""

    kind: ClassVar[str]

    @property
    def dim(self) -> int: ...

    def evaluate(self, x: ArrayLike, A: SymMat) -> float: ...

    def shift_profile(
        self, x: ArrayLike, B: SymMat
    ) -> Callable[[float], float]: ...

    def to_dict(self) -> dict[str, Any]: ...


def _first_nonnegative(
    profile: Callable[[float], float],
    lower: float,
    point: Sequence[float] = (),
) -> float:
    """
    Smallest ``t ≥ lower`` with ``profile(t) ≥ 0`` for a nondecreasing profile.

    The returned value always satisfies ``profile(t) ≥ 0``.
    """
    if math.isinf(lower):
        # Unconstrained: bracket around zero in both directions
        anchor = 0.0
        if profile(anchor) >= 0:
            step = 1.0
            while profile(anchor - step) >= 0:
                step *= 2
                if step > _MAX_BRACKET:
                    raise BracketException(
                        "the set contains −tI for arbitrarily large t"
                    )
            low = anchor - step
            high = anchor - step / 2 if step > 1 else anchor
        else:
            low, high = anchor, anchor + 1.0
    else:
        if profile(lower) >= 0:
            return lower
        low, high = lower, lower + 1.0

    step = high - low
    while profile(high) < 0:
        low = high
        step *= 2
        high = low + step
        if step > _MAX_BRACKET:
            raise EmptyBranchException(point)

    while high - low > SHIFT_TOL * max(1.0, abs(high)):
        middle = (low + high) / 2
        if profile(middle) >= 0:
            high = middle
        else:
            low = middle
    return high


class EllipticSetSpec(abc.ABC):
    """
    A closed elliptic subset of S(N) with a membership tolerance.

    Subclasses implement :meth:`min_shift`; membership up to ``tol`` is
    ``min_shift(A) ≤ tol``.
    """

    kind: ClassVar[str]
    tol: float

    @property
    def dim(self) -> int | None:
        """The dimension the set is tied to, if any."""
        return None

    @abc.abstractmethod
    def min_shift(self, B: SymMat) -> float:
        """Smallest ``t`` such that ``B + tI`` is in the set."""

    @abc.abstractmethod
    def dual(self, eps: float = DEFAULT_EPS) -> EllipticSetSpec:
        """The dual set ``[−S°]ᶜ``, using ``eps`` where no closed form exists."""

    @abc.abstractmethod
    def parameters(self) -> dict[str, Any]:
        pass

    def check_dim(self, A: SymMat) -> None:
        if self.dim is not None and A.dim != self.dim:
            raise DimensionMismatchException(self.dim, A.dim)

    def contains(self, A: SymMat) -> bool:
        self.check_dim(A)
        return self.min_shift(A) <= self.tol

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, **self.parameters(), "tol": self.tol}


@dataclass(frozen=True)
class PSD(EllipticSetSpec):
    """𝒫 = {λ₁ ≥ 0}."""

    kind: ClassVar[str] = "PSD"

    tol: float = DEFAULT_TOL

    def min_shift(self, B: SymMat) -> float:
        return -float(eigenvalues(B)[0])

    def dual(
        self, eps: float = DEFAULT_EPS  # noqa: ARG002
    ) -> EllipticSetSpec:
        return DualPSD(self.tol)

    def parameters(self) -> dict[str, Any]:
        return {}


@dataclass(frozen=True)
class DualPSD(EllipticSetSpec):
    """𝒫̃ = {λ_N ≥ 0}, the subaffine set."""

    kind: ClassVar[str] = "DualPSD"

    tol: float = DEFAULT_TOL

    def min_shift(self, B: SymMat) -> float:
        return -float(eigenvalues(B)[-1])

    def dual(
        self, eps: float = DEFAULT_EPS  # noqa: ARG002
    ) -> EllipticSetSpec:
        return PSD(self.tol)

    def parameters(self) -> dict[str, Any]:
        return {}


@dataclass(frozen=True)
class Pk(EllipticSetSpec):
    """𝒫_k = {λ_k ≥ 0}; 𝒫₁ = 𝒫 and 𝒫_N = 𝒫̃."""

    kind: ClassVar[str] = "Pk"

    k: int
    size: int
    tol: float = DEFAULT_TOL

    def __post_init__(self) -> None:
        if not 1 <= self.k <= self.size:
            raise InvalidParameterException(
                "k", self.k, f"must be in [1, {self.size}]"
            )

    @property
    def dim(self) -> int:
        return self.size

    def min_shift(self, B: SymMat) -> float:
        return -float(eigenvalues(B)[self.k - 1])

    def dual(
        self, eps: float = DEFAULT_EPS  # noqa: ARG002
    ) -> EllipticSetSpec:
        return Pk(self.size - self.k + 1, self.size, self.tol)

    def parameters(self) -> dict[str, Any]:
        return {"k": self.k, "dim": self.size}


@dataclass(frozen=True)
class HalfSpaceLinear(EllipticSetSpec):
    """``{A : tr(aA) ≥ c}`` with ``a ⪰ 0``, ``tr a > 0``."""

    kind: ClassVar[str] = "HalfSpaceLinear"

    a: SymMat
    c: float = 0.0
    tol: float = DEFAULT_TOL

    def __post_init__(self) -> None:
        if eigenvalues(self.a)[0] < -DEFAULT_TOL or self.a.trace() <= 0:
            raise InvalidParameterException(
                "a",
                self.a.to_list(),
                "must be positive semidefinite and nonzero",
            )

    @property
    def dim(self) -> int:
        return self.a.dim

    def min_shift(self, B: SymMat) -> float:
        value = float(np.sum(self.a.entries * B.entries))
        return (self.c - value) / self.a.trace()

    def dual(
        self, eps: float = DEFAULT_EPS  # noqa: ARG002
    ) -> EllipticSetSpec:
        return HalfSpaceLinear(self.a, -self.c, self.tol)

    def parameters(self) -> dict[str, Any]:
        return {"a": self.a.to_list(), "c": self.c}


@dataclass(frozen=True)
class AllMatrices(EllipticSetSpec):
    """The whole of S(N). Not proper; only usable as a constraint Φ."""

    kind: ClassVar[str] = "AllMatrices"

    tol: float = DEFAULT_TOL

    def min_shift(self, B: SymMat) -> float:  # noqa: ARG002
        return -math.inf

    def dual(self, eps: float = DEFAULT_EPS) -> EllipticSetSpec:
        raise UnsupportedOperationException(
            "The dual of the set of all matrices is empty"
        )

    def parameters(self) -> dict[str, Any]:
        return {}


@dataclass(frozen=True)
class Translate(EllipticSetSpec):
    """``base + offset``."""

    kind: ClassVar[str] = "Translate"

    base: EllipticSetSpec
    offset: SymMat
    tol: float = DEFAULT_TOL

    @property
    def dim(self) -> int:
        return self.offset.dim

    def min_shift(self, B: SymMat) -> float:
        return self.base.min_shift(B - self.offset)

    def dual(self, eps: float = DEFAULT_EPS) -> EllipticSetSpec:
        return Translate(self.base.dual(eps), -self.offset, self.tol)

    def parameters(self) -> dict[str, Any]:
        return {"base": self.base.to_dict(), "offset": self.offset.to_list()}


@dataclass(frozen=True)
class Truncated(EllipticSetSpec):
    """Intersection of two elliptic sets."""

    kind: ClassVar[str] = "Truncated"

    first: EllipticSetSpec
    second: EllipticSetSpec
    tol: float = DEFAULT_TOL

    @property
    def dim(self) -> int | None:
        if self.first.dim is not None:
            return self.first.dim
        return self.second.dim

    def min_shift(self, B: SymMat) -> float:
        return max(self.first.min_shift(B), self.second.min_shift(B))

    def dual(self, eps: float = DEFAULT_EPS) -> EllipticSetSpec:
        return DualSet(self, eps, self.tol)

    def parameters(self) -> dict[str, Any]:
        return {"first": self.first.to_dict(), "second": self.second.to_dict()}


@dataclass(frozen=True)
class SublevelBranch(EllipticSetSpec):
    """``{A ∈ constraint : F(x, A) ≥ 0}`` at a fixed point ``x``."""

    kind: ClassVar[str] = "SublevelBranch"

    operator: BranchOperator
    point: tuple[float, ...]
    constraint: EllipticSetSpec
    tol: float = DEFAULT_TOL

    @property
    def dim(self) -> int:
        return self.operator.dim

    def min_shift(self, B: SymMat) -> float:
        lower = self.constraint.min_shift(B)
        profile = self.operator.shift_profile(self.point, B)
        return _first_nonnegative(profile, lower, self.point)

    def contains(self, A: SymMat) -> bool:
        self.check_dim(A)
        if not self.constraint.contains(A):
            return False
        return self.operator.evaluate(self.point, A.shift(self.tol)) >= 0

    def dual(self, eps: float = DEFAULT_EPS) -> EllipticSetSpec:
        return DualSet(self, eps, self.tol)

    def parameters(self) -> dict[str, Any]:
        return {
            "operator": self.operator.to_dict(),
            "point": list(self.point),
            "constraint": self.constraint.to_dict(),
        }


@dataclass(frozen=True)
class DualSet(EllipticSetSpec):
    """
    Margin dual ``{A : −A − eps·I ∉ base}`` of a set without a closed form.

    ``min_shift(B) = −base.min_shift(−B) − eps``.
    """

    kind: ClassVar[str] = "Dual"

    base: EllipticSetSpec
    eps: float = DEFAULT_EPS
    tol: float = DEFAULT_TOL

    def __post_init__(self) -> None:
        if self.eps <= 0:
            raise InvalidParameterException(
                "eps", self.eps, "must be positive"
            )

    @property
    def dim(self) -> int | None:
        return self.base.dim

    def min_shift(self, B: SymMat) -> float:
        return -self.base.min_shift(-B) - self.eps

    def dual(
        self, eps: float = DEFAULT_EPS  # noqa: ARG002
    ) -> EllipticSetSpec:
        return self.base

    def parameters(self) -> dict[str, Any]:
        return {"base": self.base.to_dict(), "eps": self.eps}


def _require_positive(name: str, value: float) -> None:
    if not value > 0:
        raise InvalidParameterException(name, value, "must be positive")


def contains(S: EllipticSetSpec, A: SymMat) -> bool:
    return S.contains(A)


def interior_contains(
    S: EllipticSetSpec, A: SymMat, eps: float = DEFAULT_EPS
) -> bool:
    """``A − eps·I ∈ S``, which certifies ``A ∈ S°`` with margin ``eps``."""
    _require_positive("eps", eps)
    return S.contains(A.shift(-eps))


def dual_contains(
    S: EllipticSetSpec, A: SymMat, eps: float = DEFAULT_EPS
) -> bool:
    """``A ∈ S̃ ⟺ −A ∉ S°``."""
    return not interior_contains(S, -A, eps)


def enlarge_contains(S: EllipticSetSpec, A: SymMat, eps: float) -> bool:
    """One-sided test for the ``eps``-enlargement: ``A + eps·I ∈ S``."""
    _require_positive("eps", eps)
    return S.contains(A.shift(eps))


def boundary_contains(
    S: EllipticSetSpec, A: SymMat, eps: float = DEFAULT_EPS
) -> bool:
    """``A ∈ ∂S = S ∩ (−S̃)``."""
    return S.contains(A) and dual_contains(S, -A, eps)


def dual(S: EllipticSetSpec, eps: float = DEFAULT_EPS) -> EllipticSetSpec:
    _require_positive("eps", eps)
    return S.dual(eps)


def dist_op(A: SymMat, S: EllipticSetSpec) -> float:
    """Operator norm distance from ``A`` to ``S``, exact for elliptic sets."""
    return max(0.0, S.min_shift(A))


def identity_witness(S: EllipticSetSpec, dim: int) -> float:
    """A ``t₀`` such that ``tI ∈ S`` for every ``t ≥ t₀``."""
    return S.min_shift(SymMat.zeros(dim))


def proper_witness(S: EllipticSetSpec, dim: int) -> float:
    """A ``t₁`` such that ``−tI ∉ S`` for every ``t ≥ t₁``."""
    start = S.min_shift(SymMat.zeros(dim))
    if math.isinf(start):
        raise UnsupportedOperationException(
            f"The set {S.kind} is not proper"
        )
    return max(0.0, -start) + 1.0


def _infer_dim(dim: int | None, *sets: EllipticSetSpec) -> int:
    for spec in sets:
        if spec.dim is not None:
            if dim is not None and dim != spec.dim:
                raise DimensionMismatchException(dim, spec.dim, "set")
            dim = spec.dim
    if dim is None:
        raise InvalidParameterException(
            "dim", dim, "cannot be inferred from the sets, pass it explicitly"
        )
    return dim


def hausdorff_estimate(
    S1: EllipticSetSpec,
    S2: EllipticSetSpec,
    sampler: SamplerSpec,
    dim: int | None = None,
) -> float:
    """
    Sampled lower bound on the Hausdorff distance of two elliptic sets.

    Matrices of the ball of radius ``sampler.radius`` are projected on each
    set and their exact distance to the other set is measured. Estimates
    above ``radius / 2`` are reported as ``math.inf``.
    """
    size = _infer_dim(dim, S1, S2)
    radius = sampler.radius

    def run_chunk(
        offset: int, count: int, rng: np.random.Generator  # noqa: ARG001
    ) -> float:
        matrices = random_symmetric(
            rng, size, count, radius / 2, log_uniform=False
        )
        best = 0.0
        for entries in matrices:
            B = SymMat(entries)
            for source, target in ((S1, S2), (S2, S1)):
                A = B.shift(max(0.0, source.min_shift(B)))
                if opnorm(A) > radius:
                    continue
                best = max(best, dist_op(A, target))
        return best

    estimate = max(sampler.map_chunks(run_chunk))
    if estimate > radius / 2:
        return math.inf
    return estimate


def _cone_grid(C_max: float) -> NDArray[np.float64]:
    decades = max(1, math.ceil(math.log10(C_max)))
    return np.geomspace(1.0, C_max, 10 * decades + 1)


def cone_certificate(
    S: EllipticSetSpec,
    A: SymMat,
    eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
    C_max: float = DEFAULT_C_MAX,
) -> tuple[float, float] | None:
    """
    The ``(ε, R)`` with ``C(A − εI) ∈ S`` for every grid ``C ∈ [R, C_max]``.

    The first ``ε`` of ``eps_grid`` that works is used. At least the two
    largest grid values must pass. Returns ``None`` if no ``ε`` works.
    """
    if not eps_grid:
        raise InvalidParameterException("eps_grid", eps_grid, "is empty")
    for eps in eps_grid:
        _require_positive("eps_grid", eps)
    if not C_max > 1:
        raise InvalidParameterException("C_max", C_max, "must exceed 1")

    grid = _cone_grid(C_max)
    for eps in eps_grid:
        direction = A.shift(-eps)
        passing = [S.contains(float(scale) * direction) for scale in grid]
        start = len(grid)
        while start > 0 and passing[start - 1]:
            start -= 1
        if len(grid) - start >= 2:
            return eps, float(grid[start])
    return None


def cone_contains(
    S: EllipticSetSpec,
    A: SymMat,
    eps_grid: Sequence[float] = DEFAULT_EPS_GRID,
    C_max: float = DEFAULT_C_MAX,
) -> bool:
    """Whether ``A`` is in the interior of the cone associated to ``S``."""
    return cone_certificate(S, A, eps_grid, C_max) is not None


class EllipticMapSpec(abc.ABC):
    """A map ``x ↦ Θ(x)`` over the closure of a domain."""

    kind: ClassVar[str]
    domain: DomainSpec

    @abc.abstractmethod
    def at(self, x: ArrayLike) -> EllipticSetSpec:
        pass

    @abc.abstractmethod
    def dual(self, eps: float = DEFAULT_EPS) -> EllipticMapSpec:
        pass

    @abc.abstractmethod
    def parameters(self) -> dict[str, Any]:
        pass

    @property
    def dim(self) -> int:
        return self.domain.dim

    def is_constant(self) -> bool:
        return False

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            "domain": self.domain.to_dict(),
            **self.parameters(),
        }


@dataclass(frozen=True)
class ConstantMap(EllipticMapSpec):
    kind: ClassVar[str] = "constant"

    domain: DomainSpec
    theta: EllipticSetSpec

    def at(self, x: ArrayLike) -> EllipticSetSpec:
        as_point(x, self.dim)
        return self.theta

    def dual(self, eps: float = DEFAULT_EPS) -> EllipticMapSpec:
        return ConstantMap(self.domain, self.theta.dual(eps))

    def is_constant(self) -> bool:
        return True

    def parameters(self) -> dict[str, Any]:
        return {"set": self.theta.to_dict()}


@dataclass(frozen=True)
class TranslatedMap(EllipticMapSpec):
    """``Θ(x) = base + offset(x)``."""

    kind: ClassVar[str] = "translated"

    domain: DomainSpec
    base: EllipticSetSpec
    offset: MatrixField

    def at(self, x: ArrayLike) -> EllipticSetSpec:
        return Translate(self.base, self.offset.at(x), self.base.tol)

    def dual(self, eps: float = DEFAULT_EPS) -> EllipticMapSpec:
        return TranslatedMap(
            self.domain, self.base.dual(eps), self.offset.negated()
        )

    def is_constant(self) -> bool:
        return self.offset.is_constant()

    def parameters(self) -> dict[str, Any]:
        return {"base": self.base.to_dict(), "offset": self.offset.to_dict()}


@dataclass(frozen=True)
class BranchMap(EllipticMapSpec):
    """``Θ(x) = {A ∈ Φ(x) : F(x, A) ≥ 0}``."""

    kind: ClassVar[str] = "branch"

    domain: DomainSpec
    operator: BranchOperator
    constraint: EllipticMapSpec
    tol: float = DEFAULT_TOL

    def at(self, x: ArrayLike) -> EllipticSetSpec:
        point = tuple(float(value) for value in as_point(x, self.dim))
        return SublevelBranch(
            self.operator, point, self.constraint.at(point), self.tol
        )

    def dual(self, eps: float = DEFAULT_EPS) -> EllipticMapSpec:
        return DualMap(self.domain, self, eps)

    def parameters(self) -> dict[str, Any]:
        return {
            "operator": self.operator.to_dict(),
            "constraint": self.constraint.to_dict(),
        }


@dataclass(frozen=True)
class DualMap(EllipticMapSpec):
    """Pointwise dual ``x ↦ Θ(x)~``."""

    kind: ClassVar[str] = "dual"

    domain: DomainSpec
    base: EllipticMapSpec
    eps: float = DEFAULT_EPS

    def at(self, x: ArrayLike) -> EllipticSetSpec:
        return self.base.at(x).dual(self.eps)

    def dual(
        self, eps: float = DEFAULT_EPS  # noqa: ARG002
    ) -> EllipticMapSpec:
        return self.base

    def is_constant(self) -> bool:
        return self.base.is_constant()

    def parameters(self) -> dict[str, Any]:
        return {"base": self.base.to_dict(), "eps": self.eps}


@dataclass
class _ChunkOutcome:
    used: int
    witness: dict[str, Any] | None
    max_norm: float


def uusc_check(
    M: EllipticMapSpec, eps: float, delta: float, sampler: SamplerSpec
) -> ConditionReport:
    """
    Sampled check of ``Θ(x) + εI ⊂ Θ(y)`` for ``|x − y| < delta``.

    Matrices of ``Θ(x)`` are boundary shifts ``B + min_shift(B)·I`` of random
    ``B`` with norms up to ``sampler.cap``; both directions are tested.
    Without a violation the verdict is :attr:`Verdict.PASS_UP_TO_CAP`, or
    :attr:`Verdict.PASS` for constant maps, where the inclusion is exact.
    """
    _require_positive("eps", eps)
    _require_positive("delta", delta)
    dim = M.dim

    def run_chunk(
        offset: int, count: int, rng: np.random.Generator
    ) -> _ChunkOutcome:
        xs, ys = sample_pairs(M.domain, rng, count, delta)
        matrices = random_symmetric(rng, dim, count, sampler.cap)
        used = 0
        max_norm = 0.0
        for index in range(count):
            B = SymMat(matrices[index])
            pair = ((xs[index], ys[index]), (ys[index], xs[index]))
            for source, target in pair:
                shift = M.at(source).min_shift(B)
                if not math.isfinite(shift):
                    continue
                A = B.shift(shift)
                used += 1
                max_norm = max(max_norm, opnorm(A))
                if not M.at(target).contains(A.shift(eps)):
                    witness = {
                        "sample": offset + index,
                        "x": source,
                        "y": target,
                        "A": A,
                        "norm": opnorm(A),
                    }
                    return _ChunkOutcome(used, witness, max_norm)
        return _ChunkOutcome(used, None, max_norm)

    used = 0
    witness = None
    max_norm = 0.0
    for outcome in sampler.map_chunks(run_chunk):
        used += outcome.used
        max_norm = max(max_norm, outcome.max_norm)
        if outcome.witness is not None:
            witness = outcome.witness
            break

    if used == 0:
        raise SamplerExhaustedException(
            "no admissible matrix could be sampled from the map", sampler.count
        )

    if witness is not None:
        verdict = Verdict.FAIL
    elif M.is_constant():
        verdict = Verdict.PASS
    else:
        verdict = Verdict.PASS_UP_TO_CAP

    LOGGER.debug(
        "uusc check at eps=%s delta=%s: %s", eps, delta, verdict.value
    )
    return ConditionReport(
        check="uusc",
        verdict=verdict,
        witness=witness,
        samples_used=used,
        parameters={
            "eps": eps,
            "delta": delta,
            "cap": sampler.cap,
            "count": sampler.count,
            "seed": sampler.seed,
        },
        details={"max_sampled_norm": max_norm},
    )


def extend_to_closure(
    M: EllipticMapSpec,
    x0: ArrayLike,
    A: SymMat,
    eps: float,
    delta: float,
) -> bool:
    """
    Membership of ``A`` in the limit set of ``Θ`` at a boundary point.

    Evaluated as ``A + eps·I ∈ Θ(x_int)`` at the nearest probe
    ``x_int ∈ Ω`` with ``|x_int − x0| < delta``.
    """
    _require_positive("eps", eps)
    _require_positive("delta", delta)
    domain = M.domain
    point = as_point(x0, domain.dim)
    if abs(domain.rho(point)) > 1e-8 * max(1.0, domain.extent):
        raise InvalidParameterException(
            "x0", point.tolist(), "must lie on the boundary of the domain"
        )

    lower, upper = domain.bounding_box()
    towards_center = (lower + upper) / 2 - point
    directions = [domain.inward_normal(point)]
    if np.linalg.norm(towards_center) > 0:
        directions.append(towards_center / np.linalg.norm(towards_center))

    for exponent in range(1, 41):
        for direction in directions:
            candidate = point + delta * 2.0**-exponent * direction
            if domain.contains(candidate):
                return M.at(candidate).contains(A.shift(eps))

    raise SamplerExhaustedException(
        f"no interior point within {delta} of {point.tolist()}", 40
    )


def uniform_identity_witness(
    M: EllipticMapSpec, sampler: SamplerSpec
) -> float:
    """A ``t`` with ``tI ∈ Θ(x)`` at every sampled ``x``."""
    zero = SymMat.zeros(M.dim)

    def run_chunk(
        offset: int, count: int, rng: np.random.Generator  # noqa: ARG001
    ) -> float:
        points = M.domain.sample_interior(rng, count)
        return max(M.at(x).min_shift(zero) for x in points)

    return max(sampler.map_chunks(run_chunk))
