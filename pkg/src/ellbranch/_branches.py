"""
Catalog of operators ``F(x, A)`` and the branches they define.

A branch is ``Θ(x) = {A ∈ Φ(x) : F(x, A) ≥ 0}``. Every operator takes a
right-hand side ``f`` (a :class:`~ellbranch._fields.ScalarField`).

.. note::

    Pucci's minimal operator is the infimum of ``tr(βA)`` over
    ``β`` with spectrum in ``[λ, Λ]``, which equals
    ``λ Σ_{λᵢ>0} λᵢ + Λ Σ_{λᵢ<0} λᵢ``, or ``λ tr A⁺ − Λ tr A⁻``. A
    frequently displayed variant with ``− Λ Σ_{λᵢ<0} λᵢ`` disagrees in sign
    on indefinite matrices; the infimum definition is the one implemented.
"""

from __future__ import annotations

import abc
import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Any, Callable, ClassVar

import numpy as np

from ._ellset import (
    PSD,
    AllMatrices,
    BranchMap,
    ConstantMap,
    EllipticMapSpec,
    EllipticSetSpec,
    Translate,
    TranslatedMap,
)
from ._exceptions import (
    AdmissibilityException,
    ConditionFailedException,
    DimensionMismatchException,
    InvalidParameterException,
    SamplerExhaustedException,
    SpectrumViolationException,
)
from ._fields import MatrixField, ScalarField, norm_bound, zero_field
from ._reports import ConditionReport, Verdict
from ._sampling import (
    SamplerSpec,
    random_psd,
    random_rotations,
    random_symmetric,
)
from ._symcore import (
    DEFAULT_TOL,
    SymMat,
    as_point,
    determinant,
    eigenvalues,
    lambda_k,
    negative_part,
    positive_part,
)

if TYPE_CHECKING:
    from numpy.typing import ArrayLike, NDArray

    from ._domains import DomainSpec

LOGGER = logging.getLogger(__name__)

_SPOT_CHECK_SAMPLES = 64


def _pucci_from_spectrum(
    values: NDArray[np.float64], low: float, high: float
) -> float:
    positive = float(np.sum(values[values > 0]))
    negative = float(np.sum(values[values < 0]))
    return low * positive + high * negative


def pucci_minus(A: SymMat, lam: float, Lam: float) -> float:
    """
    ``𝓜⁻_{λ,Λ}(A) = λ tr A⁺ − Λ tr A⁻``, the infimum of ``tr(βA)`` over
    symmetric ``β`` with spectrum in ``[λ, Λ]``.

    ``A⁻ ⪰ 0`` is the negative part. Writing the second sum over the signed
    negative eigenvalues with a minus sign flips the result on indefinite
    matrices and does not match the infimum.
    """
    return _pucci_from_spectrum(eigenvalues(A), lam, Lam)


def pucci_plus(A: SymMat, lam: float, Lam: float) -> float:
    """``𝓜⁺_{λ,Λ}(A) = Λ tr A⁺ − λ tr A⁻ = −𝓜⁻_{λ,Λ}(−A)``."""
    return _pucci_from_spectrum(eigenvalues(A), Lam, lam)


def _check_ellipticity(lam: float, Lam: float) -> None:
    if not 0 < lam <= Lam:
        raise InvalidParameterException(
            "lambda", (lam, Lam), "ellipticity constants need 0 < λ ≤ Λ"
        )


def _root_of_det(values: NDArray[np.float64], tol: float) -> float:
    if values[0] < -tol:
        return -math.inf
    clamped = np.maximum(values, 0.0)
    return float(np.prod(clamped)) ** (1 / values.shape[0])


class OperatorSpec(abc.ABC):
    """
    A fully nonlinear operator ``F(x, A)``, degenerate elliptic on its
    natural constraint.
    """

    kind: ClassVar[str]
    f: ScalarField

    @property
    @abc.abstractmethod
    def dim(self) -> int:
        pass

    @abc.abstractmethod
    def _value(self, x: NDArray[np.float64], A: SymMat) -> float:
        pass

    @abc.abstractmethod
    def parameters(self) -> dict[str, Any]:
        pass

    def evaluate(self, x: ArrayLike, A: SymMat) -> float:
        if A.dim != self.dim:
            raise DimensionMismatchException(self.dim, A.dim)
        return self._value(as_point(x, self.dim), A)

    def shift_profile(
        self, x: ArrayLike, B: SymMat
    ) -> Callable[[float], float]:
        """``t ↦ F(x, B + tI)``."""
        point = as_point(x, self.dim)
        return lambda t: self._value(point, B.shift(t))

    def constraint_at(self, x: ArrayLike) -> EllipticSetSpec:  # noqa: ARG002
        """The natural constraint set Φ(x)."""
        return AllMatrices()

    def to_dict(self) -> dict[str, Any]:
        return {
            "kind": self.kind,
            **self.parameters(),
            "f": self.f.to_dict(),
        }


@dataclass(frozen=True)
class MongeAmpere(OperatorSpec):
    """``det A − f(x)`` on 𝒫."""

    kind: ClassVar[str] = "MongeAmpere"

    size: int
    f: ScalarField = field(default_factory=zero_field)

    @property
    def dim(self) -> int:
        return self.size

    def _value(self, x: NDArray[np.float64], A: SymMat) -> float:
        return determinant(A) - self.f(x)

    def shift_profile(
        self, x: ArrayLike, B: SymMat
    ) -> Callable[[float], float]:
        values = eigenvalues(B)
        rhs = self.f(as_point(x, self.dim))
        return lambda t: float(np.prod(values + t)) - rhs

    def constraint_at(self, x: ArrayLike) -> EllipticSetSpec:  # noqa: ARG002
        return PSD()

    def parameters(self) -> dict[str, Any]:
        return {"dim": self.size}


@dataclass(frozen=True)
class PerturbedMA(OperatorSpec):
    """
    ``det(A + M(x))^{1/N} − f(x)`` on ``Φ(x) = {A + M(x) ⪰ 0}``.

    Eigenvalues of ``A + M(x)`` in ``[−tol, 0]`` are clamped to zero before
    the root; anything below is an :class:`AdmissibilityException`.
    """

    kind: ClassVar[str] = "PerturbedMA"

    offset: MatrixField
    f: ScalarField = field(default_factory=zero_field)
    tol: float = DEFAULT_TOL

    @property
    def dim(self) -> int:
        return self.offset.dim

    def _value(self, x: NDArray[np.float64], A: SymMat) -> float:
        values = eigenvalues(A + self.offset.at(x))
        if values[0] < -self.tol:
            raise AdmissibilityException(x.tolist(), float(values[0]))
        return _root_of_det(values, self.tol) - self.f(x)

    def shift_profile(
        self, x: ArrayLike, B: SymMat
    ) -> Callable[[float], float]:
        point = as_point(x, self.dim)
        values = eigenvalues(B + self.offset.at(point))
        rhs = self.f(point)
        return lambda t: _root_of_det(values + t, self.tol) - rhs

    def constraint_at(self, x: ArrayLike) -> EllipticSetSpec:
        return Translate(PSD(), -self.offset.at(x))

    def parameters(self) -> dict[str, Any]:
        return {"M": self.offset.to_dict()}


@dataclass(frozen=True)
class KthEigenvalue(OperatorSpec):
    """``λ_k(A) − f(x)`` on all of S(N)."""

    kind: ClassVar[str] = "KthEigenvalue"

    k: int
    size: int
    f: ScalarField = field(default_factory=zero_field)

    def __post_init__(self) -> None:
        if not 1 <= self.k <= self.size:
            raise InvalidParameterException(
                "k", self.k, f"must be in [1, {self.size}]"
            )

    @property
    def dim(self) -> int:
        return self.size

    def _value(self, x: NDArray[np.float64], A: SymMat) -> float:
        return lambda_k(A, self.k) - self.f(x)

    def shift_profile(
        self, x: ArrayLike, B: SymMat
    ) -> Callable[[float], float]:
        base = lambda_k(B, self.k) - self.f(as_point(x, self.dim))
        return lambda t: base + t

    def parameters(self) -> dict[str, Any]:
        return {"k": self.k, "dim": self.size}


@dataclass(frozen=True)
class PucciMinus(OperatorSpec):
    """``𝓜⁻_{λ,Λ}(A) − f(x)``."""

    kind: ClassVar[str] = "PucciMinus"

    lam: float
    Lam: float
    size: int
    f: ScalarField = field(default_factory=zero_field)

    def __post_init__(self) -> None:
        _check_ellipticity(self.lam, self.Lam)

    @property
    def dim(self) -> int:
        return self.size

    def _value(self, x: NDArray[np.float64], A: SymMat) -> float:
        return pucci_minus(A, self.lam, self.Lam) - self.f(x)

    def shift_profile(
        self, x: ArrayLike, B: SymMat
    ) -> Callable[[float], float]:
        values = eigenvalues(B)
        rhs = self.f(as_point(x, self.dim))
        return (
            lambda t: _pucci_from_spectrum(values + t, self.lam, self.Lam)
            - rhs
        )

    def parameters(self) -> dict[str, Any]:
        return {"lambda": self.lam, "Lambda": self.Lam, "dim": self.size}


@dataclass(frozen=True)
class PucciPlus(OperatorSpec):
    """``𝓜⁺_{λ,Λ}(A) − f(x)``, the dual pairing of :class:`PucciMinus`."""

    kind: ClassVar[str] = "PucciPlus"

    lam: float
    Lam: float
    size: int
    f: ScalarField = field(default_factory=zero_field)

    def __post_init__(self) -> None:
        _check_ellipticity(self.lam, self.Lam)

    @property
    def dim(self) -> int:
        return self.size

    def _value(self, x: NDArray[np.float64], A: SymMat) -> float:
        return pucci_plus(A, self.lam, self.Lam) - self.f(x)

    def shift_profile(
        self, x: ArrayLike, B: SymMat
    ) -> Callable[[float], float]:
        values = eigenvalues(B)
        rhs = self.f(as_point(x, self.dim))
        return (
            lambda t: _pucci_from_spectrum(values + t, self.Lam, self.lam)
            - rhs
        )

    def parameters(self) -> dict[str, Any]:
        return {"lambda": self.lam, "Lambda": self.Lam, "dim": self.size}


@dataclass(frozen=True)
class LinearTrace(OperatorSpec):
    """``tr(a(x)A) − f(x)``."""

    kind: ClassVar[str] = "LinearTrace"

    a: MatrixField
    f: ScalarField = field(default_factory=zero_field)

    @property
    def dim(self) -> int:
        return self.a.dim

    def _value(self, x: NDArray[np.float64], A: SymMat) -> float:
        return float(np.sum(self.a.at(x).entries * A.entries)) - self.f(x)

    def shift_profile(
        self, x: ArrayLike, B: SymMat
    ) -> Callable[[float], float]:
        point = as_point(x, self.dim)
        coefficient = self.a.at(point)
        base = self._value(point, B)
        slope = coefficient.trace()
        return lambda t: base + slope * t

    def parameters(self) -> dict[str, Any]:
        return {"a": self.a.to_dict()}


@dataclass(frozen=True)
class TruncatedLinear(OperatorSpec):
    """
    ``min(tr(a(x)A) − f(x), 𝓜⁻_{λ/2,Λ}(A) + h)``.

    The truncation bounds the Hessians of the branch near its boundary,
    which restores uniform upper semicontinuity for non-constant ``a``.
    """

    kind: ClassVar[str] = "TruncatedLinear"

    a: MatrixField
    lam: float
    Lam: float
    h: float
    f: ScalarField = field(default_factory=zero_field)

    def __post_init__(self) -> None:
        _check_ellipticity(self.lam, self.Lam)

    @property
    def dim(self) -> int:
        return self.a.dim

    def linear_part(self, x: ArrayLike, A: SymMat) -> float:
        point = as_point(x, self.dim)
        return float(np.sum(self.a.at(point).entries * A.entries)) - self.f(
            point
        )

    def _value(self, x: NDArray[np.float64], A: SymMat) -> float:
        return min(
            self.linear_part(x, A),
            pucci_minus(A, self.lam / 2, self.Lam) + self.h,
        )

    def shift_profile(
        self, x: ArrayLike, B: SymMat
    ) -> Callable[[float], float]:
        point = as_point(x, self.dim)
        base = self.linear_part(point, B)
        slope = self.a.at(point).trace()
        values = eigenvalues(B)
        low = self.lam / 2
        return lambda t: min(
            base + slope * t,
            _pucci_from_spectrum(values + t, low, self.Lam) + self.h,
        )

    def parameters(self) -> dict[str, Any]:
        return {
            "a": self.a.to_dict(),
            "lambda": self.lam,
            "Lambda": self.Lam,
            "h": self.h,
        }


@dataclass(frozen=True)
class BellmanMA(OperatorSpec):
    """
    ``inf {tr(β(A + M(x))) : β ⪰ 0, det β = N^{−N}} − f(x)``.

    Evaluated in closed form: ``det(A + M(x))^{1/N}`` on Φ(x), ``−∞`` off it.
    """

    kind: ClassVar[str] = "BellmanMA"

    offset: MatrixField
    f: ScalarField = field(default_factory=zero_field)
    tol: float = DEFAULT_TOL

    @property
    def dim(self) -> int:
        return self.offset.dim

    def _value(self, x: NDArray[np.float64], A: SymMat) -> float:
        values = eigenvalues(A + self.offset.at(x))
        return _root_of_det(values, self.tol) - self.f(x)

    def shift_profile(
        self, x: ArrayLike, B: SymMat
    ) -> Callable[[float], float]:
        point = as_point(x, self.dim)
        values = eigenvalues(B + self.offset.at(point))
        rhs = self.f(point)
        return lambda t: _root_of_det(values + t, self.tol) - rhs

    def constraint_at(self, x: ArrayLike) -> EllipticSetSpec:
        return Translate(PSD(), -self.offset.at(x))

    def parameters(self) -> dict[str, Any]:
        return {"M": self.offset.to_dict()}


OPERATORS: dict[str, type[OperatorSpec]] = {
    cls.kind: cls
    for cls in (
        MongeAmpere,
        PerturbedMA,
        KthEigenvalue,
        PucciMinus,
        PucciPlus,
        LinearTrace,
        TruncatedLinear,
        BellmanMA,
    )
}


def evaluate(op: OperatorSpec, x: ArrayLike, A: SymMat) -> float:
    return op.evaluate(x, A)


@dataclass(frozen=True)
class BranchSpec:
    """An operator, its constraint map Φ and the derived branch map Θ."""

    operator: OperatorSpec
    constraint: EllipticMapSpec
    theta: BranchMap

    @property
    def domain(self) -> DomainSpec:
        return self.constraint.domain

    @property
    def dim(self) -> int:
        return self.operator.dim

    def to_dict(self) -> dict[str, Any]:
        return {
            "operator": self.operator.to_dict(),
            "constraint": self.constraint.to_dict(),
        }


def natural_constraint(
    op: OperatorSpec, domain: DomainSpec
) -> EllipticMapSpec:
    """𝒫 for Monge-Ampère, ``−M(x) + 𝒫`` for the perturbed kinds, S(N) otherwise."""
    if isinstance(op, MongeAmpere):
        return ConstantMap(domain, PSD())
    if isinstance(op, (PerturbedMA, BellmanMA)):
        return TranslatedMap(domain, PSD(), op.offset.negated())
    return ConstantMap(domain, AllMatrices())


def sample_in_constraint(
    phi: EllipticMapSpec, x: NDArray[np.float64], entries: NDArray[np.float64]
) -> SymMat:
    """Shift a random matrix up the identity ray until it lies in Φ(x)."""
    B = SymMat(entries)
    shift = phi.at(x).min_shift(B)
    return B.shift(max(0.0, shift)) if math.isfinite(shift) else B


def monotonicity_check(
    op: OperatorSpec, phi: EllipticMapSpec, sampler: SamplerSpec
) -> ConditionReport:
    """Spot check of ``F(x, A + P) ≥ F(x, A)`` for ``A ∈ Φ(x)``, ``P ⪰ 0``."""
    dim = op.dim

    def run_chunk(
        offset: int, count: int, rng: np.random.Generator
    ) -> dict[str, Any] | None:
        points = phi.domain.sample_interior(rng, count)
        matrices = random_symmetric(rng, dim, count, sampler.cap)
        increments = random_psd(rng, dim, count, sampler.cap)
        for index in range(count):
            A = sample_in_constraint(phi, points[index], matrices[index])
            P = SymMat(increments[index])
            before = op.evaluate(points[index], A)
            after = op.evaluate(points[index], A + P)
            if after < before - DEFAULT_TOL * max(1.0, abs(before)):
                return {
                    "sample": offset + index,
                    "x": points[index],
                    "A": A,
                    "P": P,
                    "values": [before, after],
                }
        return None

    witnesses = [w for w in sampler.map_chunks(run_chunk) if w is not None]
    return ConditionReport(
        check="monotonicity",
        verdict=Verdict.FAIL if witnesses else Verdict.PASS_UP_TO_CAP,
        witness=witnesses[0] if witnesses else None,
        samples_used=sampler.count,
        parameters={"cap": sampler.cap, "seed": sampler.seed},
    )


def make_branch(
    op: OperatorSpec,
    phi: EllipticMapSpec,
    sampler: SamplerSpec | None = None,
) -> BranchSpec:
    """
    Build ``Θ(x) = {A ∈ Φ(x) : F(x, A) ≥ 0}``.

    Degenerate ellipticity and non-emptiness are spot-checked on a few
    samples; an empty fibre raises :class:`EmptyBranchException`.
    """
    if op.dim != phi.dim:
        raise DimensionMismatchException(phi.dim, op.dim, "operator")
    if sampler is None:
        sampler = SamplerSpec(count=_SPOT_CHECK_SAMPLES, cap=1e2)

    report = monotonicity_check(op, phi, sampler)
    if not report.passed:
        raise ConditionFailedException(report)

    theta = BranchMap(phi.domain, op, phi)
    zero = SymMat.zeros(op.dim)
    for point in phi.domain.sample_interior(sampler.rng(), 8):
        theta.at(point).min_shift(zero)

    return BranchSpec(op, phi, theta)


def natural_branch(
    op: OperatorSpec, domain: DomainSpec, sampler: SamplerSpec | None = None
) -> BranchSpec:
    return make_branch(op, natural_constraint(op, domain), sampler)


def bellman_MA_estimate(
    A: SymMat, M: SymMat, samples: int, seed: int = 0
) -> float:
    """
    Sampled ``min tr(β(A + M))`` over ``β ⪰ 0`` with ``det β = N^{−N}``.

    An upper bound on ``det(A + M)^{1/N}`` which converges to it as the
    number of samples grows. ``β = I/N`` is always among the candidates.
    """
    if samples <= 0:
        raise InvalidParameterException("samples", samples, "must be positive")
    target = A + M
    values = eigenvalues(target)
    if values[0] < -DEFAULT_TOL:
        raise AdmissibilityException((), float(values[0]))

    dim = target.dim
    rng = np.random.default_rng(seed)
    logs = rng.normal(scale=1.5, size=(samples, dim))
    spectra = np.exp(logs - logs.mean(axis=1, keepdims=True)) / dim
    rotations = random_rotations(rng, dim, samples)
    # tr(Q diag(d) Qᵀ C) = Σ_j d_j q_jᵀ C q_j
    quadratic = np.einsum(
        "mij,ik,mkj->mj", rotations, target.entries, rotations
    )
    estimates = np.sum(spectra * quadratic, axis=1)
    identity = target.trace() / dim
    return float(min(identity, float(np.min(estimates))))


def pucci_bellman_estimate(
    A: SymMat,
    lam: float,
    Lam: float,
    samples: int,
    seed: int = 0,
    *,
    maximize: bool = False,
) -> float:
    """
    Sampled ``inf`` (or ``sup``) of ``tr(βA)`` over ``β`` with spectrum in
    ``[λ, Λ]``, using corner spectra and uniform spectra in random frames.
    """
    _check_ellipticity(lam, Lam)
    if samples <= 0:
        raise InvalidParameterException("samples", samples, "must be positive")
    dim = A.dim
    rng = np.random.default_rng(seed)
    rotations = random_rotations(rng, dim, samples)
    corners = rng.integers(0, 2, size=(samples, dim)) == 1
    spectra = np.where(corners, Lam, lam).astype(float)
    uniform = rng.uniform(size=samples) < 0.25
    spectra[uniform] = rng.uniform(lam, Lam, size=(int(uniform.sum()), dim))
    quadratic = np.einsum("mij,ik,mkj->mj", rotations, A.entries, rotations)
    estimates = np.sum(spectra * quadratic, axis=1)
    return float(np.max(estimates) if maximize else np.min(estimates))


def truncated_linear(
    a: MatrixField,
    f: ScalarField,
    lam: float,
    Lam: float,
    h: float,
    domain: DomainSpec | None = None,
    sampler: SamplerSpec | None = None,
) -> TruncatedLinear:
    """
    Build the truncation of ``tr(a(x)A) − f(x)``, after checking that the
    spectrum of ``a`` lies in ``[λ, Λ]`` at sampled points.
    """
    _check_ellipticity(lam, Lam)
    points: NDArray[np.float64]
    if domain is None:
        points = np.zeros((1, a.dim))
    else:
        if sampler is None:
            sampler = SamplerSpec(count=_SPOT_CHECK_SAMPLES)
        points = domain.sample_interior(sampler.rng(), sampler.count)

    for point in points:
        spectrum = eigenvalues(a.at(point))
        if spectrum[0] < lam - DEFAULT_TOL or spectrum[-1] > Lam + DEFAULT_TOL:
            raise SpectrumViolationException(
                point.tolist(), spectrum.tolist(), lam, Lam
            )
    return TruncatedLinear(a, lam, Lam, h, f)


def truncation_bounds(
    op: TruncatedLinear, sup_f: float
) -> tuple[float, float]:
    """
    Bounds ``(tr B⁻, tr B⁺)`` for ``B ∈ Θ_h(x) + εI`` with
    ``tr(a(x)B) − f(x) ≤ 1``.
    """
    negative = (1 + 2 * op.h + sup_f) / op.Lam
    positive = (2 + 2 * op.h + 2 * sup_f) / op.lam
    return negative, positive


def truncation_bound_check(
    op: TruncatedLinear,
    domain: DomainSpec,
    eps: float,
    sampler: SamplerSpec,
) -> ConditionReport:
    """Verify :func:`truncation_bounds` on sampled ``B ∈ Θ_h(x) + εI``."""
    if eps <= 0:
        raise InvalidParameterException("eps", eps, "must be positive")
    sup_f = norm_bound(op.f, domain.radius_bound)
    negative_bound, positive_bound = truncation_bounds(op, sup_f)
    tolerance = 1e-8 * max(1.0, negative_bound, positive_bound)
    branch = BranchMap(domain, op, ConstantMap(domain, AllMatrices()))

    def run_chunk(
        offset: int, count: int, rng: np.random.Generator
    ) -> tuple[int, dict[str, Any] | None]:
        points = domain.sample_interior(rng, count)
        matrices = random_symmetric(rng, op.dim, count, sampler.cap)
        bumps = random_psd(rng, op.dim, count, 1.0)
        kept = 0
        for index in range(count):
            x = points[index]
            R = SymMat(matrices[index])
            A = R.shift(branch.at(x).min_shift(R))
            B = A.shift(eps) + SymMat(bumps[index])
            if op.linear_part(x, B) > 1:
                continue
            kept += 1
            traces = (negative_part(B).trace(), positive_part(B).trace())
            if (
                traces[0] > negative_bound + tolerance
                or traces[1] > positive_bound + tolerance
            ):
                return kept, {
                    "sample": offset + index,
                    "x": x,
                    "B": B,
                    "traces": list(traces),
                }
        return kept, None

    kept = 0
    witness = None
    for count, found in sampler.map_chunks(run_chunk):
        kept += count
        if found is not None:
            witness = found
            break

    if kept == 0:
        raise SamplerExhaustedException(
            "no sample of the truncated branch met the level bound",
            sampler.count,
        )

    return ConditionReport(
        check="truncation-bound",
        verdict=Verdict.FAIL if witness else Verdict.PASS,
        witness=witness,
        samples_used=kept,
        parameters={"eps": eps, "cap": sampler.cap, "seed": sampler.seed},
        details={
            "negative_bound": negative_bound,
            "positive_bound": positive_bound,
            "sup_f": sup_f,
        },
    )


def _boundary_samples(
    branch: BranchSpec, rng: np.random.Generator, count: int, cap: float
) -> list[tuple[NDArray[np.float64], SymMat]]:
    points = branch.domain.sample_interior(rng, count)
    matrices = random_symmetric(rng, branch.dim, count, cap)
    samples = []
    for x, entries in zip(points, matrices):
        R = SymMat(entries)
        samples.append((x, R.shift(branch.theta.at(x).min_shift(R))))
    return samples


def branch_condition_check(
    branch: BranchSpec, sampler: SamplerSpec
) -> ConditionReport:
    """
    Check ``∂Θ(x) ⊂ {F(x, ·) ≤ 0}`` on boundary matrices found by
    bisection along the identity ray.
    """

    def run_chunk(
        offset: int, count: int, rng: np.random.Generator
    ) -> dict[str, Any] | None:
        for index, (x, A) in enumerate(
            _boundary_samples(branch, rng, count, sampler.cap)
        ):
            value = branch.operator.evaluate(x, A)
            scale = abs(branch.operator.evaluate(x, A.shift(1.0)) - value)
            if value > 1e-6 * max(1.0, scale):
                return {"sample": offset + index, "x": x, "A": A, "F": value}
        return None

    witnesses = [w for w in sampler.map_chunks(run_chunk) if w is not None]
    return ConditionReport(
        check="branch-condition",
        verdict=Verdict.FAIL if witnesses else Verdict.PASS_UP_TO_CAP,
        witness=witnesses[0] if witnesses else None,
        samples_used=sampler.count,
        parameters={"cap": sampler.cap, "seed": sampler.seed},
    )


def nondegeneracy_check(
    branch: BranchSpec, sampler: SamplerSpec, eps: float = 1e-3
) -> ConditionReport:
    """Check ``F(x, A) > 0`` on interior matrices ``A = A_∂ + εI``."""
    if eps <= 0:
        raise InvalidParameterException("eps", eps, "must be positive")

    def run_chunk(
        offset: int, count: int, rng: np.random.Generator
    ) -> dict[str, Any] | None:
        for index, (x, boundary) in enumerate(
            _boundary_samples(branch, rng, count, sampler.cap)
        ):
            A = boundary.shift(eps)
            value = branch.operator.evaluate(x, A)
            if value <= 0:
                return {"sample": offset + index, "x": x, "A": A, "F": value}
        return None

    witnesses = [w for w in sampler.map_chunks(run_chunk) if w is not None]
    return ConditionReport(
        check="nondegeneracy",
        verdict=Verdict.FAIL if witnesses else Verdict.PASS_UP_TO_CAP,
        witness=witnesses[0] if witnesses else None,
        samples_used=sampler.count,
        parameters={"eps": eps, "cap": sampler.cap, "seed": sampler.seed},
    )
