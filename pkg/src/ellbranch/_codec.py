"""
Tagged JSON/TOML descriptors for sets, maps, operators, domains and problems.

Every table carries a ``kind`` (or ``shape`` for domains) naming its type;
the remaining keys are the parameters written by the matching ``to_dict``.
Decoding errors, unknown kinds and unknown keys are reported as
:class:`~ellbranch._exceptions.ConfigException` before anything is computed.
"""

from __future__ import annotations

import json
import logging
import sys
from pathlib import Path
from typing import Any, Callable, Mapping, TypeVar

from ._branches import (
    OPERATORS,
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
    make_branch,
    natural_constraint,
)
from ._domains import DomainSpec, domain_from_dict
from ._ellset import (
    PSD,
    AllMatrices,
    BranchMap,
    ConstantMap,
    DualMap,
    DualPSD,
    DualSet,
    EllipticMapSpec,
    EllipticSetSpec,
    HalfSpaceLinear,
    Pk,
    SublevelBranch,
    Translate,
    TranslatedMap,
    Truncated,
)
from ._exceptions import BaseEllbranchException, ConfigException
from ._fields import MatrixField, scalar_field_from_dict, zero_field
from ._sampling import SamplerSpec
from ._solver import CheckSettings, DirichletProblem
from ._symcore import DEFAULT_TOL, SymMat

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

LOGGER = logging.getLogger(__name__)

_T = TypeVar("_T")

PROBLEM_TABLES = frozenset(
    {
        "domain",
        "operator",
        "constraint",
        "map",
        "boundary",
        "reference",
        "solver",
        "checks",
        "sampler",
        "check",
    }
)
SOLVER_KEYS = frozenset(
    {
        "h",
        "h_ladder",
        "tol",
        "max_sweeps",
        "stencil_radius",
        "mode",
        "boundary_values",
        "barrier_eps",
        "barrier_delta",
        "preflight",
        "seed",
    }
)


def _pop(params: dict[str, Any], key: str) -> Any:
    try:
        return params.pop(key)
    except KeyError:
        raise ConfigException("descriptor", f"missing key '{key}'") from None


def _reject_unknown(params: Mapping[str, Any], what: str) -> None:
    if params:
        raise ConfigException(what, f"unknown keys {sorted(params)}")


def set_from_dict(data: Mapping[str, Any]) -> EllipticSetSpec:
    """Decode an elliptic set, see :meth:`EllipticSetSpec.to_dict`."""
    params = dict(data)
    kind = params.pop("kind", None)
    tol = float(params.pop("tol", DEFAULT_TOL))
    result: EllipticSetSpec

    if kind == "PSD":
        result = PSD(tol)
    elif kind == "DualPSD":
        result = DualPSD(tol)
    elif kind == "Pk":
        result = Pk(int(_pop(params, "k")), int(_pop(params, "dim")), tol)
    elif kind == "HalfSpaceLinear":
        result = HalfSpaceLinear(
            SymMat(_pop(params, "a")), float(params.pop("c", 0.0)), tol
        )
    elif kind == "AllMatrices":
        result = AllMatrices(tol)
    elif kind == "Translate":
        result = Translate(
            set_from_dict(_pop(params, "base")),
            SymMat(_pop(params, "offset")),
            tol,
        )
    elif kind == "Truncated":
        result = Truncated(
            set_from_dict(_pop(params, "first")),
            set_from_dict(_pop(params, "second")),
            tol,
        )
    elif kind == "Dual":
        base = set_from_dict(_pop(params, "base"))
        result = DualSet(base, float(params.pop("eps", DualSet.eps)), tol)
    elif kind == "SublevelBranch":
        operator = operator_from_dict(_pop(params, "operator"))
        point = tuple(float(v) for v in _pop(params, "point"))
        result = SublevelBranch(
            operator, point, set_from_dict(_pop(params, "constraint")), tol
        )
    else:
        raise ConfigException("set", f"unknown kind {kind!r}")

    _reject_unknown(params, f"set {kind}")
    return result


def operator_from_dict(data: Mapping[str, Any]) -> OperatorSpec:
    """Decode an operator, see :meth:`OperatorSpec.to_dict`."""
    params = dict(data)
    kind = params.pop("kind", None)
    if kind not in OPERATORS:
        raise ConfigException(
            "operator",
            f"unknown kind {kind!r}, expected one of {sorted(OPERATORS)}",
        )
    f = (
        scalar_field_from_dict(params.pop("f"))
        if "f" in params
        else zero_field()
    )
    result: OperatorSpec

    if kind == MongeAmpere.kind:
        result = MongeAmpere(int(_pop(params, "dim")), f)
    elif kind in (PerturbedMA.kind, BellmanMA.kind):
        offset = MatrixField.from_dict(_pop(params, "M"))
        tol = float(params.pop("tol", DEFAULT_TOL))
        cls = PerturbedMA if kind == PerturbedMA.kind else BellmanMA
        result = cls(offset, f, tol)
    elif kind == KthEigenvalue.kind:
        result = KthEigenvalue(
            int(_pop(params, "k")), int(_pop(params, "dim")), f
        )
    elif kind in (PucciMinus.kind, PucciPlus.kind):
        cls_pucci = PucciMinus if kind == PucciMinus.kind else PucciPlus
        result = cls_pucci(
            float(_pop(params, "lambda")),
            float(_pop(params, "Lambda")),
            int(_pop(params, "dim")),
            f,
        )
    elif kind == LinearTrace.kind:
        result = LinearTrace(MatrixField.from_dict(_pop(params, "a")), f)
    else:
        result = TruncatedLinear(
            MatrixField.from_dict(_pop(params, "a")),
            float(_pop(params, "lambda")),
            float(_pop(params, "Lambda")),
            float(_pop(params, "h")),
            f,
        )

    _reject_unknown(params, f"operator {kind}")
    return result


def map_from_dict(
    data: Mapping[str, Any], domain: DomainSpec | None = None
) -> EllipticMapSpec:
    """
    Decode an elliptic map, see :meth:`EllipticMapSpec.to_dict`.

    The ``domain`` key may be left out when a domain is passed in.
    """
    params = dict(data)
    kind = params.pop("kind", None)
    if "domain" in params:
        domain = domain_from_dict(params.pop("domain"))
    if domain is None:
        raise ConfigException("map", "missing key 'domain'")
    result: EllipticMapSpec

    if kind == ConstantMap.kind:
        result = ConstantMap(domain, set_from_dict(_pop(params, "set")))
    elif kind == TranslatedMap.kind:
        result = TranslatedMap(
            domain,
            set_from_dict(_pop(params, "base")),
            MatrixField.from_dict(_pop(params, "offset")),
        )
    elif kind == BranchMap.kind:
        operator = operator_from_dict(_pop(params, "operator"))
        constraint = (
            map_from_dict(params.pop("constraint"), domain)
            if "constraint" in params
            else natural_constraint(operator, domain)
        )
        result = BranchMap(domain, operator, constraint)
    elif kind == DualMap.kind:
        base = map_from_dict(_pop(params, "base"), domain)
        result = DualMap(domain, base, float(params.pop("eps", DualMap.eps)))
    else:
        raise ConfigException("map", f"unknown kind {kind!r}")

    _reject_unknown(params, f"map {kind}")
    return result


def sampler_from_dict(
    data: Mapping[str, Any] | None, **defaults: Any
) -> SamplerSpec:
    """A sampler from a ``[sampler]`` table; table values win over defaults."""
    params = {**defaults, **(data or {})}
    known = {"count", "seed", "cap", "radius", "threads", "chunk_size"}
    _reject_unknown(
        {k: v for k, v in params.items() if k not in known}, "sampler"
    )
    return SamplerSpec(**params)


def branch_from_dict(data: Mapping[str, Any]) -> BranchSpec:
    """A branch from the ``domain``, ``operator`` and ``constraint`` tables."""
    domain = domain_from_dict(data["domain"])
    operator = operator_from_dict(data["operator"])
    if "constraint" in data:
        constraint = map_from_dict(data["constraint"], domain)
    else:
        constraint = natural_constraint(operator, domain)
    return make_branch(operator, constraint)


def problem_from_dict(data: Mapping[str, Any]) -> DirichletProblem:
    """
    A Dirichlet problem from the ``domain``, ``operator``, ``boundary``,
    ``solver``, ``checks`` and optional ``constraint`` and ``reference``
    tables.
    """
    for table in ("domain", "operator", "boundary", "solver"):
        if table not in data:
            raise ConfigException("problem", f"missing table [{table}]")
    solver = dict(data["solver"])
    solver.pop("h_ladder", None)
    _reject_unknown(
        {k: v for k, v in solver.items() if k not in SOLVER_KEYS}, "[solver]"
    )
    if "h" not in solver:
        raise ConfigException("[solver]", "missing key 'h'")

    checks = dict(data.get("checks", {}))
    if "alpha_grid" in checks:
        checks["alpha_grid"] = tuple(float(a) for a in checks["alpha_grid"])
    reference = data.get("reference")
    return DirichletProblem(
        branch=branch_from_dict(data),
        boundary=scalar_field_from_dict(data["boundary"]),
        reference=scalar_field_from_dict(reference) if reference else None,
        checks=CheckSettings(**checks),
        **solver,
    )


def decode(
    func: Callable[[Any], _T], data: Any, source: str
) -> _T:
    """
    Run a decoder, turning any library or type error into a
    :class:`ConfigException` that names ``source``.
    """
    try:
        return func(data)
    except ConfigException:
        raise
    except (BaseEllbranchException, KeyError, TypeError, ValueError) as exc:
        raise ConfigException(source, str(exc)) from exc


def load_document(path: Path) -> dict[str, Any]:
    """Read a TOML or JSON document, rejecting unknown top-level tables."""
    try:
        if path.suffix == ".toml":
            with path.open("rb") as stream:
                document = tomllib.load(stream)
        elif path.suffix == ".json":
            document = json.loads(path.read_text(encoding="utf-8"))
        else:
            raise ConfigException(
                str(path), "expected a .toml or .json file"
            )
    except OSError as exc:
        raise ConfigException(str(path), exc.strerror or str(exc)) from exc
    except (tomllib.TOMLDecodeError, json.JSONDecodeError) as exc:
        raise ConfigException(str(path), str(exc)) from exc

    if not isinstance(document, dict):
        raise ConfigException(str(path), "the top level must be a table")
    unknown = set(document) - PROBLEM_TABLES
    if unknown:
        raise ConfigException(str(path), f"unknown tables {sorted(unknown)}")
    LOGGER.debug("loaded %s with tables %s", path, sorted(document))
    return document
