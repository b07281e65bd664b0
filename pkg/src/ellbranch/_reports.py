"""Verdicts and reports produced by the structural checks."""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from ._exceptions import ConditionFailedException
from ._symcore import SymMat


class Verdict(str, enum.Enum):
    PASS = "pass"
    FAIL = "fail"
    PASS_UP_TO_CAP = "pass-up-to-cap"
    """No violation was found, but only matrices up to a norm cap were probed."""

    @property
    def ok(self) -> bool:
        return self is not Verdict.FAIL

    @classmethod
    def combine(cls, *verdicts: Verdict) -> Verdict:
        if cls.FAIL in verdicts:
            return cls.FAIL
        if cls.PASS_UP_TO_CAP in verdicts:
            return cls.PASS_UP_TO_CAP
        return cls.PASS


def to_jsonable(value: Any) -> Any:
    """
    Convert a report value to plain JSON types.

    Non-finite floats become the strings ``"inf"``, ``"-inf"`` and ``"nan"``
    so that the output stays strict JSON.
    """
    # pylint: disable=too-many-return-statements
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, SymMat):
        return value.to_list()
    if isinstance(value, np.ndarray):
        return [to_jsonable(item) for item in value.tolist()]
    if isinstance(value, (np.floating, float)):
        number = float(value)
        if math.isnan(number):
            return "nan"
        if math.isinf(number):
            return "inf" if number > 0 else "-inf"
        return number
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, dict):
        return {str(key): to_jsonable(item) for key, item in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(item) for item in value]
    return value


@dataclass
class ConditionReport:
    """
    Outcome of a sampled check.

    A failing report always carries a witness that reproduces the violation
    when replayed.
    """

    check: str
    verdict: Verdict
    witness: dict[str, Any] | None = None
    samples_used: int = 0
    parameters: dict[str, Any] = field(default_factory=dict)
    details: dict[str, Any] = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict.ok

    def to_dict(self) -> dict[str, Any]:
        return to_jsonable(
            {
                "check": self.check,
                "verdict": self.verdict,
                "samples_used": self.samples_used,
                "parameters": self.parameters,
                "witness": self.witness,
                "details": self.details,
            }
        )  # type: ignore[no-any-return]

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2) + "\n"

    def raise_for_verdict(self) -> None:
        if self.verdict is Verdict.FAIL:
            raise ConditionFailedException(self)
