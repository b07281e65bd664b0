from __future__ import annotations

from typing import TYPE_CHECKING, Any, Sequence

if TYPE_CHECKING:
    from ._reports import ConditionReport


class BaseEllbranchException(Exception):
    """
    Base exception used for exceptions thrown by ellbranch.

    :param message: A user-facing message explaining what happened.
    :param exit_code:

        the exit code to use for the ellbranch process if the exception is not
        caught.

        - 1 means a usage, configuration or input error
        - 2 means a check failed and a witness or report was produced
    """

    def __init__(self, message: str, exit_code: int = 1) -> None:
        super().__init__(message)
        self._message = message
        self.exit_code = exit_code

    def __str__(self) -> str:
        return self._message


class InvalidInputException(BaseEllbranchException):
    def __init__(self, what: str) -> None:
        super().__init__(f"Invalid input: {what}")


class DimensionMismatchException(BaseEllbranchException):
    def __init__(self, expected: int, got: int, what: str = "matrix") -> None:
        super().__init__(
            f"Dimension mismatch for {what}: expected {expected}, got {got}"
        )
        self.expected = expected
        self.got = got


class InvalidParameterException(BaseEllbranchException):
    def __init__(self, name: str, value: Any, reason: str) -> None:
        super().__init__(f"Invalid value for '{name}' ({value!r}): {reason}")
        self.name = name


class AdmissibilityException(BaseEllbranchException):
    def __init__(self, point: Sequence[float], min_eigenvalue: float) -> None:
        super().__init__(
            f"Matrix is not admissible at x={list(point)}: smallest"
            f" eigenvalue of A + M(x) is {min_eigenvalue:.3e}"
        )
        self.point = list(point)
        self.min_eigenvalue = min_eigenvalue


class EmptyBranchException(BaseEllbranchException):
    def __init__(self, point: Sequence[float]) -> None:
        super().__init__(
            f"The branch is empty at x={list(point)}: no shift of the"
            " identity reaches the zero locus of the operator"
        )
        self.point = list(point)


class SamplerExhaustedException(BaseEllbranchException):
    def __init__(self, what: str, attempts: int) -> None:
        super().__init__(
            f"Sampler exhausted after {attempts} attempts: {what}"
        )


class BracketException(BaseEllbranchException):
    def __init__(self, what: str) -> None:
        super().__init__(
            f"Internal error, bisection failed to bracket: {what}"
        )


class StencilOutOfDomainException(BaseEllbranchException):
    def __init__(self, node: Sequence[int]) -> None:
        super().__init__(
            f"The stencil around node {tuple(node)} leaves the domain mask"
        )
        self.node = tuple(node)


class SpectrumViolationException(BaseEllbranchException):
    def __init__(
        self,
        point: Sequence[float],
        spectrum: Sequence[float],
        lower: float,
        upper: float,
    ) -> None:
        super().__init__(
            f"Coefficient spectrum {list(spectrum)} at x={list(point)} is not"
            f" within [{lower}, {upper}]"
        )
        self.point = list(point)


class UnsupportedOperationException(BaseEllbranchException):
    pass


class PreconditionException(BaseEllbranchException):
    pass


class ConfigException(BaseEllbranchException):
    def __init__(self, source: str, message: str) -> None:
        super().__init__(f"Invalid configuration in {source}: {message}")


class NonConvergenceException(BaseEllbranchException):
    def __init__(self, sweeps: int, residuals: list[float]) -> None:
        last = residuals[-1] if residuals else float("nan")
        super().__init__(
            f"Solver did not converge after {sweeps} sweeps"
            f" (last update {last:.3e})",
            exit_code=2,
        )
        self.sweeps = sweeps
        self.residuals = residuals


class ConditionFailedException(BaseEllbranchException):
    def __init__(self, report: ConditionReport) -> None:
        super().__init__(f"Check '{report.check}' failed", exit_code=2)
        self.report = report
