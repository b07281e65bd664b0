# ruff: noqa:D100,D101,D102,D103
from __future__ import annotations

import json
import logging
import os
import shlex
import sys
import time
from argparse import (
    Action,
    ArgumentError,
    ArgumentParser,
    Namespace,
    RawDescriptionHelpFormatter,
    _AppendAction,
)
from dataclasses import dataclass, field
from importlib.metadata import version
from pathlib import Path
from typing import Any, Callable, NoReturn

from . import _io
from ._branches import (
    TruncatedLinear,
    branch_condition_check,
    monotonicity_check,
    natural_constraint,
    nondegeneracy_check,
    truncation_bound_check,
)
from ._codec import (
    branch_from_dict,
    decode,
    load_document,
    map_from_dict,
    operator_from_dict,
    problem_from_dict,
    sampler_from_dict,
    set_from_dict,
)
from ._conditions import (
    CLASSICAL_RADII,
    classical_falsify,
    gntd_estimate,
    sum_duals_check,
    ucf_check,
)
from ._config import Config, RunConfig
from ._domains import domain_from_dict
from ._ellset import (
    DEFAULT_C_MAX,
    DEFAULT_EPS,
    EllipticMapSpec,
    EllipticSetSpec,
    cone_certificate,
    contains,
    dual,
    dual_contains,
    hausdorff_estimate,
    uusc_check,
)
from ._exceptions import (
    BaseEllbranchException,
    ConditionFailedException,
    ConfigException,
    NonConvergenceException,
)
from ._logging import colored_verdict, setup_logging
from ._reports import ConditionReport, Verdict, to_jsonable
from ._sampling import SamplerSpec
from ._solver import (
    convergence_study,
    convexity_check,
    is_decreasing,
    perron_solve,
)
from ._symcore import SymMat
from ._timing import format_timedelta, get_timedelta_since

LOGGER = logging.getLogger(__name__)


class _SplitAppendAction(_AppendAction):
    def __call__(
        self,
        parser: ArgumentParser,  # noqa:ARG002
        namespace: Namespace,
        values: Any,
        option_string: str | None = None,  # noqa:ARG002
    ) -> None:
        items = getattr(namespace, self.dest, None)
        if items is None:
            items = []
        try:
            parsed = [float(v.strip()) for v in values.split(",") if v.strip()]
        except ValueError as exc:
            raise ArgumentError(
                self, f"expected numbers, got {values!r}"
            ) from exc
        setattr(namespace, self.dest, [*items, *parsed])


class _ArgumentParser(ArgumentParser):
    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        # usage errors share the exit code of configuration errors
        self.exit(1, f"{self.prog}: error: {message}\n")


class BooleanOptionalAction(Action):
    def __call__(
        self,
        parser: ArgumentParser,  # noqa:ARG002
        namespace: Namespace,
        values: Any,  # noqa:ARG002
        option_string: str | None = None,
    ) -> None:
        assert option_string is not None

        if option_string in self.option_strings:
            setattr(
                namespace, self.dest, not option_string.startswith("--no-")
            )

    def format_usage(self) -> str:
        return " | ".join(self.option_strings)


@dataclass
class Outcome:
    """What a command produced: the JSON payload and a human summary."""

    data: dict[str, Any]
    lines: list[str] = field(default_factory=list)
    report: ConditionReport | None = None
    artifact: str | None = None
    """Text written to ``--output`` instead of the JSON payload."""


def _add_sampler_arguments(parser: ArgumentParser) -> None:
    parser.add_argument(
        "--samples", type=int, help="Number of samples (default: 10000)"
    )
    parser.add_argument(
        "--cap", type=float, help="Largest sampled matrix norm (default: 1000)"
    )


def _parse_args(args: list[str] | None = None) -> Namespace:
    parser = _ArgumentParser(
        prog="ellbranch",
        formatter_class=RawDescriptionHelpFormatter,
        description=(
            "Elliptic sets, branches of fully nonlinear operators, their"
            " structural conditions, and a Perron solver for the Dirichlet"
            " problem."
        ),
        epilog="""\
Environment variables:
  ELLBRANCH_ADDOPTS\t\tExtra command line arguments, prepended to other arguments
""",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=f"%(prog)s {version('ellbranch')}",
    )
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="Be more verbose"
    )
    parser.add_argument(
        "-q", "--quiet", action="count", default=0, help="Be more quiet"
    )
    parser.add_argument(
        "--colors",
        "--no-colors",
        action=BooleanOptionalAction,
        nargs=0,
        help=(
            "Force or prevent a colored output"
            " (default: true if stdout is a tty, false otherwise)"
        ),
    )
    parser.add_argument(
        "--json",
        action="store_true",
        help="Print the report as JSON instead of a summary",
    )
    parser.add_argument(
        "--seed",
        type=int,
        default=0,
        help="Root seed of every sampler (default: %(default)d)",
    )
    parser.add_argument(
        "-j",
        "--threads",
        type=int,
        default=1,
        help=(
            "Number of threads evaluating samples, 0 uses the number of cpus"
            " on the machine (default: %(default)d)"
        ),
    )
    parser.add_argument(
        "-o",
        "--output",
        help="Where to write the report, grid or table of the command",
    )
    parser.add_argument(
        "--log-file", help="A file receiving every log record, at debug level"
    )

    commands = parser.add_subparsers(dest="command", metavar="command")
    commands.required = True

    cmd = commands.add_parser(
        "dual", help="Membership of a matrix in a set and its dual"
    )
    cmd.add_argument(
        "--set", required=True, help="A set kind or a JSON descriptor"
    )
    cmd.add_argument(
        "--matrix",
        required=True,
        help="A JSON matrix, like [[1,0],[0,-1]]",
    )
    cmd.add_argument(
        "--eps", type=float, help="Interior margin of the dual test"
    )

    cmd = commands.add_parser(
        "cone", help="Certify a matrix in the cone of a set"
    )
    cmd.add_argument(
        "--set", required=True, help="A set kind or a JSON descriptor"
    )
    cmd.add_argument("--matrix", required=True, help="A JSON matrix")
    cmd.add_argument(
        "--cap", type=float, help="Largest scale of the cone grid"
    )

    cmd = commands.add_parser(
        "hausdorff", help="Estimate the distance of two sets"
    )
    cmd.add_argument(
        "--set",
        action="append",
        dest="sets",
        required=True,
        help="A set kind or JSON descriptor, given twice",
    )
    cmd.add_argument(
        "--dim", type=int, help="Matrix size, if the sets leave it open"
    )
    cmd.add_argument(
        "--radius", type=float, help="Radius of the sampled matrix ball"
    )
    cmd.add_argument("--samples", type=int, help="Number of samples")

    for name, help_text in (
        ("verify-uusc", "Check that a map is uniformly upper semicontinuous"),
        ("verify-ucf", "Check the uniform continuity of an operator"),
        ("check-conditions", "Run every structural check of a branch"),
    ):
        cmd = commands.add_parser(name, help=help_text)
        cmd.add_argument("input", help="A TOML or JSON description")
        cmd.add_argument("--eps", type=float, help="Margin of the inclusion")
        if name == "verify-uusc":
            cmd.add_argument("--delta", type=float, help="Radius to certify")
        if name == "verify-ucf":
            cmd.add_argument(
                "--eps-max", type=float, help="Largest allowed margin"
            )
        _add_sampler_arguments(cmd)

    cmd = commands.add_parser(
        "falsify-classical",
        help="Show that the classical structure condition fails for a pair",
    )
    cmd.add_argument(
        "--xn",
        action=_SplitAppendAction,
        dest="radii",
        help=(
            "Radii of the probing points, comma separated"
            " (default: 1e-1 .. 1e-8)"
        ),
    )

    for name, help_text in (
        ("solve", "Solve a Dirichlet problem with the Perron scheme"),
        ("converge", "Measure the error over a ladder of grid spacings"),
    ):
        cmd = commands.add_parser(name, help=help_text)
        cmd.add_argument("input", help="A TOML or JSON problem description")
        cmd.add_argument(
            "--tol", type=float, help="Stopping threshold on updates"
        )
        if name == "solve":
            cmd.add_argument("--h", type=float, help="Grid spacing")
        else:
            cmd.add_argument(
                "--h-ladder",
                action=_SplitAppendAction,
                dest="h_ladder",
                help="Grid spacings, comma separated",
            )

    return parser.parse_args(args)


def _parse_set(value: str) -> EllipticSetSpec:
    value = value.strip()
    if value.startswith("{"):
        try:
            data = json.loads(value)
        except json.JSONDecodeError as exc:
            raise ConfigException("--set", str(exc)) from exc
    else:
        data = {"kind": value}
    return decode(set_from_dict, data, "--set")


def _parse_matrix(value: str) -> SymMat:
    try:
        rows = json.loads(value)
    except json.JSONDecodeError as exc:
        raise ConfigException("--matrix", str(exc)) from exc
    return decode(SymMat, rows, "--matrix")


def _flag(value: bool) -> str:
    return "true" if value else "false"


def _report_lines(report: ConditionReport, *, colors: bool) -> list[str]:
    verdict = (
        colored_verdict(report.verdict) if colors else report.verdict.value
    )
    lines = [f"{report.check}: {verdict} ({report.samples_used} samples)"]
    if report.witness is not None:
        witness = json.dumps(to_jsonable(report.witness), sort_keys=True)
        lines.append(f"  witness: {witness}")
    return lines


def _load(run: RunConfig) -> dict[str, Any]:
    assert run.input is not None
    return load_document(run.input)


def _sampler(
    config: Config, run: RunConfig, document: dict[str, Any]
) -> SamplerSpec:
    defaults: dict[str, Any] = {"seed": config.seed, "threads": config.threads}
    if "samples" in run.overrides:
        defaults["count"] = run.overrides["samples"]
    if "cap" in run.overrides:
        defaults["cap"] = run.overrides["cap"]
    return decode(
        lambda table: sampler_from_dict(table, **defaults),
        document.get("sampler"),
        "[sampler]",
    )


def _constraint(document: dict[str, Any], op: Any) -> EllipticMapSpec:
    domain = decode(domain_from_dict, document.get("domain"), "[domain]")
    if "constraint" in document:
        return decode(
            lambda table: map_from_dict(table, domain),
            document["constraint"],
            "[constraint]",
        )
    return natural_constraint(op, domain)


def _dual(config: Config, run: RunConfig, args: Namespace) -> Outcome:
    S = _parse_set(args.set)
    A = _parse_matrix(args.matrix)
    eps = run.resolve(None, "eps", DEFAULT_EPS)
    in_set = contains(S, A)
    in_dual = dual_contains(S, A, eps)
    LOGGER.debug("dual of %s at eps=%s", S.to_dict(), eps)
    return Outcome(
        data={
            "set": S.to_dict(),
            "dual": dual(S, eps).to_dict(),
            "matrix": A,
            "eps": eps,
            "in_set": in_set,
            "in_dual": in_dual,
        },
        lines=[f"in_set: {_flag(in_set)}", f"in_dual: {_flag(in_dual)}"],
    )


def _cone(config: Config, run: RunConfig, args: Namespace) -> Outcome:
    S = _parse_set(args.set)
    A = _parse_matrix(args.matrix)
    C_max = run.resolve(None, "cap", DEFAULT_C_MAX)
    certificate = cone_certificate(S, A, C_max=C_max)
    data: dict[str, Any] = {
        "set": S.to_dict(),
        "matrix": A,
        "C_max": C_max,
        "in_cone": certificate is not None,
        "eps": None,
        "R": None,
    }
    lines = [f"in_cone: {_flag(certificate is not None)}"]
    if certificate is not None:
        data["eps"], data["R"] = certificate
        lines.append(f"eps: {certificate[0]:g}, R: {certificate[1]:g}")
    return Outcome(data=data, lines=lines)


def _hausdorff(config: Config, run: RunConfig, args: Namespace) -> Outcome:
    if len(args.sets) != 2:
        raise ConfigException(
            "--set", f"expected two sets, got {len(args.sets)}"
        )
    first, second = (_parse_set(value) for value in args.sets)
    overrides = {
        key: value
        for key, value in (
            ("count", run.overrides.get("samples")),
            ("radius", run.overrides.get("radius")),
        )
        if value is not None
    }
    sampler = config.sampler(**overrides)
    estimate = hausdorff_estimate(first, second, sampler, args.dim)
    return Outcome(
        data={
            "sets": [first.to_dict(), second.to_dict()],
            "radius": sampler.radius,
            "samples": sampler.count,
            "estimate": estimate,
        },
        lines=[f"hausdorff: {estimate:.6g}"],
    )


def _verify_uusc(config: Config, run: RunConfig, args: Namespace) -> Outcome:
    document = _load(run)
    check = document.get("check", {})
    if "map" in document:
        domain = (
            decode(domain_from_dict, document["domain"], "[domain]")
            if "domain" in document
            else None
        )
        theta: EllipticMapSpec = decode(
            lambda table: map_from_dict(table, domain),
            document["map"],
            "[map]",
        )
    else:
        theta = decode(branch_from_dict, document, str(run.input)).theta

    report = uusc_check(
        theta,
        run.resolve(check, "eps", 0.5),
        run.resolve(check, "delta", 0.25),
        _sampler(config, run, document),
    )
    return Outcome(
        data=report.to_dict(),
        lines=_report_lines(report, colors=config.colors),
        report=report,
    )


def _verify_ucf(config: Config, run: RunConfig, args: Namespace) -> Outcome:
    document = _load(run)
    check = document.get("check", {})
    if "operator" not in document:
        raise ConfigException(str(run.input), "missing table [operator]")
    op = decode(operator_from_dict, document["operator"], "[operator]")
    report = ucf_check(
        op,
        _constraint(document, op),
        run.resolve(check, "eps", 0.1),
        _sampler(config, run, document),
        run.resolve(check, "eps_max", None),
    )
    return Outcome(
        data=report.to_dict(),
        lines=_report_lines(report, colors=config.colors),
        report=report,
    )


def _falsify_classical(
    config: Config, run: RunConfig, args: Namespace
) -> Outcome:
    radii = args.radii or list(CLASSICAL_RADII)
    report = classical_falsify(radii=radii)
    lines = _report_lines(report, colors=config.colors)[:1]
    lines.extend(
        f"  x_n={entry['radius']:.1e} gap={entry['gap']:.16g}"
        f" modulus={entry['modulus_argument']:.3e}"
        for entry in report.details["gap_trace"]
    )
    return Outcome(data=report.to_dict(), lines=lines, report=report)


def _check_conditions(
    config: Config, run: RunConfig, args: Namespace
) -> Outcome:
    document = _load(run)
    check = document.get("check", {})
    branch = decode(branch_from_dict, document, str(run.input))
    sampler = _sampler(config, run, document)
    theta = branch.theta

    reports = [
        monotonicity_check(branch.operator, branch.constraint, sampler),
        branch_condition_check(branch, sampler),
        nondegeneracy_check(branch, sampler, run.resolve(check, "eps", 1e-3)),
        sum_duals_check(theta, sampler),
        convexity_check(branch.domain, theta, sampler),
    ]
    if isinstance(branch.operator, TruncatedLinear):
        reports.append(
            truncation_bound_check(
                branch.operator,
                branch.domain,
                run.resolve(check, "eps", 1e-3),
                sampler,
            )
        )
    gap = gntd_estimate(
        branch.operator,
        branch.constraint,
        run.resolve(check, "r", 0.5),
        sampler,
    )

    verdict = Verdict.combine(*(report.verdict for report in reports))
    lines = [
        line
        for report in reports
        for line in _report_lines(report, colors=config.colors)
    ]
    lines.append(f"identity gap at r: {gap:.6g}")
    failed = next((report for report in reports if not report.passed), None)
    return Outcome(
        data={
            "branch": branch.to_dict(),
            "verdict": verdict,
            "identity_gap": gap,
            "reports": [report.to_dict() for report in reports],
        },
        lines=lines,
        report=failed,
    )


def _problem_document(run: RunConfig) -> dict[str, Any]:
    document = _load(run)
    solver = dict(document.get("solver", {}))
    for key in ("h", "tol"):
        solver[key] = run.resolve(solver, key, None)
        if solver[key] is None:
            del solver[key]
    document["solver"] = solver
    return document


def _solve(config: Config, run: RunConfig, args: Namespace) -> Outcome:
    document = _problem_document(run)
    document["solver"].setdefault("seed", config.seed)
    problem = decode(problem_from_dict, document, str(run.input))
    sampler = config.sampler(count=256, cap=1e2)

    try:
        result = perron_solve(problem, sampler)
    except NonConvergenceException as exc:
        if config.output is not None:
            _io.write_json(
                _report_path(config.output),
                to_jsonable(
                    {
                        "converged": False,
                        "sweeps": exc.sweeps,
                        "history": exc.residuals,
                    }
                ),
            )
        raise

    data = {"converged": True, **result.report.to_dict()}
    if config.output is not None:
        _io.write_json(_report_path(config.output), data)
    lines = [
        f"converged after {result.report.sweeps} sweeps"
        f" on {result.report.nodes} nodes (h={result.report.h:g})",
        f"last update: {result.report.residual:.3e}",
    ]
    if result.report.max_error is not None:
        lines.append(f"max error: {result.report.max_error:.3e}")
    return Outcome(data=data, lines=lines, artifact=result.solution.to_csv())


def _converge(config: Config, run: RunConfig, args: Namespace) -> Outcome:
    document = _problem_document(run)
    document["solver"].setdefault("seed", config.seed)
    ladder = run.resolve(document["solver"], "h_ladder", None)
    if not ladder:
        raise ConfigException(
            str(run.input),
            "no grid spacings, set [solver] h_ladder or --h-ladder",
        )
    document["solver"].setdefault("h", min(ladder))
    problem = decode(problem_from_dict, document, str(run.input))

    rows = convergence_study(
        problem,
        [float(h) for h in ladder],
        output=config.output,
        sampler=config.sampler(count=256, cap=1e2),
    )
    decreasing = is_decreasing(rows)
    lines = ["h,max_error,sweeps"]
    lines.extend(f"{row.h!r},{row.max_error!r},{row.sweeps}" for row in rows)
    lines.append(f"decreasing: {_flag(decreasing)}")
    return Outcome(
        data={
            "rows": [
                {"h": row.h, "max_error": row.max_error, "sweeps": row.sweeps}
                for row in rows
            ],
            "decreasing": decreasing,
        },
        lines=lines,
    )


def _report_path(output: Path) -> Path:
    return output.with_name(f"{output.stem}.report.json")


CommandHandler = Callable[[Config, RunConfig, Namespace], Outcome]

COMMAND_HANDLERS: dict[str, CommandHandler] = {
    "dual": _dual,
    "cone": _cone,
    "hausdorff": _hausdorff,
    "verify-uusc": _verify_uusc,
    "verify-ucf": _verify_ucf,
    "falsify-classical": _falsify_classical,
    "check-conditions": _check_conditions,
    "solve": _solve,
    "converge": _converge,
}


def _execute(config: Config, run: RunConfig, args: Namespace) -> None:
    start = time.monotonic()
    outcome = COMMAND_HANDLERS[run.command](config, run, args)
    elapsed = get_timedelta_since(start)

    if config.json:
        print(json.dumps(to_jsonable(outcome.data), indent=2))
    else:
        for line in outcome.lines:
            print(line)

    if config.output is not None:
        # converge writes its own table
        if run.command != "converge":
            if outcome.artifact is not None:
                _io.atomic_write(config.output, outcome.artifact)
            else:
                _io.write_json(config.output, to_jsonable(outcome.data))
        _io.write_json(
            _io.meta_path(config.output),
            {
                "command": run.command,
                "version": version("ellbranch"),
                "seed": config.seed,
                "threads": config.threads,
                "elapsed": format_timedelta(elapsed),
            },
        )
        LOGGER.info("Results written to %s", config.output)

    LOGGER.debug("%s took %s", run.command, format_timedelta(elapsed))
    if outcome.report is not None:
        outcome.report.raise_for_verdict()


@_io.instrument_streams()
def main(sys_args: list[str] | None = None) -> None:
    if sys_args is None:
        sys_args = sys.argv[1:]
    if env_args := os.environ.get("ELLBRANCH_ADDOPTS"):
        sys_args = shlex.split(env_args) + sys_args

    args = _parse_args(sys_args)
    verbosity = args.verbose - args.quiet
    try:
        config = Config(
            verbosity,
            args.colors,
            args.threads,
            args.seed,
            json=args.json,
            output=args.output,
            log_file=args.log_file,
        )
    except BaseEllbranchException as exc:
        print(f"ellbranch: {exc}", file=sys.stderr)
        raise SystemExit(exc.exit_code) from exc

    setup_logging(
        config.log_level,
        _io.STDERR,
        _io.LOG_FILE,
        colors=config.colors,
    )

    with _io.log_file(config.log_file):
        try:
            run = RunConfig(
                args.command,
                input=(
                    Path(args.input) if getattr(args, "input", None) else None
                ),
                output=config.output,
                seed=config.seed,
                overrides={
                    key: getattr(args, key, None)
                    for key in (
                        "eps",
                        "delta",
                        "eps_max",
                        "samples",
                        "cap",
                        "radius",
                        "tol",
                        "h",
                        "h_ladder",
                    )
                },
            )
            _execute(config, run, args)
        except BaseEllbranchException as exc:
            if config.verbosity >= 1 and not isinstance(
                exc, ConditionFailedException
            ):
                LOGGER.debug(exc, exc_info=exc)
            LOGGER.error("%s", exc)  # noqa: TRY400 we don't want the traceback
            raise SystemExit(exc.exit_code) from exc
        finally:
            if config.log_file is not None:
                LOGGER.info("Logs can be found at %s", config.log_file)


if __name__ == "__main__":
    main()
