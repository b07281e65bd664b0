from __future__ import annotations

import logging
import multiprocessing
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ._exceptions import ConfigException
from ._sampling import SamplerSpec

LOGGER = logging.getLogger(__name__)

COMMANDS = (
    "dual",
    "cone",
    "hausdorff",
    "verify-uusc",
    "verify-ucf",
    "falsify-classical",
    "check-conditions",
    "solve",
    "converge",
)

_PY_COLORS = {"1": True, "0": False}
# Checked in order, the first one set decides
_COLOR_VARIABLES = (
    ("NO_COLOR", False),
    ("FORCE_COLOR", True),
    ("GITHUB_ACTION", True),
    ("GITLAB_CI", True),
)


# pylint: disable=too-many-instance-attributes
class Config:
    """
    Holds the global configuration for ``ellbranch``.

    This contains the options shared by every command, as set from the
    command line.
    """

    colors: bool
    """
    Whether console output is colored.

    ``--colors``/``--no-colors`` decide when given. Otherwise ``PY_COLORS``
    (``"1"`` or ``"0"``, anything else is an error) is read first. Then a
    set ``NO_COLOR`` disables colors and a set ``FORCE_COLOR`` enables them.
    After that, GitHub Actions and GitLab CI get colors. Failing all of
    those, colors follow whether both stdout and stderr are terminals.
    """

    json: bool
    """
    Whether to print reports as JSON on stdout instead of a human summary.
    """

    log_file: Path | None
    """
    A file receiving a copy of every log record, at debug level.
    """

    output: Path | None
    """
    Where to write the command's artifact (report, grid or table).

    Timing and version metadata go to a sibling ``*.meta.json`` file.
    """

    seed: int
    """
    The root seed of every sampler. Identical seeds give identical outputs.
    """

    threads: int
    """
    The number of threads evaluating sample chunks.

    0 will use the number of cpus on the machine as given by
    :py:func:`multiprocessing.cpu_count`.
    """

    verbosity: int
    """Number of ``-v`` minus number of ``-q`` flags."""

    def __init__(
        self,
        verbosity: int,
        colors: bool | None,
        threads: int,
        seed: int,
        *,
        json: bool = False,
        output: str | None = None,
        log_file: str | None = None,
    ) -> None:
        self.verbosity = verbosity
        self.json = json
        self.seed = seed
        self.output = Path(output) if output is not None else None
        self.log_file = Path(log_file) if log_file is not None else None

        if threads < 0:
            raise ConfigException(
                "--threads", f"expected a non-negative count, got {threads}"
            )
        if threads == 0:
            threads = multiprocessing.cpu_count()
        self.threads = threads

        self.is_interactive = (
            sys.__stdout__ is not None
            and sys.__stdout__.isatty()
            and sys.__stderr__ is not None
            and sys.__stderr__.isatty()
        )
        self.colors = self._get_color_setting(colors)

    @property
    def log_level(self) -> int:
        return logging.INFO - 10 * self.verbosity

    def sampler(self, **overrides: Any) -> SamplerSpec:
        """The default sampler of this run: the root seed and thread count."""
        params = {"seed": self.seed, "threads": self.threads, **overrides}
        return SamplerSpec(**params)

    def _get_color_setting(self, colors: bool | None) -> bool:
        if colors is not None:
            return colors

        py_colors = os.environ.get("PY_COLORS")
        if py_colors is not None:
            if py_colors not in _PY_COLORS:
                raise ConfigException(
                    "PY_COLORS", f"expected '1' or '0', got {py_colors!r}"
                )
            return _PY_COLORS[py_colors]

        for variable, enabled in _COLOR_VARIABLES:
            if variable in os.environ:
                return enabled
        return self.is_interactive


@dataclass
class RunConfig:
    """
    One invocation of a command.

    :param command: one of :data:`COMMANDS`.
    :param input: the problem or check file, for commands taking one.
    :param output: where to write the artifact.
    :param seed: the root seed.
    :param overrides: command-line values for ``tol``, ``cap``, ``h``,
        ``samples`` and the like. Values set in the input file win.
    """

    command: str
    input: Path | None = None
    output: Path | None = None
    seed: int = 0
    overrides: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise ConfigException(
                "command line",
                f"unknown command {self.command!r}, expected one of"
                f" {', '.join(COMMANDS)}",
            )
        self.overrides = {
            key: value
            for key, value in self.overrides.items()
            if value is not None
        }

    def resolve(
        self, table: dict[str, Any] | None, key: str, default: Any
    ) -> Any:
        """The file table value, else the command line, else ``default``."""
        if table is not None and key in table:
            if key in self.overrides and self.overrides[key] != table[key]:
                LOGGER.warning(
                    "%s=%s from %s overrides the command line value %s",
                    key,
                    table[key],
                    self.input,
                    self.overrides[key],
                )
            return table[key]
        return self.overrides.get(key, default)
