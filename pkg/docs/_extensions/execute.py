"""
``command-output``: run a command at build time and show its colored output.

Commands run from the repository root, so they can refer to ``configs/``.
"""

from __future__ import annotations

import os
import shlex
import subprocess
from pathlib import Path
from typing import TYPE_CHECKING, Any

from docutils import nodes
from docutils.parsers.rst import Directive
from docutils.parsers.rst.directives import nonnegative_int
from sphinx.errors import ExtensionError

if TYPE_CHECKING:
    from sphinx.application import Sphinx

REPOSITORY_ROOT = Path(__file__).parents[2]


def _environment() -> dict[str, str]:
    env = os.environ.copy()
    # The docs show the defaults, not the options of whoever builds them
    env.pop("ELLBRANCH_ADDOPTS", None)
    env["PY_COLORS"] = "1"
    return env


class CommandOutputDirective(Directive):
    has_content = False
    final_argument_whitespace = True
    required_arguments = 1
    option_spec = {"returncode": nonnegative_int}  # noqa: RUF012

    def run(self) -> list[nodes.Node]:
        command = self.arguments[0].strip()
        expected = self.options.get("returncode", 0)

        proc = subprocess.run(
            shlex.split(command),
            cwd=REPOSITORY_ROOT,
            env=_environment(),
            check=False,
            stdout=subprocess.PIPE,
            stderr=subprocess.STDOUT,
            text=True,
        )
        if proc.returncode != expected:
            raise ExtensionError(
                f"'{command}' exited with {proc.returncode}, expected"
                f" {expected}:\n\n{proc.stdout}"
            )

        text = f"$ {command}\n{proc.stdout}"
        block = nodes.literal_block(text, text)
        block["language"] = "ansi"
        return [block]


def setup(app: Sphinx) -> dict[str, Any]:
    app.add_directive("command-output", CommandOutputDirective)
    return {"parallel_read_safe": True}
