from __future__ import annotations

import io
import json
import logging
import sys
from contextlib import (
    ExitStack,
    contextmanager,
    redirect_stderr,
    redirect_stdout,
)
from contextvars import Context
from dataclasses import dataclass
from typing import Any, Iterator

import numpy as np
from hypothesis import strategies as st

from ellbranch import SymMat
from ellbranch.__main__ import main

_ENTRIES = st.floats(min_value=-100, max_value=100, allow_nan=False)


@st.composite
def symmetric_matrices(
    draw: st.DrawFn, min_dim: int = 1, max_dim: int = 4
) -> SymMat:
    dim = draw(st.integers(min_value=min_dim, max_value=max_dim))
    values = draw(st.lists(_ENTRIES, min_size=dim * dim, max_size=dim * dim))
    return SymMat(np.reshape(values, (dim, dim)))


@contextmanager
def _root_handlers_restored() -> Iterator[None]:
    """Drop the handlers a run installs on the root logger."""
    root = logging.getLogger()
    previous = root.handlers
    root.handlers = []
    try:
        yield
    finally:
        for handler in root.handlers:
            handler.close()
        root.handlers = previous


@dataclass(frozen=True)
class Result:
    exit_code: int
    stdout: str
    stderr: str

    def json(self) -> Any:
        return json.loads(self.stdout)


def _run(args: list[str]) -> Result:
    out, err = io.StringIO(), io.StringIO()
    exit_code = 0

    with ExitStack() as stack:
        stack.enter_context(redirect_stdout(out))
        stack.enter_context(redirect_stderr(err))
        stack.enter_context(_root_handlers_restored())
        try:
            main(args)
        except SystemExit as exc:
            exit_code = 0 if exc.code is None else int(exc.code)

    return Result(exit_code, out.getvalue(), err.getvalue())


def execute(args: list[str], expected_status: int = 0) -> Result:
    """
    Run ellbranch with ``args`` in a fresh context and capture its streams.

    The captured output is echoed so that pytest shows it on failures.
    """
    result = Context().run(_run, args)
    print(result.stdout)
    print(result.stderr, file=sys.stderr)

    assert result.exit_code == expected_status, (
        f"'ellbranch {' '.join(args)}' exited with {result.exit_code},"
        f" expected {expected_status}"
    )
    return result


def cli(
    command: str,
    *args: str,
    colors: bool = False,
    json_output: bool = False,
    output: str | None = None,
    seed: int | None = None,
    expected_status: int = 0,
) -> Result:
    """Run a command verbosely, with the global flags placed before it."""
    flags = ["--verbose", "--colors" if colors else "--no-colors"]
    if json_output:
        flags.append("--json")
    if output is not None:
        flags.append(f"--output={output}")
    if seed is not None:
        flags.append(f"--seed={seed}")

    return execute([*flags, command, *args], expected_status)
