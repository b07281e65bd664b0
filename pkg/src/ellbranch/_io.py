"""
Output streams and result files.

Console output goes through context variables so that a run can be captured
in isolation and mirrored, without colors, to the ``--log-file``. Result
files are always replaced atomically.
"""

from __future__ import annotations

import io
import json
import os
import re
import sys
import tempfile
from contextlib import (
    ExitStack,
    contextmanager,
    redirect_stderr,
    redirect_stdout,
)
from contextvars import ContextVar
from pathlib import Path
from typing import Any, Iterator, TextIO

STDOUT = ContextVar[TextIO]("STDOUT")
STDERR = ContextVar[TextIO]("STDERR")
LOG_FILE = ContextVar[TextIO]("LOG_FILE")

ANSI_SEQUENCE = re.compile(r"\x1b\[\d+(;\d+)*m")


class _Discard(io.TextIOWrapper):
    """The log file of runs without ``--log-file``."""

    def __init__(self) -> None:
        pass

    def read(self, size: int | None = None) -> str:  # noqa: ARG002
        raise io.UnsupportedOperation(
            "nothing to read from a discarded stream"
        )

    def write(self, data: str) -> int:
        return len(data)

    def flush(self) -> None:
        pass


class _Mirrored(io.TextIOWrapper):
    def __init__(self, target: ContextVar[TextIO]) -> None:
        self._target = target

    def read(self, size: int | None = None) -> str:  # noqa: ARG002
        raise io.UnsupportedOperation("console streams are write-only")

    def write(self, data: str) -> int:
        log = LOG_FILE.get()
        if not isinstance(log, _Discard):
            log.write(ANSI_SEQUENCE.sub("", data))
        return self._target.get().write(data)

    def flush(self) -> None:
        LOG_FILE.get().flush()
        self._target.get().flush()


@contextmanager
def instrument_streams() -> Iterator[None]:
    STDOUT.set(sys.stdout)
    STDERR.set(sys.stderr)
    LOG_FILE.set(_Discard())

    with ExitStack() as stack:
        stack.enter_context(redirect_stdout(_Mirrored(STDOUT)))
        stack.enter_context(redirect_stderr(_Mirrored(STDERR)))
        yield


@contextmanager
def log_file(path: Path | None) -> Iterator[None]:
    """Mirror every log record and console line to ``path`` while active."""
    with ExitStack() as stack:
        stream: TextIO = _Discard()
        if path is not None:
            path.parent.mkdir(parents=True, exist_ok=True)
            stream = stack.enter_context(path.open("w", encoding="utf-8"))

        token = LOG_FILE.set(stream)
        stack.callback(LOG_FILE.reset, token)
        yield


def atomic_write(path: Path, content: str) -> None:
    """
    Write ``content`` to ``path`` through a temporary file and a rename.

    Readers either see the previous file or the complete new one.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, temporary = tempfile.mkstemp(
        dir=path.parent, prefix=f".{path.name}.", suffix=".tmp"
    )
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as stream:
            stream.write(content)
        os.replace(temporary, path)
    except BaseException:
        Path(temporary).unlink(missing_ok=True)
        raise


def write_json(path: Path, data: Any) -> None:
    atomic_write(path, json.dumps(data, indent=2) + "\n")


def meta_path(path: Path) -> Path:
    """The sibling ``*.meta.json`` holding run metadata for ``path``."""
    return path.with_name(f"{path.stem}.meta.json")
