from __future__ import annotations

import logging
from types import MappingProxyType, TracebackType
from typing import TYPE_CHECKING, TextIO

from colorama import Back, Fore, Style, init

from ._io import ANSI_SEQUENCE
from ._reports import Verdict

if TYPE_CHECKING:
    from contextvars import ContextVar

PREFIX = "ellbranch >"

LEVEL_COLORS = MappingProxyType(
    {
        logging.DEBUG: Fore.CYAN,
        logging.WARNING: Fore.YELLOW,
        logging.ERROR: Fore.RED + Style.BRIGHT,
        logging.CRITICAL: Back.RED + Fore.WHITE + Style.BRIGHT,
    }
)
VERDICT_COLORS = MappingProxyType(
    {
        Verdict.PASS: Fore.GREEN,
        Verdict.PASS_UP_TO_CAP: Fore.YELLOW,
        Verdict.FAIL: Fore.RED + Style.BRIGHT,
    }
)


def colored_verdict(verdict: Verdict) -> str:
    return f"{VERDICT_COLORS[verdict]}{verdict.value}{Style.RESET_ALL}"


class _ConsoleFormatter(logging.Formatter):
    """
    Colors messages by level, or strips every color when ``colors`` is off.

    Verdicts embedded in messages by :func:`colored_verdict` are stripped
    the same way, so the log file never holds escape sequences.
    """

    def __init__(self, *, colors: bool) -> None:
        if colors:
            fmt = (
                f"{Fore.CYAN}{Style.DIM}{PREFIX}{Style.RESET_ALL}"
                f" %(level_color)s%(message)s{Style.RESET_ALL}"
            )
        else:
            fmt = f"{PREFIX} [%(levelname)s] %(message)s"
        super().__init__(fmt=fmt)
        self._colors = colors

    def formatMessage(self, record: logging.LogRecord) -> str:  # noqa: N802
        if not self._colors:
            return ANSI_SEQUENCE.sub("", super().formatMessage(record))
        record.__dict__["level_color"] = LEVEL_COLORS.get(record.levelno, "")
        return super().formatMessage(record)

    def formatException(  # noqa: N802
        self,
        ei: (
            tuple[type[BaseException], BaseException, TracebackType | None]
            | tuple[None, None, None]
        ),
    ) -> str:
        lines = super().formatException(ei).splitlines()
        color = Fore.CYAN if self._colors else ""
        return color + "\n".join(f"{PREFIX} {line}" for line in lines)


class _ContextHandler(logging.StreamHandler):  # type: ignore[type-arg]
    """Emit to whichever stream ``target`` holds in the current context."""

    def __init__(self, target: ContextVar[TextIO], level: int) -> None:
        self._target = target
        super().__init__()
        self.setLevel(level)

    @property  # type: ignore[override]
    def stream(self) -> TextIO:
        return self._target.get()

    @stream.setter
    def stream(self, _value: TextIO) -> None:
        # StreamHandler.__init__ assigns sys.stderr, the target wins
        pass


def setup_logging(
    level: int,
    tty_output: ContextVar[TextIO],
    log_file: ContextVar[TextIO],
    *,
    colors: bool,
) -> None:
    if colors:
        init(strip=False)

    console = _ContextHandler(tty_output, level)
    console.setFormatter(_ConsoleFormatter(colors=colors))

    # The log file always gets everything, uncolored
    logfile = _ContextHandler(log_file, logging.DEBUG)
    logfile.setFormatter(_ConsoleFormatter(colors=False))

    root = logging.getLogger()
    root.setLevel(logging.NOTSET)
    root.addHandler(console)
    root.addHandler(logfile)
