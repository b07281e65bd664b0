"""Pygments styles rendering the ANSI colors of ``command-output`` blocks."""

from pygments.style import Style
from pygments.styles import default, monokai
from pygments.token import Token
from pygments_ansi_color import color_tokens

# Verdicts are green, yellow and bright red in the terminal
PALETTE = {
    "Black": "#000000",
    "Red": "#D62828",
    "Green": "#3FA34D",
    "Yellow": "#E0A100",
    "Blue": "#3465A4",
    "Magenta": "#B4009E",
    "Cyan": "#2AA1B3",
    "White": "#FFFFFF",
}


def _with_ansi(base: type[Style]) -> dict[object, str]:
    styles = dict(base.styles)
    styles.update(color_tokens(PALETTE, PALETTE))
    # the dimmed "ellbranch >" prefix of log lines
    styles[Token.Color.Faint.Cyan] = "#5C7F87"
    return styles


class AnsiDefaultStyle(default.DefaultStyle):
    styles = _with_ansi(default.DefaultStyle)  # noqa: RUF012


class AnsiMonokaiStyle(monokai.MonokaiStyle):
    styles = _with_ansi(monokai.MonokaiStyle)  # noqa: RUF012
