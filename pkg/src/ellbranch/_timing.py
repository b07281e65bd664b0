import time
from datetime import timedelta


def get_timedelta_since(start: float) -> timedelta:
    return timedelta(seconds=time.monotonic() - start)


def format_timedelta(delta: timedelta) -> str:
    """``H:MM:SS.mmm``; short solves and checks need sub-second resolution."""
    milliseconds = round(delta.microseconds / 1000)
    whole = timedelta(delta.days, delta.seconds)
    if milliseconds == 1000:
        whole += timedelta(seconds=1)
        milliseconds = 0
    return f"{whole}.{milliseconds:03d}"
