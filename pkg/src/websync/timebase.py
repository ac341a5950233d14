"""Simulated-time helpers.

All simulated timestamps are integer milliseconds from a zero epoch; there
are no wall-clock or timezone semantics.  The text rendering used in
documents is an ISO-8601-style instant anchored at 1970-01-01T00:00:00.000Z
purely as a readable encoding of the millisecond offset.
"""

import re
from datetime import datetime, timedelta

MS_PER_SECOND = 1000

_EPOCH = datetime(1970, 1, 1)
_TS_RE = re.compile(r"^(\d{4})-(\d{2})-(\d{2})T(\d{2}):(\d{2}):(\d{2})\.(\d{3})Z$")


def ms_from_seconds(seconds):
    """Quantize a duration/instant given in seconds to integer ms."""
    return round(seconds * MS_PER_SECOND)


def seconds_from_ms(ms):
    return ms / MS_PER_SECOND


def format_ts(ms):
    """Render a millisecond timestamp as e.g. ``1970-01-01T00:00:12.345Z``."""
    if ms < 0:
        raise ValueError("negative timestamp: %r" % (ms,))
    dt = _EPOCH + timedelta(milliseconds=ms)
    return "%s.%03dZ" % (dt.strftime("%Y-%m-%dT%H:%M:%S"), dt.microsecond // 1000)


def parse_ts(text):
    """Inverse of :func:`format_ts`; strict about the 3-digit fraction."""
    match = _TS_RE.match(text)
    if not match:
        raise ValueError("bad timestamp syntax: %r" % (text,))
    year, month, day, hour, minute, second, milli = map(int, match.groups())
    try:
        dt = datetime(year, month, day, hour, minute, second, milli * 1000)
    except ValueError:
        raise ValueError("bad timestamp value: %r" % (text,)) from None
    delta = dt - _EPOCH
    return delta.days * 86_400_000 + delta.seconds * 1000 + delta.microseconds // 1000
