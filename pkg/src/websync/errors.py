"""Exception hierarchy shared across the toolkit."""


class WebSyncError(Exception):
    """Base class for all toolkit errors."""


class ChangePreconditionViolation(WebSyncError):
    """A change event cannot be applied to the store it targets."""


class InvalidWindow(WebSyncError):
    """A change-list window has from > until."""


class MalformedDocument(WebSyncError):
    """A synchronization document failed to parse under the strict profile.

    ``position`` is a human-readable locator (entry ordinal or parser
    offset) when one is available.
    """

    def __init__(self, message, position=None):
        if position is not None:
            message = "%s (at %s)" % (message, position)
        super().__init__(message)
        self.position = position


class MissingPayload(WebSyncError):
    """A dump is missing the payload for a manifest entry."""


class CorruptDump(WebSyncError):
    """A dump member's bytes do not match its manifest digest/size."""


class SourceUnavailable(WebSyncError):
    """The source endpoint failed to serve a request."""


class OutOfOrderChangeList(WebSyncError):
    """A fetched change list violates canonical ordering."""


class StaleSession(WebSyncError):
    """The requested change window is no longer available (reserved)."""


class SchedulingInPast(WebSyncError):
    """An event was scheduled before the simulated clock's current time."""


class EmptyInterval(WebSyncError):
    """An averaging interval has zero or negative length."""


class EmptyCycle(WebSyncError):
    """A transfer cycle moved zero bytes; efficiency is undefined."""


class ConfigError(WebSyncError):
    """A configuration file or override is invalid.

    ``key`` identifies the offending entry as ``section.name`` when known.
    """

    def __init__(self, message, key=None):
        if key is not None:
            message = "%s: %s" % (key, message)
        super().__init__(message)
        self.key = key


class MissingColumns(WebSyncError):
    """An aggregate CSV lacks columns required for plot data emission."""
