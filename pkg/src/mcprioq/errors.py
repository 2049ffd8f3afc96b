"""Exception types shared across the package."""


class InputError(ValueError):
    """Malformed caller input: node ids, factors, thresholds, CLI values."""


class StreamParseError(InputError):
    """Malformed transition-stream line."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class SnapshotError(InputError):
    """Invalid or corrupt snapshot data."""

    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class TraversalAnomalyError(RuntimeError):
    """A queue traversal exceeded its termination bound.

    Raised when a forward walk visits more entries than the current list
    length plus the allowance for concurrent swaps and unlinks. A healthy
    structure never triggers this; it exists so a linking bug shows up as a
    loud error instead of an infinite loop.
    """


class UseAfterReclaimError(RuntimeError):
    """A reader touched an object that reclamation already destroyed.

    This is the canary check: destroyed objects are flagged, not freed, and
    every traversal step tests the flag. Seeing this error means a grace
    period was computed wrongly somewhere.
    """
