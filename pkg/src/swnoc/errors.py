"""Exception and warning types shared across the toolkit."""


class SwnocError(Exception):
    """Base class for all toolkit-specific errors."""


class TopologyError(SwnocError):
    """A topology violates a structural invariant (duplicate link, bad endpoint, ...)."""


class GenerationFailed(SwnocError):
    """Constrained random generation exhausted its retry budget."""

    def __init__(self, message, attempts=None):
        super().__init__(message)
        self.attempts = attempts


class RoutingUnreachable(SwnocError):
    """No legal route exists between a source/destination pair that carries traffic."""

    def __init__(self, message, src=None, dst=None):
        super().__init__(message)
        self.src = src
        self.dst = dst


class DeadlockError(SwnocError):
    """The cycle-level simulator detected a standstill: buffered flits but no progress."""

    def __init__(self, message, cycle=None, stalled_flits=None):
        super().__init__(message)
        self.cycle = cycle
        self.stalled_flits = stalled_flits


class SearchSpaceTooLarge(SwnocError):
    """An exhaustive search was refused because the candidate count exceeds the cap."""

    def __init__(self, message, space_size=None, cap=None):
        super().__init__(message)
        self.space_size = space_size
        self.cap = cap


class NoFailurePossible(SwnocError):
    """Aging cannot advance: no surviving vertical link carries any stress."""


class SaturationWarning(UserWarning):
    """The simulator delivered noticeably fewer packets than were injected."""
