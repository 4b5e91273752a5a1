"""Shared exception types.

Every failure mode raised by the library maps to one of these classes so
callers (and the command line driver) can translate them into exit codes
without string matching.
"""


class KbmLabError(Exception):
    """Base class for all library errors."""


class ParameterError(KbmLabError):
    """A constructor or operation received an out-of-domain parameter."""


class DomainError(KbmLabError):
    """A geometric quantity was requested outside its validity domain."""


class DomainExitError(KbmLabError):
    """A simulated path left the admissible region of its state space."""

    def __init__(self, message, exit_time=None, path_index=None):
        super().__init__(message)
        self.exit_time = exit_time
        self.path_index = path_index


class StateError(KbmLabError):
    """A state object violates its invariants beyond tolerance."""


class NumericalError(KbmLabError):
    """Numerical blow-up or non-convergence; carries the failing step index."""

    def __init__(self, message, step_index=None, diagnostics=None):
        super().__init__(message)
        self.step_index = step_index
        self.diagnostics = diagnostics or {}


class InputError(KbmLabError):
    """Malformed input data (non-monotone grids, mismatched intervals, ...)."""


class RangeError(KbmLabError):
    """A requested range exceeds the available data (e.g. horizon too short)."""


class StatisticsError(KbmLabError):
    """Not enough data, or a statistical precondition failed."""


class ConfigError(KbmLabError):
    """Invalid run configuration; names the violated invariant."""
