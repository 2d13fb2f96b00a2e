"""Exception types shared across the package."""


class SafelightError(Exception):
    """Base class for all errors raised by safelight."""


class SpecValidationError(SafelightError):
    """A network specification is malformed or self-contradictory."""


class AssumptionViolationError(SafelightError):
    """The network violates a structural condition required for sound
    interval bounds (flow-bound headroom or local-role disjointness)."""


class ReachExplosionError(SafelightError):
    """Multi-step reach would exceed the configured branch budget."""


class GridError(SafelightError):
    """A partition grid is inconsistent with the request made of it."""


class EmptyWinningSetError(SafelightError):
    """The safety game removed every cell; the partition is too coarse."""


class EnumerationCapError(SafelightError):
    """The control-sequence space is larger than the configured cap."""


class PlanInfeasibleError(SafelightError):
    """No control sequence satisfies the plan constraints.

    Carries counts of where candidate sequences were rejected so callers
    can distinguish path-safety failures from terminal-set failures.
    """

    def __init__(self, message, checked=0, path_failures=0, terminal_failures=0):
        super().__init__(message)
        self.checked = checked
        self.path_failures = path_failures
        self.terminal_failures = terminal_failures


class RecursiveFeasibilityError(SafelightError):
    """A closed loop that started feasible hit an infeasible step."""


class UnrecoverableStateError(SafelightError):
    """The current cell cannot be driven into the terminal set."""


class ScenarioError(SafelightError):
    """A scenario configuration file is malformed."""
