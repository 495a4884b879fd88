"""Exception hierarchy shared across the package."""


class SchedulerError(Exception):
    """Base class for all errors raised by this package."""


class FormatError(SchedulerError):
    """An input file could not be parsed or is missing required fields."""


class GraphValidationError(SchedulerError):
    """A structurally invalid graph: cycles, dangling edges, duplicate ids."""


class PlanViolationError(SchedulerError):
    """A stream plan that breaks the one-stream-per-operator contract."""


class CoverageError(SchedulerError):
    """A plan or launch order that does not cover the graph exactly."""


class InfeasibleBlockError(SchedulerError):
    """An operator whose per-block demand exceeds a single SM's capacity."""
