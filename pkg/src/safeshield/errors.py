"""Exception hierarchy shared across the toolkit.

The CLI maps these onto process exit codes: config errors exit 2,
safety faults exit 3, solver faults exit 4.
"""


class SafeshieldError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(SafeshieldError):
    """Malformed or inconsistent configuration input."""


class SolverFault(SafeshieldError):
    """A convex solver failed to certify a solution."""


class SafetyFault(SafeshieldError):
    """Unrecoverable safety condition (e.g. empty safe action set).

    Training must abort on this fault: executing an unverified action
    would void the safety guarantee.
    """


class SimulationFault(SafeshieldError):
    """Non-finite state or reward produced by an environment."""
