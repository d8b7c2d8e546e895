"""Exception hierarchy shared by the planner modules.

Split by how the CLI maps failures to exit codes: bad input files and
bad argument values are usage/configuration problems (exit 1), while
infeasible demands discovered during planning are domain outcomes that
deserve a structured diagnostic (exit 2).
"""

from __future__ import annotations

from typing import Any


class PlannerError(Exception):
    """Base class for every error raised by this package."""


class InputError(PlannerError):
    """Unreadable or malformed input file (scenario, params, MCS table)."""


class DomainError(PlannerError, ValueError):
    """Argument outside an operation's mathematical domain."""


class InfeasibleError(PlannerError):
    """No plan satisfying the QoS constraints exists for the given input."""

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.details = dict(details)

    def to_dict(self) -> dict[str, Any]:
        return {"error": type(self).__name__, "message": str(self), **self.details}


class InfeasibleDemandError(InfeasibleError):
    """A single offered load exceeds what any MCS step can deliver."""


class EmptyRegionError(InfeasibleError):
    """A group's placement region came out empty."""


class QosViolationError(PlannerError):
    """Internal consistency failure: an emitted plan violated QoS on re-check."""
