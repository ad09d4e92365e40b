"""Exception hierarchy for the planning engine."""


class DcppError(Exception):
    """Base class for engine errors."""


class MapSchemaError(DcppError):
    """A map or grid document violates its schema."""


class FrameMismatchError(DcppError):
    """Occupancy grid and map do not share a usable world frame."""


class StalePatchError(DcppError):
    """A map patch no longer matches the map's version lineage."""


class NotDrivableError(DcppError):
    """A lanelet carries no tag permitted by the active profile."""


class ZeroCandidatesError(DcppError):
    """Raised when no route to the goal exists under the extended profile."""

    def __init__(self, message: str = "Zero candidates found"):
        super().__init__(message)


class AssistanceNotValidError(DcppError):
    """An operator response failed validation; `reason` is machine-readable."""

    def __init__(self, reason: str):
        super().__init__("Assistance not valid")
        self.reason = reason


class ProtocolViolationError(DcppError):
    """An event was applied in a session state that does not accept it."""


class PlanningError(DcppError):
    """The sampling-based planner could not produce a path."""


class ScenarioError(DcppError):
    """A scenario document is inconsistent or references bad data."""


class DivergenceError(DcppError):
    """The follower drifted off the active path beyond the hard limit."""
