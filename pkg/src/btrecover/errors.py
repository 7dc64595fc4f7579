"""Exception hierarchy shared across the package."""

from __future__ import annotations


class BTRecoverError(Exception):
    """Base class for every error raised by btrecover."""


# behavior tree core
class UnknownReference(BTRecoverError):
    pass


class MalformedTree(BTRecoverError):
    pass


class ParseError(BTRecoverError):
    """Raised for syntactically invalid documents; carries a location."""

    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


class SchemaError(BTRecoverError):
    def __init__(self, message: str, location: str | None = None):
        self.location = location
        super().__init__(f"{location}: {message}" if location else message)


# registry
class DuplicateName(BTRecoverError):
    pass


class DanglingConditionReference(BTRecoverError):
    pass


class InvalidSkill(BTRecoverError):
    pass


class ArityMismatch(BTRecoverError):
    pass


class UnknownObject(BTRecoverError):
    pass


class UnknownEffect(BTRecoverError):
    pass


class UnfilledHole(BTRecoverError):
    def __init__(self, holes):
        self.holes = list(holes)
        super().__init__(f"unfilled template holes: {', '.join(self.holes)}")


# planner
class InvalidGoal(BTRecoverError):
    pass


class StaleRegistry(BTRecoverError):
    pass


class DepthExhaustedWarning(UserWarning):
    pass


# world simulation
class UnknownScenario(BTRecoverError):
    pass


class WorldInvariantError(BTRecoverError):
    pass


# monitor
class InfeasibleRecovery(BTRecoverError):
    pass


class NothingToRecover(BTRecoverError):
    pass


class InvalidVerdict(BTRecoverError):
    pass


# advisor
class AdvisorUnavailable(BTRecoverError):
    pass


class TransportError(BTRecoverError):
    pass


class MalformedResponse(BTRecoverError):
    pass


# harness
class EmptyInput(BTRecoverError):
    pass
