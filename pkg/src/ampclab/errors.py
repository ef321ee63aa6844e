"""Exception hierarchy shared by every module."""


class AmpcLabError(Exception):
    pass


class InvalidArgument(AmpcLabError, ValueError):
    pass


class ResourceLimit(AmpcLabError):
    """An exact search ran out of budget.

    ``lower`` and ``upper`` carry the best bounds established before giving up
    (either may be None).
    """

    def __init__(self, message, lower=None, upper=None):
        super().__init__(message)
        self.lower = lower
        self.upper = upper


class ModelViolation(AmpcLabError):
    """A run broke one of the capacity rules of the AMPC model."""

    def __init__(self, message, round=None, machine=None, constraint=None):
        super().__init__(message)
        self.round = round
        self.machine = machine
        self.constraint = constraint


class MalformedProgram(AmpcLabError):
    pass


class MalformedStrategy(AmpcLabError):
    pass


class ConsistencyBreach(AmpcLabError):
    pass


class InvariantViolation(AmpcLabError, AssertionError):
    pass
