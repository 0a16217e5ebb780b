class SchedulingError(Exception):
    """Base class for errors raised by the scheduling services"""


class InvariantViolation(SchedulingError):
    """A checked property of a run or certificate does not hold"""

    def __init__(self, invariant, message):
        self.invariant = invariant
        super().__init__(f"{invariant}: {message}")


class PolicyError(InvariantViolation):
    """A policy made a choice the engine cannot execute"""

    def __init__(self, message):
        super().__init__('policy-choice', message)


class HorizonExceeded(SchedulingError):
    pass


class BruteForceCapExceeded(SchedulingError):
    pass


class BudgetExceeded(SchedulingError):
    pass
