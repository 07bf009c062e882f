"""Exception types shared across the package."""


class CountdiffError(Exception):
    """Base class for all package errors."""


class SpecError(CountdiffError, ValueError):
    """Unknown generator, malformed window expression, or parameter out of range."""


class BudgetExceeded(CountdiffError):
    """An enumeration would exceed the configured point or work budget."""

    def __init__(self, what: str, requested: int, budget: int):
        self.what = what
        self.requested = requested
        self.budget = budget
        super().__init__(f"{what}: {requested} exceeds budget {budget}")
