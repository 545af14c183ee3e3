"""Exception hierarchy for domain validation, operator application and planning."""


class UplanError(Exception):
    """Base class for all errors raised by this package."""


class ValidationError(UplanError):
    """A domain document or evidence input failed validation.

    Carries the full list of itemized problems so callers can report every
    defect in one pass instead of fixing them one at a time.
    """

    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("\n".join(self.errors))


class ApplicationError(UplanError):
    """An operator was applied to a state that does not admit it."""


class CausalDivergenceError(ApplicationError):
    """The causal rule set failed to reach a fixpoint within the iteration cap."""

    def __init__(self, message, rules):
        self.rules = tuple(rules)
        super().__init__(message)


class PlanningAbort(UplanError):
    """An operator with the 'abort' failure policy failed during planning."""


class GenerationError(UplanError):
    """A benchmark scenario could not be synthesized from the given config."""
