"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument lies outside the domain an operation accepts."""


class NumericError(ArithmeticError):
    """A numerical procedure (bracketing, root finding) failed to converge."""


class DegenerateChainError(ParameterError):
    """The loss-run chain has no steady state with positive mass at state 0."""


class InfeasibleError(Exception):
    """No policy satisfies the loss and peak-power constraints.

    ``reasons`` names the violated constraints (``"C1"``, ``"C2"``, ``"C3"``,
    or a free-form tag such as ``"eps0_out_of_range"``).
    """

    def __init__(self, message, reasons=(), verdict=None):
        super().__init__(message)
        self.reasons = tuple(reasons)
        self.verdict = verdict
