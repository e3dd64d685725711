"""Exception hierarchy shared by the solver, optimizer and CLI layers."""


class HvdcMopfError(Exception):
    """Base class for all package errors."""


class CaseError(HvdcMopfError):
    """Problem with case data (parse or validation)."""


class CaseParseError(CaseError):
    pass


class CaseValidationError(CaseError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("invalid case: " + "; ".join(self.violations))


class NumericalError(HvdcMopfError):
    """A numerical routine failed to produce a usable answer.

    ``stage`` tags where it happened (``"ac"``, ``"dc"``, ``"coupling"``).
    """

    def __init__(self, message, stage=None, iterations=None):
        self.stage = stage
        self.iterations = iterations
        prefix = f"[{stage}] " if stage else ""
        super().__init__(prefix + message)


class ConvergenceError(NumericalError):
    pass


class SingularJacobianError(NumericalError):
    pass
