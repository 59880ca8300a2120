"""Exception hierarchy shared across the package."""


class ScmcError(Exception):
    """Base class for everything this package raises on purpose."""


class UnboundRefError(ScmcError):
    def __init__(self, var):
        self.var = var
        super().__init__(f"unbound reference: {var}")


class DomainError(ScmcError):
    pass


class DivisionByZeroError(ScmcError):
    pass


class UnknownVariableError(ScmcError):
    def __init__(self, var):
        self.var = var
        super().__init__(f"unknown variable: {var}")


class EnumerationTooLargeError(ScmcError):
    pass


class InterventionNotAllowedError(ScmcError):
    pass


class InvalidPartitionError(ScmcError):
    pass


class InvalidTargetError(ScmcError):
    pass


class NonDeterministicModelError(ScmcError):
    pass


class PassBudgetExceededError(ScmcError):
    pass


class BudgetExceededError(ScmcError):
    pass


class InvalidParameterError(ScmcError):
    pass


class EquivalenceFailedError(ScmcError):
    """Raised when a claimed closed form does not match its base model.

    Carries the counterexample report so callers can print the witness.
    """

    def __init__(self, report):
        self.report = report
        super().__init__(f"equivalence check failed: {report.counterexample}")


class ParseError(ScmcError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
