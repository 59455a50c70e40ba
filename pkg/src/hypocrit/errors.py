"""Exception hierarchy.

Each class carries the process exit code the command-line client maps it
to, so the library, the HTTP service and the CLI agree on one taxonomy.
"""


class HypocritError(Exception):
    exit_code = 1
    kind = "error"


class InputError(HypocritError, ValueError):
    """Malformed input, violated precondition or out-of-domain argument."""

    exit_code = 2
    kind = "input"


class DomainError(InputError):
    """Argument outside the domain where a formula or integral is defined."""

    kind = "domain"


class SpecViolation(InputError):
    """A ProblemSpec breaks one of its structural requirements."""

    kind = "spec"


class NumericError(HypocritError, ArithmeticError):
    """Quadrature, fit or eigensolver failed to meet its contract.

    ``partial`` holds the best available result, if any.
    """

    exit_code = 3
    kind = "numeric"

    def __init__(self, message, partial=None):
        super().__init__(message)
        self.partial = partial


class InconsistentRoutesError(HypocritError):
    exit_code = 4
    kind = "inconsistent"

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report
