"""Exception hierarchy. Library code raises these; only the CLI turns them into exit codes."""


class PhaseEstimationError(Exception):
    exit_code = 1


class InvalidArgumentError(PhaseEstimationError, ValueError):
    exit_code = 2


class DegenerateInputError(PhaseEstimationError):
    pass


class ResolutionExceededError(PhaseEstimationError):
    """Requested frequency lies beyond what the grid resolves."""

    exit_code = 2

    def __init__(self, value, limit, what="|y|", limit_name="resolvable bandwidth",
                 remedy="enlarge the grid"):
        self.value = value
        self.limit = limit
        super().__init__(f"{what} = {abs(value):.6g} exceeds {limit_name} {limit:.6g}; {remedy}")


class ConvergenceError(PhaseEstimationError):
    def __init__(self, message, residual=None):
        self.residual = residual
        if residual is not None:
            message = f"{message} (residual {residual:.3e})"
        super().__init__(message)


class BracketError(PhaseEstimationError):
    exit_code = 2


class NumericalConsistencyError(PhaseEstimationError):
    pass


class InsufficientDataError(PhaseEstimationError):
    pass


class SingularPointError(PhaseEstimationError):
    exit_code = 2


class UnreachableAccuracyError(PhaseEstimationError):
    exit_code = 2


class OutOfRangeError(PhaseEstimationError):
    exit_code = 2


class SolutionRejectedError(PhaseEstimationError):
    def __init__(self, message, diagnostic=None):
        self.diagnostic = diagnostic or {}
        super().__init__(message)
