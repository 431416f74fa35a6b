"""Exception hierarchy.

Numeric contract violations map to CLI exit code 2, oracle failures to 3.
"""


class QuasicyclesError(Exception):
    exit_code = 2


class NumericContractError(QuasicyclesError, ValueError):
    """A precondition on numeric input or configuration was violated."""


class DimensionError(NumericContractError):
    pass


class SingularityError(NumericContractError):
    """A lattice point projects (numerically) onto the window boundary."""


class ResourceError(NumericContractError):
    """Estimated work exceeds the configured cap."""


class MarginError(NumericContractError):
    """Test-function support does not fit inside the patch."""


class NonzeroSumError(NumericContractError):
    """Entries of a would-be cycle do not sum exactly to zero."""


class NotBraggError(NumericContractError):
    """A cycle entry is not a Bragg peak (extinction or unknown)."""


class LeakageError(NumericContractError):
    pass


class TailBudgetError(NumericContractError):
    pass


class MissingValueError(NumericContractError):
    pass


class RetryExhausted(NumericContractError):
    pass


class OracleFailure(QuasicyclesError):
    """A sum oracle could not write a target as a sum of Bragg vectors."""

    exit_code = 3

    def __init__(self, target, n, message=None):
        self.target = target
        self.n = n
        super().__init__(message or f"no decomposition of {target} into {n} Bragg vectors")
