"""Exception types shared across the toolkit.

Each class carries a ``category`` string; the command-line driver maps it
to a stable exit status.
"""


class EpsLssvrError(Exception):
    category = "error"


class InvalidArgumentError(EpsLssvrError, ValueError):
    """Bad hyperparameter, shape mismatch, or malformed input data."""

    category = "invalid-argument"


class SingularSystemError(EpsLssvrError, ArithmeticError):
    """A linear system could not be factorized reliably.

    Parameters
    ----------
    message : str
        Human readable description.
    condition : float, optional
        Estimated condition number of the offending matrix (``inf`` when
        the factorization broke down outright).
    """

    category = "numerical"

    def __init__(self, message, condition=float("inf")):
        super().__init__(message)
        self.condition = condition
