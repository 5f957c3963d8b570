"""Exception hierarchy for the kcoreset library.

ValidationError covers bad user input (malformed files, inconsistent shapes,
out-of-range parameters); the CLI maps it to exit code 2.  Every other
library failure derives from KcoresetError and maps to exit code 1.
"""


class KcoresetError(Exception):
    """Base class for all library errors."""


class ValidationError(KcoresetError):
    """Raised when user-supplied data or parameters fail validation."""


class ThresholdNotReachedError(KcoresetError):
    """Raised when the adaptive coreset search exhausts its size budget.

    Carries the best (smallest) cost gap seen and the size at which it
    occurred so callers can report how far the search got.
    """

    def __init__(self, message: str, best_gap: float, best_k: int):
        super().__init__(message)
        self.best_gap = best_gap
        self.best_k = best_k
