"""Exception taxonomy shared by all modules.

Two failure classes are distinguished everywhere: misuse of an operation
(bad arguments, wrong group, malformed input) and a numerical breakdown
inside an otherwise valid call.  The CLI maps them to exit codes 1 and 2.
"""


class UsageError(ValueError):
    """The caller violated a precondition (bad flag, wrong group, shape mismatch)."""


class NumericalError(ArithmeticError):
    """A computation failed numerically (non-finite input, box too small, broken reduction)."""
