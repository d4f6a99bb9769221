"""Exception hierarchy shared by the library and the command-line front end.

Every class carries the exit code the CLI returns when it escapes a command.
"""


class IntQuantError(Exception):
    exit_code = 3


class UsageError(IntQuantError):
    exit_code = 1


class ParseError(UsageError):
    """Unknown token in a distribution or measure spec string."""


class ParameterError(UsageError, ValueError):
    """Invalid, non-numeric or wrong-arity parameter."""


class DomainError(UsageError, ValueError):
    """Probability, level or count outside its domain."""


class DataError(IntQuantError, ValueError):
    exit_code = 2


class NumericError(IntQuantError, ArithmeticError):
    exit_code = 3


class MomentError(NumericError):
    """The model lacks a moment the requested functional needs."""


class SingularityError(NumericError):
    pass


class FinitenessError(NumericError):
    pass


class ConvergenceError(NumericError):
    pass


def check_probability(u, name="p", closed_right=False):
    """Validate u in (0,1), or (0,1] when closed_right; returns float(u)."""
    try:
        u = float(u)
    except (TypeError, ValueError):
        raise DomainError(f"{name} must be a number, got {u!r}")
    upper_ok = u <= 1.0 if closed_right else u < 1.0
    if not (u > 0.0 and upper_ok):
        interval = "(0,1]" if closed_right else "(0,1)"
        raise DomainError(f"{name} must lie in {interval}, got {u}")
    return u
