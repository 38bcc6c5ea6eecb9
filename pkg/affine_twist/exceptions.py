"""
affine_twist core exceptions

Everything a computation can fail with derives from MathError, which the
command line maps to exit code 1. Usage errors never reach this module:
argparse reports them itself with exit code 2.
"""


class AffineTwistError(Exception):
    """Base class for every error raised by affine_twist"""


# Mathematical failures (exit code 1)


class MathError(AffineTwistError):
    """A computation hit a mathematical obstruction"""

    exit_code = 1


class PoleError(MathError):
    """A denominator vanishes to higher order than its numerator"""


class DivisionByZero(MathError, ZeroDivisionError):
    """Division by an exact zero scalar"""


class InsufficientTruncation(MathError):
    """A requested coefficient lies beyond the known part of a series"""


class InsufficientEpsDegree(MathError):
    """The epsilon expansion ran out of degree before a limit was reached"""


class NonGenericDirection(MathError):
    """A limit direction makes a theta or Eisenstein argument collapse to 1"""


class UnderdeterminedSystem(MathError):
    """The fitting system does not pin down every unknown"""


class InconsistentSystem(MathError):
    """No operator of the requested shape annihilates the given series"""


class UnknownVariable(MathError):
    """An expression or flow refers to a variable it does not declare"""


class ParameterError(MathError):
    """Parameters outside the admissible or supported range"""


class TranscriptionError(MathError):
    """A stored golden vector does not satisfy the property it was quoted for"""
