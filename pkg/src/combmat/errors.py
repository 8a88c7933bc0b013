"""Exception hierarchy shared by every module."""


class CombmatError(Exception):
    """Base class for all errors raised by combmat."""


class RangeViolation(CombmatError, ValueError):
    """A parameter lies outside its admissible range."""


class NotPrimeError(RangeViolation):
    """A modulus that must be prime is composite (or < 2)."""


class NotSquareError(CombmatError, ValueError):
    """An operation defined for square matrices received a rectangular one."""


class CouplingRangeError(RangeViolation):
    """The permutation couplings need n >= 2d so that sigma(i + d) exists."""


class InstanceTooLarge(CombmatError, ValueError):
    """An exhaustive enumeration would exceed its hard cap."""


class UnknownKeyError(CombmatError, KeyError):
    """A configuration file or flag set contains an unrecognised key."""


class OutputError(CombmatError, OSError):
    """Writing a result or manifest file failed."""


class HypothesisViolation(CombmatError):
    """Inputs fall outside the hypotheses under which a bound is claimed.

    Kept separate from plain errors so batch drivers can tell "the bound
    does not apply here" apart from genuine faults.
    """


class EigenpairViolation(HypothesisViolation):
    """A * 1 == -d * 1, so (1, -d) is an eigenpair of the perturbation."""


class PrimeDividesDegree(HypothesisViolation):
    """The working prime divides the row weight d."""
