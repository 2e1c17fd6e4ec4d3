"""Exception hierarchy shared by every module of the package."""


class AttrMeanError(Exception):
    """Base class for all package errors."""


class InvalidPopulation(AttrMeanError, ValueError):
    """Raw population records violate the (y, phi1, phi2) contract."""


class DegeneratePopulation(AttrMeanError, ValueError):
    """Correlations are undefined (constant y or a proportion of 0 or 1)."""


class ZeroMean(AttrMeanError, ValueError):
    """Coefficients of variation need a nonzero population mean."""


class InvalidDesign(AttrMeanError, ValueError):
    """Sample sizes violate 2 <= n <= N (and n < n_prime <= N)."""


class InvalidSpec(AttrMeanError, ValueError):
    """An estimator specification is malformed or fails to parse."""


class DivisionByZero(AttrMeanError, ZeroDivisionError):
    """An estimator needs a sample proportion that turned out to be zero."""


class WrongPhase(AttrMeanError, ValueError):
    """A single-phase spec was given two-phase data, or vice versa."""


class UnresolvedWeights(AttrMeanError, ValueError):
    """A composite spec with ``auto`` weights was evaluated before resolution."""


class MissingTwoPhaseFactors(AttrMeanError, ValueError):
    """A two-phase spec was used with coefficients lacking f2/f3."""


class SingularSystem(AttrMeanError, ArithmeticError):
    """The normal equations for optimal weights have no unique solution."""


class NonpositiveMSE(AttrMeanError, ValueError):
    """Relative efficiency is undefined for MSE <= 0."""


class InvalidGeneratorSpec(AttrMeanError, ValueError):
    """Synthetic population parameters are out of range."""


class EnumerationTooLarge(AttrMeanError, RuntimeError):
    """Exhaustive enumeration would exceed the configured sample cap."""


class AllReplicatesFailed(AttrMeanError, RuntimeError):
    """An estimator was undefined on every Monte Carlo replicate."""


class MismatchedSpecs(AttrMeanError, ValueError):
    """Simulation and theory reports cover different estimator lists."""


class ParseError(AttrMeanError, ValueError):
    """An input file could not be parsed; the message names the line."""
