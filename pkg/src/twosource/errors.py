"""Exception hierarchy for the twosource package.

Every error raised by the library derives from :class:`TwoSourceError`, so
callers (notably the CLI) can separate "your inputs are outside the model's
domain" from genuine bugs.
"""


class TwoSourceError(Exception):
    """Base class for all twosource errors."""


class DomainError(TwoSourceError):
    """Inputs are outside the mathematical domain of an operation
    (inconsistent overlap data, negative radicands, invalid parameters)."""


class SingularBasis(DomainError):
    """The two sources are so close that the four-vector orthonormal basis
    construction degenerates (overlap delta within 1e-12 of 1)."""


class ShapeError(TwoSourceError):
    """A matrix argument has the wrong shape or is not symmetric/Hermitian."""


class NoSolution(TwoSourceError):
    """The gauge solver cannot produce a commuting pair of logarithmic
    derivatives (the necessary commutation condition fails, or residuals
    after the solve exceed tolerance)."""


class GaugeInvalid(TwoSourceError):
    """The closed-form gauge evaluates numerically but fails its
    commutation-condition residual check."""


class NotCommuting(TwoSourceError):
    """A simultaneous diagonalization was requested for matrices whose
    commutator exceeds tolerance."""


class DegeneracyUnresolved(TwoSourceError):
    """Subspace refinement failed to make both operators diagonal within
    tolerance in the common eigenbasis."""


class AlignmentOutOfRange(TwoSourceError):
    """The mode-sorter alignment point is too far from the centroid for the
    truncated mode set to be meaningful."""


class QuadratureError(TwoSourceError):
    """A numerical evaluation failed an internal consistency check
    (probabilities not summing to one, non-finite values)."""


class FimExceedsQfi(TwoSourceError):
    """A classical Fisher information entry exceeds its quantum bound by
    more than numerical tolerance; signals a bug upstream."""


class Degenerate(TwoSourceError):
    """The likelihood is flat over the search box; no estimate exists."""


class ConfigError(TwoSourceError):
    """A run configuration file is missing, malformed, or inconsistent."""
