"""Exception types.

Two families matter to callers. ``HypothesisFailure`` subclasses are
mathematically meaningful negative results (for instance a symmetry that
admits no invariant fields); the CLI maps them to exit code 2. Everything
else is an operational error.
"""

from __future__ import annotations


class DomainError(ValueError):
    """A point (or a finite-difference stencil around it) left the chart domain."""


class AliasingError(ValueError):
    """Sampling grid too coarse for the requested Fourier truncation."""


class PreconditionError(ValueError):
    """An operation's input contract was violated."""


class UnsupportedDirection(ValueError):
    """Symmetry direction that cannot be handled with exact arithmetic."""


class UnknownEntry(KeyError):
    """Catalog lookup with an unknown name."""


class HypothesisFailure(Exception):
    """Base class for negative results that are outcomes, not bugs."""

    explanation = ""


class NoSymmetricFields(HypothesisFailure):
    explanation = (
        "the space of divergence-free fields commuting with the symmetry is {0}; "
        "no symmetric curl eigenfield with non-zero eigenvalue exists"
    )


class NoFirstIntegral(HypothesisFailure):
    explanation = (
        "every function invariant under the symmetry is constant; "
        "the symmetry-constrained Laplace eigenproblem has no admissible function"
    )


class NotBeltramiKilling(PreconditionError):
    """The Killing entry has no curl-proportionality constant."""


class DegenerateScalar(PreconditionError):
    """Constructor input function is constant."""


class SeedRejected(ValueError):
    """Level-set seed sits on (or numerically at) a critical point."""


class StalledAtZero(RuntimeError):
    """Integration cannot advance; the field (or the step size) vanished."""

    def __init__(self, message: str, location=None, t: float | None = None):
        super().__init__(message)
        self.location = location
        self.t = t
