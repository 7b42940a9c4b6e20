"""Exception hierarchy shared across the package.

All failures that correspond to a violated precondition or a refused
computation derive from :class:`SlowManifoldError`, so callers (and the CLI)
can distinguish domain errors from programming errors.
"""


class SlowManifoldError(Exception):
    """Base class for all domain errors raised by this package."""

    @property
    def category(self) -> str:
        return type(self).__name__


class ZetaTooLarge(SlowManifoldError):
    """No admissible spectral cutoff exists for the requested zeta."""


class NegativeTimeOnFastModes(SlowManifoldError):
    """Backward semigroup time requested for a field with fast-mode content."""


class TimescaleOrderViolated(SlowManifoldError):
    """epsilon is not small enough relative to zeta for the slow-manifold regime."""


class NonpositiveGap(SlowManifoldError):
    """The slow/fast decay-rate gap N_S - N_F is not positive."""


class ResonantEpsilon(SlowManifoldError):
    """epsilon is within guard distance of a vanishing manifold denominator."""

    def __init__(self, message: str, witnesses=()):
        super().__init__(message)
        self.witnesses = tuple(witnesses)


class NotResonant(SlowManifoldError):
    """epsilon does not belong to the resonance set."""


class NoConvergence(SlowManifoldError):
    """A Picard iteration failed to contract within its iteration cap."""


class ContractionViolated(SlowManifoldError):
    """Observed fixed-point iteration is not contracting."""


class IterationCap(SlowManifoldError):
    """Fixed-point iteration hit its iteration cap before reaching tolerance."""


class TailToleranceUnreachable(SlowManifoldError):
    """Decay rates cannot bound the truncated history tail below tolerance."""


class StepRejected(SlowManifoldError):
    """Time integration produced nonfinite values."""


class CriticalSolveFailed(SlowManifoldError):
    """Critical-manifold solve failed inside the reduced slow subsystem."""


class DefectBelowFloor(SlowManifoldError):
    """Attraction defect is at numerical floor before a fit window exists."""


class InsufficientPoints(SlowManifoldError):
    """Not enough usable sweep points for a regression."""


class ConfigError(SlowManifoldError):
    """Malformed or inconsistent configuration file."""
