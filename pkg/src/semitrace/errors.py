"""Exception types shared across the package.

Every failure mode that a caller can reasonably branch on gets its own
class; plain ValueError is reserved for malformed arguments.  All of
them derive from SemitraceError so tools can catch package failures in
one clause without swallowing genuine bugs.
"""


class SemitraceError(ValueError):
    """Base class for every certification or validation failure here."""


class RankInstabilityError(SemitraceError):
    """A numerical rank decision was ambiguous at the requested tolerance."""


class SymplecticityError(SemitraceError):
    """A matrix failed its symplecticity certificate."""


class NonPeriodicError(SemitraceError):
    """A trajectory expected to close up did not return to its start point."""


class EnergyDriftError(SemitraceError):
    """Numerical integration lost more energy than the configured budget."""


class SpectrumError(SemitraceError):
    """Eigenvalue enumeration failed its size cap or completeness sanity check."""


class IncompleteSpectrumError(SemitraceError):
    """A spectrum does not cover the support of the requested cutoff."""


class MonteCarloError(SemitraceError):
    """A Monte Carlo estimate came back too noisy to be usable."""


class CalibrationError(SemitraceError):
    """A quarter-turn phase was needed before it had been resolved."""


class VanishingCurvatureError(SemitraceError):
    """The torus curvature invariant is numerically zero where a nonzero
    value is required."""


class ConfigError(SemitraceError):
    """A configuration document failed validation.

    The offending location is recorded as a dotted path in ``path``.
    """

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)
