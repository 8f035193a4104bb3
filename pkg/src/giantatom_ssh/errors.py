"""Exception hierarchy shared by all modules.

The CLI maps these onto process exit codes, so library code should raise
the most specific class that applies.
"""


class GiantAtomError(Exception):
    """Base class for all package errors."""


class ConfigError(GiantAtomError):
    """Invalid parameters, couplings, or run configuration (exit code 2)."""


class NumericalError(GiantAtomError):
    """A numerical routine failed to produce a trustworthy result (exit code 3)."""


class BiorthogonalizationError(NumericalError):
    """Left/right eigenvector pairing failed, typically at a degeneracy."""


class PreconditionError(GiantAtomError):
    """Input violates a documented precondition of an operation (exit code 4)."""


class GapClosedError(PreconditionError):
    """The chain spectrum touches zero on the Bloch circle; winding undefined."""


class BandBraidingError(PreconditionError):
    """The two bands exchange under k -> k + 2*pi; no single-valued band labels."""


class NoAnalyticFormError(PreconditionError):
    """Requested a closed-form profile in a regime where none is available."""


class PoleProximityError(PreconditionError):
    """Energy too close to a lattice mode; the momentum sum is singular."""
