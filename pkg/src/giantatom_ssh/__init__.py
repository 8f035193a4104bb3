"""Giant atom on a nonreciprocal dimerized ring.

Exact lattice diagonalization plus closed-form bound-state analytics for a
two-leg emitter coupled to an SSH chain with asymmetric intracell hopping
(or staggered gain/loss), with localization and real-time propagation tools.
"""

__version__ = "0.1.0"

from .errors import (
    BandBraidingError,
    BiorthogonalizationError,
    ConfigError,
    GapClosedError,
    GiantAtomError,
    NoAnalyticFormError,
    NumericalError,
    PoleProximityError,
    PreconditionError,
)
from .model import (
    Boundary,
    CouplingConfig,
    Emitter,
    HamiltonianMatrix,
    LatticeParams,
    LegMode,
    SiteIndexing,
    Variant,
    assemble,
    build_gain_loss_ssh,
    build_ssh,
    matrix_from_json_dict,
    translation_operator,
)
from .spectral import (
    ClassificationReport,
    SpectrumResult,
    StateClass,
    WindingResult,
    band_hull,
    classify_states,
    dispersion,
    dispersion_squared,
    eigendecompose,
    energy_residual_AA,
    energy_residual_AB,
    winding_number,
    zero_mode_selfenergy_closed,
)
from .analytic_bound import (
    AmplitudeProfile,
    ClosedFormContext,
    bound_amplitudes_AA,
    bound_amplitudes_AB,
    bound_profile,
    f_fourier_check,
    make_context,
    state_fidelity,
    wrap_error_estimate,
    zero_mode_AA,
    zero_mode_AB,
    zero_mode_profile,
)
from .localization import (
    BetaPair,
    IprReport,
    beta_of_energy,
    beta_profile,
    ipr,
    reference_lines,
)
from .dynamics import (
    EvolutionConfig,
    LyapunovCurve,
    evolve,
    evolve_renormalized,
    initial_bulk_state,
    lyapunov,
)

__all__ = [
    "__version__",
    "AmplitudeProfile",
    "BandBraidingError",
    "BetaPair",
    "BiorthogonalizationError",
    "Boundary",
    "ClassificationReport",
    "ClosedFormContext",
    "ConfigError",
    "CouplingConfig",
    "Emitter",
    "EvolutionConfig",
    "GapClosedError",
    "GiantAtomError",
    "HamiltonianMatrix",
    "IprReport",
    "LatticeParams",
    "LegMode",
    "LyapunovCurve",
    "NoAnalyticFormError",
    "NumericalError",
    "PoleProximityError",
    "PreconditionError",
    "SiteIndexing",
    "SpectrumResult",
    "StateClass",
    "Variant",
    "WindingResult",
    "assemble",
    "band_hull",
    "beta_of_energy",
    "beta_profile",
    "bound_amplitudes_AA",
    "bound_amplitudes_AB",
    "bound_profile",
    "build_gain_loss_ssh",
    "build_ssh",
    "classify_states",
    "dispersion",
    "dispersion_squared",
    "eigendecompose",
    "energy_residual_AA",
    "energy_residual_AB",
    "evolve",
    "evolve_renormalized",
    "f_fourier_check",
    "initial_bulk_state",
    "ipr",
    "lyapunov",
    "make_context",
    "matrix_from_json_dict",
    "reference_lines",
    "state_fidelity",
    "translation_operator",
    "winding_number",
    "wrap_error_estimate",
    "zero_mode_AA",
    "zero_mode_AB",
    "zero_mode_profile",
    "zero_mode_selfenergy_closed",
]
