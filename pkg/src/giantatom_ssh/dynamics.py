"""Real-time single-excitation evolution and the drift-velocity growth-rate
witness of localized bulk states.

The propagator is the dense scaled-and-squared matrix exponential.  For
amplifying (non-Hermitian) generators a renormalized chunked variant tracks
the norm in the log domain, so growth never overflows; the growth-rate scan
reads one trajectory at many space-time rays n = v t.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg

from .errors import ConfigError, NumericalError, PreconditionError
from .model import HamiltonianMatrix, LatticeParams, SiteIndexing


class Stepper(Enum):
    MATRIX_EXPONENTIAL_SCALED = "expm"
    ADAPTIVE_RK = "rk"


def _as_matrix(H) -> np.ndarray:
    """Accept either a wrapped Hamiltonian or a bare square array."""
    M = H.matrix if isinstance(H, HamiltonianMatrix) else np.asarray(H)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ConfigError(f"expected a square matrix, got shape {M.shape}")
    return M


@dataclass(frozen=True)
class EvolutionConfig:
    t_final: float = 50.0
    stepper: Stepper = Stepper.MATRIX_EXPONENTIAL_SCALED
    n_chunks: int = 50
    observation_sites: tuple = ()


def initial_bulk_state(L: int, n_atoms: int = 1) -> np.ndarray:
    """Unit excitation shared by A and B of the center cell.

    L must be odd so the center cell (L+1)/2 is integral; emitter levels
    (appended at the end) start unpopulated.
    """
    if L % 2 == 0:
        raise ConfigError(f"initial bulk state needs odd L, got {L}")
    idx = SiteIndexing(L, n_atoms)
    center = (L + 1) // 2
    psi = np.zeros(idx.dim, dtype=complex)
    psi[idx.a(center)] = 1.0 / math.sqrt(2.0)
    psi[idx.b(center)] = 1.0 / math.sqrt(2.0)
    return psi


def evolve(H: HamiltonianMatrix, psi0: np.ndarray, t: float) -> np.ndarray:
    """psi(t) = exp(-i H t) psi0, norm growth left unrenormalized.

    Raises NumericalError with the estimated blowup time if the result
    overflows; use ``evolve_renormalized`` as the log-domain fallback.
    """
    if t < 0:
        raise ConfigError("t must be >= 0")
    M = _as_matrix(H)
    if not np.all(np.isfinite(M)):
        raise NumericalError("Hamiltonian contains non-finite entries")
    # overflow is detected and reported below, not warned about
    with np.errstate(over="ignore", invalid="ignore"):
        psi = scipy.linalg.expm(-1j * M * t) @ psi0
    if not np.all(np.isfinite(psi)):
        t_blow = _estimate_blowup_time(M, psi0, t)
        raise NumericalError(
            f"amplitude overflow during evolution; blowup near t={t_blow:.3g} "
            "(log-domain fallback: evolve_renormalized)"
        )
    return psi


def _estimate_blowup_time(M: np.ndarray, psi0: np.ndarray, t: float, steps: int = 64) -> float:
    """Bisection-free scan for the first finite-overflow time."""
    U = scipy.linalg.expm(-1j * M * (t / steps))
    psi = psi0.astype(complex)
    for j in range(1, steps + 1):
        psi = U @ psi
        if not np.all(np.isfinite(psi)):
            return j * t / steps
    return t


def evolve_renormalized(
    H: HamiltonianMatrix, psi0: np.ndarray, t: float, n_chunks: int = 50
) -> tuple[np.ndarray, float]:
    """Chunked evolution with per-chunk renormalization.

    Returns (unit vector at time t, accumulated log norm), so the physical
    state is exp(log_norm) * vector and arbitrary amplification stays
    representable.
    """
    if t < 0:
        raise ConfigError("t must be >= 0")
    if n_chunks < 1:
        raise ConfigError("n_chunks must be >= 1")
    with np.errstate(over="ignore", invalid="ignore"):
        U = scipy.linalg.expm(-1j * _as_matrix(H) * (t / n_chunks))
    psi = psi0.astype(complex)
    log_norm = 0.0
    for _ in range(n_chunks):
        psi = U @ psi
        nrm = float(np.linalg.norm(psi))
        if nrm == 0.0 or not math.isfinite(nrm):
            raise NumericalError("state norm left the representable range")
        psi = psi / nrm
        log_norm += math.log(nrm)
    return psi, log_norm


def taylor_reference_evolve(
    H: HamiltonianMatrix, psi0: np.ndarray, t: float, dt: float = 0.01, order: int = 12
) -> np.ndarray:
    """Independent fixed-step Taylor propagator, used as a test oracle."""
    M = _as_matrix(H)
    steps = max(1, int(round(t / dt)))
    h = t / steps
    psi = psi0.astype(complex)
    for _ in range(steps):
        term = psi.copy()
        acc = psi.copy()
        for k in range(1, order + 1):
            term = (-1j * h / k) * (M @ term)
            acc = acc + term
        psi = acc
    return psi


@dataclass
class LyapunovCurve:
    """Growth rates lambda(v) along rays n = v t from the center cell."""

    v_grid: np.ndarray
    lam: np.ndarray
    t_obs: float
    channel: str
    model_tag: str = ""
    floored: list = field(default_factory=list)


def _ray_cell_offset(x: float) -> int:
    """Nearest integer with half-integers rounded toward zero."""
    if x == 0.0:
        return 0
    return int(math.copysign(math.ceil(abs(x) - 0.5), x))


def lyapunov(
    H: HamiltonianMatrix,
    params: LatticeParams,
    v_grid: np.ndarray,
    t_obs: float,
    channel: str = "A",
    model_tag: str = "",
    n_chunks: int = 50,
) -> LyapunovCurve:
    """lambda(v) = log |psi_(center + round(v t))(t)| / t on one trajectory.

    One evolution, many readouts.  Requires the fastest ray to stay clear
    of the lattice ends (and the emitter legs near cell 1), so the wrapped
    tail cannot contaminate the readout cells.
    """
    if channel not in ("A", "B"):
        raise ConfigError(f"channel must be 'A' or 'B', got {channel!r}")
    L = params.L
    v_grid = np.asarray(v_grid, dtype=float)
    vmax = float(np.max(np.abs(v_grid)))
    margin = 2
    if vmax * t_obs >= (L - 1) / 2 - margin:
        raise PreconditionError(
            f"ray |v|max*t = {vmax * t_obs:.1f} reaches the lattice edge "
            f"(limit {(L - 1) / 2 - margin:.1f} cells); enlarge L or shorten t_obs"
        )
    M = _as_matrix(H)
    n_atoms = M.shape[0] - 2 * L
    idx = SiteIndexing(L, n_atoms)
    center = (L + 1) // 2
    psi0 = initial_bulk_state(L, n_atoms)
    unit, log_norm = evolve_renormalized(M, psi0, t_obs, n_chunks=n_chunks)
    lam = np.empty(v_grid.size)
    floored = []
    for i, v in enumerate(v_grid):
        cell = center + _ray_cell_offset(v * t_obs)
        flat = idx.a(cell) if channel == "A" else idx.b(cell)
        amp = abs(unit[flat])
        if amp < 1e-300:
            amp = 1e-300
            floored.append(i)
        lam[i] = (math.log(amp) + log_norm) / t_obs
    return LyapunovCurve(v_grid=v_grid, lam=lam, t_obs=t_obs, channel=channel,
                         model_tag=model_tag, floored=floored)
