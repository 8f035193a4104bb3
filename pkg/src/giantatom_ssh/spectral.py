"""Exact diagonalization, state classification, momentum-space energy
equations, and the winding number of the bare chain.

Eigensystems come from the dense general (non-Hermitian) solver; the rest
of this module is the physics layered on top: the two-band dispersion, the
implicit equations obeyed by emitter-dressed eigenvalues, their residue
closed form at zero energy, and a gauge-invariant winding accumulation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np
import scipy.linalg

from .errors import (
    BandBraidingError,
    BiorthogonalizationError,
    ConfigError,
    GapClosedError,
    NumericalError,
    PoleProximityError,
    PreconditionError,
)
from .model import CouplingConfig, HamiltonianMatrix, LatticeParams, LegMode

MAX_DENSE_DIM = 4096
_BIORTH_TOL = 1e-8
_DEGENERACY_TOL = 1e-10


# ---------------------------------------------------------------------------
# dispersion
# ---------------------------------------------------------------------------

def dispersion_squared(params: LatticeParams, k) -> np.ndarray:
    """omega_k^2 = (t1 + gamma + t2 e^{-ik}) (t1 - gamma + t2 e^{+ik})."""
    k = np.asarray(k, dtype=float)
    t1, t2, g = params.t1, params.t2, params.gamma
    return (t1 + g + t2 * np.exp(-1j * k)) * (t1 - g + t2 * np.exp(1j * k))


def dispersion(params: LatticeParams, k):
    """Principal square root of the two-band dispersion.

    Returns
    -------
    complex or ndarray
        omega_k with Re >= 0 (principal branch); the physical spectrum of
        the bare ring is the pair {+omega_k, -omega_k}.
    """
    return np.sqrt(dispersion_squared(params, k))


def band_hull(params: LatticeParams, nk: int | None = None) -> tuple[float, float]:
    """(min, max) of |omega_k| sampled on a dense Bloch grid (16 L points)."""
    if nk is None:
        nk = 16 * params.L
    ks = 2.0 * np.pi * np.arange(nk) / nk
    mags = np.abs(dispersion(params, ks))
    return float(mags.min()), float(mags.max())


# ---------------------------------------------------------------------------
# eigendecomposition
# ---------------------------------------------------------------------------

@dataclass
class SpectrumResult:
    """Complex eigensystem in canonical order (by Re E, then Im E)."""

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray | None = None
    degenerate_blocks: list = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def residual_max(self, H: HamiltonianMatrix) -> float:
        """max_q ||H v_q - E_q v_q|| / ||H||, for the residual invariant."""
        M = H.matrix
        R = M @ self.right - self.right * self.eigenvalues[None, :]
        return float(np.max(np.linalg.norm(R, axis=0)) / np.linalg.norm(M, 2))


def eigendecompose(H: HamiltonianMatrix, want_left: bool = False) -> SpectrumResult:
    """Full eigensystem of a dense general matrix.

    Right eigenvectors are unit-normalized columns.  With ``want_left`` the
    left eigenvectors are returned biorthonormalized against the right ones,
    <phi^L_p | phi^R_q> = delta_pq; degenerate clusters are paired blockwise
    (pseudo-inverse fallback) and reported in ``degenerate_blocks``.
    """
    M = H.matrix
    if M.shape[0] > MAX_DENSE_DIM:
        raise ConfigError(f"matrix dimension {M.shape[0]} exceeds {MAX_DENSE_DIM}")
    if not np.all(np.isfinite(M)):
        raise NumericalError("Hamiltonian contains non-finite entries")
    try:
        if want_left:
            w, vl, vr = scipy.linalg.eig(M, left=True, right=True)
        else:
            w, vr = np.linalg.eig(M)
            vl = None
    except np.linalg.LinAlgError as exc:  # pragma: no cover - backend dependent
        raise NumericalError(
            f"eigensolver failed to converge (dim={M.shape[0]}, "
            f"cond estimate={np.linalg.cond(M):.3e}): {exc}"
        ) from exc
    order = np.lexsort((w.imag, w.real))
    w = w[order]
    vr = vr[:, order]
    vr = vr / np.linalg.norm(vr, axis=0)[None, :]
    blocks: list = []
    if vl is not None:
        vl = vl[:, order]
        scale = max(1.0, float(np.max(np.abs(w))))
        # group eigenvalues into near-degenerate clusters before pairing
        groups, start = [], 0
        for i in range(1, w.size + 1):
            if i == w.size or abs(w[i] - w[i - 1]) > _DEGENERACY_TOL * scale:
                groups.append((start, i))
                start = i
        for lo, hi in groups:
            Mblk = vl[:, lo:hi].conj().T @ vr[:, lo:hi]
            if hi - lo > 1:
                blocks.append((lo, hi))
                try:
                    inv = np.linalg.inv(Mblk)
                except np.linalg.LinAlgError:
                    inv = np.linalg.pinv(Mblk)
                vl[:, lo:hi] = vl[:, lo:hi] @ inv.conj().T
            else:
                d = Mblk[0, 0]
                if abs(d) < 1e-14:
                    raise BiorthogonalizationError(
                        f"left/right overlap vanished at eigenvalue {w[lo]:.6g}"
                    )
                vl[:, lo] = vl[:, lo] / np.conj(d)
        G = vl.conj().T @ vr
        err = float(np.max(np.abs(G - np.eye(w.size))))
        if err > _BIORTH_TOL:
            raise BiorthogonalizationError(
                f"biorthonormalization residual {err:.3e} exceeds {_BIORTH_TOL}"
            )
    return SpectrumResult(eigenvalues=w, right=vr, left=vl, degenerate_blocks=blocks)


# ---------------------------------------------------------------------------
# classification
# ---------------------------------------------------------------------------

class StateClass(Enum):
    BULK = "bulk"
    UPPER_BOUND = "upper_bound"
    LOWER_BOUND = "lower_bound"
    GAP_MODE = "gap_mode"


@dataclass
class ClassificationReport:
    labels: list
    hull_min: float
    hull_max: float
    margin: float
    ambiguous: list

    def count(self, cls: StateClass) -> int:
        return sum(1 for c in self.labels if c == cls)

    def indices(self, cls: StateClass) -> list:
        return [i for i, c in enumerate(self.labels) if c == cls]


def classify_states(
    spectrum: SpectrumResult, params: LatticeParams, margin: float | None = None
) -> ClassificationReport:
    """Label each state by |E| against the sampled band hull.

    |E| below the hull minimum is a gap mode; above the hull maximum it is
    a bound state, upper or lower by the sign of Re E.  States within
    ``margin`` of either hull edge are binned as bulk but flagged as
    ambiguous rather than silently accepted.
    """
    lo, hi = band_hull(params)
    if margin is None:
        margin = 1e-6 * hi
    labels, ambiguous = [], []
    for i, E in enumerate(spectrum.eigenvalues):
        m = abs(E)
        if m < lo - margin:
            labels.append(StateClass.GAP_MODE)
        elif m > hi + margin:
            labels.append(StateClass.UPPER_BOUND if E.real > 0 else StateClass.LOWER_BOUND)
        else:
            labels.append(StateClass.BULK)
            if abs(m - lo) <= margin or abs(m - hi) <= margin:
                ambiguous.append(i)
    return ClassificationReport(labels, lo, hi, margin, ambiguous)


# ---------------------------------------------------------------------------
# implicit energy equations (finite-L momentum sums)
# ---------------------------------------------------------------------------

def _momentum_sum(E: complex, params: LatticeParams, config: CouplingConfig, numerator) -> complex:
    L = params.L
    ks = 2.0 * np.pi * np.arange(L) / L
    w2 = dispersion_squared(params, ks)
    denom = E * E - w2
    scale = max(1.0, float(np.max(np.abs(w2))))
    if np.min(np.abs(denom)) < 1e-12 * scale:
        raise PoleProximityError(
            f"E={E:.6g} within 1e-12 of a lattice mode; momentum sum singular"
        )
    return complex(np.sum(numerator(ks) / denom) / L)


def energy_residual_AB(E: complex, params: LatticeParams, config: CouplingConfig) -> complex:
    """E minus the self-consistent energy sum for two legs at A_n and B_m.

    A vanishing residual certifies E as an eigenvalue of the leg-dressed
    ring.  The cross term carries the phase of the nonreciprocal bond, so
    the sin component enters with an imaginary coefficient.
    """
    t1, t2, g = params.t1, params.t2, params.gamma
    gn, gm, d = config.g_n, config.g_m, config.m - config.n

    def num(ks):
        return E * (gn * gn + gm * gm) + gn * gm * (
            2.0 * t1 * np.cos(ks * d)
            - 2.0j * g * np.sin(ks * d)
            + 2.0 * t2 * np.cos(ks * (d + 1))
        )

    return E - _momentum_sum(E, params, config, num)


def energy_residual_AA(E: complex, params: LatticeParams, config: CouplingConfig) -> complex:
    """E minus the self-consistent energy sum for two legs at A_n and A_m.

    The numerator is proportional to E, so E = 0 is a root at any finite L.
    """
    gn, gm, d = config.g_n, config.g_m, config.m - config.n

    def num(ks):
        return E * (gn * gn + gm * gm + 2.0 * gn * gm * np.cos(ks * d))

    return E - _momentum_sum(E, params, config, num)


def zero_mode_selfenergy_closed(params: LatticeParams, d: int, g: float = 1.0) -> complex:
    """Infinite-L value of the AB momentum sum at E = 0, leg separation d.

    Each intracell bond amplitude whose magnitude exceeds t2 contributes a
    residue term; inside the window |t1| + |gamma| < t2 neither pole lies
    outside the unit circle and the value is exactly zero.
    """
    if d < 0:
        raise PreconditionError("leg separation d must be >= 0")
    t1, t2, gm = params.t1, params.t2, params.gamma
    for bond in (t1 + gm, t1 - gm):
        if abs(abs(bond) - abs(t2)) < 1e-12:
            raise PreconditionError(
                f"|t1 +/- gamma| = |t2| is a branch boundary; closed form singular at t1={t1}"
            )
    total = 0.0
    for bond in (t1 + gm, t1 - gm):
        if abs(bond) > abs(t2):
            total += -(g * g / bond) * (-t2 / bond) ** d
    return complex(total)


# ---------------------------------------------------------------------------
# winding number
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WindingResult:
    raw: float
    rounded: int
    Nk: int


def winding_number(params: LatticeParams, Nk: int = 2048) -> WindingResult:
    """Winding of the biorthogonal band vectors around the Bloch circle.

    Accumulates the phase of discrete left/right overlaps (Wilson-loop
    style), which is gauge invariant, instead of differentiating the band
    vectors.  Requires the bare chain: gapped on the Bloch circle and with
    bands that do not braid (omega_k^2 must not wind around zero).
    """
    if Nk < 8:
        raise ConfigError("Nk too small")
    ks = 2.0 * np.pi * np.arange(Nk) / Nk
    t1, t2, g = params.t1, params.t2, params.gamma
    hp = t1 + g + t2 * np.exp(-1j * ks)  # A <- B bond amplitude at k
    hm = t1 - g + t2 * np.exp(1j * ks)   # B <- A bond amplitude at k
    w2 = hp * hm
    if np.min(np.abs(w2)) < 1e-10 * max(1.0, float(np.max(np.abs(w2)))):
        raise GapClosedError(
            f"spectrum touches zero on the Bloch circle (t1={t1}, gamma={g}, t2={t2})"
        )
    # braiding check: if omega^2 winds around 0 the two bands exchange
    # after one circuit and no single-valued band labeling exists
    dphi = np.angle(np.roll(w2, -1) / w2)
    w2_wind = int(round(float(np.sum(dphi) / (2.0 * np.pi))))
    if w2_wind != 0:
        raise BandBraidingError(
            f"bands braid around the Bloch circle (omega^2 winds {w2_wind}); "
            "band winding number undefined"
        )
    # branch-track omega so the band vectors are continuous in k
    om = np.sqrt(w2)
    for j in range(1, Nk):
        if abs(om[j] - om[j - 1]) > abs(om[j] + om[j - 1]):
            om[j] = -om[j]
    acc = 0.0
    for j in range(Nk):
        jn = (j + 1) % Nk
        overlap = (hm[j] * hp[jn] / (om[j] * om[jn]) + 1.0) / 2.0
        acc += float(np.angle(overlap))
    raw = -acc / np.pi
    return WindingResult(raw=raw, rounded=int(round(raw)), Nk=Nk)


# ---------------------------------------------------------------------------
# export
# ---------------------------------------------------------------------------

def spectrum_rows(spectrum: SpectrumResult, report: ClassificationReport, ipr_values=None):
    """Rows (index, Re E, Im E, class, ipr) for the spectrum table."""
    rows = []
    for i, E in enumerate(spectrum.eigenvalues):
        ipr = float("nan") if ipr_values is None else ipr_values[i]
        rows.append((i, E.real, E.imag, report.labels[i].value, ipr))
    return rows
