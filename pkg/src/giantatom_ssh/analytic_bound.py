"""Closed-form amplitude profiles of emitter-dressed eigenstates.

For a real eigenvalue E outside the continuum the cell amplitudes relative
to the emitter amplitude are geometric in the distance from each leg, with
decay bases a (rightward) and b (leftward) determined by E and the chain
couplings.  Zero-energy modes have their own piecewise forms, reproduced
exactly by the general expressions in the E -> 0 limit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoAnalyticFormError, PreconditionError
from .model import CouplingConfig, LatticeParams, LegMode, SiteIndexing

__all__ = [
    "ClosedFormContext",
    "AmplitudeProfile",
    "make_context",
    "bound_amplitudes_AB",
    "bound_amplitudes_AA",
    "zero_mode_AB",
    "zero_mode_AA",
    "zero_mode_profile",
    "bound_profile",
    "f_fourier_check",
    "state_fidelity",
]


@dataclass(frozen=True)
class ClosedFormContext:
    """Symbols shared by every closed-form profile at energy E.

    x is the shifted squared energy, y = theta(x) selects the sign of the
    shared prefactor, and a, b are the geometric decay bases to the right
    and to the left of a leg.  T and Y1..Y4 are the coupling-dependent
    coefficients; prefactor = (-1)^(y+1) / sqrt(x^2 - 4 (t1+gamma)(t1-gamma)).
    """

    E: float
    x: float
    y: int
    a: float
    b: float
    T: float
    Y1: float
    Y2: float
    Y3: float
    Y4: float
    prefactor: float
    g: float
    params: LatticeParams


def make_context(E: float, params: LatticeParams, g: float) -> ClosedFormContext:
    """Build the closed-form symbol set for a real out-of-band energy.

    Raises
    ------
    PreconditionError
        If E is not real, if t1 = +/-gamma (the coefficients are singular),
        if the square root is not real, or if either decay base reaches
        modulus one (the energy sits inside the continuum and the profile
        would not be normalizable).
    """
    if isinstance(E, complex):
        if abs(E.imag) > 1e-12 * max(1.0, abs(E)):
            raise PreconditionError(f"closed forms require real E, got {E}")
        E = E.real
    E = float(E)
    t1, t2, gm = params.t1, params.t2, params.gamma
    if t1 == gm or t1 == -gm:
        raise PreconditionError("t1 = +/-gamma makes the closed-form coefficients singular")
    prod = (t1 + gm) * (t1 - gm)
    x = (E * E - prod - t2 * t2) / t2
    rad = x * x - 4.0 * prod
    if rad <= 0.0:
        raise PreconditionError(
            f"E={E:.6g} lies inside the band: x^2 - 4(t1+gamma)(t1-gamma) = {rad:.3e} <= 0"
        )
    root = math.sqrt(rad)
    # choose the decaying pair of roots: the quadratic's two solutions have
    # product (t1-gamma)/(t1+gamma); the sign below keeps |a|,|b| < 1
    s = 1.0 if x < 0.0 else -1.0
    num = x + s * root
    a = num / (2.0 * (t1 + gm))
    b = num / (2.0 * (t1 - gm))
    if max(abs(a), abs(b)) >= 1.0:
        raise PreconditionError(
            f"E={E:.6g} maps to decay bases |a|={abs(a):.4f}, |b|={abs(b):.4f}; "
            "profile not normalizable (energy inside the continuum)"
        )
    y = 1 if x > 0.0 else 0
    return ClosedFormContext(
        E=E,
        x=x,
        y=y,
        a=a,
        b=b,
        T=g * E / t2,
        Y1=g * (t1 - gm) / t2,
        Y2=g * (t1 + gm) / t2,
        Y3=g / (t1 - gm),
        Y4=g / (t1 + gm),
        prefactor=(-1.0) ** (y + 1) / root,
        g=g,
        params=params,
    )


def _geom(ctx: ClosedFormContext, q: int) -> float:
    """a^q to the right (q > 0), b^|q| to the left (q < 0), 1 at q = 0."""
    if q == 0:
        return 1.0
    return ctx.a ** q if q > 0 else ctx.b ** (-q)


def bound_amplitudes_AB(ctx: ClosedFormContext, config: CouplingConfig, l: int):
    """(A_l, B_l) relative to the emitter amplitude, legs at A_n and B_m."""
    n, m, g = config.n, config.m, ctx.g
    F = ctx.prefactor
    A = F * (ctx.T * _geom(ctx, l - n) + ctx.Y2 * _geom(ctx, l - m) + g * _geom(ctx, l - m - 1))
    B = F * (ctx.T * _geom(ctx, l - m) + ctx.Y1 * _geom(ctx, l - n) + g * _geom(ctx, l - n + 1))
    return A, B


def bound_amplitudes_AA(ctx: ClosedFormContext, config: CouplingConfig, l: int):
    """(A_l, B_l) relative to the emitter amplitude, legs at A_n and A_m."""
    n, m, g = config.n, config.m, ctx.g
    F = ctx.prefactor
    pair = _geom(ctx, l - n) + _geom(ctx, l - m)
    A = F * ctx.T * pair
    B = F * (ctx.Y1 * pair + g * (_geom(ctx, l - n + 1) + _geom(ctx, l - m + 1)))
    return A, B


def _require_single_g(config: CouplingConfig) -> float:
    if config.g_n != config.g_m:
        raise PreconditionError("closed-form profiles assume equal leg couplings")
    return config.g_n


def _in_window(params: LatticeParams) -> bool:
    return abs(params.t1) + abs(params.gamma) < abs(params.t2)


def zero_mode_AB(params: LatticeParams, config: CouplingConfig, l: int):
    """(A_l, B_l) of the zero-energy mode, legs at A_n and B_m.

    A lives strictly right of m with base -(t1-gamma)/t2; B strictly left
    of n with base -(t1+gamma)/t2.  Only defined inside the window
    |t1| + |gamma| < t2.
    """
    t1, t2, gm = params.t1, params.t2, params.gamma
    if not _in_window(params):
        raise PreconditionError(
            f"zero mode requires |t1| + |gamma| < t2; got t1={t1}, gamma={gm}, t2={t2}"
        )
    if t1 == gm or t1 == -gm:
        raise PreconditionError("t1 = +/-gamma makes the zero-mode coefficients singular")
    g = _require_single_g(config)
    n, m = config.n, config.m
    A = (g / (t1 - gm)) * (-(t1 - gm) / t2) ** (l - m) if l > m else 0.0
    B = (g / (t1 + gm)) * (-(t1 + gm) / t2) ** (n - l) if l < n else 0.0
    return A, B


def zero_mode_AA(params: LatticeParams, config: CouplingConfig, l: int) -> float:
    """B_l of the zero-energy mode, legs at A_n and A_m (A_l is identically 0).

    Two regimes have closed forms: the window |t1| + |gamma| < t2 (support
    on l < m, accumulating left of n) and the trivial phase |t1| > t2 + gamma
    (support on l >= n, accumulating right of m).  The strips in between
    have no analytic form and are rejected.
    """
    t1, t2, gm = params.t1, params.t2, params.gamma
    if t1 == -gm:
        raise PreconditionError("t1 = -gamma makes the zero-mode coefficients singular")
    g = _require_single_g(config)
    n, m = config.n, config.m
    Y4 = g / (t1 + gm)
    if _in_window(params):
        base = -(t1 + gm) / t2
        if l < n:
            return Y4 * (base ** (n - l) + base ** (m - l))
        if l < m:
            return Y4 * base ** (m - l)
        return 0.0
    if abs(t1) > abs(t2) + abs(gm):
        ratio = -t2 / (t1 + gm)
        if l < n:
            return 0.0
        if l < m:
            return -Y4 * ratio ** (l - n)
        return -Y4 * (ratio ** (l - n) + ratio ** (l - m))
    raise NoAnalyticFormError(
        f"no closed-form zero mode for t2 - gamma <= |t1| <= t2 + gamma (t1={t1})"
    )


# ---------------------------------------------------------------------------
# whole-profile assembly
# ---------------------------------------------------------------------------

@dataclass
class AmplitudeProfile:
    """Per-cell amplitudes relative to the emitter amplitude.

    ``A`` and ``B`` hold the cell-l amplitudes for l = 1..L; the emitter
    itself enters as a trailing amplitude 1 when the profile is flattened.
    """

    A: np.ndarray
    B: np.ndarray
    E: float
    normalized: bool = False

    @property
    def L(self) -> int:
        return self.A.size

    def to_vector(self, include_atom: bool = True) -> np.ndarray:
        """Flatten to the standard site ordering; unit emitter amplitude."""
        L = self.L
        vec = np.zeros(2 * L + (1 if include_atom else 0), dtype=complex)
        vec[0 : 2 * L : 2] = self.A
        vec[1 : 2 * L : 2] = self.B
        if include_atom:
            vec[2 * L] = 1.0
        return vec

    def unit_normalized(self, include_atom: bool = True) -> np.ndarray:
        vec = self.to_vector(include_atom)
        return vec / np.linalg.norm(vec)

    def rows(self):
        """(N, Re, Im, |amp|^2) per flat site, emitter last, 1-based N.

        Unit-normalized so the columns overlay the numeric eigenvector
        tables directly.
        """
        vec = self.unit_normalized(include_atom=True)
        return [
            (i + 1, float(z.real), float(z.imag), float(abs(z) ** 2)) for i, z in enumerate(vec)
        ]


def bound_profile(ctx: ClosedFormContext, config: CouplingConfig) -> AmplitudeProfile:
    """Closed-form profile of a bound or gap state over all L cells."""
    L = ctx.params.L
    amp = bound_amplitudes_AB if config.mode == LegMode.AB else bound_amplitudes_AA
    A = np.empty(L, dtype=complex)
    B = np.empty(L, dtype=complex)
    for l in range(1, L + 1):
        A[l - 1], B[l - 1] = amp(ctx, config, l)
    return AmplitudeProfile(A=A, B=B, E=ctx.E)


def zero_mode_profile(params: LatticeParams, config: CouplingConfig) -> AmplitudeProfile:
    """Piecewise zero-mode profile over all L cells."""
    L = params.L
    A = np.zeros(L, dtype=complex)
    B = np.zeros(L, dtype=complex)
    for l in range(1, L + 1):
        if config.mode == LegMode.AB:
            A[l - 1], B[l - 1] = zero_mode_AB(params, config, l)
        else:
            B[l - 1] = zero_mode_AA(params, config, l)
    return AmplitudeProfile(A=A, B=B, E=0.0)


# ---------------------------------------------------------------------------
# series check and fidelity
# ---------------------------------------------------------------------------

def f_fourier_check(k: float, ctx: ClosedFormContext, P: int):
    """Direct vs truncated-series evaluation of the lattice kernel f(k).

    f(k) = 1 / (x - (t1+gamma) e^{ik} - (t1-gamma) e^{-ik}) expands into
    prefactor * (1 + sum_p (a^p e^{-ikp} + b^p e^{ikp})) when |a|, |b| < 1.
    Returns (direct, series) for the property test.
    """
    t1, gm = ctx.params.t1, ctx.params.gamma
    if max(abs(ctx.a), abs(ctx.b)) >= 1.0:
        raise PreconditionError("series diverges: need |a| < 1 and |b| < 1")
    direct = 1.0 / (ctx.x - (t1 + gm) * np.exp(1j * k) - (t1 - gm) * np.exp(-1j * k))
    p = np.arange(1, P + 1)
    series = ctx.prefactor * (
        1.0
        + np.sum(ctx.a ** p * np.exp(-1j * k * p))
        + np.sum(ctx.b ** p * np.exp(1j * k * p))
    )
    return complex(direct), complex(series)


def state_fidelity(u: np.ndarray, v: np.ndarray) -> float:
    """|<u|v>| / (||u|| ||v||), the phase-free overlap of two states."""
    u = np.asarray(u).ravel()
    v = np.asarray(v).ravel()
    if u.shape != v.shape:
        raise PreconditionError(f"state length mismatch: {u.size} vs {v.size}")
    return float(abs(np.vdot(u, v)) / (np.linalg.norm(u) * np.linalg.norm(v)))


def wrap_error_estimate(ctx: ClosedFormContext) -> float:
    """max(|a|, |b|)^L: size of the neglected ring wrap-around tail."""
    return float(max(abs(ctx.a), abs(ctx.b)) ** ctx.params.L)
