"""Localization diagnostics: chain-restricted inverse participation ratio
and the decay-base pair of the bulk eigenvalue quadratic.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .errors import PreconditionError
from .model import LatticeParams
from .spectral import ClassificationReport, SpectrumResult, StateClass


@dataclass
class IprReport:
    """Per-state and averaged IPR over the chain sites only."""

    per_state: np.ndarray
    mean: float
    used_count: int
    excluded_count: int
    include_atom: bool


def ipr(spectrum: SpectrumResult, L: int, include_atom: bool = False) -> IprReport:
    """Inverse participation ratio of each eigenstate.

    Amplitudes on emitter levels are dropped (unless ``include_atom``); the
    denominator renormalizes over the kept sites, so a state's IPR stays in
    [1/(2L), 1].  States with chain weight below 1e-12 are excluded from the
    average and counted.
    """
    n_sites = spectrum.right.shape[0] if include_atom else 2 * L
    vals = np.full(spectrum.dim, np.nan)
    used = 0
    excluded = 0
    for q in range(spectrum.dim):
        w = np.abs(spectrum.right[:n_sites, q]) ** 2
        total = float(w.sum())
        if total < 1e-12:
            excluded += 1
            continue
        vals[q] = float(np.sum(w * w) / (total * total))
        used += 1
    mean = float(np.nanmean(vals)) if used else float("nan")
    return IprReport(per_state=vals, mean=mean, used_count=used,
                     excluded_count=excluded, include_atom=include_atom)


@dataclass(frozen=True)
class BetaPair:
    """Roots of t2 (t1+gamma) beta^2 - Delta beta + t2 (t1-gamma) = 0.

    |beta1| >= |beta2|.  |beta| measures the per-cell decay of the
    plane-wave-like ansatz of a bulk state at energy E.
    """

    Delta: complex
    beta1: complex
    beta2: complex
    degenerate: bool = False


def beta_of_energy(E: complex, params: LatticeParams) -> BetaPair:
    """Solve the bulk quadratic at energy E, cancellation-free.

    The larger-magnitude root comes from the numerically stable branch of
    the quadratic formula; the other follows from the product of roots
    (t1-gamma)/(t1+gamma), which is independent of E.
    """
    t1, t2, gm = params.t1, params.t2, params.gamma
    if t1 == -gm:
        raise PreconditionError("t1 = -gamma: leading coefficient vanishes")
    E = complex(E)
    Delta = E * E + gm * gm - t1 * t1 - t2 * t2
    disc = Delta * Delta - 4.0 * t2 * t2 * (t1 * t1 - gm * gm)
    root = cmath.sqrt(disc)
    if (Delta.conjugate() * root).real < 0.0:
        root = -root
    scale = max(abs(Delta), abs(t2 * t2 * (t1 * t1 - gm * gm)), 1.0)
    degenerate = abs(disc) <= 1e-14 * scale * scale
    b_big = (Delta + root) / (2.0 * t2 * (t1 + gm))
    if b_big == 0:
        # Delta = disc = 0: both roots vanish only if t1 = gamma too
        b_small = 0.0 + 0.0j
    else:
        b_small = ((t1 - gm) / (t1 + gm)) / b_big
    if abs(b_small) > abs(b_big):
        b_big, b_small = b_small, b_big
    return BetaPair(Delta=Delta, beta1=b_big, beta2=b_small, degenerate=degenerate)


def reference_lines(params: LatticeParams) -> dict:
    """The three |beta| reference values: ring, open-chain skin, inner."""
    r = abs((params.t1 - params.gamma) / (params.t1 + params.gamma))
    return {"pbc": 1.0, "obc_skin": float(np.sqrt(r)), "inner": float(r)}


def beta_profile(
    spectrum: SpectrumResult,
    params: LatticeParams,
    report: ClassificationReport | None = None,
    only: StateClass | None = StateClass.BULK,
) -> list:
    """Rows (q, Re E, Im E, |beta1|, |beta2|, class) in canonical state order.

    With ``only`` set (default: bulk states) other classes are skipped;
    pass None to keep every state.  ``report`` may be precomputed.
    """
    if report is None:
        from .spectral import classify_states

        report = classify_states(spectrum, params)
    rows = []
    for q, E in enumerate(spectrum.eigenvalues):
        cls = report.labels[q]
        if only is not None and cls != only:
            continue
        pair = beta_of_energy(E, params)
        rows.append((q, float(E.real), float(E.imag),
                     float(abs(pair.beta1)), float(abs(pair.beta2)), cls.value))
    return rows
