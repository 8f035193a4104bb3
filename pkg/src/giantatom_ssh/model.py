"""Real-space Hamiltonians for a dimerized ring with direction-dependent
intracell hoppings (t1 +/- gamma), an optional gain/loss variant, and an
optional emitter coupled at one or two chain sites.

Site ordering is fixed once and for all: A_1, B_1, A_2, B_2, ..., A_L, B_L,
then any atom levels.  Flat indices here are 0-based; file formats use the
1-based site number N (atom of the single-emitter model at N = 2L + 1).
All constructed matrices are immutable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ConfigError


class Boundary(Enum):
    PBC = "pbc"
    OBC = "obc"


class Variant(Enum):
    NONRECIPROCAL = "nonreciprocal"
    GAIN_LOSS = "gainloss"


class Emitter(Enum):
    GIANT_ATOM = "giant"
    TWO_SMALL_ATOMS = "two"
    NO_ATOM = "none"


class LegMode(Enum):
    AB = "AB"
    AA = "AA"


@dataclass(frozen=True)
class LatticeParams:
    """Chain couplings and size.

    Parameters
    ----------
    L : int
        Number of unit cells, at least 2.
    t1 : float
        Intracell hopping; the nonreciprocal variant uses t1 +/- gamma.
    t2 : float
        Intercell hopping, nonzero (conventionally 1).
    gamma : float
        Nonreciprocity of the intracell bond.
    delta : float
        Gain/loss amplitude, used only by the gain/loss variant.
    """

    L: int
    t1: float
    t2: float = 1.0
    gamma: float = 0.0
    delta: float = 0.0

    def __post_init__(self):
        if not isinstance(self.L, (int, np.integer)) or self.L < 2:
            raise ConfigError(f"L must be an integer >= 2, got {self.L!r}")
        if self.t2 == 0:
            raise ConfigError("t2 must be nonzero")
        for name in ("t1", "t2", "gamma", "delta"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")


@dataclass(frozen=True)
class CouplingConfig:
    """Emitter kind, leg placement, and per-leg strengths.

    The left leg attaches at A_n; the right leg at B_m (AB mode) or A_m
    (AA mode).  n = m is allowed (both legs in one cell).
    """

    emitter: Emitter = Emitter.NO_ATOM
    mode: LegMode = LegMode.AB
    n: int = 1
    m: int = 1
    g_n: float = 0.0
    g_m: float = 0.0

    def __post_init__(self):
        if self.emitter != Emitter.NO_ATOM:
            if not (1 <= self.n <= self.m):
                raise ConfigError(f"need 1 <= n <= m, got n={self.n}, m={self.m}")
        if not (math.isfinite(self.g_n) and math.isfinite(self.g_m)):
            raise ConfigError("leg couplings must be finite")

    @classmethod
    def equal_g(cls, emitter: Emitter, mode: LegMode, n: int, m: int, g: float) -> "CouplingConfig":
        """Single-strength constructor: both legs coupled at strength g."""
        return cls(emitter=emitter, mode=mode, n=n, m=m, g_n=g, g_m=g)

    @property
    def n_atoms(self) -> int:
        return {Emitter.GIANT_ATOM: 1, Emitter.TWO_SMALL_ATOMS: 2, Emitter.NO_ATOM: 0}[self.emitter]


@dataclass(frozen=True)
class SiteIndexing:
    """Bijection between (cell, sublattice) / atom labels and flat indices.

    Flat layout: A_1, B_1, ..., A_L, B_L, then atoms.  0-based internally;
    ``site_number`` gives the 1-based N used in exported tables.
    """

    L: int
    n_atoms: int = 0

    @property
    def dim(self) -> int:
        return 2 * self.L + self.n_atoms

    def a(self, l: int) -> int:
        if not 1 <= l <= self.L:
            raise ConfigError(f"cell index {l} outside 1..{self.L}")
        return 2 * (l - 1)

    def b(self, l: int) -> int:
        if not 1 <= l <= self.L:
            raise ConfigError(f"cell index {l} outside 1..{self.L}")
        return 2 * l - 1

    def atom(self, j: int = 0) -> int:
        if not 0 <= j < self.n_atoms:
            raise ConfigError(f"atom index {j} outside 0..{self.n_atoms - 1}")
        return 2 * self.L + j

    def site_number(self, flat: int) -> int:
        """1-based site number N for export; the first atom sits at 2L + 1."""
        return flat + 1

    def label(self, flat: int) -> str:
        if flat >= 2 * self.L:
            return f"atom{flat - 2 * self.L + 1}"
        cell, sub = divmod(flat, 2)
        return f"{'AB'[sub]}{cell + 1}"


@dataclass(frozen=True)
class HamiltonianMatrix:
    """A built Hamiltonian together with its provenance."""

    matrix: np.ndarray
    boundary: Boundary
    variant: Variant
    params: LatticeParams
    config: CouplingConfig = field(default=CouplingConfig())

    def __post_init__(self):
        self.matrix.flags.writeable = False

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def indexing(self) -> SiteIndexing:
        return SiteIndexing(self.params.L, self.config.n_atoms)

    def is_hermitian(self, tol: float = 0.0) -> bool:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T))) <= tol

    def to_json_dict(self) -> dict:
        """Debug dump: row-major entries as [re, im] pairs."""
        flat = [[float(z.real), float(z.imag)] for z in self.matrix.ravel()]
        return {
            "dim": self.dim,
            "boundary": self.boundary.value,
            "variant": self.variant.value,
            "entries_row_major": flat,
        }

    def dump_json(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json_dict(), fh)


def matrix_from_json_dict(doc: dict) -> np.ndarray:
    d = int(doc["dim"])
    raw = np.asarray(doc["entries_row_major"], dtype=float)
    if raw.shape != (d * d, 2):
        raise ConfigError("malformed matrix dump")
    return (raw[:, 0] + 1j * raw[:, 1]).reshape(d, d)


def _chain_block(params: LatticeParams, boundary: Boundary, variant: Variant) -> np.ndarray:
    L = params.L
    idx = SiteIndexing(L)
    H = np.zeros((2 * L, 2 * L), dtype=complex)
    for l in range(1, L + 1):
        if variant == Variant.NONRECIPROCAL:
            H[idx.a(l), idx.b(l)] = params.t1 + params.gamma
            H[idx.b(l), idx.a(l)] = params.t1 - params.gamma
        else:
            H[idx.a(l), idx.b(l)] = params.t1
            H[idx.b(l), idx.a(l)] = params.t1
            H[idx.a(l), idx.a(l)] = 1j * params.delta
            H[idx.b(l), idx.b(l)] = -1j * params.delta
        nxt = l + 1
        if nxt > L:
            if boundary == Boundary.OBC:
                continue
            nxt = 1
        H[idx.a(nxt), idx.b(l)] = params.t2
        H[idx.b(l), idx.a(nxt)] = params.t2
    return H


def build_ssh(params: LatticeParams, boundary: Boundary = Boundary.PBC) -> HamiltonianMatrix:
    """Bare nonreciprocal chain: intracell t1 +/- gamma, intercell t2."""
    H = _chain_block(params, boundary, Variant.NONRECIPROCAL)
    return HamiltonianMatrix(H, boundary, Variant.NONRECIPROCAL, params)


def build_gain_loss_ssh(params: LatticeParams, boundary: Boundary = Boundary.PBC) -> HamiltonianMatrix:
    """Hermitian hoppings plus staggered on-site +i*delta (A) / -i*delta (B)."""
    H = _chain_block(params, boundary, Variant.GAIN_LOSS)
    return HamiltonianMatrix(H, boundary, Variant.GAIN_LOSS, params)


def assemble(
    params: LatticeParams,
    config: CouplingConfig,
    boundary: Boundary = Boundary.PBC,
    variant: Variant = Variant.NONRECIPROCAL,
) -> HamiltonianMatrix:
    """Chain block plus emitter rows/columns.

    The giant atom contributes one level coupled to both legs; two small
    atoms contribute one level per leg.  Coupling entries are real and
    symmetric; all non-Hermiticity lives in the chain block.
    """
    L = params.L
    if config.emitter != Emitter.NO_ATOM and config.m > L:
        raise ConfigError(f"leg cell m={config.m} outside 1..{L}")
    nat = config.n_atoms
    D = 2 * L + nat
    idx = SiteIndexing(L, nat)
    H = np.zeros((D, D), dtype=complex)
    H[: 2 * L, : 2 * L] = _chain_block(params, boundary, variant)
    if nat:
        left = idx.a(config.n)
        right = idx.b(config.m) if config.mode == LegMode.AB else idx.a(config.m)
        if config.emitter == Emitter.GIANT_ATOM:
            at = idx.atom(0)
            H[at, left] += config.g_n
            H[left, at] += config.g_n
            H[at, right] += config.g_m
            H[right, at] += config.g_m
        else:
            H[idx.atom(0), left] = H[left, idx.atom(0)] = config.g_n
            H[idx.atom(1), right] = H[right, idx.atom(1)] = config.g_m
    return HamiltonianMatrix(H, boundary, variant, params, config)


def translation_operator(L: int) -> np.ndarray:
    """One-cell shift on the bare chain; commutes with the PBC chain block."""
    T = np.zeros((2 * L, 2 * L))
    for i in range(2 * L):
        T[(i + 2) % (2 * L), i] = 1.0
    return T
