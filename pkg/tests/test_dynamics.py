"""Propagators and the growth-rate scan along space-time rays."""

import numpy as np
import pytest

from giantatom_ssh import (
    ConfigError,
    CouplingConfig,
    Emitter,
    LatticeParams,
    LegMode,
    PreconditionError,
    Variant,
    assemble,
    evolve,
    evolve_renormalized,
    initial_bulk_state,
    lyapunov,
)
from giantatom_ssh.dynamics import _ray_cell_offset, taylor_reference_evolve


def test_initial_state_layout():
    psi = initial_bulk_state(21, 1)
    assert psi.shape == (43,)
    assert abs(np.linalg.norm(psi) - 1.0) < 1e-15
    # center cell 11 -> flat A=20, B=21
    assert psi[20] == pytest.approx(1 / np.sqrt(2))
    assert psi[21] == pytest.approx(1 / np.sqrt(2))
    assert np.count_nonzero(psi) == 2
    with pytest.raises(ConfigError):
        initial_bulk_state(20)


def test_evolve_matches_taylor_oracle():
    rng = np.random.default_rng(17)
    M = rng.normal(size=(42, 42)) + 1j * rng.normal(size=(42, 42))
    M *= 0.5
    psi0 = rng.normal(size=42) + 1j * rng.normal(size=42)
    psi0 /= np.linalg.norm(psi0)
    got = evolve(M, psi0, 1.7)
    want = taylor_reference_evolve(M, psi0, 1.7, dt=0.005)
    assert np.linalg.norm(got - want) / np.linalg.norm(want) < 1e-7


def test_hermitian_evolution_preserves_norm():
    params = LatticeParams(L=9, t1=0.4, t2=1.0, gamma=0.0)
    H = assemble(params, CouplingConfig.equal_g(Emitter.GIANT_ATOM, LegMode.AB, 4, 5, 1.0))
    psi0 = initial_bulk_state(9, 1)
    for t in (0.5, 3.0, 12.0):
        psi = evolve(H, psi0, t)
        assert abs(np.linalg.norm(psi) - 1.0) < 1e-11


def test_renormalized_agrees_with_direct():
    params = LatticeParams(L=15, t1=0.6, t2=1.0, gamma=1.0)
    H = assemble(params, CouplingConfig.equal_g(Emitter.GIANT_ATOM, LegMode.AB, 1, 1, 1.0))
    psi0 = initial_bulk_state(15, 1)
    direct = evolve(H, psi0, 3.0)
    unit, log_norm = evolve_renormalized(H, psi0, 3.0, n_chunks=30)
    rebuilt = unit * np.exp(log_norm)
    # overall result is chunking-invariant up to roundoff
    assert np.linalg.norm(rebuilt - direct) / np.linalg.norm(direct) < 1e-10


def test_ray_cell_offset_rounding():
    # halfway points round toward zero, otherwise nearest cell
    assert _ray_cell_offset(0.0) == 0
    assert _ray_cell_offset(0.49) == 0
    assert _ray_cell_offset(0.5) == 0
    assert _ray_cell_offset(0.51) == 1
    assert _ray_cell_offset(-0.5) == 0
    assert _ray_cell_offset(-0.51) == -1
    assert _ray_cell_offset(2.5) == 2
    assert _ray_cell_offset(-2.5) == -2
    assert _ray_cell_offset(1.2) == 1


def test_lyapunov_preconditions_and_channels():
    params = LatticeParams(L=41, t1=0.6, t2=1.0, gamma=1.0)
    H = assemble(params, CouplingConfig.equal_g(Emitter.GIANT_ATOM, LegMode.AB, 1, 1, 1.0))
    with pytest.raises(PreconditionError):
        lyapunov(H, params, np.array([-2.0, 2.0]), 50.0)  # wavefront exits the ring
    with pytest.raises(ConfigError):
        lyapunov(H, params, np.array([0.0]), 4.0, channel="C")
    curve = lyapunov(H, params, np.linspace(-1.0, 1.0, 5), 8.0, channel="B")
    assert curve.lam.shape == (5,)
    assert np.all(np.isfinite(curve.lam))


def test_hermitian_rates_are_nonpositive():
    # no gain anywhere: unit-norm dynamics forbids exponential growth
    params = LatticeParams(L=61, t1=0.6, t2=1.0, gamma=0.0)
    H = assemble(params, CouplingConfig.equal_g(Emitter.GIANT_ATOM, LegMode.AB, 1, 1, 1.0))
    curve = lyapunov(H, params, np.linspace(-1.5, 1.5, 7), 15.0)
    assert np.max(curve.lam) <= 1e-9


def test_gain_loss_variant_runs():
    params = LatticeParams(L=41, t1=0.6, t2=1.0, gamma=0.0, delta=1.0)
    H = assemble(params, CouplingConfig.equal_g(Emitter.GIANT_ATOM, LegMode.AB, 1, 1, 1.0),
                 variant=Variant.GAIN_LOSS)
    curve = lyapunov(H, params, np.array([-0.5, 0.0, 0.5]), 8.0)
    # gain/loss model amplifies at the origin
    assert curve.lam[1] > 0.0
