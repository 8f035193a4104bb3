"""Diagonalization, state classification, secular residuals, winding."""

import numpy as np
import pytest

from giantatom_ssh import (
    BandBraidingError,
    Boundary,
    CouplingConfig,
    Emitter,
    GapClosedError,
    LatticeParams,
    LegMode,
    StateClass,
    assemble,
    band_hull,
    build_ssh,
    classify_states,
    dispersion,
    dispersion_squared,
    eigendecompose,
    energy_residual_AA,
    energy_residual_AB,
    winding_number,
    zero_mode_selfenergy_closed,
)

P_REF = LatticeParams(L=50, t1=0.2, t2=1.0, gamma=0.5)
C_AB = CouplingConfig.equal_g(Emitter.GIANT_ATOM, LegMode.AB, 25, 26, 1.0)
C_AA = CouplingConfig.equal_g(Emitter.GIANT_ATOM, LegMode.AA, 25, 26, 1.0)


def test_dispersion_hand_value():
    # k=0: omega^2 = (t1+g+t2)(t1-g+t2) = 1.7*0.7 = 1.19
    w = dispersion(P_REF, 0.0)
    assert abs(w - np.sqrt(1.19)) < 1e-14
    w2 = dispersion_squared(P_REF, np.array([0.0, np.pi]))
    assert abs(w2[0] - 1.19) < 1e-14
    # k=pi: (t1+g-t2)(t1-g-t2) = 0.39 + 0j ... (-0.3)(-1.3)
    assert abs(w2[1] - 0.39) < 1e-14


def test_band_hull_reference_values():
    lo, hi = band_hull(P_REF)
    assert abs(lo - 0.6244997998398398) < 1e-12
    assert abs(hi - 1.1490074172511835) < 1e-9  # dense-grid hull, deterministic
    lo2, hi2 = band_hull(LatticeParams(L=50, t1=1.6, t2=1.0, gamma=0.5))
    assert lo2 < 0.34 and hi2 > 2.5


def test_eigendecompose_residuals_and_biorthogonality():
    H = assemble(P_REF, C_AB)
    spec = eigendecompose(H, want_left=True)
    assert spec.residual_max(H) < 1e-12
    G = spec.left.conj().T @ spec.right
    assert np.max(np.abs(G - np.eye(spec.dim))) < 1e-8
    # canonical ordering is reproducible
    spec2 = eigendecompose(assemble(P_REF, C_AB))
    assert np.array_equal(spec.eigenvalues, spec2.eigenvalues)


def test_classification_counts_at_reference_point():
    # frozen regression: near-zero mode, near-edge real state, one upper,
    # one complex pair below
    spec = eigendecompose(assemble(P_REF, C_AB))
    rep = classify_states(spec, P_REF)
    assert rep.count(StateClass.GAP_MODE) == 2
    assert rep.count(StateClass.UPPER_BOUND) == 1
    assert rep.count(StateClass.LOWER_BOUND) == 2
    gaps = rep.indices(StateClass.GAP_MODE)
    e_min = min(abs(spec.eigenvalues[q]) for q in gaps)
    assert abs(e_min - 1.3835224595e-08) < 1e-15
    q_up = rep.indices(StateClass.UPPER_BOUND)[0]
    assert abs(spec.eigenvalues[q_up] - 1.682322645256489) < 1e-9


def test_secular_residual_vanishes_at_numerical_eigenvalues():
    spec = eigendecompose(assemble(P_REF, C_AB))
    rep = classify_states(spec, P_REF)
    scale = np.max(np.abs(spec.eigenvalues))
    for q in rep.indices(StateClass.UPPER_BOUND) + rep.indices(StateClass.LOWER_BOUND):
        r = energy_residual_AB(complex(spec.eigenvalues[q]), P_REF, C_AB)
        assert abs(r) < 1e-10 * scale

    spec_aa = eigendecompose(assemble(P_REF, C_AA))
    rep_aa = classify_states(spec_aa, P_REF)
    for q in rep_aa.indices(StateClass.UPPER_BOUND):
        r = energy_residual_AA(complex(spec_aa.eigenvalues[q]), P_REF, C_AA)
        assert abs(r) < 1e-10 * scale
    # E=0 is always a root of the AA condition
    assert energy_residual_AA(0.0, P_REF, C_AA) == 0.0


def test_selfenergy_closed_form_branches():
    # residue sum with |t1 +/- gamma| tested against frozen values
    f = lambda t1, d: zero_mode_selfenergy_closed(
        LatticeParams(L=2, t1=t1, t2=1.0, gamma=0.5), d)
    # t1=0.8: only t1-gamma=1.3 outside, 1/1.69; t1=1.8: both bonds,
    # 1/5.29 + 1/1.69; t1=1.2, d=0: -1/1.7
    assert abs(f(0.8, 1) - 0.5917159763313609) < 1e-14
    assert abs(f(1.8, 1) - 0.7807518931555575) < 1e-14
    assert abs(f(1.2, 0) - (-0.5882352941176471)) < 1e-14
    assert f(0.2, 1) == 0.0  # both branch points inside the unit circle
    with pytest.raises(Exception):
        zero_mode_selfenergy_closed(LatticeParams(L=2, t1=0.5, t2=1.0, gamma=0.5), 1)


def test_winding_number_values():
    w = winding_number(P_REF, Nk=512)
    assert w.rounded == 1 and abs(w.raw - 1.0) < 1e-3
    w0 = winding_number(LatticeParams(L=2, t1=2.0, t2=1.0, gamma=0.5), Nk=512)
    assert w0.rounded == 0 and abs(w0.raw) < 1e-3
    # Hermitian limit keeps the quantization
    wh = winding_number(LatticeParams(L=2, t1=0.5, t2=1.0, gamma=0.0), Nk=512)
    assert wh.rounded == 1


def test_winding_rejects_gap_closing_and_braiding():
    with pytest.raises(GapClosedError):
        winding_number(LatticeParams(L=2, t1=0.5, t2=1.0, gamma=0.5), Nk=256)
    with pytest.raises(BandBraidingError):
        winding_number(LatticeParams(L=2, t1=0.8, t2=1.0, gamma=0.5), Nk=512)
    with pytest.raises(BandBraidingError):
        winding_number(LatticeParams(L=2, t1=-0.7, t2=1.0, gamma=0.5), Nk=512)


def test_pbc_ring_spectrum_matches_dispersion():
    # bare PBC ring eigenvalues are +/- omega_k on the discrete grid
    params = LatticeParams(L=12, t1=0.3, t2=1.0, gamma=0.4)
    spec = eigendecompose(build_ssh(params, Boundary.PBC))
    ks = 2.0 * np.pi * np.arange(12) / 12
    target = np.concatenate([dispersion(params, ks), -dispersion(params, ks)])
    got = np.sort_complex(np.round(spec.eigenvalues, 10))
    want = np.sort_complex(np.round(target, 10))
    assert np.max(np.abs(got - want)) < 1e-9
