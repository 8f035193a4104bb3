"""Hamiltonian assembly against a brute-force entry-by-entry oracle."""

import json

import numpy as np
import pytest

from giantatom_ssh import (
    Boundary,
    ConfigError,
    CouplingConfig,
    Emitter,
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


def oracle_matrix(params, config=None, boundary=Boundary.PBC, variant=Variant.NONRECIPROCAL):
    """Independent reconstruction: explicit loops, no shared helpers."""
    L = params.L
    n_atoms = 0 if config is None else config.n_atoms
    D = 2 * L + n_atoms
    H = np.zeros((D, D), dtype=complex)
    A = lambda l: 2 * (l - 1)
    B = lambda l: 2 * l - 1
    for l in range(1, L + 1):
        if variant == Variant.NONRECIPROCAL:
            H[A(l), B(l)] += params.t1 + params.gamma
            H[B(l), A(l)] += params.t1 - params.gamma
        else:
            H[A(l), B(l)] += params.t1
            H[B(l), A(l)] += params.t1
            H[A(l), A(l)] += 1j * params.delta
            H[B(l), B(l)] += -1j * params.delta
    pairs = [(B(l), A(l + 1)) for l in range(1, L)]
    if boundary == Boundary.PBC:
        pairs.append((B(L), A(1)))
    for i, j in pairs:
        H[i, j] += params.t2
        H[j, i] += params.t2
    if config is not None and config.emitter != Emitter.NO_ATOM:
        leg_n = A(config.n)
        leg_m = B(config.m) if config.mode == LegMode.AB else A(config.m)
        if config.emitter == Emitter.GIANT_ATOM:
            at = 2 * L
            for leg, g in ((leg_n, config.g_n), (leg_m, config.g_m)):
                H[at, leg] += g
                H[leg, at] += g
        else:
            for j, (leg, g) in enumerate(((leg_n, config.g_n), (leg_m, config.g_m))):
                H[2 * L + j, leg] += g
                H[leg, 2 * L + j] += g
    return H


def test_chain_matches_oracle_small_sizes():
    rng = np.random.default_rng(7)
    for _ in range(40):
        L = int(rng.integers(2, 7))
        params = LatticeParams(L=L, t1=float(rng.normal()), t2=float(rng.normal()) or 1.0,
                               gamma=float(rng.normal()), delta=float(rng.normal()))
        for boundary in Boundary:
            got = build_ssh(params, boundary).matrix
            want = oracle_matrix(params, None, boundary, Variant.NONRECIPROCAL)
            assert np.array_equal(got, want)
            got = build_gain_loss_ssh(params, boundary).matrix
            want = oracle_matrix(params, None, boundary, Variant.GAIN_LOSS)
            assert np.array_equal(got, want)


def test_assemble_matches_oracle_all_emitters():
    rng = np.random.default_rng(11)
    for _ in range(60):
        L = int(rng.integers(2, 7))
        n = int(rng.integers(1, L + 1))
        m = int(rng.integers(n, L + 1))
        params = LatticeParams(L=L, t1=float(rng.normal()), t2=1.0, gamma=float(rng.normal()))
        config = CouplingConfig(
            emitter=rng.choice([Emitter.GIANT_ATOM, Emitter.TWO_SMALL_ATOMS]),
            mode=rng.choice([LegMode.AB, LegMode.AA]),
            n=n, m=m, g_n=float(rng.normal()), g_m=float(rng.normal()),
        )
        boundary = rng.choice(list(Boundary))
        variant = rng.choice(list(Variant))
        got = assemble(params, config, boundary, variant).matrix
        want = oracle_matrix(params, config, boundary, variant)
        assert np.array_equal(got, want)


def test_same_cell_AA_giant_accumulates():
    # both legs on one site: coupling entry doubles, it does not overwrite
    params = LatticeParams(L=4, t1=0.2, t2=1.0, gamma=0.5)
    config = CouplingConfig.equal_g(Emitter.GIANT_ATOM, LegMode.AA, 2, 2, 1.5)
    H = assemble(params, config).matrix
    idx = SiteIndexing(4, 1)
    assert H[idx.atom(), idx.a(2)] == 3.0
    assert H[idx.a(2), idx.atom()] == 3.0


def test_translation_commutes_with_bare_pbc_ring():
    params = LatticeParams(L=6, t1=0.37, t2=1.0, gamma=0.21)
    H = build_ssh(params, Boundary.PBC).matrix
    T = translation_operator(6)
    assert np.allclose(T @ H @ T.T - H, 0.0, atol=1e-15)
    # OBC breaks it
    H_obc = build_ssh(params, Boundary.OBC).matrix
    assert not np.allclose(T @ H_obc @ T.T - H_obc, 0.0, atol=1e-12)


def test_hermiticity_by_variant():
    params = LatticeParams(L=8, t1=0.4, t2=1.0, gamma=0.3, delta=0.7)
    assert not build_ssh(params).is_hermitian(tol=1e-14)
    assert not build_gain_loss_ssh(params).is_hermitian(tol=1e-14)
    herm = LatticeParams(L=8, t1=0.4, t2=1.0, gamma=0.0, delta=0.0)
    assert build_ssh(herm).is_hermitian(tol=0.0)
    assert build_gain_loss_ssh(herm).is_hermitian(tol=0.0)


def test_indexing_layout_and_labels():
    idx = SiteIndexing(5, 2)
    assert idx.dim == 12
    assert idx.a(1) == 0 and idx.b(1) == 1 and idx.a(5) == 8 and idx.b(5) == 9
    assert idx.atom(0) == 10 and idx.atom(1) == 11
    assert idx.site_number(0) == 1 and idx.site_number(9) == 10
    assert "A" in idx.label(0) and "B" in idx.label(1)


def test_matrix_json_round_trip(tmp_path):
    params = LatticeParams(L=3, t1=0.2, t2=1.0, gamma=0.5)
    config = CouplingConfig.equal_g(Emitter.GIANT_ATOM, LegMode.AB, 1, 2, 0.8)
    H = assemble(params, config, Boundary.PBC, Variant.GAIN_LOSS)
    doc = H.to_json_dict()
    back = matrix_from_json_dict(json.loads(json.dumps(doc)))
    assert np.array_equal(back, H.matrix)
    p = tmp_path / "h.json"
    H.dump_json(p)
    back2 = matrix_from_json_dict(json.loads(p.read_text()))
    assert np.array_equal(back2, H.matrix)


def test_parameter_validation():
    with pytest.raises(ConfigError):
        LatticeParams(L=1, t1=0.2, t2=1.0)
    with pytest.raises(ConfigError):
        LatticeParams(L=4, t1=0.2, t2=0.0)
    with pytest.raises(ConfigError):
        LatticeParams(L=4, t1=float("nan"), t2=1.0)
    with pytest.raises(ConfigError):
        CouplingConfig(emitter=Emitter.GIANT_ATOM, mode=LegMode.AB, n=3, m=2, g_n=1.0, g_m=1.0)
    with pytest.raises(ConfigError):
        CouplingConfig(emitter=Emitter.GIANT_ATOM, mode=LegMode.AB, n=0, m=2, g_n=1.0, g_m=1.0)
    params = LatticeParams(L=4, t1=0.2, t2=1.0)
    bad = CouplingConfig.equal_g(Emitter.GIANT_ATOM, LegMode.AB, 2, 9, 1.0)
    with pytest.raises(ConfigError):
        assemble(params, bad)


def test_matrix_is_frozen():
    H = build_ssh(LatticeParams(L=3, t1=0.1, t2=1.0))
    with pytest.raises(ValueError):
        H.matrix[0, 0] = 5.0
