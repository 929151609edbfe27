import math

import numpy as np
import pytest
from scipy import linalg

from grwa.effective import build_exact_grwa
from grwa.fock import (NumericScatterer, SparseOperator, TruncatedFockSpace, bound_state_spectrum,
                       build_rotated_hamiltonian, intraband_selection_check, scattering_numeric)
from grwa.model import ModelParams, ParameterError
from grwa.polaron import displacement_overlap, solve_alpha_closed
from grwa.scattering import default_k_grid, solve_scattering
from oracles import BareFrameScatterer


def count_states(L, cp, parity=None):
    total = 0
    for t in range(cp + 1):
        if parity is not None and t % 2 != parity:
            continue
        for e in (0, 1):
            if t - e >= 0:
                total += math.comb(L + t - e - 1, t - e)
    return total


@pytest.mark.parametrize("L,cp,parity", [(1, 0, None), (3, 2, None), (5, 3, 1), (7, 2, 0), (9, 3, None)])
def test_space_dimension(L, cp, parity):
    space = TruncatedFockSpace.build(L, cp, parity=parity)
    assert space.dimension == count_states(L, cp, parity)
    totals = space.photon_numbers + space.excited
    assert totals.max() <= cp
    if parity is not None:
        assert np.all(totals % 2 == parity)


def test_space_index_round_trip_and_cutoff():
    space = TruncatedFockSpace.build(5, 3, per_site_cutoff=1)
    assert space.occupations.max() <= 1
    for i in range(space.dimension):
        occ, e = space.state(i)
        assert space.index_of(occ, e) == i
    assert space.lookup([2, 0, 0, 0, 0], False) is None
    with pytest.raises(KeyError):
        space.index_of([2, 0, 0, 0, 0], False)
    for bad in ((4, 2), (5, -1)):
        with pytest.raises(ParameterError):
            TruncatedFockSpace.build(*bad)


def test_odd_sector_of_cp4_equals_cp3():
    a = TruncatedFockSpace.build(9, 3, parity=1)
    b = TruncatedFockSpace.build(9, 4, parity=1)
    np.testing.assert_array_equal(a.occupations, b.occupations)


@pytest.mark.parametrize("p", [ModelParams(xi=0.04, lam=1.6), ModelParams(xi=0.1, Omega=0.4, lam=0.7)])
def test_rotated_hamiltonian_symmetric(p):
    space = TruncatedFockSpace.build(9, 3)
    op = build_rotated_hamiltonian(p, solve_alpha_closed(p), space)
    assert op.is_symmetric()
    assert np.all(np.isfinite(op.values))


def test_rotated_hamiltonian_without_coupling_is_bare():
    p = ModelParams(xi=0.04, Omega=0.8, lam=0.0)
    space = TruncatedFockSpace.build(5, 2)
    h = build_rotated_hamiltonian(p, solve_alpha_closed(p), space).to_csr().toarray()
    diag = p.omega * space.photon_numbers + np.where(space.excited, 0.4, -0.4)
    np.testing.assert_allclose(np.diag(h), diag, atol=1e-15)
    # the only off-diagonal elements are photon hops
    off = h - np.diag(np.diag(h))
    assert set(np.round(np.unique(np.abs(off[off != 0])), 12)) <= {0.04, round(0.04 * math.sqrt(2), 12)}


def test_rotated_hamiltonian_without_splitting_is_free_photons():
    p = ModelParams(xi=0.04, Omega=0.0, lam=1.3)
    space = TruncatedFockSpace.build(5, 2, parity=1)
    h = build_rotated_hamiltonian(p, solve_alpha_closed(p), space).to_csr().toarray()
    ref = build_rotated_hamiltonian(p.replace(lam=0.0), solve_alpha_closed(p.replace(lam=0.0)), space)
    np.testing.assert_allclose(h, ref.to_csr().toarray(), atol=1e-15)


def test_tls_element_is_product_of_overlaps():
    p = ModelParams(xi=0.1, Omega=0.6, lam=0.9)
    pa = solve_alpha_closed(p)
    space = TruncatedFockSpace.build(3, 3)
    h = build_rotated_hamiltonian(p, pa, space).to_csr().toarray()
    i = space.index_of([0, 1, 0], True)
    j = space.index_of([1, 0, 1], False)
    expect = 0.3 * displacement_overlap(0, 1, 2 * pa.alpha(-1)) * displacement_overlap(1, 0, 2 * pa.alpha(0)) \
        * displacement_overlap(0, 1, 2 * pa.alpha(1))
    assert h[i, j] == pytest.approx(expect, abs=1e-15)
    # opposite parity of N + [e]: no element
    assert h[i, space.index_of([0, 0, 0], True)] == 0.0
    assert h[i, space.index_of([0, 0, 0], False)] != 0.0


def test_sparse_dump(tmp_path):
    op = SparseOperator(2, np.array([0, 1]), np.array([1, 0]), np.array([0.5, 0.5]))
    path = tmp_path / "h.txt"
    op.dump(path)
    lines = path.read_text().splitlines()
    assert lines[0] == "# dimension 2" and lines[1] == "0 1 0.5"
    assert op.nnz == 2


@pytest.mark.parametrize("p", [ModelParams(xi=0.04, Omega=1.0, lam=0.04),
                               ModelParams(xi=0.04, Omega=0.4, lam=1.0),
                               ModelParams(xi=0.04, Omega=1.0, lam=1.6)])
def test_cp2_reproduces_exact_grwa(p):
    solver = NumericScatterer(p, 2)
    h = build_exact_grwa(p)
    for k in default_k_grid(6):
        res = solver.solve(k)
        assert abs(res.r - solve_scattering(h, k).r) < 1e-9
        assert res.flux_residual < 1e-6


def test_chain_length_insensitive():
    p = ModelParams(xi=0.04, Omega=0.4, lam=1.0)
    a, b = NumericScatterer(p, 2, 31), NumericScatterer(p, 2, 45)
    for k in (0.4, 1.7, 2.6):
        assert abs(a.solve(k).r - b.solve(k).r) < 1e-9


def test_cp3_sparse_solve_matches_bordered():
    p = ModelParams(xi=0.04, Omega=1.0, lam=1.6)
    s = NumericScatterer(p, 3, 21)
    for k in (0.8, 2.0):
        r_bordered, t_bordered, _ = s._bordered(k)
        res = s.solve(k)
        assert abs(res.r - r_bordered) < 1e-8 and abs(res.t - t_bordered) < 1e-8
        assert res.flux_residual < 1e-6


def test_rotated_and_bare_frames_agree_at_cp3():
    p = ModelParams(xi=0.04, Omega=1.0, lam=0.04)
    rot, bare = NumericScatterer(p, 3, 21), BareFrameScatterer(p, 3, 21)
    for k in (0.5, 1.4, 2.3):
        assert abs(rot.solve(k).refl_prob - bare.solve(k).refl_prob) < 1e-4


def test_numeric_guards():
    with pytest.raises(ParameterError):
        NumericScatterer(ModelParams(xi=-0.04), 2)
    with pytest.raises(ParameterError):
        NumericScatterer(ModelParams(xi=0.0), 2)
    with pytest.raises(ParameterError):
        NumericScatterer(ModelParams(xi=0.2, lam=1.0), 2, chain_length=9)
    with pytest.raises(ParameterError):
        NumericScatterer(ModelParams(), 0)
    with pytest.raises(ParameterError):
        NumericScatterer(ModelParams(tls_sites=(0, 2)), 2)


def test_scattering_numeric_wrapper():
    p = ModelParams(xi=0.04, Omega=0.4, lam=1.0)
    assert scattering_numeric(p, 1.0, L=31, cp=2).r == pytest.approx(NumericScatterer(p, 2, 31).solve(1.0).r)


@pytest.mark.parametrize("seed", range(2))
def test_intraband_selection(seed):
    rng = np.random.default_rng(100 + seed)
    p = ModelParams(xi=0.04, Omega=float(rng.uniform(0.2, 1.5)), lam=float(rng.uniform(0.1, 2.0)))
    chk = intraband_selection_check(p)
    assert chk.same_band_max < 1e-10
    # the check is sensitive: neighbouring bands do couple
    assert chk.adjacent_band_max > 1e-4


def test_bound_state_spectrum_free_limit():
    p = ModelParams(xi=0.04, Omega=1.3, lam=0.0)
    space = TruncatedFockSpace.build(11, 1, parity=1)
    levels = bound_state_spectrum(p, space, n_levels=12)
    energies = np.array([lv.energy for lv in levels])
    # 11 photon states inside the band and the bare TLS level above it
    assert sum(lv.location == "in-band" for lv in levels) == 11
    assert levels[-1].location == "above" and energies[-1] == pytest.approx(1.3, abs=1e-12)
    free = np.linalg.eigvalsh(-0.04 * (np.eye(11, k=1) + np.eye(11, k=-1))) + 1.0
    np.testing.assert_allclose(energies[:11], free, atol=1e-12)
    assert linalg.norm(energies) > 0
