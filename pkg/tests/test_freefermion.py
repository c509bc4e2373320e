import numpy as np
import pytest

from conftest import SM, SP, SZ, dense_xxz, site_op
from sdchain import ed, freefermion as ff
from sdchain.analysis import equivalence_check
from sdchain.entanglement import concurrence_from_correlators
from sdchain.model import ChainSpec, bond_profile


def xy(n, alpha=2.0):
    return ChainSpec(n, alpha, 0.0)


def test_hopping_examples():
    np.testing.assert_allclose(ff.hopping_matrix(xy(2)).off_diagonal, [0.5])
    np.testing.assert_allclose(ff.hopping_matrix(xy(4)).off_diagonal, [0.25, 0.5, 0.25], atol=1e-15)
    with pytest.raises(ValueError):
        ff.hopping_matrix(ChainSpec(4, 2.0, 1.0))


@pytest.mark.parametrize("alpha", [0.5, 2.0, 3.0])
def test_odd_chain_zero_mode(alpha):
    eps = ff.diagonalize(ff.hopping_matrix(xy(3, alpha))).energies
    assert eps[1] == pytest.approx(0.0, abs=1e-14)
    assert eps[0] == pytest.approx(-eps[2], abs=1e-14)


@pytest.mark.parametrize("n", [2, 5, 16, 101])
def test_modes_orthonormal_and_reconstruct(n):
    h = ff.hopping_matrix(xy(n, 2.5))
    m = ff.diagonalize(h)
    np.testing.assert_allclose(m.vectors.T @ m.vectors, np.eye(n), atol=1e-12)
    np.testing.assert_allclose((m.vectors * m.energies) @ m.vectors.T, h.dense(), atol=1e-10)
    np.testing.assert_allclose(np.sort(m.energies), -np.sort(m.energies)[::-1], atol=1e-12)


def test_green_function_limits():
    m = ff.diagonalize(ff.hopping_matrix(xy(6)))
    np.testing.assert_allclose(ff.green_function(m, 1e9), 0.5 * np.eye(6), atol=1e-9)
    g2 = ff.green_function(ff.diagonalize(ff.hopping_matrix(xy(2))), 0.0)
    # positive hopping fills the antibonding-sign orbital (1, -1)/sqrt(2)
    np.testing.assert_allclose(np.abs(g2), 0.5 * np.ones((2, 2)), atol=1e-15)
    assert g2[0, 1] == pytest.approx(-0.5)


@pytest.mark.parametrize("temperature", [0.0, 0.01, 0.3, 5.0])
def test_green_function_invariants(temperature):
    g = ff.green_function(ff.diagonalize(ff.hopping_matrix(xy(20, 3.0))), temperature)
    np.testing.assert_allclose(g, g.T, atol=1e-12)
    w = np.linalg.eigvalsh(g)
    assert w.min() > -1e-12 and w.max() < 1 + 1e-12
    assert np.trace(g) == pytest.approx(10.0, abs=1e-10)
    if temperature == 0:
        np.testing.assert_allclose(g @ g, g, atol=1e-10)


def test_zero_mode_half_occupied():
    m = ff.diagonalize(ff.hopping_matrix(xy(5)))
    occ = ff.occupations(m, 0.0)
    np.testing.assert_array_equal(np.sort(occ), [0, 0, 0.5, 1, 1])


def _ed_green(state, n):
    """<c_i^dag c_j> = <S+_i prod_{m strictly between} (1 - 2 n_m) S-_j>, on the full space."""
    full = np.zeros(2**n)
    full[state.sector.states] = state.amplitudes
    ident = np.eye(2**n)
    parity = [ident - 2 * (site_op(SZ, m, n) + 0.5 * ident) for m in range(n)]
    g = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            if i == j:
                op = site_op(SZ, i, n) + 0.5 * ident
            else:
                op = site_op(SP, i, n)
                for m in range(min(i, j) + 1, max(i, j)):
                    op = op @ parity[m]
                op = op @ site_op(SM, j, n)
            g[i, j] = full @ op @ full
    return g


def test_green_function_matches_ed_jordan_wigner():
    n = 8
    spec = xy(n)
    _, state = ed.ground_state(spec)
    g_ed = _ed_green(state, n)
    g_ff = ff.green_function(ff.diagonalize(ff.hopping_matrix(spec)), 0.0)
    np.testing.assert_allclose(g_ed, g_ff, atol=1e-9)


def test_green_function_matches_ed_n12():
    n = 12
    spec = xy(n)
    _, state = ed.ground_state(spec)
    g_ff = ff.green_function(ff.diagonalize(ff.hopping_matrix(spec)), 0.0)
    # nearest-neighbour and density entries need no string
    for i in range(n - 1):
        nn = ed.pair_observables(state, i, i + 1)
        assert g_ff[i, i + 1] == pytest.approx(2 * nn.cx, abs=1e-9)
    for i in range(n):
        zi = ed.pair_observables(state, i, (i + 1) % n).magnetization_m
        assert g_ff[i, i] - 0.5 == pytest.approx(zi, abs=1e-9)


def test_edge_cz_examples():
    assert ff.edge_cz(0.5 * np.eye(7)) == 0.0
    assert ff.edge_cz(0.5 * np.ones((2, 2))) == pytest.approx(-0.25)


def test_edge_cx_examples():
    assert abs(ff.edge_cx_determinant(0.5 * np.ones((2, 2)))) == pytest.approx(0.25)
    assert abs(ff.edge_cx_pfaffian(0.5 * np.ones((2, 2)))) == pytest.approx(0.25)
    for n in (3, 6, 11):
        assert ff.edge_cx_determinant(0.5 * np.eye(n)) == 0.0
        assert ff.edge_cx_pfaffian(0.5 * np.eye(n)) == pytest.approx(0.0, abs=1e-15)


@pytest.mark.parametrize("temperature", [0.0, 0.1])
@pytest.mark.parametrize("n", [8, 10])
def test_edge_correlators_match_ed(n, temperature):
    spec = xy(n)
    if temperature == 0:
        state = ed.ground_state(spec)[1]
    else:
        state = ed.full_spectrum(spec)
    obs = ed.edge_observables(spec, state, temperature)
    cx, cz = ff.edge_correlators(spec, temperature)
    assert cz == pytest.approx(obs.cz, abs=1e-10)
    assert cx == pytest.approx(obs.cx, abs=1e-9)


@pytest.mark.parametrize("n", range(2, 15))
@pytest.mark.parametrize("alpha", [1.0, 2.0, 3.0])
@pytest.mark.parametrize("temperature", [0.0, 0.1, 1.0])
def test_pfaffian_and_determinant_paths_agree(n, alpha, temperature):
    g = ff.green_function(ff.diagonalize(ff.hopping_matrix(xy(n, alpha))), temperature)
    assert ff.edge_cx_pfaffian(g) == pytest.approx(ff.edge_cx_determinant(g), abs=1e-10)


def test_majorana_matrix_is_skew():
    g = ff.green_function(ff.diagonalize(ff.hopping_matrix(xy(9))), 0.2)
    mat = ff.majorana_contractions(g)
    assert mat.shape == (16, 16)
    np.testing.assert_array_equal(mat, -mat.T)


def test_ground_energy_ff():
    assert ff.ground_energy_ff(ff.diagonalize(ff.hopping_matrix(xy(2)))) == pytest.approx(-0.5)
    zero = ff.diagonalize(ff.HoppingMatrix(np.zeros(5)))
    assert ff.ground_energy_ff(zero) == 0.0
    for n in (4, 10):
        spec = xy(n)
        oracle = np.linalg.eigvalsh(dense_xxz(bond_profile(spec).pairs(), 0.0, n))[0]
        assert ff.ground_energy_ff(ff.diagonalize(ff.hopping_matrix(spec))) == pytest.approx(oracle, abs=1e-10)


def test_ring_sectors_reproduce_spin_ring():
    # N = 6 has 3 up spins: periodic closure; N = 8 has 4: antiperiodic
    for n, antiperiodic in ((6, False), (8, True)):
        ring = ChainSpec(n, 0.0, 0.0, boundary="uniform-periodic")
        _, state = ed.ground_state(ring)
        nn = ed.pair_observables(state, 0, 1)
        cx, cz = ff.ring_nn_correlators(n, antiperiodic)
        assert (cx, cz) == pytest.approx((nn.cx, nn.cz), abs=1e-10)


@pytest.mark.parametrize("n", [4, 12, 30, 64, 128])
def test_sine_square_edges_equal_ring_bond(n):
    rep = equivalence_check(n, 0.0)
    assert rep.max_difference <= 1e-8
    assert rep.matching_sector == ("antiperiodic" if (n // 2) % 2 == 0 else "periodic")


def test_xy_limit_at_n256():
    cx, cz = ff.edge_correlators(xy(256))
    c = concurrence_from_correlators(ed.EdgeObservables(0.0, cx, cz, 0.0)).value
    assert c == pytest.approx(0.3393, abs=5e-3)
