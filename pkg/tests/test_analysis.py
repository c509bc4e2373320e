import math

import numpy as np
import pytest
from scipy.linalg import expm
from scipy.optimize import brentq

from conftest import dense_xxz
from sdchain import analysis as an
from sdchain.analysis import (
    BracketNotFoundError,
    Engine,
    EngineGuardError,
    NoConcurrenceError,
    equivalence_check,
    find_tstar,
    fit_power_law,
    gs_concurrence_vs_n,
    locate_tstar,
    resolve_engine,
    thermal_concurrence_curve,
)
from sdchain.entanglement import concurrence_from_dm
from sdchain.model import ChainSpec


def two_site_concurrence(delta, temperature):
    """Dense 4x4 Gibbs state of one XXZ bond, fed through the Wootters definition."""
    h = dense_xxz([(0, 1, 1.0)], delta, 2)
    rho = expm(-h / temperature)
    rho /= np.trace(rho)
    # conftest orders states by integer index with site 0 as LSB; the
    # concurrence is invariant under swapping the two spins, so no reordering
    return concurrence_from_dm(rho).value


# --- engine selection --------------------------------------------------------

def test_resolve_engine():
    assert resolve_engine("auto", 0.0, 64) is Engine.FREE_FERMION
    assert resolve_engine("auto", 0.0, 12) is Engine.ED
    assert resolve_engine("auto", 1.0, 20) is Engine.ED
    with pytest.raises(EngineGuardError):
        resolve_engine("free-fermion", 1.0, 8)
    with pytest.raises(EngineGuardError):
        resolve_engine("ed", 1.0, 26)
    with pytest.raises(EngineGuardError):
        resolve_engine("ed", 1.0, 16, temperature=0.1)
    with pytest.raises(ValueError):
        Engine.parse("dmrg")


# --- ground-state sweeps -----------------------------------------------------

def test_uniform_chain_edges_unentangled_at_n16():
    row = gs_concurrence_vs_n(0.0, 1.0, [16]).rows[0]
    assert row.concurrence == 0.0


@pytest.mark.parametrize("delta", [0.0, 1.0])
def test_two_sites_form_a_singlet(delta):
    row = gs_concurrence_vs_n(2.0, delta, [2], engine="ed").rows[0]
    assert row.concurrence == pytest.approx(1.0, abs=1e-12)
    assert row.cz == pytest.approx(-0.25, abs=1e-12)


def test_xy_sweep_approaches_infinite_chain_value():
    res = gs_concurrence_vs_n(2.0, 0.0, [16, 32, 64, 128, 256], engine="free-fermion")
    c = res.column("concurrence")
    gap = np.abs(c - 0.3393)
    assert np.all(np.diff(gap) < 0)
    assert gap[-1] < 5e-3
    assert res.notes["engines"] == ["free-fermion"] * 5


def test_sweep_threads_do_not_change_results():
    a = gs_concurrence_vs_n(2.0, 1.0, [4, 6, 8, 10])
    b = gs_concurrence_vs_n(2.0, 1.0, [4, 6, 8, 10], threads=3)
    assert a.rows == b.rows


def test_sweep_rejects_duplicates_and_periodic_ff():
    with pytest.raises(ValueError):
        gs_concurrence_vs_n(2.0, 1.0, [4, 4])
    with pytest.raises(EngineGuardError):
        gs_concurrence_vs_n(2.0, 0.0, [32], boundary="uniform-periodic")


@pytest.mark.parametrize("alpha", [1.0, 1.5])
def test_weak_deformation_concurrence_non_increasing(alpha):
    c = gs_concurrence_vs_n(alpha, 0.0, [8, 16, 32, 64, 128, 256]).column("concurrence")
    assert np.all(np.diff(c) <= 1e-12)


@pytest.mark.slow
@pytest.mark.parametrize("n", [16, 20])
def test_concurrence_grows_with_alpha(n):
    c = [gs_concurrence_vs_n(a, 1.0, [n]).rows[0].concurrence for a in (2.0, 3.0, 4.0)]
    assert c[0] < c[1] < c[2]


# --- thermal curves ----------------------------------------------------------

def test_thermal_curve_high_temperature_and_ground_limit():
    spec = ChainSpec(10, 2.0, 1.0)
    res = thermal_concurrence_curve(spec, [0.0, 1e-6, 100.0])
    c = res.column("concurrence")
    assert c[2] == 0.0
    assert c[1] == pytest.approx(c[0], abs=1e-9)
    gs = gs_concurrence_vs_n(2.0, 1.0, [10]).rows[0].concurrence
    assert c[0] == pytest.approx(gs, abs=1e-10)


def test_thermal_curve_engines_agree_at_n12():
    spec = ChainSpec(12, 2.0, 0.0)
    grid = [0.0, 0.005, 0.02, 0.05, 0.1, 0.3]
    a = thermal_concurrence_curve(spec, grid, engine="ed").column("concurrence")
    b = thermal_concurrence_curve(spec, grid, engine="free-fermion").column("concurrence")
    np.testing.assert_allclose(a, b, atol=1e-8)


def test_thermal_curve_monotone_note():
    res = thermal_concurrence_curve(ChainSpec(8, 2.0, 1.0), np.linspace(0, 1, 11))
    assert res.notes["monotone"] is True
    assert res.notes["increases_at"] == []


@pytest.mark.parametrize("grid", [[0.1, 0.1], [0.2, 0.1], [-0.1, 0.2], []])
def test_thermal_curve_rejects_bad_grid(grid):
    with pytest.raises(ValueError):
        thermal_concurrence_curve(ChainSpec(6, 2.0, 1.0), grid)


# --- threshold temperature ---------------------------------------------------

def test_two_site_tstar_matches_closed_form():
    oracle = brentq(lambda t: two_site_concurrence(1.0, t) - 1e-9, 0.5, 1.5, xtol=1e-13)
    # p_singlet = 1/2 at exp(-1/T) = 1/3
    assert oracle == pytest.approx(1 / math.log(3), abs=1e-6)
    res = locate_tstar(ChainSpec(2, 2.0, 1.0))
    assert res.tstar == pytest.approx(1 / math.log(3), rel=1e-8)
    a, b = res.bracket
    assert a <= res.tstar <= b and b / a - 1 <= 1e-9
    assert abs(res.g_at_tstar) < 1e-8


def test_two_site_xy_tstar_matches_dense_oracle():
    # for the XY bond the edge state has sqrt radicand p(T), no closed form needed
    oracle = brentq(lambda t: two_site_concurrence(0.0, t) - 1e-10, 0.05, 5.0, xtol=1e-13)
    assert find_tstar(ChainSpec(2, 2.0, 0.0), engine="ed") == pytest.approx(oracle, rel=1e-6)


def test_tstar_decreases_with_n():
    assert find_tstar(ChainSpec(12, 2.0, 1.0), t_hint=0.25) < find_tstar(ChainSpec(8, 2.0, 1.0), t_hint=0.5)


def test_tstar_is_insensitive_to_hint():
    spec = ChainSpec(10, 2.0, 0.0)
    t1 = find_tstar(spec, t_hint=0.001)
    t2 = find_tstar(spec, t_hint=1.0)
    assert t1 == pytest.approx(t2, rel=1e-8)


def test_tstar_is_last_crossing():
    spec = ChainSpec(64, 2.0, 0.0)
    res = locate_tstar(spec, t_hint=math.sin(math.pi / 64) ** 2)
    assert res.engine == "free-fermion"
    # crossings are midpoints of the coarse scan brackets (ratio 1.3)
    ratio = res.tstar / max(res.crossings)
    assert 1.3**-0.5 <= ratio <= 1.3**0.5
    above = thermal_concurrence_curve(spec, np.geomspace(res.tstar * 1.001, 10, 40)).column("concurrence")
    assert np.all(above == 0.0)


def test_tstar_without_ground_concurrence():
    with pytest.raises(NoConcurrenceError):
        find_tstar(ChainSpec(64, 1.0, 0.0))
    with pytest.raises(ValueError):
        find_tstar(ChainSpec(8, 2.0, 1.0), t_hint=0.0)


def test_bracket_not_found(monkeypatch):
    # g stays positive all the way to the temperature cap
    monkeypatch.setattr(an, "correlator_argument", lambda cx, cz, m: 1.0)
    with pytest.raises(BracketNotFoundError):
        find_tstar(ChainSpec(8, 2.0, 0.0), engine="free-fermion")


# --- power-law fit -----------------------------------------------------------

def test_fit_recovers_exact_power_law():
    pts = [(n, 2.0 * n**-3.0) for n in (8, 16, 32, 64)]
    fit = fit_power_law(pts)
    assert fit.exponent_eta == pytest.approx(3.0, abs=1e-12)
    assert fit.amplitude_a == pytest.approx(2.0, rel=1e-10)
    assert fit.r_squared == pytest.approx(1.0)
    assert max(map(abs, fit.residuals)) < 1e-12


def test_fit_scale_covariance():
    rng = np.random.default_rng(7)
    ns = [8, 12, 16, 24, 32]
    ts = [0.7 * n**-2.2 * math.exp(rng.normal(scale=0.05)) for n in ns]
    base = fit_power_law(list(zip(ns, ts)))
    scaled_t = fit_power_law([(n, 5 * t) for n, t in zip(ns, ts)])
    scaled_n = fit_power_law([(3 * n, t) for n, t in zip(ns, ts)])
    assert scaled_t.exponent_eta == pytest.approx(base.exponent_eta, abs=1e-12)
    assert scaled_t.amplitude_a == pytest.approx(5 * base.amplitude_a, rel=1e-10)
    assert scaled_n.exponent_eta == pytest.approx(base.exponent_eta, abs=1e-12)
    assert scaled_n.amplitude_a == pytest.approx(base.amplitude_a * 3**base.exponent_eta, rel=1e-10)
    assert 0 < base.r_squared < 1


@pytest.mark.parametrize(
    "pts", [[(8, 0.1), (16, 0.05)], [(8, 0.1), (8, 0.2), (8, 0.3)], [(8, 0.1), (16, -0.05), (32, 0.01)]]
)
def test_fit_rejects_degenerate_input(pts):
    with pytest.raises(ValueError):
        fit_power_law(pts)


# --- equivalence -------------------------------------------------------------

def test_equivalence_two_sites():
    for delta in (0.0, 1.0):
        rep = equivalence_check(2, delta, engine="ed")
        assert rep.max_difference <= 1e-12
        assert rep.deformed_cz == pytest.approx(-0.25)


def test_equivalence_guards():
    with pytest.raises(ValueError):
        equivalence_check(7, 0.0)
    with pytest.raises(EngineGuardError):
        equivalence_check(22, 1.0)
    with pytest.raises(EngineGuardError):
        equivalence_check(8, 1.0, engine="free-fermion")


def test_equivalence_report_dict():
    d = equivalence_check(12, 0.0).to_dict()
    assert d["matching_sector"] == "antiperiodic"  # N/2 = 6 is even
    assert {c["sector"] for c in d["comparisons"]} == {"periodic", "antiperiodic"}
    assert d["max_difference"] < 1e-8
