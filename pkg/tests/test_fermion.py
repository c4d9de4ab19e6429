import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mqcdecay import ed, fermion
from mqcdecay.core import ChainSpec, InitialState, project_coherence
from mqcdecay.fermion import FermionModel

import oracles

pos_btau = st.floats(0.0, 3.0, allow_nan=False)


def ed_intensities(n, b, tau):
    chain = ChainSpec(n, b)
    rho = ed.prepared_state(InitialState.THERMAL, chain, tau).matrix
    norm = np.linalg.norm(rho) ** 2
    return tuple(np.linalg.norm(project_coherence(rho, m).matrix) ** 2 / norm for m in (0, 2))


# --- model and f matrix ----------------------------------------------------


def test_model_validation():
    with pytest.raises(ValueError):
        FermionModel(0, 1.0)
    with pytest.raises(ValueError):
        FermionModel(4, 0.0)
    k = FermionModel(5, 1.0).kappa_grid
    assert np.all((k > 0) & (k < np.pi))
    np.testing.assert_allclose(k, np.pi * np.arange(1, 6) / 6)


@pytest.mark.parametrize("n", [1, 4, 17])
def test_f_at_zero_is_identity_in_modulus(n):
    f = fermion.f_matrix(FermionModel(n, 1.0), 0.0).entries
    np.testing.assert_allclose(np.abs(f), np.eye(n), atol=1e-12)


@settings(max_examples=30, deadline=None)
@given(n=st.integers(1, 60), bt=pos_btau)
def test_f_rows_normalized(n, bt):
    fermion.f_matrix(FermionModel(n, 1.0), bt).check()


@pytest.mark.parametrize("n", [2, 7, 30])
def test_f_sine_transform_matches_expm(n):
    m = FermionModel(n, 2.3)
    for t in (0.0, 0.17, 1.4):
        np.testing.assert_allclose(
            fermion.f_matrix(m, t).entries, fermion.f_matrix_direct(m, t).entries, atol=1e-12
        )


def test_f_negative_time_rejected():
    with pytest.raises(ValueError):
        fermion.f_matrix(FermionModel(3, 1.0), -1.0)


def test_correlation_kernel_orthogonal():
    F = fermion.correlation_kernel(FermionModel(9, 1.0), 0.37)
    np.testing.assert_allclose(F @ F.T, np.eye(9), atol=1e-12)


# --- intensities -----------------------------------------------------------


def test_intensities_at_zero():
    m = FermionModel(10, 1.0)
    assert fermion.i0(m, 0.0) == 1.0
    assert fermion.i2(m, 0.0) == 0.0
    assert fermion.asymptote_c(m, 0.0) == pytest.approx(1.0, abs=1e-14)


@settings(max_examples=40, deadline=None)
@given(n=st.integers(1, 200), bt=pos_btau)
def test_intensity_sum_rule(n, bt):
    m = FermionModel(n, 1.0)
    assert fermion.i0(m, bt) + 2 * fermion.i2(m, bt) == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("n", [4, 6, 8])
@pytest.mark.parametrize("btau", [0.05, 0.3, 1.1, 2.6])
def test_intensities_match_ed(n, btau):
    b = 1.7
    m = FermionModel(n, b)
    e0, e2 = ed_intensities(n, b, btau / b)
    assert fermion.i0(m, btau / b) == pytest.approx(e0, rel=1e-8, abs=1e-12)
    assert fermion.i2(m, btau / b) == pytest.approx(e2, rel=1e-8, abs=1e-12)


def test_vectorized_tau():
    m = FermionModel(12, 1.0)
    taus = np.linspace(0, 2, 7)
    np.testing.assert_allclose(fermion.i2(m, taus), [fermion.i2(m, t) for t in taus])


def test_infinite_limits_bessel_vs_quad():
    taus = np.linspace(0, 4e-4, 9)
    b = 8.17e3
    for fn in (fermion.i0_infinite, fermion.i2_infinite, fermion.asymptote_c_infinite):
        np.testing.assert_allclose(fn(b, taus), fn(b, taus, method="quad"), atol=1e-10)


def test_large_n_approaches_infinite_limit():
    b, tau = 1.0, 0.4
    m = FermionModel(20000, b)
    assert fermion.i2(m, tau) == pytest.approx(fermion.i2_infinite(b, tau), abs=1e-4)


# --- asymptote -------------------------------------------------------------


def test_asymptote_forms_agree():
    rng = np.random.default_rng(3)
    m = FermionModel(50, 1.0)
    taus = rng.uniform(0, 3, 25)
    np.testing.assert_allclose(
        fermion.asymptote_c(m, taus, verify=False), fermion.asymptote_c_population_form(m, taus), atol=1e-12
    )


def test_asymptote_sectors():
    m = FermionModel(30, 1.0)
    zq, dq = fermion.asymptote_sectors(m, 0.4)
    assert dq == 0.0
    assert zq == pytest.approx(fermion.asymptote_c(m, 0.4) / fermion.i0(m, 0.4))


# --- moments ---------------------------------------------------------------


@pytest.mark.parametrize("btau", [0.2, 0.5, 1.0])
def test_sector_moments_match_ed(btau):
    n, b = 8, 1.0
    chain = ChainSpec(n, b)
    rho = ed.prepared_state(InitialState.THERMAL, chain, btau / b)
    e = ed.sector_moments_ed(rho, chain)
    a = fermion.moments(FermionModel(n, b), btau / b)
    for key in ("zz_zq", "zz_dq", "xx_zq", "xx_dq", "zz", "xx"):
        assert getattr(a, f"m_{key}") == pytest.approx(e[key], rel=1e-6), key
    assert a.total == pytest.approx(e["dip"], rel=1e-6)
    assert a.m_zq == pytest.approx(e["dip_zq"], rel=1e-6)
    assert a.m_dq == pytest.approx(e["dip_dq"], rel=1e-6)


@pytest.mark.parametrize("n", [3, 5, 7])
def test_moments_match_ed_small_odd_chains(n):
    b, tau = 0.8, 0.45
    chain = ChainSpec(n, b)
    e = ed.sector_moments_ed(ed.prepared_state(InitialState.THERMAL, chain, tau), chain)
    a = fermion.moments(FermionModel(n, b), tau)
    assert a.m_zq == pytest.approx(e["dip_zq"], rel=1e-8)
    assert a.m_dq == pytest.approx(e["dip_dq"], rel=1e-8)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(3, 80), bt=pos_btau)
def test_closed_sums_match_sector_route(n, bt):
    m = FermionModel(n, 1.0)
    mb = fermion.moments(m, bt)
    zz, xx = fermion.total_moments_from_f(m, bt)
    assert mb.m_zz == pytest.approx(zz, rel=1e-9, abs=1e-10)
    assert mb.m_xx == pytest.approx(xx, rel=1e-9, abs=1e-10)
    # total as intensity-weighted sector sum
    weighted = mb.i0 * (mb.m_zq or 0.0) + 2 * mb.i2 * (mb.m_dq or 0.0)
    assert weighted == pytest.approx(mb.total, rel=1e-9, abs=1e-10)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(3, 60), bt=st.floats(1e-3, 3.0))
def test_sector_moments_nonnegative(n, bt):
    mb = fermion.moments(FermionModel(n, 1.0), bt)
    for v in (mb.m_zz_zq, mb.m_zz_dq, mb.m_xx_zq, mb.m_xx_dq):
        assert v is None or v >= 0


def test_moments_scale_as_b_squared():
    n, btau = 40, 0.63
    ref = fermion.moments(FermionModel(n, 1.0), btau)
    for b in (3.0, 8.17e3):
        got = fermion.moments(FermionModel(n, b), btau / b)
        for key in ("m_zz", "m_xx", "m_zz_zq", "m_zz_dq", "m_xx_zq", "m_xx_dq", "total"):
            assert getattr(got, key) == pytest.approx(b**2 * getattr(ref, key), rel=1e-12)


def test_zero_quantum_moment_vanishes_at_short_tau():
    mb = fermion.moments(FermionModel(100, 1.0), 1e-4)
    assert mb.m_zq < 1e-6


def test_double_quantum_limit():
    n = 100
    mb = fermion.moments(FermionModel(n, 1.0), 1e-3)
    assert mb.m_dq == pytest.approx(48 * (n - 2) / (n - 1), rel=1e-4)


def test_absent_sector_at_zero_tau():
    mb = fermion.moments(FermionModel(10, 1.0), 0.0)
    assert mb.m_zz_dq is None and mb.m_xx_dq is None and mb.m_dq is None
    assert mb.m_zq == pytest.approx(0.0, abs=1e-12)


def test_moments_input_validation():
    with pytest.raises(ValueError):
        fermion.moments(FermionModel(2, 1.0), 0.1)
    with pytest.raises(ValueError):
        fermion.moments(FermionModel(5, 1.0), -0.1)


def test_dq_moment_dominates_on_grid():
    m = FermionModel(100, 1.0)
    for bt in np.linspace(0.01, 3.0, 120):
        mb = fermion.moments(m, bt)
        assert mb.m_dq >= mb.m_zq


def test_zero_quantum_moment_anticorrelates_with_intensity():
    m = FermionModel(100, 1.0)
    taus = np.linspace(0.05, 0.05 + 2 * np.pi / 16, 60)
    i0 = fermion.i0(m, taus)
    m0 = [fermion.moments(m, t).m_zq for t in taus]
    assert np.corrcoef(i0, m0)[0, 1] < 0


@pytest.mark.parametrize("btau", [0.3, 0.9, 2.0])
def test_flip_flop_zero_quantum_part_shrinks_with_n(btau):
    small = fermion.moments(FermionModel(50, 1.0), btau).m_xx_zq
    large = fermion.moments(FermionModel(200, 1.0), btau).m_xx_zq
    assert large < small


# --- transverse spin expansion ---------------------------------------------


def test_rho_x_identity_at_zero():
    c = fermion.rho_x_coefficients(FermionModel(7, 1.0), 0.0)
    np.testing.assert_allclose(np.abs(c), np.eye(7), atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 50), bt=pos_btau)
def test_rho_x_rows_unit_norm(n, bt):
    c = fermion.rho_x_coefficients(FermionModel(n, 1.0), bt)
    np.testing.assert_allclose(np.sum(c**2, axis=1), 1.0, atol=1e-12)


def test_rho_x_matches_ed_string_weights():
    n, b, tau = 8, 1.0, 0.35
    chain = ChainSpec(n, b)
    x1 = oracles.pauli_string({1: "x"}, n)
    evolved = ed.evolve(x1, ed.build_dq(chain), tau).matrix
    c = fermion.rho_x_coefficients(FermionModel(n, b), tau)[0]
    for p in range(1, n + 1):
        ops = {k: "z" for k in range(1, p)}
        ops[p] = "x" if (p - 1) % 2 == 0 else "y"
        overlap = np.vdot(oracles.pauli_string(ops, n), evolved).real / 2**n
        assert overlap == pytest.approx(c[p - 1], abs=1e-12)


def test_correlation_length_linear_at_short_tau():
    m = FermionModel(60, 1.0)
    taus = np.array([0.002, 0.004, 0.008])
    ell = np.array([fermion.correlation_length(fermion.rho_x_coefficients(m, t))[30] for t in taus])
    np.testing.assert_allclose(ell / taus, ell[0] / taus[0], rtol=1e-3)


def test_correlation_length_grows():
    m = FermionModel(80, 1.0)
    ell = [fermion.correlation_length(fermion.rho_x_coefficients(m, t))[40] for t in (0.1, 0.3, 0.6)]
    assert ell[0] < ell[1] < ell[2]
