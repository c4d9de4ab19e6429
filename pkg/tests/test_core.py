import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mqcdecay import core
from mqcdecay.core import (
    ChainSpec,
    DenseOperator,
    DipolarPowerLaw,
    ExplicitMatrix,
    InitialState,
    build_pauli,
    coherence_order_of_element,
    coherence_spectrum,
    make_initial_state,
    project_coherence,
)

import oracles


def random_hermitian(n, seed):
    rng = np.random.default_rng(seed)
    d = 2**n
    a = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return a + a.conj().T


# --- chain -----------------------------------------------------------------


def test_chain_validation():
    with pytest.raises(ValueError):
        ChainSpec(0, 1.0)
    with pytest.raises(ValueError):
        ChainSpec(3, -1.0)
    with pytest.raises(ValueError):
        ChainSpec(2, 1.0, ExplicitMatrix.from_array([[0, 1], [2, 0]]))
    with pytest.raises(ValueError):
        ChainSpec(2, 1.0, ExplicitMatrix.from_array([[1, 1], [1, 0]]))


def test_power_law_couplings():
    c = ChainSpec(4, 2.0, DipolarPowerLaw()).couplings()
    assert c[0, 1] == 2.0
    assert c[0, 2] == pytest.approx(2.0 / 8)
    assert c[0, 3] == pytest.approx(2.0 / 27)
    np.testing.assert_array_equal(c, c.T)


def test_pairs_nearest_neighbour():
    assert ChainSpec(4, 1.5).pairs() == [(0, 1, 1.5), (1, 2, 1.5), (2, 3, 1.5)]


# --- operators -------------------------------------------------------------


def test_pauli_single_spin():
    np.testing.assert_array_equal(build_pauli(1, "z", 1).matrix, np.diag([1, -1]))


def test_pauli_x_on_two_spins():
    m = build_pauli(1, "x", 2).matrix
    expected = np.zeros((4, 4))
    for r, c in ((1, 3), (3, 1), (2, 4), (4, 2)):
        expected[r - 1, c - 1] = 1
    np.testing.assert_array_equal(m, expected)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_pauli_orthogonality(n):
    ops = [(i, a) for i in range(1, n + 1) for a in "xyz"]
    for i, a in ops:
        for j, b in ops:
            tr = np.trace(build_pauli(i, a, n).matrix @ build_pauli(j, b, n).matrix)
            assert tr == pytest.approx(2**n * (i == j and a == b))


def test_pauli_matches_kron_oracle():
    for site in (1, 2, 3):
        for axis in "xyz":
            np.testing.assert_allclose(build_pauli(site, axis, 3).matrix, oracles.pauli_string({site: axis}, 3))


def test_pauli_site_range():
    with pytest.raises(ValueError):
        build_pauli(0, "x", 2)
    with pytest.raises(ValueError):
        build_pauli(3, "x", 2)


def test_dense_operator_flags():
    with pytest.raises(ValueError):
        DenseOperator(np.array([[0, 1], [0, 0]]), hermitian=True)
    with pytest.raises(ValueError):
        DenseOperator(2 * np.eye(2), unitary=True)
    with pytest.raises(ValueError):
        DenseOperator(np.eye(3))
    op = DenseOperator(np.eye(4), hermitian=True, unitary=True)
    assert op.n_spins == 2 and op.dim == 4


def test_dimension_cap():
    with pytest.raises(core.DimensionCapError):
        core.check_cap(core.MAX_SPINS + 1)


def test_rotation_is_half_angle():
    r = core.rotation("x", np.pi, 1).matrix
    np.testing.assert_allclose(r, -1j * oracles.SX, atol=1e-15)


# --- initial states --------------------------------------------------------


def test_thermal_two_spins():
    rho = make_initial_state(InitialState.THERMAL, ChainSpec(2, 1.0)).matrix
    np.testing.assert_array_equal(rho, np.diag([2, 0, 0, -2]))


def test_end_polarized_three_spins():
    rho = make_initial_state(InitialState.END_POLARIZED, ChainSpec(3, 1.0)).matrix
    np.testing.assert_allclose(rho, oracles.pauli_string({1: "z"}, 3) + oracles.pauli_string({3: "z"}, 3))
    assert np.trace(rho) == 0


@pytest.mark.parametrize("kind", list(InitialState))
@pytest.mark.parametrize("n", [1, 3, 5])
def test_states_traceless_hermitian(kind, n):
    rho = make_initial_state(kind, ChainSpec(n, 1.0))
    assert rho.hermitian
    assert abs(np.trace(rho.matrix)) < 1e-12


def test_xx_base_operator_is_sigma_x():
    rho = make_initial_state(InitialState.XX, ChainSpec(3, 1.0)).matrix
    np.testing.assert_allclose(rho, oracles.sigma("x", 3))


# --- coherence orders ------------------------------------------------------


def test_order_examples():
    # |up up> = 0, |down down> = 3, |up down> = 1, |down up> = 2
    assert coherence_order_of_element(0, 3, 2) == 2
    assert coherence_order_of_element(1, 1, 2) == 0
    assert coherence_order_of_element(1, 2, 2) == 0
    with pytest.raises(IndexError):
        coherence_order_of_element(4, 0, 2)


def test_order_phase_convention():
    n = 3
    sz = np.diag(oracles.sigma("z", n)).real
    phi = 0.37
    u = np.exp(-0.5j * phi * sz)
    for r in range(8):
        for c in range(8):
            m = coherence_order_of_element(r, c, n)
            assert u[r] * u[c].conj() == pytest.approx(np.exp(-1j * m * phi))


def test_double_quantum_raising_is_plus_two():
    sp = 0.5 * (oracles.SX + 1j * oracles.SY)
    op = np.kron(sp, sp)
    nz = np.argwhere(np.abs(op) > 0)
    assert all(coherence_order_of_element(r, c, 2) == 2 for r, c in nz)


def test_projection_examples():
    n = 3
    sz = make_initial_state(InitialState.THERMAL, ChainSpec(n, 1.0))
    np.testing.assert_array_equal(project_coherence(sz, 0).matrix, sz.matrix)
    x1 = build_pauli(1, "x", n)
    total = project_coherence(x1, 1).matrix + project_coherence(x1, -1).matrix
    np.testing.assert_array_equal(total, x1.matrix)
    assert not np.any(project_coherence(x1, 0).matrix)


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 4), seed=st.integers(0, 2**31))
def test_sector_decomposition_complete_and_orthogonal(n, seed):
    rho = random_hermitian(n, seed)
    parts = {m: project_coherence(rho, m).matrix for m in range(-n, n + 1)}
    np.testing.assert_allclose(sum(parts.values()), rho, atol=1e-12)
    for m in parts:
        for mp in parts:
            if m != mp:
                assert abs(np.vdot(parts[mp], parts[m])) < 1e-9


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 4), seed=st.integers(0, 2**31), phi=st.floats(-10, 10))
def test_collective_rotation_covariance(n, seed, phi):
    rho = random_hermitian(n, seed)
    u = core.collective_rotation(phi, n).matrix
    rot = u @ rho @ u.conj().T
    for m in range(-n, n + 1):
        np.testing.assert_allclose(
            project_coherence(rot, m).matrix,
            np.exp(-1j * m * phi) * project_coherence(rho, m).matrix,
            atol=1e-12 * np.abs(rho).max(),
        )


@settings(max_examples=25, deadline=None)
@given(n=st.integers(1, 4), seed=st.integers(0, 2**31))
def test_spectrum_invariants(n, seed):
    spec = coherence_spectrum(random_hermitian(n, seed))
    spec.check()
    assert spec.total == pytest.approx(spec.normalization)
    oracle = oracles.phase_spectrum(random_hermitian(n, seed), n, range(-n, n + 1))
    for m, v in oracle.items():
        assert spec[m] == pytest.approx(v, rel=1e-10, abs=1e-9)


def test_state_sector_content():
    n = 4
    ch = ChainSpec(n, 1.0)
    sz = coherence_spectrum(make_initial_state(InitialState.THERMAL, ch))
    assert sz[0] == pytest.approx(sz.total)
    sx = coherence_spectrum(make_initial_state(InitialState.TRANSVERSE_X, ch))
    assert sx[1] == pytest.approx(sx.total / 2)
    assert sx[-1] == pytest.approx(sx.total / 2)


def test_spectrum_check_rejects_asymmetry():
    bad = core.CoherenceSpectrum({0: 1.0, 2: 0.5, -2: 0.1}, 1.6)
    with pytest.raises(AssertionError):
        bad.check()
