import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from entrocert.linalg import LinalgError
from entrocert.protocol import correlation_table
from entrocert.states import InputEnsemble, bell_state, random_density_matrix, tetrahedral_ensemble, werner
from entrocert.witness import (
    IncompleteEnsembleError,
    Witness,
    bell_like_value_direct,
    bell_like_value_from_correlations,
    decompose_witness,
    werner_witness,
    witness_is_consistent,
)

ENS = tetrahedral_ensemble()


@pytest.fixture(scope="module")
def beta():
    return decompose_witness(werner_witness(), ENS, ENS)


def test_werner_witness_expectations():
    w = werner_witness()
    assert w.expectation(bell_state()) == pytest.approx(-0.5)
    for z in (0.0, 0.2, 0.5, 1.0):
        assert w.expectation(werner(z)) == pytest.approx((1 - 3 * z) / 4)
    zero = np.zeros((4, 4))
    zero[0, 0] = 1
    assert w.expectation(zero) == pytest.approx(0.0, abs=1e-15)


def test_witness_nonnegative_on_products():
    w = werner_witness()
    assert w.min_on_random_products(10_000, seed=7) >= -1e-9
    assert w.min_on_product_grid(np.pi / 24) >= -1e-9


def test_witness_must_be_hermitian():
    with pytest.raises(LinalgError):
        Witness(np.array([[0, 1], [0, 0]]))


def test_decompose_identity_is_uniform():
    dec = decompose_witness(np.eye(4), ENS, ENS)
    assert np.allclose(dec.beta, 0.25, atol=1e-12)
    assert dec.residual <= 1e-10


def test_decompose_werner_witness(beta):
    assert beta.residual <= 1e-10
    assert witness_is_consistent(werner_witness(), beta, ENS, ENS)


def test_decompose_incomplete_ensemble():
    v = ENS.bloch_vectors.copy()
    v[2] = v[0]
    with pytest.raises(IncompleteEnsembleError, match="incomplete ensemble"):
        decompose_witness(werner_witness(), InputEnsemble(v), ENS)


def test_decompose_rejects_non_hermitian():
    with pytest.raises(LinalgError):
        decompose_witness(np.triu(np.ones((4, 4))))


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_decompose_any_hermitian(seed):
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    assert decompose_witness(g + g.conj().T, ENS, ENS).residual <= 1e-9


def test_decompose_other_complete_ensemble():
    # a rotated tetrahedron is still a complete basis
    theta = 0.3
    rot = np.array([[np.cos(theta), -np.sin(theta), 0], [np.sin(theta), np.cos(theta), 0], [0, 0, 1]])
    other = InputEnsemble(ENS.bloch_vectors @ rot.T)
    assert decompose_witness(werner_witness(), other, ENS).residual <= 1e-10


def test_direct_values():
    w = werner_witness()
    assert bell_like_value_direct(w, werner(1)) == pytest.approx(-1 / 8, abs=1e-15)
    assert bell_like_value_direct(w, werner(1 / 3)) == pytest.approx(0, abs=1e-15)
    assert bell_like_value_direct(w, werner(0.34)) == pytest.approx(-1 / 800, abs=1e-15)
    with pytest.raises(LinalgError):
        bell_like_value_direct(w, np.eye(2) / 2)


def test_correlation_route_values(beta):
    assert bell_like_value_from_correlations(beta, correlation_table(werner(1))) == pytest.approx(-1 / 8, abs=1e-10)
    assert bell_like_value_from_correlations(beta, correlation_table(np.eye(4) / 4)) >= -1e-10


def test_dual_route_on_werner_grid(beta):
    w = werner_witness()
    for z in np.linspace(-1 / 3, 1, 21):
        rho = werner(z)
        direct = bell_like_value_direct(w, rho)
        assert bell_like_value_from_correlations(beta, correlation_table(rho)) == pytest.approx(direct, abs=1e-10)
        if z > 1 / 3 + 1e-10:
            assert direct < 0
        elif z < 1 / 3 - 1e-10:
            assert direct > 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_dual_route_on_random_states(seed):
    beta = decompose_witness(werner_witness(), ENS, ENS)
    rho = random_density_matrix(4, np.random.default_rng(seed))
    assert bell_like_value_from_correlations(beta, correlation_table(rho)) == pytest.approx(
        bell_like_value_direct(werner_witness(), rho), abs=1e-9
    )
