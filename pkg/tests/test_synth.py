import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from compiled_xor.compiled import MockQhe, pseudo_expectation
from compiled_xor.games import make_xor_game
from compiled_xor.library import random_xor_game
from compiled_xor.qsim import DimensionError, X, Z, max_anticommutator, maximally_entangled
from compiled_xor.sdp import DualBiases, VectorStrategy, solve
from compiled_xor.synth import (QuantumStrategy, check_optimal_state_relation, clifford_generators,
                                moment_row_norms, product_strategy, reduce_rank,
                                strategy_from_vectors, vectors_from_second_moments)

from conftest import CHSH_BIAS, SQRT2


@pytest.mark.parametrize("d", range(1, 9))
def test_clifford_generators(d):
    gens = clifford_generators(d)
    dim = 2 ** int(np.ceil(d / 2))
    assert len(gens) == d
    for g in gens:
        assert g.shape == (dim, dim)
        assert np.allclose(g, g.conj().T, atol=1e-12)
        assert np.max(np.abs(g @ g - np.eye(dim))) <= 1e-10
    assert max_anticommutator(gens) <= 1e-10


def test_clifford_pair_is_pauli():
    g = clifford_generators(2)
    assert {tuple(np.asarray(m).ravel()) for m in g} == {tuple(Z.ravel()), tuple(X.ravel())}


@pytest.mark.parametrize("d", [0, 9])
def test_clifford_range(d):
    with pytest.raises(ValueError):
        clifford_generators(d)


def test_chsh_synthesized_bias(chsh_game, chsh_quantum):
    assert chsh_quantum.bias(chsh_game) == pytest.approx(CHSH_BIAS, abs=1e-9)
    assert chsh_quantum.dims == (2, 2)


def test_aligned_pair():
    qs = strategy_from_vectors(VectorStrategy([[1.0]], [[1.0]]))
    np.testing.assert_allclose(qs.alice_observables()[0], Z)
    assert qs.correlations()[0, 0] == pytest.approx(1.0)


@pytest.mark.parametrize("seed", range(20))
def test_correlation_fidelity(seed):
    rng = np.random.default_rng(seed)
    u = rng.standard_normal((3, 3))
    v = rng.standard_normal((2, 3))
    vs = VectorStrategy(u / np.linalg.norm(u, axis=1, keepdims=True),
                        v / np.linalg.norm(v, axis=1, keepdims=True))
    qs = strategy_from_vectors(vs)
    assert np.max(np.abs(qs.correlations() - vs.correlations())) <= 1e-9


def test_reduce_rank_keeps_gram():
    rng = np.random.default_rng(0)
    base = rng.standard_normal((4, 2))
    base /= np.linalg.norm(base, axis=1, keepdims=True)
    vs = VectorStrategy(base[:2], base[2:]).padded(5)
    red = reduce_rank(vs)
    assert red.dim == 2
    np.testing.assert_allclose(red.correlations(), vs.correlations(), atol=1e-12)


@pytest.mark.parametrize("seed", range(20))
def test_bias_chain(seed):
    rng = np.random.default_rng(100 + seed)
    game = random_xor_game(int(rng.integers(1, 4)), int(rng.integers(1, 4)), seed)
    sol = solve(game)
    qs = strategy_from_vectors(sol.primal)
    assert sol.primal.bias(game) == pytest.approx(sol.bias, abs=1e-6)
    assert qs.bias(game) == pytest.approx(sol.bias, abs=1e-6)


def test_second_moments_identity_chsh(chsh_game):
    np.testing.assert_allclose(moment_row_norms(chsh_game, np.eye(2)), SQRT2 / 4, atol=1e-15)
    vs = vectors_from_second_moments(chsh_game, np.eye(2))
    row = (chsh_game.cost * vs.correlations()).sum(axis=1)
    np.testing.assert_allclose(row, SQRT2 / 4, atol=1e-8)


def test_second_moments_all_ones():
    game = make_xor_game([[0]], [[1.0]])
    vs = vectors_from_second_moments(game, np.ones((1, 1)))
    np.testing.assert_allclose(vs.u, vs.v, atol=1e-12)


def test_second_moments_from_compiled_chsh(chsh_game, chsh_compiled):
    pe = pseudo_expectation(chsh_game, chsh_compiled, MockQhe())
    V = (pe.bb + pe.bb.T) / 2
    vs = vectors_from_second_moments(chsh_game, V)
    assert vs.bias(chsh_game) == pytest.approx(CHSH_BIAS, abs=1e-6)


def random_moment_matrix(n, rng):
    W = rng.standard_normal((n, n))
    W /= np.linalg.norm(W, axis=1, keepdims=True)
    return W @ W.T


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(1, 4), st.integers(0, 2**32 - 1))
def test_vector_identity_property(na, nb, seed):
    rng = np.random.default_rng(seed)
    game = random_xor_game(na, nb, seed % 1000)
    V = random_moment_matrix(nb, rng)
    vs = vectors_from_second_moments(game, V)
    row = (game.cost * vs.correlations()).sum(axis=1)
    np.testing.assert_allclose(row, moment_row_norms(game, V), atol=1e-8)


@pytest.mark.parametrize("V", [np.array([[1.0, 2.0], [2.0, 1.0]]), np.array([[2.0, 0.0], [0.0, 1.0]]),
                               np.array([[1.0, 0.5], [0.0, 1.0]])])
def test_second_moments_rejects(chsh_game, V):
    with pytest.raises(ValueError):
        vectors_from_second_moments(chsh_game, V)


def test_optimal_state_relation(chsh_game, chsh_quantum, chsh_solution):
    res = check_optimal_state_relation(chsh_game, chsh_quantum, chsh_solution.dual)
    assert np.all(res <= 1e-6)


def test_optimal_state_relation_trivial():
    game = make_xor_game([[0]], [[1.0]])
    qs = QuantumStrategy.from_observables(maximally_entangled(2), [Z], [Z])
    res = check_optimal_state_relation(game, qs, DualBiases([1.0], [1.0]))
    assert res[0] == pytest.approx(0.0, abs=1e-15)


def test_optimal_state_relation_detects_flip(chsh_game, chsh_quantum, chsh_solution):
    A, B = chsh_quantum.alice_observables(), chsh_quantum.bob_observables()
    flipped = QuantumStrategy.from_observables(chsh_quantum.state, [A[0], -A[1]], B)
    res = check_optimal_state_relation(chsh_game, flipped, chsh_solution.dual)
    assert res[1] > 0.5


def test_optimal_state_relation_threshold(chsh_game, chsh_quantum):
    with pytest.raises(ValueError):
        check_optimal_state_relation(chsh_game, chsh_quantum, DualBiases([0.0, 1.0], [1.0, 1.0]))


def test_party_dimension_cap():
    psi = np.zeros(128)
    psi[0] = 1.0
    with pytest.raises(DimensionError):
        QuantumStrategy.from_observables(psi, [np.eye(128)], [np.eye(1)])


def test_product_strategy_correlations_multiply(chsh_quantum):
    prod = product_strategy([chsh_quantum, chsh_quantum])
    assert prod.dims == (4, 4)
    p1 = chsh_quantum.probabilities()
    p2 = prod.probabilities()
    expected = np.einsum("xyab,zwcd->xzywacbd", p1, p1).reshape(4, 4, 4, 4)
    np.testing.assert_allclose(p2, expected, atol=1e-12)
