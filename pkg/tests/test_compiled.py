import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from compiled_xor.compiled import (AliceMeasurement, Ciphertext, CompiledStrategy, MockQhe,
                                   cheat_plaintext_strategy, honest_compile, pe_apply,
                                   pseudo_expectation, random_compiled_strategy, run_compiled)
from compiled_xor.games import xor_to_nonlocal
from compiled_xor.library import chsh, random_xor_game
from compiled_xor.magic import magic_square_game, magic_square_perfect_strategy
from compiled_xor.ncpoly import NcPolynomial, bias_polynomial
from compiled_xor.qsim import DimensionError, Pvm, StateVector
from compiled_xor.sdp import solve
from compiled_xor.sos import build_certificate
from compiled_xor.synth import QuantumStrategy, strategy_from_vectors

from conftest import CHSH_BIAS, CHSH_VALUE

QHES = [MockQhe(1), MockQhe(3)]


# --------------------------------------------------------------------------
# mock scheme


@pytest.mark.parametrize("text, k", [("transparent", 1), ("multi-cipher:4", 4)])
def test_qhe_parse(text, k):
    qhe = MockQhe.parse(text)
    assert qhe.ciphers == k
    assert qhe.name == text


@pytest.mark.parametrize("text", ["opaque", "multi-cipher:", "multi-cipher:0"])
def test_qhe_parse_rejects(text):
    with pytest.raises(ValueError):
        MockQhe.parse(text)


@pytest.mark.parametrize("qhe", QHES)
def test_qhe_correctness(qhe, rng):
    key = qhe.gen(rng)
    for x in range(4):
        ct = qhe.enc(key, x, rng)
        assert qhe.dec(key, ct) == x
        assert qhe.dec(key, qhe.eval(lambda a: a ^ 1, ct)) == x ^ 1
    support = qhe.support(key, 2)
    assert sum(p for p, _ in support) == pytest.approx(1.0)
    assert len({ct.nonce for _, ct in support}) == qhe.ciphers


def test_qhe_wrong_key():
    with pytest.raises(ValueError):
        MockQhe().dec(1, Ciphertext(0, 0, 1))


# --------------------------------------------------------------------------
# compiled value


def test_honest_chsh_value(chsh_game, chsh_compiled, transparent):
    rep = run_compiled(chsh_game, chsh_compiled, transparent)
    assert rep.value == pytest.approx(CHSH_VALUE, abs=1e-9)
    assert rep.bias == pytest.approx(CHSH_BIAS, abs=1e-9)


def test_honest_magic_square_value(transparent):
    rep = run_compiled(magic_square_game(), honest_compile(magic_square_perfect_strategy()), transparent)
    assert rep.value == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("game", [chsh(), random_xor_game(3, 2, 4), random_xor_game(2, 3, 1)])
def test_cheat_plaintext_beats_quantum_optimum(game, transparent):
    rep = run_compiled(game, cheat_plaintext_strategy(game), transparent)
    assert rep.value == pytest.approx(1.0, abs=1e-12)
    assert rep.value > solve(game).value + 1e-3


def test_deterministic_strategy_value(transparent):
    # Alice answers 0, Bob answers 0: wins exactly where g = 0
    game = chsh()
    e = np.eye(2)
    zero = np.zeros((2, 2))
    det = QuantumStrategy(StateVector([1.0, 0, 0, 0]), (Pvm((e, zero)),) * 2, (Pvm((e, zero)),) * 2)
    assert run_compiled(game, honest_compile(det), transparent).value == pytest.approx(0.75)
    assert det.value(xor_to_nonlocal(game)) == pytest.approx(0.75)


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("qhe", QHES)
def test_honest_compilation_preserves_value(seed, qhe):
    game = random_xor_game(3, 3, seed)
    qs = strategy_from_vectors(solve(game).primal)
    assert run_compiled(game, honest_compile(qs), qhe).value == pytest.approx(
        qs.value(xor_to_nonlocal(game)), abs=1e-9)


def test_invalid_answers_lose(chsh_game, transparent, rng):
    strat = random_compiled_strategy(2, 2, 2, 2, 4, rng, extra_outcomes=2)
    rep = run_compiled(chsh_game, strat, transparent)
    p, _ = rep.distribution, rep.invalid_mass
    assert np.all(rep.invalid_mass >= 0)
    assert p.sum(axis=(2, 3)) + rep.invalid_mass[:, None] == pytest.approx(np.ones((2, 2)))
    assert rep.value <= 1 - 0.25 * rep.invalid_mass.sum() + 1e-12


def test_distribution_normalized(chsh_game, chsh_compiled):
    rep = run_compiled(chsh_game, chsh_compiled, MockQhe(2))
    np.testing.assert_allclose(rep.distribution.sum(axis=(2, 3)), 1.0, atol=1e-12)


def test_alphabet_mismatch(chsh_compiled):
    with pytest.raises(ValueError):
        run_compiled(random_xor_game(3, 3, 0), chsh_compiled, MockQhe())


def test_alice_measurement_rejects_non_unitary():
    pvm = Pvm((np.eye(2), np.zeros((2, 2))))
    with pytest.raises(ValueError):
        AliceMeasurement(pvm, (0, 1), (np.eye(2), 2 * np.eye(2)))


def test_compiled_dimension_cap():
    with pytest.raises(DimensionError):
        CompiledStrategy(StateVector(np.ones(2) / np.sqrt(2)),
                         {0: AliceMeasurement(Pvm((np.eye(3),)), (0,))}, ())


def test_overrides_are_used():
    # ciphertext nonce 1 of x=0 answers 1 instead of 0
    e, z = np.eye(1), np.zeros((1, 1))
    base = AliceMeasurement(Pvm((e, z)), (0, 1))
    flipped = AliceMeasurement(Pvm((z, e)), (0, 1))
    strat = CompiledStrategy(StateVector([1.0]), {0: base}, (Pvm((e, z)),), {(1, 0): flipped})
    game = random_xor_game(1, 1, 0)
    rep = run_compiled(game, strat, MockQhe(2))
    assert rep.distribution[0, 0, 0, 0] == pytest.approx(0.5)
    assert rep.distribution[0, 0, 1, 0] == pytest.approx(0.5)


# --------------------------------------------------------------------------
# pseudo-expectation


def test_pe_chsh_tables(chsh_game, chsh_compiled, transparent):
    pe = pseudo_expectation(chsh_game, chsh_compiled, transparent)
    pe.check()
    np.testing.assert_allclose(pe.ab, np.array([[1, 1], [1, -1]]) / np.sqrt(2), atol=1e-9)
    np.testing.assert_array_equal(np.diag(pe.aa), 1.0)
    assert pe.bb[0, 1] + pe.bb[1, 0] == pytest.approx(0.0, abs=1e-6)
    assert pe_apply(pe, bias_polynomial(chsh_game)) == pytest.approx(CHSH_BIAS, abs=1e-9)
    assert pe_apply(pe, NcPolynomial.constant(1.0)) == 1.0


def test_pe_rejects_high_degree(chsh_game, chsh_compiled, transparent):
    pe = pseudo_expectation(chsh_game, chsh_compiled, transparent)
    p = NcPolynomial.a(0) * NcPolynomial.b(0) * NcPolynomial.b(1)
    with pytest.raises(ValueError):
        pe_apply(pe, p)


def test_pe_word_symmetry(chsh_game, chsh_compiled, transparent):
    pe = pseudo_expectation(chsh_game, chsh_compiled, transparent)
    a, b = NcPolynomial.a, NcPolynomial.b
    assert pe_apply(pe, a(1) * b(0)) == pe_apply(pe, b(0) * a(1))


def test_pe_distribution_parameter(chsh_game, rng):
    strat = random_compiled_strategy(2, 2, 2, 2, 4, rng)
    qhe = MockQhe()
    uniform = pseudo_expectation(chsh_game, strat, qhe)
    skewed = pseudo_expectation(chsh_game, strat, qhe, dist=[0.9, 0.1])
    np.testing.assert_allclose(uniform.ab, skewed.ab)
    with pytest.raises(ValueError):
        pseudo_expectation(chsh_game, strat, qhe, dist=[0.5, 0.6])


@pytest.mark.parametrize("seed", range(10))
@pytest.mark.parametrize("qhe", QHES)
def test_pe_bias_identity_adversarial(seed, qhe):
    rng = np.random.default_rng(seed)
    game = random_xor_game(3, 2, seed)
    strat = random_compiled_strategy(3, 2, 2, 2, 6, rng, qhe)
    pe = pseudo_expectation(game, strat, qhe)
    pe.check()
    assert pe_apply(pe, bias_polynomial(game)) == pytest.approx(run_compiled(game, strat, qhe).bias, abs=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 4), st.sampled_from([1, 2, 3]))
def test_pe_b_squares_nonnegative(seed, nb, ciphers):
    rng = np.random.default_rng(seed)
    qhe = MockQhe(ciphers)
    game = random_xor_game(2, nb, seed % 97)
    strat = random_compiled_strategy(2, nb, 2, 2, 4, rng, qhe)
    pe = pseudo_expectation(game, strat, qhe)
    gamma = rng.standard_normal(nb)
    lin = NcPolynomial.b_linear(gamma)
    assert pe_apply(pe, lin * lin) >= -1e-9


@pytest.mark.parametrize("seed", range(6))
def test_honest_bias_within_sos_bound(seed):
    game = random_xor_game(3, 3, seed)
    sol = solve(game)
    cert = build_certificate(game, sol)
    strat = honest_compile(strategy_from_vectors(sol.primal))
    assert run_compiled(game, strat, MockQhe()).bias <= cert.beta + 1e-6
