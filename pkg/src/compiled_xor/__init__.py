"""Quantum values, sum-of-squares certificates and compiled-game checks for XOR games."""

from .compiled import (CompiledStrategy, MockQhe, PseudoExpectation, honest_compile, pe_apply,
                       pseudo_expectation, run_compiled)
from .games import (NonlocalGame, XorGame, bias_of_value, classical_value, make_xor_game,
                    value_of_bias, xor_to_nonlocal)
from .library import chsh, random_xor_game
from .magic import magic_anticommutator, magic_square_game, magic_square_perfect_strategy
from .ncpoly import NcPolynomial, bias_polynomial
from .repetition import decompose_value, parallel_and, xor_sum
from .sdp import DualBiases, SdpSolution, VectorStrategy, solve
from .sos import SosCertificate, build_certificate, verify_certificate
from .synth import QuantumStrategy, clifford_generators, strategy_from_vectors

__version__ = "0.1.0"

__all__ = [
    "CompiledStrategy", "DualBiases", "MockQhe", "NcPolynomial", "NonlocalGame",
    "PseudoExpectation", "QuantumStrategy", "SdpSolution", "SosCertificate", "VectorStrategy",
    "XorGame", "bias_of_value", "bias_polynomial", "build_certificate", "chsh",
    "classical_value", "clifford_generators", "decompose_value", "honest_compile",
    "magic_anticommutator", "magic_square_game", "magic_square_perfect_strategy",
    "make_xor_game", "parallel_and", "pe_apply", "pseudo_expectation", "random_xor_game",
    "run_compiled", "solve", "strategy_from_vectors", "value_of_bias", "verify_certificate",
    "xor_sum", "xor_to_nonlocal",
]
