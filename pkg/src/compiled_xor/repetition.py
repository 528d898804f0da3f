"""Parallel repetition and XOR sums of XOR games.

Tuple questions and answers are flattened in C order (first factor most
significant), which matches ``np.kron``.  For a subset ``M`` of factors the
derived strategy answers the parity of its bits over ``M``; the value of the
``n``-fold game is the average over all ``2**n`` subsets of the derived
biases.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .compiled import CompiledStrategy, MockQhe, run_compiled
from .games import GameError, NonlocalGame, XorGame, _rational_pi, xor_to_nonlocal
from .qsim import Pvm
from .synth import QuantumStrategy

MAX_FACTORS = 3
IDENTITY_TOL = 1e-9


def _check_factors(games: Sequence) -> list:
    games = list(games)
    if not 1 <= len(games) <= MAX_FACTORS:
        raise GameError(f"need between 1 and {MAX_FACTORS} factors, got {len(games)}")
    return games


def _check_subset(M, n: int) -> tuple[int, ...]:
    M = tuple(sorted(set(int(i) for i in M)))
    if any(not 0 <= i < n for i in M):
        raise GameError(f"subset {M} is not contained in range({n})")
    return M


def parallel_and(games: Sequence) -> NonlocalGame:
    """Product distribution, conjunction of predicates."""
    games = [xor_to_nonlocal(g) if isinstance(g, XorGame) else g for g in _check_factors(games)]
    pi, pred = games[0].pi, games[0].predicate
    for g in games[1:]:
        pi = np.kron(pi, g.pi)
        p = np.einsum("ijkl,mnop->imjnkolp", pred, g.predicate)
        s = p.shape
        pred = p.reshape(s[0] * s[1], s[2] * s[3], s[4] * s[5], s[6] * s[7])
    name = "^".join(g.name or "game" for g in games)
    return NonlocalGame(pi, pred, name=name)


def xor_sum(games: Sequence[XorGame], M) -> XorGame:
    """Kronecker product of the cost matrices indexed by ``M``; empty ``M`` is ``[[1]]``."""
    games = _check_factors(games)
    M = _check_subset(M, len(games))
    G = np.ones((1, 1))
    for i in M:
        G = np.kron(G, games[i].cost)
    return XorGame(G, name="+".join(games[i].name or "game" for i in M) or "trivial")


def padded_cost(games: Sequence[XorGame], M) -> XorGame:
    """Cost matrix on the full tuple alphabets: ``G_i`` on ``M`` and ``pi_i`` elsewhere."""
    games = _check_factors(games)
    M = _check_subset(M, len(games))
    G = np.ones((1, 1))
    for i, g in enumerate(games):
        G = np.kron(G, g.cost if i in M else g.pi)
    return XorGame(G, name=f"padded{list(M)}")


def subset_parity(n: int, M) -> Callable[[int], int]:
    """Map a flattened ``n``-bit answer to the parity of its bits over ``M``."""
    M = _check_subset(M, n)

    def parity(a: int) -> int:
        return sum((int(a) >> (n - 1 - i)) & 1 for i in M) % 2
    return parity


def _coarse_grain(pvm: Pvm, parity) -> Pvm:
    d = pvm.dim
    out = [np.zeros((d, d), dtype=complex), np.zeros((d, d), dtype=complex)]
    for b, P in enumerate(pvm.projectors):
        out[parity(b)] = out[parity(b)] + P
    return Pvm(tuple(out))


def subset_strategy(strat, n: int, M, qhe: MockQhe | None = None):
    """Derived strategy for the subset ``M``: answers become parities over ``M``.

    For compiled strategies Alice's parity is applied homomorphically to her
    ciphertext answer; Bob coarse-grains his PVMs in the clear.
    """
    if not isinstance(strat, (CompiledStrategy, QuantumStrategy)):
        raise TypeError(f"unsupported strategy type {type(strat).__name__}")
    parity = subset_parity(n, M)
    bob = tuple(_coarse_grain(p, parity) for p in strat.bob)
    if isinstance(strat, CompiledStrategy):
        return strat.with_answer_circuit(parity, bob)
    alice = tuple(_coarse_grain(p, parity) for p in strat.alice)
    return QuantumStrategy(strat.state, alice, bob)


def _subsets(n: int):
    for k in range(n + 1):
        yield from itertools.combinations(range(n), k)


@dataclass
class DecompositionReport:
    value: float
    subset_biases: dict = field(default_factory=dict)

    @property
    def reconstructed(self) -> float:
        n = max((len(M) for M in self.subset_biases), default=0)
        return sum(self.subset_biases.values()) / 2**n

    @property
    def residual(self) -> float:
        return abs(self.value - self.reconstructed)

    @property
    def passed(self) -> bool:
        return self.residual <= IDENTITY_TOL

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "reconstructed": self.reconstructed,
            "residual": self.residual,
            "subset_biases": {",".join(map(str, M)) or "empty": b for M, b in self.subset_biases.items()},
            "passed": self.passed,
        }


def decompose_value(games: Sequence[XorGame], strat, qhe: MockQhe | None = None) -> DecompositionReport:
    """Compare the value of ``strat`` on the ``n``-fold game with the subset-bias average."""
    games = _check_factors(games)
    n = len(games)
    qhe = qhe or MockQhe()
    product = parallel_and(games)
    if isinstance(strat, CompiledStrategy):
        value = run_compiled(product, strat, qhe).value
    else:
        value = strat.value(product)
    biases = {}
    for M in _subsets(n):
        derived = subset_strategy(strat, n, M, qhe)
        padded = padded_cost(games, M)
        if isinstance(strat, CompiledStrategy):
            biases[M] = run_compiled(padded, derived, qhe).bias
        else:
            biases[M] = derived.bias(padded)
    return DecompositionReport(value, biases)


def decompose_classical(games: Sequence[XorGame], alice: Sequence, bob: Sequence,
                        max_denominator: int = 10**6) -> tuple[Fraction, Fraction]:
    """Exact value and subset-bias average for a product of deterministic strategies.

    ``alice[i][x]`` and ``bob[i][y]`` are the answer bits of factor ``i``.
    Both sides are evaluated on the flattened tuple game in rational arithmetic.
    """
    games = _check_factors(games)
    n = len(games)
    pi_int, den = np.ones((1, 1), dtype=object), 1
    a_flat, b_flat = np.zeros(1, dtype=np.int64), np.zeros(1, dtype=np.int64)
    for g, fa, fb in zip(games, alice, bob):
        p, d = _rational_pi(g.pi, max_denominator)
        pi_int = np.kron(pi_int, p.astype(object))
        den *= d
        a_flat = (2 * a_flat[:, None] + np.asarray(fa)[None, :]).ravel()
        b_flat = (2 * b_flat[:, None] + np.asarray(fb)[None, :]).ravel()

    product = parallel_and(games)
    win = product.predicate[np.arange(len(a_flat))[:, None], np.arange(len(b_flat))[None, :],
                            a_flat[:, None], b_flat[None, :]]
    value = Fraction(int(np.sum(pi_int * win.astype(object))), den)

    total = Fraction(0)
    for M in _subsets(n):
        par = subset_parity(n, M)
        pa = np.array([par(a) for a in a_flat])
        pb = np.array([par(b) for b in b_flat])
        corr = np.where((pa[:, None] + pb[None, :]) % 2 == 0, 1, -1).astype(object)
        padded_sign = np.ones((1, 1), dtype=object)
        for i, g in enumerate(games):
            factor_sign = np.where(g.g == 1, -1, 1) if i in M else np.ones(g.shape, dtype=int)
            padded_sign = np.kron(padded_sign, factor_sign.astype(object))
        total += Fraction(int(np.sum(pi_int * padded_sign * corr)), den)
    return value, total / 2**n


@dataclass(frozen=True)
class RepetitionSpec:
    factors: tuple
    mode: str = "and"
    subset: tuple = ()

    def __post_init__(self):
        if self.mode not in ("and", "sum"):
            raise GameError(f"unknown repetition mode {self.mode!r}")
        _check_factors(self.factors)
        object.__setattr__(self, "subset", _check_subset(self.subset, len(self.factors)))

    def build(self):
        if self.mode == "and":
            return parallel_and(self.factors)
        return xor_sum(self.factors, self.subset)
