"""Two-player nonlocal games, XOR games and brute-force classical values."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

PROB_TOL = 1e-12
# already-normalized data is left untouched so that JSON round-trips are exact
RENORM_SKIP = 8 * np.finfo(float).eps
DEFAULT_STRATEGY_CAP = 2**24


class GameError(ValueError):
    """Raised for malformed game data."""


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, copy=True)
    arr.setflags(write=False)
    return arr


def _check_distribution(pi: np.ndarray) -> np.ndarray:
    if np.any(pi < 0):
        raise GameError("question distribution has a negative entry")
    total = float(pi.sum())
    if abs(total - 1.0) > PROB_TOL:
        raise GameError(f"question distribution sums to {total!r}, not 1")
    return pi if abs(total - 1.0) <= RENORM_SKIP else pi / total


@dataclass(frozen=True)
class NonlocalGame:
    """A game ``(I_A, I_B, O_A, O_B, pi, V)`` with alphabets ``range(n)``.

    ``pi`` has shape ``(na, nb)`` and ``predicate`` has shape
    ``(na, nb, oa, ob)`` with entries in {0, 1}.
    """

    pi: np.ndarray
    predicate: np.ndarray
    name: str = field(default="", compare=False)

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float)
        pred = np.asarray(self.predicate)
        if pi.ndim != 2:
            raise GameError("pi must be a matrix")
        if pred.ndim != 4 or pred.shape[:2] != pi.shape:
            raise GameError(
                f"predicate shape {pred.shape} does not match pi shape {pi.shape}")
        if not np.all((pred == 0) | (pred == 1)):
            raise GameError("predicate entries must be 0 or 1")
        object.__setattr__(self, "pi", _frozen(_check_distribution(pi)))
        object.__setattr__(self, "predicate", _frozen(pred.astype(np.int8)))

    @property
    def na(self) -> int:
        return self.pi.shape[0]

    @property
    def nb(self) -> int:
        return self.pi.shape[1]

    @property
    def oa(self) -> int:
        return self.predicate.shape[2]

    @property
    def ob(self) -> int:
        return self.predicate.shape[3]

    def weights(self) -> np.ndarray:
        """``pi(x, y) * V(x, y, a, b)`` as a dense 4-tensor."""
        return self.pi[:, :, None, None] * self.predicate


@dataclass(frozen=True)
class XorGame:
    """An XOR game given by its signed cost matrix ``G``.

    ``G[x, y] = (-1)**g(x, y) * pi(x, y)`` and the entries of ``|G|`` sum to 1.
    """

    cost: np.ndarray
    name: str = field(default="", compare=False)

    def __post_init__(self):
        G = np.asarray(self.cost, dtype=float)
        if G.ndim != 2 or G.size == 0:
            raise GameError("cost matrix must be a non-empty 2-d array")
        mass = float(np.abs(G).sum())
        if abs(mass - 1.0) > PROB_TOL:
            raise GameError(f"cost matrix has l1 mass {mass!r}, not 1")
        object.__setattr__(self, "cost", _frozen(G if abs(mass - 1.0) <= RENORM_SKIP else G / mass))

    @property
    def shape(self) -> tuple[int, int]:
        return self.cost.shape

    @property
    def na(self) -> int:
        return self.cost.shape[0]

    @property
    def nb(self) -> int:
        return self.cost.shape[1]

    @property
    def pi(self) -> np.ndarray:
        return np.abs(self.cost)

    @property
    def g(self) -> np.ndarray:
        # zero-weight pairs are canonicalized to g = 0
        return (self.cost < 0).astype(np.int8)


def make_xor_game(g_table, pi, name: str = "") -> XorGame:
    """Build the cost matrix ``(-1)**g * pi`` from a parity table and a distribution."""
    g_arr = np.asarray(g_table)
    pi_arr = np.asarray(pi, dtype=float)
    if g_arr.shape != pi_arr.shape:
        raise GameError(f"g shape {g_arr.shape} != pi shape {pi_arr.shape}")
    if not np.all((g_arr == 0) | (g_arr == 1)):
        raise GameError("g entries must be 0 or 1")
    pi_arr = _check_distribution(pi_arr)
    return XorGame(np.where(g_arr == 1, -pi_arr, pi_arr), name=name)


def xor_to_nonlocal(game: XorGame) -> NonlocalGame:
    """The nonlocal game with predicate ``(1 + (-1)**(g + a + b)) / 2``."""
    g = game.g
    a = np.arange(2)[:, None]
    b = np.arange(2)[None, :]
    pred = ((g[:, :, None, None] + a + b) % 2 == 0).astype(np.int8)
    return NonlocalGame(game.pi, pred, name=game.name)


def nonlocal_to_xor(game: NonlocalGame) -> XorGame:
    """Recover the cost matrix of a nonlocal game with an XOR predicate."""
    if game.oa != 2 or game.ob != 2:
        raise GameError("XOR games have binary answers")
    pred = game.predicate
    g = np.zeros(game.pi.shape, dtype=np.int8)
    for x in range(game.na):
        for y in range(game.nb):
            p = pred[x, y]
            if p[0, 0] == p[1, 1] and p[0, 1] == p[1, 0] and p[0, 0] != p[0, 1]:
                g[x, y] = 0 if p[0, 0] else 1
            elif game.pi[x, y] > 0:
                raise GameError(f"predicate at ({x}, {y}) is not a parity test")
    return make_xor_game(g, game.pi, name=game.name)


def bias_of_value(v: float) -> float:
    if not -PROB_TOL <= v <= 1 + PROB_TOL:
        raise ValueError(f"value {v!r} outside [0, 1]")
    return 2 * v - 1


def value_of_bias(b: float) -> float:
    if not -1 - PROB_TOL <= b <= 1 + PROB_TOL:
        raise ValueError(f"bias {b!r} outside [-1, 1]")
    return (1 + b) / 2


def _rational_pi(pi: np.ndarray, max_denominator: int) -> tuple[np.ndarray, int]:
    fracs = [Fraction(float(p)).limit_denominator(max_denominator) for p in pi.ravel()]
    den = 1
    for f in fracs:
        den = den * f.denominator // math.gcd(den, f.denominator)
    # python ints: the common denominator can exceed int64
    ints = np.array([f.numerator * (den // f.denominator) for f in fracs], dtype=object)
    return ints.reshape(pi.shape), den


def classical_value(game: NonlocalGame | XorGame, cap: int = DEFAULT_STRATEGY_CAP,
                    exact: bool = False, max_denominator: int = 10**6):
    """Best winning probability over deterministic strategies.

    The party with fewer deterministic strategies is enumerated and the
    other one best-responds question by question, which is exact.  ``cap``
    bounds the number of enumerated strategies.

    With ``exact=True`` the question distribution is converted to rationals
    (denominators up to ``max_denominator``) and a :class:`Fraction` is
    returned.
    """
    if isinstance(game, XorGame):
        game = xor_to_nonlocal(game)
    if exact:
        pi_int, den = _rational_pi(game.pi, max_denominator)
        W = pi_int[:, :, None, None] * game.predicate.astype(object)
    else:
        W = game.weights()

    n_alice = game.oa ** game.na
    n_bob = game.ob ** game.nb
    if n_bob <= n_alice:
        count = n_bob
    else:
        count = n_alice
        W = W.transpose(1, 0, 3, 2)
    if count > cap:
        raise GameError(f"{count} deterministic strategies exceed cap {cap}")

    nq_other, nq_enum, na_other, na_enum = W.shape
    best = None
    chunk = 1 << 14
    for start in range(0, count, chunk):
        idx = np.arange(start, min(count, start + chunk))
        # digits of idx in base na_enum, one per enumerated question
        strat = (idx[:, None] // na_enum ** np.arange(nq_enum)[None, :]) % na_enum
        # payoff[s, x, a] = sum_y W[x, y, a, strat[s, y]]
        picked = W[:, np.arange(nq_enum)[None, :], :, strat]  # (s, nq_enum, x, a)
        payoff = picked.sum(axis=1)
        score = payoff.max(axis=2).sum(axis=1).max()
        best = score if best is None else max(best, score)
    if exact:
        return Fraction(int(best), den)
    return float(best)
