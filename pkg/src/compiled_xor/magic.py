"""The Magic Square game, its perfect strategy and the compiled anticommutation checks.

Variables are labelled 1..9 in the public functions and 0..8 internally.
Alice's answer for equation ``i`` with variables ``(s1, s2, s3)`` is the
integer ``4*a_s1 + 2*a_s2 + a_s3``.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .compiled import Branch, CompiledStrategy, MockQhe, run_compiled
from .games import NonlocalGame
from .qsim import I2, BinaryObservable, Pvm, X, Y, Z, kron, maximally_entangled, pvm_from_observable
from .synth import QuantumStrategy

# (s1, s2, s3, rhs), rows then columns
EQUATIONS = ((0, 1, 2, 0), (3, 4, 5, 0), (6, 7, 8, 0),
             (0, 3, 6, 0), (1, 4, 7, 0), (2, 5, 8, 1))
EQUATION_NAMES = ("r1", "r2", "r3", "c1", "c2", "c3")
N_VARS = 9

# bounds in units of epsilon = 1 - value.  The shifted relation is asserted
# against 576; the smaller stated constant 32 is reported but fails on
# rotated strategies, and 1008 is an independent re-derivation.
PAIR_RELATION_BOUND = 216.0
SHIFTED_RELATION_BOUND = 576.0
SHIFTED_RELATION_STATED = 32.0
SHIFTED_RELATION_REDERIVED = 1008.0
CROSS_RELATION_BOUND = 1584.0
ANTICOMMUTATOR_BOUND = 17280.0

PAULI_TABLE = (kron(X, I2), kron(I2, X), kron(X, X),
               kron(I2, Z), kron(Z, I2), kron(Z, Z),
               kron(X, Z), kron(Z, X), kron(Y, Y))


def answer_bits(a: int) -> tuple[int, int, int]:
    return (a >> 2) & 1, (a >> 1) & 1, a & 1


def magic_square_game() -> NonlocalGame:
    """Alice gets an equation, Bob one of its variables; 3-bit and 1-bit answers."""
    pi = np.zeros((6, N_VARS))
    pred = np.zeros((6, N_VARS, 8, 2), dtype=np.int8)
    for i, (*vars_, rhs) in enumerate(EQUATIONS):
        for pos, j in enumerate(vars_):
            pi[i, j] = 1.0 / 18.0
            for a in range(8):
                bits = answer_bits(a)
                if sum(bits) % 2 != rhs:
                    continue
                pred[i, j, a, bits[pos]] = 1
    return NonlocalGame(pi, pred, name="msquare")


def _alice_pvm(observables: list[np.ndarray], eq: tuple) -> Pvm:
    eye = np.eye(observables[0].shape[0])
    projs = []
    for a in range(8):
        P = eye.astype(complex)
        for bit, s in zip(answer_bits(a), eq[:3]):
            P = P @ (eye + (-1) ** bit * observables[s]) / 2
        projs.append(P)
    return Pvm(tuple(projs))


def strategy_from_table(bob_obs: list[np.ndarray], alice_obs: list[np.ndarray] | None = None) -> QuantumStrategy:
    """Alice measures each equation's three commuting observables jointly."""
    if alice_obs is None:
        alice_obs = [o.T for o in bob_obs]
    alice = tuple(_alice_pvm(alice_obs, eq) for eq in EQUATIONS)
    bob = tuple(pvm_from_observable(BinaryObservable(o)) for o in bob_obs)
    return QuantumStrategy(maximally_entangled(bob_obs[0].shape[0]), alice, bob)


def magic_square_perfect_strategy() -> QuantumStrategy:
    """Two-qubit Pauli table on two EPR pairs; Alice uses the transposes."""
    return strategy_from_table(list(PAULI_TABLE))


def perturbed_perfect_strategy(theta: float, variable: int = 2, toward: np.ndarray | None = None) -> QuantumStrategy:
    """Rotate Bob's observable for ``variable`` (1-based) by ``theta``.

    The rotation plane is spanned by the original observable and an
    anticommuting partner (default ``I (x) Z`` for variable 2), so the
    rotated operator stays a binary observable.  Alice is unchanged.
    """
    obs = list(PAULI_TABLE)
    j = variable - 1
    partner = kron(I2, Z) if toward is None else np.asarray(toward)
    if np.max(np.abs(obs[j] @ partner + partner @ obs[j])) > 1e-12:
        raise ValueError("rotation partner must anticommute with the observable")
    bob = list(obs)
    bob[j] = np.cos(theta) * obs[j] + np.sin(theta) * partner
    return strategy_from_table(bob, [o.T for o in obs])


def table_products() -> dict[str, np.ndarray]:
    """Product of the three observables of every equation."""
    return {name: PAULI_TABLE[s1] @ PAULI_TABLE[s2] @ PAULI_TABLE[s3]
            for name, (s1, s2, s3, _) in zip(EQUATION_NAMES, EQUATIONS)}


# --------------------------------------------------------------------------
# compiled checks


def _norm2(v: np.ndarray) -> float:
    return float(np.vdot(v, v).real)


def _expect_sq(branches: list[Branch], op: np.ndarray) -> float:
    """``E_c sum_alpha ||op psi_{c alpha}||^2``."""
    return sum(br.weight * _norm2(op @ br.vector) for br in branches)


def _orderings(eq_index: int):
    s = EQUATIONS[eq_index][:3]
    return list(itertools.permutations(s))


def _check_shape(strat: CompiledStrategy):
    if strat.nb != N_VARS or strat.na < 6 or any(len(p) != 2 for p in strat.bob):
        raise ValueError("strategy does not play the compiled Magic Square game")


def branch_identity_error(strat: CompiledStrategy, qhe: MockQhe, key: int = 0) -> float:
    """Max gap in ``||(B_j - (-1)^a_j) psi||^2 = 4 ||B_{j, a_j+1} psi||^2`` over all branches."""
    _check_shape(strat)
    B = strat.bob_observables()
    worst = 0.0
    for i, eq in enumerate(EQUATIONS):
        for br in strat.branches(qhe, key, i):
            if not isinstance(br.answer, (int, np.integer)) or not 0 <= br.answer < 8:
                continue
            bits = answer_bits(br.answer)
            for bit, j in zip(bits, eq[:3]):
                lhs = _norm2((B[j] - (-1) ** bit * np.eye(strat.dim)) @ br.vector)
                rhs = 4.0 * _norm2(strat.bob[j][bit ^ 1] @ br.vector)
                worst = max(worst, abs(lhs - rhs))
    return worst


@dataclass
class MagicReport:
    value: float
    epsilon: float
    pair_relation: float          # max over equations and orderings
    shifted_relation: float       # max over equations, orderings and shifting variables
    cross_relation: float         # max over equation pairs and orderings
    anticommutator: list[float]   # per equation whose ciphertexts are used
    branch_identity_error: float
    pair: tuple[int, int] = (2, 4)

    @property
    def checks(self) -> dict[str, bool]:
        eps = max(self.epsilon, 0.0)
        tol = 1e-9
        return {
            "branch_identity": self.branch_identity_error <= 1e-12,
            "pair_relation": self.pair_relation <= PAIR_RELATION_BOUND * eps + tol,
            "shifted_relation": self.shifted_relation <= SHIFTED_RELATION_BOUND * eps + tol,
            "cross_relation": self.cross_relation <= CROSS_RELATION_BOUND * eps + tol,
            "anticommutator": max(self.anticommutator) <= ANTICOMMUTATOR_BOUND * eps + tol,
        }

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        eps = max(self.epsilon, 0.0)
        return {
            "value": self.value,
            "epsilon": self.epsilon,
            "pair": list(self.pair),
            "anticommutator": self.anticommutator,
            "anticommutator_bound": ANTICOMMUTATOR_BOUND * eps,
            "pair_relation": self.pair_relation,
            "pair_relation_bound": PAIR_RELATION_BOUND * eps,
            "shifted_relation": self.shifted_relation,
            "shifted_relation_bound": SHIFTED_RELATION_BOUND * eps,
            "shifted_relation_stated_bound": SHIFTED_RELATION_STATED * eps,
            "shifted_relation_rederived_bound": SHIFTED_RELATION_REDERIVED * eps,
            "shifted_relation_within_stated": self.shifted_relation <= SHIFTED_RELATION_STATED * eps + 1e-9,
            "cross_relation": self.cross_relation,
            "cross_relation_bound": CROSS_RELATION_BOUND * eps,
            "branch_identity_error": self.branch_identity_error,
            "checks": self.checks,
            "passed": self.passed,
        }


def magic_anticommutator(strat: CompiledStrategy, qhe: MockQhe | None = None,
                         pair: tuple[int, int] = (2, 4), key: int = 0) -> MagicReport:
    """Anticommutator residual of Bob's pair (1-based) plus every intermediate relation."""
    _check_shape(strat)
    qhe = qhe or MockQhe()
    game = magic_square_game()
    value = run_compiled(game, strat, qhe, key).value
    eps = 1.0 - value
    B = strat.bob_observables()
    branches = {i: strat.branches(qhe, key, i) for i in range(6)}

    def relation(order, rhs):
        s1, s2, s3 = order
        return B[s1] @ B[s2] - (-1) ** rhs * B[s3]

    pair_rel = 0.0
    shifted = 0.0
    for i in range(6):
        rhs = EQUATIONS[i][3]
        for order in _orderings(i):
            R = relation(order, rhs)
            pair_rel = max(pair_rel, _expect_sq(branches[i], R))
            for k in range(6):
                for t in EQUATIONS[k][:3]:
                    shifted = max(shifted, _expect_sq(branches[k], R @ B[t]))

    cross = 0.0
    for i, j in itertools.product(range(6), repeat=2):
        sign = (-1) ** (EQUATIONS[i][3] + EQUATIONS[j][3])
        for s1, s2, s3 in _orderings(i):
            for t1, t2, t3 in _orderings(j):
                op = B[s1] @ B[t1] - sign * B[s2] @ B[s3] @ B[t2] @ B[t3]
                cross = max(cross, _expect_sq(branches[j], op))

    j, k = pair[0] - 1, pair[1] - 1
    anti = B[j] @ B[k] + B[k] @ B[j]
    per_eq = [_expect_sq(branches[i], anti) for i in range(6)]
    return MagicReport(value, eps, pair_rel, shifted, cross, per_eq,
                       branch_identity_error(strat, qhe, key), tuple(pair))
