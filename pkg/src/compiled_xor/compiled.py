"""The compiled single-prover game under a transparent mock QHE scheme.

Protocol per round: the verifier samples ``(x, y)``, sends ``Enc(sk, x)``,
receives a ciphertext answer ``alpha``, sends ``y`` in the clear, receives
``b`` and accepts iff ``Dec(sk, alpha)`` is a valid answer that wins
together with ``b``.  Winning probabilities are computed by exact
enumeration of the ciphertext support and of every measurement branch.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .games import NonlocalGame, XorGame, xor_to_nonlocal
from .ncpoly import NcPolynomial
from .qsim import (MAX_PARTY_DIM, DimensionError, Pvm, StateVector, random_pvm,
                   random_state, random_unitary)
from .synth import QuantumStrategy

UNITARY_TOL = 1e-9
PE_RANGE_TOL = 1e-9
MAX_PROVER_DIM = MAX_PARTY_DIM**2


# --------------------------------------------------------------------------
# mock QHE


@dataclass(frozen=True)
class Ciphertext:
    key: int
    nonce: int
    payload: object


class MockQhe:
    """Correct but insecure QHE: ciphertexts carry their plaintext in the open.

    ``ciphers`` semantically identical ciphertexts exist per plaintext; the
    encryption distribution is uniform over them.
    """

    def __init__(self, ciphers: int = 1):
        if ciphers < 1:
            raise ValueError("need at least one ciphertext per plaintext")
        self.ciphers = int(ciphers)

    @classmethod
    def parse(cls, text: str) -> "MockQhe":
        if text == "transparent":
            return cls(1)
        m = re.fullmatch(r"multi-cipher:(\d+)", text)
        if not m:
            raise ValueError(f"unknown QHE scheme {text!r}")
        return cls(int(m.group(1)))

    @property
    def name(self) -> str:
        return "transparent" if self.ciphers == 1 else f"multi-cipher:{self.ciphers}"

    def gen(self, rng: np.random.Generator | None = None) -> int:
        return 0 if rng is None else int(rng.integers(0, 2**31))

    def enc(self, key: int, x, rng: np.random.Generator | None = None) -> Ciphertext:
        nonce = 0 if rng is None else int(rng.integers(0, self.ciphers))
        return Ciphertext(key, nonce, x)

    def support(self, key: int, x) -> list[tuple[float, Ciphertext]]:
        """The exact encryption distribution of ``x``."""
        p = 1.0 / self.ciphers
        return [(p, Ciphertext(key, n, x)) for n in range(self.ciphers)]

    def eval(self, circuit: Callable, ct: Ciphertext) -> Ciphertext:
        return Ciphertext(ct.key, ct.nonce, circuit(ct.payload))

    def dec(self, key: int, ct: Ciphertext):
        if ct.key != key:
            raise ValueError("ciphertext was produced under a different key")
        return ct.payload


# --------------------------------------------------------------------------
# strategies


@dataclass(frozen=True, eq=False)
class AliceMeasurement:
    """Outcome ``k`` applies ``unitaries[k] @ pvm[k]`` and answers ``labels[k]``."""

    pvm: Pvm
    labels: tuple
    unitaries: tuple | None = None

    def __post_init__(self):
        pvm = self.pvm if isinstance(self.pvm, Pvm) else Pvm(tuple(self.pvm))
        labels = tuple(int(a) for a in self.labels)
        if len(labels) != len(pvm):
            raise ValueError("one label per PVM outcome is required")
        us = None
        if self.unitaries is not None:
            us = tuple(np.asarray(u, dtype=complex) for u in self.unitaries)
            if len(us) != len(pvm):
                raise ValueError("one unitary per PVM outcome is required")
            eye = np.eye(pvm.dim)
            for u in us:
                if u.shape != (pvm.dim, pvm.dim) or np.max(np.abs(u.conj().T @ u - eye)) > UNITARY_TOL:
                    raise ValueError("post-measurement operator is not unitary")
        object.__setattr__(self, "pvm", pvm)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "unitaries", us)

    @property
    def dim(self) -> int:
        return self.pvm.dim

    def operator(self, k: int) -> np.ndarray:
        P = self.pvm[k]
        return P if self.unitaries is None else self.unitaries[k] @ P

    def branches(self, psi: np.ndarray) -> list[tuple[int, np.ndarray]]:
        return [(self.labels[k], self.operator(k) @ psi) for k in range(len(self.pvm))]


@dataclass(frozen=True)
class Branch:
    """One term ``psi_{c alpha}`` weighted by the ciphertext probability."""

    weight: float
    nonce: int
    answer: object
    vector: np.ndarray = field(repr=False)


@dataclass(frozen=True, eq=False)
class CompiledStrategy:
    """Prover data: a state, Alice's operations per ciphertext and Bob's PVMs.

    ``alice[x]`` is used for every ciphertext of ``x`` unless
    ``overrides[(nonce, x)]`` is present.  ``answer_circuit``, when set, is
    homomorphically evaluated on Alice's ciphertext answer before it is sent.
    """

    state: StateVector
    alice: Mapping[int, AliceMeasurement]
    bob: tuple
    overrides: Mapping[tuple[int, int], AliceMeasurement] = field(default_factory=dict)
    answer_circuit: Callable | None = None

    def __post_init__(self):
        psi = self.state if isinstance(self.state, StateVector) else StateVector(self.state)
        bob = tuple(p if isinstance(p, Pvm) else Pvm(tuple(p)) for p in self.bob)
        if psi.dim > MAX_PROVER_DIM:
            raise DimensionError(f"prover dimension {psi.dim} exceeds {MAX_PROVER_DIM}")
        if abs(psi.norm() - 1.0) > 1e-10:
            raise ValueError("prover state must be normalized")
        alice = dict(self.alice)
        for m in itertools.chain(alice.values(), dict(self.overrides).values()):
            if m.dim != psi.dim:
                raise DimensionError(f"Alice operation dim {m.dim} != state dim {psi.dim}")
        if any(p.dim != psi.dim for p in bob):
            raise DimensionError("Bob PVM does not act on the prover space")
        object.__setattr__(self, "state", psi)
        object.__setattr__(self, "alice", alice)
        object.__setattr__(self, "overrides", dict(self.overrides))
        object.__setattr__(self, "bob", bob)

    @property
    def dim(self) -> int:
        return self.state.dim

    @property
    def na(self) -> int:
        return len(self.alice)

    @property
    def nb(self) -> int:
        return len(self.bob)

    def measurement(self, ct: Ciphertext) -> AliceMeasurement:
        key = (ct.nonce, ct.payload)
        if key in self.overrides:
            return self.overrides[key]
        return self.alice[ct.payload]

    def bob_observable(self, y: int) -> np.ndarray:
        p = self.bob[y]
        if len(p) != 2:
            raise ValueError("binary observables need two-outcome PVMs")
        return p[0] - p[1]

    def bob_observables(self) -> list[np.ndarray]:
        return [self.bob_observable(y) for y in range(self.nb)]

    def with_answer_circuit(self, circuit: Callable, bob: Sequence | None = None) -> "CompiledStrategy":
        return CompiledStrategy(self.state, self.alice, tuple(bob) if bob is not None else self.bob,
                                self.overrides, circuit)

    def branches(self, qhe: MockQhe, key: int, x: int) -> list[Branch]:
        """All ``psi_{c alpha}`` for ``c ~ Enc(x)`` with decrypted answers."""
        psi = np.asarray(self.state)
        out = []
        for p, ct in qhe.support(key, x):
            for label, vec in self.measurement(ct).branches(psi):
                alpha = Ciphertext(ct.key, ct.nonce, label)
                if self.answer_circuit is not None:
                    alpha = qhe.eval(self.answer_circuit, alpha)
                out.append(Branch(p, ct.nonce, qhe.dec(key, alpha), vec))
        return out


# --------------------------------------------------------------------------
# evaluation


@dataclass(frozen=True)
class CompiledReport:
    value: float
    bias: float
    table: np.ndarray           # win probability per (x, y)
    distribution: np.ndarray    # p[x, y, a, b] over valid answers
    invalid_mass: np.ndarray    # per x, probability of an undecodable answer

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "bias": self.bias,
            "per_question": [[float(v) for v in row] for row in self.table],
            "invalid_mass": [float(v) for v in self.invalid_mass],
        }


def _as_nonlocal(game) -> NonlocalGame:
    return xor_to_nonlocal(game) if isinstance(game, XorGame) else game


def answer_distribution(game, strat: CompiledStrategy, qhe: MockQhe, key: int = 0):
    """``p[x, y, a, b]`` of the compiled protocol and the undecodable mass per ``x``."""
    game = _as_nonlocal(game)
    if strat.na < game.na or strat.nb != game.nb:
        raise ValueError(f"strategy questions ({strat.na}, {strat.nb}) do not match the game")
    if any(len(p) != game.ob for p in strat.bob):
        raise ValueError("Bob's PVMs must have one outcome per answer")
    p = np.zeros((game.na, game.nb, game.oa, game.ob))
    invalid = np.zeros(game.na)
    for x in range(game.na):
        for br in strat.branches(qhe, key, x):
            a = br.answer
            if not (isinstance(a, (int, np.integer)) and 0 <= a < game.oa):
                invalid[x] += br.weight * float(np.vdot(br.vector, br.vector).real)
                continue
            for y in range(game.nb):
                for b, B in enumerate(strat.bob[y].projectors):
                    p[x, y, a, b] += br.weight * float(np.vdot(br.vector, B @ br.vector).real)
    return p, invalid


def run_compiled(game, strat: CompiledStrategy, qhe: MockQhe, key: int = 0) -> CompiledReport:
    """Exact winning probability of ``strat`` in the compiled version of ``game``."""
    ng = _as_nonlocal(game)
    p, invalid = answer_distribution(ng, strat, qhe, key)
    table = np.einsum("xyab,xyab->xy", ng.predicate.astype(float), p)
    value = float(np.sum(ng.pi * table))
    return CompiledReport(value, 2.0 * value - 1.0, table, p, invalid)


# --------------------------------------------------------------------------
# prover constructions


def honest_compile(ns: QuantumStrategy) -> CompiledStrategy:
    """Alice measures ``A_xa (x) I`` on the plaintext; Bob measures ``I (x) B_yb``."""
    da, db = ns.dims
    eye_a, eye_b = np.eye(da), np.eye(db)
    alice = {x: AliceMeasurement(Pvm(tuple(np.kron(P, eye_b) for P in pvm.projectors)),
                                 tuple(range(len(pvm))))
             for x, pvm in enumerate(ns.alice)}
    bob = tuple(Pvm(tuple(np.kron(eye_a, Q) for Q in pvm.projectors)) for pvm in ns.bob)
    return CompiledStrategy(ns.state, alice, bob)


def _swap_unitary(n: int, k: int) -> np.ndarray:
    perm = np.arange(n)
    perm[[0, k]] = perm[[k, 0]]
    return np.eye(n, dtype=complex)[perm]


def cheat_plaintext_strategy(game) -> CompiledStrategy:
    """Reads the plaintext question, stores it in a register and lets Bob use it.

    Alice answers the ``a(x)`` maximizing the best-response payoff; Bob reads
    ``x`` from the register and best-responds to ``(x, y, a(x))``.  This only
    works because the mock scheme hides nothing.
    """
    ng = _as_nonlocal(game)
    n = ng.na
    W = ng.weights()
    # best[x, y, a] = max_b W, a_of_x maximizes sum over y
    best = W.max(axis=3)
    a_of_x = best.sum(axis=1).argmax(axis=1)
    e0 = np.zeros(n, dtype=complex)
    e0[0] = 1.0
    alice = {}
    for x in range(n):
        projs = [np.zeros((n, n), dtype=complex) for _ in range(ng.oa)]
        projs[a_of_x[x]] = np.eye(n, dtype=complex)
        us = [_swap_unitary(n, x) for _ in range(ng.oa)]
        alice[x] = AliceMeasurement(Pvm(tuple(projs)), tuple(range(ng.oa)), tuple(us))
    bob = []
    for y in range(ng.nb):
        projs = [np.zeros((n, n), dtype=complex) for _ in range(ng.ob)]
        for x in range(n):
            b = int(ng.predicate[x, y, a_of_x[x]].argmax())
            projs[b][x, x] = 1.0
        bob.append(Pvm(tuple(projs)))
    return CompiledStrategy(StateVector(e0), alice, tuple(bob))


def random_compiled_strategy(na: int, nb: int, oa: int, ob: int, dim: int,
                             rng: np.random.Generator, qhe: MockQhe | None = None,
                             extra_outcomes: int = 0) -> CompiledStrategy:
    """Adversarial prover: random state, PVMs and post-measurement unitaries.

    With a multi-cipher scheme every ciphertext gets its own operation.
    ``extra_outcomes`` adds Alice outcomes with undecodable labels.
    """
    n_out = oa + extra_outcomes

    def alice_op():
        pvm = random_pvm(dim, n_out, rng)
        us = tuple(random_unitary(dim, rng) for _ in range(n_out))
        return AliceMeasurement(pvm, tuple(range(n_out)), us)

    alice = {x: alice_op() for x in range(na)}
    overrides = {}
    if qhe is not None and qhe.ciphers > 1:
        overrides = {(n, x): alice_op() for n in range(1, qhe.ciphers) for x in range(na)}
    bob = tuple(random_pvm(dim, ob, rng) for _ in range(nb))
    return CompiledStrategy(random_state(dim, rng), alice, bob, overrides)


# --------------------------------------------------------------------------
# pseudo-expectation


@dataclass(frozen=True)
class PseudoExpectation:
    """Degree-2 functional on the scenario algebra induced by a compiled strategy."""

    aa: np.ndarray
    ab: np.ndarray
    bb: np.ndarray
    a1: np.ndarray
    b1: np.ndarray

    def check(self, tol: float = PE_RANGE_TOL) -> None:
        for name in ("aa", "ab", "bb", "a1", "b1"):
            arr = getattr(self, name)
            if np.max(np.abs(arr), initial=0.0) > 1 + tol:
                raise ValueError(f"pseudo-expectation entry {name} outside [-1, 1]")
        if np.max(np.abs(np.diag(self.aa) - 1)) > tol or np.max(np.abs(np.diag(self.bb) - 1)) > tol:
            raise ValueError("squares of generators must evaluate to 1")

    def to_dict(self) -> dict:
        tolist = lambda m: np.asarray(m, dtype=float).tolist()
        return {"aa": tolist(self.aa), "ab": tolist(self.ab), "bb": tolist(self.bb),
                "a": tolist(self.a1), "b": tolist(self.b1)}


def pseudo_expectation(game: XorGame, strat: CompiledStrategy, qhe: MockQhe,
                       dist: np.ndarray | None = None, key: int = 0) -> PseudoExpectation:
    """Tabulate the pseudo-expectation of a binary compiled strategy.

    ``dist`` is the question distribution used to average Bob-only moments
    (uniform by default).  ``bb`` keeps the real part, which is what the
    symmetric words of a real polynomial see.
    """
    na, nb = game.na, game.nb
    if dist is None:
        dist = np.full(na, 1.0 / na)
    dist = np.asarray(dist, dtype=float)
    if dist.shape != (na,) or np.any(dist < 0) or abs(dist.sum() - 1) > 1e-12:
        raise ValueError("dist must be a probability vector over Alice's questions")
    B = strat.bob_observables()
    ab = np.zeros((na, nb))
    a1 = np.zeros(na)
    bb = np.zeros((nb, nb))
    b1 = np.zeros(nb)
    for x in range(na):
        for br in strat.branches(qhe, key, x):
            if br.answer not in (0, 1):
                raise ValueError(f"answer {br.answer!r} is not a bit")
            sign = -1.0 if br.answer else 1.0
            v = br.vector
            Bv = np.array([Bm @ v for Bm in B])
            exp_b = (Bv @ v.conj()).real
            ab[x] += br.weight * sign * exp_b
            a1[x] += br.weight * sign * float(np.vdot(v, v).real)
            b1 += dist[x] * br.weight * exp_b
            bb += dist[x] * br.weight * (Bv.conj() @ Bv.T).real
    return PseudoExpectation(np.eye(na), ab, bb, a1, b1)


def pe_apply(pe: PseudoExpectation, p: NcPolynomial) -> float:
    """Linear extension of ``pe`` to a polynomial of degree at most 2."""
    total = 0.0
    for w, c in p.terms.items():
        la, lb = len(w.a), len(w.b)
        if la + lb > 2:
            raise ValueError(f"word {w} has degree {la + lb} > 2")
        if la == 0 and lb == 0:
            val = 1.0
        elif la == 1 and lb == 1:
            val = pe.ab[w.a[0], w.b[0]]
        elif la == 2:
            val = pe.aa[w.a[0], w.a[1]]
        elif lb == 2:
            val = pe.bb[w.b[0], w.b[1]]
        elif la == 1:
            val = pe.a1[w.a[0]]
        else:
            val = pe.b1[w.b[0]]
        total += c * float(val)
    return total
