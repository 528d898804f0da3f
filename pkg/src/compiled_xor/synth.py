"""Quantum strategies, and conversions to and from vector strategies."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .games import NonlocalGame, XorGame
from .qsim import (MAX_PARTY_DIM, BinaryObservable, DimensionError, I2, Pvm, StateVector,
                   X, Y, Z, kron, maximally_entangled, observable_from_pvm,
                   pvm_from_observable)
from .sdp import DEGENERATE_NORM, DualBiases, VectorStrategy

RANK_CUTOFF = 1e-10
MAX_CLIFFORD = 8
MOMENT_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class QuantumStrategy:
    """Tensor strategy: a state on ``C^da (x) C^db`` and one PVM per question.

    ``alice[x][a]`` acts on Alice's factor, ``bob[y][b]`` on Bob's.
    """

    state: StateVector
    alice: tuple
    bob: tuple
    dims: tuple[int, int] = field(default=(0, 0))

    def __post_init__(self):
        psi = self.state if isinstance(self.state, StateVector) else StateVector(self.state)
        alice = tuple(p if isinstance(p, Pvm) else Pvm(tuple(p)) for p in self.alice)
        bob = tuple(p if isinstance(p, Pvm) else Pvm(tuple(p)) for p in self.bob)
        da, db = alice[0].dim, bob[0].dim
        for d in (da, db):
            if d > MAX_PARTY_DIM:
                raise DimensionError(f"party dimension {d} exceeds {MAX_PARTY_DIM}")
        if any(p.dim != da for p in alice) or any(p.dim != db for p in bob):
            raise DimensionError("PVMs of one party must share a dimension")
        if psi.dim != da * db:
            raise DimensionError(f"state dim {psi.dim} != {da} * {db}")
        if abs(psi.norm() - 1) > 1e-10:
            raise ValueError("strategy state must be normalized")
        object.__setattr__(self, "state", psi)
        object.__setattr__(self, "alice", alice)
        object.__setattr__(self, "bob", bob)
        object.__setattr__(self, "dims", (da, db))

    @classmethod
    def from_observables(cls, state, alice_obs: Sequence, bob_obs: Sequence) -> "QuantumStrategy":
        alice = [pvm_from_observable(o if isinstance(o, BinaryObservable) else BinaryObservable(o))
                 for o in alice_obs]
        bob = [pvm_from_observable(o if isinstance(o, BinaryObservable) else BinaryObservable(o))
               for o in bob_obs]
        return cls(state, tuple(alice), tuple(bob))

    def alice_observables(self) -> list[np.ndarray]:
        return [observable_from_pvm(p).matrix for p in self.alice]

    def bob_observables(self) -> list[np.ndarray]:
        return [observable_from_pvm(p).matrix for p in self.bob]

    def _psi_matrix(self) -> np.ndarray:
        return np.asarray(self.state).reshape(self.dims)

    def local_expectation(self, a_op: np.ndarray, b_op: np.ndarray) -> complex:
        """``<psi| A (x) B |psi>`` without forming the Kronecker product."""
        P = self._psi_matrix()
        return complex(np.sum(P.conj() * (a_op @ P @ b_op.T)))

    def correlations(self) -> np.ndarray:
        """``<psi| A_x (x) B_y |psi>`` for binary strategies."""
        A, B = self.alice_observables(), self.bob_observables()
        return np.array([[self.local_expectation(a, b).real for b in B] for a in A])

    def bias(self, game: XorGame) -> float:
        return float(np.sum(game.cost * self.correlations()))

    def probabilities(self) -> np.ndarray:
        """``p[x, y, a, b] = <psi| A_xa (x) B_yb |psi>``."""
        oa = max(len(p) for p in self.alice)
        ob = max(len(p) for p in self.bob)
        out = np.zeros((len(self.alice), len(self.bob), oa, ob))
        for x, pa in enumerate(self.alice):
            for y, pb in enumerate(self.bob):
                for a, P in enumerate(pa.projectors):
                    for b, Q in enumerate(pb.projectors):
                        out[x, y, a, b] = self.local_expectation(P, Q).real
        return out

    def value(self, game: NonlocalGame) -> float:
        p = self.probabilities()
        W = game.weights()
        if p.shape != W.shape:
            raise ValueError(f"strategy shape {p.shape} does not fit game {W.shape}")
        return float(np.sum(W * p))

    def embedded_alice(self, op: np.ndarray) -> np.ndarray:
        return np.kron(op, np.eye(self.dims[1]))

    def embedded_bob(self, op: np.ndarray) -> np.ndarray:
        return np.kron(np.eye(self.dims[0]), op)


def clifford_generators(d: int) -> list[np.ndarray]:
    """``d`` pairwise anticommuting Hermitian involutions on ``2**ceil(d/2)`` dims."""
    if not 1 <= d <= MAX_CLIFFORD:
        raise ValueError(f"d must lie in [1, {MAX_CLIFFORD}], got {d}")
    n = math.ceil(d / 2)
    gens = []
    for j in range(n):
        for pauli in (Z, X):
            gens.append(kron(*([Y] * j + [pauli] + [I2] * (n - j - 1))))
    return gens[:d]


def reduce_rank(vs: VectorStrategy, cutoff: float = RANK_CUTOFF) -> VectorStrategy:
    """Same Gram matrix in the fewest coordinates (eigenvalues above ``cutoff``)."""
    W = np.vstack([vs.u, vs.v])
    gram = W @ W.T
    lam, Q = np.linalg.eigh(gram)
    keep = lam > cutoff
    if not np.any(keep):
        keep[-1] = True
    coords = Q[:, keep] * np.sqrt(lam[keep])
    coords /= np.linalg.norm(coords, axis=1, keepdims=True)
    na = vs.u.shape[0]
    return VectorStrategy(coords[:na], coords[na:])


def strategy_from_vectors(vs: VectorStrategy) -> QuantumStrategy:
    """Tsirelson's construction: ``A_x = sum u_x[i] g_i``, ``B_y = sum v_y[i] conj(g_i)``."""
    vs = reduce_rank(vs)
    if vs.dim > MAX_CLIFFORD:
        raise ValueError(f"rank {vs.dim} exceeds {MAX_CLIFFORD} after reduction")
    gens = clifford_generators(vs.dim)
    gens_b = [g.conj() for g in gens]
    A = [sum(c * g for c, g in zip(u, gens)) for u in vs.u]
    B = [sum(c * g for c, g in zip(v, gens_b)) for v in vs.v]
    return QuantumStrategy.from_observables(maximally_entangled(gens[0].shape[0]), A, B)


def vectors_from_second_moments(game: XorGame, V: np.ndarray) -> VectorStrategy:
    """Unit vectors with Gram matrix ``V`` for Bob and ``u_x ∝ sum_s G[x,s] v_s``."""
    V = np.asarray(V, dtype=float)
    if V.shape != (game.nb, game.nb):
        raise ValueError(f"moment matrix must be {game.nb}x{game.nb}")
    if np.max(np.abs(V - V.T)) > MOMENT_TOL:
        raise ValueError("moment matrix is not symmetric")
    if np.max(np.abs(np.diag(V) - 1.0)) > MOMENT_TOL:
        raise ValueError("moment matrix must have unit diagonal")
    lam, Q = np.linalg.eigh((V + V.T) / 2)
    if lam[0] < -MOMENT_TOL:
        raise ValueError(f"moment matrix is not PSD (eigenvalue {lam[0]:.3g})")
    v = Q * np.sqrt(np.clip(lam, 0.0, None))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    W = game.cost @ v
    norms = np.linalg.norm(W, axis=1)
    u = np.zeros_like(W)
    ok = norms >= DEGENERATE_NORM
    u[ok] = W[ok] / norms[ok, None]
    u[~ok, 0] = 1.0
    return VectorStrategy(u, v)


def moment_row_norms(game: XorGame, V: np.ndarray) -> np.ndarray:
    """``sqrt(sum_{s,y} G[x,s] G[x,y] V[s,y])`` for each ``x``."""
    G = game.cost
    return np.sqrt(np.clip(np.einsum("xs,xy,sy->x", G, G, V), 0.0, None))


def check_optimal_state_relation(game: XorGame, qs: QuantumStrategy, duals: DualBiases,
                                 min_r: float = 1e-10) -> np.ndarray:
    """``|| (A_x (x) I - r_x^-1 sum_y G[x,y] I (x) B_y) psi ||`` per question ``x``."""
    r = duals.r
    if np.any(r <= min_r):
        raise ValueError("row biases must be positive")
    psi = np.asarray(qs.state)
    A, B = qs.alice_observables(), qs.bob_observables()
    out = np.zeros(game.na)
    for x in range(game.na):
        bhat = sum(game.cost[x, y] * B[y] for y in range(game.nb)) / r[x]
        diff = qs.embedded_alice(A[x]) - qs.embedded_bob(bhat)
        out[x] = np.linalg.norm(diff @ psi)
    return out


def _product_pvms(pvm_lists: Sequence[Sequence[Pvm]]) -> tuple[Pvm, ...]:
    out = []
    for combo in itertools.product(*pvm_lists):
        projs = [kron(*ps) for ps in itertools.product(*(p.projectors for p in combo))]
        out.append(Pvm(tuple(projs)))
    return tuple(out)


def product_strategy(strats: Sequence[QuantumStrategy]) -> QuantumStrategy:
    """Independent play of each factor; questions and answers are tuples in C order."""
    strats = list(strats)
    if not strats:
        raise ValueError("need at least one factor")
    mats = [np.asarray(s.state).reshape(s.dims) for s in strats]
    joint = mats[0]
    for m in mats[1:]:
        joint = np.kron(joint, m)  # kron of (da_i, db_i) blocks is (prod da, prod db)
    return QuantumStrategy(StateVector(joint.ravel()), _product_pvms([s.alice for s in strats]),
                           _product_pvms([s.bob for s in strats]))
