"""Primal and dual SDPs for the optimal bias of an XOR game.

Primal: maximize ``sum G[x, y] <u_x, v_y>`` over unit vectors.
Dual: minimize ``(sum r + sum c) / 2`` subject to
``[[diag(r), -G], [-G^T, diag(c)]] >= 0`` (Alice block first).

The primal is solved by low-rank block ascent on explicit unit vectors
(each half-step is the exact maximizer ``u_x ∝ sum_y G[x, y] v_y``).
Row and column norms of ``G V`` and ``G^T U`` give dual candidates; a
uniform diagonal shift makes them exactly feasible, so the reported gap is
an honest upper-minus-lower bound.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from .games import XorGame

log = logging.getLogger(__name__)

UNIT_TOL = 1e-9
PSD_TOL = 1e-8
DEGENERATE_NORM = 1e-12
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 10**6


class SdpConvergenceError(RuntimeError):
    def __init__(self, message: str, gap: float):
        super().__init__(message)
        self.gap = gap


@dataclass(frozen=True)
class VectorStrategy:
    """Unit vectors ``u`` (rows, one per Alice question) and ``v`` (one per Bob question)."""

    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        u = np.atleast_2d(np.asarray(self.u, dtype=float))
        v = np.atleast_2d(np.asarray(self.v, dtype=float))
        if u.shape[1] != v.shape[1]:
            raise ValueError(f"dimension mismatch: {u.shape[1]} vs {v.shape[1]}")
        for name, m in (("u", u), ("v", v)):
            err = np.max(np.abs(np.linalg.norm(m, axis=1) - 1.0))
            if err > UNIT_TOL:
                raise ValueError(f"{name} vectors are not unit (max error {err:.3g})")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)

    @property
    def dim(self) -> int:
        return self.u.shape[1]

    def correlations(self) -> np.ndarray:
        return self.u @ self.v.T

    def bias(self, game: XorGame) -> float:
        return float(np.sum(game.cost * self.correlations()))

    def padded(self, extra: int) -> "VectorStrategy":
        return VectorStrategy(np.pad(self.u, ((0, 0), (0, extra))),
                              np.pad(self.v, ((0, 0), (0, extra))))


@dataclass(frozen=True)
class DualBiases:
    r: np.ndarray
    c: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "r", np.asarray(self.r, dtype=float).ravel())
        object.__setattr__(self, "c", np.asarray(self.c, dtype=float).ravel())

    @property
    def objective(self) -> float:
        return 0.5 * (float(self.r.sum()) + float(self.c.sum()))


@dataclass(frozen=True)
class SdpSolution:
    primal: VectorStrategy
    dual: DualBiases
    primal_bias: float
    dual_bias: float
    gap: float
    iterations: int = 0

    @property
    def bias(self) -> float:
        return self.primal_bias

    @property
    def value(self) -> float:
        return (1.0 + self.primal_bias) / 2.0


def block_matrix(G: np.ndarray, r, c) -> np.ndarray:
    """``[[diag(r), -G], [-G^T, diag(c)]]`` with Alice's block first."""
    G = np.asarray(G, dtype=float)
    return np.block([[np.diag(r), -G], [-G.T, np.diag(c)]])


def check_dual_feasible(game: XorGame, duals: DualBiases) -> float:
    """Smallest eigenvalue of the dual block matrix (feasible iff >= -1e-8)."""
    K = block_matrix(game.cost, duals.r, duals.c)
    return float(np.linalg.eigvalsh(K)[0])


def row_col_biases(game: XorGame, strat: VectorStrategy) -> DualBiases:
    """Row and column biases ``r_x = sum_y G[x,y]<u_x,v_y>``, ``c_y = sum_x ...``."""
    weighted = game.cost * strat.correlations()
    return DualBiases(weighted.sum(axis=1), weighted.sum(axis=0))


def _normalize_rows(W: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    norms = np.linalg.norm(W, axis=1)
    out = np.zeros_like(W)
    ok = norms >= DEGENERATE_NORM
    out[ok] = W[ok] / norms[ok, None]
    out[~ok, 0] = 1.0
    norms = np.where(ok, norms, 0.0)
    return out, norms


def _certify(G: np.ndarray, V: np.ndarray):
    """Primal from aligned ``U``, feasible duals, and the resulting gap."""
    U, r = _normalize_rows(G @ V)
    primal = float(np.sum(G * (U @ V.T)))
    _, c = _normalize_rows(G.T @ U)
    lam_min = float(np.linalg.eigvalsh(block_matrix(G, r, c))[0])
    shift = max(0.0, -lam_min)
    r_feas, c_feas = r + shift, c + shift
    dual = 0.5 * (r_feas.sum() + c_feas.sum())
    return U, DualBiases(r_feas, c_feas), primal, float(dual)


def _initial_rank(na: int, nb: int) -> int:
    m = na + nb
    p = 1
    while p * (p + 1) // 2 <= m:
        p += 1
    return max(2, min(p, m))


def solve(game: XorGame, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER,
          seed: int = 0, check_every: int = 10) -> SdpSolution:
    """Optimal bias of ``game`` with a certified duality gap ``<= tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    G = game.cost
    na, nb = G.shape
    rng = np.random.default_rng(seed)
    full = na + nb
    rank = _initial_rank(na, nb)
    budgets = [max_iter // 2, max_iter - max_iter // 2] if rank < full else [max_iter]

    V, _ = _normalize_rows(rng.standard_normal((nb, rank)))
    gap = math.inf
    total = 0
    for stage, budget in enumerate(budgets):
        if stage == 1:
            log.info("rank %d stalled at gap %.3g; raising rank to %d", rank, gap, full)
            V = np.pad(V, ((0, 0), (0, full - rank)))
            V, _ = _normalize_rows(V + 1e-3 * rng.standard_normal(V.shape))
            rank = full
        for it in range(budget):
            U, _ = _normalize_rows(G @ V)
            V, _ = _normalize_rows(G.T @ U)
            total += 1
            if it % check_every == 0 or it == budget - 1:
                U, duals, primal, dual = _certify(G, V)
                gap = dual - primal
                if gap <= tol:
                    return SdpSolution(VectorStrategy(U, V), duals, primal, dual,
                                       max(gap, 0.0), total)
    raise SdpConvergenceError(
        f"no convergence after {total} iterations (gap {gap:.3g})", gap)
