"""Self-testing residuals for compiled XOR games and the Jensen chain.

Every quantity is an exact expectation over the ciphertext support and the
measurement branches ``psi_{c alpha}`` of Alice's question ``x``.  Bounds are
one-sided and scale with the measured value deficit ``eps = w* - w``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .compiled import CompiledStrategy, MockQhe, run_compiled
from .games import XorGame
from .sdp import DualBiases, SdpSolution, VectorStrategy

ROW_THRESHOLD = 1e-10
BOUND_SLACK = 1e-9
JENSEN_TOL = 1e-12


def _norm2(v: np.ndarray) -> float:
    return float(np.vdot(v, v).real)


def _row_operator(game: XorGame, strat: CompiledStrategy, x: int) -> np.ndarray:
    B = strat.bob_observables()
    return sum(game.cost[x, y] * B[y] for y in range(game.nb))


def _check_row(duals: DualBiases, x: int) -> float:
    r = float(duals.r[x])
    if r <= ROW_THRESHOLD:
        raise ValueError(f"row bias r_{x} = {r:.3g} is below threshold")
    return r


def _sign(answer) -> float:
    if answer not in (0, 1):
        raise ValueError(f"answer {answer!r} is not a bit")
    return -1.0 if answer else 1.0


def selftest_row_residual(game: XorGame, strat: CompiledStrategy, duals: DualBiases, x: int,
                          qhe: MockQhe | None = None, key: int = 0) -> float:
    """``E_c sum_alpha ||(r_x - (-1)^a sum_y G[x,y] B_y) psi_{c alpha}||^2``."""
    qhe = qhe or MockQhe()
    r = _check_row(duals, x)
    R = _row_operator(game, strat, x)
    total = 0.0
    for br in strat.branches(qhe, key, x):
        v = br.vector
        total += br.weight * _norm2(r * v - _sign(br.answer) * (R @ v))
    return total


def selftest_solution_algebra(game: XorGame, strat: CompiledStrategy, duals: DualBiases, x: int,
                              qhe: MockQhe | None = None, key: int = 0) -> float:
    """``E_c sum_alpha ||(r_x^2 - (sum_y G[x,y] B_y)^2) psi_{c alpha}||^2``."""
    qhe = qhe or MockQhe()
    r = _check_row(duals, x)
    R = _row_operator(game, strat, x)
    op = r * r * np.eye(strat.dim) - R @ R
    return sum(br.weight * _norm2(op @ br.vector) for br in strat.branches(qhe, key, x))


def bob_anticommutator(strat: CompiledStrategy, x: int, pair: tuple[int, int] = (0, 1),
                       qhe: MockQhe | None = None, key: int = 0) -> float:
    """``E_c sum_alpha ||(B_j B_k + B_k B_j) psi_{c alpha}||^2`` over ciphertexts of ``x``."""
    qhe = qhe or MockQhe()
    B = strat.bob_observables()
    j, k = pair
    op = B[j] @ B[k] + B[k] @ B[j]
    return sum(br.weight * _norm2(op @ br.vector) for br in strat.branches(qhe, key, x))


def jensen_check(game: XorGame, strat: CompiledStrategy, x: int,
                 qhe: MockQhe | None = None, key: int = 0) -> tuple[float, float]:
    """``(|E sum (-1)^a <R>|^2, E sum <R^2>)`` for the row operator ``R`` of ``x``."""
    qhe = qhe or MockQhe()
    R = _row_operator(game, strat, x)
    first = 0.0
    second = 0.0
    for br in strat.branches(qhe, key, x):
        v = br.vector
        Rv = R @ v
        first += br.weight * _sign(br.answer) * float(np.vdot(v, Rv).real)
        second += br.weight * _norm2(Rv)
    return first * first, second


# --------------------------------------------------------------------------
# bounds


def row_residual_bound(game: XorGame, beta_star: float, eps: float) -> float:
    """``2((|I_A| + |I_B|) beta* + 1) eps'`` with ``eps' = 2 eps``."""
    return 2.0 * ((game.na + game.nb) * beta_star + 1.0) * 2.0 * max(eps, 0.0)


def solution_algebra_constant(game: XorGame, beta_star: float, r_x: float, x: int) -> float:
    """``4((|I_A| + |I_B|) beta* + 1)(r_x + (sum_y |G[x,y]|)^2)``."""
    row_mass = float(np.abs(game.cost[x]).sum())
    return 4.0 * ((game.na + game.nb) * beta_star + 1.0) * (r_x + row_mass**2)


def solution_algebra_bound(game: XorGame, beta_star: float, r_x: float, x: int, eps: float) -> float:
    return solution_algebra_constant(game, beta_star, r_x, x) * 2.0 * max(eps, 0.0)


CHSH_ANTICOMMUTATOR_CONSTANT = 16.0 * (2.0 * np.sqrt(2.0) + 1.0) * (np.sqrt(2.0) + 1.0)


def chsh_anticommutator_bound(eps: float) -> float:
    """``16 (2 sqrt2 + 1)(sqrt2 + 1) * 2 eps``."""
    return CHSH_ANTICOMMUTATOR_CONSTANT * 2.0 * max(eps, 0.0)


def row_bias_robustness(game: XorGame, vs: VectorStrategy, sol: SdpSolution) -> tuple[np.ndarray, float]:
    """Per-``x`` ``(r_x - sum_y G[x,y] <u_x, v_y>)^2`` and the bound ``2(|I_A|+|I_B|) beta* eps``.

    ``eps`` is the value deficit ``(beta* - beta) / 2`` of the vector strategy.
    """
    row = (game.cost * vs.correlations()).sum(axis=1)
    lhs = (sol.dual.r - row) ** 2
    eps = max((sol.bias - vs.bias(game)) / 2.0, 0.0)
    return lhs, 2.0 * (game.na + game.nb) * sol.bias * eps


def rotate_vector(vs: VectorStrategy, y: int, theta: float, toward: int | None = None) -> VectorStrategy:
    """Rotate Bob's ``v_y`` by ``theta`` in a fixed plane.

    The plane is spanned by ``v_y`` and the part of ``v_toward`` orthogonal
    to it; with ``toward=None`` (or a parallel partner) a fresh coordinate
    is appended instead.
    """
    padded = vs.padded(1)
    v = padded.v.copy()
    direction = np.zeros(v.shape[1])
    direction[-1] = 1.0
    if toward is not None:
        w = v[toward] - np.dot(v[toward], v[y]) * v[y]
        if np.linalg.norm(w) > 1e-8:
            direction = w / np.linalg.norm(w)
    v[y] = np.cos(theta) * v[y] + np.sin(theta) * direction
    return VectorStrategy(padded.u, v)


# --------------------------------------------------------------------------
# reports


@dataclass
class SelfTestReport:
    value: float
    optimum: float
    epsilon: float
    row_residuals: list[float]
    row_bounds: list[float]
    algebra_residuals: list[float]
    algebra_bounds: list[float]
    jensen: list[tuple[float, float]]
    extras: dict = field(default_factory=dict)

    @property
    def checks(self) -> dict[str, bool]:
        return {
            "row_relation": all(r <= b + BOUND_SLACK for r, b in zip(self.row_residuals, self.row_bounds)),
            "solution_algebra": all(r <= b + BOUND_SLACK
                                    for r, b in zip(self.algebra_residuals, self.algebra_bounds)),
            "jensen": all(lhs <= rhs + JENSEN_TOL for lhs, rhs in self.jensen),
            **{k: v["residual"] <= v["bound"] + BOUND_SLACK for k, v in self.extras.items()},
        }

    @property
    def passed(self) -> bool:
        return all(self.checks.values())

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "optimum": self.optimum,
            "epsilon": self.epsilon,
            "row_residuals": self.row_residuals,
            "row_bounds": self.row_bounds,
            "algebra_residuals": self.algebra_residuals,
            "algebra_bounds": self.algebra_bounds,
            "jensen": [list(p) for p in self.jensen],
            "extras": self.extras,
            "checks": self.checks,
            "passed": self.passed,
        }


def selftest(game: XorGame, strat: CompiledStrategy, sol: SdpSolution,
             qhe: MockQhe | None = None, key: int = 0, chsh_pair: bool = False) -> SelfTestReport:
    """Evaluate every XOR self-testing quantity for ``strat`` against the optimum ``sol``."""
    qhe = qhe or MockQhe()
    value = run_compiled(game, strat, qhe, key).value
    eps = max(sol.value - value, 0.0)
    beta = sol.bias
    rows, row_b, alg, alg_b, jen = [], [], [], [], []
    for x in range(game.na):
        rows.append(selftest_row_residual(game, strat, sol.dual, x, qhe, key))
        row_b.append(row_residual_bound(game, beta, eps))
        alg.append(selftest_solution_algebra(game, strat, sol.dual, x, qhe, key))
        alg_b.append(solution_algebra_bound(game, beta, float(sol.dual.r[x]), x, eps))
        jen.append(jensen_check(game, strat, x, qhe, key))
    extras = {}
    if chsh_pair:
        worst = max(bob_anticommutator(strat, x, (0, 1), qhe, key) for x in range(game.na))
        extras["chsh_anticommutator"] = {"residual": worst, "bound": chsh_anticommutator_bound(eps)}
    return SelfTestReport(value, sol.value, eps, rows, row_b, alg, alg_b, jen, extras)
