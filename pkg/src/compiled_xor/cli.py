"""Command-line entry point.  Every command prints (or writes) one JSON report.

Exit status: 0 when all checks pass, 1 when a check fails, 2 on bad input.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field

import numpy as np

from . import io
from .compiled import (MockQhe, cheat_plaintext_strategy, honest_compile, pe_apply,
                       pseudo_expectation, run_compiled)
from .games import GameError, XorGame, classical_value
from .magic import (magic_anticommutator, magic_square_game, magic_square_perfect_strategy,
                    perturbed_perfect_strategy)
from .ncpoly import bias_polynomial
from .qsim import DimensionError
from .repetition import decompose_value, xor_sum
from .rigidity import rotate_vector, selftest
from .sdp import SdpConvergenceError, solve
from .sos import CertificateError, SosCertificate, build_certificate, verify_certificate
from .synth import QuantumStrategy, product_strategy, strategy_from_vectors

DEFAULT_SEED = 0
SYNTH_TOL = 1e-6
BOUND_TOL = 1e-6


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    game: str | None = None
    seed: int = DEFAULT_SEED
    gap_tol: float = 1e-8
    out: str | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.gap_tol <= 0:
            raise InputError("tolerances must be positive")


# --------------------------------------------------------------------------
# helpers


def _xor_game(cfg: RunConfig) -> XorGame:
    game = _any_game(cfg)
    if not isinstance(game, XorGame):
        raise InputError(f"command {cfg.command!r} needs an XOR game")
    return game


def _any_game(cfg: RunConfig):
    if not cfg.game:
        raise InputError("--game is required")
    return io.load_game(cfg.game)


def _matrix(m) -> dict:
    return io.encode_complex(m)


def _sweep(text: str | None, default: list[float]) -> list[float]:
    if not text:
        return default
    try:
        a, b, k = text.split(":")
        return [float(t) for t in np.linspace(float(a), float(b), int(k))]
    except ValueError as exc:
        raise InputError(f"bad sweep {text!r}; expected a:b:k") from exc


def _honest_strategy(game) -> QuantumStrategy:
    if isinstance(game, XorGame):
        return strategy_from_vectors(solve(game).primal)
    if game.name == "msquare":
        return magic_square_perfect_strategy()
    raise InputError("honest provers are available for XOR games and the Magic Square game")


# --------------------------------------------------------------------------
# commands


def cmd_solve(cfg: RunConfig):
    game = _xor_game(cfg)
    sol = solve(game, tol=cfg.gap_tol, seed=cfg.seed)
    return {"bias": sol.bias, "value": sol.value, "dual_bias": sol.dual_bias, "gap": sol.gap,
            "r": sol.dual.r.tolist(), "c": sol.dual.c.tolist(),
            "u": sol.primal.u.tolist(), "v": sol.primal.v.tolist()}, True


def cmd_certify(cfg: RunConfig):
    game = _xor_game(cfg)
    sol = solve(game, tol=cfg.gap_tol, seed=cfg.seed)
    cert = build_certificate(game, sol)
    rep = verify_certificate(game, cert, sol.gap)
    return {"certificate": cert.to_dict(), "gap": sol.gap, "residual": rep.residual,
            "tolerance": rep.tolerance, "nice": rep.nice, "passed": rep.passed}, rep.passed


def cmd_verify_cert(cfg: RunConfig):
    game = _xor_game(cfg)
    path = cfg.options.get("cert")
    if not path:
        raise InputError("--cert is required")
    data = io.read_json(path)
    # accept a bare certificate or a full ``certify`` report
    cert = SosCertificate.from_dict(data.get("certificate", data))
    rep = verify_certificate(game, cert, float(cfg.options.get("gap") or 0.0))
    return {"beta": cert.beta, "residual": rep.residual, "tolerance": rep.tolerance,
            "nice": rep.nice, "min_weight": rep.min_weight, "passed": rep.passed}, rep.passed


def cmd_synth(cfg: RunConfig):
    game = _xor_game(cfg)
    sol = solve(game, tol=cfg.gap_tol, seed=cfg.seed)
    qs = strategy_from_vectors(sol.primal)
    qbias = qs.bias(game)
    ok = abs(qbias - sol.bias) <= SYNTH_TOL
    return {"sdp_bias": sol.bias, "vector_bias": sol.primal.bias(game), "quantum_bias": qbias,
            "dims": list(qs.dims), "state": _matrix(np.asarray(qs.state)),
            "alice": [_matrix(a) for a in qs.alice_observables()],
            "bob": [_matrix(b) for b in qs.bob_observables()], "passed": ok}, ok


def _prover(game, which: str):
    if which == "honest":
        return honest_compile(_honest_strategy(game))
    if which == "cheat-plaintext":
        return cheat_plaintext_strategy(game)
    strat = io.prover_from_dict(io.read_json(which))
    return honest_compile(strat) if isinstance(strat, QuantumStrategy) else strat


def cmd_compile_run(cfg: RunConfig):
    game = _any_game(cfg)
    qhe = MockQhe.parse(cfg.options.get("qhe") or "transparent")
    which = cfg.options.get("prover") or "honest"
    strat = _prover(game, which)
    rep = run_compiled(game, strat, qhe, key=qhe.gen(np.random.default_rng(cfg.seed)))
    out = {"prover": which if which in ("honest", "cheat-plaintext") else "file",
           "qhe": qhe.name, **rep.to_dict()}
    if isinstance(game, XorGame):
        sol = solve(game, tol=cfg.gap_tol, seed=cfg.seed)
        cert = build_certificate(game, sol)
        pe = pseudo_expectation(game, strat, qhe)
        out["pseudo_expectation"] = pe.to_dict()
        out["pseudo_expectation_bias"] = pe_apply(pe, bias_polynomial(game))
        out["sos_bound"] = cert.beta
        out["within_sos_bound"] = rep.bias <= cert.beta + BOUND_TOL
    return out, True


def cmd_repeat(cfg: RunConfig):
    game = _xor_game(cfg)
    n = int(cfg.options.get("n") or 2)
    games = [game] * n
    mode = cfg.options.get("mode") or "and"
    if mode == "sum":
        subset_text = cfg.options.get("subset")
        M = list(range(n)) if not subset_text else [int(t) for t in subset_text.split(",") if t]
        summed = xor_sum(games, M)
        bias = solve(summed, tol=cfg.gap_tol, seed=cfg.seed).bias
        single = solve(game, tol=cfg.gap_tol, seed=cfg.seed).bias
        expected = single ** len(M)
        ok = abs(bias - expected) <= 1e-5
        return {"mode": "sum", "subset": M, "bias": bias, "product_of_biases": expected,
                "passed": ok}, ok
    if mode != "and":
        raise InputError(f"unknown mode {mode!r}")
    base = _honest_strategy(game)
    strat = honest_compile(product_strategy([base] * n))
    rep = decompose_value(games, strat, MockQhe())
    optimum = solve(game, tol=cfg.gap_tol, seed=cfg.seed).value ** n
    out = {"mode": "and", "n": n, "optimum_product": optimum, **rep.to_dict()}
    return out, rep.passed


def cmd_selftest(cfg: RunConfig):
    game = _xor_game(cfg)
    sol = solve(game, tol=cfg.gap_tol, seed=cfg.seed)
    chsh_pair = game.name == "chsh"
    if cfg.options.get("prover"):
        strat = _prover(game, cfg.options["prover"])
        rep = selftest(game, strat, sol, chsh_pair=chsh_pair)
        return rep.to_dict(), rep.passed
    rows = []
    for theta in _sweep(cfg.options.get("theta_sweep"), [0.0, 0.05, 0.1]):
        vs = rotate_vector(sol.primal, 0, theta, toward=1 % game.nb if game.nb > 1 else None)
        strat = honest_compile(strategy_from_vectors(vs))
        rows.append({"theta": theta, **selftest(game, strat, sol, chsh_pair=chsh_pair).to_dict()})
    ok = all(r["passed"] for r in rows)
    return {"sweep": rows, "passed": ok}, ok


def cmd_magic(cfg: RunConfig):
    check = cfg.options.get("check") or "value"
    game = magic_square_game()
    if check == "value":
        value = run_compiled(game, honest_compile(magic_square_perfect_strategy()), MockQhe()).value
        classical = classical_value(game, exact=True)
        ok = abs(value - 1.0) <= 1e-9
        return {"value": value, "classical_value": str(classical), "passed": ok}, ok
    if check in ("anticommutator", "lemmas"):
        rows = []
        for theta in _sweep(cfg.options.get("theta_sweep"), [0.0, 0.05, 0.1]):
            rep = magic_anticommutator(honest_compile(perturbed_perfect_strategy(theta)))
            d = rep.to_dict()
            if check == "anticommutator":
                d = {k: d[k] for k in ("value", "epsilon", "anticommutator", "anticommutator_bound")}
                d["passed"] = rep.checks["anticommutator"]
            rows.append({"theta": theta, **d})
        ok = all(r["passed"] for r in rows)
        return {"check": check, "sweep": rows, "passed": ok}, ok
    raise InputError(f"unknown check {check!r}")


COMMANDS = {
    "solve": cmd_solve,
    "certify": cmd_certify,
    "verify-cert": cmd_verify_cert,
    "synth": cmd_synth,
    "compile-run": cmd_compile_run,
    "repeat": cmd_repeat,
    "selftest": cmd_selftest,
    "magic": cmd_magic,
}


def dispatch(cfg: RunConfig) -> tuple[int, dict]:
    handler = COMMANDS[cfg.command]
    try:
        report, ok = handler(cfg)
    except (InputError, GameError, DimensionError, CertificateError, json.JSONDecodeError,
            OSError, ValueError) as exc:
        return 2, {"command": cfg.command, "error": str(exc)}
    except SdpConvergenceError as exc:
        return 1, {"command": cfg.command, "error": str(exc), "gap": exc.gap}
    return (0 if ok else 1), {"command": cfg.command, **report}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="compiled-xor", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, game=True):
        if game:
            p.add_argument("--game", help="chsh | msquare | random:MxN[:seed] | path.json")
        p.add_argument("--seed", type=int, default=DEFAULT_SEED)
        p.add_argument("--gap-tol", type=float, default=1e-8)
        p.add_argument("--out", help="write the report here instead of stdout")
        return p

    common(sub.add_parser("solve", help="optimal bias via the SDP"))
    common(sub.add_parser("certify", help="build and check a nice SOS certificate"))
    p = common(sub.add_parser("verify-cert", help="check a certificate file"))
    p.add_argument("--cert")
    p.add_argument("--gap", type=float, default=0.0)
    common(sub.add_parser("synth", help="quantum strategy from the SDP optimum"))
    p = common(sub.add_parser("compile-run", help="play the compiled game"))
    p.add_argument("--prover", default="honest", help="honest | cheat-plaintext | prover.json")
    p.add_argument("--qhe", default="transparent", help="transparent | multi-cipher:k")
    p = common(sub.add_parser("repeat", help="parallel repetition and XOR sums"))
    p.add_argument("--n", type=int, default=2)
    p.add_argument("--mode", choices=["and", "sum"], default="and")
    p.add_argument("--subset")
    p = common(sub.add_parser("selftest", help="self-testing residuals"))
    p.add_argument("--prover")
    p.add_argument("--theta-sweep")
    p = common(sub.add_parser("magic", help="Magic Square checks"), game=False)
    p.add_argument("--check", choices=["value", "anticommutator", "lemmas"], default="value")
    p.add_argument("--theta-sweep")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    base = {"command", "game", "seed", "gap_tol", "out", "verbose"}
    options = {k: v for k, v in vars(args).items() if k not in base}
    try:
        cfg = RunConfig(args.command, getattr(args, "game", None), args.seed, args.gap_tol,
                        args.out, options)
    except InputError as exc:
        print(io.dumps({"command": args.command, "error": str(exc)}), end="")
        return 2
    status, report = dispatch(cfg)
    if cfg.out and status != 2:
        io.write_json(cfg.out, report)
    else:
        print(io.dumps(report), end="")
    return status


if __name__ == "__main__":
    sys.exit(main())
