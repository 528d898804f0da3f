"""JSON encodings for games, certificates and provers."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .compiled import AliceMeasurement, CompiledStrategy
from .games import GameError, NonlocalGame, XorGame, make_xor_game
from .library import game_by_name
from .qsim import Pvm, StateVector
from .synth import QuantumStrategy


def encode_complex(m) -> dict:
    m = np.asarray(m, dtype=complex)
    return {"re": m.real.tolist(), "im": m.imag.tolist()}


def decode_complex(d) -> np.ndarray:
    if isinstance(d, dict):
        try:
            return np.asarray(d["re"], dtype=float) + 1j * np.asarray(d.get("im", 0.0), dtype=float)
        except KeyError as exc:
            raise ValueError("complex arrays need an 're' part") from exc
    return np.asarray(d, dtype=complex)


# --------------------------------------------------------------------------
# games


def game_to_dict(game) -> dict:
    if isinstance(game, XorGame):
        return {"kind": "xor", "g": game.g.tolist(), "pi": game.pi.tolist()}
    return {"kind": "nonlocal", "na": game.na, "nb": game.nb, "oa": game.oa, "ob": game.ob,
            "pi": game.pi.tolist(), "V": game.predicate.tolist()}


def game_from_dict(d: dict, name: str = ""):
    try:
        kind = d["kind"]
        if kind == "xor":
            return make_xor_game(d["g"], d["pi"], name=name)
        if kind == "nonlocal":
            pred = np.asarray(d["V"], dtype=np.int8)
            shape = (d["na"], d["nb"], d["oa"], d["ob"])
            if pred.shape != tuple(shape):
                raise GameError(f"predicate shape {pred.shape} does not match {shape}")
            return NonlocalGame(d["pi"], pred, name=name)
    except (KeyError, TypeError) as exc:
        raise GameError(f"malformed game JSON: {exc}") from exc
    raise GameError(f"unknown game kind {kind!r}")


def load_game(ref: str):
    """A built-in game name or a path to a game JSON file."""
    path = Path(ref)
    if path.suffix == ".json" or path.exists():
        return game_from_dict(read_json(path), name=path.stem)
    return game_by_name(ref)


# --------------------------------------------------------------------------
# provers


def _pvm_to_list(p: Pvm) -> list:
    return [encode_complex(P) for P in p.projectors]


def _pvm_from_list(items) -> Pvm:
    return Pvm(tuple(decode_complex(P) for P in items))


def _measurement_to_dict(m: AliceMeasurement) -> dict:
    return {"labels": list(m.labels), "projectors": _pvm_to_list(m.pvm),
            "unitaries": None if m.unitaries is None else [encode_complex(u) for u in m.unitaries]}


def _measurement_from_dict(d: dict) -> AliceMeasurement:
    us = d.get("unitaries")
    return AliceMeasurement(_pvm_from_list(d["projectors"]), tuple(d["labels"]),
                            None if us is None else tuple(decode_complex(u) for u in us))


def prover_to_dict(strat) -> dict:
    if isinstance(strat, QuantumStrategy):
        return {"kind": "quantum", "state": encode_complex(np.asarray(strat.state)),
                "alice": [_pvm_to_list(p) for p in strat.alice],
                "bob": [_pvm_to_list(p) for p in strat.bob]}
    if strat.answer_circuit is not None:
        raise ValueError("strategies with an answer circuit cannot be serialized")
    return {
        "kind": "compiled",
        "state": encode_complex(np.asarray(strat.state)),
        "alice": [dict(x=x, **_measurement_to_dict(m)) for x, m in sorted(strat.alice.items())],
        "overrides": [dict(nonce=n, x=x, **_measurement_to_dict(m))
                      for (n, x), m in sorted(strat.overrides.items())],
        "bob": [_pvm_to_list(p) for p in strat.bob],
    }


def prover_from_dict(d: dict):
    """A :class:`CompiledStrategy` or :class:`QuantumStrategy` from its JSON form."""
    try:
        kind = d["kind"]
        state = StateVector(decode_complex(d["state"]))
        bob = tuple(_pvm_from_list(p) for p in d["bob"])
        if kind == "quantum":
            return QuantumStrategy(state, tuple(_pvm_from_list(p) for p in d["alice"]), bob)
        if kind == "compiled":
            alice = {int(e["x"]): _measurement_from_dict(e) for e in d["alice"]}
            overrides = {(int(e["nonce"]), int(e["x"])): _measurement_from_dict(e)
                         for e in d.get("overrides", [])}
            return CompiledStrategy(state, alice, bob, overrides)
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed prover JSON: {exc}") from exc
    raise ValueError(f"unknown prover kind {kind!r}")


# --------------------------------------------------------------------------
# files


def _to_builtin(o):
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot encode {type(o).__name__} as JSON")


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False, default=_to_builtin) + "\n"


def read_json(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def write_json(path, obj) -> None:
    """Write via a temporary file and an atomic rename."""
    path = Path(path)
    text = dumps(obj)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
