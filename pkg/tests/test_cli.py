import json

import numpy as np
import pytest

from compiled_xor import io
from compiled_xor.cli import InputError, RunConfig, dispatch, main
from compiled_xor.compiled import MockQhe, random_compiled_strategy, run_compiled
from compiled_xor.games import GameError
from compiled_xor.library import chsh, random_xor_game
from compiled_xor.magic import magic_square_game


def run(capsys, *argv):
    code = main(list(argv))
    return code, json.loads(capsys.readouterr().out)


# --------------------------------------------------------------------------
# JSON encodings


@pytest.mark.parametrize("game", [chsh(), random_xor_game(3, 2, 9), magic_square_game()])
def test_game_roundtrip(game):
    back = io.game_from_dict(json.loads(io.dumps(io.game_to_dict(game))))
    assert np.array_equal(back.pi, game.pi)


@pytest.mark.parametrize("d", [{"kind": "xor"}, {"kind": "tensor"},
                               {"kind": "nonlocal", "na": 1, "nb": 1, "oa": 2, "ob": 2,
                                "pi": [[1.0]], "V": [[[1, 0]]]}])
def test_game_from_dict_rejects(d):
    with pytest.raises(GameError):
        io.game_from_dict(d)


def test_prover_roundtrip_compiled(rng):
    qhe = MockQhe(2)
    strat = random_compiled_strategy(2, 2, 2, 2, 4, rng, qhe)
    back = io.prover_from_dict(json.loads(io.dumps(io.prover_to_dict(strat))))
    assert run_compiled(chsh(), back, qhe).value == pytest.approx(run_compiled(chsh(), strat, qhe).value, abs=1e-14)


def test_prover_roundtrip_quantum(chsh_quantum):
    back = io.prover_from_dict(io.prover_to_dict(chsh_quantum))
    np.testing.assert_allclose(back.correlations(), chsh_quantum.correlations(), atol=1e-14)


def test_prover_from_dict_rejects():
    with pytest.raises(ValueError):
        io.prover_from_dict({"kind": "quantum"})


def test_write_json_atomic(tmp_path):
    path = tmp_path / "r.json"
    io.write_json(path, {"b": np.float64(1.5), "a": np.bool_(True), "m": np.eye(2)})
    assert io.read_json(path) == {"a": True, "b": 1.5, "m": [[1.0, 0.0], [0.0, 1.0]]}
    assert [p.name for p in tmp_path.iterdir()] == ["r.json"]


def test_load_game_file_and_name(tmp_path):
    path = tmp_path / "g.json"
    io.write_json(path, io.game_to_dict(chsh()))
    assert np.array_equal(io.load_game(str(path)).cost, chsh().cost)
    assert io.load_game("chsh").name == "chsh"


# --------------------------------------------------------------------------
# commands


def test_solve(capsys):
    code, rep = run(capsys, "solve", "--game", "chsh")
    assert code == 0
    assert rep["bias"] == pytest.approx(0.70710678, abs=1e-8)
    assert rep["value"] == pytest.approx(0.85355339, abs=1e-8)
    assert {"bias", "value", "r", "c", "gap", "u", "v"} <= set(rep)


def test_certify_then_verify(tmp_path, capsys):
    cert_path = tmp_path / "c.json"
    assert main(["certify", "--game", "chsh", "--out", str(cert_path)]) == 0
    code, rep = run(capsys, "verify-cert", "--game", "chsh", "--cert", str(cert_path))
    assert code == 0 and rep["passed"]

    data = io.read_json(cert_path)["certificate"]
    data["a_terms"][0]["weight"] += 0.1
    io.write_json(cert_path, data)
    code, rep = run(capsys, "verify-cert", "--game", "chsh", "--cert", str(cert_path))
    assert code == 1 and not rep["passed"]


def test_synth(capsys):
    code, rep = run(capsys, "synth", "--game", "chsh")
    assert code == 0
    assert rep["quantum_bias"] == pytest.approx(rep["sdp_bias"], abs=1e-6)
    assert rep["dims"] == [2, 2]


@pytest.mark.parametrize("prover, value", [("honest", (2 + np.sqrt(2)) / 4), ("cheat-plaintext", 1.0)])
def test_compile_run(capsys, prover, value):
    code, rep = run(capsys, "compile-run", "--game", "chsh", "--prover", prover, "--qhe", "multi-cipher:2")
    assert code == 0
    assert rep["value"] == pytest.approx(value, abs=1e-9)
    assert rep["within_sos_bound"] is (prover == "honest")
    assert "pseudo_expectation" in rep


def test_compile_run_prover_file(tmp_path, capsys, rng):
    path = tmp_path / "p.json"
    strat = random_compiled_strategy(2, 2, 2, 2, 4, rng)
    io.write_json(path, io.prover_to_dict(strat))
    code, rep = run(capsys, "compile-run", "--game", "chsh", "--prover", str(path))
    assert code == 0
    assert rep["value"] == pytest.approx(run_compiled(chsh(), strat, MockQhe()).value, abs=1e-12)


def test_compile_run_magic(capsys):
    code, rep = run(capsys, "compile-run", "--game", "msquare")
    assert code == 0 and rep["value"] == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("argv, key", [
    (["repeat", "--game", "chsh", "--n", "2"], "residual"),
    (["repeat", "--game", "chsh", "--n", "2", "--mode", "sum", "--subset", "0,1"], "bias"),
])
def test_repeat(capsys, argv, key):
    code, rep = run(capsys, *argv)
    assert code == 0 and rep["passed"]
    assert key in rep


def test_selftest_sweep(capsys):
    code, rep = run(capsys, "selftest", "--game", "chsh", "--theta-sweep", "0:0.2:3")
    assert code == 0
    assert [r["theta"] for r in rep["sweep"]] == pytest.approx([0.0, 0.1, 0.2])


def test_selftest_prover(capsys):
    code, rep = run(capsys, "selftest", "--game", "chsh", "--prover", "honest")
    assert code == 0 and rep["passed"]


@pytest.mark.parametrize("check", ["value", "anticommutator", "lemmas"])
def test_magic(capsys, check):
    code, rep = run(capsys, "magic", "--check", check)
    assert code == 0 and rep["passed"]
    if check == "value":
        assert rep["value"] == pytest.approx(1.0, abs=1e-9)
        assert rep["classical_value"] == "17/18"


@pytest.mark.parametrize("argv", [
    ["solve", "--game", "nope"],
    ["solve", "--game", "msquare"],
    ["verify-cert", "--game", "chsh"],
    ["compile-run", "--game", "chsh", "--qhe", "opaque"],
])
def test_input_errors_exit_two(capsys, argv):
    code, rep = run(capsys, *argv)
    assert code == 2
    assert "error" in rep


def test_malformed_json_exit_two(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    code, _ = run(capsys, "solve", "--game", str(path))
    assert code == 2


def test_run_config_rejects_bad_tolerance():
    with pytest.raises(InputError):
        RunConfig("solve", "chsh", gap_tol=0.0)


@pytest.mark.parametrize("argv", [["solve", "--game", "random:3x3:4"], ["certify", "--game", "chsh"],
                                  ["magic", "--check", "lemmas"]])
def test_determinism(tmp_path, argv):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    main(argv + ["--out", str(a)])
    main(argv + ["--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


@pytest.mark.parametrize("argv", [["solve", "--game", "chsh"], ["compile-run", "--game", "chsh"],
                                  ["repeat", "--game", "chsh"], ["synth", "--game", "chsh"]])
def test_report_json_roundtrip(tmp_path, argv):
    path = tmp_path / "r.json"
    main(argv + ["--out", str(path)])
    text = path.read_text()
    assert io.dumps(json.loads(text)) == text


def test_dispatch_returns_report():
    code, rep = dispatch(RunConfig("solve", "chsh"))
    assert code == 0 and rep["command"] == "solve"
