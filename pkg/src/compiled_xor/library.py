"""Built-in games: CHSH, the Magic Square game and seeded random XOR games."""

from __future__ import annotations

import re

import numpy as np

from .games import GameError, XorGame, make_xor_game


def chsh() -> XorGame:
    """``G[x, y] = (-1)**(x*y) / 4``."""
    g = np.array([[0, 0], [0, 1]])
    return make_xor_game(g, np.full((2, 2), 0.25), name="chsh")


def trivial_game() -> XorGame:
    return XorGame(np.ones((1, 1)), name="trivial")


def random_xor_game(na: int, nb: int, seed: int = 0) -> XorGame:
    """Uniformly random signs, Dirichlet-ish positive weights."""
    if na < 1 or nb < 1:
        raise GameError("random games need at least one question per party")
    rng = np.random.default_rng(seed)
    pi = rng.random((na, nb)) + 0.05
    pi /= pi.sum()
    g = rng.integers(0, 2, size=(na, nb))
    return make_xor_game(g, pi, name=f"random:{na}x{nb}:{seed}")


def game_by_name(name: str):
    """``chsh``, ``msquare`` or ``random:MxN[:seed]``."""
    if name == "chsh":
        return chsh()
    if name == "msquare":
        from .magic import magic_square_game
        return magic_square_game()
    m = re.fullmatch(r"random:(\d+)x(\d+)(?::(\d+))?", name)
    if m:
        return random_xor_game(int(m.group(1)), int(m.group(2)), int(m.group(3) or 0))
    raise GameError(f"unknown built-in game {name!r}")
