"""Real polynomials in order-2 observables ``a_x``, ``b_y``.

Relations: ``a_x**2 = b_y**2 = 1`` and ``a_x b_y = b_y a_x``.  Letters of the
same party do not commute, so within a party words are reduced words of a
free product of copies of Z/2.  Every word has the canonical form
``(a-part, b-part)``.
"""

from __future__ import annotations

import re
from typing import Iterable, Mapping, NamedTuple

import numpy as np

ZERO_TOL = 1e-12


class Word(NamedTuple):
    a: tuple[int, ...] = ()
    b: tuple[int, ...] = ()

    def __len__(self):
        return len(self.a) + len(self.b)

    def __str__(self):
        left = ".".join(f"a{i}" for i in self.a) or "1"
        right = ".".join(f"b{j}" for j in self.b) or "1"
        return f"{left} | {right}"


IDENTITY = Word()


def _reduce(letters: Iterable[int]) -> tuple[int, ...]:
    out: list[int] = []
    for g in letters:
        if out and out[-1] == g:
            out.pop()
        else:
            out.append(g)
    return tuple(out)


def normal_form(letters: Iterable[tuple[str, int]]) -> Word:
    """Canonical word of a raw letter sequence such as ``[("a", 0), ("b", 1)]``."""
    a_part, b_part = [], []
    for party, idx in letters:
        if party == "a":
            a_part.append(int(idx))
        elif party == "b":
            b_part.append(int(idx))
        else:
            raise ValueError(f"unknown party {party!r}")
    return Word(_reduce(a_part), _reduce(b_part))


def word_mul(u: Word, v: Word) -> Word:
    return Word(_reduce(u.a + v.a), _reduce(u.b + v.b))


class NcPolynomial:
    """Immutable real linear combination of canonical words."""

    __slots__ = ("_terms",)

    def __init__(self, terms: Mapping[Word, float] | None = None, tol: float = ZERO_TOL):
        clean: dict[Word, float] = {}
        for w, c in (terms or {}).items():
            if not isinstance(w, Word):
                w = Word(*w)
            clean[w] = clean.get(w, 0.0) + float(c)
        self._terms = {w: c for w, c in clean.items() if abs(c) > tol}

    @classmethod
    def constant(cls, c: float) -> "NcPolynomial":
        return cls({IDENTITY: c})

    @classmethod
    def a(cls, x: int) -> "NcPolynomial":
        return cls({Word((x,), ()): 1.0})

    @classmethod
    def b(cls, y: int) -> "NcPolynomial":
        return cls({Word((), (y,)): 1.0})

    @classmethod
    def b_linear(cls, coeffs) -> "NcPolynomial":
        """``sum_y coeffs[y] * b_y``."""
        return cls({Word((), (y,)): c for y, c in enumerate(coeffs)})

    @property
    def terms(self) -> dict[Word, float]:
        return dict(self._terms)

    def coeff(self, w: Word) -> float:
        return self._terms.get(w, 0.0)

    def degree(self) -> int:
        return max((len(w) for w in self._terms), default=0)

    def max_abs_coeff(self) -> float:
        return max((abs(c) for c in self._terms.values()), default=0.0)

    def is_zero(self) -> bool:
        return not self._terms

    def a_letters(self) -> set[int]:
        return {x for w in self._terms for x in w.a}

    def b_letters(self) -> set[int]:
        return {y for w in self._terms for y in w.b}

    def __add__(self, other):
        other = _coerce(other)
        out = dict(self._terms)
        for w, c in other._terms.items():
            out[w] = out.get(w, 0.0) + c
        return NcPolynomial(out)

    __radd__ = __add__

    def __neg__(self):
        return NcPolynomial({w: -c for w, c in self._terms.items()})

    def __sub__(self, other):
        return self + (-_coerce(other))

    def __rsub__(self, other):
        return _coerce(other) - self

    def __mul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return NcPolynomial({w: c * float(other) for w, c in self._terms.items()})
        other = _coerce(other)
        out: dict[Word, float] = {}
        for u, cu in self._terms.items():
            for v, cv in other._terms.items():
                w = word_mul(u, v)
                out[w] = out.get(w, 0.0) + cu * cv
        return NcPolynomial(out)

    def __rmul__(self, other):
        if isinstance(other, (int, float, np.floating, np.integer)):
            return self * other
        return _coerce(other) * self

    def __truediv__(self, s):
        return self * (1.0 / s)

    def __pow__(self, n: int):
        out = NcPolynomial.constant(1.0)
        for _ in range(n):
            out = out * self
        return out

    def __eq__(self, other):
        if not isinstance(other, NcPolynomial):
            return NotImplemented
        return self._terms == other._terms

    def close_to(self, other, tol: float = 1e-12) -> bool:
        return (self - other).max_abs_coeff() <= tol

    def __repr__(self):
        return f"NcPolynomial({render(self)!r})"

    def __str__(self):
        return render(self)


def _coerce(p) -> NcPolynomial:
    if isinstance(p, NcPolynomial):
        return p
    if isinstance(p, (int, float, np.floating, np.integer)):
        return NcPolynomial.constant(float(p))
    raise TypeError(f"cannot use {type(p).__name__} as a polynomial")


def _sort_key(w: Word):
    return (len(w), w.a, w.b)


def render(p: NcPolynomial) -> str:
    """One ``c * a0.a1 | b0.b1`` chunk per term, joined by `` + ``."""
    if p.is_zero():
        return "0 * 1 | 1"
    return " + ".join(f"{c!r} * {w}" for w, c in sorted(p.terms.items(), key=lambda t: _sort_key(t[0])))


_TERM = re.compile(r"^\s*(\S+)\s*\*\s*(\S+)\s*\|\s*(\S+)\s*$")


def _parse_part(text: str, party: str) -> tuple[int, ...]:
    if text == "1":
        return ()
    out = []
    for tok in text.split("."):
        if not tok.startswith(party) or not tok[1:].isdigit():
            raise ValueError(f"bad {party}-letter {tok!r}")
        out.append(int(tok[1:]))
    return tuple(out)


def parse(text: str) -> NcPolynomial:
    """Inverse of :func:`render`.  Words are normalized while parsing."""
    terms: dict[Word, float] = {}
    for chunk in text.split(" + "):
        m = _TERM.match(chunk)
        if not m:
            raise ValueError(f"cannot parse term {chunk!r}")
        c = float(m.group(1))
        w = Word(_reduce(_parse_part(m.group(2), "a")), _reduce(_parse_part(m.group(3), "b")))
        terms[w] = terms.get(w, 0.0) + c
    return NcPolynomial(terms)


def bias_polynomial(game) -> NcPolynomial:
    """``h_G = sum_{x,y} G[x, y] a_x b_y``."""
    G = game.cost
    return NcPolynomial({Word((x,), (y,)): G[x, y]
                         for x in range(G.shape[0]) for y in range(G.shape[1])})


def coeff(p: NcPolynomial, w: Word) -> float:
    return p.coeff(w)
