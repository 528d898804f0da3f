"""Nice sum-of-squares certificates for XOR games.

From feasible dual row/column biases ``r, c`` the identity

    beta * 1 - h_G = sum_x r_x/2 (a_x - bhat_x)^2 + sum_y lam_y/2 (sum_w v_yw b_w)^2

holds with ``beta = (sum r + sum c) / 2``, ``bhat_x = sum_y G[x, y] b_y / r_x``
and ``M = diag(c) - G^T diag(r)^-1 G = sum_y lam_y v_y v_y^T``.  Every square is
either ``a_x`` minus a linear form in Bob letters, or a linear form in Bob
letters only.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .games import XorGame
from .ncpoly import NcPolynomial, bias_polynomial
from .sdp import SdpSolution

CLIP_TOL = 1e-8
WEIGHT_TOL = 1e-9
ROW_TOL = 1e-10
MAX_INPUT_GAP = 1e-6
BASE_RESIDUAL_TOL = 1e-6


class CertificateError(ValueError):
    pass


@dataclass(frozen=True)
class ATerm:
    """``weight * (a_x - sum_y bhat[y] b_y)**2``."""

    x: int
    weight: float
    bhat: np.ndarray

    def base(self) -> NcPolynomial:
        return NcPolynomial.a(self.x) - NcPolynomial.b_linear(self.bhat)


@dataclass(frozen=True)
class BTerm:
    """``weight * (sum_w v[w] b_w)**2``."""

    weight: float
    v: np.ndarray

    def base(self) -> NcPolynomial:
        return NcPolynomial.b_linear(self.v)


@dataclass(frozen=True)
class SosCertificate:
    beta: float
    a_terms: tuple[ATerm, ...]
    b_terms: tuple[BTerm, ...]
    min_eigenvalue: float = field(default=0.0, compare=False)
    symmetry_error: float = field(default=0.0, compare=False)

    def squares(self):
        for t in self.a_terms:
            yield "a-minus-bhat", t.weight, t.base()
        for t in self.b_terms:
            yield "b-linear", t.weight, t.base()

    def expand(self) -> NcPolynomial:
        total = NcPolynomial()
        for _, w, base in self.squares():
            total = total + w * (base * base)
        return total

    @property
    def lambdas(self) -> np.ndarray:
        return np.array([2.0 * t.weight for t in self.b_terms])

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "a_terms": [{"x": t.x, "weight": t.weight, "bhat": [float(v) for v in t.bhat]}
                        for t in self.a_terms],
            "b_terms": [{"weight": t.weight, "v": [float(v) for v in t.v]}
                        for t in self.b_terms],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SosCertificate":
        try:
            return cls(
                beta=float(d["beta"]),
                a_terms=tuple(ATerm(int(t["x"]), float(t["weight"]), np.asarray(t["bhat"], float))
                              for t in d["a_terms"]),
                b_terms=tuple(BTerm(float(t["weight"]), np.asarray(t["v"], float))
                              for t in d["b_terms"]),
            )
        except (KeyError, TypeError) as exc:
            raise CertificateError(f"malformed certificate: {exc}") from exc


def schur_complement(G: np.ndarray, r: np.ndarray, c: np.ndarray) -> np.ndarray:
    """``diag(c) - G^T diag(r)^-1 G`` over the rows with ``r_x > 0``."""
    keep = r > ROW_TOL
    Gk = G[keep]
    return np.diag(c) - Gk.T @ (Gk / r[keep, None])


def build_certificate(game: XorGame, sol: SdpSolution) -> SosCertificate:
    if sol.gap > MAX_INPUT_GAP:
        raise CertificateError(f"SDP gap {sol.gap:.3g} too large to certify")
    G = game.cost
    r, c = sol.dual.r, sol.dual.c
    a_terms = []
    for x in range(G.shape[0]):
        if r[x] > ROW_TOL:
            a_terms.append(ATerm(x, r[x] / 2.0, G[x] / r[x]))
        elif np.any(G[x] != 0):
            raise CertificateError(f"row bias r_{x} = {r[x]:.3g} on a nonzero row")
        else:
            a_terms.append(ATerm(x, r[x] / 2.0, np.zeros(G.shape[1])))

    M = schur_complement(G, r, c)
    asym = float(np.max(np.abs(M - M.T)))
    M = (M + M.T) / 2.0
    lam, vecs = np.linalg.eigh(M)
    lam_min = float(lam[0])
    if lam_min < -CLIP_TOL:
        raise CertificateError(f"Schur complement has eigenvalue {lam_min:.3g}")
    lam = np.where(lam < 0, 0.0, lam)
    b_terms = tuple(BTerm(lam[k] / 2.0, vecs[:, k]) for k in range(len(lam)))
    return SosCertificate(sol.dual_bias, tuple(a_terms), b_terms, lam_min, asym)


@dataclass(frozen=True)
class ResidualReport:
    residual: float
    tolerance: float
    nice: bool
    min_weight: float

    @property
    def passed(self) -> bool:
        return self.residual <= self.tolerance and self.nice and self.min_weight >= -WEIGHT_TOL


def is_nice(cert: SosCertificate) -> bool:
    for kind, _, base in cert.squares():
        a_letters = base.a_letters()
        if kind == "a-minus-bhat" and len(a_letters) != 1:
            return False
        if kind == "b-linear" and a_letters:
            return False
        if base.degree() > 1:
            return False
    return True


def verify_certificate(game: XorGame, cert: SosCertificate, gap: float = 0.0) -> ResidualReport:
    """Max coefficient of ``RHS - (beta - h_G)``; passes iff <= max(1e-6, 10 gap)."""
    target = NcPolynomial.constant(cert.beta) - bias_polynomial(game)
    residual = (cert.expand() - target).max_abs_coeff()
    weights = [w for _, w, _ in cert.squares()]
    return ResidualReport(residual, max(BASE_RESIDUAL_TOL, 10.0 * gap), is_nice(cert),
                          min(weights, default=0.0))


def bound_from_certificate(cert: SosCertificate, game: XorGame, gap: float = 0.0) -> float:
    """The certified upper bound ``beta`` on the (compiled) bias."""
    report = verify_certificate(game, cert, gap)
    if not report.passed:
        raise CertificateError(f"certificate does not verify (residual {report.residual:.3g})")
    return cert.beta
