"""Dense statevector simulation: states, binary observables and PVMs."""

from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Sequence

import numpy as np

MAX_PARTY_DIM = 64
NORM_TOL = 1e-10
HERM_TOL = 1e-10
INVOLUTION_TOL = 1e-9
PVM_TOL = 1e-9
EXPECT_IMAG_TOL = 1e-9

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


class DimensionError(ValueError):
    pass


def kron(*ops) -> np.ndarray:
    return reduce(np.kron, [np.asarray(o) for o in ops])


def _check_dim(d: int, cap: int):
    if d > cap:
        raise DimensionError(f"dimension {d} exceeds cap {cap}")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Complex amplitude vector.  Top-level states are unit; branches need not be."""

    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=complex).ravel()
        _check_dim(amps.size, MAX_PARTY_DIM**2)
        object.__setattr__(self, "amplitudes", amps)

    def __array__(self, dtype=None, copy=None):
        return self.amplitudes if dtype is None else self.amplitudes.astype(dtype)

    @property
    def dim(self) -> int:
        return self.amplitudes.size

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def tensor(self, other: "StateVector") -> "StateVector":
        return StateVector(np.kron(self.amplitudes, other.amplitudes))

    def normalized(self) -> "StateVector":
        return StateVector(self.amplitudes / self.norm())


def state(amplitudes, normalize: bool = False) -> StateVector:
    psi = StateVector(amplitudes)
    if normalize:
        return psi.normalized()
    if abs(psi.norm() - 1.0) > NORM_TOL:
        raise ValueError(f"state has norm {psi.norm():.12g}")
    return psi


def maximally_entangled(n: int) -> StateVector:
    """``sum_i |i>|i> / sqrt(n)``."""
    return StateVector(np.eye(n, dtype=complex).ravel() / np.sqrt(n))


def is_hermitian(m: np.ndarray, tol: float = HERM_TOL) -> bool:
    return bool(np.max(np.abs(m - m.conj().T), initial=0.0) <= tol)


@dataclass(frozen=True, eq=False)
class BinaryObservable:
    """Hermitian ``B`` with ``B @ B == I``."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("observable must be a square matrix")
        _check_dim(m.shape[0], MAX_PARTY_DIM**2)
        if not is_hermitian(m):
            raise ValueError("observable is not Hermitian")
        err = np.max(np.abs(m @ m - np.eye(m.shape[0])))
        if err > INVOLUTION_TOL:
            raise ValueError(f"observable does not square to identity (error {err:.3g})")
        object.__setattr__(self, "matrix", m)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class Pvm:
    """Orthogonal projectors summing to the identity, indexed by outcome."""

    projectors: tuple

    def __post_init__(self):
        ps = tuple(np.asarray(p, dtype=complex) for p in self.projectors)
        if not ps:
            raise ValueError("a PVM needs at least one outcome")
        d = ps[0].shape[0]
        _check_dim(d, MAX_PARTY_DIM**2)
        eye = np.eye(d)
        for k, p in enumerate(ps):
            if p.shape != (d, d):
                raise ValueError("projectors have inconsistent shapes")
            if np.max(np.abs(p @ p - p)) > PVM_TOL or not is_hermitian(p, PVM_TOL):
                raise ValueError(f"outcome {k} is not an orthogonal projector")
        if np.max(np.abs(sum(ps) - eye)) > PVM_TOL:
            raise ValueError("projectors do not sum to the identity")
        object.__setattr__(self, "projectors", ps)

    def __len__(self):
        return len(self.projectors)

    def __getitem__(self, k):
        return self.projectors[k]

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]


def observable_from_pvm(p: Pvm) -> BinaryObservable:
    if len(p) != 2:
        raise ValueError("a binary observable needs exactly two outcomes")
    return BinaryObservable(p[0] - p[1])


def pvm_from_observable(b: BinaryObservable) -> Pvm:
    eye = np.eye(b.dim)
    return Pvm(((eye + b.matrix) / 2, (eye - b.matrix) / 2))


def measure_branches(psi, p: Pvm) -> list[tuple[int, StateVector]]:
    """Unnormalized post-measurement branches ``P_k psi`` for every outcome."""
    amps = np.asarray(psi)
    if amps.size != p.dim:
        raise DimensionError(f"state dim {amps.size} != PVM dim {p.dim}")
    return [(k, StateVector(proj @ amps)) for k, proj in enumerate(p.projectors)]


def expect(psi, op) -> float:
    """``Re <psi|O|psi>`` for Hermitian ``O``; the imaginary part must vanish."""
    amps = np.asarray(psi)
    m = np.asarray(op)
    if m.shape != (amps.size, amps.size):
        raise DimensionError(f"operator shape {m.shape} does not act on dim {amps.size}")
    if not is_hermitian(m, EXPECT_IMAG_TOL):
        raise ValueError("expectation requires a Hermitian operator")
    val = np.vdot(amps, m @ amps)
    if abs(val.imag) > EXPECT_IMAG_TOL:
        raise ValueError(f"expectation has imaginary part {val.imag:.3g}")
    return float(val.real)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_pvm(d: int, k: int, rng: np.random.Generator) -> Pvm:
    """Random ``k``-outcome PVM: a random basis split into ``k`` nonempty-ish blocks."""
    basis = random_unitary(d, rng)
    labels = rng.integers(0, k, size=d)
    projs = []
    for j in range(k):
        cols = basis[:, labels == j]
        projs.append(cols @ cols.conj().T)
    return Pvm(tuple(projs))


def random_state(d: int, rng: np.random.Generator) -> StateVector:
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return StateVector(z / np.linalg.norm(z))


def random_binary_observable(d: int, rng: np.random.Generator) -> BinaryObservable:
    return observable_from_pvm(random_pvm(d, 2, rng))


def max_anticommutator(ops: Sequence[np.ndarray]) -> float:
    """Largest entry of ``g_i g_j + g_j g_i`` over ``i != j``."""
    worst = 0.0
    for i in range(len(ops)):
        for j in range(i + 1, len(ops)):
            worst = max(worst, float(np.max(np.abs(ops[i] @ ops[j] + ops[j] @ ops[i]))))
    return worst
