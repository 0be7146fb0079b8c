"""Dense state vectors over N qubits, reduced two-qubit states and concurrence.

Conventions used throughout the package:

* qubits are numbered 1..N;
* a basis pattern is a bit string ``"b1 b2 ... bN"`` and its integer index is
  the big-endian value with qubit 1 as the most significant bit.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import ValidationError

MAX_QUBITS = 24
NORM_TOL = 1e-10

Pattern = Union[str, Sequence[int]]

_SIGMA_Y = np.array([[0, -1j], [1j, 0]])
_YY = np.kron(_SIGMA_Y, _SIGMA_Y)


def as_bits(pattern: Pattern) -> tuple[int, ...]:
    """Normalize ``"011"`` / ``[0, 1, 1]`` to a tuple of ints."""
    if isinstance(pattern, str):
        if not pattern or set(pattern) - {"0", "1"}:
            raise ValidationError(f"basis pattern must be a non-empty 0/1 string, got {pattern!r}")
        return tuple(int(ch) for ch in pattern)
    bits = tuple(int(b) for b in pattern)
    if not bits or any(b not in (0, 1) for b in bits):
        raise ValidationError(f"basis pattern must contain only 0/1, got {pattern!r}")
    return bits


def pattern_str(pattern: Pattern) -> str:
    return "".join(str(b) for b in as_bits(pattern))


def pattern_index(pattern: Pattern, n_qubits: int | None = None) -> int:
    bits = as_bits(pattern)
    if n_qubits is not None and len(bits) != n_qubits:
        raise ValidationError(f"pattern {pattern_str(bits)} has length {len(bits)}, expected {n_qubits}")
    idx = 0
    for b in bits:
        idx = (idx << 1) | b
    return idx


def index_pattern(index: int, n_qubits: int) -> str:
    return format(index, f"0{n_qubits}b")


def _check_size(n_qubits: int) -> None:
    if not 1 <= n_qubits <= MAX_QUBITS:
        raise ValidationError(f"register size must be in 1..{MAX_QUBITS}, got {n_qubits}")


@dataclass(frozen=True, eq=False)
class StateVector:
    """Immutable normalized pure state of ``n_qubits`` qubits."""

    n_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self) -> None:
        _check_size(self.n_qubits)
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2**self.n_qubits:
            raise ValidationError(f"expected {2 ** self.n_qubits} amplitudes, got {amps.size}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValidationError(f"state is not normalized (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def __len__(self) -> int:
        return self.amplitudes.size

    @property
    def norm(self) -> float:
        return float(np.sqrt(np.vdot(self.amplitudes, self.amplitudes).real))

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to ``[2] * n``; axis ``k`` is qubit ``k + 1``."""
        return self.amplitudes.reshape([2] * self.n_qubits)

    def terms(self, tol: float = 1e-12) -> list[tuple[str, complex]]:
        """Nonzero terms as ``(pattern, amplitude)`` in index order."""
        idx = np.flatnonzero(np.abs(self.amplitudes) > tol)
        return [(index_pattern(int(i), self.n_qubits), complex(self.amplitudes[i])) for i in idx]

    @classmethod
    def from_terms(cls, n_qubits: int, terms: Iterable[tuple[Pattern, complex]]) -> "StateVector":
        amps = np.zeros(2**n_qubits, dtype=complex)
        for pattern, amp in terms:
            amps[pattern_index(pattern, n_qubits)] += amp
        return cls(n_qubits, amps)


def basis_state(n_qubits: int, pattern: Pattern) -> StateVector:
    _check_size(n_qubits)
    amps = np.zeros(2**n_qubits, dtype=complex)
    amps[pattern_index(pattern, n_qubits)] = 1.0
    return StateVector(n_qubits, amps)


def amplitude(state: StateVector, pattern: Pattern) -> complex:
    return complex(state.amplitudes[pattern_index(pattern, state.n_qubits)])


def fidelity_global_phase_invariant(a: StateVector, b: StateVector) -> float:
    """|<a|b>|^2, clipped to [0, 1]."""
    if a.n_qubits != b.n_qubits:
        raise ValidationError(f"size mismatch: {a.n_qubits} vs {b.n_qubits} qubits")
    f = abs(np.vdot(a.amplitudes, b.amplitudes)) ** 2
    return float(min(1.0, max(0.0, f)))


fidelity = fidelity_global_phase_invariant


def reduced_two_qubit(state: StateVector, i: int, j: int) -> np.ndarray:
    """Density matrix of qubits ``(i, j)`` with qubit ``i`` as the first factor."""
    n = state.n_qubits
    for q in (i, j):
        if not 1 <= q <= n:
            raise IndexError(f"qubit {q} out of range 1..{n}")
    if i == j:
        raise IndexError("reduced_two_qubit needs two distinct qubits")
    rest = [k for k in range(n) if k not in (i - 1, j - 1)]
    psi = np.transpose(state.tensor(), [i - 1, j - 1] + rest).reshape(4, -1)
    return psi @ psi.conj().T


def validate_density_matrix(rho: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (4, 4):
        raise ValidationError(f"two-qubit density matrix must be 4x4, got {rho.shape}")
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValidationError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise ValidationError(f"density matrix trace is {np.trace(rho).real!r}, expected 1")
    if np.linalg.eigvalsh(rho).min() < -tol:
        raise ValidationError("density matrix has negative eigenvalues")
    return rho


def concurrence(rho: np.ndarray) -> float:
    """Wootters concurrence of a two-qubit density matrix.

    The lambdas are computed as singular values of ``V^T (Y x Y) V`` with
    ``rho = V V^dagger``, which avoids taking square roots of eigenvalues
    that are zero up to rounding.
    """
    rho = validate_density_matrix(rho)
    rho = (rho + rho.conj().T) / 2
    p, u = np.linalg.eigh(rho)
    keep = p > 1e-14
    v = u[:, keep] * np.sqrt(p[keep])
    if v.shape[1] == 0:
        return 0.0
    lam = np.linalg.svd(v.T @ _YY @ v, compute_uv=False)
    lam = np.concatenate([lam, np.zeros(4 - lam.size)])
    c = lam[0] - lam[1] - lam[2] - lam[3]
    return float(min(1.0, max(0.0, c)))
