"""Synthesis networks: symmetric (W-type) state, GHZ, and arbitrary pure states.

An arbitrary target is built stage by stage.  Stage 0 splits |0...0> into
``a0 |0...0> - e^{-2i phi0} b0 |1...1>``; every later stage peels a new
basis term off the |1...1> residual with a multi-target control-R whose
controls are the pattern's 1-bits and whose targets are its 0-bits.
Stages run in canonical order: ascending Hamming weight, ties broken by
ascending integer index.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .errors import SynthesisError, ValidationError
from .gates import (
    FULL,
    REDUCED,
    Circuit,
    ControlR,
    GateOp,
    MultiControlNot,
    MultiTargetControlR,
    Rotate,
    Rotation,
    rotation_O,
    rotation_R,
    simulate,
)
from .qstate import (
    StateVector,
    as_bits,
    fidelity_global_phase_invariant,
    index_pattern,
    pattern_index,
    pattern_str,
)

TARGET_NORM_TOL = 1e-9
FIDELITY_THRESHOLD = 1 - 1e-10
_ZERO = 1e-12


def canonical_patterns(n_qubits: int) -> list[str]:
    """All 2^N patterns: |0...0> first, |1...1> last, weight then index in between."""
    order = sorted(range(2**n_qubits), key=lambda i: (bin(i).count("1"), i))
    return [index_pattern(i, n_qubits) for i in order]


# --- targets ---------------------------------------------------------------------


@dataclass(frozen=True)
class Term:
    pattern: str
    magnitude: float
    phase: float = 0.0


@dataclass(frozen=True)
class TargetState:
    """Target amplitudes ``magnitude * exp(i phase)`` on distinct basis patterns.

    Phases are shifted on construction so that the first nonzero term in
    canonical order has phase 0.
    """

    n_qubits: int
    terms: tuple[Term, ...]

    def __post_init__(self) -> None:
        n = self.n_qubits
        terms = tuple(Term(pattern_str(t.pattern), float(t.magnitude), float(t.phase)) for t in self.terms)
        seen = set()
        for t in terms:
            if len(t.pattern) != n:
                raise ValidationError(f"pattern {t.pattern} does not have {n} bits")
            if t.pattern in seen:
                raise ValidationError(f"duplicate pattern {t.pattern}")
            if t.magnitude < 0 or not np.isfinite(t.magnitude) or not np.isfinite(t.phase):
                raise ValidationError(f"term {t.pattern} needs a finite magnitude >= 0 and finite phase")
            seen.add(t.pattern)
        total = sum(t.magnitude**2 for t in terms)
        if abs(total - 1.0) > TARGET_NORM_TOL:
            raise ValidationError(f"target is not normalized (sum of squared magnitudes = {total!r})")
        rank = {p: k for k, p in enumerate(canonical_patterns(n))}
        terms = tuple(sorted(terms, key=lambda t: rank[t.pattern]))
        ref = next((t.phase for t in terms if t.magnitude > _ZERO), 0.0)
        terms = tuple(Term(t.pattern, t.magnitude, _wrap(t.phase - ref)) for t in terms)
        object.__setattr__(self, "terms", terms)

    @classmethod
    def from_amplitudes(cls, n_qubits: int, amplitudes: Sequence[complex], normalize: bool = False) -> "TargetState":
        amps = np.asarray(amplitudes, dtype=complex).reshape(-1)
        if amps.size != 2**n_qubits:
            raise ValidationError(f"expected {2 ** n_qubits} amplitudes, got {amps.size}")
        if normalize:
            amps = amps / np.linalg.norm(amps)
        terms = [
            Term(index_pattern(i, n_qubits), float(abs(a)), float(np.angle(a)))
            for i, a in enumerate(amps)
            if abs(a) > 0
        ]
        return cls(n_qubits, tuple(terms))

    @classmethod
    def from_state(cls, state: StateVector) -> "TargetState":
        return cls.from_amplitudes(state.n_qubits, state.amplitudes)

    @classmethod
    def normalized(cls, n_qubits: int, terms: Sequence[Term]) -> "TargetState":
        scale = np.sqrt(sum(t.magnitude**2 for t in terms))
        if scale == 0:
            raise ValidationError("target has no nonzero terms")
        return cls(n_qubits, tuple(Term(t.pattern, t.magnitude / scale, t.phase) for t in terms))

    def amplitude_vector(self) -> np.ndarray:
        amps = np.zeros(2**self.n_qubits, dtype=complex)
        for t in self.terms:
            amps[pattern_index(t.pattern)] = t.magnitude * np.exp(1j * t.phase)
        return amps

    def to_state(self) -> StateVector:
        amps = self.amplitude_vector()
        return StateVector(self.n_qubits, amps / np.linalg.norm(amps))


def symmetric_target(n: int) -> TargetState:
    """Equal superposition of all patterns with exactly one 0."""
    terms = [Term("1" * j + "0" + "1" * (n - j - 1), 1 / np.sqrt(n)) for j in range(n)]
    return TargetState(n, tuple(terms))


def ghz_target(n: int) -> TargetState:
    return TargetState(n, (Term("0" * n, 1 / np.sqrt(2)), Term("1" * n, 1 / np.sqrt(2))))


def random_target(n: int, rng: np.random.Generator, sparsity: float = 0.0) -> TargetState:
    """Haar-like random target; ``sparsity`` is the probability of zeroing each amplitude."""
    amps = rng.normal(size=2**n) + 1j * rng.normal(size=2**n)
    if sparsity > 0:
        mask = rng.random(2**n) < sparsity
        if mask.all():
            mask[rng.integers(2**n)] = False
        amps[mask] = 0
    return TargetState.from_amplitudes(n, amps, normalize=True)


def _wrap(angle: float) -> float:
    return float((angle + np.pi) % (2 * np.pi) - np.pi)


# --- plans ------------------------------------------------------------------------


@dataclass(frozen=True)
class Stage:
    pattern: str
    theta: float
    phi: float

    @property
    def a(self) -> float:
        return float(np.cos(self.theta))

    @property
    def b(self) -> float:
        return float(np.sin(self.theta))


@dataclass(frozen=True)
class SynthesisPlan:
    n_qubits: int
    start_all_ones: bool
    stages: tuple[Stage, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "stages", tuple(self.stages))
        expected = canonical_patterns(self.n_qubits)[:-1]
        if self.start_all_ones:
            expected = expected[1:]
        if [s.pattern for s in self.stages] != expected:
            raise ValidationError("plan stages are not in canonical order")
        for s in self.stages:
            if not -_ZERO <= s.theta <= np.pi / 2 + _ZERO:
                raise ValidationError(f"stage {s.pattern}: theta {s.theta} outside [0, pi/2]")

    @property
    def initial(self) -> str:
        return ("1" if self.start_all_ones else "0") * self.n_qubits


def plan_from_target(target: TargetState) -> SynthesisPlan:
    """Invert target magnitudes and phases into stage angles.

    With residual ``r_j = sqrt(sum_{k>=j} alpha_k^2)`` the stage-j rotation
    has ``b_j = alpha_j / r_j`` (0 when ``r_j`` vanishes) and
    ``a_j = r_{j+1} / r_j``; phases are referenced to the |1...1> term.
    """
    n = target.n_qubits
    order = canonical_patterns(n)
    alpha = np.zeros(len(order))
    psi = np.zeros(len(order))
    rank = {p: k for k, p in enumerate(order)}
    for t in target.terms:
        alpha[rank[t.pattern]] = t.magnitude
        psi[rank[t.pattern]] = t.phase
    alpha /= np.sqrt(np.sum(alpha**2))
    tail = np.sqrt(np.cumsum((alpha**2)[::-1])[::-1])
    tail = np.append(tail, 0.0)
    psi_last = psi[-1] if alpha[-1] > _ZERO else 0.0

    start_all_ones = bool(alpha[0] <= _ZERO)
    stages = []
    if not start_all_ones:
        theta0 = float(np.arctan2(tail[1], alpha[0]))
        stages.append(Stage(order[0], theta0, (np.pi - psi_last) / 2))
    for j in range(1, len(order) - 1):
        theta = float(np.arctan2(alpha[j], tail[j + 1])) if tail[j] > _ZERO else 0.0
        stages.append(Stage(order[j], theta, (psi[j] - psi_last) / 2))
    return SynthesisPlan(n, start_all_ones, tuple(stages))


def stage_ops(plan: SynthesisPlan, skip_trivial: bool = False) -> Iterator[tuple[Stage, list[GateOp]]]:
    """Yield each stage with the ops that realize it."""
    n = plan.n_qubits
    for stage in plan.stages:
        if skip_trivial and stage.theta == 0.0:
            continue
        bits = as_bits(stage.pattern)
        if not any(bits):
            ops: list[GateOp] = [Rotate(1, rotation_R(Rotation(stage.theta, stage.phi)), "U0")]
            ops += [MultiControlNot((1,), t) for t in range(2, n + 1)]
        else:
            controls = tuple(q + 1 for q, b in enumerate(bits) if b)
            targets = tuple(q + 1 for q, b in enumerate(bits) if not b)
            ops = [MultiTargetControlR(controls, targets, Rotation(stage.theta, stage.phi), FULL)]
        yield stage, ops


def build_arbitrary_network(plan: SynthesisPlan, skip_trivial: bool = False) -> Circuit:
    ops = [op for _, stage in stage_ops(plan, skip_trivial) for op in stage]
    return Circuit(plan.n_qubits, tuple(ops), plan.initial)


@dataclass(frozen=True)
class SynthesisResult:
    circuit: Circuit
    state: StateVector
    fidelity: float
    plan: SynthesisPlan

    def __iter__(self):
        return iter((self.circuit, self.state, self.fidelity))


def synthesize(target: TargetState, skip_trivial: bool = False) -> SynthesisResult:
    plan = plan_from_target(target)
    circuit = build_arbitrary_network(plan, skip_trivial)
    state = simulate(circuit)
    want = target.to_state()
    f = fidelity_global_phase_invariant(want, state)
    if f < FIDELITY_THRESHOLD:
        raise SynthesisError(f"synthesized state has fidelity {f!r}", want, state, f)
    return SynthesisResult(circuit, state, f, plan)


# --- fixed networks ----------------------------------------------------------------


def symmetric_rotation(n: int, j: int) -> np.ndarray:
    """Rotation U_j that moves amplitude 1/sqrt(n) onto the branch with qubit j in |0>."""
    c = np.sqrt((n - j) / (n - j + 1))
    s = 1 / np.sqrt(n - j + 1)
    return np.array([[c, s], [-s, c]], dtype=complex)


def build_symmetric_network(n: int) -> Circuit:
    """Network preparing (1/sqrt n) sum_j |1..0_j..1> from |1...1>.

    Qubit j (2 <= j <= n-1) needs only qubits 1..j-1 as controls: every
    branch present at that point has qubits j+1..n in |1>.
    """
    if n < 2:
        raise ValidationError(f"symmetric network needs n >= 2, got {n}")
    ops: list[GateOp] = [Rotate(1, symmetric_rotation(n, 1), "U1")]
    for j in range(2, n):
        theta = float(np.arccos(np.sqrt((n - j) / (n - j + 1))))
        ops.append(ControlR(tuple(range(1, j)), j, Rotation(theta, 0.0), REDUCED))
    ops.append(MultiControlNot(tuple(range(1, n)), n))
    return Circuit(n, tuple(ops), "1" * n)


def build_ghz_network(n: int) -> Circuit:
    if n < 2:
        raise ValidationError(f"GHZ network needs n >= 2, got {n}")
    ops: list[GateOp] = [Rotate(1, rotation_O(Rotation(np.pi / 2, np.pi)), "R")]
    ops += [MultiControlNot((k,), k + 1) for k in range(1, n)]
    return Circuit(n, tuple(ops), "0" * n)
