"""Single-qubit rotations, multi-control gates and their expansions.

Gate ops are applied by direct amplitude updates on the ``[2] * N`` tensor
view of a state, never by building ``2^N x 2^N`` matrices.  Expansion
functions return ops in application order (first element acts first).
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import ValidationError
from .qstate import StateVector, basis_state, pattern_str

UNITARY_TOL = 1e-12

FULL = "full"
REDUCED = "reduced"


@dataclass(frozen=True)
class Rotation:
    theta: float
    phi: float = 0.0


def rotation_O(rot: Rotation) -> np.ndarray:
    """Single-qubit rotation with half-angle ``theta/2`` and relative phase ``phi``."""
    c, s = np.cos(rot.theta / 2), np.sin(rot.theta / 2)
    return np.array(
        [[c, np.exp(1j * rot.phi) * s], [-np.exp(-1j * rot.phi) * s, c]], dtype=complex
    )


def rotation_R(rot: Rotation) -> np.ndarray:
    """Rotation realized on the target of a control-R gate (full angle ``theta``, phase ``2 phi``)."""
    c, s = np.cos(rot.theta), np.sin(rot.theta)
    return np.array(
        [[c, np.exp(2j * rot.phi) * s], [-np.exp(-2j * rot.phi) * s, c]], dtype=complex
    )


def control_r_factors(rot: Rotation) -> dict[str, np.ndarray]:
    """The rotations R1, R2 and their adjoints used by the control-R network."""
    r1 = rotation_O(Rotation(np.pi, rot.phi))
    r2 = rotation_O(Rotation(rot.theta, 0.0))
    return {"R1": r1, "R2": r2, "R2_dag": r2.conj().T, "R1_dag": r1.conj().T}


SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)


def is_unitary(matrix: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    m = np.asarray(matrix, dtype=complex)
    return m.shape == (2, 2) and bool(np.max(np.abs(m @ m.conj().T - np.eye(2))) <= tol)


# --- gate ops ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Rotate:
    target: int
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self) -> None:
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (2, 2):
            raise ValidationError(f"rotation matrix must be 2x2, got {m.shape}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def qubits(self) -> tuple[int, ...]:
        return (self.target,)


@dataclass(frozen=True)
class MultiControlNot:
    controls: tuple[int, ...]
    target: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "controls", tuple(int(c) for c in self.controls))

    @property
    def qubits(self) -> tuple[int, ...]:
        return (*self.controls, self.target)


@dataclass(frozen=True)
class ControlR:
    controls: tuple[int, ...]
    target: int
    rot: Rotation
    form: str = FULL

    def __post_init__(self) -> None:
        object.__setattr__(self, "controls", tuple(int(c) for c in self.controls))
        if self.form not in (FULL, REDUCED):
            raise ValidationError(f"control-R form must be 'full' or 'reduced', got {self.form!r}")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (*self.controls, self.target)

    @property
    def matrix(self) -> np.ndarray:
        """Action on the target when every control is |1>."""
        rot = self.rot if self.form == FULL else Rotation(self.rot.theta, 0.0)
        return rotation_R(rot)


@dataclass(frozen=True)
class MultiTargetControlR:
    """Control-R on the first target followed by a CNOT cascade over the others.

    Acting on the block where every control is |1>: the rotation is applied
    to ``targets[0]``; afterwards every other target is flipped iff
    ``targets[0]`` is |0>.  On |1...1> this yields
    ``R01 |1..1, 0 on all targets> + R11 |1...1>``.
    """

    controls: tuple[int, ...]
    targets: tuple[int, ...]
    rot: Rotation
    form: str = FULL

    def __post_init__(self) -> None:
        object.__setattr__(self, "controls", tuple(int(c) for c in self.controls))
        object.__setattr__(self, "targets", tuple(int(t) for t in self.targets))
        if not self.targets:
            raise ValidationError("multi-target control-R needs at least one target")
        if self.form not in (FULL, REDUCED):
            raise ValidationError(f"control-R form must be 'full' or 'reduced', got {self.form!r}")

    @property
    def qubits(self) -> tuple[int, ...]:
        return (*self.controls, *self.targets)

    @property
    def matrix(self) -> np.ndarray:
        return ControlR(self.controls, self.targets[0], self.rot, self.form).matrix


GateOp = Union[Rotate, MultiControlNot, ControlR, MultiTargetControlR]


def check_op(op: GateOp, n_qubits: int) -> None:
    qubits = op.qubits
    for q in qubits:
        if not 1 <= q <= n_qubits:
            raise IndexError(f"{type(op).__name__}: qubit {q} out of range 1..{n_qubits}")
    if len(set(qubits)) != len(qubits):
        raise ValidationError(f"{type(op).__name__}: controls and targets must be disjoint, got {qubits}")
    if isinstance(op, Rotate) and not is_unitary(op.matrix):
        raise ValidationError("Rotate matrix is not unitary")


@dataclass(frozen=True)
class Circuit:
    """Ordered gate list; ``initial`` is the basis pattern the network expects as input."""

    n_qubits: int
    ops: tuple = ()
    initial: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "ops", tuple(self.ops))
        initial = pattern_str(self.initial) if self.initial else "0" * self.n_qubits
        if len(initial) != self.n_qubits:
            raise ValidationError(f"initial pattern {initial} does not match {self.n_qubits} qubits")
        object.__setattr__(self, "initial", initial)
        for op in self.ops:
            check_op(op, self.n_qubits)

    def __len__(self) -> int:
        return len(self.ops)

    def __add__(self, other: "Circuit") -> "Circuit":
        if other.n_qubits != self.n_qubits:
            raise ValidationError("cannot concatenate circuits of different sizes")
        return Circuit(self.n_qubits, self.ops + other.ops, self.initial)


# --- application --------------------------------------------------------------


def _apply_1q(block: np.ndarray, axis: int, matrix: np.ndarray) -> None:
    """In-place 2x2 update along ``axis`` of a (view of a) state tensor."""
    a0 = block.take(0, axis=axis).copy()
    a1 = block.take(1, axis=axis).copy()
    idx0 = [slice(None)] * block.ndim
    idx1 = [slice(None)] * block.ndim
    idx0[axis], idx1[axis] = 0, 1
    block[tuple(idx0)] = matrix[0, 0] * a0 + matrix[0, 1] * a1
    block[tuple(idx1)] = matrix[1, 0] * a0 + matrix[1, 1] * a1


def _control_block(psi: np.ndarray, controls: Iterable[int]) -> tuple[np.ndarray, list[int]]:
    """View of ``psi`` where every control is 1, plus the remaining qubit order."""
    controls = set(controls)
    idx = tuple(1 if q + 1 in controls else slice(None) for q in range(psi.ndim))
    remaining = [q + 1 for q in range(psi.ndim) if q + 1 not in controls]
    return psi[idx], remaining


def apply_inplace(psi: np.ndarray, op: GateOp) -> None:
    """Apply ``op`` to a writable ``[2] * N`` tensor."""
    if isinstance(op, Rotate):
        _apply_1q(psi, op.target - 1, op.matrix)
    elif isinstance(op, MultiControlNot):
        block, rest = _control_block(psi, op.controls)
        _apply_1q(block, rest.index(op.target), SIGMA_X)
    elif isinstance(op, ControlR):
        block, rest = _control_block(psi, op.controls)
        _apply_1q(block, rest.index(op.target), op.matrix)
    elif isinstance(op, MultiTargetControlR):
        block, rest = _control_block(psi, op.controls)
        first = rest.index(op.targets[0])
        _apply_1q(block, first, op.matrix)
        if len(op.targets) > 1:
            idx = [slice(None)] * block.ndim
            idx[first] = 0
            sub = block[tuple(idx)]
            sub_rest = [q for q in rest if q != op.targets[0]]
            axes = tuple(sub_rest.index(t) for t in op.targets[1:])
            sub[...] = np.flip(sub, axis=axes).copy()
    else:
        raise ValidationError(f"unknown gate op {op!r}")


def apply(state: StateVector, op: GateOp) -> StateVector:
    check_op(op, state.n_qubits)
    psi = np.array(state.tensor(), dtype=complex)
    apply_inplace(psi, op)
    return StateVector(state.n_qubits, psi.reshape(-1))


def apply_all(state: StateVector, ops: Iterable[GateOp]) -> StateVector:
    ops = list(ops)
    for op in ops:
        check_op(op, state.n_qubits)
    psi = np.array(state.tensor(), dtype=complex)
    for op in ops:
        apply_inplace(psi, op)
    return StateVector(state.n_qubits, psi.reshape(-1))


def simulate(circuit: Circuit, initial: StateVector | str | None = None) -> StateVector:
    """Gate-level simulation; defaults to the circuit's own initial pattern."""
    if initial is None:
        initial = circuit.initial
    if not isinstance(initial, StateVector):
        initial = basis_state(circuit.n_qubits, initial)
    if initial.n_qubits != circuit.n_qubits:
        raise ValidationError("initial state size does not match circuit")
    return apply_all(initial, circuit.ops)


# --- expansions ----------------------------------------------------------------


def expand_control_r(op: ControlR) -> list[GateOp]:
    """Lower a control-R gate to rotations on the target and two multi-control NOTs.

    Full form: R1, R2, CNOT, R2^dagger, CNOT, R1^dagger.  The reduced form
    drops R1 and R1^dagger and so carries no phase.
    """
    f = control_r_factors(op.rot)
    t, c = op.target, op.controls
    core = [
        Rotate(t, f["R2"], "R2"),
        MultiControlNot(c, t),
        Rotate(t, f["R2_dag"], "R2_dag"),
        MultiControlNot(c, t),
    ]
    if op.form == REDUCED:
        return core
    return [Rotate(t, f["R1"], "R1"), *core, Rotate(t, f["R1_dag"], "R1_dag")]


def expand_multi_target(op: MultiTargetControlR) -> list[GateOp]:
    """Control-R on the first target, then per extra target a copy and an erase CNOT.

    The copy CNOTs (controls = the op's controls) flip each extra target on
    both branches; the erase CNOTs additionally require the first target to
    be |1> and so undo the flips on the untouched branch.
    """
    first, extra = op.targets[0], op.targets[1:]
    ops: list[GateOp] = [ControlR(op.controls, first, op.rot, op.form)]
    ops += [MultiControlNot(op.controls, t) for t in extra]
    erase_controls = tuple(sorted((*op.controls, first)))
    ops += [MultiControlNot(erase_controls, t) for t in extra]
    return ops


def lower(ops: Iterable[GateOp]) -> list[GateOp]:
    """Fully expand to Rotate and MultiControlNot primitives."""
    out: list[GateOp] = []
    for op in ops:
        if isinstance(op, MultiTargetControlR):
            out += lower(expand_multi_target(op))
        elif isinstance(op, ControlR):
            out += expand_control_r(op)
        else:
            out.append(op)
    return out


def inverse(op: GateOp) -> list[GateOp]:
    """Ops that undo ``op``, in application order."""
    if isinstance(op, Rotate):
        return [Rotate(op.target, op.matrix.conj().T, op.label + "_inv" if op.label else "")]
    if isinstance(op, MultiControlNot):
        return [op]
    if isinstance(op, ControlR):
        return [ControlR(op.controls, op.target, Rotation(-op.rot.theta, op.rot.phi), op.form)]
    return [g for sub in reversed(expand_multi_target(op)) for g in inverse(sub)]


# --- serialization ---------------------------------------------------------------


def _matrix_to_json(m: np.ndarray) -> list:
    return [[[float(z.real), float(z.imag)] for z in row] for row in m]


def _matrix_from_json(data: Sequence) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in data], dtype=complex)


def op_to_dict(op: GateOp) -> dict:
    if isinstance(op, Rotate):
        d = {"type": "rotate", "target": op.target, "matrix": _matrix_to_json(op.matrix)}
        if op.label:
            d["label"] = op.label
        return d
    if isinstance(op, MultiControlNot):
        return {"type": "mcnot", "controls": list(op.controls), "target": op.target}
    if isinstance(op, ControlR):
        return {"type": "control_r", "controls": list(op.controls), "target": op.target,
                "theta": op.rot.theta, "phi": op.rot.phi, "form": op.form}
    return {"type": "multi_target_control_r", "controls": list(op.controls),
            "targets": list(op.targets), "theta": op.rot.theta, "phi": op.rot.phi, "form": op.form}


def op_from_dict(d: dict) -> GateOp:
    try:
        kind = d["type"]
        if kind == "rotate":
            return Rotate(int(d["target"]), _matrix_from_json(d["matrix"]), d.get("label", ""))
        if kind == "mcnot":
            return MultiControlNot(tuple(d["controls"]), int(d["target"]))
        rot = Rotation(float(d["theta"]), float(d.get("phi", 0.0)))
        if kind == "control_r":
            return ControlR(tuple(d["controls"]), int(d["target"]), rot, d.get("form", FULL))
        if kind == "multi_target_control_r":
            return MultiTargetControlR(tuple(d["controls"]), tuple(d["targets"]), rot, d.get("form", FULL))
    except (KeyError, TypeError, ValueError) as exc:
        raise ValidationError(f"malformed gate op {d!r}: {exc}") from exc
    raise ValidationError(f"unknown gate op type {kind!r}")


def circuit_to_dict(circuit: Circuit) -> dict:
    return {
        "n_qubits": circuit.n_qubits,
        "initial": circuit.initial,
        "ops": [op_to_dict(op) for op in circuit.ops],
    }


def circuit_from_dict(d: dict) -> Circuit:
    try:
        n = int(d["n_qubits"])
        ops = [op_from_dict(o) for o in d["ops"]]
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed circuit document: {exc}") from exc
    return Circuit(n, tuple(ops), d.get("initial", ""))

