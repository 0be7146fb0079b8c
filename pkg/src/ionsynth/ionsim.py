"""Ion-level simulation of carrier / red-sideband pulses and the Cirac-Zoller compiler.

Each ion has levels ``g``, ``e`` and an auxiliary ``aux`` level; all ions
share one centre-of-mass phonon mode truncated at ``n_max``.  Pulses act as
their closed-form unitaries on that truncated space.  Qubit |0> maps to
``g`` and |1> to ``e``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import LeakageError, ResidualPopulationError, UnsupportedGateError, ValidationError
from .gates import Circuit, GateOp, Rotate, lower
from .qstate import StateVector, as_bits

G, E, AUX = 0, 1, 2
LEVEL_NAMES = "gea"

CARRIER = "carrier"
RED_SIDEBAND = "red_sideband"
POL_I = "I"
POL_II = "II"

LEAK_TOL = 1e-12
RESIDUAL_TOL = 1e-10
O_FORM_TOL = 1e-12


@dataclass(frozen=True)
class Pulse:
    """A k*pi laser pulse on one ion; ``k`` is the pulse-area multiplier."""

    kind: str
    ion: int
    k: float
    polarization: str = POL_I
    phase: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in (CARRIER, RED_SIDEBAND):
            raise ValidationError(f"unknown pulse kind {self.kind!r}")
        if not self.k > 0:
            raise ValidationError(f"pulse area multiplier must be > 0, got {self.k}")
        if self.polarization not in (POL_I, POL_II):
            raise ValidationError(f"unknown polarization {self.polarization!r}")
        if self.kind == CARRIER and self.polarization != POL_I:
            raise ValidationError("carrier pulses use polarization I")
        if self.kind == RED_SIDEBAND and self.k not in (1, 2):
            raise ValidationError(f"sideband pulses are pi or 2pi pulses, got k={self.k}")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "ion": self.ion, "k": self.k,
                "polarization": self.polarization, "phase_rad": self.phase}

    @classmethod
    def from_dict(cls, d: dict) -> "Pulse":
        try:
            return cls(d["kind"], int(d["ion"]), float(d["k"]), d.get("polarization", POL_I),
                       float(d.get("phase_rad", 0.0)))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed pulse {d!r}: {exc}") from exc


def carrier(ion: int, k: float, phase: float = 0.0) -> Pulse:
    return Pulse(CARRIER, ion, k, POL_I, phase)


def sideband(ion: int, k: int, polarization: str = POL_I, phase: float = 0.0) -> Pulse:
    return Pulse(RED_SIDEBAND, ion, k, polarization, phase)


@dataclass(frozen=True)
class PulseCounts:
    """Carrier pulses, sideband pi pulses, sideband 2pi pulses."""

    N_A: int = 0
    N_B1: int = 0
    N_B2: int = 0

    @property
    def total(self) -> int:
        return self.N_A + self.N_B1 + self.N_B2

    def as_tuple(self) -> tuple[int, int, int]:
        return (self.N_A, self.N_B1, self.N_B2)

    def to_dict(self) -> dict:
        return {"N_A": self.N_A, "N_B1": self.N_B1, "N_B2": self.N_B2}


@dataclass(frozen=True)
class PulseProgram:
    n_ions: int
    pulses: tuple[Pulse, ...] = ()
    initial: str = ""

    def __post_init__(self) -> None:
        object.__setattr__(self, "pulses", tuple(self.pulses))
        for p in self.pulses:
            if not 1 <= p.ion <= self.n_ions:
                raise IndexError(f"pulse addresses ion {p.ion}, program has {self.n_ions}")
        if self.initial:
            object.__setattr__(self, "initial", "".join(map(str, as_bits(self.initial))))
            if len(self.initial) != self.n_ions:
                raise ValidationError("initial pattern does not match ion count")

    def __len__(self) -> int:
        return len(self.pulses)

    @property
    def counts(self) -> PulseCounts:
        n_a = sum(p.kind == CARRIER for p in self.pulses)
        n_b1 = sum(p.kind == RED_SIDEBAND and p.k == 1 for p in self.pulses)
        n_b2 = sum(p.kind == RED_SIDEBAND and p.k == 2 for p in self.pulses)
        return PulseCounts(n_a, n_b1, n_b2)

    def to_dict(self) -> dict:
        d = {"n_ions": self.n_ions}
        if self.initial:
            d["initial"] = self.initial
        d["pulses"] = [p.to_dict() for p in self.pulses]
        d["counts"] = self.counts.to_dict()
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "PulseProgram":
        try:
            prog = cls(int(d["n_ions"]), tuple(Pulse.from_dict(p) for p in d["pulses"]), d.get("initial", ""))
        except (KeyError, TypeError) as exc:
            raise ValidationError(f"malformed pulse program: {exc}") from exc
        if "counts" in d and prog.counts.to_dict() != {k: int(v) for k, v in d["counts"].items()}:
            raise ValidationError("pulse program counts do not match its pulse list")
        return prog


# --- ion states ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class IonState:
    """Amplitudes over ``{g, e, aux}^N x {0..n_max}``; array shape ``(3,)*N + (n_max+1,)``."""

    n_ions: int
    amplitudes: np.ndarray
    n_max: int = 2

    def __post_init__(self) -> None:
        if self.n_max < 1:
            raise ValidationError("phonon cutoff must be >= 1")
        shape = (3,) * self.n_ions + (self.n_max + 1,)
        amps = np.array(self.amplitudes, dtype=complex).reshape(shape)
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > 1e-10:
            raise ValidationError(f"ion state is not normalized (norm^2 = {norm!r})")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def phonon_populations(self) -> np.ndarray:
        return np.sum(np.abs(self.amplitudes) ** 2, axis=tuple(range(self.n_ions)))

    def level_population(self, ion: int, level: int) -> float:
        return float(np.sum(np.abs(self.amplitudes.take(level, axis=ion - 1)) ** 2))


def ion_basis_state(levels: str | Sequence[int], n_max: int = 2, phonon: int = 0) -> IonState:
    """Product state from a level string such as ``"eeg"`` or a qubit pattern ``"110"``."""
    if isinstance(levels, str) and set(levels) <= set(LEVEL_NAMES):
        idx = [LEVEL_NAMES.index(ch) for ch in levels]
    else:
        idx = list(as_bits(levels))
    amps = np.zeros((3,) * len(idx) + (n_max + 1,), dtype=complex)
    amps[tuple(idx) + (phonon,)] = 1.0
    return IonState(len(idx), amps, n_max)


def qubit_to_ion(state: StateVector, n_max: int = 2) -> IonState:
    amps = np.zeros((3,) * state.n_qubits + (n_max + 1,), dtype=complex)
    amps[(slice(0, 2),) * state.n_qubits + (0,)] = state.tensor()
    return IonState(state.n_qubits, amps, n_max)


def ion_to_qubit(state: IonState) -> StateVector:
    comp = state.amplitudes[(slice(0, 2),) * state.n_ions + (0,)]
    outside = np.abs(state.amplitudes) ** 2
    outside[(slice(0, 2),) * state.n_ions + (0,)] = 0.0
    residual = float(outside.sum())
    if residual > RESIDUAL_TOL**2:
        raise ResidualPopulationError(
            f"population {residual:.3e} outside the computational subspace (aux level or phonons)"
        )
    comp = comp.reshape(-1)
    return StateVector(state.n_ions, comp / np.linalg.norm(comp))


# --- pulse unitaries ------------------------------------------------------------------


def _level_slice(ndim: int, axis: int, level: int, phonon=slice(None)) -> tuple:
    idx = [slice(None)] * ndim
    idx[axis] = level
    idx[-1] = phonon
    return tuple(idx)


def _apply_carrier_inplace(amps: np.ndarray, p: Pulse) -> None:
    ax = p.ion - 1
    c, s = np.cos(p.k * np.pi / 2), np.sin(p.k * np.pi / 2)
    ig, ie = _level_slice(amps.ndim, ax, G), _level_slice(amps.ndim, ax, E)
    g, e = amps[ig].copy(), amps[ie].copy()
    amps[ig] = c * g + np.exp(1j * p.phase) * s * e
    amps[ie] = -np.exp(-1j * p.phase) * s * g + c * e


def _apply_sideband_inplace(amps: np.ndarray, p: Pulse) -> None:
    ax = p.ion - 1
    n_max = amps.shape[-1] - 1
    upper = E if p.polarization == POL_I else AUX
    # |upper, n>=1> couples to |g, n+1>, outside the manifold the gates rely on
    if n_max >= 1:
        stray = amps[_level_slice(amps.ndim, ax, upper, slice(1, None))]
        leak = float(np.sum(np.abs(stray) ** 2))
        if leak > LEAK_TOL**2:
            raise LeakageError(
                f"sideband pulse on ion {p.ion} would leave the 0/1 phonon manifold "
                f"(population {leak:.3e} in |{LEVEL_NAMES[upper]}, n>=1>)"
            )
    for n in range(1, n_max + 1):
        angle = p.k * np.pi / 2 * np.sqrt(n)
        c, s = np.cos(angle), np.sin(angle)
        ig = _level_slice(amps.ndim, ax, G, n)
        iu = _level_slice(amps.ndim, ax, upper, n - 1)
        g, u = amps[ig].copy(), amps[iu].copy()
        amps[ig] = c * g - 1j * np.exp(1j * p.phase) * s * u
        amps[iu] = -1j * np.exp(-1j * p.phase) * s * g + c * u


def _check_pulse(state: IonState, p: Pulse) -> None:
    if not 1 <= p.ion <= state.n_ions:
        raise IndexError(f"ion {p.ion} out of range 1..{state.n_ions}")


def apply_carrier(state: IonState, p: Pulse) -> IonState:
    if p.kind != CARRIER:
        raise ValidationError("apply_carrier needs a carrier pulse")
    _check_pulse(state, p)
    amps = np.array(state.amplitudes)
    _apply_carrier_inplace(amps, p)
    return IonState(state.n_ions, amps, state.n_max)


def apply_sideband(state: IonState, p: Pulse) -> IonState:
    if p.kind != RED_SIDEBAND:
        raise ValidationError("apply_sideband needs a red-sideband pulse")
    _check_pulse(state, p)
    amps = np.array(state.amplitudes)
    _apply_sideband_inplace(amps, p)
    return IonState(state.n_ions, amps, state.n_max)


def apply_pulse(state: IonState, p: Pulse) -> IonState:
    return apply_carrier(state, p) if p.kind == CARRIER else apply_sideband(state, p)


def simulate_program(
    program: PulseProgram,
    initial: IonState | str | None = None,
    on_step: Callable[[int, Pulse, np.ndarray], None] | None = None,
    n_max: int = 2,
) -> IonState:
    """Apply the pulses in order.  ``on_step(i, pulse, amplitudes)`` sees the state after each pulse."""
    if initial is None:
        initial = program.initial or "0" * program.n_ions
    if not isinstance(initial, IonState):
        initial = ion_basis_state(initial, n_max)
    if initial.n_ions != program.n_ions:
        raise ValidationError(f"program has {program.n_ions} ions, state has {initial.n_ions}")
    amps = np.array(initial.amplitudes)
    for i, p in enumerate(program.pulses):
        if p.kind == CARRIER:
            _apply_carrier_inplace(amps, p)
        else:
            _apply_sideband_inplace(amps, p)
        if on_step is not None:
            on_step(i, p, amps)
    return IonState(initial.n_ions, amps, initial.n_max)


# --- compiler ---------------------------------------------------------------------------


def multi_cnot_pulses(controls: Sequence[int], target: int) -> list[Pulse]:
    """Pulses (application order) for a NOT on ``target`` conditioned on all ``controls``.

    The first control maps its |e> onto one phonon; the remaining controls
    absorb that phonon into their aux level unless they are in |e>; a 2pi
    aux pulse on the target then flips the sign of |g> only when the phonon
    survived.  The return sweep runs in reverse control order.
    """
    controls = list(controls)
    if not controls:
        raise ValidationError("multi-control NOT needs at least one control")
    if target in controls or len(set(controls)) != len(controls):
        raise ValidationError(f"controls {controls} and target {target} must be distinct")
    first, rest = controls[0], controls[1:]
    pulses = [carrier(target, 0.5, 0.0), sideband(first, 1, POL_I)]
    pulses += [sideband(m, 1, POL_II) for m in rest]
    pulses.append(sideband(target, 2, POL_II))
    pulses += [sideband(m, 1, POL_II) for m in reversed(rest)]
    pulses += [sideband(first, 1, POL_I), carrier(target, 0.5, np.pi)]
    return pulses


def compile_multi_cnot(controls: Sequence[int], target: int, n_ions: int | None = None) -> PulseProgram:
    n = n_ions if n_ions is not None else max(*controls, target)
    return PulseProgram(n, tuple(multi_cnot_pulses(controls, target)))


def o_form_angles(matrix: np.ndarray, tol: float = O_FORM_TOL) -> tuple[float, float]:
    """Return ``(theta, phi)`` with ``rotation_O(theta, phi) == matrix``; theta in [0, 2pi]."""
    w = np.asarray(matrix, dtype=complex)
    ok = (
        abs(w[0, 0].imag) <= tol
        and abs(w[1, 1] - w[0, 0]) <= tol
        and abs(w[1, 0] + np.conj(w[0, 1])) <= tol
        and abs(abs(w[0, 0]) ** 2 + abs(w[0, 1]) ** 2 - 1) <= tol
    )
    if not ok:
        raise UnsupportedGateError("rotation is not of the carrier form O(theta, phi)")
    s = abs(w[0, 1])
    theta = 2 * float(np.arctan2(s, w[0, 0].real))
    phi = float(np.angle(w[0, 1])) if s > tol else 0.0
    return theta, phi


def rotation_pulses(op: Rotate) -> list[Pulse]:
    theta, phi = o_form_angles(op.matrix)
    if theta <= O_FORM_TOL:
        return []
    return [carrier(op.target, theta / np.pi, phi)]


def compile_ops(ops: Iterable[GateOp], n_qubits: int) -> list[Pulse]:
    pulses: list[Pulse] = []
    for op in lower(ops):
        if isinstance(op, Rotate):
            pulses += rotation_pulses(op)
        elif not op.controls:
            # bare NOT realized as i*X; the factor i is a global phase
            pulses.append(carrier(op.target, 1.0, np.pi / 2))
        else:
            pulses += multi_cnot_pulses(op.controls, op.target)
    return pulses


def compile_circuit(circuit: Circuit) -> PulseProgram:
    return PulseProgram(circuit.n_qubits, tuple(compile_ops(circuit.ops, circuit.n_qubits)), circuit.initial)


def run_circuit_on_ions(circuit: Circuit, n_max: int = 2) -> StateVector:
    """Compile, simulate from the circuit's initial pattern, and map back to qubits."""
    program = compile_circuit(circuit)
    final = simulate_program(program, ion_basis_state(circuit.initial, n_max))
    return ion_to_qubit(final)
