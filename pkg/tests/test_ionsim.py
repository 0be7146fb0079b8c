from __future__ import annotations

import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.linalg import expm

from conftest import random_state_vector
from ionsynth.errors import LeakageError, ResidualPopulationError, UnsupportedGateError, ValidationError
from ionsynth.gates import Circuit, MultiControlNot, Rotate, Rotation, rotation_O, simulate
from ionsynth.ionsim import (
    AUX,
    CARRIER,
    E,
    G,
    POL_I,
    POL_II,
    RED_SIDEBAND,
    IonState,
    Pulse,
    PulseProgram,
    apply_carrier,
    apply_pulse,
    apply_sideband,
    carrier,
    compile_circuit,
    compile_multi_cnot,
    ion_basis_state,
    ion_to_qubit,
    multi_cnot_pulses,
    o_form_angles,
    qubit_to_ion,
    run_circuit_on_ions,
    sideband,
    simulate_program,
)
from ionsynth.qstate import StateVector, basis_state, fidelity
from ionsynth.synthesis import build_ghz_network, build_symmetric_network, random_target, synthesize

N_MAX = 2
DIM_PH = N_MAX + 1


# --- generator oracle -------------------------------------------------------------


def ket(level):
    v = np.zeros((3, 1), dtype=complex)
    v[level] = 1
    return v


def ladder():
    return np.diag(np.sqrt(np.arange(1, DIM_PH)), 1).astype(complex)


def single_ion_generator(pulse: Pulse) -> np.ndarray:
    """Hermitian H with pulse unitary exp(-i k pi/2 H) on one ion x phonon mode."""
    ph = np.exp(1j * pulse.phase)
    if pulse.kind == CARRIER:
        lower = ket(G) @ ket(E).T
        return 1j * (ph * np.kron(lower, np.eye(DIM_PH)) - np.conj(ph) * np.kron(lower.T, np.eye(DIM_PH)))
    upper = E if pulse.polarization == POL_I else AUX
    a = ladder()
    gu = ket(G) @ ket(upper).T
    return ph * np.kron(gu, a.conj().T) + np.conj(ph) * np.kron(gu.T, a)


def pulse_unitary(n_ions: int, pulse: Pulse) -> np.ndarray:
    """Full-space unitary: ion axes in order, phonon last."""
    h1 = single_ion_generator(pulse)
    u1 = expm(-1j * pulse.k * np.pi / 2 * h1)  # (ion, phonon) x (ion, phonon)
    u1 = u1.reshape(3, DIM_PH, 3, DIM_PH)
    n = n_ions
    shape = (3,) * n + (DIM_PH,)
    dim = 3**n * DIM_PH
    out = np.zeros((dim, dim), dtype=complex)
    for rest in itertools.product(range(3), repeat=n - 1):
        for a, i, b, j in itertools.product(range(3), range(DIM_PH), range(3), range(DIM_PH)):
            lo, li = list(rest), list(rest)
            lo.insert(pulse.ion - 1, a)
            li.insert(pulse.ion - 1, b)
            r = np.ravel_multi_index((*lo, i), shape)
            c = np.ravel_multi_index((*li, j), shape)
            out[r, c] = u1[a, i, b, j]
    return out


def allowed_random_state(n_ions: int, rng, upper: int, ion: int) -> np.ndarray:
    amps = rng.normal(size=(3,) * n_ions + (DIM_PH,)) + 1j * rng.normal(size=(3,) * n_ions + (DIM_PH,))
    idx = [slice(None)] * (n_ions + 1)
    idx[ion - 1] = upper
    idx[-1] = slice(1, None)
    amps[tuple(idx)] = 0
    return amps / np.linalg.norm(amps)


pulses = st.one_of(
    st.builds(lambda ion, k, ph: carrier(ion, k, ph), st.integers(1, 2), st.floats(0.05, 4), st.floats(-4, 4)),
    st.builds(
        lambda ion, k, pol, ph: sideband(ion, k, pol, ph),
        st.integers(1, 2),
        st.sampled_from([1, 2]),
        st.sampled_from([POL_I, POL_II]),
        st.floats(-4, 4),
    ),
)


@settings(max_examples=80, deadline=None)
@given(pulses, st.integers(0, 2**32 - 1))
def test_pulse_matches_generator_exponential(pulse, seed):
    rng = np.random.default_rng(seed)
    upper = E if pulse.polarization == POL_I else AUX
    amps = allowed_random_state(2, rng, upper, pulse.ion)
    got = apply_pulse(IonState(2, amps, N_MAX), pulse).amplitudes.reshape(-1)
    want = pulse_unitary(2, pulse) @ amps.reshape(-1)
    assert np.allclose(got, want, atol=1e-12)


# --- closed-form examples ---------------------------------------------------------


def test_carrier_examples():
    s = apply_carrier(ion_basis_state("g"), carrier(1, 1.0, 0.0))
    assert s.amplitudes[E, 0] == pytest.approx(-1)
    s = apply_carrier(ion_basis_state("e"), carrier(1, 1.0, np.pi / 2))
    assert s.amplitudes[G, 0] == pytest.approx(1j)
    s = apply_carrier(ion_basis_state("g", phonon=1), carrier(1, 0.5, 0.0))
    assert s.amplitudes[G, 1] == pytest.approx(2**-0.5)
    assert s.amplitudes[E, 1] == pytest.approx(-(2**-0.5))


def test_sideband_examples():
    s = apply_sideband(ion_basis_state("g", phonon=1), sideband(1, 1, POL_I))
    assert s.amplitudes[E, 0] == pytest.approx(-1j)
    s = apply_sideband(ion_basis_state("g", phonon=1), sideband(1, 2, POL_II))
    assert s.amplitudes[G, 1] == pytest.approx(-1)
    s = apply_sideband(ion_basis_state("g"), sideband(1, 1))
    assert s.amplitudes[G, 0] == 1
    s = apply_sideband(ion_basis_state("e"), sideband(1, 1))
    assert s.amplitudes[G, 1] == pytest.approx(-1j)
    s = apply_sideband(ion_basis_state("g", phonon=2), sideband(1, 1))
    c, sn = np.cos(np.pi / 2 * np.sqrt(2)), np.sin(np.pi / 2 * np.sqrt(2))
    assert s.amplitudes[G, 2] == pytest.approx(c)
    assert s.amplitudes[E, 1] == pytest.approx(-1j * sn)


@settings(max_examples=40, deadline=None)
@given(st.floats(0.05, 4), st.floats(-4, 4), st.integers(0, 2**32 - 1))
def test_carrier_preserves_phonon_distribution(k, phase, seed):
    rng = np.random.default_rng(seed)
    amps = rng.normal(size=(3, 3, DIM_PH)) + 0j
    amps /= np.linalg.norm(amps)
    s = IonState(2, amps)
    out = apply_carrier(s, carrier(2, k, phase))
    assert np.allclose(out.phonon_populations(), s.phonon_populations(), atol=1e-14)


def test_pulse_validation():
    with pytest.raises(ValidationError):
        Pulse("blue", 1, 1.0)
    with pytest.raises(ValidationError):
        carrier(1, 0.0)
    with pytest.raises(ValidationError):
        Pulse(CARRIER, 1, 1.0, POL_II)
    with pytest.raises(ValidationError):
        sideband(1, 3)
    with pytest.raises(IndexError):
        PulseProgram(2, (carrier(3, 1.0),))
    with pytest.raises(ValidationError):
        apply_carrier(ion_basis_state("g"), sideband(1, 1))


def test_leakage_is_detected():
    with pytest.raises(LeakageError):
        apply_sideband(ion_basis_state("e", phonon=1), sideband(1, 1))
    prog = PulseProgram(2, (sideband(1, 1), sideband(2, 1)))
    with pytest.raises(LeakageError):
        simulate_program(prog, "11")


def test_ion_to_qubit():
    psi = StateVector(2, random_state_vector(2, np.random.default_rng(3)))
    assert np.allclose(ion_to_qubit(qubit_to_ion(psi)).amplitudes, psi.amplitudes)
    with pytest.raises(ResidualPopulationError):
        ion_to_qubit(ion_basis_state("ga"))
    with pytest.raises(ResidualPopulationError):
        ion_to_qubit(ion_basis_state("gg", phonon=1))


def test_ion_basis_state_accepts_levels_and_bits():
    assert np.array_equal(ion_basis_state("eg").amplitudes, ion_basis_state("10").amplitudes)
    s = ion_basis_state("ae")
    assert s.level_population(1, AUX) == 1 and s.level_population(2, E) == 1


# --- multi-control NOT --------------------------------------------------------------


@pytest.mark.parametrize("q", [1, 2, 3, 4])
def test_multi_cnot_truth_table(q):
    n = q + 1
    controls, target = list(range(1, q + 1)), n
    prog = compile_multi_cnot(controls, target)
    assert len(prog) == 2 * q + 3
    assert prog.counts.as_tuple() == (2, 2 * q, 1)
    for bits in itertools.product("01", repeat=n):
        pattern = "".join(bits)
        out = simulate_program(prog, pattern)
        assert out.phonon_populations()[0] == pytest.approx(1, abs=1e-14)
        assert sum(out.level_population(i, AUX) for i in range(1, n + 1)) == pytest.approx(0, abs=1e-14)
        flip = all(b == "1" for b in pattern[:q])
        want = pattern[:q] + (str(1 - int(pattern[q])) if flip else pattern[q])
        assert fidelity(ion_to_qubit(out), basis_state(n, want)) == pytest.approx(1, abs=1e-14)


def test_multi_cnot_exact_on_superpositions():
    """No relative phase between branches."""
    rng = np.random.default_rng(11)
    for q in (1, 2, 3):
        n = q + 1
        psi = StateVector(n, random_state_vector(n, rng))
        op = MultiControlNot(tuple(range(1, n)), n)
        want = simulate(Circuit(n, (op,)), psi)
        got = ion_to_qubit(simulate_program(compile_multi_cnot(range(1, n), n), qubit_to_ion(psi)))
        assert np.allclose(got.amplitudes, want.amplitudes, atol=1e-13)


def test_multi_cnot_pulse_order():
    p = multi_cnot_pulses([2, 4, 1], 3)
    assert [(x.kind, x.ion, x.k, x.polarization) for x in p] == [
        (CARRIER, 3, 0.5, POL_I),
        (RED_SIDEBAND, 2, 1, POL_I),
        (RED_SIDEBAND, 4, 1, POL_II),
        (RED_SIDEBAND, 1, 1, POL_II),
        (RED_SIDEBAND, 3, 2, POL_II),
        (RED_SIDEBAND, 1, 1, POL_II),
        (RED_SIDEBAND, 4, 1, POL_II),
        (RED_SIDEBAND, 2, 1, POL_I),
        (CARRIER, 3, 0.5, POL_I),
    ]
    assert p[-1].phase == pytest.approx(np.pi)


def test_multi_cnot_validation():
    with pytest.raises(ValidationError):
        multi_cnot_pulses([], 1)
    with pytest.raises(ValidationError):
        multi_cnot_pulses([1, 2], 2)


# --- compiler -------------------------------------------------------------------------


def test_o_form_angles():
    for theta, phi in [(0.3, 0.2), (np.pi, -1.0), (1.9 * np.pi, 2.5)]:
        t, p = o_form_angles(rotation_O(Rotation(theta, phi)))
        assert np.allclose(rotation_O(Rotation(t, p)), rotation_O(Rotation(theta, phi)), atol=1e-12)
        assert 0 <= t <= 2 * np.pi
    with pytest.raises(UnsupportedGateError):
        o_form_angles(np.diag([1, 1j]))


def test_single_rotation_compiles_to_one_carrier():
    c = Circuit(1, (Rotate(1, rotation_O(Rotation(np.pi / 2, 0.4))),))
    prog = compile_circuit(c)
    assert len(prog) == 1 and prog.pulses[0].k == pytest.approx(0.5)
    assert prog.pulses[0].phase == pytest.approx(0.4)


@pytest.mark.parametrize("n, counts", [(2, (3, 2, 1)), (3, (9, 8, 3)), (4, (15, 18, 5))])
def test_symmetric_compiled_counts(n, counts):
    assert compile_circuit(build_symmetric_network(n)).counts.as_tuple() == counts


@pytest.mark.parametrize("n", range(2, 6))
def test_ion_level_matches_gate_level(n):
    for c in (build_symmetric_network(n), build_ghz_network(n)):
        assert fidelity(run_circuit_on_ions(c), simulate(c)) == pytest.approx(1, abs=1e-12)
    res = synthesize(random_target(n, np.random.default_rng(n)))
    assert fidelity(run_circuit_on_ions(res.circuit), res.state) == pytest.approx(1, abs=1e-12)


def test_program_round_trip_and_counts_check():
    prog = compile_circuit(build_symmetric_network(3))
    d = prog.to_dict()
    back = PulseProgram.from_dict(d)
    assert back.pulses == prog.pulses and back.initial == "111"
    d["counts"]["N_A"] += 1
    with pytest.raises(ValidationError):
        PulseProgram.from_dict(d)
    with pytest.raises(ValidationError):
        PulseProgram.from_dict({"n_ions": 1})


def test_on_step_sees_every_pulse():
    prog = compile_multi_cnot([1], 2)
    seen = []
    simulate_program(prog, "10", on_step=lambda i, p, a: seen.append((i, float(np.sum(np.abs(a[..., 1:]) ** 2)))))
    assert [i for i, _ in seen] == list(range(len(prog)))
    assert max(pop for _, pop in seen) == pytest.approx(1)
    assert seen[-1][1] == pytest.approx(0, abs=1e-14)
