from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftest import random_state_vector
from ionsynth.errors import ValidationError
from ionsynth.qstate import (
    StateVector,
    amplitude,
    basis_state,
    concurrence,
    fidelity_global_phase_invariant,
    index_pattern,
    pattern_index,
    reduced_two_qubit,
)
from ionsynth.synthesis import build_symmetric_network
from ionsynth.gates import simulate

SY = np.array([[0, -1j], [1j, 0]])


def wootters_eigen_route(rho: np.ndarray) -> float:
    """Textbook definition: sqrt of eigenvalues of rho (Y x Y) rho* (Y x Y)."""
    yy = np.kron(SY, SY)
    ev = np.linalg.eigvals(rho @ yy @ rho.conj() @ yy)
    lam = np.sort(np.sqrt(np.clip(ev.real, 0, None)))[::-1]
    return max(0.0, lam[0] - lam[1] - lam[2] - lam[3])


def ghz(n):
    return StateVector.from_terms(n, [("0" * n, 2**-0.5), ("1" * n, 2**-0.5)])


def xi(n):
    return simulate(build_symmetric_network(n))


def test_pattern_index_is_big_endian():
    assert pattern_index("100") == 4
    assert pattern_index([0, 0, 1]) == 1
    assert index_pattern(6, 3) == "110"
    with pytest.raises(ValidationError):
        pattern_index("012")


@pytest.mark.parametrize("n, pattern", [(3, "111"), (1, "0"), (4, "0000")])
def test_basis_state(n, pattern):
    s = basis_state(n, pattern)
    assert amplitude(s, pattern) == 1
    assert s.norm == pytest.approx(1, abs=1e-15)
    assert np.count_nonzero(s.amplitudes) == 1


def test_basis_state_size_mismatch():
    with pytest.raises(ValidationError):
        basis_state(3, "11")
    with pytest.raises(ValidationError):
        amplitude(basis_state(2, "11"), "111")


def test_state_is_immutable_and_normalized():
    s = basis_state(2, "01")
    with pytest.raises(ValueError):
        s.amplitudes[0] = 1
    with pytest.raises(ValidationError):
        StateVector(1, [1, 1])


def test_amplitude_examples():
    assert amplitude(xi(3), "011") == pytest.approx(1 / np.sqrt(3), abs=1e-14)
    assert amplitude(basis_state(3, "000"), "111") == 0
    g = ghz(4)
    assert abs(amplitude(g, "1111")) == pytest.approx(2**-0.5, abs=1e-15)


def test_fidelity_examples():
    s = StateVector(2, random_state_vector(2, np.random.default_rng(1)))
    assert fidelity_global_phase_invariant(s, s) == pytest.approx(1, abs=1e-14)
    assert fidelity_global_phase_invariant(basis_state(1, "0"), basis_state(1, "1")) == 0
    plus = StateVector(1, [2**-0.5, 2**-0.5])
    # <0|+> = 1/sqrt2 -> 1/2
    assert fidelity_global_phase_invariant(basis_state(1, "0"), plus) == pytest.approx(0.5, abs=1e-15)
    with pytest.raises(ValidationError):
        fidelity_global_phase_invariant(basis_state(1, "0"), basis_state(2, "00"))


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 5), st.floats(0, 2 * np.pi), st.floats(0, 2 * np.pi), st.integers(0, 2**32 - 1))
def test_fidelity_is_phase_invariant_and_symmetric(n, pa, pb, seed):
    rng = np.random.default_rng(seed)
    a = StateVector(n, random_state_vector(n, rng))
    b = StateVector(n, random_state_vector(n, rng))
    f = fidelity_global_phase_invariant(a, b)
    a2 = StateVector(n, np.exp(1j * pa) * a.amplitudes)
    b2 = StateVector(n, np.exp(1j * pb) * b.amplitudes)
    assert fidelity_global_phase_invariant(a2, b2) == pytest.approx(f, abs=1e-12)
    assert fidelity_global_phase_invariant(b, a) == pytest.approx(f, abs=1e-15)
    assert 0 <= f <= 1


def test_reduced_examples():
    rho = reduced_two_qubit(basis_state(2, "00"), 1, 2)
    assert np.allclose(rho, np.diag([1, 0, 0, 0]), atol=1e-15)
    rho = reduced_two_qubit(ghz(3), 1, 2)
    assert np.allclose(rho, np.diag([0.5, 0, 0, 0.5]), atol=1e-15)
    bell = np.array([0, 1, 1, 0]) / np.sqrt(2)
    rho = reduced_two_qubit(xi(2), 1, 2)
    assert np.allclose(rho, np.outer(bell, bell), atol=1e-14)


def test_reduced_order_follows_arguments():
    s = basis_state(3, "100")
    assert np.allclose(reduced_two_qubit(s, 1, 3), np.diag([0, 0, 1, 0]))
    assert np.allclose(reduced_two_qubit(s, 3, 1), np.diag([0, 1, 0, 0]))


@pytest.mark.parametrize("i, j", [(1, 1), (0, 2), (1, 4)])
def test_reduced_index_errors(i, j):
    with pytest.raises(IndexError):
        reduced_two_qubit(basis_state(3, "000"), i, j)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 5), st.data())
def test_reduced_of_product_state(n, data):
    seed = data.draw(st.integers(0, 2**32 - 1))
    rng = np.random.default_rng(seed)
    singles = [random_state_vector(1, rng) for _ in range(n)]
    psi = singles[0]
    for s in singles[1:]:
        psi = np.kron(psi, s)
    i = data.draw(st.integers(1, n))
    j = data.draw(st.integers(1, n).filter(lambda k: k != i))
    pair = np.kron(singles[i - 1], singles[j - 1])
    assert np.allclose(reduced_two_qubit(StateVector(n, psi), i, j), np.outer(pair, pair.conj()), atol=1e-13)


def test_concurrence_examples():
    bell = np.array([1, 0, 0, 1]) / np.sqrt(2)
    assert concurrence(np.outer(bell, bell)) == pytest.approx(1, abs=1e-14)
    assert concurrence(np.diag([0.5, 0, 0, 0.5])) == pytest.approx(0, abs=1e-15)
    assert concurrence(reduced_two_qubit(xi(4), 1, 2)) == pytest.approx(0.5, abs=1e-12)


def test_concurrence_rejects_invalid_matrices():
    with pytest.raises(ValidationError):
        concurrence(np.diag([1, 1, 0, 0]))
    with pytest.raises(ValidationError):
        concurrence(np.diag([1.5, -0.5, 0, 0]))
    m = np.diag([0.5, 0.5, 0, 0]).astype(complex)
    m[0, 1] = 0.1
    with pytest.raises(ValidationError):
        concurrence(m)


def test_concurrence_matches_pure_state_formula(rng):
    for _ in range(20):
        a, b, c, d = random_state_vector(2, rng)
        psi = np.array([a, b, c, d])
        assert concurrence(np.outer(psi, psi.conj())) == pytest.approx(2 * abs(a * d - b * c), abs=1e-10)


def test_concurrence_matches_eigenvalue_route_on_mixed_states(rng):
    for rank in (2, 3, 4):
        for _ in range(10):
            v = rng.normal(size=(4, rank)) + 1j * rng.normal(size=(4, rank))
            rho = v @ v.conj().T
            rho /= np.trace(rho).real
            assert concurrence(rho) == pytest.approx(wootters_eigen_route(rho), abs=1e-7)


@pytest.mark.parametrize("n", [2, 3, 5, 8])
def test_symmetric_state_pair_concurrence(n):
    s = xi(n)
    for i in range(1, n + 1):
        for j in range(i + 1, n + 1):
            assert concurrence(reduced_two_qubit(s, i, j)) == pytest.approx(2 / n, abs=1e-9)
