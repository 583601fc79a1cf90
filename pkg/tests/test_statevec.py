import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magicspread import oracles
from magicspread.propagators import haar_unitaries
from magicspread.statevec import (
    StateVector,
    apply_diagonal_phase,
    apply_single_qubit_gate,
    apply_two_qubit_gate,
    dump_state,
    global_walsh_hadamard,
    inner_product,
    ising_phase_table,
    load_state,
    norm,
    probabilities,
    spin_values,
)


def test_basis_and_uniform():
    b = StateVector.basis(3, 5)
    assert b.amplitudes[5] == 1 and np.count_nonzero(b.amplitudes) == 1
    u = StateVector.uniform(4)
    assert np.allclose(probabilities(u), 1 / 16)


def test_from_amplitudes_rejects_bad_length():
    with pytest.raises(ValueError):
        StateVector.from_amplitudes(np.ones(3))


def test_x_on_site_flips_that_bit():
    st_ = StateVector.basis(4, 0)
    apply_single_qubit_gate(st_, 2, oracles.X)
    assert abs(st_.amplitudes[0b0100]) == 1


def test_walsh_hadamard_of_zero_is_uniform():
    st_ = global_walsh_hadamard(StateVector.basis(5, 0))
    assert np.allclose(st_.amplitudes, 1 / math.sqrt(32))


@pytest.mark.parametrize("nq", [1, 2, 3, 4, 5, 6, 8])
def test_walsh_hadamard_matches_dense(random_state, nq):
    s = random_state(nq)
    ref = oracles.walsh_hadamard_dense(nq) @ s.amplitudes
    assert np.allclose(global_walsh_hadamard(s).amplitudes, ref, atol=1e-13)


def test_walsh_hadamard_is_involution(random_state):
    s = random_state(7)
    before = s.amplitudes.copy()
    global_walsh_hadamard(global_walsh_hadamard(s))
    assert np.allclose(s.amplitudes, before, atol=1e-13)


@pytest.mark.parametrize("site", [0, 1, 3])
def test_single_qubit_gate_matches_embedding(rng, random_state, site):
    s = random_state(4)
    g = haar_unitaries(rng, 2, 1)[0]
    ref = oracles.embed({site: g}, 4) @ s.amplitudes
    assert np.allclose(apply_single_qubit_gate(s, site, g).amplitudes, ref, atol=1e-13)


@pytest.mark.parametrize("a,b", [(0, 1), (1, 0), (2, 3), (0, 3), (3, 1)])
def test_two_qubit_gate_matches_embedding(rng, random_state, a, b):
    nq = 4
    s = random_state(nq)
    g = haar_unitaries(rng, 4, 1)[0]
    # build the dense operator element by element in the local index 2*bit(a) + bit(b)
    d = 1 << nq
    dense = np.zeros((d, d), dtype=complex)
    for x in range(d):
        ia = 2 * ((x >> a) & 1) + ((x >> b) & 1)
        for out in range(4):
            y = x & ~(1 << a) & ~(1 << b)
            y |= ((out >> 1) & 1) << a
            y |= (out & 1) << b
            dense[y, x] += g[out, ia]
    ref = dense @ s.amplitudes
    assert np.allclose(apply_two_qubit_gate(s, a, b, g).amplitudes, ref, atol=1e-13)


def test_two_qubit_gate_kron_puts_first_factor_on_site_a(random_state):
    s = random_state(3)
    ref = oracles.embed({2: oracles.X, 0: oracles.Z}, 3) @ s.amplitudes
    out = apply_two_qubit_gate(s, 2, 0, np.kron(oracles.X, oracles.Z))
    assert np.allclose(out.amplitudes, ref)


def test_gate_validation():
    s = StateVector.basis(3)
    with pytest.raises(ValueError):
        apply_two_qubit_gate(s, 1, 1, np.eye(4))
    with pytest.raises(IndexError):
        apply_single_qubit_gate(s, 3, np.eye(2))
    with pytest.raises(ValueError):
        apply_single_qubit_gate(s, 0, np.array([[1, 1], [0, 1]]), validate=True)


def test_spin_values_and_phase_table():
    sv = spin_values(3)
    assert sv.shape == (8, 3)
    assert list(sv[0b001]) == [-1, 1, 1]
    h = np.array([0.3, -0.2, 0.7])
    table = ising_phase_table(3, h, 1.1)
    ref = np.real(np.diag(oracles.dense_mfim(3, 0.0, h, 1.1)))
    assert np.allclose(table, ref)


def test_diagonal_phase_rejects_nan(random_state):
    s = random_state(2)
    with pytest.raises(ValueError):
        apply_diagonal_phase(s, np.array([1, np.nan, 1, 1]))


def test_inner_product_size_mismatch():
    with pytest.raises(ValueError):
        inner_product(StateVector.basis(2), StateVector.basis(3))


def test_dump_and_load_round_trip(tmp_path, random_state):
    s = random_state(5)
    path = tmp_path / "psi.bin"
    dump_state(s, path)
    back = load_state(path)
    assert back.num_qubits == 5
    assert np.array_equal(back.amplitudes, s.amplitudes)


@settings(max_examples=25, deadline=None)
@given(nq=st.integers(1, 6), seed=st.integers(0, 2 ** 32 - 1), site=st.integers(0, 5))
def test_random_unitaries_preserve_norm(nq, seed, site):
    rng = np.random.default_rng(seed)
    s = StateVector.from_amplitudes(rng.normal(size=1 << nq) + 1j * rng.normal(size=1 << nq), normalize=True)
    apply_single_qubit_gate(s, site % nq, haar_unitaries(rng, 2, 1)[0])
    if nq > 1:
        apply_two_qubit_gate(s, site % nq, (site + 1) % nq, haar_unitaries(rng, 4, 1)[0])
    global_walsh_hadamard(s)
    assert abs(norm(s) - 1) < 1e-12
