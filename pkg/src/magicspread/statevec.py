"""Dense pure states of N qubits.

Bit convention (used everywhere in the package): the amplitude at index ``x``
belongs to the computational basis state in which qubit ``j`` has the value of
bit ``j`` of ``x``. Qubit 0 is therefore the least significant bit, and
``numpy.kron(v_{N-1}, ..., v_0)`` builds a product state.

Two-qubit gates act on the 4-dim space ordered as ``2 * bit(site_a) + bit(site_b)``,
i.e. ``numpy.kron(A, B)`` applies ``A`` to ``site_a`` and ``B`` to ``site_b``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels

UNITARY_TOL = 1e-10


@dataclass
class StateVector:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be >= 1")
        amps = np.ascontiguousarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (1 << self.num_qubits,):
            raise ValueError(
                f"expected {1 << self.num_qubits} amplitudes for {self.num_qubits} qubits, got shape {amps.shape}"
            )
        self.amplitudes = amps

    @property
    def dim(self) -> int:
        return 1 << self.num_qubits

    @classmethod
    def basis(cls, num_qubits: int, index: int = 0) -> "StateVector":
        amps = np.zeros(1 << num_qubits, dtype=np.complex128)
        amps[index] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def uniform(cls, num_qubits: int) -> "StateVector":
        d = 1 << num_qubits
        return cls(num_qubits, np.full(d, d ** -0.5, dtype=np.complex128))

    @classmethod
    def from_amplitudes(cls, amplitudes, normalize: bool = False) -> "StateVector":
        amps = np.array(amplitudes, dtype=np.complex128)
        nq = int(round(np.log2(amps.size)))
        if 1 << nq != amps.size:
            raise ValueError("length of amplitudes must be a power of two")
        if normalize:
            amps /= np.linalg.norm(amps)
        return cls(nq, amps)

    def copy(self) -> "StateVector":
        return StateVector(self.num_qubits, self.amplitudes.copy())


def _check_site(state: StateVector, site: int) -> None:
    if not 0 <= site < state.num_qubits:
        raise IndexError(f"site {site} out of range for {state.num_qubits} qubits")


def _check_unitary(gate: np.ndarray) -> None:
    err = np.abs(gate.conj().T @ gate - np.eye(gate.shape[0])).max()
    if err > UNITARY_TOL:
        raise ValueError(f"gate is not unitary (max deviation {err:.2e})")


def apply_single_qubit_gate(state: StateVector, site: int, gate, validate: bool = False) -> StateVector:
    """Apply a 2x2 gate to ``site`` in place and return the state."""
    _check_site(state, site)
    g = np.asarray(gate, dtype=np.complex128)
    if g.shape != (2, 2):
        raise ValueError("single-qubit gate must be 2x2")
    if validate:
        _check_unitary(g)
    _kernels.apply_1q(state.amplitudes, site, g[0, 0], g[0, 1], g[1, 0], g[1, 1])
    return state


def apply_two_qubit_gate(state: StateVector, site_a: int, site_b: int, gate, validate: bool = False) -> StateVector:
    """Apply a 4x4 gate in place; the gate's basis is ``|bit(site_a) bit(site_b)>``."""
    _check_site(state, site_a)
    _check_site(state, site_b)
    if site_a == site_b:
        raise ValueError("two-qubit gate needs distinct sites")
    g = np.ascontiguousarray(gate, dtype=np.complex128)
    if g.shape != (4, 4):
        raise ValueError("two-qubit gate must be 4x4")
    if validate:
        _check_unitary(g)
    _kernels.apply_2q(state.amplitudes, site_a, site_b, g)
    return state


def global_walsh_hadamard(state: StateVector) -> StateVector:
    """Apply H on every qubit in place, O(N 2^N)."""
    _kernels.fwht_inplace(state.amplitudes)
    state.amplitudes *= 2.0 ** (-state.num_qubits / 2)
    return state


def spin_values(num_qubits: int) -> np.ndarray:
    """Z eigenvalues z_j(x) = 1 - 2 * bit_j(x) as an int8 array of shape (2^N, N)."""
    x = np.arange(1 << num_qubits, dtype=np.int64)
    bits = (x[:, None] >> np.arange(num_qubits)) & 1
    return (1 - 2 * bits).astype(np.int8)


def ising_phase_table(num_qubits: int, h, coupling: float) -> np.ndarray:
    """Classical energies sum_j h_j z_j + J sum_j z_j z_{j+1} (open chain) for every basis label."""
    z = spin_values(num_qubits).astype(np.float64)
    h = np.broadcast_to(np.asarray(h, dtype=np.float64), (num_qubits,))
    energy = z @ h
    if num_qubits > 1:
        energy += coupling * np.einsum("xj,xj->x", z[:, :-1], z[:, 1:])
    return energy


def apply_diagonal_phase(state: StateVector, phases) -> StateVector:
    """Multiply amplitude x by exp(-i * phases[x]) in place."""
    phases = np.asarray(phases, dtype=np.float64)
    if phases.shape != (state.dim,):
        raise ValueError(f"phase table must have length {state.dim}")
    if np.isnan(phases).any():
        raise ValueError("NaN in phase table")
    state.amplitudes *= np.exp(-1j * phases)
    return state


def probabilities(state: StateVector) -> np.ndarray:
    amps = state.amplitudes
    return amps.real ** 2 + amps.imag ** 2


def inner_product(a: StateVector, b: StateVector) -> complex:
    """<a|b>."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"qubit count mismatch: {a.num_qubits} vs {b.num_qubits}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def norm(state: StateVector) -> float:
    return float(np.linalg.norm(state.amplitudes))


# -- checkpoint format: int64 N (little-endian) followed by interleaved float64 re/im pairs


def dump_state(state: StateVector, path) -> None:
    with open(path, "wb") as fh:
        fh.write(struct.pack("<q", state.num_qubits))
        fh.write(state.amplitudes.astype("<c16").tobytes())


def load_state(path) -> StateVector:
    raw = Path(path).read_bytes()
    if len(raw) < 8:
        raise ValueError("truncated state dump")
    (nq,) = struct.unpack("<q", raw[:8])
    if not 1 <= nq <= 40 or len(raw) != 8 + 16 * (1 << nq):
        raise ValueError("state dump size does not match its header")
    amps = np.frombuffer(raw, dtype="<c16", offset=8).astype(np.complex128)
    return StateVector(int(nq), amps)
