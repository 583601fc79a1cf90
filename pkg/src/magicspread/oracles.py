"""Dense brute-force references for the fast kernels.

Everything here builds explicit 2^N x 2^N matrices from Kronecker products of
single-qubit Paulis and shares no code with the matrix-free paths it checks.
Only usable for small N.
"""

from __future__ import annotations

import itertools
import math
from functools import reduce

import numpy as np
import scipy.linalg

I2 = np.eye(2, dtype=np.complex128)
X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
HADAMARD = np.array([[1, 1], [1, -1]], dtype=np.complex128) / math.sqrt(2)
PAULIS = (I2, X, Y, Z)


def embed(ops: dict[int, np.ndarray], num_qubits: int) -> np.ndarray:
    """Dense operator with ops[j] on qubit j; qubit 0 is the rightmost Kronecker factor."""
    factors = [ops.get(j, I2) for j in reversed(range(num_qubits))]
    return reduce(np.kron, factors)


def dense_mfim(num_qubits: int, b: float, h, J: float) -> np.ndarray:
    h = np.broadcast_to(np.asarray(h, dtype=float), (num_qubits,))
    d = 1 << num_qubits
    H = np.zeros((d, d), dtype=np.complex128)
    for j in range(num_qubits):
        H += b * embed({j: X}, num_qubits) + h[j] * embed({j: Z}, num_qubits)
    for j in range(num_qubits - 1):
        H += J * embed({j: Z, j + 1: Z}, num_qubits)
    return H


def dense_kim(num_qubits: int, b: float, h, J: float) -> np.ndarray:
    """exp(-i b sum X) exp(-i (sum h Z + J sum ZZ)) from dense matrix exponentials."""
    hx = dense_mfim(num_qubits, b, 0.0, 0.0)
    hz = dense_mfim(num_qubits, 0.0, h, J)
    return scipy.linalg.expm(-1j * hx) @ scipy.linalg.expm(-1j * hz)


def expm_evolve(H: np.ndarray, psi: np.ndarray, t: float) -> np.ndarray:
    return scipy.linalg.expm(-1j * t * H) @ psi


def all_pauli_strings(num_qubits: int):
    for labels in itertools.product(range(4), repeat=num_qubits):
        yield labels, reduce(np.kron, [PAULIS[l] for l in labels])


def pauli_expectations(psi: np.ndarray) -> np.ndarray:
    """<P> for all 4^N Pauli strings; ``psi`` may be one state or a stack of shape (S, D)."""
    psis = np.atleast_2d(psi)
    nq = int(round(math.log2(psis.shape[1])))
    vals = np.empty((psis.shape[0], 4 ** nq), dtype=np.complex128)
    for i, (_, P) in enumerate(all_pauli_strings(nq)):
        vals[:, i] = np.einsum("sd,sd->s", psis.conj(), psis @ P.T)
    if np.abs(vals.imag).max() > 1e-10:
        raise AssertionError("non-real Pauli expectation in brute-force oracle")
    return vals.real if np.ndim(psi) == 2 else vals.real[0]


def _entropy_from_expectations(expect: np.ndarray, d: int, k: float) -> np.ndarray:
    xi = expect ** 2 / d
    if k == 1:
        terms = np.where(xi > 0, xi * np.log2(np.where(xi > 0, d * xi, 1.0)), 0.0)
        return -terms.sum(axis=-1)
    return np.log2((d ** (k - 1) * xi ** k).sum(axis=-1)) / (1 - k)


def stabilizer_entropy_bruteforce(psi: np.ndarray, k: float) -> float:
    return float(_entropy_from_expectations(pauli_expectations(psi), psi.size, k))


def stabilizer_entropies_bruteforce(psis: np.ndarray, ks) -> dict[float, np.ndarray]:
    """M_k for a stack of states (S, D) and several k, sharing one pass over the Pauli strings."""
    expect = pauli_expectations(np.atleast_2d(psis))
    d = np.atleast_2d(psis).shape[1]
    return {k: _entropy_from_expectations(expect, d, k) for k in ks}


def pauli_moment_bruteforce(psi: np.ndarray, k: float) -> float:
    d = psi.size
    xi = pauli_expectations(psi) ** 2 / d
    return float((d ** (k - 1) * xi ** k).sum())


def reduced_density_matrix(psi: np.ndarray, keep: list[int]) -> np.ndarray:
    """Partial trace by explicit summation over the traced-out basis labels."""
    nq = int(round(math.log2(psi.size)))
    traced = [j for j in range(nq) if j not in keep]
    dk = 1 << len(keep)
    rho = np.zeros((dk, dk), dtype=np.complex128)
    for x in range(psi.size):
        for y in range(psi.size):
            if any(((x >> j) & 1) != ((y >> j) & 1) for j in traced):
                continue
            i = sum(((x >> q) & 1) << n for n, q in enumerate(keep))
            jj = sum(((y >> q) & 1) << n for n, q in enumerate(keep))
            rho[i, jj] += psi[x] * np.conj(psi[y])
    return rho


def renyi2_entanglement_bruteforce(psi: np.ndarray) -> float:
    nq = int(round(math.log2(psi.size)))
    rho = reduced_density_matrix(psi, list(range(nq // 2)))
    return float(-np.log2(np.trace(rho @ rho).real))


def walsh_hadamard_dense(num_qubits: int) -> np.ndarray:
    return reduce(np.kron, [HADAMARD] * num_qubits)
