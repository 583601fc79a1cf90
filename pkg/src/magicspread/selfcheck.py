"""Brute-force oracle suite: fast kernels against dense references at small N."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import oracles
from .complexity import pauli_spectrum_summary, renyi2_entanglement_halfcut, stabilizer_entropy
from .models import IsingParams, KickedIsing, MixedFieldIsing, haar_random_state
from .propagators import ChebyshevConfig, chebyshev_evolve
from .statevec import StateVector, global_walsh_hadamard


@dataclass
class OracleCheck:
    name: str
    error: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return bool(self.error < self.tolerance)


def _stabilizer_checks(rng, max_qubits, states):
    worst = 0.0
    for nq in range(1, max_qubits + 1):
        for _ in range(states):
            st = haar_random_state(nq, rng)
            summary = pauli_spectrum_summary(st, (1, 2, 3))
            for k in (1, 2, 3):
                ref = oracles.stabilizer_entropy_bruteforce(st.amplitudes, k)
                worst = max(worst, abs(stabilizer_entropy(summary, k) - ref))
    return OracleCheck("stabilizer entropy k=1,2,3", worst, 1e-9)


def _kim_check(rng, nq):
    params = IsingParams.disordered(nq, 0.5, rng)
    st = haar_random_state(nq, rng)
    ref = oracles.dense_kim(nq, params.b, params.h, params.J) @ st.amplitudes
    KickedIsing(params).step(st)
    return OracleCheck(f"kicked Ising step N={nq}", float(np.abs(st.amplitudes - ref).max()), 1e-10)


def _chebyshev_check(rng, nq, t):
    params = IsingParams.disordered(nq, 0.5, rng)
    ham = MixedFieldIsing(params)
    st = haar_random_state(nq, rng)
    ref = oracles.expm_evolve(oracles.dense_mfim(nq, params.b, params.h, params.J), st.amplitudes, t)
    chebyshev_evolve(st, ham, ham.bounds(), t, ChebyshevConfig())
    infidelity = 1.0 - abs(np.vdot(ref, st.amplitudes)) ** 2
    return OracleCheck(f"Chebyshev evolution N={nq} t={t:g}", abs(infidelity), 1e-10)


def _wht_check(rng, nq):
    st = haar_random_state(nq, rng)
    ref = oracles.walsh_hadamard_dense(nq) @ st.amplitudes
    global_walsh_hadamard(st)
    return OracleCheck(f"Walsh-Hadamard N={nq}", float(np.abs(st.amplitudes - ref).max()), 1e-12)


def _entanglement_check(rng, nq):
    st = haar_random_state(nq, rng)
    ref = oracles.renyi2_entanglement_bruteforce(st.amplitudes)
    return OracleCheck(f"half-cut Renyi-2 entanglement N={nq}", abs(renyi2_entanglement_halfcut(st) - ref), 1e-10)


def _hamiltonian_check(rng, nq):
    params = IsingParams.disordered(nq, 0.5, rng)
    psi = haar_random_state(nq, rng).amplitudes
    ref = oracles.dense_mfim(nq, params.b, params.h, params.J) @ psi
    return OracleCheck(f"Hamiltonian action N={nq}", float(np.abs(MixedFieldIsing(params)(psi) - ref).max()), 1e-12)


def run_oracle_suite(seed: int = 0, max_qubits: int = 6, states: int = 10, quick: bool = False) -> list[OracleCheck]:
    rng = np.random.default_rng(seed)
    big = 6 if quick else 10
    return [
        _stabilizer_checks(rng, max_qubits, states),
        _wht_check(rng, max_qubits),
        _hamiltonian_check(rng, max_qubits),
        _kim_check(rng, min(big, 8)),
        _chebyshev_check(rng, big, 1.0),
        _chebyshev_check(rng, big, 10.0),
        _entanglement_check(rng, max_qubits),
    ]
