"""Exact diagonalisation diagnostics at small N: eigenstate PE/SE and level statistics."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .complexity import participation_entropy, stabilizer_renyi_entropy
from .models import IsingParams
from .statevec import StateVector, ising_phase_table

MAX_DENSE_QUBITS = 14
MAX_SCAN_QUBITS = 12


@dataclass
class SpectrumScan:
    num_qubits: int
    energies: np.ndarray
    per_state_pe: np.ndarray
    per_state_se: np.ndarray
    parities: np.ndarray | None = None

    @property
    def energy_density(self) -> np.ndarray:
        e = self.energies
        return (e - e.min()) / (e.max() - e.min())

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "energy", "energy_density", "pe_k2", "se_k2"])
            for i, (e, rho, s, m) in enumerate(zip(self.energies, self.energy_density,
                                                  self.per_state_pe, self.per_state_se)):
                w.writerow([i, repr(float(e)), repr(float(rho)), repr(float(s)), repr(float(m))])


def dense_hamiltonian(params: IsingParams) -> np.ndarray:
    """Real symmetric H_MFIM in the computational basis."""
    nq = params.num_qubits
    if nq > MAX_DENSE_QUBITS:
        raise ValueError(f"dense Hamiltonian limited to N <= {MAX_DENSE_QUBITS}")
    d = 1 << nq
    H = np.diag(ising_phase_table(nq, params.h, params.J))
    x = np.arange(d)
    for j in range(nq):
        H[x, x ^ (1 << j)] += params.b
    return H


def reflection_permutation(num_qubits: int) -> np.ndarray:
    """Basis label reached by mirroring the chain, qubit j -> N-1-j."""
    x = np.arange(1 << num_qubits)
    out = np.zeros_like(x)
    for j in range(num_qubits):
        out |= ((x >> j) & 1) << (num_qubits - 1 - j)
    return out


def reflection_parities(eigenvectors: np.ndarray, num_qubits: int) -> np.ndarray:
    """<n|R|n> for every eigenvector column; +-1 for non-degenerate reflection-symmetric H."""
    perm = reflection_permutation(num_qubits)
    return np.einsum("xn,xn->n", eigenvectors.conj(), eigenvectors[perm]).real


def eigenstate_complexity_scan(params: IsingParams, with_se: bool = True) -> SpectrumScan:
    """Full diagonalisation, then S_2 and M_2 of every eigenstate."""
    nq = params.num_qubits
    if nq > MAX_SCAN_QUBITS:
        raise ValueError(f"eigenstate scans limited to N <= {MAX_SCAN_QUBITS}")
    energies, vecs = np.linalg.eigh(dense_hamiltonian(params))
    pe = np.empty(energies.size)
    se = np.full(energies.size, np.nan)
    for n in range(energies.size):
        st = StateVector(nq, vecs[:, n].astype(np.complex128))
        pe[n] = participation_entropy(st, 2)
        if with_se:
            se[n] = stabilizer_renyi_entropy(st, 2)
    return SpectrumScan(nq, energies, pe, se, reflection_parities(vecs, nq))


class DegenerateSpectrumError(ValueError):
    pass


def gap_ratios(energies, trim_fraction: float = 0.1) -> np.ndarray:
    e = np.sort(np.asarray(energies, dtype=float))
    cut = int(round(trim_fraction * e.size))
    if cut:
        e = e[cut:e.size - cut]
    if e.size < 100:
        raise ValueError(f"need at least 100 levels after trimming, have {e.size}")
    s = np.diff(e)
    scale = max(abs(e[-1] - e[0]), 1e-300)
    if np.any(s <= 1e-12 * scale):
        raise DegenerateSpectrumError("degenerate levels; resolve symmetries before computing gap ratios")
    return np.minimum(s[:-1], s[1:]) / np.maximum(s[:-1], s[1:])


def gap_ratio_statistic(energies, trim_fraction: float = 0.1) -> float:
    """Mean of min(s_n, s_n+1) / max(s_n, s_n+1) after trimming each spectral edge."""
    return float(gap_ratios(energies, trim_fraction).mean())


def sector_gap_ratio(energies, parities, trim_fraction: float = 0.1) -> float:
    """Gap-ratio mean pooled over the reflection-even and -odd sectors.

    Sectors with fewer than 100 levels after trimming are skipped.
    """
    parities = np.asarray(parities)
    pooled = []
    for sign in (1, -1):
        sel = np.sign(np.round(parities)) == sign
        n_kept = sel.sum() - 2 * int(round(trim_fraction * sel.sum()))
        if n_kept >= 100:
            pooled.append(gap_ratios(np.asarray(energies)[sel], trim_fraction))
    if not pooled:
        raise ValueError("no symmetry sector with enough levels")
    return float(np.concatenate(pooled).mean())


def sample_goe_energies(dim: int, rng: np.random.Generator) -> np.ndarray:
    a = rng.standard_normal((dim, dim))
    return np.linalg.eigvalsh((a + a.T) / 2)
