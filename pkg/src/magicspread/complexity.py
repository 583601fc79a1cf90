"""Participation entropies, stabilizer Renyi entropies and related state diagnostics."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import digamma, gammaln

from . import _kernels
from .statevec import StateVector, probabilities


@dataclass
class PauliSpectrumSummary:
    """Moments of the Pauli spectrum Xi_P = <P>^2 / D of a pure state.

    ``moment_sums[k]`` holds sum_P D^(k-1) Xi_P^k = sum_P <P>^(2k) / D and
    ``shannon_term`` holds sum_P Xi_P log2(D Xi_P) (None unless k = 1 was requested).
    """

    num_qubits: int
    moment_sums: dict[float, float]
    shannon_term: float | None = None
    normalization: float = 1.0
    imaginary_residual: float | None = None


@dataclass
class ComplexityRecord:
    time: float
    pe: dict[float, float] = field(default_factory=dict)
    se: dict[float, float] = field(default_factory=dict)
    collision_probability: float = float("nan")
    entanglement_renyi2: float = float("nan")
    porter_thomas_ks: float = float("nan")


def participation_entropy(state: StateVector, k: float) -> float:
    """Renyi-k entropy (base 2) of the computational-basis distribution; k = 1 is Shannon."""
    if k < 0:
        raise ValueError("Renyi index must be >= 0")
    p = probabilities(state)
    if k == 1:
        nz = p[p > 0]
        return float(-(nz * np.log2(nz)).sum())
    if k == 0:
        return float(np.log2(np.count_nonzero(p)))
    if k == 2:
        s = float(np.dot(p, p))
    else:
        s = float((p ** k).sum())
    return max(float(np.log2(s) / (1 - k)), 0.0) if s > 0 else 0.0


def collision_probability(state: StateVector) -> float:
    p = probabilities(state)
    return float(np.dot(p, p))


def anticoncentration_check(state: StateVector, a: float = 1.0) -> bool:
    """True when the collision probability is at most 2^-N / a."""
    if not 0 < a <= 1:
        raise ValueError("a must lie in (0, 1]")
    return collision_probability(state) <= 2.0 ** -state.num_qubits / a


class PauliResidualError(RuntimeError):
    pass


def pauli_spectrum_summary(state: StateVector, k_set=(2,), validate: bool = False) -> PauliSpectrumSummary:
    """All requested Pauli-spectrum moments in O(N 4^N) time and O(2^N) memory.

    ``validate`` switches to the complex transform with the explicit Hermitian
    phase i^|a&b| and raises if any <P> has an imaginary part above 1e-8.
    """
    ks = sorted({float(k) for k in k_set})
    d = state.dim
    want_shannon = 1.0 in ks
    moment_ks = np.array([k for k in ks if k != 1.0] or [2.0])
    if validate:
        sums, total, worst = _kernels.pauli_moments_checked(state.amplitudes, moment_ks)
        if worst > 1e-8:
            raise PauliResidualError(f"imaginary residual {worst:.2e} in a Hermitian Pauli expectation")
        shannon = None
        if want_shannon:
            _, shannon, _ = _kernels.pauli_moments(state.amplitudes.real.copy(), state.amplitudes.imag.copy(),
                                                   moment_ks, True)
    else:
        worst = None
        sums, shannon, total = _kernels.pauli_moments(state.amplitudes.real.copy(),
                                                      state.amplitudes.imag.copy(), moment_ks, want_shannon)
    moments = {float(k): float(s) / d for k, s in zip(moment_ks, sums) if k in ks}
    if want_shannon:
        moments[1.0] = float(total) / d
    return PauliSpectrumSummary(
        num_qubits=state.num_qubits,
        moment_sums=moments,
        shannon_term=float(shannon) / d if want_shannon else None,
        normalization=float(total) / d,
        imaginary_residual=worst,
    )


def stabilizer_entropy(summary: PauliSpectrumSummary, k: float) -> float:
    """M_k from a Pauli-spectrum summary. M_1 = -sum_P Xi_P log2(D Xi_P)."""
    k = float(k)
    if k == 1.0:
        if summary.shannon_term is None:
            raise KeyError("summary lacks the k=1 term; request k=1 when building it")
        return max(-summary.shannon_term, 0.0)
    if k not in summary.moment_sums:
        raise KeyError(f"summary has no moment for k={k}")
    return max(math.log2(summary.moment_sums[k]) / (1.0 - k), 0.0)


def stabilizer_renyi_entropy(state: StateVector, k: float = 2) -> float:
    return stabilizer_entropy(pauli_spectrum_summary(state, (k,)), k)


# -- Haar baselines -----------------------------------------------------------------------


def haar_pe_k2(num_qubits: int) -> float:
    return math.log2(2.0 ** num_qubits + 1) - 1


def haar_se_k2(num_qubits: int) -> float:
    return math.log2(2.0 ** num_qubits + 3) - 2


def haar_pe(num_qubits: int, k: float) -> float:
    """PE of Haar states, from the ensemble-averaged moment (k != 1) or mean Shannon entropy (k = 1).

    For a Haar state p_x ~ Beta(1, D-1), so E sum_x p_x^k = Gamma(k+1) Gamma(D+1) / Gamma(D+k)
    and E[-sum p ln p] = psi(D+1) - psi(2).
    """
    d = 2.0 ** num_qubits
    if k == 1:
        return float((digamma(d + 1) - digamma(2)) / math.log(2))
    log_moment = gammaln(k + 1) + gammaln(d + 1) - gammaln(d + k)
    return float(log_moment / math.log(2) / (1 - k))


def haar_se_estimate(num_qubits: int, k: float, rng: np.random.Generator, samples: int = 50) -> tuple[float, float]:
    """Monte-Carlo Haar value of M_k (annealed for k != 1, mean for k = 1) and its standard error."""
    from .models import haar_random_state

    vals = []
    for _ in range(samples):
        summary = pauli_spectrum_summary(haar_random_state(num_qubits, rng), (k,))
        vals.append(-summary.shannon_term if k == 1 else summary.moment_sums[float(k)])
    vals = np.asarray(vals)
    mean = vals.mean()
    err = vals.std(ddof=1) / np.sqrt(samples) if samples > 1 else float("nan")
    if k == 1:
        return float(mean), float(err)
    return float(math.log2(mean) / (1 - k)), float(err / (mean * math.log(2) * abs(1 - k)))


# -- distribution and entanglement diagnostics ------------------------------------------


def porter_thomas_distance(state: StateVector) -> float:
    """Kolmogorov-Smirnov distance between the law of D * p_x and the unit exponential."""
    y = np.sort(probabilities(state) * state.dim)
    n = y.size
    cdf = -np.expm1(-y)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(n) / n
    return float(max(upper.max(), lower.max()))


def porter_thomas_threshold(num_qubits: int, rng: np.random.Generator, samples: int = 200,
                            quantile: float = 0.99) -> float:
    """Quantile of the Porter-Thomas distance over sampled Haar states."""
    from .models import haar_random_state

    dists = [porter_thomas_distance(haar_random_state(num_qubits, rng)) for _ in range(samples)]
    return float(np.quantile(dists, quantile))


def renyi2_entanglement_halfcut(state: StateVector) -> float:
    """-log2 tr(rho_A^2) with A the first floor(N/2) qubits (the low bits)."""
    if state.num_qubits < 2:
        raise ValueError("need at least two qubits for a bipartition")
    n_a = state.num_qubits // 2
    m = state.amplitudes.reshape(1 << (state.num_qubits - n_a), 1 << n_a)
    gram = m.conj().T @ m if m.shape[1] <= m.shape[0] else m @ m.conj().T
    purity = float(np.vdot(gram, gram).real)
    return max(-math.log2(purity), 0.0)


def measure(state: StateVector, time: float, pe_ks=(2,), se_ks=(), entanglement: bool = False,
            porter_thomas: bool = False) -> ComplexityRecord:
    rec = ComplexityRecord(time=time)
    rec.pe = {float(k): participation_entropy(state, k) for k in pe_ks}
    rec.collision_probability = collision_probability(state)
    if se_ks:
        summary = pauli_spectrum_summary(state, se_ks)
        rec.se = {float(k): stabilizer_entropy(summary, k) for k in se_ks}
    if entanglement:
        rec.entanglement_renyi2 = renyi2_entanglement_halfcut(state)
    if porter_thomas:
        rec.porter_thomas_ks = porter_thomas_distance(state)
    return rec
