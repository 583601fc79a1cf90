"""Time evolution engines.

* Chebyshev propagation of ``exp(-iHt)`` for any Hermitian action ``apply_h``,
  with spectral brackets from a plain Lanczos run.
* Brick-wall random circuits built from Haar two-qubit gates, either
  unconstrained or restricted to the magnetisation-conserving subgroup.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .statevec import StateVector, apply_two_qubit_gate

HamiltonianAction = Callable[[np.ndarray], np.ndarray]


class ChebyshevConvergenceError(RuntimeError):
    """The expansion did not reach the coefficient tolerance within max_order terms."""


@dataclass(frozen=True)
class SpectralBounds:
    e_min: float
    e_max: float
    margin: float = 0.01

    def __post_init__(self):
        if not self.e_min < self.e_max:
            raise ValueError(f"degenerate spectral bracket [{self.e_min}, {self.e_max}]")

    @property
    def center(self) -> float:
        return 0.5 * (self.e_max + self.e_min)

    @property
    def half_width(self) -> float:
        return 0.5 * (self.e_max - self.e_min)


@dataclass(frozen=True)
class ChebyshevConfig:
    coefficient_tolerance: float = 1e-12
    max_order: int = 10_000
    step_time: float = 1.0


def lanczos_bounds(apply_h: HamiltonianAction, num_qubits: int, iterations: int = 60,
                   margin: float = 0.01, seed: int = 0) -> SpectralBounds:
    """Extremal Ritz values of ``apply_h``, widened by ``margin`` times their spread.

    No reorthogonalisation: ghost copies of converged Ritz values do not move the
    extremes, and the margin absorbs the remaining error.
    """
    d = 1 << num_qubits
    rng = np.random.default_rng(seed)
    iterations = min(iterations, d)
    alphas: list[float] = []
    betas: list[float] = []
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    v /= np.linalg.norm(v)
    v_prev = np.zeros_like(v)
    beta = 0.0
    for _ in range(iterations):
        w = np.asarray(apply_h(v), dtype=np.complex128)
        alpha = float(np.vdot(v, w).real)
        w = w - alpha * v - beta * v_prev
        alphas.append(alpha)
        beta = float(np.linalg.norm(w))
        if beta < 1e-10:
            if len(alphas) >= d:
                break
            # invariant subspace found: restart from a fresh vector orthogonal to v
            w = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            w -= np.vdot(v, w) * v
            betas.append(0.0)
            v_prev, v = v, w / np.linalg.norm(w)
            beta = 0.0
            continue
        betas.append(beta)
        v_prev, v = v, w / beta
    k = len(alphas)
    t = np.diag(alphas) + np.diag(betas[:k - 1], 1) + np.diag(betas[:k - 1], -1)
    ritz = np.linalg.eigvalsh(t)
    lo, hi = float(ritz[0]), float(ritz[-1])
    spread = max(hi - lo, 1e-12)
    return SpectralBounds(lo - margin * spread, hi + margin * spread, margin)


def bessel_j_sequence(x: float, n_max: int) -> np.ndarray:
    """J_0(x) ... J_{n_max}(x) by Miller's backward recurrence, for x >= 0."""
    if x < 0:
        raise ValueError("x must be non-negative")
    out = np.zeros(n_max + 1)
    if x == 0.0:
        out[0] = 1.0
        return out
    # start far enough above both n_max and x that the seed error has died out
    start = int(max(n_max, x) + 20 + 10 * math.sqrt(max(n_max, x)))
    start += start % 2
    j_next, j_cur = 0.0, 1e-300
    seq = np.zeros(start + 1)
    seq[start] = j_cur
    norm = 0.0
    for n in range(start, 0, -1):
        j_prev = 2.0 * n / x * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        seq[n - 1] = j_cur
        if abs(j_cur) > 1e250:
            seq[n - 1:] *= 1e-250
            j_next *= 1e-250
            j_cur *= 1e-250
    # J_0 + 2 * sum J_{2m} = 1
    norm = seq[0] + 2.0 * seq[2::2].sum()
    seq /= norm
    out[:] = seq[:n_max + 1]
    return out


def chebyshev_coefficients(half_width_time: float, tol: float = 1e-12, max_order: int = 10_000) -> np.ndarray:
    """Complex coefficients (2 - delta_n0) (-i)^n J_n(z) truncated at the first
    run of three consecutive magnitudes below ``tol`` past n = z."""
    z = abs(half_width_time)
    n_max = int(z + 40 + 4 * z ** (1 / 3))
    while True:
        if n_max > max_order + 3:
            raise ChebyshevConvergenceError(
                f"expansion of exp(-i*{z:.3g}*x) needs more than max_order={max_order} terms; split the time step"
            )
        bj = bessel_j_sequence(z, n_max)
        small = np.abs(bj) < tol / 2
        order = None
        for n in range(int(z), n_max - 2):
            if small[n] and small[n + 1] and small[n + 2]:
                order = n
                break
        if order is not None:
            break
        n_max *= 2
    if order > max_order:
        raise ChebyshevConvergenceError(f"needed {order} terms, max_order={max_order}")
    n = np.arange(max(order, 1))
    coeffs = 2.0 * bj[:n.size] * (-1j) ** n
    coeffs[0] = bj[0]
    if half_width_time < 0:
        coeffs = coeffs.conj()
    return coeffs


def chebyshev_evolve(state: StateVector, apply_h: HamiltonianAction, bounds: SpectralBounds, t: float,
                     config: ChebyshevConfig | None = None) -> StateVector:
    """Replace ``state`` by exp(-iHt) state using a Chebyshev expansion.

    ``apply_h`` may expose a fused ``chebyshev_recurrence(prev, cur, out, scale, shift)``
    method; otherwise the recurrence is assembled from plain ``apply_h`` calls.
    """
    config = config or ChebyshevConfig()
    if t == 0:
        return state
    c, delta = bounds.center, bounds.half_width
    coeffs = chebyshev_coefficients(delta * t, config.coefficient_tolerance, config.max_order)
    psi0 = state.amplitudes
    fused = getattr(apply_h, "chebyshev_recurrence", None)

    acc = coeffs[0] * psi0
    if coeffs.size > 1:
        t_prev = psi0.copy()
        t_cur = (np.asarray(apply_h(psi0)) - c * psi0) / delta
        acc += coeffs[1] * t_cur
        t_next = np.empty_like(psi0)
        for n in range(2, coeffs.size):
            if fused is not None:
                fused(t_prev, t_cur, t_next, delta, c)
            else:
                np.subtract(np.asarray(apply_h(t_cur)), c * t_cur, out=t_next)
                t_next *= 2.0 / delta
                t_next -= t_prev
            acc += coeffs[n] * t_next
            t_prev, t_cur, t_next = t_cur, t_next, t_prev
    acc *= np.exp(-1j * c * t)
    state.amplitudes[:] = acc
    return state


def evolve_for(state: StateVector, apply_h: HamiltonianAction, bounds: SpectralBounds, t: float,
               config: ChebyshevConfig | None = None, max_step: float = 20.0) -> StateVector:
    """Chebyshev evolution split into chunks no longer than ``max_step``."""
    if t == 0:
        return state
    chunks = max(1, int(math.ceil(abs(t) / max_step - 1e-12)))
    for _ in range(chunks):
        chebyshev_evolve(state, apply_h, bounds, t / chunks, config)
    return state


# -- random two-qubit gates -------------------------------------------------------------

GATE_KINDS = ("haar_u4", "u1_block", "identity")


def haar_unitaries(rng: np.random.Generator, dim: int, count: int) -> np.ndarray:
    """``count`` Haar unitaries of size ``dim`` via QR of Ginibre matrices with phase-fixed R."""
    z = (rng.standard_normal((count, dim, dim)) + 1j * rng.standard_normal((count, dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=1, axis2=2)
    return q * (diag / np.abs(diag))[:, None, :]


def u1_block_gates(rng: np.random.Generator, count: int) -> np.ndarray:
    """Haar gates on the subgroup commuting with Z_a + Z_b: phases on |00>, |11>, U(2) on {|01>, |10>}."""
    gates = np.zeros((count, 4, 4), dtype=np.complex128)
    phases = rng.uniform(0.0, 2 * np.pi, size=(count, 2))
    gates[:, 0, 0] = np.exp(1j * phases[:, 0])
    gates[:, 3, 3] = np.exp(1j * phases[:, 1])
    gates[:, 1:3, 1:3] = haar_unitaries(rng, 2, count)
    return gates


@dataclass
class GateSampler:
    """Source of two-qubit gates for brick-wall circuits.

    With ``seed`` set, the gates of a layer depend only on (seed, layer index),
    so the gate at a given (seed, layer, position) is reproducible regardless of
    what was sampled before. Without a seed the sampler draws from ``rng``.
    """

    kind: str = "haar_u4"
    seed: int | None = None
    rng: np.random.Generator = field(default_factory=np.random.default_rng)

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}; expected one of {GATE_KINDS}")

    def _layer_rng(self, layer_index: int | None) -> np.random.Generator:
        if self.seed is None or layer_index is None:
            return self.rng
        return np.random.default_rng(np.random.SeedSequence(self.seed, spawn_key=(int(layer_index),)))

    def sample(self, count: int = 1, layer_index: int | None = None) -> np.ndarray:
        rng = self._layer_rng(layer_index)
        if self.kind == "haar_u4":
            return haar_unitaries(rng, 4, count)
        if self.kind == "u1_block":
            return u1_block_gates(rng, count)
        return np.broadcast_to(np.eye(4, dtype=np.complex128), (count, 4, 4)).copy()


def sample_gate(sampler: GateSampler) -> np.ndarray:
    return sampler.sample(1)[0]


def brickwall_pairs(num_qubits: int, layer_index: int) -> list[tuple[int, int]]:
    """0-based qubit pairs of layer ``layer_index`` (1-based, as U_t = U^(t) ... U^(1)).

    Odd layers couple (0,1), (2,3), ...: N/2 gates. Even layers couple (1,2), (3,4), ...:
    N/2 - 1 gates. Open boundary, no wraparound.
    """
    if num_qubits % 2:
        raise ValueError("brick-wall circuits need an even number of qubits")
    start = 0 if layer_index % 2 == 1 else 1
    return [(i, i + 1) for i in range(start, num_qubits - 1, 2)]


def brickwall_step(state: StateVector, layer_index: int, sampler: GateSampler) -> StateVector:
    pairs = brickwall_pairs(state.num_qubits, layer_index)
    if not pairs:
        return state
    gates = sampler.sample(len(pairs), layer_index=layer_index)
    for (a, b), g in zip(pairs, gates):
        apply_two_qubit_gate(state, a, b, g)
    return state
