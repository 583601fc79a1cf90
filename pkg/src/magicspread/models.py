"""Kicked Ising, mixed-field Ising and interpolating Floquet models; initial states."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .propagators import (
    ChebyshevConfig,
    SpectralBounds,
    chebyshev_evolve,
    lanczos_bounds,
)
from .statevec import StateVector, ising_phase_table, spin_values

DEFAULT_B = (math.sqrt(5) + 5) / 8
DEFAULT_H = (math.sqrt(5) + 1) / 4
DEFAULT_J = 1.0


@dataclass
class IsingParams:
    """Couplings of an open Ising chain: transverse field b, coupling J, longitudinal fields h_j.

    ``disorder_width`` records the W used to draw ``h`` (see :meth:`disordered`);
    ``h`` always holds the realised fields.
    """

    num_qubits: int
    b: float = DEFAULT_B
    J: float = DEFAULT_J
    h: np.ndarray = field(default=None)
    disorder_width: float = 0.0

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be >= 1")
        if self.disorder_width < 0:
            raise ValueError("disorder width must be >= 0")
        if self.h is None:
            self.h = np.full(self.num_qubits, DEFAULT_H)
        self.h = np.broadcast_to(np.asarray(self.h, dtype=np.float64), (self.num_qubits,)).copy()

    @classmethod
    def disordered(cls, num_qubits: int, disorder_width: float, rng: np.random.Generator,
                   b: float = DEFAULT_B, J: float = DEFAULT_J, h0: float = DEFAULT_H) -> "IsingParams":
        """h_j = h0 + delta_j with delta_j uniform on [-W, W], drawn once per realisation."""
        if disorder_width > 0:
            deltas = rng.uniform(-disorder_width, disorder_width, size=num_qubits)
        else:
            deltas = np.zeros(num_qubits)
        return cls(num_qubits, b=b, J=J, h=h0 + deltas, disorder_width=disorder_width)

    def scaled(self, x_weight: float, z_weight: float) -> "IsingParams":
        """Parameters of x_weight * H_x + z_weight * H_z."""
        return IsingParams(self.num_qubits, b=x_weight * self.b, J=z_weight * self.J,
                           h=z_weight * self.h, disorder_width=self.disorder_width)

    def to_dict(self) -> dict:
        return {"num_qubits": self.num_qubits, "b": self.b, "J": self.J,
                "h": self.h.tolist(), "disorder_width": self.disorder_width}

    @classmethod
    def from_dict(cls, data: dict) -> "IsingParams":
        return cls(int(data["num_qubits"]), b=float(data["b"]), J=float(data["J"]),
                   h=np.asarray(data["h"], dtype=float), disorder_width=float(data.get("disorder_width", 0.0)))


def _check_dims(state: StateVector, params: IsingParams) -> None:
    if state.num_qubits != params.num_qubits:
        raise ValueError(f"state has {state.num_qubits} qubits, model has {params.num_qubits}")


class KickedIsing:
    """Floquet operator exp(-i b sum X) exp(-i (sum h Z + J sum ZZ)) with precomputed phase tables."""

    def __init__(self, params: IsingParams):
        self.params = params
        nq = params.num_qubits
        self._z_phase = np.exp(-1j * ising_phase_table(nq, params.h, params.J))
        spin_sum = spin_values(nq).sum(axis=1, dtype=np.float64)
        # both WHTs are unnormalised; the 1/D of the pair is folded in here
        self._x_phase = np.exp(-1j * params.b * spin_sum) / (1 << nq)

    def step(self, state: StateVector) -> StateVector:
        _check_dims(state, self.params)
        psi = state.amplitudes
        psi *= self._z_phase
        _kernels.fwht_inplace(psi)
        psi *= self._x_phase
        _kernels.fwht_inplace(psi)
        return state


def kim_step(state: StateVector, params: IsingParams) -> StateVector:
    """One KIM period. Builds the phase tables on every call; use :class:`KickedIsing` in loops."""
    return KickedIsing(params).step(state)


class MixedFieldIsing:
    """Matrix-free H = b sum X_j + sum h_j Z_j + J sum Z_j Z_{j+1} (open chain).

    Instances are callable as a Hamiltonian action ``H(psi) -> H psi`` and also
    provide the fused Chebyshev recurrence used by :func:`chebyshev_evolve`.
    """

    def __init__(self, params: IsingParams):
        self.params = params
        self.num_qubits = params.num_qubits
        self.diagonal = ising_phase_table(params.num_qubits, params.h, params.J)
        self._bounds: SpectralBounds | None = None

    def __call__(self, psi: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        psi = np.ascontiguousarray(psi, dtype=np.complex128)
        if psi.shape != self.diagonal.shape:
            raise ValueError(f"vector of length {psi.size} does not match 2^{self.num_qubits}")
        if out is None:
            out = np.empty_like(psi)
        _kernels.transverse_ising_apply(psi, out, self.diagonal, self.params.b, self.num_qubits)
        return out

    def chebyshev_recurrence(self, prev, cur, out, scale, shift):
        _kernels.chebyshev_recurrence(prev, cur, out, self.diagonal, self.params.b,
                                      self.num_qubits, scale, shift)

    def expectation(self, state: StateVector) -> float:
        return float(np.vdot(state.amplitudes, self(state.amplitudes)).real)

    def bounds(self, margin: float = 0.01, iterations: int = 60) -> SpectralBounds:
        if self._bounds is None or self._bounds.margin != margin:
            self._bounds = lanczos_bounds(self, self.num_qubits, iterations=iterations, margin=margin)
        return self._bounds

    def evolve(self, state: StateVector, t: float, config: ChebyshevConfig | None = None) -> StateVector:
        _check_dims(state, self.params)
        return chebyshev_evolve(state, self, self.bounds(), t, config)


def mfim_apply(state: StateVector, params: IsingParams) -> StateVector:
    """H_MFIM |psi> as a new state (not normalised)."""
    _check_dims(state, params)
    return StateVector(state.num_qubits, MixedFieldIsing(params)(state.amplitudes))


@dataclass
class FloquetFamilySpec:
    params: IsingParams
    theta: float

    def __post_init__(self):
        if not 0.0 <= self.theta <= 0.5:
            raise ValueError("theta must lie in [0, 1/2]")


class FloquetFamily:
    """U_F = exp(-i[theta H_x + (1-theta) H_z]) exp(-i[(1-theta) H_x + theta H_z]).

    The right factor acts first. Each factor is a mixed-field Hamiltonian evolved
    for unit time with the Chebyshev propagator. At theta = 1/2 both factors equal
    exp(-i H_MFIM / 2), so one step is exactly one unit of MFIM time. At theta = 0
    one step is exp(-i H_z) exp(-i H_x), the KIM layers in swapped order.
    """

    def __init__(self, spec: FloquetFamilySpec, config: ChebyshevConfig | None = None):
        self.spec = spec
        self.config = config or ChebyshevConfig()
        th = spec.theta
        self.first = MixedFieldIsing(spec.params.scaled(1.0 - th, th))
        self.second = MixedFieldIsing(spec.params.scaled(th, 1.0 - th))
        self._bounds = [self._factor_bounds(h) for h in (self.first, self.second)]

    @staticmethod
    def _factor_bounds(ham: MixedFieldIsing) -> SpectralBounds:
        p = ham.params
        if p.b == 0.0:
            d = ham.diagonal
            spread = max(d.max() - d.min(), 1e-9)
            return SpectralBounds(d.min() - 0.01 * spread, d.max() + 0.01 * spread)
        if not np.any(p.h) and p.J == 0.0:
            n = p.num_qubits
            return SpectralBounds(-abs(p.b) * n * 1.01, abs(p.b) * n * 1.01)
        return ham.bounds()

    def step(self, state: StateVector) -> StateVector:
        _check_dims(state, self.spec.params)
        chebyshev_evolve(state, self.first, self._bounds[0], 1.0, self.config)
        chebyshev_evolve(state, self.second, self._bounds[1], 1.0, self.config)
        return state


def uf_step(state: StateVector, spec: FloquetFamilySpec, config: ChebyshevConfig | None = None) -> StateVector:
    return FloquetFamily(spec, config).step(state)


# -- initial states -------------------------------------------------------------------


def haar_single_qubit_columns(num_qubits: int, rng: np.random.Generator) -> np.ndarray:
    """First columns U_j|0> of independent Haar single-qubit unitaries, shape (N, 2)."""
    z = rng.standard_normal((num_qubits, 2)) + 1j * rng.standard_normal((num_qubits, 2))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    # phase-fix the leading entry; a global phase per site does not change the state class
    lead = z[:, :1]
    z *= np.where(np.abs(lead) > 0, lead.conj() / np.abs(lead), 1.0)
    return z


def product_state(site_vectors: np.ndarray) -> StateVector:
    """Tensor product with site_vectors[j] on qubit j (qubit 0 = least significant bit)."""
    psi = np.asarray(site_vectors[0], dtype=np.complex128)
    for v in site_vectors[1:]:
        psi = np.kron(v, psi)
    return StateVector(len(site_vectors), psi)


def random_product_state(num_qubits: int, rng: np.random.Generator) -> StateVector:
    return product_state(haar_single_qubit_columns(num_qubits, rng))


def product_state_energy(site_vectors: np.ndarray, params: IsingParams) -> float:
    """<H_MFIM> of a product state from single-site Bloch components, O(N)."""
    a, c = site_vectors[:, 0], site_vectors[:, 1]
    x = 2.0 * (a.conj() * c).real
    z = np.abs(a) ** 2 - np.abs(c) ** 2
    return float(params.b * x.sum() + params.h @ z + params.J * np.dot(z[:-1], z[1:]))


class EnergyWindowError(RuntimeError):
    """No product state met the energy window within max_tries draws."""


def energy_filtered_state(num_qubits: int, params: IsingParams, rng: np.random.Generator,
                          window: float = 0.05, max_tries: int = 100_000,
                          bounds: SpectralBounds | None = None, literal: bool = False) -> StateVector:
    """Random product state whose energy lies near the middle of the spectrum.

    Accepts when |<H> - E_mid| / (E_max - E_min) <= window. With ``literal=True``
    the test is |<H> - E_min| / (E_max - E_min) <= window instead, which selects
    the bottom edge of the spectrum.
    """
    if bounds is None:
        bounds = lanczos_bounds(MixedFieldIsing(params), num_qubits, margin=0.0)
    width = bounds.e_max - bounds.e_min
    ref = bounds.e_min if literal else bounds.center
    for _ in range(max_tries):
        cols = haar_single_qubit_columns(num_qubits, rng)
        if abs(product_state_energy(cols, params) - ref) / width <= window:
            return product_state(cols)
    raise EnergyWindowError(f"no state within energy window {window} after {max_tries} draws")


def half_filling_basis_state(num_qubits: int, rng: np.random.Generator) -> StateVector:
    """Uniformly random basis state with exactly N/2 qubits set."""
    if num_qubits % 2:
        raise ValueError("half filling needs an even number of qubits")
    bits = np.zeros(num_qubits, dtype=np.int64)
    bits[rng.choice(num_qubits, size=num_qubits // 2, replace=False)] = 1
    return StateVector.basis(num_qubits, int((bits << np.arange(num_qubits)).sum()))


def haar_random_state(num_qubits: int, rng: np.random.Generator) -> StateVector:
    d = 1 << num_qubits
    psi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return StateVector(num_qubits, psi / np.linalg.norm(psi))
