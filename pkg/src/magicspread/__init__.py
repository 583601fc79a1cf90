"""Anticoncentration and nonstabilizerness dynamics of qubit chains."""

__version__ = "0.1.0"

from .statevec import StateVector  # noqa: E402
from .models import IsingParams, KickedIsing, MixedFieldIsing, FloquetFamily, FloquetFamilySpec  # noqa: E402
from .complexity import (  # noqa: E402
    participation_entropy,
    stabilizer_renyi_entropy,
    pauli_spectrum_summary,
)

__all__ = [
    "StateVector",
    "IsingParams",
    "KickedIsing",
    "MixedFieldIsing",
    "FloquetFamily",
    "FloquetFamilySpec",
    "participation_entropy",
    "stabilizer_renyi_entropy",
    "pauli_spectrum_summary",
    "__version__",
]
