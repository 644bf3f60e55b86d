"""Linear algebra over the single-photon two-qubit Hilbert space.

One photon carries a spatial qubit (right/left path, R/L) and a
polarization qubit (vertical/horizontal, v/h). States live in the
4-dimensional product space with the canonical basis fixed, in order, as

    |Rv>, |Rh>, |Lv>, |Lh>.

Global phase is never normalized away; when physical equality is meant,
compare by |<u|v>|.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from detqkd import _kernels
from detqkd.rng import RandomStream

DIM = 4
TOL_NORM = 1e-12
TOL_ORTHO = 1e-10

_SQRT_HALF = 1.0 / math.sqrt(2.0)

# Single-qubit amplitudes: R/L are the path basis, S/A their symmetric and
# antisymmetric superpositions; v/h and s/a likewise for polarization.
_SPATIAL = {
    "R": (1.0, 0.0),
    "L": (0.0, 1.0),
    "S": (_SQRT_HALF, _SQRT_HALF),
    "A": (_SQRT_HALF, -_SQRT_HALF),
}
_POLARIZATION = {
    "v": (1.0, 0.0),
    "h": (0.0, 1.0),
    "s": (_SQRT_HALF, _SQRT_HALF),
    "a": (_SQRT_HALF, -_SQRT_HALF),
}


def _as_amplitudes(values) -> np.ndarray:
    amps = np.asarray(values, dtype=complex)
    if amps.shape != (DIM,):
        raise ValueError(f"state needs exactly {DIM} amplitudes, got shape {amps.shape}")
    if not np.all(np.isfinite(amps)):
        raise ValueError("amplitudes must be finite")
    return amps


@dataclass(frozen=True, eq=False)
class StateVector:
    """A pure two-qubit state: 4 complex amplitudes over the canonical basis."""

    amps: np.ndarray

    def __post_init__(self):
        amps = _as_amplitudes(self.amps).copy()
        norm_sq = float(np.vdot(amps, amps).real)
        if abs(norm_sq - 1.0) > 1e-9:
            raise ValueError(f"state is not unit norm: sum |amp|^2 = {norm_sq!r}")
        if abs(norm_sq - 1.0) > TOL_NORM:
            amps = amps / math.sqrt(norm_sq)
        amps.flags.writeable = False
        object.__setattr__(self, "amps", amps)

    def __repr__(self) -> str:
        parts = ", ".join(f"{a.real:+.4f}{a.imag:+.4f}j" for a in self.amps)
        return f"StateVector([{parts}])"


@dataclass(frozen=True, eq=False)
class MeasurementBasis:
    """Four mutually orthonormal states: one detector configuration."""

    vectors: tuple[StateVector, ...]
    label: str
    matrix: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if len(self.vectors) != DIM:
            raise ValueError("a measurement basis needs exactly 4 vectors")
        mat = np.column_stack([v.amps for v in self.vectors])
        gram = mat.conj().T @ mat
        dev = float(np.max(np.abs(gram - np.eye(DIM))))
        if dev > TOL_ORTHO:
            raise ValueError(f"basis {self.label!r} is not orthonormal (deviation {dev:.2e})")
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)


@dataclass(frozen=True, eq=False)
class HermitianMatrix4:
    """A 4x4 conjugate-symmetric matrix (density and wrong-click operators)."""

    entries: np.ndarray

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=complex).copy()
        if entries.shape != (DIM, DIM):
            raise ValueError("expected a 4x4 matrix")
        dev = float(np.max(np.abs(entries - entries.conj().T)))
        if dev > 1e-12:
            raise ValueError(f"matrix is not Hermitian (deviation {dev:.2e})")
        entries.flags.writeable = False
        object.__setattr__(self, "entries", entries)


def inner(u: StateVector, v: StateVector) -> complex:
    """<u|v> with u conjugated."""
    return complex(np.vdot(u.amps, v.amps))


def product_state(spatial: str, polar: str) -> StateVector:
    """Tensor product of a spatial letter (R, L, S, A) and a polarization
    letter (v, h, s, a)."""
    try:
        sp = _SPATIAL[spatial]
        po = _POLARIZATION[polar]
    except KeyError as exc:
        raise ValueError(f"unknown state letter {exc.args[0]!r}") from None
    return StateVector(np.kron(np.array(sp), np.array(po)).astype(complex))


def born_probabilities(basis: MeasurementBasis, state: StateVector) -> np.ndarray:
    """Detection probabilities p_j = |<basis_j|state>|^2, clamped to [0, 1]."""
    probs = np.abs(basis.matrix.conj().T @ state.amps) ** 2
    return np.clip(probs, 0.0, 1.0)


def sample_outcome(basis: MeasurementBasis, state: StateVector, rng: RandomStream) -> int:
    """One Born-rule draw via inverse CDF over the fixed outcome order."""
    probs = born_probabilities(basis, state)
    u = rng.uniform()
    acc = 0.0
    for j in range(DIM - 1):
        acc += probs[j]
        if u < acc:
            return j
    return DIM - 1


def eigen_decompose(h: HermitianMatrix4) -> list[tuple[float, StateVector]]:
    """All (eigenvalue, eigenvector) pairs of h, eigenvalues ascending."""
    w, v = _kernels.eigh4(h.entries)
    out = []
    for j in range(DIM):
        col = v[:, j]
        col = col / math.sqrt(float(np.vdot(col, col).real))
        out.append((float(w[j]), StateVector(col)))
    return out


# --- JSON encoding -----------------------------------------------------
#
# Amplitudes are 2-element arrays [re, im]; a state is a list of four of
# them; a basis is {"label": ..., "vectors": [...]}.

def state_to_json(state: StateVector) -> list[list[float]]:
    return [[float(a.real), float(a.imag)] for a in state.amps]


def state_from_json(data) -> StateVector:
    return StateVector(np.array([complex(re, im) for re, im in data]))


def basis_to_json(basis: MeasurementBasis) -> dict:
    return {"label": basis.label, "vectors": [state_to_json(v) for v in basis.vectors]}


def basis_from_json(data) -> MeasurementBasis:
    vectors = tuple(state_from_json(v) for v in data["vectors"])
    return MeasurementBasis(vectors, data["label"])
