"""Intercept-resend eavesdropping analysis.

The attacker (Evan) measures every photon in some orthonormal basis and
forwards a replacement state chosen from the outcome. The observable cost
is the wrong-click rate at Bob's end: the probability that a detector
fires which is orthogonal to the state Alice actually sent. This module
computes that rate for a given strategy, minimizes it numerically over
measurement bases (the resend states are always chosen optimally per
outcome via an eigenvalue problem), and evaluates the attacker's best
direct bit-guessing odds (Helstrom bound) when no type information is
available.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from detqkd import _kernels
from detqkd.hilbert import (
    DIM,
    HermitianMatrix4,
    MeasurementBasis,
    StateVector,
    basis_to_json,
    state_to_json,
)
from detqkd.rng import RandomStream
from detqkd.schemes import BITS, Scheme, infer_bit

MAX_EVALS_PER_RESTART = 10_000


@dataclass(frozen=True, eq=False)
class InterceptResendStrategy:
    """Evan's measurement basis plus one resend state per outcome."""

    measurement: MeasurementBasis
    resend: tuple[StateVector, ...]

    def __post_init__(self):
        if len(self.resend) != DIM:
            raise ValueError("need one resend state per measurement outcome")


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Positive semidefinite, unit-trace 4x4 operator."""

    matrix: HermitianMatrix4

    def __post_init__(self):
        w, _ = _kernels.eigh4(self.matrix.entries)
        if w[0] < -1e-10:
            raise ValueError(f"not positive semidefinite (min eigenvalue {w[0]:.3e})")
        tr = float(np.trace(self.matrix.entries).real)
        if abs(tr - 1.0) > 1e-10:
            raise ValueError(f"trace is {tr!r}, expected 1")


@dataclass
class OptimizationReport:
    best_strategy: InterceptResendStrategy
    p_min: float
    restarts: int
    converged: bool
    history: list[tuple[int, float]] = field(default_factory=list)


# --- signal ensemble and wrong-click operators ---------------------------

def signal_ensemble(scheme: Scheme) -> tuple[list[tuple[int, str]], np.ndarray, np.ndarray]:
    """Alice's signals under the uniform prior.

    Returns (labels, signal matrix with one column per signal, priors).
    The prior is uniform over all (pair, bit) combinations.
    """
    labels = [(p.type_id, bit) for p in scheme.pairs for bit in BITS]
    states = np.column_stack([scheme.signal(t, b).amps for t, b in labels])
    priors = np.full(len(labels), 1.0 / len(labels))
    return labels, states, priors


def wrong_click_operator(scheme: Scheme, type_id: int, bit: str) -> np.ndarray:
    """The Hermitian operator whose expectation in the resend state is the
    wrong-click probability for the given signal.

    Bob picks each basis with probability 1/2; a detector is wrong when it
    decodes the opposite bit for this pair type (equivalently, when it is
    orthogonal to the signal state).
    """
    w = np.zeros((DIM, DIM), dtype=complex)
    for basis in scheme.bases():
        for detector in basis.vectors:
            if infer_bit(scheme, detector, type_id) != bit:
                w += 0.5 * np.outer(detector.amps, detector.amps.conj())
    return w


def wrong_click_stack(scheme: Scheme) -> np.ndarray:
    """Wrong-click operators for every signal, in signal_ensemble order."""
    labels, _, _ = signal_ensemble(scheme)
    return np.stack([wrong_click_operator(scheme, t, b) for t, b in labels])


def wrong_click_probability(
    scheme: Scheme, sent: tuple[int, str], resend: StateVector
) -> float:
    """Probability that Bob sees an impossible click, given the signal that
    was actually sent and the state Evan forwards."""
    w = wrong_click_operator(scheme, sent[0], sent[1])
    value = float(np.vdot(resend.amps, w @ resend.amps).real)
    return min(max(value, 0.0), 1.0)


def strategy_error_rate(scheme: Scheme, strategy: InterceptResendStrategy) -> float:
    """Per-photon wrong-click rate of a full strategy, averaged over the
    uniform signal prior and Evan's outcome distribution."""
    labels, states, priors = signal_ensemble(scheme)
    meas = strategy.measurement.matrix
    outcome_probs = np.abs(meas.conj().T @ states) ** 2  # (4, S)
    total = 0.0
    for s, label in enumerate(labels):
        for e in range(DIM):
            p = priors[s] * outcome_probs[e, s]
            if p > 0.0:
                total += p * wrong_click_probability(scheme, label, strategy.resend[e])
    return total


def optimal_resend(
    scheme: Scheme, strategy_measurement: MeasurementBasis, outcome: int
) -> tuple[StateVector, float]:
    """Best replacement state for one measurement outcome.

    Builds the posterior-weighted wrong-click operator and returns its
    minimum eigenpair; the eigenvalue is the minimal conditional
    wrong-click probability.
    """
    labels, states, priors = signal_ensemble(scheme)
    ops = wrong_click_stack(scheme)
    u = strategy_measurement.vectors[outcome].amps
    weights = priors * np.abs(u.conj() @ states) ** 2
    total = float(weights.sum())
    if total > 1e-15:
        posterior = weights / total
    else:
        posterior = np.full(len(labels), 1.0 / len(labels))
    w = np.einsum("s,sij->ij", posterior, ops)
    vals, vecs = _kernels.eigh4(w)
    vec = vecs[:, 0]
    vec = vec / math.sqrt(float(np.vdot(vec, vec).real))
    return StateVector(vec), float(vals[0])


def posterior_distribution(
    scheme: Scheme, strategy_measurement: MeasurementBasis, outcome: int
) -> np.ndarray:
    """Evan's posterior over signals after seeing one outcome."""
    _, states, priors = signal_ensemble(scheme)
    u = strategy_measurement.vectors[outcome].amps
    weights = priors * np.abs(u.conj() @ states) ** 2
    total = float(weights.sum())
    if total > 1e-15:
        return weights / total
    return np.full(states.shape[1], 1.0 / states.shape[1])


def strategy_from_params(scheme: Scheme, theta: np.ndarray) -> InterceptResendStrategy:
    """Concrete strategy for a basis parameter vector: the measured basis is
    exp(i H(theta)) applied to the canonical one, resends are optimal."""
    u = _kernels.unitary_from_params(np.asarray(theta, dtype=float))
    vectors = tuple(StateVector(u[:, j]) for j in range(DIM))
    meas = MeasurementBasis(vectors, "E")
    resend = tuple(optimal_resend(scheme, meas, e)[0] for e in range(DIM))
    return InterceptResendStrategy(meas, resend)


def optimize_strategy(
    scheme: Scheme,
    restarts: int,
    tolerance: float,
    rng: RandomStream,
) -> OptimizationReport:
    """Minimize the wrong-click rate over measurement bases.

    Gradient-free local descent (Powell) from ``restarts`` random starts;
    the 16 parameters generate the measurement unitary through exp(i H),
    and resend states are always the per-outcome optimum. Restart r draws
    its start point from rng.substream(r), so results do not depend on
    execution order. Ties in the final minimum go to the lowest restart
    index.
    """
    if restarts < 1:
        raise ValueError("restarts must be >= 1")
    if tolerance <= 0:
        raise ValueError("tolerance must be positive")

    _, states, priors = signal_ensemble(scheme)
    ops = np.ascontiguousarray(wrong_click_stack(scheme))
    states = np.ascontiguousarray(states)

    def objective(theta: np.ndarray) -> float:
        return _kernels.strategy_objective(theta, states, priors, ops)

    history: list[tuple[int, float]] = []
    best_value = math.inf
    best_theta: np.ndarray | None = None
    converged = True
    for r in range(restarts):
        start = rng.substream(r).gen.uniform(-2.0, 2.0, 16)
        result = minimize(
            objective,
            start,
            method="Powell",
            options={
                "maxfev": MAX_EVALS_PER_RESTART,
                "ftol": tolerance,
                "xtol": min(1e-6, tolerance),
            },
        )
        if result.nfev >= MAX_EVALS_PER_RESTART:
            converged = False
        value = float(result.fun)
        history.append((r, value))
        if value < best_value:
            best_value = value
            best_theta = np.asarray(result.x, dtype=float)

    strategy = strategy_from_params(scheme, best_theta)
    p_min = strategy_error_rate(scheme, strategy)
    return OptimizationReport(
        best_strategy=strategy,
        p_min=p_min,
        restarts=restarts,
        converged=converged,
        history=history,
    )


def naive_strategy(scheme: Scheme) -> InterceptResendStrategy:
    """Measure Bob's B basis and resend the detected state unchanged."""
    basis = scheme.basis_b
    meas = MeasurementBasis(basis.vectors, "E")
    return InterceptResendStrategy(meas, tuple(basis.vectors))


# --- closed forms ---------------------------------------------------------

def reference_error_rate(scheme: Scheme) -> float | None:
    """Published minimal intercept-resend error rate, when one exists."""
    if scheme.name in ("k", "product"):
        k = 1.0 if scheme.k is None else scheme.k
        return 0.5 - 0.5 * math.sqrt(1.0 + k**4) / (1.0 + k * k)
    if scheme.name == "k4":
        k = scheme.k
        return 0.5 * min(1.0, k * k) / (1.0 + k * k)
    if scheme.name == "three-one":
        return 1.0 / 6.0
    return None


def reference_guess_odds(scheme: Scheme) -> float | None:
    """Published optimal direct bit-guessing odds, when one exists.

    The closed form covers the two-pair family only; the four-pair
    extension has no published figure (its mixtures give 3/4 for every k,
    but that value is computed, not quoted).
    """
    if scheme.name in ("k", "product"):
        k = 1.0 if scheme.k is None else scheme.k
        return 0.5 + 0.5 / math.sqrt(1.0 + k * k)
    if scheme.name == "three-one":
        return 0.5
    return None


# --- state discrimination --------------------------------------------------

def mixed_state(states: list[StateVector], weights: list[float]) -> DensityMatrix:
    """The mixture sum_i w_i |psi_i><psi_i|."""
    if len(states) != len(weights):
        raise ValueError("states and weights differ in length")
    weights_arr = np.asarray(weights, dtype=float)
    if np.any(weights_arr < 0):
        raise ValueError("weights must be nonnegative")
    if abs(float(weights_arr.sum()) - 1.0) > 1e-12:
        raise ValueError("weights must sum to 1")
    acc = np.zeros((DIM, DIM), dtype=complex)
    for st, w in zip(states, weights_arr):
        acc += w * np.outer(st.amps, st.amps.conj())
    return DensityMatrix(HermitianMatrix4(acc))


def bit_mixtures(scheme: Scheme) -> tuple[DensityMatrix, DensityMatrix]:
    """The uniform '+' and '-' ensembles Evan faces without type information."""
    n = len(scheme.pairs)
    weights = [1.0 / n] * n
    rho_plus = mixed_state([p.plus for p in scheme.pairs], weights)
    rho_minus = mixed_state([p.minus for p in scheme.pairs], weights)
    return rho_plus, rho_minus


def helstrom_guess(rho_plus: DensityMatrix, rho_minus: DensityMatrix) -> float:
    """Best probability of guessing the bit from one photon, equal priors:
    1/2 + (1/4) * trace norm of (rho_plus - rho_minus)."""
    diff = rho_plus.matrix.entries - rho_minus.matrix.entries
    w, _ = _kernels.eigh4(diff)
    return 0.5 + 0.25 * float(np.abs(w).sum())


# --- serialization ----------------------------------------------------------

def strategy_to_json(strategy: InterceptResendStrategy) -> dict:
    return {
        "measurement": basis_to_json(strategy.measurement),
        "resend": [state_to_json(s) for s in strategy.resend],
    }
