"""The signal schemes and the deterministic bit-inference rule.

A scheme fixes Alice's signal pairs {|i+>, |i->} and Bob's two measurement
bases B and B'. All schemes here share the determinism property: every
detector state is orthogonal to exactly one member of each pair, so the
pair type always decodes the bit. Inference is computed from orthogonality
at runtime rather than from stored sign grids.

Constructors:

* ``product_scheme``     - two pairs and both bases are product states.
* ``k_scheme``           - the one-parameter family; B is canonical and B'
                           is obtained from the Hermitian-unitary matrix
                           ``k_matrix(k)``; at k=1 it coincides with the
                           product scheme and the bases are complementary.
* ``k_scheme_four_pairs``- the k scheme extended to four signal pairs.
* ``three_one_scheme``   - four orthogonal pairs |i+> = |B_i>,
                           |i-> = |B'_i>; each bit ensemble fills the
                           whole space uniformly, which is what makes
                           direct communication safe.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from detqkd.hilbert import (
    DIM,
    TOL_ORTHO,
    MeasurementBasis,
    StateVector,
    basis_to_json,
    inner,
    product_state,
    state_to_json,
)

PLUS = "+"
MINUS = "-"
BITS = (PLUS, MINUS)

K_MIN = 1e-6
K_MAX = 1e6


class DegenerateParameterError(ValueError):
    """k so extreme that the two bases are essentially identical."""


class AmbiguousInferenceError(ValueError):
    """A detector state orthogonal to both or neither member of a pair."""


@dataclass(frozen=True, eq=False)
class StatePair:
    """Alice's two signal states for one pair type.

    ``plus`` and ``minus`` are always mutually orthogonal; this is forced
    by the determinism property. What security requires is that states of
    *different* pairs are neither identical nor orthogonal (except in the
    three-one scheme, where the cross overlaps are 1/sqrt(3) between
    opposite bits and 0 between equal bits).
    """

    plus: StateVector
    minus: StateVector
    type_id: int


@dataclass(frozen=True, eq=False)
class Scheme:
    """Signal pairs plus Bob's two bases."""

    name: str
    pairs: tuple[StatePair, ...]
    basis_b: MeasurementBasis
    basis_b_prime: MeasurementBasis
    k: float | None = None

    def bases(self) -> tuple[MeasurementBasis, MeasurementBasis]:
        return (self.basis_b, self.basis_b_prime)

    def pair(self, type_id: int) -> StatePair:
        for p in self.pairs:
            if p.type_id == type_id:
                return p
        raise ValueError(f"scheme {self.name!r} has no pair type {type_id}")

    def signal(self, type_id: int, bit: str) -> StateVector:
        p = self.pair(type_id)
        if bit == PLUS:
            return p.plus
        if bit == MINUS:
            return p.minus
        raise ValueError(f"bit must be '+' or '-', got {bit!r}")

    def basis(self, label: str) -> MeasurementBasis:
        for b in self.bases():
            if b.label == label:
                return b
        raise ValueError(f"scheme {self.name!r} has no basis labelled {label!r}")

    def detector(self, label: str, outcome: int) -> StateVector:
        return self.basis(label).vectors[outcome]


def k_matrix(k: float) -> np.ndarray:
    """The Hermitian, unitary basis-change matrix of the k scheme.

    Real symmetric with K @ K = 1; its columns are the B' basis vectors
    expressed in the B basis.
    """
    k = float(k)
    return np.array(
        [
            [1.0, k, k, k * k],
            [k, k * k, -1.0, -k],
            [k, -1.0, k * k, -k],
            [k * k, -k, -k, 1.0],
        ]
    ) / (1.0 + k * k)


def _check_k(k: float) -> float:
    k = float(k)
    if not math.isfinite(k) or abs(k) < K_MIN or abs(k) > K_MAX:
        raise DegenerateParameterError(
            f"k={k!r} is degenerate: the two measurement bases become "
            f"essentially identical (need {K_MIN} <= |k| <= {K_MAX})"
        )
    return k


def _canonical_basis(label: str) -> MeasurementBasis:
    vectors = tuple(StateVector(np.eye(DIM, dtype=complex)[:, j]) for j in range(DIM))
    return MeasurementBasis(vectors, label)


def _basis_from_columns(columns: np.ndarray, label: str) -> MeasurementBasis:
    vectors = tuple(StateVector(columns[:, j]) for j in range(DIM))
    return MeasurementBasis(vectors, label)


def _normalized(raw: np.ndarray) -> StateVector:
    return StateVector(raw / math.sqrt(float(np.vdot(raw, raw).real)))


def product_scheme() -> Scheme:
    """Two signal pairs and two bases built purely from product states."""
    pairs = (
        StatePair(product_state("R", "s"), product_state("L", "a"), 1),
        StatePair(product_state("S", "v"), product_state("A", "h"), 2),
    )
    basis_b = _canonical_basis("B")
    basis_b_prime = MeasurementBasis(
        (
            product_state("S", "s"),
            product_state("A", "s"),
            product_state("S", "a"),
            product_state("A", "a"),
        ),
        "B'",
    )
    return Scheme("product", pairs, basis_b, basis_b_prime, k=None)


def _two_pair_states(k: float) -> list[tuple[np.ndarray, np.ndarray]]:
    # (plus, minus) raw coefficient rows over the B basis; the same
    # coefficients also expand each state over the B' basis.
    return [
        (np.array([1.0, k, 0.0, 0.0]), np.array([0.0, 0.0, k, -1.0])),
        (np.array([1.0, 0.0, k, 0.0]), np.array([0.0, k, 0.0, -1.0])),
    ]


def _extra_pair_states(k: float) -> list[tuple[np.ndarray, np.ndarray]]:
    # Pairs three and four live on the same coordinate-plane splits as
    # pairs one and two but are the only *other* choice on each split that
    # keeps the determinism property in both bases; equivalently, their
    # expansions over the B' basis mirror the pair-one/two patterns.
    return [
        (np.array([k, -1.0, 0.0, 0.0]), np.array([0.0, 0.0, 1.0, k])),
        (np.array([k, 0.0, -1.0, 0.0]), np.array([0.0, 1.0, 0.0, k])),
    ]


def k_scheme(k: float) -> Scheme:
    """The two-pair scheme with basis-overlap parameter k."""
    k = _check_k(k)
    basis_b = _canonical_basis("B")
    basis_b_prime = _basis_from_columns(k_matrix(k).astype(complex), "B'")
    pairs = tuple(
        StatePair(_normalized(plus), _normalized(minus), i + 1)
        for i, (plus, minus) in enumerate(_two_pair_states(k))
    )
    return Scheme("k", pairs, basis_b, basis_b_prime, k=k)


def k_scheme_four_pairs(k: float) -> Scheme:
    """The k scheme extended to all four deterministic signal pairs.

    Using four pairs raises the minimal disturbance an intercept-resend
    attacker must cause, at the price of never-skippable type announcements.
    """
    k = _check_k(k)
    base = k_scheme(k)
    extra = tuple(
        StatePair(_normalized(plus), _normalized(minus), i + 3)
        for i, (plus, minus) in enumerate(_extra_pair_states(k))
    )
    return Scheme("k4", base.pairs + extra, base.basis_b, base.basis_b_prime, k=k)


def three_one_transform() -> np.ndarray:
    """The Hermitian, unitary matrix relating the three-one scheme's bases.

    (i/sqrt(3)) times a real sign matrix with zero diagonal; row i holds
    the expansion of <B_i| over the <B'_j|.
    """
    signs = np.array(
        [
            [0, 1, 1, 1],
            [-1, 0, -1, 1],
            [-1, 1, 0, -1],
            [-1, -1, 1, 0],
        ],
        dtype=float,
    )
    return (1j / math.sqrt(3.0)) * signs


def three_one_scheme() -> Scheme:
    """Four orthogonal signal pairs |i+> = |B_i>, |i-> = |B'_i>.

    B' is the canonical basis; |B_i> has canonical components equal to the
    conjugated i-th row of ``three_one_transform``. Each bit ensemble
    averages to the maximally mixed state, so an attacker cannot tell '+'
    photons from '-' photons without the type information.
    """
    m = three_one_transform()
    basis_b_prime = _canonical_basis("B'")
    basis_b = _basis_from_columns(m.conj().T, "B")
    pairs = tuple(
        StatePair(basis_b.vectors[i], basis_b_prime.vectors[i], i + 1) for i in range(DIM)
    )
    return Scheme("three-one", pairs, basis_b, basis_b_prime, k=None)


SCHEME_BUILDERS = {
    "product": lambda k=None: product_scheme(),
    "k": lambda k: k_scheme(k),
    "k4": lambda k: k_scheme_four_pairs(k),
    "three-one": lambda k=None: three_one_scheme(),
}


def build_scheme(name: str, k: float | None = None) -> Scheme:
    """Construct a scheme by CLI name; k is required for the k families."""
    if name not in SCHEME_BUILDERS:
        raise ValueError(f"unknown scheme {name!r}; choose from {sorted(SCHEME_BUILDERS)}")
    if name in ("k", "k4"):
        if k is None:
            raise ValueError(f"scheme {name!r} needs a k parameter")
        return SCHEME_BUILDERS[name](k)
    return SCHEME_BUILDERS[name]()


def infer_bit(scheme: Scheme, detected: StateVector, type_id: int) -> str:
    """Bob's deterministic decoding rule.

    '+' when the detected state is orthogonal to the pair's minus state,
    '-' when orthogonal to the plus state. Raises AmbiguousInferenceError
    when both or neither overlap vanishes, which no valid scheme produces
    for its own detector states.
    """
    pair = scheme.pair(type_id)
    plus_dead = abs(inner(detected, pair.plus)) <= TOL_ORTHO
    minus_dead = abs(inner(detected, pair.minus)) <= TOL_ORTHO
    if minus_dead and not plus_dead:
        return PLUS
    if plus_dead and not minus_dead:
        return MINUS
    raise AmbiguousInferenceError(
        f"detector state resolves to {'no' if not (plus_dead or minus_dead) else 'both'} "
        f"bits for pair type {type_id} of scheme {scheme.name!r}"
    )


def needs_classical_info(scheme: Scheme, detected: StateVector) -> bool:
    """False when every pair type decodes the detected state to the same bit."""
    bits = {infer_bit(scheme, detected, p.type_id) for p in scheme.pairs}
    return len(bits) > 1


def inference_grid(scheme: Scheme) -> dict[tuple[str, int, int], str]:
    """The full decoding grid keyed by (basis label, outcome, type_id)."""
    grid = {}
    for basis in scheme.bases():
        for outcome, detector in enumerate(basis.vectors):
            for pair in scheme.pairs:
                grid[(basis.label, outcome, pair.type_id)] = infer_bit(
                    scheme, detector, pair.type_id
                )
    return grid


def scheme_to_json(scheme: Scheme) -> dict:
    return {
        "name": scheme.name,
        "k": scheme.k,
        "pairs": [
            {
                "type_id": p.type_id,
                "plus": state_to_json(p.plus),
                "minus": state_to_json(p.minus),
            }
            for p in scheme.pairs
        ],
        "basis_b": basis_to_json(scheme.basis_b),
        "basis_b_prime": basis_to_json(scheme.basis_b_prime),
    }


# --- structural validation ----------------------------------------------

def determinism_deviation(scheme: Scheme) -> float:
    """How far the scheme is from the determinism property (0 when exact).

    For every (pair, detector) the smaller of the two overlaps must vanish
    and the larger must not. Returns the worst residual overlap that should
    be zero, or inf when a detector is orthogonal to both members of a pair.
    """
    worst = 0.0
    for basis in scheme.bases():
        for detector in basis.vectors:
            for pair in scheme.pairs:
                a = abs(inner(detector, pair.plus))
                b = abs(inner(detector, pair.minus))
                lo, hi = min(a, b), max(a, b)
                if hi <= TOL_ORTHO:
                    return math.inf
                worst = max(worst, lo)
    return worst


def validation_checks(scheme: Scheme) -> list[dict]:
    """Structural checks for a constructed scheme, as report entries."""
    checks: list[dict] = []

    def add(name: str, passed: bool, detail: str):
        checks.append({"name": name, "passed": bool(passed), "detail": detail})

    for basis in scheme.bases():
        gram = basis.matrix.conj().T @ basis.matrix
        dev = float(np.max(np.abs(gram - np.eye(DIM))))
        add(f"basis_{basis.label}_orthonormal", dev <= TOL_ORTHO, f"max Gram deviation {dev:.3e}")

    det_dev = determinism_deviation(scheme)
    add("determinism_both_bases", det_dev <= TOL_ORTHO, f"worst margin {det_dev:.3e}")

    if scheme.name in ("k", "k4"):
        km = k_matrix(scheme.k)
        herm = float(np.max(np.abs(km - km.T)))
        uni = float(np.max(np.abs(km @ km - np.eye(DIM))))
        add("k_matrix_hermitian", herm <= 1e-12, f"max asymmetry {herm:.3e}")
        add("k_matrix_unitary", uni <= 1e-12, f"max |K^2 - 1| {uni:.3e}")

        # pairs one and two have identical expansion coefficients in B and
        # B'; the extra pairs of the four-pair scheme instead swap their
        # expansions with their partner under the basis change
        def bp_coeffs(st):
            return scheme.basis_b_prime.matrix.conj().T @ st.amps

        dual_dev = 0.0
        for pair in scheme.pairs[:2]:
            for st in (pair.plus, pair.minus):
                dual_dev = max(dual_dev, float(np.max(np.abs(st.amps - bp_coeffs(st)))))
        add("pair_expansion_basis_invariant", dual_dev <= 1e-10, f"max deviation {dual_dev:.3e}")
        if scheme.name == "k4":
            swap_dev = 0.0
            for pair in scheme.pairs[2:]:
                swap_dev = max(
                    swap_dev,
                    float(np.max(np.abs(bp_coeffs(pair.plus) - pair.minus.amps))),
                    float(np.max(np.abs(bp_coeffs(pair.minus) - pair.plus.amps))),
                )
            add("extra_pair_expansion_swap", swap_dev <= 1e-10, f"max deviation {swap_dev:.3e}")

        cross = abs(inner(scheme.pairs[0].plus, scheme.pairs[1].plus))
        add(
            "cross_pair_overlap_intermediate",
            1e-6 < cross < 1.0 - 1e-6,
            f"|<1+|2+>| = {cross:.6f}",
        )

        overlaps = np.abs(scheme.basis_b.matrix.conj().T @ scheme.basis_b_prime.matrix) ** 2
        comp_dev = float(np.max(np.abs(overlaps - 0.25)))
        comp_ok = comp_dev <= 1e-12 if abs(abs(scheme.k) - 1.0) < 1e-12 else True
        add("complementarity_deviation", comp_ok, f"max | |<B_i|B'_j>|^2 - 1/4 | = {comp_dev:.3e}")

    if scheme.name == "three-one":
        m = three_one_transform()
        herm = float(np.max(np.abs(m - m.conj().T)))
        uni = float(np.max(np.abs(m @ m - np.eye(DIM))))
        add("transform_hermitian", herm <= 1e-12, f"max deviation {herm:.3e}")
        add("transform_unitary", uni <= 1e-12, f"max |M^2 - 1| {uni:.3e}")

        pair_orth = max(abs(inner(p.plus, p.minus)) for p in scheme.pairs)
        add("pairs_orthogonal", pair_orth <= 1e-12, f"max |<i+|i->| = {pair_orth:.3e}")

        for bit in BITS:
            acc = np.zeros((DIM, DIM), dtype=complex)
            for p in scheme.pairs:
                st = p.plus if bit == PLUS else p.minus
                acc += np.outer(st.amps, st.amps.conj())
            dev = float(np.max(np.abs(acc - np.eye(DIM))))
            add(
                f"completeness_{'plus' if bit == PLUS else 'minus'}",
                dev <= TOL_ORTHO,
                f"max |sum of projectors - 1| = {dev:.3e}",
            )

        overlaps = np.abs(scheme.basis_b.matrix.conj().T @ scheme.basis_b_prime.matrix) ** 2
        off = overlaps[~np.eye(DIM, dtype=bool)]
        diag = np.diag(overlaps)
        dev = max(float(np.max(np.abs(off - 1.0 / 3.0))), float(np.max(np.abs(diag))))
        add("cross_basis_overlap_third", dev <= 1e-12, f"max deviation from 1/3 grid {dev:.3e}")

    return checks
