"""Pure numpy implementations of the hot kernels.

Fallback backend used when the compiled extension is unavailable (or when
DETQKD_PURE_KERNELS is set). Function contracts are identical to the
compiled versions in ``_core``; the kernel test suite runs against both.
"""

from __future__ import annotations

import numpy as np

BACKEND = "pure"

# Parameter layout for the 16-parameter Hermitian generator: theta[0:4] is
# the real diagonal, then (re, im) for the upper off-diagonal entries in
# row-major order (0,1),(0,2),(0,3),(1,2),(1,3),(2,3). Both backends must
# keep this layout in sync.
_OFFDIAG = ((0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3))


def hermitian_from_params(theta: np.ndarray) -> np.ndarray:
    """4x4 Hermitian matrix from 16 real parameters."""
    theta = np.asarray(theta, dtype=float)
    h = np.zeros((4, 4), dtype=complex)
    h[np.diag_indices(4)] = theta[:4]
    pos = 4
    for i, j in _OFFDIAG:
        h[i, j] = theta[pos] + 1j * theta[pos + 1]
        h[j, i] = np.conj(h[i, j])
        pos += 2
    return h


def eigh4(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigen-decomposition of a 4x4 Hermitian matrix.

    Returns (w, v) with eigenvalues ascending and eigenvectors as the
    columns of v.
    """
    return np.linalg.eigh(np.asarray(a, dtype=complex))


def unitary_from_params(theta: np.ndarray) -> np.ndarray:
    """exp(i*H(theta)); well defined independently of the eigensolver."""
    w, v = np.linalg.eigh(hermitian_from_params(theta))
    return (v * np.exp(1j * w)) @ v.conj().T


def strategy_objective(
    theta: np.ndarray,
    signals: np.ndarray,
    priors: np.ndarray,
    wrong_ops: np.ndarray,
) -> float:
    """Average wrong-click probability of the measure-and-resend attack.

    The attacker measures the basis given by the columns of exp(i*H(theta))
    and resends, for each outcome, the state minimizing the posterior
    wrong-click operator. The returned value is

        sum_e  lambda_min( sum_s priors[s] * |<u_e|psi_s>|^2 * W_s )

    with psi_s the columns of ``signals`` (4 x S) and W_s the stacked 4x4
    Hermitian wrong-click operators (S x 4 x 4).
    """
    u = unitary_from_params(theta)
    coeffs = priors * np.abs(u.conj().T @ signals) ** 2  # (4, S)
    mats = np.einsum("es,sij->eij", coeffs, wrong_ops)
    return float(np.linalg.eigvalsh(mats)[:, 0].sum())
