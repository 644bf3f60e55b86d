"""detqkd: deterministic single-photon two-qubit cryptography toolkit.

Exact constructors for the two-qubit signal schemes, intercept-resend
eavesdropper analysis (error-rate optimization and optimal bit guessing),
and Monte Carlo simulation of the key-distribution and direct-communication
protocols.
"""

from detqkd._kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = ["KERNEL_BACKEND", "__version__"]
