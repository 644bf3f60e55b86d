"""Kernel backend selection.

The compiled Cython core is used when importable; otherwise the numpy
fallback takes over. Set DETQKD_PURE_KERNELS=1 to force the fallback.
"""

from __future__ import annotations

import os

from detqkd._kernels import pure as _pure

if os.environ.get("DETQKD_PURE_KERNELS"):
    _impl = _pure
else:
    try:
        from detqkd._kernels import _core as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pure

BACKEND: str = _impl.BACKEND
eigh4 = _impl.eigh4
unitary_from_params = _impl.unitary_from_params
strategy_objective = _impl.strategy_objective
hermitian_from_params = _pure.hermitian_from_params


def available_backends() -> dict[str, object]:
    """Importable backend modules keyed by name (for tests and benchmarks)."""
    backends: dict[str, object] = {"pure": _pure}
    try:
        from detqkd._kernels import _core

        backends["compiled"] = _core
    except ImportError:
        pass
    return backends
