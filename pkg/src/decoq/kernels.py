"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy fallback.
Set ``DECOQ_PURE_PYTHON=1`` to force the fallback.
"""

from __future__ import annotations

import os

from . import _kernels_py

BACKEND = "python"

if os.environ.get("DECOQ_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
else:
    try:
        from . import _ckernels as _impl  # type: ignore[attr-defined]

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py

ptrace_bipartite = _impl.ptrace_bipartite
trace_product = _impl.trace_product
series_observables = _impl.series_observables
# BLAS-bound in either backend, so it is shared
phase_quadratic_forms = _kernels_py.phase_quadratic_forms

__all__ = ["BACKEND", "ptrace_bipartite", "trace_product", "series_observables", "phase_quadratic_forms"]
