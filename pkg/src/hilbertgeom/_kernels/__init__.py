"""Kernel backend selection.

The numba backend is used when numba imports cleanly and the environment
variable ``HILBERTGEOM_DISABLE_NUMBA`` is unset (or ``0``/``false``).
Otherwise every kernel runs on the vectorised numpy path.  Both backends
are importable directly for comparison tests and benchmarks.
"""
import os
import warnings

import numpy as np

from . import numpy_kernels
from .common import (CALLABLE, DEFAULT_MAXITER, DEFAULT_TOL, METHOD_AUTO,
                     METHOD_BISECT, POLY, POLYTOPE, POWER, KernelParams,
                     make_params)

__all__ = [
    "BACKEND", "CALLABLE", "DEFAULT_MAXITER", "DEFAULT_TOL", "KernelParams",
    "METHOD_AUTO", "METHOD_BISECT", "POLY", "POLYTOPE", "POWER",
    "gauges", "make_params", "pair_tables", "ray_params", "use_backend",
]


def _numba_requested():
    flag = os.environ.get("HILBERTGEOM_DISABLE_NUMBA", "").strip().lower()
    return flag in ("", "0", "false", "no")


try:
    if not _numba_requested():
        raise ImportError("disabled by HILBERTGEOM_DISABLE_NUMBA")
    # old system TBB only makes numba fall back to another threading layer
    warnings.filterwarnings("ignore", message="The TBB threading layer requires")
    from . import numba_kernels
except ImportError:
    numba_kernels = None

BACKEND = "numba" if numba_kernels is not None else "numpy"


def use_backend(name):
    """Switch the active backend at runtime (``"numba"`` or ``"numpy"``)."""
    global BACKEND, numba_kernels
    if name == "numba":
        from . import numba_kernels as nk
        numba_kernels = nk
    elif name != "numpy":
        raise ValueError(f"unknown backend {name!r}")
    BACKEND = name


def _jit_ok(params):
    return BACKEND == "numba" and params.kind != CALLABLE


def _f8(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def ray_params(params, S0, D, method=METHOD_AUTO, tol=DEFAULT_TOL, maxiter=DEFAULT_MAXITER):
    if not _jit_ok(params):
        return numpy_kernels.ray_params(params, S0, D, method, tol, maxiter)
    D = _f8(np.atleast_2d(D))
    S0 = _f8(np.broadcast_to(np.atleast_2d(S0), D.shape))
    p = params
    return numba_kernels.ray_params_batch(p.kind, p.exps, p.normals, p.offsets, p.coeffs,
                                          p.powers, S0, D, method, tol, maxiter)


def gauges(params, s0, V, sym=False, tol=DEFAULT_TOL, maxiter=DEFAULT_MAXITER):
    if not _jit_ok(params):
        return numpy_kernels.gauges(params, s0, V, sym, tol, maxiter)
    p = params
    return numba_kernels.gauges_batch(p.kind, p.exps, p.normals, p.offsets, p.coeffs, p.powers,
                                      _f8(s0), _f8(np.atleast_2d(V)), sym, tol, maxiter)


def pair_tables(params, s0, V, sym=False, tol=DEFAULT_TOL, maxiter=DEFAULT_MAXITER):
    if not _jit_ok(params):
        return numpy_kernels.pair_tables(params, s0, V, sym, tol, maxiter)
    p = params
    return numba_kernels.pair_tables(p.kind, p.exps, p.normals, p.offsets, p.coeffs, p.powers,
                                     _f8(s0), _f8(V), sym, tol, maxiter)
