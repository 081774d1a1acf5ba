"""Shape kinds and packed parameters consumed by both kernel backends.

Every body is evaluated in *canonical* coordinates, where it is one of:

* ``POWER``: ``sum_i |u_i| ** p_i < 1`` (unit ball for ``p_i == 2``)
* ``POLYTOPE``: ``normals @ u < offsets``
* ``POLY``: ``sum_k c_k prod_i u_i ** e_ki < 0`` (convex polynomial)
* ``CALLABLE``: ``g(u) < 0`` with a Python callable; numpy backend only
"""
from typing import Callable, NamedTuple, Optional

import numpy as np

POWER = 0
POLYTOPE = 1
POLY = 2
CALLABLE = 3

METHOD_AUTO = 0
METHOD_BISECT = 1

DEFAULT_TOL = 1e-12
DEFAULT_MAXITER = 200


class KernelParams(NamedTuple):
    kind: int
    exps: np.ndarray
    normals: np.ndarray
    offsets: np.ndarray
    coeffs: np.ndarray
    powers: np.ndarray
    func: Optional[Callable] = None


def make_params(kind, dim, exps=None, normals=None, offsets=None,
                coeffs=None, powers=None, func=None):
    f8 = np.float64
    return KernelParams(
        kind=int(kind),
        exps=np.ascontiguousarray(exps if exps is not None else np.zeros(dim), dtype=f8),
        normals=np.ascontiguousarray(normals if normals is not None else np.zeros((0, dim)), dtype=f8),
        offsets=np.ascontiguousarray(offsets if offsets is not None else np.zeros(0), dtype=f8),
        coeffs=np.ascontiguousarray(coeffs if coeffs is not None else np.zeros(0), dtype=f8),
        powers=np.ascontiguousarray(powers if powers is not None else np.zeros((0, dim)), dtype=np.int64),
        func=func,
    )
