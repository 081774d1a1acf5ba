"""Normalizing coordinates at a boundary point.

For a based planar body and a boundary point ``xi`` the map
``T = shear . translate . rotate`` sends the basepoint to the origin, ``xi``
to ``(0, -h)`` and the tangent line at ``xi`` to the horizontal line
``y = -h``, with the body above it.
"""
from dataclasses import dataclass

import numpy as np

from .body import (BasedBody, ConvexBody, _vec, boundary_points, outward_normals,
                   tangent_hyperplane, unit_directions)
from .errors import InvalidInputError, NonSmoothBoundaryError, NumericalFailure

PSI_MARGIN_FLAG = 1e-3


@dataclass(frozen=True)
class AffineMap:
    """``x -> linear @ x + translation`` with an invertible linear part."""

    linear: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        L = np.array(self.linear, dtype=np.float64)
        b = np.array(self.translation, dtype=np.float64)
        if L.ndim != 2 or L.shape[0] != L.shape[1] or b.shape != (L.shape[0],):
            raise InvalidInputError("affine map needs a square matrix and a matching translation")
        if not abs(np.linalg.det(L)) > 1e-14:
            raise InvalidInputError("affine map is singular")
        L.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "linear", L)
        object.__setattr__(self, "translation", b)

    @classmethod
    def identity(cls, dim=2):
        return cls(np.eye(dim), np.zeros(dim))

    @property
    def dim(self):
        return self.linear.shape[0]

    def __call__(self, points):
        return np.asarray(points, dtype=np.float64) @ self.linear.T + self.translation

    def __matmul__(self, other):
        """Composition: ``(self @ other)(x) == self(other(x))``."""
        return AffineMap(self.linear @ other.linear, self.linear @ other.translation + self.translation)

    def inverse(self):
        Li = np.linalg.inv(self.linear)
        return AffineMap(Li, -Li @ self.translation)


def apply_map(amap, obj):
    """Push a :class:`ConvexBody` or :class:`BasedBody` forward through ``amap``."""
    if isinstance(obj, BasedBody):
        return BasedBody(apply_map(amap, obj.body), amap(obj.basepoint))
    if isinstance(obj, ConvexBody):
        return obj.transformed(amap.linear, amap.translation)
    raise InvalidInputError(f"cannot apply an affine map to {type(obj).__name__}")


def _require_planar(based_body):
    if based_body.dim != 2:
        raise InvalidInputError("normalization is planar; reduce with planar_section first")
    if not based_body.body.smooth:
        raise NonSmoothBoundaryError("normalization needs a C^1 boundary")


def _psi_from(x0, xi, n):
    v = x0 - xi
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    # counterclockwise unit tangent
    w = np.stack([-n[..., 1], n[..., 0]], axis=-1)
    return np.arctan2(-np.sum(v * n, axis=-1), np.sum(v * w, axis=-1))


def psi_angle(based_body, xi):
    """Angle at ``xi`` between the direction to the basepoint and the
    counterclockwise tangent; lies in ``(0, pi)``."""
    _require_planar(based_body)
    xi, n = tangent_hyperplane(based_body.body, _vec(xi, "xi"))
    return float(_psi_from(based_body.basepoint, xi, n))


@dataclass(frozen=True)
class NormalizationFrame:
    xi: np.ndarray
    psi: float
    T1: AffineMap
    T2: AffineMap
    T3: AffineMap
    T: AffineMap
    based: BasedBody
    h: float
    residuals: dict


def _rotation(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def build_normalization(based_body, xi):
    """Normalizing frame at boundary point ``xi``.

    ``T1`` rotates the outward normal at ``xi`` to ``(0, -1)``, ``T2``
    translates the basepoint to the origin, and ``T3`` is the shear
    ``[[1, -cot psi], [0, 1]]`` that moves ``xi`` onto the second axis.
    ``residuals`` records how well those three postconditions hold.
    """
    _require_planar(based_body)
    xi, n = tangent_hyperplane(based_body.body, _vec(xi, "xi"))
    x0 = based_body.basepoint
    psi = float(_psi_from(x0, xi, n))
    if not np.sin(psi) > 1e-12 or not 0.0 < psi < np.pi:
        raise NumericalFailure(f"angle psi={psi!r} left (0, pi); body may not be strictly convex")
    R = _rotation(-0.5 * np.pi - np.arctan2(n[1], n[0]))
    T1 = AffineMap(R, np.zeros(2))
    T2 = AffineMap(np.eye(2), -R @ x0)
    T3 = AffineMap(np.array([[1.0, -np.cos(psi) / np.sin(psi)], [0.0, 1.0]]), np.zeros(2))
    T = T3 @ T2 @ T1
    image = apply_map(T, based_body)
    txi = T(xi)
    h = float(np.linalg.norm(txi))
    tn = outward_normals(image.body, txi)[0]
    residuals = {
        "basepoint": float(np.max(np.abs(image.basepoint))),
        "xi": float(np.max(np.abs(txi - np.array([0.0, -h])))),
        "tangent": float(np.max(np.abs(tn - np.array([0.0, -1.0])))),
    }
    return NormalizationFrame(xi, psi, T1, T2, T3, T, image, h, residuals)


def boundary_psi(based_body, samples):
    """Boundary samples seen from the basepoint and their angles ``psi``."""
    _require_planar(based_body)
    X = boundary_points(based_body, unit_directions(2, samples))
    N = outward_normals(based_body.body, X)
    return X, _psi_from(based_body.basepoint, X, N)


@dataclass(frozen=True)
class ShearScan:
    min_psi: float
    max_psi: float
    max_abs_cot: float
    margin: float
    flagged: bool
    argmin: np.ndarray
    argmax: np.ndarray


def shear_bound_scan(based_body, samples=1024):
    """Range of ``psi`` over boundary samples and the resulting shear size.

    ``margin`` is the distance of that range from ``{0, pi}``; it is
    flagged when below ``PSI_MARGIN_FLAG``.
    """
    if samples < 4:
        raise InvalidInputError("shear_bound_scan needs at least 4 samples")
    X, psi = boundary_psi(based_body, samples)
    lo, hi = int(np.argmin(psi)), int(np.argmax(psi))
    margin = float(min(psi[lo], np.pi - psi[hi]))
    cot = np.abs(np.cos(psi) / np.sin(psi))
    return ShearScan(float(psi[lo]), float(psi[hi]), float(cot.max()), margin,
                     margin < PSI_MARGIN_FLAG, X[lo], X[hi])
