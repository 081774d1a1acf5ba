"""Convex body representations and their geometric oracles.

A :class:`ConvexBody` is a canonical shape (unit power ball, polytope,
convex polynomial sublevel set, or an arbitrary convex callable) seen
through an injective affine map ``s = G x + g`` from world coordinates to
canonical coordinates.  Ray parameters are invariant under that map, so
every ray, gauge and membership query is answered in canonical space.
"""
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np

from . import _kernels as K
from ._kernels import numpy_kernels
from .errors import (InvalidInputError, NonSmoothBoundaryError, NumericalFailure,
                     PreconditionError)

#: membership slack on the canonical defining function
MEMBERSHIP_TOL = 1e-12
#: points with center-based gauge above ``1 - INTERIOR_MARGIN`` are not interior
INTERIOR_MARGIN = 1e-10
#: centered finite-difference step for implicit-body normals
FD_STEP = 1e-6

_FACET_TOL = 1e-9


def _vec(x, name="point"):
    a = np.asarray(x, dtype=np.float64)
    if a.ndim != 1 or not np.all(np.isfinite(a)):
        raise InvalidInputError(f"{name} must be a finite 1-D vector, got {x!r}")
    return a


def _frozen(a):
    a = np.array(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ConvexBody:
    """Bounded open convex set with membership, ray and normal oracles.

    Build instances with the constructors (:func:`ellipse`, :func:`p_ball`,
    :func:`polygon`, ...) rather than directly.
    """

    variant: str
    params: K.KernelParams
    to_canonical: np.ndarray
    shift: np.ndarray
    center: np.ndarray
    strictly_convex: bool = True
    smooth: bool = True
    spec: Optional[dict] = None
    fd_step: float = FD_STEP
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def dim(self):
        return self.to_canonical.shape[1]

    def canonical(self, points):
        P = np.asarray(points, dtype=np.float64)
        return P @ self.to_canonical.T + self.shift

    def canonical_dirs(self, vectors):
        return np.asarray(vectors, dtype=np.float64) @ self.to_canonical.T

    def defining_function(self, points):
        """Canonical defining function; negative exactly on the interior."""
        S = np.atleast_2d(self.canonical(points))
        p = self.params
        if p.kind == K.POWER:
            return numpy_kernels._power_g(p.exps, S)
        if p.kind == K.POLYTOPE:
            return np.max(S @ p.normals.T - p.offsets, axis=1)
        if p.kind == K.POLY:
            return numpy_kernels._poly_g(p.coeffs, p.powers, S)
        return np.asarray(p.func(S), dtype=np.float64)

    def transformed(self, linear, translation):
        """Image of the body under ``x -> linear @ x + translation``."""
        L = np.asarray(linear, dtype=np.float64)
        b = np.asarray(translation, dtype=np.float64)
        if L.shape != (self.dim, self.dim) or b.shape != (self.dim,):
            raise InvalidInputError("affine map dimension does not match the body")
        if abs(np.linalg.det(L)) < 1e-14:
            raise InvalidInputError("affine map is singular")
        Linv = np.linalg.inv(L)
        G = self.to_canonical @ Linv
        spec = None
        if self.spec is not None:
            spec = dict(self.spec)
            old = spec.get("transform")
            M0 = np.asarray(old["matrix"]) if old else np.eye(self.dim)
            t0 = np.asarray(old["translation"]) if old else np.zeros(self.dim)
            spec["transform"] = {"matrix": (L @ M0).tolist(), "translation": (L @ t0 + b).tolist()}
        return replace(self, to_canonical=_frozen(G), shift=_frozen(self.shift - G @ b),
                       center=_frozen(L @ self.center + b), spec=spec, _cache={})


def _make(variant, params, G, g, center, **kw):
    return ConvexBody(variant=variant, params=params, to_canonical=_frozen(G),
                      shift=_frozen(g), center=_frozen(center), **kw)


def _rotation2(angle):
    c, s = np.cos(angle), np.sin(angle)
    return np.array([[c, -s], [s, c]])


def _axes(semi_axes, dim=None):
    a = _vec(semi_axes, "semi_axes")
    if dim is not None and a.size != dim:
        raise InvalidInputError(f"expected {dim} semi-axes, got {a.size}")
    if np.any(a <= 0):
        raise InvalidInputError("semi-axes must be positive")
    return a


def _center(center, dim):
    c = np.zeros(dim) if center is None else _vec(center, "center")
    if c.size != dim:
        raise InvalidInputError(f"center must have {dim} coordinates")
    return c


def ellipse(semi_axes=(1.0, 1.0), center=None, angle=0.0):
    """Planar ellipse with the given semi-axes, rotated by ``angle`` radians."""
    a = _axes(semi_axes, 2)
    c = _center(center, 2)
    G = np.diag(1.0 / a) @ _rotation2(angle).T
    spec = {"type": "ellipse", "semi_axes": a.tolist(), "center": c.tolist(), "angle": float(angle)}
    return _make("ellipse", K.make_params(K.POWER, 2, exps=[2.0, 2.0]), G, -G @ c, c, spec=spec)


def disk(radius=1.0, center=None):
    return ellipse((radius, radius), center)


def ellipsoid(shape, center=None):
    """Ellipsoid ``{x : (x-c)^T shape^{-1} (x-c) < 1}``.

    ``shape`` is symmetric positive definite; its eigenvalues are the squared
    semi-axes, so ``diag(4, 1, 1)`` has semi-axes ``(2, 1, 1)``.
    """
    S = np.asarray(shape, dtype=np.float64)
    if S.ndim != 2 or S.shape[0] != S.shape[1]:
        raise InvalidInputError("shape must be a square matrix")
    if not np.allclose(S, S.T, atol=1e-12):
        raise InvalidInputError("shape must be symmetric")
    w, Q = np.linalg.eigh(S)
    if np.any(w <= 0):
        raise InvalidInputError("shape must be positive definite")
    n = S.shape[0]
    c = _center(center, n)
    G = Q @ np.diag(w ** -0.5) @ Q.T
    spec = {"type": "ellipsoid", "shape": S.tolist(), "center": c.tolist()}
    return _make("ellipsoid", K.make_params(K.POWER, n, exps=np.full(n, 2.0)), G, -G @ c, c, spec=spec)


def ball(dim=2, radius=1.0, center=None):
    return ellipsoid(np.eye(dim) * radius ** 2, center)


def p_ball(p, semi_axes=(1.0, 1.0), center=None):
    """``{x : sum_i |(x_i - c_i) / a_i|^p < 1}`` for ``p > 1``."""
    p = float(p)
    if not p > 1:
        raise InvalidInputError(f"p-ball exponent must exceed 1, got {p}")
    a = _axes(semi_axes)
    c = _center(center, a.size)
    spec = {"type": "pball", "p": p, "semi_axes": a.tolist(), "center": c.tolist()}
    G = np.diag(1.0 / a)
    return _make("pball", K.make_params(K.POWER, a.size, exps=np.full(a.size, p)), G, -G @ c, c, spec=spec)


def superellipse(exponents=(4.0, 4.0), semi_axes=(1.0, 1.0), center=None):
    """``|x/a|^p + |y/b|^q < 1`` with one exponent per axis."""
    e = _vec(exponents, "exponents")
    if e.size != 2 or np.any(e <= 1):
        raise InvalidInputError("superellipse needs two exponents, each > 1")
    a = _axes(semi_axes, 2)
    c = _center(center, 2)
    spec = {"type": "superellipse", "exponents": e.tolist(), "semi_axes": a.tolist(), "center": c.tolist()}
    G = np.diag(1.0 / a)
    return _make("superellipse", K.make_params(K.POWER, 2, exps=e), G, -G @ c, c, spec=spec)


def polygon(vertices):
    """Convex polygon from counterclockwise vertices in strictly convex position."""
    V = np.asarray(vertices, dtype=np.float64)
    if V.ndim != 2 or V.shape[1] != 2 or V.shape[0] < 3 or not np.all(np.isfinite(V)):
        raise InvalidInputError("polygon needs at least three 2-D vertices")
    E = np.roll(V, -1, axis=0) - V
    cross = E[:, 0] * np.roll(E, -1, axis=0)[:, 1] - E[:, 1] * np.roll(E, -1, axis=0)[:, 0]
    scale = np.max(np.linalg.norm(E, axis=1)) ** 2
    if np.any(cross <= 1e-12 * scale):
        raise InvalidInputError("polygon vertices must be counterclockwise with no three collinear")
    # turning number one rules out star polygons
    angles = np.arctan2(E[:, 1], E[:, 0])
    turn = np.sum(np.mod(np.diff(np.append(angles, angles[0])), 2 * np.pi))
    if not np.isclose(turn, 2 * np.pi):
        raise InvalidInputError("polygon vertices are not in convex position")
    normals = np.column_stack([E[:, 1], -E[:, 0]])
    normals /= np.linalg.norm(normals, axis=1)[:, None]
    offsets = np.einsum("ij,ij->i", normals, V)
    params = K.make_params(K.POLYTOPE, 2, normals=normals, offsets=offsets)
    spec = {"type": "polygon", "vertices": V.tolist()}
    return _make("polygon", params, np.eye(2), np.zeros(2), V.mean(axis=0),
                 strictly_convex=False, smooth=False, spec=spec)


def implicit_poly(terms, interior_point, fd_step=FD_STEP):
    """Sublevel set ``{g < 0}`` of a convex polynomial.

    ``terms`` is a sequence of ``(coefficient, exponents)`` pairs, e.g.
    ``[(1, (4, 0)), (1, (0, 4)), (-1, (0, 0))]`` for ``x^4 + y^4 - 1``.
    """
    try:
        coeffs = np.array([float(c) for c, _ in terms])
        powers = np.array([[int(e) for e in ex] for _, ex in terms], dtype=np.int64)
    except (TypeError, ValueError) as exc:
        raise InvalidInputError(f"malformed polynomial terms: {exc}") from None
    if powers.ndim != 2 or np.any(powers < 0):
        raise InvalidInputError("exponents must be non-negative integers of equal length")
    x0 = _vec(interior_point, "interior_point")
    n = powers.shape[1]
    if x0.size != n:
        raise InvalidInputError("interior_point dimension does not match the polynomial")
    params = K.make_params(K.POLY, n, coeffs=coeffs, powers=powers)
    spec = {"type": "implicit-poly", "terms": [[c, list(map(int, e))] for c, e in zip(coeffs.tolist(), powers)],
            "interior_point": x0.tolist()}
    body = _make("implicit-poly", params, np.eye(n), np.zeros(n), x0, spec=spec, fd_step=fd_step)
    if not body.defining_function(x0)[0] < 0:
        raise InvalidInputError("interior_point is not inside the polynomial sublevel set")
    return body


def implicit(g: Callable, interior_point, fd_step=FD_STEP):
    """Sublevel set ``{g < 0}`` of a convex callable.

    ``g`` must accept an ``(m, n)`` array of points and return ``m`` values.
    Such bodies always run on the numpy kernel path.
    """
    x0 = _vec(interior_point, "interior_point")
    n = x0.size
    params = K.make_params(K.CALLABLE, n, func=g)
    body = _make("implicit", params, np.eye(n), np.zeros(n), x0, fd_step=fd_step)
    if not body.defining_function(x0)[0] < 0:
        raise InvalidInputError("interior_point is not inside {g < 0}")
    return body


# --------------------------------------------------------------------------
# based bodies


@dataclass(frozen=True, eq=False)
class BasedBody:
    """A body together with an interior basepoint (the gauge's origin)."""

    body: ConvexBody
    basepoint: np.ndarray

    def __post_init__(self):
        x0 = _vec(self.basepoint, "basepoint")
        if x0.size != self.body.dim:
            raise InvalidInputError("basepoint dimension does not match the body")
        object.__setattr__(self, "basepoint", _frozen(x0))
        require_interior(self.body, x0, "basepoint")

    @property
    def dim(self):
        return self.body.dim

    @property
    def canonical_base(self):
        return self.body.canonical(self.basepoint)


def based(body, basepoint=None):
    """Pair ``body`` with ``basepoint`` (default: the body's center)."""
    return BasedBody(body, body.center if basepoint is None else basepoint)


@dataclass(frozen=True)
class RayHit:
    t_hit: float
    point: np.ndarray
    normal: np.ndarray
    tolerance_achieved: float


# --------------------------------------------------------------------------
# vectorised internals shared across modules


def ray_params(body, origins, directions, method=K.METHOD_AUTO, tol=K.DEFAULT_TOL,
               maxiter=K.DEFAULT_MAXITER):
    D = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    S0 = np.broadcast_to(np.atleast_2d(body.canonical(origins)), (D.shape[0], body.shift.size))
    t = K.ray_params(body.params, S0, body.canonical_dirs(D), method, tol, maxiter)
    if not np.all(np.isfinite(t)) or np.any(t <= 0):
        raise NumericalFailure("boundary intersection did not converge")
    return t


def gauges(based_body, V, symmetric=False):
    """Gauges ``M(v)`` (or ``(M(v) + M(-v)) / 2``) for each row of ``V``."""
    body = based_body.body
    out = K.gauges(body.params, based_body.canonical_base, body.canonical_dirs(np.atleast_2d(V)),
                   symmetric)
    if not np.all(np.isfinite(out)):
        raise NumericalFailure("gauge evaluation did not converge")
    return out


def center_gauge(body, points):
    """Gauge of ``points - center`` with the gauge based at the body's center."""
    P = np.atleast_2d(np.asarray(points, dtype=np.float64))
    out = K.gauges(body.params, body.canonical(body.center), body.canonical_dirs(P - body.center))
    if not np.all(np.isfinite(out)):
        raise NumericalFailure("gauge evaluation did not converge")
    return out


def require_interior(body, points, name="point"):
    P = np.atleast_2d(np.asarray(points, dtype=np.float64))
    if P.shape[1] != body.dim:
        raise InvalidInputError(f"{name} dimension does not match the body")
    inside = body.defining_function(P) < -MEMBERSHIP_TOL
    if np.all(inside):
        inside = center_gauge(body, P) <= 1.0 - INTERIOR_MARGIN
    if not np.all(inside):
        raise PreconditionError(f"{name} is not an interior point of the body")


def unit_directions(dim, n):
    """Deterministic direction sample: a uniform angle grid in 2-D, a
    Fibonacci sphere in 3-D."""
    if dim == 2:
        th = 2.0 * np.pi * np.arange(n) / n
        return np.column_stack([np.cos(th), np.sin(th)])
    if dim == 3:
        k = np.arange(n) + 0.5
        z = 1.0 - 2.0 * k / n
        r = np.sqrt(1.0 - z * z)
        phi = np.pi * (1.0 + np.sqrt(5.0)) * k
        return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
    raise InvalidInputError(f"direction sampling supports 2-D and 3-D bodies, got dim={dim}; "
                            "use planar_section first")


def boundary_points(based_body, directions):
    """Boundary points hit from the basepoint along each direction row."""
    D = np.atleast_2d(np.asarray(directions, dtype=np.float64))
    t = ray_params(based_body.body, based_body.basepoint, D)
    return based_body.basepoint + t[:, None] * D


def _canonical_gradients(body, S):
    p = body.params
    if p.kind == K.POWER:
        return p.exps * np.abs(S) ** (p.exps - 1.0) * np.sign(S)
    if p.kind == K.POLYTOPE:
        slack = np.abs(S @ p.normals.T - p.offsets)
        active = slack <= _FACET_TOL * (1.0 + np.abs(p.offsets))
        if np.any(active.sum(axis=1) != 1):
            raise NonSmoothBoundaryError("point is a polygon vertex (or off the boundary)")
        return p.normals[np.argmax(active, axis=1)]
    h = body.fd_step
    n = S.shape[1]
    grads = np.empty_like(S)
    g = numpy_kernels._poly_g if p.kind == K.POLY else None
    for i in range(n):
        e = np.zeros(n)
        e[i] = h
        if g is not None:
            grads[:, i] = (g(p.coeffs, p.powers, S + e) - g(p.coeffs, p.powers, S - e)) / (2 * h)
        else:
            grads[:, i] = (np.asarray(p.func(S + e)) - np.asarray(p.func(S - e))) / (2 * h)
    return grads


def outward_normals(body, points):
    """Unit outward normals at boundary points (rows)."""
    P = np.atleast_2d(np.asarray(points, dtype=np.float64))
    grads = _canonical_gradients(body, body.canonical(P))
    N = grads @ body.to_canonical
    norm = np.linalg.norm(N, axis=1)
    if np.any(norm == 0) or not np.all(np.isfinite(norm)):
        raise NumericalFailure("degenerate boundary normal")
    return N / norm[:, None]


# --------------------------------------------------------------------------
# public operations


def contains(body, point):
    """True iff ``point`` lies in the open body (boundary points are outside)."""
    if not isinstance(body, ConvexBody):
        raise InvalidInputError("expected a ConvexBody")
    x = _vec(point)
    if x.size != body.dim:
        raise InvalidInputError("point dimension does not match the body")
    return bool(body.defining_function(x)[0] < -MEMBERSHIP_TOL)


def boundary_intersect(body, origin, direction, method="auto", tol=K.DEFAULT_TOL,
                       maxiter=K.DEFAULT_MAXITER):
    """Intersect the ray ``origin + t * direction`` (``t > 0``) with the boundary.

    Parameters
    ----------
    body : ConvexBody
    origin : array_like
        Interior starting point.
    direction : array_like
        Nonzero direction; not normalised, so ``t_hit`` is in its units.
    method : {"auto", "bisect"}
        ``"auto"`` uses closed forms where available and bracketed Newton
        otherwise; ``"bisect"`` forces plain bisection.

    Returns
    -------
    RayHit
    """
    o = _vec(origin, "origin")
    d = _vec(direction, "direction")
    if d.size != body.dim:
        raise InvalidInputError("direction dimension does not match the body")
    if not np.any(d != 0):
        raise InvalidInputError("direction must be nonzero")
    require_interior(body, o, "origin")
    if method not in ("auto", "bisect"):
        raise InvalidInputError(f"unknown method {method!r}")
    m = K.METHOD_BISECT if method == "bisect" else K.METHOD_AUTO
    t = float(ray_params(body, o, d, m, tol, maxiter)[0])
    xi = o + t * d
    if body.params.kind == K.POLYTOPE:
        p = body.params
        slack = np.abs(p.normals @ body.canonical(xi) - p.offsets)
        active = slack <= _FACET_TOL * (1.0 + np.abs(p.offsets))
        nrm = p.normals[active].sum(axis=0)
        nrm = nrm / np.linalg.norm(nrm)
    else:
        nrm = outward_normals(body, xi)[0]
    resid = float(abs(body.defining_function(xi)[0]))
    return RayHit(t, xi, nrm, resid)


def gauge(based_body, v):
    """Minkowski gauge ``M(v) = 1/s`` where ``x0 + s*v`` is on the boundary."""
    v = _vec(v, "v")
    if v.size != based_body.dim:
        raise InvalidInputError("vector dimension does not match the body")
    return float(gauges(based_body, v[None, :])[0])


def tangent_hyperplane(body, xi, tol=1e-8):
    """Supporting hyperplane at a boundary point: ``(xi, unit outward normal)``."""
    x = _vec(xi, "xi")
    if x.size != body.dim:
        raise InvalidInputError("xi dimension does not match the body")
    g = body.defining_function(x)[0]
    if abs(g) > tol:
        raise PreconditionError(f"xi is not on the boundary (defining function {g:.3e})")
    return x, outward_normals(body, x)[0]


def planar_section(based_body, u, w):
    """2-D section of the body by the plane ``x0 + a*u + b*w``.

    The returned based body uses in-plane coordinates ``(a, b)`` with its
    basepoint at the origin; its gauge equals the ambient gauge of
    ``a*u + b*w``.
    """
    u = _vec(u, "u")
    w = _vec(w, "w")
    B = np.column_stack([u, w])
    if B.shape[0] != based_body.dim:
        raise InvalidInputError("spanning vectors do not match the body dimension")
    sv = np.linalg.svd(B, compute_uv=False)
    if sv[-1] <= 1e-12 * max(sv[0], 1e-300):
        raise InvalidInputError("spanning vectors are linearly dependent")
    body = based_body.body
    G = body.to_canonical @ B
    sec = ConvexBody(variant=f"section[{body.variant}]", params=body.params,
                     to_canonical=_frozen(G), shift=_frozen(body.canonical(based_body.basepoint)),
                     center=_frozen(np.zeros(2)), strictly_convex=body.strictly_convex,
                     smooth=body.smooth, spec=None, fd_step=body.fd_step)
    return BasedBody(sec, np.zeros(2))


@dataclass(frozen=True)
class StrictConvexityReport:
    min_clearance: float
    flagged: bool
    chords: int
    worst_pair: tuple

    def __bool__(self):
        return not self.flagged


def strict_convexity_probe(body, samples=64, threshold=1e-12):
    """Minimum midpoint clearance ``1 - M(mid - c)`` over sampled boundary chords.

    Chords join boundary samples (seen from the body's center) whose index
    separation is at least ``samples // 32``, which keeps chords macroscopic
    as the sample grows.  A clearance at or below ``threshold`` means a
    boundary segment and sets ``flagged``.
    """
    if samples < 2:
        raise InvalidInputError("strict_convexity_probe needs at least 2 samples")
    bb = based(body)
    X = boundary_points(bb, unit_directions(body.dim, samples))
    i, j = np.triu_indices(samples, k=max(1, samples // 32))
    if i.size == 0:
        i, j = np.array([0]), np.array([1])
    mids = 0.5 * (X[i] + X[j])
    clearance = 1.0 - gauges(bb, mids - body.center)
    k = int(np.argmin(clearance))
    mc = float(clearance[k])
    return StrictConvexityReport(mc, mc <= threshold, int(i.size), (int(i[k]), int(j[k])))
