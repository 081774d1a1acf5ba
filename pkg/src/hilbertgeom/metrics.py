"""Hilbert distance, Finsler norm, directed gauges and the Ohta probe."""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .body import (BasedBody, _vec, boundary_points, center_gauge, gauges, ray_params,
                   require_interior, unit_directions)
from .errors import InvalidInputError, NotStrictlyConvexError, NumericalFailure

MIDPOINT_TOL = 1e-9
#: triples are drawn from the body shrunk by this factor about its center
SAMPLE_SHRINK = 0.9
OHTA_CHUNK = 64


@dataclass(frozen=True)
class ChordFrame:
    """Boundary points ``a, b`` and interior ``x, y`` in the order a, x, y, b."""

    a: np.ndarray
    x: np.ndarray
    y: np.ndarray
    b: np.ndarray

    def cross_ratio(self):
        n = np.linalg.norm
        return n(self.a - self.y) * n(self.x - self.b) / (n(self.a - self.x) * n(self.b - self.y))


def _points(body, **named):
    out = []
    for name, p in named.items():
        p = _vec(p, name)
        if p.size != body.dim:
            raise InvalidInputError(f"{name} has {p.size} coordinates, body has dimension {body.dim}")
        out.append(p)
    return out


def chord_frame(body, x, y):
    x, y = _points(body, x=x, y=y)
    require_interior(body, np.vstack([x, y]))
    if np.array_equal(x, y):
        raise InvalidInputError("chord_frame needs distinct points")
    u = y - x
    tp, tm = ray_params(body, np.vstack([x, x]), np.vstack([u, -u]))
    return ChordFrame(x - tm * u, x, y, x + tp * u)


def _inverse_rays(body, X, U):
    """``(1/t+, 1/t-)`` for the chord through ``X`` along ``U``, in units of ``U``.

    Directions are rescaled by exact powers of two before solving, so tiny
    or huge ``U`` neither underflow nor overflow.
    """
    e = np.frexp(np.max(np.abs(U), axis=1))[1]
    W = np.ldexp(U, -e[:, None])
    t = ray_params(body, np.vstack([X, X]), np.vstack([W, -W]))
    n = len(U)
    return np.ldexp(1.0 / t[:n], e), np.ldexp(1.0 / t[n:], e)


def _distances(body, X, Y):
    """Row-wise Hilbert distances; rows with ``x == y`` give 0."""
    X = np.atleast_2d(X)
    Y = np.atleast_2d(Y)
    out = np.zeros(X.shape[0])
    nz = np.any(X != Y, axis=1)
    if nz.any():
        ip, im = _inverse_rays(body, X[nz], (Y - X)[nz])
        # log((1 + tm) tp / (tm (tp - 1))) in a cancellation-free form
        out[nz] = np.log1p(im) - np.log1p(-ip)
    return out


def hilbert_distance(body, x, y):
    """Hilbert distance ``log(|ay| |xb| / (|ax| |by|))`` between interior points.

    Examples
    --------
    >>> from hilbertgeom.body import disk
    >>> round(hilbert_distance(disk(), [0, 0], [0.5, 0]), 7)
    1.0986123
    """
    x, y = _points(body, x=x, y=y)
    require_interior(body, np.vstack([x, y]))
    if np.array_equal(x, y):
        return 0.0
    return float(_distances(body, x, y)[0])


def finsler_norm(body, x, v):
    """Finsler norm ``(|v|/2) (1/|x p-| + 1/|x p+|)`` at interior ``x``.

    This is the mean of the directed gauges at ``x``.  Since the distance
    is the full log cross ratio, ``d(x, x + h v) = 2 h F(x, v) + O(h^2)``.
    """
    x, v = _points(body, x=x, v=v)
    require_interior(body, x)
    if not np.any(v != 0):
        return 0.0
    ip, im = _inverse_rays(body, x[None, :], v[None, :])
    return float(0.5 * (ip[0] + im[0]))


def directed_gauges(based_body, v):
    """Forward and backward gauges ``(M(v), M(-v))``."""
    v = _vec(v, "v")
    m = gauges(based_body, np.vstack([v, -v]))
    return float(m[0]), float(m[1])


def symmetry_constant(based_body, samples=360):
    """Largest ``max(M+/M-, M-/M+)`` over a deterministic direction grid.

    Doubling ``samples`` nests the 2-D grid, so the estimate never decreases.
    """
    if samples < 8:
        raise InvalidInputError("symmetry_constant needs at least 8 directions")
    D = unit_directions(based_body.dim, samples)
    fwd = gauges(based_body, D)
    bwd = gauges(based_body, -D)
    r = np.maximum(fwd / bwd, bwd / fwd)
    return float(max(1.0, r.max()))


def _midpoints(body, P, Q, iters=80):
    """Hilbert midpoints of the segments ``[P_i, Q_i]`` by bisection on the
    segment parameter, using the chord endpoints cast once per segment."""
    U = Q - P
    ip, im = _inverse_rays(body, P, U)

    def d_from_p(s):
        return np.log1p(s * im) - np.log1p(-s * ip)

    half = 0.5 * d_from_p(np.ones(len(U)))
    lo = np.zeros(len(U))
    hi = np.ones(len(U))
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        below = d_from_p(mid) < half
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    s = 0.5 * (lo + hi)
    return P + s[:, None] * U


def hilbert_midpoint(body, x, y):
    """Point ``m`` on the segment ``[x, y]`` with ``d(x, m) = d(m, y)``.

    Straight segments are Hilbert geodesics in a strictly convex body.
    """
    x, y = _points(body, x=x, y=y)
    require_interior(body, np.vstack([x, y]))
    if np.array_equal(x, y):
        raise InvalidInputError("hilbert_midpoint needs distinct points")
    m = _midpoints(body, x[None, :], y[None, :])[0]
    gap = abs(hilbert_distance(body, x, m) - hilbert_distance(body, m, y))
    if not gap <= MIDPOINT_TOL:
        raise NumericalFailure(f"midpoint bisection stalled (distance gap {gap:.2e})")
    return m


# --------------------------------------------------------------------------
# Ohta comparison constant


@dataclass(frozen=True)
class OhtaEstimate:
    """Smallest constant making the 2-uniform convexity inequality hold on a sample.

    ``C_hat`` covers both populations; ``C_offline`` comes from triples with
    ``x`` off the geodesic line and ``C_collinear`` from the forced
    ``x = eta(0)`` configurations, whose exact value is 1.
    """

    C_hat: float
    witness: tuple
    samples: int
    C_offline: float
    C_collinear: float
    offline_samples: int
    rejected: int


def ohta_ratio(d_x0, d_x1, d_xm, d_01):
    """Smallest ``C`` with ``d_xm^2 <= (d_x0^2 + d_x1^2)/2 - d_01^2 / (4 C^2)``.

    Infinite when the right-hand side cannot dominate for any ``C``.
    """
    slack = 0.5 * d_x0 ** 2 + 0.5 * d_x1 ** 2 - d_xm ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(slack > 0, d_01 / (2.0 * np.sqrt(np.maximum(slack, 1e-300))), np.inf)
    return np.where(d_01 == 0, 1.0, c)


def _bounding_box(body):
    box = body._cache.get("bbox")
    if box is None:
        n = 720 if body.dim == 2 else 2000
        X = boundary_points(BasedBody(body, body.center), unit_directions(body.dim, n))
        lo, hi = X.min(axis=0), X.max(axis=0)
        pad = 0.01 * (hi - lo)
        diam = float(np.max(np.linalg.norm(X[:, None, :] - X[None, ::4, :], axis=-1)))
        box = body._cache["bbox"] = (lo - pad, hi + pad, diam)
    return box


def sample_interior(body, n, rng, shrink=SAMPLE_SHRINK):
    """``n`` points uniform in the body shrunk by ``shrink`` about its center."""
    lo, hi, _ = _bounding_box(body)
    out = []
    have = 0
    while have < n:
        C = rng.uniform(lo, hi, size=(max(16, 2 * (n - have)), body.dim))
        C = C[center_gauge(body, C) < shrink]
        out.append(C)
        have += len(C)
    return np.vstack(out)[:n]


def _ohta_chunk(body, seed, k, count, min_offset):
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k,)))
    P = sample_interior(body, 3 * count, rng)
    X, A, B = P[:count], P[count:2 * count], P[2 * count:]
    U = B - A
    rel = X - A
    cross = np.abs(rel[:, 0] * U[:, 1] - rel[:, 1] * U[:, 0]) if body.dim == 2 else \
        np.linalg.norm(np.cross(rel, U), axis=1)
    offline = cross / np.linalg.norm(U, axis=1) >= min_offset
    M = _midpoints(body, A, B)
    d01 = _distances(body, A, B)
    # collinear population: x = eta(0)
    c_col = ohta_ratio(0.0, d01, _distances(body, A, M), d01)
    Xo, Ao, Bo, Mo = X[offline], A[offline], B[offline], M[offline]
    c_off = ohta_ratio(_distances(body, Xo, Ao), _distances(body, Xo, Bo),
                       _distances(body, Xo, Mo), d01[offline])
    best_off = (-np.inf, None)
    if c_off.size:
        i = int(np.argmax(c_off))
        best_off = (float(c_off[i]), (Xo[i], Ao[i], Bo[i]))
    i = int(np.argmax(c_col))
    best_col = (float(c_col[i]), (A[i], A[i], B[i]))
    return best_off, best_col, int(offline.sum()), int((~offline).sum())


def ohta_constant(body, samples=2000, seed=0, workers=1):
    """Estimate the 2-uniform convexity constant of the Hilbert metric.

    Triples ``(x, eta(0), eta(1))`` are drawn in fixed-size chunks, each from
    its own ``SeedSequence`` substream, so the result does not depend on
    ``workers``.

    Parameters
    ----------
    body : ConvexBody
        Strictly convex body.
    samples : int
        Number of sampled triples.
    seed : int
    workers : int
        Threads used to evaluate chunks.

    Returns
    -------
    OhtaEstimate
    """
    if not body.strictly_convex:
        raise NotStrictlyConvexError("ohta_constant needs a strictly convex body")
    if samples < 1:
        raise InvalidInputError("samples must be positive")
    _, _, diam = _bounding_box(body)
    min_offset = 1e-6 * diam
    sizes = [min(OHTA_CHUNK, samples - s) for s in range(0, samples, OHTA_CHUNK)]
    jobs = [(body, seed, k, c, min_offset) for k, c in enumerate(sizes)]
    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            results = list(ex.map(lambda a: _ohta_chunk(*a), jobs))
    else:
        results = [_ohta_chunk(*a) for a in jobs]
    off = max((r[0] for r in results), key=lambda r: r[0])
    col = max((r[1] for r in results), key=lambda r: r[0])
    n_off = sum(r[2] for r in results)
    rejected = sum(r[3] for r in results)
    # the collinear configuration gives exactly 1 algebraically
    c_hat = max(1.0, off[0], col[0])
    witness = off[1] if off[0] >= max(1.0, col[0]) else col[1]
    return OhtaEstimate(c_hat, tuple(np.asarray(w) for w in witness), samples,
                        off[0], col[0], n_off, rejected)
