"""Modulus of convexity, exponent fitting, proof constants and verification.

The modulus of a based planar body ``(body, x0)`` is estimated over pairs
of unit-gauge points.  Unit points are parametrised by the direction angle
``theta`` seen from ``x0``; for the symmetrised (Finsler) gauge the unit
ball is the symmetrisation of the body about ``x0``.
"""
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from . import _kernels as K
from .body import (BasedBody, based, boundary_points, gauges, outward_normals,
                   strict_convexity_probe, unit_directions)
from .errors import (InvalidInputError, NonSmoothBoundaryError, NotStrictlyConvexError,
                     NumericalFailure)
from .metrics import symmetry_constant
from .normalization import AffineMap, apply_map, build_normalization

DEFAULT_EPS_GRID = np.geomspace(0.05, 1.9, 24)
FIT_WINDOW = (0.05, 0.5)
DELTA_FLOOR = 1e-12
#: relative slack when testing ``max(M(x-y), M(y-x)) >= eps``
ADMISSIBLE_RTOL = 1e-12
BOUNDARY_SAMPLES = 256
VERIFY_SLACK = 1e-9

_BISECT_ITERS = 64


# --------------------------------------------------------------------------
# unit-sphere grid


class _UnitGrid:
    """Unit-gauge points on an angle grid plus the continuous parametrisation."""

    def __init__(self, based_body, samples, symmetric=False):
        if based_body.dim != 2:
            raise InvalidInputError("modulus estimation is planar; reduce with planar_section first")
        self.based = based_body
        self.symmetric = symmetric
        self.samples = samples
        self.theta = 2.0 * np.pi * np.arange(samples) / samples
        self.V = self.unit_points(self.theta)
        self._tables = None

    def gauge(self, W):
        return gauges(self.based, W, self.symmetric)

    def unit_points(self, theta):
        D = np.column_stack([np.cos(theta), np.sin(theta)])
        return D / self.gauge(D)[:, None]

    def admissibility(self, X, Y):
        W = X - Y
        return np.maximum(self.gauge(W), self.gauge(-W))

    def deficit(self, X, Y):
        return 1.0 - 0.5 * self.gauge(X + Y)

    def tables(self):
        if self._tables is None:
            body = self.based.body
            A, Dl = K.pair_tables(body.params, self.based.canonical_base,
                                  body.canonical_dirs(self.V), self.symmetric)
            if not (np.all(np.isfinite(A)) and np.all(np.isfinite(Dl))):
                raise NumericalFailure("pair table evaluation did not converge")
            self._tables = (A, Dl)
        return self._tables


@dataclass(frozen=True)
class ModulusPoint:
    """One modulus estimate with its minimising pair (relative to ``x0``).

    ``delta`` is ``nan`` and ``defined`` false when no admissible pair exists.
    """

    eps: float
    delta: float
    defined: bool
    x: Optional[np.ndarray] = None
    y: Optional[np.ndarray] = None
    theta_x: float = np.nan
    theta_y: float = np.nan
    source: str = "grid"
    flagged: bool = False


def _threshold(eps):
    return eps * (1.0 - ADMISSIBLE_RTOL)


def _crossings(grid, rows, lo_th, hi_th, eps):
    """Bisect the angle of ``y`` between an inadmissible (``lo_th``) and an
    admissible (``hi_th``) bracket; returns admissible end points."""
    X = grid.V[rows]
    # exact threshold here: slack near eps = 2 would move y by sqrt(slack)
    thr = eps
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo_th + hi_th)
        ok = grid.admissibility(X, grid.unit_points(mid)) >= thr
        hi_th = np.where(ok, mid, hi_th)
        lo_th = np.where(ok, lo_th, mid)
    Y = grid.unit_points(hi_th)
    ok = grid.admissibility(X, Y) >= thr
    return Y, hi_th, grid.deficit(X, Y), ok


def _modulus_from_grid(grid, eps):
    if not 0.0 <= eps <= 2.0:
        raise InvalidInputError(f"eps must lie in [0, 2], got {eps}")
    A, Dl = grid.tables()
    N = grid.samples
    adm = A >= _threshold(eps)
    vals = np.where(adm, Dl, np.inf)
    k = int(np.argmin(vals))
    best = ModulusPoint(eps, np.inf, False)
    if np.isfinite(vals.flat[k]):
        i, j = divmod(k, N)
        best = ModulusPoint(eps, float(vals.flat[k]), True, grid.V[i], grid.V[j],
                            grid.theta[i], grid.theta[j], "grid")
    nxt = np.roll(adm, -1, axis=1)
    rows, cols = np.nonzero(adm != nxt)
    if rows.size:
        step = 2.0 * np.pi / N
        th0 = grid.theta[cols]
        th1 = th0 + step
        first_ok = adm[rows, cols]
        lo = np.where(first_ok, th1, th0)
        hi = np.where(first_ok, th0, th1)
        Y, th_y, dvals, ok = _crossings(grid, rows, lo, hi, eps)
        dvals = np.where(ok, dvals, np.inf)
        c = int(np.argmin(dvals))
        if dvals[c] < best.delta:
            best = ModulusPoint(eps, float(dvals[c]), True, grid.V[rows[c]], Y[c],
                                grid.theta[rows[c]], float(th_y[c]), "crossing")
    if not best.defined:
        return ModulusPoint(eps, np.nan, False)
    return ModulusPoint(best.eps, float(np.clip(best.delta, 0.0, 1.0)), True, best.x, best.y,
                        best.theta_x, best.theta_y, best.source)


def _check_modulus_inputs(based_body, samples):
    if not isinstance(based_body, BasedBody):
        raise InvalidInputError("expected a BasedBody")
    if samples < 16:
        raise InvalidInputError("modulus estimation needs at least 16 boundary samples")
    if not based_body.body.strictly_convex:
        raise NotStrictlyConvexError("modulus estimation needs a strictly convex body")


def modulus_bruteforce(based_body, eps, samples=512, symmetric=False):
    """Exhaustive modulus estimate over an ``samples``-point unit-gauge grid.

    Every grid pair ``(x, y)`` with ``max(M(x-y), M(y-x)) >= eps`` is
    evaluated, and wherever admissibility switches between neighbouring
    grid points along a row the switching point is located by bisection, so
    the constraint is met exactly rather than to grid resolution.

    Parameters
    ----------
    based_body : BasedBody
        Planar, strictly convex.
    eps : float
        Chord threshold in ``[0, 2]``.
    samples : int
        Grid size, at least 16.
    symmetric : bool
        Use the symmetrised gauge ``(M(v) + M(-v)) / 2``.

    Returns
    -------
    ModulusPoint
    """
    _check_modulus_inputs(based_body, samples)
    return _modulus_from_grid(_UnitGrid(based_body, samples, symmetric), float(eps))


def _refine(grid, seed):
    """Local derivative-free search over the angle of ``x``, with ``y`` kept
    on the constraint boundary on the seed's side."""
    eps = seed.eps
    u0 = float(np.angle(np.exp(1j * (seed.theta_y - seed.theta_x))))
    if eps == 0.0 or u0 == 0.0:
        return seed
    sgn = 1.0 if u0 > 0 else -1.0
    thr = eps
    probe = np.linspace(0.0, np.pi, 257)[1:]

    def solve(tx):
        X = grid.unit_points(np.array([tx]))
        hi = abs(u0)
        if grid.admissibility(X, grid.unit_points(np.array([tx + sgn * hi])))[0] < thr:
            Ys = grid.unit_points(tx + sgn * probe)
            ok = np.nonzero(grid.admissibility(np.repeat(X, len(probe), 0), Ys) >= thr)[0]
            if ok.size == 0:
                return np.inf, None, None
            hi = probe[ok[0]]
        lo_u, hi_u = 0.0, hi
        for _ in range(_BISECT_ITERS):
            mid = 0.5 * (lo_u + hi_u)
            if grid.admissibility(X, grid.unit_points(np.array([tx + sgn * mid])))[0] >= thr:
                hi_u = mid
            else:
                lo_u = mid
        ty = tx + sgn * hi_u
        Y = grid.unit_points(np.array([ty]))
        return float(grid.deficit(X, Y)[0]), X[0], (Y[0], ty)

    h = 2.0 * np.pi / grid.samples
    try:
        # infeasible angles get a finite penalty above any deficit
        res = minimize_scalar(lambda t: min(solve(t)[0], 10.0),
                              bounds=(seed.theta_x - 4 * h, seed.theta_x + 4 * h),
                              method="bounded", options={"xatol": 1e-12})
        val, X, Yt = solve(float(res.x))
    except NumericalFailure:
        val = np.inf
    if not np.isfinite(val) or val > seed.delta:
        return ModulusPoint(seed.eps, seed.delta, seed.defined, seed.x, seed.y, seed.theta_x,
                            seed.theta_y, seed.source, flagged=not np.isfinite(val))
    return ModulusPoint(eps, float(max(val, 0.0)), True, X, Yt[0], float(res.x), float(Yt[1]), "refined")


def modulus_refined(based_body, eps, samples=512, symmetric=False):
    """Brute-force estimate improved by a local search seeded at its minimiser.

    Never exceeds the brute-force value at the same ``samples``; falls back
    to it (``flagged``) when the search cannot stay feasible.
    """
    _check_modulus_inputs(based_body, samples)
    grid = _UnitGrid(based_body, samples, symmetric)
    seed = _modulus_from_grid(grid, float(eps))
    return _refine(grid, seed) if seed.defined else seed


@dataclass(frozen=True)
class ModulusCurve:
    eps: np.ndarray
    delta: np.ndarray
    method: str
    samples: int
    seed: Optional[int] = None
    points: tuple = field(default=(), repr=False)


def modulus_curve(based_body, eps_grid=None, samples=512, method="bruteforce", symmetric=False,
                  workers=1):
    """Modulus estimates on an increasing ``eps`` grid.

    The pair tables are computed once for the whole grid.  A pair admissible
    for some ``eps`` is admissible for every smaller one, so each value is
    replaced by the minimum over itself and all larger-``eps`` estimates;
    this keeps the curve nondecreasing without ever raising a value.
    """
    _check_modulus_inputs(based_body, samples)
    if method not in ("bruteforce", "refined"):
        raise InvalidInputError(f"unknown modulus method {method!r}")
    eps = np.asarray(DEFAULT_EPS_GRID if eps_grid is None else eps_grid, dtype=np.float64)
    if eps.ndim != 1 or eps.size == 0 or np.any(np.diff(eps) <= 0):
        raise InvalidInputError("eps grid must be strictly increasing")
    grid = _UnitGrid(based_body, samples, symmetric)
    grid.tables()

    def one(e):
        p = _modulus_from_grid(grid, float(e))
        return _refine(grid, p) if method == "refined" and p.defined else p

    if workers > 1:
        with ThreadPoolExecutor(workers) as ex:
            pts = list(ex.map(one, eps))
    else:
        pts = [one(e) for e in eps]
    delta = np.array([p.delta for p in pts])
    for k in range(len(pts) - 2, -1, -1):
        if pts[k].defined and pts[k + 1].defined and delta[k + 1] < delta[k]:
            delta[k] = delta[k + 1]
            q = pts[k + 1]
            pts[k] = ModulusPoint(pts[k].eps, q.delta, True, q.x, q.y, q.theta_x, q.theta_y,
                                  q.source, q.flagged)
    return ModulusCurve(eps, delta, method, samples, None, tuple(pts))


# --------------------------------------------------------------------------
# exponent fitting


@dataclass(frozen=True)
class BetaFit:
    """Power law ``delta ~ C * eps**beta`` fitted in log-log coordinates."""

    beta: float
    C: float
    residual: float
    window: tuple
    n_points: int
    max_abs_residual: float


def _loglog_fit(x, y):
    lx, ly = np.log(x), np.log(y)
    beta, logc = np.polyfit(lx, ly, 1)
    r = ly - (beta * lx + logc)
    return float(beta), float(np.exp(logc)), float(np.sqrt(np.mean(r * r))), float(np.max(np.abs(r)))


def fit_beta(curve, window=FIT_WINDOW):
    """Least-squares fit of ``log delta`` against ``log eps`` inside ``window``.

    ``curve`` is a :class:`ModulusCurve` or an ``(eps, delta)`` pair.
    Values at or below ``DELTA_FLOOR`` (and undefined ones) are dropped.
    """
    if isinstance(curve, ModulusCurve):
        eps, delta = curve.eps, curve.delta
    else:
        eps, delta = (np.asarray(a, dtype=np.float64) for a in curve)
    lo, hi = window
    keep = (eps >= lo) & (eps <= hi) & np.isfinite(delta) & (delta > DELTA_FLOOR)
    if keep.sum() < 4:
        raise InvalidInputError(f"need at least 4 points above the floor in {window}, got {int(keep.sum())}")
    beta, C, rms, mx = _loglog_fit(eps[keep], delta[keep])
    return BetaFit(beta, C, rms, (float(lo), float(hi)), int(keep.sum()), mx)


def conjugate_exponent(q):
    """Hölder conjugate ``q / (q - 1)`` of ``q > 1``; an involution."""
    q = float(q)
    if not q > 1.0:
        raise InvalidInputError(f"conjugate exponent needs q > 1, got {q}")
    return q / (q - 1.0)


def dual_index(alpha):
    """Convexity exponent ``beta`` dual to boundary regularity ``alpha in (1, 2]``."""
    alpha = float(alpha)
    if not 1.0 < alpha <= 2.0:
        raise InvalidInputError(f"alpha must lie in (1, 2], got {alpha}")
    return conjugate_exponent(alpha)


# --------------------------------------------------------------------------
# boundary beta-convexity


@dataclass(frozen=True)
class BoundaryBetaFit(BetaFit):
    """Worst-case local exponent of ``d(x, T_y) ~ C_K |x - y|**beta``.

    ``chord`` and ``dist_tangent`` hold every sampled pair; ``local_beta``
    the per-anchor exponents and ``witness`` the anchor attaining the worst one.
    """

    chord: np.ndarray = field(default=None, repr=False)
    dist_tangent: np.ndarray = field(default=None, repr=False)
    tangential: np.ndarray = field(default=None, repr=False)
    local_beta: np.ndarray = field(default=None, repr=False)
    witness: Optional[np.ndarray] = None


def _points_at_chord(bb, phi_y, Y, r, sgn):
    """Boundary points ``x`` at Euclidean distance ``r`` from anchors ``Y``,
    walking from each anchor's angle in direction ``sgn``."""
    def at(phi):
        return boundary_points(bb, np.column_stack([np.cos(phi), np.sin(phi)]))

    R = np.max(np.linalg.norm(at(np.linspace(0, 2 * np.pi, 64, endpoint=False)) - bb.basepoint, axis=1))
    hi = np.minimum(r / R, np.pi)
    for _ in range(60):
        short = np.linalg.norm(at(phi_y + sgn * hi) - Y, axis=1) < r
        if not short.any() or np.all(hi[short] >= np.pi):
            break
        hi = np.where(short, np.minimum(2 * hi, np.pi), hi)
    lo = np.zeros_like(hi)
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        short = np.linalg.norm(at(phi_y + sgn * mid) - Y, axis=1) < r
        lo = np.where(short, mid, lo)
        hi = np.where(short, hi, mid)
    return at(phi_y + sgn * 0.5 * (lo + hi))


def boundary_beta_convexity(body, samples=BOUNDARY_SAMPLES, window=None, scales=12):
    """Estimate the boundary convexity exponent and its constant.

    For each of ``samples`` anchors ``y`` on the boundary, points ``x`` at
    chord lengths ``r`` (log-spaced in ``window``, on both sides) are found
    and ``log d(x, T_y)`` is regressed on ``log r``.  The reported exponent is
    the largest local slope; ``C`` is the largest constant with
    ``d(x, T_y) >= C * r**beta`` on every sampled pair.

    ``window`` defaults to ``(0.005, 0.1)`` times the body's diameter.
    """
    if body.dim != 2:
        raise InvalidInputError("boundary exponent estimation is planar; use planar_section first")
    if not body.smooth:
        raise NonSmoothBoundaryError("boundary exponent needs a C^1 boundary")
    bb = based(body)
    phi = 2.0 * np.pi * np.arange(samples) / samples
    Y = boundary_points(bb, np.column_stack([np.cos(phi), np.sin(phi)]))
    Nrm = outward_normals(body, Y)
    if window is None:
        diam = np.max(np.linalg.norm(Y[:, None, :] - Y[None, :, :], axis=-1))
        window = (0.005 * diam, 0.1 * diam)
    rs = np.geomspace(window[0], window[1], scales)
    A = np.repeat(np.arange(samples), scales)
    Rr = np.tile(rs, samples)
    chords, dists, tang, anchor = [], [], [], []
    for sgn in (1.0, -1.0):
        X = _points_at_chord(bb, phi[A], Y[A], Rr, sgn)
        W = X - Y[A]
        nd = np.abs(np.sum(W * Nrm[A], axis=1))
        chords.append(np.linalg.norm(W, axis=1))
        dists.append(nd)
        tang.append(np.sqrt(np.maximum(np.sum(W * W, axis=1) - nd * nd, 0.0)))
        anchor.append(A)
    chord, dist, tan_, anchor = (np.concatenate(a) for a in (chords, dists, tang, anchor))
    if np.any(dist <= 0):
        raise NumericalFailure("boundary chord touches its tangent line; body not strictly convex")
    local = np.empty(samples)
    fits = []
    for k in range(samples):
        sel = anchor == k
        f = _loglog_fit(chord[sel], dist[sel])
        local[k] = f[0]
        fits.append(f)
    k = int(np.argmax(local))
    beta = float(local[k])
    C_K = float(np.min(dist / chord ** beta))
    return BoundaryBetaFit(beta, C_K, fits[k][2], (float(window[0]), float(window[1])),
                           int(chord.size), fits[k][3], chord, dist, tan_, local, Y[k])


# --------------------------------------------------------------------------
# proof constants


def norm_equivalence_constant(based_body, samples=BOUNDARY_SAMPLES):
    """Largest ``c`` with ``c * M(v) <= |v|``: the nearest unit-gauge point."""
    if samples < 8:
        raise InvalidInputError("norm_equivalence_constant needs at least 8 samples")
    X = boundary_points(based_body, unit_directions(based_body.dim, samples))
    return float(np.min(np.linalg.norm(X - based_body.basepoint, axis=1)))


@dataclass(frozen=True)
class TheoremConstants:
    """Constants of the three-case lower bound ``delta(eps) >= C eps**beta``.

    ``C1`` uses the half-chord bound ``t0 >= c1 eps cos(theta) / 2``;
    ``C1_printed`` keeps the factor ``sqrt(2)/2`` that drops the ``1/2``.
    ``m`` is the clipped Case-3 slope and ``m_raw`` the measured one.
    """

    beta: float
    C_K: float
    h: float
    c1: float
    c2: float
    m: float
    m_raw: float
    m_flagged: bool
    C0: float
    C1: float
    C2: float
    C: float
    C1_printed: float
    witnesses: dict


def _frame_quantities(based_body, samples):
    X = boundary_points(based_body, unit_directions(2, samples))
    hs = np.empty(samples)
    slopes = np.empty(samples)
    for k, xi in enumerate(X):
        fr = build_normalization(based_body, xi)
        hs[k] = fr.h
        w = boundary_points(fr.based, np.array([[1.0, 0.0], [-1.0, 0.0]]))[:, 0]
        slopes[k] = fr.h / np.max(np.abs(w))
    return X, hs, slopes


def theorem_constants(based_body, samples=BOUNDARY_SAMPLES):
    """All constants of the lower-bound argument for a based planar body.

    ``beta`` and ``C_K`` come from :func:`boundary_beta_convexity`, ``h`` is
    the largest basepoint-to-tangent offset over normalising frames, and
    ``c1 = c2`` is :func:`norm_equivalence_constant`.  The Case-3 slope is
    measured as ``h / w``, the secant from the normalised ``xi = (0, -h)``
    to the body's boundary at the basepoint's height; values below 2 are
    flagged and clipped to 2.
    """
    if based_body.dim != 2:
        raise InvalidInputError("theorem constants are planar; use planar_section first")
    if not based_body.body.strictly_convex:
        raise NotStrictlyConvexError("theorem constants need a strictly convex body")
    bfit = boundary_beta_convexity(based_body.body, samples)
    beta, C_K = bfit.beta, bfit.C
    X, hs, slopes = _frame_quantities(based_body, samples)
    kh = int(np.argmax(hs))
    h = float(hs[kh])
    c = norm_equivalence_constant(based_body, samples)
    m_raw = float(np.min(slopes))
    m = max(m_raw, 2.0)
    C0 = 2.0 ** -beta
    C1 = C_K * (c * np.sqrt(2.0) / 4.0) ** beta / h
    C1p = C_K * (c * np.sqrt(2.0) / 2.0) ** beta / h
    C2 = c / (h * np.sqrt(8.0))
    witnesses = {"beta": bfit.witness, "h": X[kh], "m": X[int(np.argmin(slopes))]}
    return TheoremConstants(beta, C_K, h, c, c, m, m_raw, m_raw < 2.0, C0, C1, C2,
                            min(C0, C1, C2), C1p, witnesses)


# --------------------------------------------------------------------------
# verification


@dataclass(frozen=True)
class VerificationReport:
    eps: np.ndarray
    delta: np.ndarray
    bound: np.ndarray
    margin: np.ndarray
    passed: bool
    skipped: tuple
    beta: float
    C: float
    details: dict = field(default_factory=dict)


def _guard(based_body, probe_samples):
    if based_body.dim != 2:
        raise InvalidInputError("verification is planar; use planar_section first")
    body = based_body.body
    rep = strict_convexity_probe(body, probe_samples)
    if not body.strictly_convex or rep.flagged:
        raise NotStrictlyConvexError(
            f"body failed the strict-convexity guard (min midpoint clearance {rep.min_clearance:.3e})")


def _compare(curve, beta, C, details):
    defined = np.isfinite(curve.delta)
    bound = C * curve.eps ** beta
    margin = np.where(defined, curve.delta - bound, np.nan)
    skipped = tuple(float(e) for e in curve.eps[~defined])
    passed = bool(defined.any() and np.all(margin[defined] >= -VERIFY_SLACK))
    return VerificationReport(curve.eps, curve.delta, bound, margin, passed, skipped, beta, C, details)


def verify_theorem(based_body, eps_grid=None, samples=512, constants=None, method="bruteforce",
                   probe_samples=64, workers=1):
    """Check ``delta(eps) >= C eps**beta`` on an ``eps`` grid.

    Undefined modulus values are skipped and listed in ``skipped``; the
    report passes when every remaining margin is at least ``-1e-9``.
    """
    _guard(based_body, probe_samples)
    tc = constants if constants is not None else theorem_constants(based_body)
    curve = modulus_curve(based_body, eps_grid, samples, method, workers=workers)
    return _compare(curve, tc.beta, tc.C, {"constants": tc})


def reflect(based_body):
    """Point reflection of the body through its basepoint."""
    x0 = based_body.basepoint
    return apply_map(AffineMap(-np.eye(based_body.dim), 2.0 * x0), based_body)


def verify_corollary(based_body, eps_grid=None, samples=512, method="bruteforce", probe_samples=64,
                     symmetry_samples=720, workers=1):
    """Check the symmetrised-gauge bound ``((C+ + C-/A**beta)/2) eps**beta``.

    ``C+`` and ``C-`` are the theorem constants of the body and of its
    reflection through the basepoint, ``A`` the symmetry constant, and the
    modulus is that of the Finsler gauge ``(M(v) + M(-v)) / 2``.
    """
    _guard(based_body, probe_samples)
    plus = theorem_constants(based_body)
    minus = theorem_constants(reflect(based_body))
    A = symmetry_constant(based_body, symmetry_samples)
    beta = max(plus.beta, minus.beta)
    C = 0.5 * (plus.C + minus.C / A ** beta)
    curve = modulus_curve(based_body, eps_grid, samples, method, symmetric=True, workers=workers)
    return _compare(curve, beta, C, {"C_plus": plus.C, "C_minus": minus.C, "A": A,
                                     "constants_plus": plus, "constants_minus": minus})
