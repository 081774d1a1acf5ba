"""Vectorised numpy implementations of the hot kernels.

These are the reference path and the fallback when numba is disabled.
All functions take canonical-coordinate arrays and return ``nan`` where a
solver fails; the callers turn ``nan`` into :class:`NumericalFailure`.
"""
import numpy as np

from .common import CALLABLE, METHOD_BISECT, POLY, POLYTOPE, POWER

_PAIR_CHUNK = 1 << 16


def _power_g(exps, U):
    return np.sum(np.abs(U) ** exps, axis=-1) - 1.0


def _power_dg(exps, U, D):
    A = np.abs(U)
    return np.sum(exps * A ** (exps - 1.0) * np.sign(U) * D, axis=-1)


def _poly_g(coeffs, powers, U):
    mono = np.prod(U[:, None, :] ** powers[None, :, :], axis=-1)
    return mono @ coeffs


def _poly_dg(coeffs, powers, U, D):
    E = powers[None, :, :]
    Ue = U[:, None, :] ** E
    lower = np.where(E > 0, U[:, None, :] ** np.maximum(E - 1, 0), 0.0) * E
    total = np.zeros(U.shape[0])
    for i in range(U.shape[1]):
        others = np.prod(np.delete(Ue, i, axis=-1), axis=-1)
        total += (lower[:, :, i] * others) @ coeffs * D[:, i]
    return total


def _solve(g, dg, S0, D, hi, method, tol, maxiter):
    """Bracketed Newton (or plain bisection) for the first root of a convex
    ray function on ``(0, hi]``; ``g(0) < 0 <= g(hi)`` is assumed."""
    m = S0.shape[0]
    lo = np.zeros(m)
    t = hi.copy()
    out = np.full(m, np.nan)
    active = np.isfinite(hi)
    idx = np.nonzero(active)[0]
    for _ in range(maxiter):
        if idx.size == 0:
            break
        tt = t[idx]
        U = S0[idx] + tt[:, None] * D[idx]
        gv = g(U)
        zero = gv == 0.0
        pos = gv > 0.0
        hi[idx[pos]] = tt[pos]
        lo[idx[~pos & ~zero]] = tt[~pos & ~zero]
        mid = 0.5 * (lo[idx] + hi[idx])
        if method == METHOD_BISECT or dg is None:
            tn = mid
        else:
            dv = dg(U, D[idx])
            with np.errstate(divide="ignore", invalid="ignore"):
                tn = tt - gv / dv
            small = np.abs(tn - tt) <= 0.5 * tol * np.maximum(1.0, tt)
            bad = ~((tn > lo[idx]) & (tn < hi[idx])) & ~small
            tn = np.where(bad, mid, tn)
        done = zero | (np.abs(tn - tt) <= 0.5 * tol * np.maximum(1.0, tt))
        out[idx[done]] = np.where(zero[done], tt[done], tn[done])
        t[idx] = tn
        idx = idx[~done]
    return out


def _bracket_by_doubling(g, S0, D):
    m = S0.shape[0]
    hi = 1.0 / np.maximum(np.linalg.norm(D, axis=1), 1e-300)
    idx = np.arange(m)
    for _ in range(80):
        if idx.size == 0:
            return hi
        gv = g(S0[idx] + hi[idx, None] * D[idx])
        idx = idx[gv <= 0.0]
        hi[idx] *= 2.0
    hi[idx] = np.nan
    return hi


def ray_params(params, S0, D, method=0, tol=1e-12, maxiter=200):
    """Ray parameter ``t > 0`` with ``S0 + t*D`` on the boundary, row-wise."""
    S0 = np.atleast_2d(np.asarray(S0, dtype=np.float64))
    D = np.atleast_2d(np.asarray(D, dtype=np.float64))
    if S0.shape[0] == 1 and D.shape[0] > 1:
        S0 = np.broadcast_to(S0, D.shape)
    kind = params.kind
    if kind == POWER:
        return _ray_power(params.exps, S0, D, method, tol, maxiter)
    if kind == POLYTOPE:
        return _ray_polytope(params.normals, params.offsets, S0, D)
    if kind == POLY:
        c, E = params.coeffs, params.powers
        g = lambda U: _poly_g(c, E, U)
        dg = lambda U, Dd: _poly_dg(c, E, U, Dd)
        return _solve(g, dg, S0, D, _bracket_by_doubling(g, S0, D), method, tol, maxiter)
    if kind == CALLABLE:
        f = params.func
        g = lambda U: np.asarray(f(U), dtype=np.float64)
        return _solve(g, None, S0, D, _bracket_by_doubling(g, S0, D), METHOD_BISECT, tol, maxiter)
    raise ValueError(f"unknown kernel kind {kind}")


def _ray_power(exps, S0, D, method, tol, maxiter):
    m = S0.shape[0]
    out = np.full(m, np.nan)
    todo = np.ones(m, dtype=bool)
    if method != METHOD_BISECT:
        if np.all(exps == 2.0):
            a = np.einsum("ij,ij->i", D, D)
            b = np.einsum("ij,ij->i", S0, D)
            c = np.einsum("ij,ij->i", S0, S0) - 1.0
            disc = np.sqrt(np.maximum(b * b - a * c, 0.0))
            with np.errstate(divide="ignore", invalid="ignore"):
                t = np.where(b > 0.0, -c / (b + disc), (disc - b) / a)
            return t
        if np.all(exps == exps[0]):
            centered = np.all(S0 == 0.0, axis=1)
            p = exps[0]
            with np.errstate(divide="ignore"):
                out[centered] = 1.0 / np.sum(np.abs(D[centered]) ** p, axis=1) ** (1.0 / p)
            todo = ~centered
    if todo.any():
        S, Dd = S0[todo], D[todo]
        hi = (1.0 + np.max(np.abs(S), axis=1)) / np.max(np.abs(Dd), axis=1)
        g = lambda U: _power_g(exps, U)
        dg = lambda U, Dv: _power_dg(exps, U, Dv)
        out[todo] = _solve(g, dg, S, Dd, hi, method, tol, maxiter)
    return out


def _ray_polytope(normals, offsets, S0, D):
    num = offsets[None, :] - S0 @ normals.T
    den = D @ normals.T
    with np.errstate(divide="ignore", invalid="ignore"):
        cand = np.where(den > 0.0, num / den, np.inf)
    t = cand.min(axis=1)
    t[~np.isfinite(t)] = np.nan
    return t


def gauges(params, s0, V, sym=False, tol=1e-12, maxiter=200):
    """Gauge ``1/t`` of each row of ``V`` seen from canonical point ``s0``.

    With ``sym`` the symmetrised gauge ``(M(v) + M(-v)) / 2`` is returned.
    """
    V = np.atleast_2d(np.asarray(V, dtype=np.float64))
    s0 = np.asarray(s0, dtype=np.float64)
    out = np.zeros(V.shape[0])
    nz = np.any(V != 0.0, axis=1)
    if not nz.any():
        return out
    # exact power-of-two rescale keeps tiny and huge vectors in range
    e = np.frexp(np.max(np.abs(V[nz]), axis=1))[1]
    W = np.ldexp(V[nz], -e[:, None])
    S0 = np.broadcast_to(s0, W.shape)
    m = 1.0 / ray_params(params, S0, W, 0, tol, maxiter)
    if sym:
        m = 0.5 * (m + 1.0 / ray_params(params, S0, -W, 0, tol, maxiter))
    out[nz] = np.ldexp(m, e)
    return out


def pair_tables(params, s0, V, sym=False, tol=1e-12, maxiter=200):
    """Admissibility and midpoint-deficit tables for all grid pairs.

    ``A[i, j] = max(M(V_i - V_j), M(V_j - V_i))`` and
    ``Dl[i, j] = 1 - M(V_i + V_j) / 2``.
    """
    V = np.asarray(V, dtype=np.float64)
    N, n = V.shape
    A = np.empty((N, N))
    Dl = np.empty((N, N))
    rows = max(1, _PAIR_CHUNK // N)
    for r0 in range(0, N, rows):
        r1 = min(N, r0 + rows)
        diff = (V[r0:r1, None, :] - V[None, :, :]).reshape(-1, n)
        summ = (V[r0:r1, None, :] + V[None, :, :]).reshape(-1, n)
        fwd = gauges(params, s0, diff, sym, tol, maxiter)
        bwd = gauges(params, s0, -diff, sym, tol, maxiter)
        A[r0:r1] = np.maximum(fwd, bwd).reshape(r1 - r0, N)
        Dl[r0:r1] = (1.0 - 0.5 * gauges(params, s0, summ, sym, tol, maxiter)).reshape(r1 - r0, N)
    return A, Dl
