"""numba-compiled versions of the hot kernels.

Same contracts as :mod:`.numpy_kernels`; the ``CALLABLE`` kind cannot be
compiled and is routed to the numpy path by the dispatcher.
"""
import math

import numpy as np
from numba import njit, prange

from .common import METHOD_BISECT, POLYTOPE, POWER

JIT_OPTIONS = {"nogil": True, "cache": True, "error_model": "numpy"}


@njit(**JIT_OPTIONS)
def _power_eval(exps, s0, d, t):
    g = -1.0
    dg = 0.0
    for i in range(s0.size):
        u = s0[i] + t * d[i]
        a = abs(u)
        p = exps[i]
        if a > 0.0:
            ap1 = a ** (p - 1.0)
            g += ap1 * a
            dg += p * ap1 * (1.0 if u > 0.0 else -1.0) * d[i]
    return g, dg


@njit(**JIT_OPTIONS)
def _poly_eval(coeffs, powers, s0, d, t):
    n = s0.size
    g = 0.0
    dg = 0.0
    for k in range(coeffs.size):
        mono = 1.0
        dmono = 0.0
        for i in range(n):
            u = s0[i] + t * d[i]
            e = powers[k, i]
            if e == 0:
                continue
            ue = u ** e
            # product rule, accumulated left to right
            dmono = dmono * ue + mono * e * u ** (e - 1) * d[i]
            mono = mono * ue
        g += coeffs[k] * mono
        dg += coeffs[k] * dmono
    return g, dg


@njit(**JIT_OPTIONS)
def _eval(kind, exps, coeffs, powers, s0, d, t):
    if kind == POWER:
        return _power_eval(exps, s0, d, t)
    return _poly_eval(coeffs, powers, s0, d, t)


@njit(**JIT_OPTIONS)
def _solve(kind, exps, coeffs, powers, s0, d, hi, method, tol, maxiter):
    lo = 0.0
    t = hi
    for _ in range(maxiter):
        gv, dv = _eval(kind, exps, coeffs, powers, s0, d, t)
        if gv == 0.0:
            return t
        if gv > 0.0:
            hi = t
        else:
            lo = t
        mid = 0.5 * (lo + hi)
        if method == METHOD_BISECT or dv == 0.0:
            tn = mid
        else:
            tn = t - gv / dv
            if abs(tn - t) <= 0.5 * tol * max(1.0, t):
                return tn
            if not (tn > lo and tn < hi):
                tn = mid
        if abs(tn - t) <= 0.5 * tol * max(1.0, t):
            return tn
        t = tn
    return np.nan


@njit(**JIT_OPTIONS)
def ray_param(kind, exps, normals, offsets, coeffs, powers, s0, d, method, tol, maxiter):
    n = s0.size
    if kind == POLYTOPE:
        best = np.inf
        for k in range(offsets.size):
            num = offsets[k]
            den = 0.0
            for i in range(n):
                num -= normals[k, i] * s0[i]
                den += normals[k, i] * d[i]
            if den > 0.0:
                c = num / den
                if c < best:
                    best = c
        return best if best < np.inf else np.nan
    if kind == POWER:
        if method != METHOD_BISECT:
            all2 = True
            same = True
            centered = True
            for i in range(n):
                if exps[i] != 2.0:
                    all2 = False
                if exps[i] != exps[0]:
                    same = False
                if s0[i] != 0.0:
                    centered = False
            if all2:
                a = 0.0
                b = 0.0
                c = -1.0
                for i in range(n):
                    a += d[i] * d[i]
                    b += s0[i] * d[i]
                    c += s0[i] * s0[i]
                disc = math.sqrt(max(b * b - a * c, 0.0))
                if b > 0.0:
                    return -c / (b + disc)
                return (disc - b) / a
            if same and centered:
                p = exps[0]
                acc = 0.0
                for i in range(n):
                    acc += abs(d[i]) ** p
                return 1.0 / acc ** (1.0 / p)
        smax = 0.0
        dmax = 0.0
        for i in range(n):
            smax = max(smax, abs(s0[i]))
            dmax = max(dmax, abs(d[i]))
        hi = (1.0 + smax) / dmax
        return _solve(kind, exps, coeffs, powers, s0, d, hi, method, tol, maxiter)
    # POLY: bracket by doubling
    dn = 0.0
    for i in range(n):
        dn += d[i] * d[i]
    hi = 1.0 / math.sqrt(dn)
    for _ in range(80):
        gv, _dv = _poly_eval(coeffs, powers, s0, d, hi)
        if gv > 0.0:
            return _solve(kind, exps, coeffs, powers, s0, d, hi, method, tol, maxiter)
        hi *= 2.0
    return np.nan


@njit(**JIT_OPTIONS)
def _gauge(kind, exps, normals, offsets, coeffs, powers, s0, v, sym, tol, maxiter):
    big = 0.0
    for i in range(v.size):
        big = max(big, abs(v[i]))
    if big == 0.0:
        return 0.0
    # exact power-of-two rescale keeps tiny and huge vectors in range
    e = math.frexp(big)[1]
    w = np.empty_like(v)
    for i in range(v.size):
        w[i] = math.ldexp(v[i], -e)
    m = 1.0 / ray_param(kind, exps, normals, offsets, coeffs, powers, s0, w, 0, tol, maxiter)
    if sym:
        m = 0.5 * (m + 1.0 / ray_param(kind, exps, normals, offsets, coeffs, powers, s0, -w, 0, tol, maxiter))
    return math.ldexp(m, e)


@njit(**JIT_OPTIONS)
def ray_params_batch(kind, exps, normals, offsets, coeffs, powers, S0, D, method, tol, maxiter):
    m = D.shape[0]
    out = np.empty(m)
    for r in range(m):
        out[r] = ray_param(kind, exps, normals, offsets, coeffs, powers,
                           S0[r], D[r], method, tol, maxiter)
    return out


@njit(**JIT_OPTIONS)
def gauges_batch(kind, exps, normals, offsets, coeffs, powers, s0, V, sym, tol, maxiter):
    m = V.shape[0]
    out = np.empty(m)
    for r in range(m):
        out[r] = _gauge(kind, exps, normals, offsets, coeffs, powers, s0, V[r], sym, tol, maxiter)
    return out


@njit(parallel=True, **JIT_OPTIONS)
def pair_tables(kind, exps, normals, offsets, coeffs, powers, s0, V, sym, tol, maxiter):
    N, n = V.shape
    A = np.empty((N, N))
    Dl = np.empty((N, N))
    for i in prange(N):
        w = np.empty(n)
        for j in range(i, N):
            for k in range(n):
                w[k] = V[i, k] - V[j, k]
            f = _gauge(kind, exps, normals, offsets, coeffs, powers, s0, w, sym, tol, maxiter)
            for k in range(n):
                w[k] = -w[k]
            b = _gauge(kind, exps, normals, offsets, coeffs, powers, s0, w, sym, tol, maxiter)
            for k in range(n):
                w[k] = V[i, k] + V[j, k]
            s = _gauge(kind, exps, normals, offsets, coeffs, powers, s0, w, sym, tol, maxiter)
            a = max(f, b)
            A[i, j] = a
            A[j, i] = a
            Dl[i, j] = 1.0 - 0.5 * s
            Dl[j, i] = 1.0 - 0.5 * s
    return A, Dl
