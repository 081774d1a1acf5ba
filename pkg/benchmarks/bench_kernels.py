"""Compare the numba and numpy kernel backends.

Run ``python benchmarks/bench_kernels.py [--grid 512] [--repeat 3]``.  Each
case is timed on both backends after a warm-up call (which also triggers
JIT compilation) and the outputs are checked to agree.
"""
import argparse
import time

import numpy as np

from hilbertgeom import _kernels as K
from hilbertgeom.body import BasedBody, based, disk, implicit_poly, p_ball


def _cases(grid):
    rng = np.random.default_rng(0)
    bodies = {
        "disk (closed form)": based(disk()),
        "p4 off-centre (Newton)": BasedBody(p_ball(4), [0.3, 0.2]),
        "quartic polynomial": based(implicit_poly([(1, (4, 0)), (1, (2, 2)), (1, (0, 4)), (-1, (0, 0))], (0, 0))),
    }
    th = 2 * np.pi * np.arange(grid) / grid
    dirs = np.column_stack([np.cos(th), np.sin(th)])
    vecs = rng.normal(size=(grid * 64, 2))
    for name, bb in bodies.items():
        p, s0 = bb.body.params, bb.canonical_base
        V = bb.body.canonical_dirs(dirs)
        W = bb.body.canonical_dirs(vecs)
        yield name, "gauges", lambda p=p, s0=s0, W=W: K.gauges(p, s0, W)
        yield name, "pair_tables", lambda p=p, s0=s0, V=V: K.pair_tables(p, s0, V)


def _time(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=512)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    print(f"{'body':26s} {'kernel':12s} {'numba s':>10s} {'numpy s':>10s} {'speedup':>8s} {'max abs diff':>13s}")
    for name, kernel, fn in _cases(args.grid):
        res = {}
        for backend in ("numba", "numpy"):
            K.use_backend(backend)
            fn()
            res[backend] = _time(fn, args.repeat)
        a, b = res["numba"][1], res["numpy"][1]
        a, b = np.concatenate([np.ravel(x) for x in np.atleast_1d(a)]), \
            np.concatenate([np.ravel(x) for x in np.atleast_1d(b)])
        diff = np.max(np.abs(a - b))
        tn, tp = res["numba"][0], res["numpy"][0]
        print(f"{name:26s} {kernel:12s} {tn:10.4f} {tp:10.4f} {tp / tn:8.1f} {diff:13.1e}")
    K.use_backend("numba")


if __name__ == "__main__":
    main()
