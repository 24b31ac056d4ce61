"""Timing of the numba kernels against their numpy fallbacks."""
from __future__ import annotations

import time

import numpy as np

from . import _kernels


def _cases(n, rng):
    breaks = np.array([0.0, 0.3, 1.1, 2.5, 4.0])
    hazards = np.array([1.4, 0.9, 0.6, 0.2])
    u = rng.random(n)
    times = np.concatenate(([0.0, np.inf], rng.exponential(1.5, n - 2)))
    tau_b = rng.exponential(1.0, n)
    tau_s = rng.exponential(1.0, n)
    pb = np.full(n, 0.5)
    ps = np.full(n, 0.8)
    return {
        "inverse_survival": ((u, 0.2, breaks, hazards),),
        "concession_values": ((times, 0.2, breaks, hazards, 0.3, 0.1, 0.2, 1.0),),
        "resolve_trades": ((tau_b, tau_s, pb, ps, 0.0),),
    }


def _impl(name, backend):
    short = {"inverse_survival": "inverse_survival", "concession_values": "concession_values",
             "resolve_trades": "resolve"}[name]
    return getattr(_kernels, f"_{short}_{'nb' if backend == 'numba' else 'np'}")


def _time(fn, args, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def run_benchmark(n=1_000_000, repeats=5, seed=0):
    """Best-of-repeats seconds per kernel and backend, plus an agreement check."""
    rng = np.random.default_rng(seed)
    backends = ["numpy"] + (["numba"] if _kernels.NUMBA_AVAILABLE else [])
    rows = []
    for name, (args,) in _cases(n, rng).items():
        args = tuple(np.ascontiguousarray(a) if isinstance(a, np.ndarray) else a for a in args)
        outs, row = {}, {"kernel": name, "n": n}
        for b in backends:
            fn = _impl(name, b)
            outs[b] = fn(*args)  # warm-up (numba compiles here)
            row[b] = _time(fn, args, repeats)
        if len(outs) == 2:
            a, b = outs["numpy"], outs["numba"]
            a = a if isinstance(a, tuple) else (a,)
            b = b if isinstance(b, tuple) else (b,)
            row["agree"] = all(np.allclose(x, y, rtol=1e-12, atol=1e-14, equal_nan=True)
                               for x, y in zip(a, b))
            row["speedup"] = row["numpy"] / row["numba"] if row["numba"] > 0 else float("inf")
        rows.append(row)
    return rows
