"""Compare the numba kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--n 1000000] [--repeats 5]

The package picks its backend from ARTIFACT_DISABLE_NUMBA at import time;
this script calls both implementations directly so one run shows both.
"""
import argparse

from artifact import _kernels
from artifact.bench import run_benchmark


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=1_000_000)
    ap.add_argument("--repeats", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    active = "numba" if _kernels.USE_NUMBA else "numpy"
    print(f"numba available: {_kernels.NUMBA_AVAILABLE}; active backend: {active}")
    print(f"{'kernel':<20}{'numpy s':>12}{'numba s':>12}{'speedup':>10}  agree")
    for row in run_benchmark(args.n, args.repeats, args.seed):
        nb = row.get("numba")
        nb_s = "-" if nb is None else f"{nb:.4f}"
        speed = "-" if nb is None else f"{row['speedup']:.2f}x"
        print(f"{row['kernel']:<20}{row['numpy']:>12.4f}{nb_s:>12}{speed:>10}  {row.get('agree', '-')}")


if __name__ == "__main__":
    main()
