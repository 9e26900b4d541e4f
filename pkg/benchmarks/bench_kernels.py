"""Benchmark the njit kernels against their numpy fallbacks.

Each (kernel, path) cell runs in a subprocess because the kernel path is
fixed at import time by SCITECH_NUMBA. The numba cell does one warm-up
call so JIT compilation is not counted in the measured time.

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --kernel mst --repeats 5
"""

import argparse
import json
import os
import subprocess
import sys
import time

KERNELS = ("sgns", "layout", "mst")
PATHS = ("numpy", "numba")


def _bench_sgns():
    import numpy as np

    from scitech.embed import train_sgns

    rng = np.random.default_rng(7)
    vocab_size = 400
    docs = [[f"w{j}" for j in rng.integers(0, vocab_size, size=60)] for _ in range(400)]
    t0 = time.perf_counter()
    train_sgns(docs, dim=50, window=5, negatives=5, epochs=2, seed=3, min_count=1)
    return time.perf_counter() - t0


def _bench_layout():
    import numpy as np

    from scitech.reduce import knn_graph, reduce_neighbor_embedding

    rng = np.random.default_rng(7)
    vectors = rng.standard_normal((2000, 40))
    graph = knn_graph(vectors, k=15)
    t0 = time.perf_counter()
    reduce_neighbor_embedding(graph, dim_out=5, n_epochs=100, seed=3)
    return time.perf_counter() - t0


def _bench_mst():
    import numpy as np

    from scitech.kernels.mst import mst_mutual_reachability

    rng = np.random.default_rng(7)
    points = rng.standard_normal((3000, 10))
    core = rng.uniform(0.5, 1.5, size=3000)
    t0 = time.perf_counter()
    mst_mutual_reachability(points, core)
    return time.perf_counter() - t0


def run_cell(kernel: str, repeats: int) -> dict:
    from scitech.accel import NUMBA_ENABLED

    bench = {"sgns": _bench_sgns, "layout": _bench_layout, "mst": _bench_mst}[kernel]
    if NUMBA_ENABLED:
        bench()  # compile
    times = [bench() for _ in range(repeats)]
    return {
        "kernel": kernel,
        "path": "numba" if NUMBA_ENABLED else "numpy",
        "best_s": min(times),
        "times_s": times,
    }


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--kernel", choices=KERNELS, help="benchmark one kernel only")
    parser.add_argument("--repeats", type=int, default=3)
    parser.add_argument(
        "--cell", action="store_true", help=argparse.SUPPRESS
    )  # internal: emit one JSON measurement for the current SCITECH_NUMBA
    args = parser.parse_args()

    if args.cell:
        print(json.dumps(run_cell(args.kernel, args.repeats)))
        return 0

    kernels = [args.kernel] if args.kernel else list(KERNELS)
    results = {}
    for kernel in kernels:
        for path in PATHS:
            env = dict(os.environ)
            env["SCITECH_NUMBA"] = "1" if path == "numba" else "0"
            proc = subprocess.run(
                [sys.executable, __file__, "--cell", "--kernel", kernel,
                 "--repeats", str(args.repeats)],
                env=env, capture_output=True, text=True,
            )
            if proc.returncode != 0:
                print(f"{kernel}/{path} failed:\n{proc.stderr}", file=sys.stderr)
                return 1
            cell = json.loads(proc.stdout.strip().splitlines()[-1])
            results[(kernel, path)] = cell["best_s"]

    print(f"{'kernel':<10} {'numpy (s)':>12} {'numba (s)':>12} {'speedup':>9}")
    for kernel in kernels:
        np_t = results[(kernel, "numpy")]
        nb_t = results[(kernel, "numba")]
        print(f"{kernel:<10} {np_t:>12.3f} {nb_t:>12.3f} {np_t / nb_t:>8.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
