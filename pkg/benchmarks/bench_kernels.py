"""Compare the compiled and numpy scan kernels on realistic inputs.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from twincheck import kernels
from twincheck.geometry import projective_plane
from twincheck.models import get_model
from twincheck.opposition import _neighbors, _subsets
from twincheck.symmetry import collineation_group, duality_batches


def workloads():
    plane = projective_plane(4)
    _, duals = next(duality_batches(plane, collineation_group(4), 8192))
    duals = np.ascontiguousarray(duals)
    incidence = np.ascontiguousarray(plane.incidence, dtype=np.uint8)

    model = get_model("a3")
    twin = model.twin
    _, maps, _ = next(model.batches(2048, 0, 2048))
    J = sorted(_subsets(twin.system.rank)[0])
    members = twin.plus.residue_members(set(range(twin.system.rank)) - set(J))

    pg = get_model("pg", 3)
    _, pmaps, _ = next(pg.batches(4096, 0, 4096))
    n = pmaps.shape[1]
    lengths = np.ascontiguousarray(pg.twin.table.length[pg.twin.codist_pm[np.arange(n)[None, :], pmaps]])
    nbrs = _neighbors(pg.twin.plus)

    return {
        "perm_orders (PG(2,4), 8192 dualities)": lambda: kernels.perm_orders(duals),
        "absolute_counts (PG(2,4), 8192 dualities)": lambda: kernels.absolute_counts(duals, incidence, plane.n_points),
        "j_opposite (A3(2), 2048 maps)": lambda: kernels.j_opposite(maps, twin.opposite, members),
        "local_descent (PG(2,3), 4096 maps)": lambda: kernels.local_descent(lengths, nbrs, 0),
    }


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t)
    return min(times)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()
    backends = kernels.available()
    original = kernels.BACKEND
    jobs = workloads()
    results = {}
    try:
        for backend in backends:
            kernels.use(backend)
            for name, fn in jobs.items():
                results[name, backend] = best_of(fn, args.repeat)
    finally:
        kernels.use(original)
    print(f"{'kernel':45s}" + "".join(f"{b:>12s}" for b in backends) + ("     speedup" if len(backends) > 1 else ""))
    for name in jobs:
        row = f"{name:45s}" + "".join(f"{results[name, b] * 1000:10.1f}ms" for b in backends)
        if len(backends) > 1:
            row += f"{results[name, 'python'] / results[name, 'compiled']:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
