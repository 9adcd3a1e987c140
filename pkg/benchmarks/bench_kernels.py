"""Compare the numba and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

from qsentinel import _kernels
from qsentinel.generators import generate_topology
from qsentinel.quorums import enumerate_minimal_quorums
from qsentinel.resilience import cascade, compile_network, scan_subsets


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases():
    tiered = compile_network(generate_topology("tiered", 62, slices=50, offline=18))
    tiered_full = compile_network(generate_topology("tiered", 62, slices=50))
    pbft16 = compile_network(generate_topology("pbft", 16))
    return [
        ("scan k=2 tiered-62", lambda: scan_subsets(tiered_full, 2, 0.0)),
        ("scan k=3 tiered-62", lambda: scan_subsets(tiered_full, 3, 0.0)),
        ("scan k=2 tiered-62/18 offline", lambda: scan_subsets(tiered, 2, 0.0)),
        ("cascade x1000 tiered-62", lambda: [cascade(tiered_full, ["hub0"]) for _ in range(1000)]),
        ("minimal quorums pbft-16", lambda: enumerate_minimal_quorums(pbft16)),
    ]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    backends = [b for b in (_kernels.NUMBA, _kernels.NUMPY) if b is not None]
    work = cases()
    results = {}
    for b in backends:
        _kernels.ACTIVE = b
        for name, fn in work:
            fn()  # warm-up, includes JIT compilation
            results[name, b.name] = best_of(fn, args.repeat)
    header = f"{'case':32}" + "".join(f"{b.name:>12}" for b in backends)
    print(header + ("     speedup" if len(backends) == 2 else ""))
    for name, _ in work:
        row = f"{name:32}" + "".join(f"{results[name, b.name] * 1e3:10.2f}ms" for b in backends)
        if len(backends) == 2:
            row += f"{results[name, 'numpy'] / results[name, 'numba']:11.1f}x"
        print(row)


if __name__ == "__main__":
    main()
