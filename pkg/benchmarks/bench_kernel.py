"""Benchmark the compiled path kernel against the pure-Python fallback.

Runs the same shock arrays through both implementations, checks the outputs
agree bit for bit, and reports throughput.  Usage:

    python benchmarks/bench_kernel.py [n_steps]
"""

import math
import sys
import time

import numpy as np

from volcopula import _pathcore_py

try:
    from volcopula import _pathcore
except ImportError:
    _pathcore = None


def run(impl, n, shocks, family=1, param=2.0, rho_z=0.594):
    z1, z2, g1, g2, logu = shocks
    outs = [np.empty(n + 1) for _ in range(4)]
    t0 = time.perf_counter()
    impl.ou_mh_path(
        math.log(0.05), math.log(0.01), 0.0, 0.0,
        math.exp(-10.0 / 780), 0.107, 0.107,
        math.log(0.05), math.log(0.01), 0.6708, 0.6708,
        1e-4, 5e-5, 0.0358, -math.sqrt(0.5),
        family, param, rho_z,
        z1, z2, g1, g2, logu,
        *outs,
    )
    return time.perf_counter() - t0, outs


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 500_000
    rng = np.random.default_rng(0)
    shocks = (
        rng.standard_normal(n),
        rng.standard_normal(n),
        rng.standard_normal(n),
        rng.standard_normal(n),
        np.log(rng.uniform(size=n)),
    )
    t_py, out_py = run(_pathcore_py, n, shocks)
    print(f"python fallback : {n / t_py / 1e6:8.2f} M steps/s  ({t_py:.2f} s)")
    if _pathcore is None:
        print("compiled kernel : not built (pip install built without the extension)")
        return
    t_c, out_c = run(_pathcore, n, shocks)
    print(f"compiled kernel : {n / t_c / 1e6:8.2f} M steps/s  ({t_c:.2f} s)")
    same = all(np.array_equal(a, b) for a, b in zip(out_py, out_c))
    print(f"speedup         : {t_py / t_c:8.1f}x   outputs bit-identical: {same}")


if __name__ == "__main__":
    main()
