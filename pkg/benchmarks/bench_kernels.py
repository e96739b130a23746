"""Time the oracle's moment reduction: numba kernel vs numpy, and a full oracle call.

    python benchmarks/bench_kernels.py [--points 61] [--repeat 5]
"""

import argparse
import time
import warnings

import numpy as np

from spinhall import _kernels
from spinhall.initial_data import BeamSpec
from spinhall.medium import MediumModel
from spinhall.moments_oracle import GridSpec, initial_fields, quadrature_moments


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--points", type=int, default=61)
    ap.add_argument("--repeat", type=int, default=5)
    a = ap.parse_args()
    n = a.points**3
    rng = np.random.default_rng(0)
    y, w, u, v = rng.normal(size=(n, 3)), rng.uniform(size=n), rng.uniform(size=n), rng.normal(size=(n, 3))
    print(f"reduction over {n} points (numba available: {_kernels.HAVE_NUMBA})")
    t_np = best_of(lambda: _kernels.reduce_moments(y, w, u, v, workers=1, use_numba=False), a.repeat)
    print(f"  numpy            {t_np * 1e3:8.2f} ms")
    if _kernels.HAVE_NUMBA:
        t_nb = best_of(lambda: _kernels.reduce_moments(y, w, u, v, workers=1, use_numba=True), a.repeat)
        t_nbp = best_of(lambda: _kernels.reduce_moments(y, w, u, v), a.repeat)
        print(f"  numba            {t_nb * 1e3:8.2f} ms  ({t_np / t_nb:.1f}x)")
        print(f"  numba, threaded  {t_nbp * 1e3:8.2f} ms  ({t_np / t_nbp:.1f}x)")

    medium = MediumModel("homogeneous", n_left=1.2)
    spec = BeamSpec(direction=np.array([0.8, 0.6, 0.0]), k=1.0, S0=np.diag([1.0, 1.5, 0.8]), omega=200.0)
    fields = initial_fields(spec, medium)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        t_full = best_of(lambda: quadrature_moments(fields, spec.omega, GridSpec(points_per_axis=a.points)),
                         a.repeat)
    print(f"full oracle call at {a.points}^3: {t_full * 1e3:.1f} ms")


if __name__ == "__main__":
    main()
