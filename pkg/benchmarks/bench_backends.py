"""Compare the compiled and pure-python numerical backends.

Times the two hot kernels (Gram assembly, marginal-likelihood
evaluation) and the full hyperparameter search on the standard synthetic
snapshot.  Run from the repo root:

    python3 benchmarks/bench_backends.py
"""

import time

import numpy as np

from termkrig import backend
from termkrig.calibrate import build_constraints, fit_hyperparams
from termkrig.curve import TimeGrid
from termkrig.synthetic import standard_snapshot


def timeit(fn, repeat, warmup=3):
    for _ in range(warmup):
        fn()
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    snapshot, _ = standard_snapshot()
    grid = TimeGrid.for_snapshot(snapshot)
    cs = build_constraints(snapshot, grid)
    t = grid.times
    A, sig2, q = cs.A, cs.sigma2, cs.q_mid

    try:
        backend.use("c")
        backends = ["python", "c"]
    except ImportError:
        print("compiled backend not built; only timing the python path")
        backends = ["python"]

    cases = {
        "gram 60x60": lambda: backend.gram(t, 8.0, 0.5),
        "nll n=56 N=60": lambda: backend.nll_terms(A, t, sig2, q, 8.0, 0.5),
        "fit_hyperparams": lambda: fit_hyperparams(cs, grid),
    }
    repeats = {"gram 60x60": 200, "nll n=56 N=60": 200, "fit_hyperparams": 3}

    results = {}
    for name in backends:
        backend.use(name)
        label = backend.name()
        for case, fn in cases.items():
            results[(case, label)] = timeit(fn, repeats[case])

    print(f"{'kernel':<20} {'python':>12} {'compiled':>12} {'speedup':>9}")
    for case in cases:
        py = results.get((case, "python"))
        cc = results.get((case, "compiled"))
        if cc is None:
            print(f"{case:<20} {py * 1e3:>10.3f}ms {'-':>12} {'-':>9}")
        else:
            print(
                f"{case:<20} {py * 1e3:>10.3f}ms {cc * 1e3:>10.3f}ms "
                f"{py / cc:>8.2f}x"
            )


if __name__ == "__main__":
    main()
