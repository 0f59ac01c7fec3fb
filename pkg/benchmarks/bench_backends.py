"""Compare the numba and pure-numpy forest kernels on oracle-sized workloads.

The backend is fixed at import time, so each one is timed in its own
subprocess. Usage: ``python benchmarks/bench_backends.py [--ntree 20] [--repeat 3]``
"""

import argparse
import json
import os
import subprocess
import sys

WORKER = r"""
import json, sys, time
import numpy as np
from combpso import forest
from combpso.datasets import gen_synthetic2, make_split

ntree, repeat = int(sys.argv[1]), int(sys.argv[2])
ds = gen_synthetic2(m=200, n_total=100, seed=0)
sp = make_split(ds, seed=0)
X, y = ds.features[sp.train_indices], ds.labels[sp.train_indices]
fold = sp.fold_ids()
seeds = forest.tree_seeds(0, ntree)
out = {"backend": "numba" if forest.USE_NUMBA else "numpy", "cases": {}}
# one warm-up call triggers compilation (numba) outside the timed region
forest.fit_predict(X[:, :3], y, X[:5, :3], seeds=seeds[:2])
for k in (1, 5, 20):
    cols = np.arange(k)
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        for f in range(10):
            tr, te = fold != f, fold == f
            forest.fit_predict(X[tr][:, cols], y[tr], X[te][:, cols], seeds=seeds)
        best = min(best, time.perf_counter() - t0)
    out["cases"][f"{k} features"] = best
print(json.dumps(out))
"""


def run(backend, ntree, repeat):
    env = dict(os.environ, COMBPSO_BACKEND=backend)
    r = subprocess.run([sys.executable, "-c", WORKER, str(ntree), str(repeat)], env=env,
                       capture_output=True, text=True, check=True)
    return json.loads(r.stdout)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--ntree", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    res = {b: run(b, args.ntree, args.repeat) for b in ("numba", "numpy")}
    print(f"10-fold CV, {args.ntree} trees, 140 training rows (best of {args.repeat})")
    print(f"{'mask':<12}{'numba [s]':>12}{'numpy [s]':>12}{'speedup':>10}")
    for case, t_nb in res["numba"]["cases"].items():
        t_np = res["numpy"]["cases"][case]
        print(f"{case:<12}{t_nb:>12.4f}{t_np:>12.4f}{t_np / t_nb:>9.1f}x")


if __name__ == "__main__":
    main()
