"""Regenerates ``smooth_oracle.json``: long projected-gradient runs on the
smooth-signal objective ``2 z.w - alpha * sum(log(deg)) + beta * |w|^2``.

Independent of the package: instances come from a plain numpy Generator,
degrees from an explicit incidence matrix. Slow (10**6 iterations).

    python3 tests/oracles/smooth_pgd_oracle.py
"""
import json
from itertools import combinations
from pathlib import Path

import numpy as np

N, P, ALPHA, BETA = 6, 5, 1.0, 1.0
STEP, ITERS = 1e-4, 10**6
SEEDS = [101, 102, 103, 104, 105]


def instance(seed):
    x = np.random.default_rng(seed).standard_normal((N, P))
    pairs = list(combinations(range(N), 2))
    z = np.array([np.sum((x[i] - x[j]) ** 2) for i, j in pairs]) / P
    inc = np.zeros((N, len(pairs)))
    for e, (i, j) in enumerate(pairs):
        inc[i, e] = inc[j, e] = 1.0
    return x, z, inc


def objective(w, z, inc):
    return float(2 * z @ w - ALPHA * np.sum(np.log(inc @ w)) + BETA * w @ w)


def main():
    data = [instance(s) for s in SEEDS]
    z = np.stack([d[1] for d in data])
    inc = data[0][2]
    w = np.full_like(z, 1.0 / N)
    for _ in range(ITERS):
        grad = 2 * z - ALPHA * (1.0 / (w @ inc.T)) @ inc + 2 * BETA * w
        w = np.maximum(w - STEP * grad, 0.0)
    out = {"n": N, "p": P, "alpha": ALPHA, "beta": BETA, "step": STEP, "iterations": ITERS,
           "instances": [{"seed": s, "x": d[0].tolist(), "objective": objective(wi, d[1], inc),
                          "w": wi.tolist()} for s, d, wi in zip(SEEDS, data, w)]}
    path = Path(__file__).with_name("smooth_oracle.json")
    path.write_text(json.dumps(out, indent=1) + "\n")
    print([i["objective"] for i in out["instances"]])


if __name__ == "__main__":
    main()
