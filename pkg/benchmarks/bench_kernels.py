"""Time the pure-Python and compiled kernel backends on representative inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--quick]

Prints one row per kernel: best wall time per backend and the speedup.
Both backends are also checked to agree on every input before timing.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from neuromap import kernels


def _cases(quick: bool):
    rng = np.random.default_rng(0)
    scale = 1 if quick else 4

    n = 32 * scale
    w = rng.random((n, n))
    w = np.triu(w, 1)
    w = w + w.T
    side = np.zeros(n, dtype=np.uint8)
    side[rng.permutation(n)[: n // 2]] = 1
    ext = np.where(side[None, :] != side[:, None], w, 0).sum(1)
    inn = np.where(side[None, :] == side[:, None], w, 0).sum(1)
    d = ext - inn

    m = 400 * scale
    src = rng.integers(0, 64, m).astype(np.int64)
    dst = rng.integers(0, 64, m).astype(np.int64)
    wt = rng.random(m)
    assign = rng.integers(0, 8, (20, 64)).astype(np.int64)
    perm = np.array([rng.permutation(16)[:64 % 16 + 8] for _ in range(20)], dtype=np.int64)
    psrc, pdst = src % perm.shape[1], dst % perm.shape[1]
    dist = np.abs(np.arange(16)[:, None] - np.arange(16)[None, :]).astype(np.int64)

    nv = 64
    indptr = [0]
    indices = []
    for v in range(nv):
        fan = rng.choice(nv, size=int(rng.integers(0, 6)), replace=False)
        indices += sorted(fan.tolist())
        indptr.append(len(indices))
    indptr = np.array(indptr, dtype=np.int64)
    indices = np.array(indices, dtype=np.int64)
    is_col = (rng.random(nv) < 0.8).astype(np.uint8)
    rassign = rng.integers(0, 10, (20, nv)).astype(np.int64)

    seq = rng.permutation(2000 * scale).astype(np.int64)

    return {
        "route_next": lambda b: [b.route_next(s, cx, cy, 7, 7, 4, 3, (1, 2, 3, 0))
                                 for s in range(6) for cx in range(8) for cy in range(8)],
        "trace_route": lambda b: [b.trace_route(s, 0, 0, dx, dy, 3) for s in range(6)
                                  for dx in range(8) for dy in range(8)],
        "count_inversions": lambda b: b.count_inversions(seq),
        "kl_pass": lambda b: (b.kl_pass(w, s := side.copy(), d), s.tolist()),
        "cut_costs": lambda b: b.cut_costs(assign, src, dst, wt),
        "placement_costs": lambda b: b.placement_costs(perm, psrc, pdst, wt, dist),
        "elmore_grid": lambda b: b.elmore_grid(16 * scale, 2.5, 2.5, 1e-15, 1.2e-15),
        "repair_assign": lambda b: (b.repair_assign(a := rassign.copy(), 10, 6, indptr, indices, is_col), a),
    }


def _same(x, y) -> bool:
    if isinstance(x, tuple):
        return all(_same(a, b) for a, b in zip(x, y))
    return bool(np.array_equal(np.asarray(x, dtype=object), np.asarray(y, dtype=object)))


def _best(fn, backend, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(backend)
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--quick", action="store_true", help="smaller inputs")
    args = ap.parse_args(argv)

    py, cc = kernels.python_backend, kernels.compiled_backend
    if cc is None:
        print("compiled backend not built; run `pip install -e . --no-build-isolation` first")
    print(f"{'kernel':<18}{'python ms':>12}{'compiled ms':>14}{'speedup':>10}")
    for name, fn in _cases(args.quick).items():
        t_py = _best(fn, py, args.repeat) * 1e3
        if cc is None:
            print(f"{name:<18}{t_py:>12.3f}{'-':>14}{'-':>10}")
            continue
        if not _same(fn(py), fn(cc)):
            raise SystemExit(f"{name}: backends disagree")
        t_cc = _best(fn, cc, args.repeat) * 1e3
        print(f"{name:<18}{t_py:>12.3f}{t_cc:>14.3f}{t_py / t_cc:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
