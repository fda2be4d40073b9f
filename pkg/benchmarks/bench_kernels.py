"""Time the compiled kernels against the pure-Python fallback.

    python benchmarks/bench_kernels.py [--steps 20000] [--repeat 3]

Both backends are loaded side by side; their outputs are compared before
timing so a speedup is never reported for diverging results.
"""

import argparse
import timeit

import numpy as np

from mlmr import _fallback
from mlmr.harness import load_config, shipped_config
from mlmr.markov import pack_instance
from mlmr.rng import RandomStream

try:
    from mlmr import _core
except ImportError:
    _core = None


def block_inputs(instance, steps, seed=0):
    m, n = instance.shape
    rng = np.random.default_rng(seed)
    theta = rng.random((m, n))
    counts = rng.integers(1, 20, (m, n)).astype(np.int64)
    cur = np.zeros((m, n), dtype=np.int64)
    lvals = np.full(steps, 2.0)
    u = RandomStream(seed).uniforms(steps * m).reshape(steps, m)
    return theta, counts, cur, lvals, u


def run_block(mod, instance, steps):
    theta, counts, cur, lvals, u = block_inputs(instance, steps)
    cum, rew, nst = pack_instance(instance)
    out = np.empty(steps)
    mod.mlmr_block(theta, counts, cur, cum, rew, nst, int(counts.sum()), lvals, u, out)
    return out, theta, counts


def matching_case(mod, ws):
    return [mod.max_weight_matching(w) for w in ws]


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--steps", type=int, default=20_000)
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    if _core is None:
        print("compiled extension not built; nothing to compare")
        return 1
    instance = load_config(shipped_config("example1.cfg")).instance
    rng = np.random.default_rng(1)
    shapes = [(3, 6), (5, 8), (8, 12)]
    mats = {s: [rng.random(s) for _ in range(200)] for s in shapes}

    a = run_block(_fallback, instance, 2000)
    b = run_block(_core, instance, 2000)
    assert all(np.array_equal(x, y) for x, y in zip(a, b)), "backends disagree on mlmr_block"
    for s in shapes:
        lists = [w.tolist() for w in mats[s]]
        assert matching_case(_fallback, lists) == matching_case(_core, mats[s]), f"backends disagree on {s}"

    print(f"{'kernel':<28}{'python (s)':>12}{'cython (s)':>12}{'speedup':>10}")
    rows = [(f"mlmr_block 2x4, {args.steps} steps",
             lambda: run_block(_fallback, instance, args.steps),
             lambda: run_block(_core, instance, args.steps))]
    for s in shapes:
        lists = [w.tolist() for w in mats[s]]
        rows.append((f"matching {s[0]}x{s[1]}, 200 calls",
                     lambda lists=lists: matching_case(_fallback, lists),
                     lambda s=s: matching_case(_core, mats[s])))
    for name, py, cy in rows:
        tp = min(timeit.repeat(py, number=1, repeat=args.repeat))
        tc = min(timeit.repeat(cy, number=1, repeat=args.repeat))
        print(f"{name:<28}{tp:>12.4f}{tc:>12.4f}{tp / tc:>9.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
