"""Compiled vs pure-Python kernels.

Times ``refine`` and ``class_sums`` on synthetic inputs by calling both
implementations directly, then one engine workload end to end in two
subprocesses (with and without ``BAYES_EXCHANGE_PURE_PYTHON=1``).

    python3 benchmarks/bench_kernels.py [--repeat 3] [--bits 14 16 18]
"""

import argparse
import os
import subprocess
import sys
import time

import numpy as np

from bayes_exchange.core import _fallback

try:
    from bayes_exchange.core import _kernels
except ImportError:
    _kernels = None

WORKLOAD = """
import random
import time
from fractions import Fraction
from bayes_exchange.core import Agent, Network, SignalDistribution, WorldState, simulate
from bayes_exchange.core.kernels import BACKEND
rng = random.Random(3)
probs = [Fraction(k, 8) for k in range(1, 8)]
agents = [Agent(f"s{i}", SignalDistribution.binary(*rng.sample(probs, 2))) for i in range(16)]
agents += [Agent(f"u{i}") for i in range(4)]
ids = [a.id for a in agents]
edges = tuple((u, v) for u in ids for v in ids if u != v and rng.random() < 0.3)
net = Network(tuple(agents), edges)
omega = WorldState(True, {a.id: rng.randint(0, 1) for a in agents if a.signal is not None})
t = time.perf_counter()
simulate(net, omega, 4)
print(BACKEND, time.perf_counter() - t)
"""


def best(fn, repeat):
    out = float("inf")
    for _ in range(repeat):
        t = time.perf_counter()
        fn()
        out = min(out, time.perf_counter() - t)
    return out


def synthetic(bits, rng):
    n = 1 << bits
    labels = rng.integers(0, 64, size=n).astype(np.int64)
    keys = rng.integers(0, 3, size=n).astype(np.int64)
    radices = [2] * bits
    num_t = [[int(x) for x in rng.integers(1, 1 << 20, size=2)] for _ in range(bits)]
    num_f = [[int(x) for x in rng.integers(1, 1 << 20, size=2)] for _ in range(bits)]
    return labels, keys, radices, num_t, num_f


def kernel_table(bits_list, repeat):
    rng = np.random.default_rng(0)
    rows = []
    for bits in bits_list:
        labels, keys, radices, num_t, num_f = synthetic(bits, rng)
        py_ref = _fallback.refine(labels, keys)
        py_sums = _fallback.class_sums(py_ref[0], py_ref[1], radices, num_t, num_f)
        t_py_r = best(lambda: _fallback.refine(labels, keys), repeat)
        t_py_s = best(lambda: _fallback.class_sums(py_ref[0], py_ref[1], radices, num_t, num_f), repeat)
        if _kernels is None:
            rows.append((bits, t_py_r, None, t_py_s, None))
            continue
        cy_ref = _kernels.refine(labels, keys)
        cy_sums = _kernels.class_sums(cy_ref[0], cy_ref[1], radices, num_t, num_f)
        assert np.array_equal(py_ref[0], cy_ref[0]) and py_ref[1] == cy_ref[1]
        assert list(py_sums[0]) == list(cy_sums[0]) and list(py_sums[1]) == list(cy_sums[1])
        t_cy_r = best(lambda: _kernels.refine(labels, keys), repeat)
        t_cy_s = best(lambda: _kernels.class_sums(cy_ref[0], cy_ref[1], radices, num_t, num_f), repeat)
        rows.append((bits, t_py_r, t_cy_r, t_py_s, t_cy_s))
    return rows


def end_to_end():
    out = {}
    for pure in (False, True):
        env = dict(os.environ)
        env.pop("BAYES_EXCHANGE_PURE_PYTHON", None)
        if pure:
            env["BAYES_EXCHANGE_PURE_PYTHON"] = "1"
        res = subprocess.run([sys.executable, "-c", WORKLOAD], env=env, capture_output=True, text=True, check=True)
        backend, secs = res.stdout.split()
        out[backend] = float(secs)
    return out


def fmt(x):
    return "-" if x is None else f"{x * 1000:9.1f}"


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--bits", type=int, nargs="+", default=[14, 16, 18])
    args = ap.parse_args()
    if _kernels is None:
        print("compiled extension not built; only the fallback is timed")
    print("configs    refine py (ms)  refine cy (ms)  sums py (ms)  sums cy (ms)  speedup")
    for bits, pr, cr, ps, cs in kernel_table(args.bits, args.repeat):
        speed = "-" if cr is None else f"{(pr + ps) / (cr + cs):6.1f}x"
        print(f"2^{bits:<6} {fmt(pr):>15} {fmt(cr):>15} {fmt(ps):>13} {fmt(cs):>13}  {speed}")
    e2e = end_to_end()
    print("engine workload:", ", ".join(f"{k} {v:.3f}s" for k, v in sorted(e2e.items())))


if __name__ == "__main__":
    main()
