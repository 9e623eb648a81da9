"""Time the compiled kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--T 40] [--repeat 3]

Both backends consume the same random stream, so the benchmark also checks
that their outputs are identical.
"""

import argparse
import time

import numpy as np

import disruptsim.generator as gen
import disruptsim.metrics as met
import disruptsim.nullmodel as nm
from disruptsim import _pykernels
from disruptsim.generator import GrowthConfig, grow
from disruptsim.metrics import cd_arrays
from disruptsim.nullmodel import RewireConfig, rewire

try:
    from disruptsim import _ckernels
except ImportError:
    _ckernels = None


def use(mod):
    for m in (gen, met, nm):
        m.kernels = mod


def best_of(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--T", type=int, default=40, help="growth periods (default 40)")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    if _ckernels is None:
        raise SystemExit("compiled kernels are not built; run: python setup.py build_ext --inplace")

    cfg = GrowthConfig(T=args.T, seed=1)
    net = grow(cfg)
    print(f"network: T={args.T} nodes={net.n_nodes} edges={net.n_edges}")
    cases = {
        "grow": lambda: grow(cfg).out_targets,
        "cd_arrays(cw=5)": lambda: np.concatenate(cd_arrays(net, 5)[1:]),
        "rewire(1 swap/edge)": lambda: rewire(net, RewireConfig(swaps_per_edge=1, seed=3)).out_targets,
    }
    print(f"{'kernel':<22}{'cython s':>10}{'python s':>11}{'speedup':>9}  identical")
    for name, fn in cases.items():
        use(_ckernels)
        tc, oc = best_of(fn, args.repeat)
        use(_pykernels)
        tp, op = best_of(fn, 1)
        same = np.array_equal(oc, op)
        print(f"{name:<22}{tc:>10.4f}{tp:>11.4f}{tp / tc:>8.1f}x  {same}")
    use(_ckernels)


if __name__ == "__main__":
    main()
