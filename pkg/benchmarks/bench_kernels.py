"""Compare the numba and numpy propagation kernels on exhaustive simulation.

    python benchmarks/bench_kernels.py [--inputs 20] [--gates 200] [--repeat 5]

Both kernels run on the same compiled netlist and stimulus; results are
checked for bit equality before timings are reported.
"""
import argparse
import time

import numpy as np

from phgen import _kernels
from phgen.netlist import compile_netlist, random_netlist


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--inputs", type=int, default=20)
    ap.add_argument("--gates", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    nl = random_netlist(args.inputs, args.gates, 8, seed=args.seed)
    comp = compile_netlist(nl)
    n_words = ((1 << args.inputs) + 63) // 64
    base = np.zeros((comp.n_nets, n_words), dtype=np.uint64)
    base[: args.inputs] = _kernels.input_words_numpy(args.inputs, n_words)
    print(f"netlist: {args.inputs} inputs, {args.gates} gates, {1 << args.inputs} patterns ({n_words} words)")

    t_np, ref = best_of(lambda: _kernels.propagate_numpy(comp.ops, comp.fanin, base.copy()), args.repeat)
    print(f"numpy : {t_np * 1e3:9.2f} ms")
    if not _kernels.HAVE_NUMBA:
        print("numba : unavailable (PHGEN_DISABLE_NUMBA set or numba missing)")
        return
    t0 = time.perf_counter()
    _kernels.propagate_numba(comp.ops, comp.fanin, base.copy())
    print(f"numba first call (incl. JIT/cache load): {(time.perf_counter() - t0) * 1e3:.1f} ms")
    t_nb, got = best_of(lambda: _kernels.propagate_numba(comp.ops, comp.fanin, base.copy()), args.repeat)
    assert np.array_equal(ref, got), "kernels disagree"
    print(f"numba : {t_nb * 1e3:9.2f} ms  (speedup x{t_np / t_nb:.1f})")


if __name__ == "__main__":
    main()
