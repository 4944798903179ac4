"""Compare the compiled and numpy Hankel backends.

Times ``hankel01`` on argument sets drawn from each evaluation regime and
on the mode sum that dominates remainder-kernel evaluation in 2D.

    python3 benchmarks/bench_backends.py [--size 200000] [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from tpstokes import Params
from tpstokes._backend import available_backends


def argument_sets(size, rng):
    angles = rng.uniform(0.0, np.pi, size)
    sets = {}
    for name, (lo, hi) in {"series |z|<1.5": (1e-3, 1.5), "integral 1.5-20": (1.5, 20.0),
                           "asymptotic >20": (20.0, 200.0)}.items():
        sets[name] = rng.uniform(lo, hi, size) * np.exp(1j * angles)
    # arguments kappa_k r seen by the n=2 remainder kernel at r = 1
    p = Params(n=2)
    k = np.arange(1, size + 1)
    sets["mode sum kappa_k r"] = p.kappa(k) * 1.0
    return sets


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, default=200000)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    backends = available_backends()
    sets = argument_sets(args.size, np.random.default_rng(0))
    print(f"backends: {', '.join(backends)}; {args.size} arguments per set, best of {args.repeat}")
    print(f"{'set':<22}" + "".join(f"{b:>14}" for b in backends) + f"{'speedup':>10}{'max rel diff':>15}")
    for name, z in sets.items():
        times = {b: min(timeit.repeat(lambda f=f: f(z), number=1, repeat=args.repeat))
                 for b, f in backends.items()}
        line = f"{name:<22}" + "".join(f"{times[b] * 1e3:>12.2f}ms" for b in backends)
        if "compiled" in backends:
            ref = backends["python"](z)
            got = backends["compiled"](z)
            diff = max(np.max(np.abs(g - r) / np.abs(r)) for g, r in zip(got, ref))
            line += f"{times['python'] / times['compiled']:>9.2f}x{diff:>15.2e}"
        print(line)


if __name__ == "__main__":
    main()
