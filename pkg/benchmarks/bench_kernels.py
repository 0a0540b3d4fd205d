"""Compare the compiled kernel against the pure-Python twin.

Micro-benchmarks hit the three hot loops directly (simplex pivot, subset
sign evaluation, superadditivity screen); the end-to-end row times full
chamber enumeration in a fresh interpreter per backend, since the
backend is chosen at import.  Run from the repository root:

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import os
import random
import subprocess
import sys
import time
from fractions import Fraction


def _best_of(repeat, fn):
    best = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        dt = time.perf_counter() - t0
        best = dt if best is None else min(best, dt)
    return best


def _pivot_case(rng, rows, cols):
    tab = [[Fraction(rng.randint(-99, 99), rng.randint(1, 30))
            for _ in range(cols)] for _ in range(rows)]
    pivots = []
    for _ in range(40):
        r = rng.randrange(rows)
        c = rng.randrange(cols)
        if tab[r][c] == 0:
            tab[r][c] = Fraction(1, 3)
        pivots.append((r, c))
    return tab, pivots


def bench_pivot(kernel, repeat):
    rng = random.Random(11)
    tab, pivots = _pivot_case(rng, 24, 40)

    def run():
        work = [row[:] for row in tab]
        for r, c in pivots:
            if work[r][c]:
                kernel.pivot_step(work, r, c)

    return _best_of(repeat, run)


def bench_sign_eval(kernel, repeat):
    rng = random.Random(23)
    nums = [rng.randint(-10**6, 10**6) for _ in range(16)]
    masks = [rng.randrange(1, 1 << 16) for _ in range(20000)]
    return _best_of(repeat, lambda: kernel.sign_eval(masks, nums))


def bench_quick_check(kernel, repeat):
    rng = random.Random(37)
    k = 15
    quads = []
    for _ in range(600):
        quad = []
        for _ in range(4):
            idx = rng.randint(-1, k - 1)
            quad.extend((idx, 0 if idx < 0 else rng.choice((-1, 1))))
        quads.append(tuple(quad))
    patterns = [[rng.choice((-1, 1)) for _ in range(k)] for _ in range(2000)]

    def run():
        kept = 0
        for signs in patterns:
            if kernel.quick_check(signs, quads):
                kept += 1
        return kept

    return _best_of(repeat, run)


def bench_enumerate(pure, n, repeat):
    script = (
        "import time\n"
        "from shardcalc.ground import GroundSet, Partition\n"
        "from shardcalc.arrangement import enumerate_shards\n"
        "one = Partition.one_block(GroundSet.of_size(%d))\n"
        "t0 = time.perf_counter()\n"
        "shards = enumerate_shards(one)\n"
        "print(time.perf_counter() - t0, len(shards))\n" % n)
    env = dict(os.environ)
    env.pop("SHARDCALC_PURE", None)
    if pure:
        env["SHARDCALC_PURE"] = "1"
    best = None
    for _ in range(repeat):
        out = subprocess.run([sys.executable, "-c", script],
                             capture_output=True, text=True, env=env)
        if out.returncode != 0:
            raise RuntimeError(out.stderr)
        dt = float(out.stdout.split()[0])
        best = dt if best is None else min(best, dt)
    return best


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--repeat", type=int, default=5,
                        help="take the best of this many runs")
    args = parser.parse_args(argv)

    from shardcalc import _kernel_py
    try:
        from shardcalc import _kernel
    except ImportError:
        _kernel = None

    rows = []
    for name, bench in (("pivot_step", bench_pivot),
                        ("sign_eval", bench_sign_eval),
                        ("quick_check", bench_quick_check)):
        pure_t = bench(_kernel_py, args.repeat)
        if _kernel is not None:
            fast_t = bench(_kernel, args.repeat)
            rows.append((name, pure_t, fast_t))
        else:
            rows.append((name, pure_t, None))

    for n in (4, 5):
        pure_t = bench_enumerate(True, n, args.repeat)
        fast_t = None if _kernel is None \
            else bench_enumerate(False, n, args.repeat)
        rows.append(("enumerate n=%d" % n, pure_t, fast_t))

    print("%-16s %12s %12s %9s" % ("kernel", "pure", "compiled", "speedup"))
    for name, pure_t, fast_t in rows:
        if fast_t is None:
            print("%-16s %10.3fms %12s %9s"
                  % (name, pure_t * 1e3, "n/a", "n/a"))
        else:
            print("%-16s %10.3fms %10.3fms %8.2fx"
                  % (name, pure_t * 1e3, fast_t * 1e3, pure_t / fast_t))
    if _kernel is None:
        print("compiled kernel not built; showing pure timings only")
    return 0


if __name__ == "__main__":
    sys.exit(main())
