#!/usr/bin/env python3
"""Regenerates the Student-t reference tables used by the test suites.

Requires mpmath. Paired vectors are rebuilt from a splitmix64 stream, so
only seeds and reference p-values are stored; the Rust side regenerates the
same vectors bit for bit.

    python3 scripts/t_reference.py crates/core/tests/data
"""
import sys
from pathlib import Path

import mpmath as mp

mp.mp.dps = 60
MASK = (1 << 64) - 1

DFS = list(range(1, 11)) + [12, 15, 20, 25, 30, 40, 50, 75, 100, 150, 200, 300,
                            500, 750, 1000, 2000, 3000, 5000, 7500, 10000]
TS = [0.0, 0.001, 0.01, 0.05, 0.1, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0,
      2.262, 2.5, 3.0, 3.5, 4.0, 5.0, 6.0, 7.5, 10.0, 12.5, 15.0, 20.0, 25.0,
      30.0, 40.0, 50.0]
VECTORS = 1000
MASTER = 0x7E57_0000_0000_0001


class SplitMix64:
    def __init__(self, seed):
        self.state = seed & MASK

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)

    def unit(self):
        return (self.next() >> 11) * (1.0 / (1 << 53))


def paired_vector(seed):
    """Must match `paired_vector` in the Rust tests operation for operation."""
    g = SplitMix64(seed)
    n = 5 + g.next() % 196
    shift = (g.unit() - 0.5) * 0.1
    spread = 0.05 + g.unit()
    x = []
    y = []
    for _ in range(n):
        a = g.unit()
        b = a + shift + (g.unit() - 0.5) * spread
        x.append(a)
        y.append(b)
    return x, y


def two_tail(t, df):
    t = mp.mpf(t)
    if t == 0:
        return mp.mpf(1)
    nu = mp.mpf(df)
    return mp.betainc(nu / 2, mp.mpf(1) / 2, 0, nu / (nu + t * t), regularized=True)


def paired_p(x, y):
    # differences are taken in f64, exactly as the implementation does
    d = [mp.mpf(a - b) for a, b in zip(x, y)]
    n = len(d)
    mean = mp.fsum(d) / n
    var = mp.fsum((v - mean) ** 2 for v in d) / (n - 1)
    t = mean * mp.sqrt(n) / mp.sqrt(var)
    return two_tail(t, n - 1)


def main(out):
    out = Path(out)
    with open(out / "student_t_lattice.tsv", "w") as f:
        f.write("# two-sided Student t tail, mpmath betainc at 60 digits\n")
        f.write("df\tt\tp\n")
        for df in DFS:
            for t in TS:
                f.write(f"{df}\t{t!r}\t{mp.nstr(two_tail(t, df), 20, min_fixed=0, max_fixed=0)}\n")
    with open(out / "paired_t_reference.tsv", "w") as f:
        f.write("# two-sided paired t-test p-values, mpmath at 60 digits\n")
        f.write(f"# vectors from splitmix64, seed_i = master + i, master = {MASTER:#x}\n")
        f.write("seed\tn\tp\n")
        for i in range(VECTORS):
            seed = (MASTER + i) & MASK
            x, y = paired_vector(seed)
            p = paired_p(x, y)
            f.write(f"{seed}\t{len(x)}\t{mp.nstr(p, 20, min_fixed=0, max_fixed=0)}\n")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "crates/core/tests/data")
