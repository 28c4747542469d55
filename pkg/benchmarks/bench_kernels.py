"""Compiled vs pure-Python gate kernels.

    python benchmarks/bench_kernels.py --n 16 18 20 --repeat 5
"""
import argparse
import timeit

import numpy as np

from nisqcrypt import _kernels_py
from nisqcrypt.circuits import CZ, H

try:
    from nisqcrypt import _kernels
except ImportError:
    _kernels = None


def _brick():
    return np.ascontiguousarray(CZ @ np.kron(H, H), dtype=np.complex128)


def bench(mod, n: int, repeat: int) -> dict:
    rng = np.random.default_rng(0)
    psi = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    psi /= np.linalg.norm(psi)
    u1 = np.ascontiguousarray(H, dtype=np.complex128)
    u2 = _brick()
    q = n // 2
    out = {}
    out["apply_1q"] = min(timeit.repeat(lambda: mod.apply_1q(psi, u1, q), number=1, repeat=repeat))
    out["apply_2q"] = min(timeit.repeat(lambda: mod.apply_2q(psi, u2, q, q - 1), number=1, repeat=repeat))
    out["zero_probability"] = min(timeit.repeat(lambda: mod.zero_probability(psi), number=1, repeat=repeat))
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, nargs="+", default=[12, 16, 20])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; only the fallback is timed")
    print(f"{'n':>3} {'kernel':<17} {'python ms':>10} {'compiled ms':>12} {'speedup':>8}")
    for n in args.n:
        py = bench(_kernels_py, n, args.repeat)
        cy = bench(_kernels, n, args.repeat) if _kernels is not None else {}
        for name, t_py in py.items():
            t_cy = cy.get(name)
            if t_cy is None:
                print(f"{n:>3} {name:<17} {t_py * 1e3:>10.3f} {'-':>12} {'-':>8}")
            else:
                print(f"{n:>3} {name:<17} {t_py * 1e3:>10.3f} {t_cy * 1e3:>12.3f} {t_py / t_cy:>7.1f}x")


if __name__ == "__main__":
    main()
