"""Compare the compiled and pure-Python catching-up kernels.

Usage: python3 benchmarks/bench_kernels.py [--stations N] [--repeat R]
"""

from __future__ import annotations

import argparse
import timeit

import numpy as np

from sweepplay import _kernels_py

try:
    from sweepplay import _kernels
except ImportError:  # extension not built
    _kernels = None


def cases(M: int):
    t = np.linspace(0.0, 4 * np.pi, M)
    U2 = np.c_[2 * np.cos(t), 2 * np.sin(t)]
    U3 = np.c_[U2, 0.5 * np.sin(3 * t)]
    s = 1 / np.sqrt(2)
    N = np.array([[0.0, -1.0], [s, s], [-s, s]])
    b = np.full(3, 0.5)
    return {
        "ball_3d": ("sweep_ball", (U3, np.zeros(3), 1.0, U3[0] - [1.0, 0, 0])),
        "box_2d": ("sweep_box", (U2, -np.ones(2) / 2, np.ones(2) / 2, U2[0] - [0.5, 0])),
        "halfspace_2d": ("sweep_halfspace", (U2, np.array([0.6, 0.8]), 0.3, U2[0])),
        "polyhedron_2d": ("sweep_polyhedron", (U2, N, b, U2[0], 1e-10, 10_000)),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--stations", type=int, default=20_000)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"{'kernel':<15}{'python [s]':>12}{'cython [s]':>12}{'speedup':>10}{'max |diff|':>13}")
    for name, (fn, a) in cases(args.stations).items():
        py = getattr(_kernels_py, fn)
        t_py = min(timeit.repeat(lambda: py(*a), number=1, repeat=args.repeat))
        out_py = py(*a)
        if _kernels is None:
            print(f"{name:<15}{t_py:>12.4f}{'n/a':>12}")
            continue
        cy = getattr(_kernels, fn)
        t_cy = min(timeit.repeat(lambda: cy(*a), number=1, repeat=args.repeat))
        out_cy = cy(*a)
        if isinstance(out_py, tuple):
            out_py, out_cy = out_py[0], out_cy[0]
        diff = float(np.max(np.abs(out_py - out_cy)))
        print(f"{name:<15}{t_py:>12.4f}{t_cy:>12.5f}{t_py / t_cy:>9.0f}x{diff:>13.2e}")


if __name__ == "__main__":
    main()
