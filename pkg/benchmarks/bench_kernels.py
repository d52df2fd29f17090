"""Compare the compiled and numpy trigonometric-polynomial kernels.

Usage::

    python benchmarks/bench_kernels.py [--repeat 5]

Times batch evaluation (the separation grid) and the value/gradient/Hessian
kernel (Newton refinement) on the same inputs for both backends, checks that
they agree, and prints the speed-up.
"""

import argparse
import timeit

import numpy as np

from shiftforge import kernels
from shiftforge.freqset import from_points, from_xi_plus, product
from shiftforge.trigpoly import TrigPoly, grid_shape, _cell_grid

CASES = {
    "d=1, Xi+={1..10}": from_xi_plus(1, list(range(1, 11))),
    "d=2, {-2..2}x{-3..3}": product([from_points(1, range(-2, 3)), from_points(1, range(-3, 4))]),
    "d=3, {-1,0,1}^3": product([from_points(1, [-1, 0, 1])] * 3),
}


def bench_case(name, freqs, repeat, rng):
    f = TrigPoly.from_vector(freqs, rng.standard_normal(len(freqs)))
    _, points = _cell_grid(grid_shape(freqs))
    pts = np.ascontiguousarray(points)
    xi, c0, x, y = f.freqs.xi_plus_array(), f.c0, f.cosc, f.sinc
    starts = rng.uniform(-0.5, 0.5, (200, freqs.dim))
    rows = []
    results = {}
    for label, mod in (("python", kernels.python_backend), ("cython", kernels.compiled_backend)):
        if mod is None:
            continue
        grid_t = min(timeit.repeat(lambda: mod.eval_points(pts, xi, c0, x, y), number=1, repeat=repeat))
        newton_t = min(timeit.repeat(lambda: [mod.eval_derivatives(p, xi, c0, x, y) for p in starts],
                                     number=1, repeat=repeat))
        results[label] = (mod.eval_points(pts, xi, c0, x, y), mod.eval_derivatives(starts[0], xi, c0, x, y))
        rows.append((label, grid_t, newton_t))
    print(f"{name}: {pts.shape[0]} grid points, {len(freqs.xi_plus)} harmonics")
    for label, grid_t, newton_t in rows:
        print(f"  {label:7s} grid {grid_t * 1e3:9.3f} ms   200x derivatives {newton_t * 1e3:9.3f} ms")
    if len(rows) == 2:
        (_, pg, pn), (_, cg, cn) = rows
        diff = np.max(np.abs(results["python"][0] - results["cython"][0]))
        print(f"  speed-up grid x{pg / cg:.1f}, derivatives x{pn / cn:.1f}, max |difference| {diff:.2e}")


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    print(f"active backend: {kernels.BACKEND_NAME}")
    if kernels.compiled_backend is None:
        print("compiled extension not built; only the numpy kernels are timed")
    rng = np.random.default_rng(0)
    for name, freqs in CASES.items():
        bench_case(name, freqs, args.repeat, rng)


if __name__ == "__main__":
    main()
