"""Compare the compiled and numpy backends on the three hot loops.

    python3 benchmarks/bench_kernels.py [--x-res 24] [--repeat 3]

Prints wall time per backend, the speed-up, and the largest relative
difference between the two results.
"""
import argparse
import time

import numpy as np

from carnot_nonlocal import kernels
from carnot_nonlocal.fields import ball_indicator, bump
from carnot_nonlocal.functionals import NonlocalContext, x_grid
from carnot_nonlocal.groups import heisenberg
from carnot_nonlocal.mollifiers import ball_profile
from carnot_nonlocal.norms import koranyi
from carnot_nonlocal.quad import sphere_rule


def timed(fn, repeat):
    best, out = float("inf"), None
    for _ in range(repeat):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def rel_diff(a, b):
    a, b = np.asarray(a, dtype=float), np.asarray(b, dtype=float)
    return float(np.max(np.abs(a - b)) / max(np.max(np.abs(b)), 1e-300))


def main():
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--x-res", type=int, default=24)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    if "cython" not in kernels.available_backends():
        print("compiled extension not built; only the python backend is available")
        return

    G = heisenberg()
    N = koranyi(G)
    f = bump(G, None, 1.0)
    ctx = NonlocalContext(G, N, ball_profile(G, N, 0.25), 2.0, n_radial=8, sphere_resolution=16)
    X = np.concatenate(list(x_grid(ctx, f, args.x_res).chunks()))
    rule = ctx.rho_rule
    H, w = rule.points, rule.weights
    wv = 4 * w[:, None] * rule.gradN / rule.radii[:, None]

    Xb = X[: len(X) // 4]
    ind = ball_indicator(G, N, None, 1.0)
    dirs = sphere_rule(G, N, 16)
    W = np.ones((len(dirs), G.m1))
    wa = np.ones((len(dirs), 2))

    cases = {
        "pair_sums": lambda b: kernels.pair_sums(G, f, X, H, wv, w, w, 2.0, backend=b)[1],
        "grad_sums": lambda b: kernels.grad_sums(G, f, X, H, w, backend=b),
        "step_crossings": lambda b: kernels.step_crossings(
            G, N, np.zeros(3), 1.0, Xb, dirs.points, 0.0, 0.25, 1.0, W, wa, backend=b)[0],
    }
    print(f"x nodes {len(X)}, h nodes {len(H)}, threads {kernels.num_threads()}")
    print(f"{'kernel':<16}{'cython s':>12}{'python s':>12}{'speed-up':>10}{'rel diff':>12}")
    for name, run in cases.items():
        tc, rc = timed(lambda: run("cython"), args.repeat)
        tp, rp = timed(lambda: run("python"), args.repeat)
        print(f"{name:<16}{tc:>12.4f}{tp:>12.4f}{tp / tc:>10.1f}{rel_diff(rc, rp):>12.2e}")


if __name__ == "__main__":
    main()
