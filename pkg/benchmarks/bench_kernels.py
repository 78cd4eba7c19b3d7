"""Compare the numba kernels against their numpy fallbacks.

    python3 benchmarks/bench_kernels.py [--n 20] [--repeat 5]

Prints one line per kernel with the best-of-``repeat`` time of each variant,
then times a full n-block solve with and without ``NOISYFB_DISABLE_NUMBA``.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from noisyfb import _kernels
from noisyfb.nblock import build_noisy_problem
from noisyfb.noise import MA1, White, covariance
from noisyfb.spectral import SpectralProblem

SOLVE_SNIPPET = """
import time, numpy as np
from noisyfb.nblock import NBlockProblem, noisy_feedback_bound
from noisyfb.noise import MA1, covariance
n = {n}
prob = NBlockProblem(covariance(MA1(0.1), n), 0.25 * np.eye(n), 10.0)
noisy_feedback_bound(NBlockProblem(covariance(MA1(0.1), 2), 0.25 * np.eye(2), 10.0))
t0 = time.perf_counter()
sol = noisy_feedback_bound(prob)
print(f"{{time.perf_counter() - t0:.3f}} {{sol.value_bits:.12f}}")
"""


def best_of(fn, repeat):
    fn()  # warm-up (and numba compilation)
    number = max(1, int(0.2 / max(timeit.timeit(fn, number=1), 1e-6)))
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def kernel_cases(n):
    prob, _ = build_noisy_problem(covariance(MA1(0.1), n), covariance(White(0.25), n), 10.0)
    m = prob.lmi
    rng = np.random.default_rng(0)
    A = rng.standard_normal((m.dim_out, m.dim_out))
    W = A @ A.T / m.dim_out
    yield "logdet_hessian", "logdet_hessian", (W, m.rows, m.cols, m.vals, m.coords, m.x_dim)

    floor = rng.uniform(0.1, 10.0, 2049)
    weights = np.full(floor.size, 1.0 / floor.size)
    yield "waterfill_level", "waterfill_level", (floor, weights, 5.0)

    sp = SpectralProblem(MA1(0.1).psd(), White(0.04).psd(), 10.0)
    b = rng.uniform(-0.1, 0.1, sp.taps)
    yield "spectral_score", "spectral_score", (b, sp.cos_tab, sp.sin_tab, sp.s_w, sp.s_v, sp.weights, sp.P)


def solve_time(n, disable):
    env = dict(os.environ, NOISYFB_DISABLE_NUMBA="1" if disable else "0")
    out = subprocess.run(
        [sys.executable, "-c", SOLVE_SNIPPET.format(n=n)], env=env, capture_output=True, text=True, check=True
    )
    seconds, value = out.stdout.split()
    return float(seconds), value


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--n", type=int, default=20, help="block length for the Hessian and solve cases")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    if not _kernels.HAS_NUMBA:
        print("numba is unavailable (or disabled); nothing to compare")
        return 1

    print(f"{'kernel':<18}{'numpy [ms]':>12}{'numba [ms]':>12}{'speed-up':>10}")
    for label, name, call_args in kernel_cases(args.n):
        t_np = best_of(lambda: getattr(_kernels, f"{name}_numpy")(*call_args), args.repeat)
        t_nb = best_of(lambda: getattr(_kernels, f"{name}_numba")(*call_args), args.repeat)
        print(f"{label:<18}{1e3 * t_np:>12.3f}{1e3 * t_nb:>12.3f}{t_np / t_nb:>10.1f}")

    s_np, v_np = solve_time(args.n, disable=True)
    s_nb, v_nb = solve_time(args.n, disable=False)
    print(f"\nn={args.n} noisy-feedback solve: numpy {s_np:.2f} s, numba {s_nb:.2f} s")
    print(f"bound (bits): numpy {v_np}, numba {v_nb}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
