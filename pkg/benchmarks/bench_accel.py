"""Compare the numba kernels with the pure-numpy fallback.

Run with ``python3 benchmarks/bench_accel.py``. Each hot path is timed
with both implementations in this process, then an end-to-end VQD solve
is timed in subprocesses with and without ``LIPKIN_GCM_DISABLE_JIT=1``.
"""

import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from lipkin_gcm import _accel, qsim

END_TO_END = """
import time
from lipkin_gcm import assemble_many_body, estimate_one_body, make_grid, LipkinParams, EstimatorConfig, VqdConfig, gcm_vqd
mb = assemble_many_body(estimate_one_body(make_grid(9), EstimatorConfig()), LipkinParams(8, 1.0, 1.0))
gcm_vqd(mb, VqdConfig(restarts=1, n_states=1))  # compile
t = time.perf_counter()
gcm_vqd(mb, VqdConfig(bound=3.0))
print(time.perf_counter() - t)
"""


def best_of(fn, number, repeat=5):
    return min(timeit.repeat(fn, number=number, repeat=repeat)) / number


def hermitian_tables(rng, L):
    out = []
    for _ in range(4):
        a = rng.normal(size=(L, L)) + 1j * rng.normal(size=(L, L))
        out.append(np.ascontiguousarray(0.5 * (a + a.conj().T)))
    return out


def cases(L):
    rng = np.random.default_rng(0)
    t = hermitian_tables(rng, L)
    a = rng.normal(size=(9, 9))
    h = 0.5 * (a + a.T)
    n = np.eye(9) + 0.1 * h @ h
    prev = np.ascontiguousarray(rng.normal(size=(4, 9)))
    betas = np.full(4, 80.0)
    f = rng.uniform(-1, 1, 9)
    b = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = b @ b.conj().T
    kraus = np.ascontiguousarray(qsim._noise_model(qsim.NoiseParams()).after_cnot)
    return {
        f"assemble L={L}": (
            lambda: _accel.assemble_numpy(*t, 8, 1.0, 1.0),
            lambda: _accel.assemble_numba(*t, 8, 1.0, 1.0),
            20,
        ),
        "vqd cost+grad L=9": (
            lambda: _accel.vqd_cost_grad_numpy(f, h, n, prev, betas, 80.0, 1e-7),
            lambda: _accel.vqd_cost_grad_numba(f, h, n, prev, betas, 80.0, 1e-7),
            2000,
        ),
        f"kraus ({len(kraus)} ops)": (
            lambda: _accel.apply_kraus_numpy(rho, kraus),
            lambda: _accel.apply_kraus_numba(rho, kraus),
            2000,
        ),
    }


def end_to_end(disable):
    env = dict(os.environ)
    env.pop("LIPKIN_GCM_DISABLE_JIT", None)
    if disable:
        env["LIPKIN_GCM_DISABLE_JIT"] = "1"
    out = subprocess.run([sys.executable, "-c", END_TO_END], env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip().splitlines()[-1])


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--grid-l", type=int, default=400, help="grid size for the assembly case")
    parser.add_argument("--skip-end-to-end", action="store_true")
    args = parser.parse_args(argv)
    if not _accel.HAVE_NUMBA:
        print("numba is not installed; nothing to compare")
        return 1
    print(f"{'case':24s} {'numpy':>12s} {'numba':>12s} {'speedup':>8s}")
    for name, (slow, fast, number) in cases(args.grid_l).items():
        fast()  # compile outside the timing
        t_np, t_nb = best_of(slow, number), best_of(fast, number)
        print(f"{name:24s} {t_np * 1e6:10.1f}us {t_nb * 1e6:10.1f}us {t_np / t_nb:7.1f}x")
    if not args.skip_end_to_end:
        t_np, t_nb = end_to_end(True), end_to_end(False)
        print(f"{'vqd solve N=8 L=9':24s} {t_np * 1e3:10.1f}ms {t_nb * 1e3:10.1f}ms {t_np / t_nb:7.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
