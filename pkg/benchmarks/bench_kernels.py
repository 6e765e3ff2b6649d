"""Compare the compiled kernels with the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat 200]

Times each kernel on 3- and 5-qubit registers under both backends, then one
full cost evaluation of the star pipeline (N = 3, 2-2 layers, lambda = 0.1)
with each backend selected at import through ``VQM_PURE_PYTHON``.
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from vqm import _kernels_py

try:
    from vqm import _kernels as _kernels_c
except ImportError:
    _kernels_c = None

PIPELINE_SNIPPET = """
import numpy as np, timeit
from vqm import BACKEND
from vqm.channel import NoiseModel
from vqm.train import make_pipeline
pipe = make_pipeline("star", 3, 2, 2, noise=NoiseModel("dephasing", lam=0.1))
x = pipe.random_point(np.random.default_rng(0))
def run():
    pipe._cache.clear()
    pipe.cost(x)
n = {repeat}
print(BACKEND, timeit.timeit(run, number=n) / n)
"""


def kernel_cases(n, rng):
    dim = 2**n
    u = np.linalg.qr(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))[0]
    kraus = np.ascontiguousarray(np.stack([np.diag([np.sqrt(0.7), 1.0]), np.diag([np.sqrt(0.3), 0.0])]).astype(complex))
    rho = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = np.ascontiguousarray(rho @ rho.conj().T)
    states = np.ascontiguousarray(rng.normal(size=(dim, dim)) + 0j)
    p = rng.dirichlet(np.ones(dim))
    dp = np.ascontiguousarray(rng.normal(size=(3, dim)))
    return {
        "apply_1q": lambda k: k.apply_1q(states, u, n // 2, n),
        "apply_1q_dm": lambda k: k.apply_1q_dm(rho, u, n // 2, n),
        "apply_kraus_1q": lambda k: k.apply_kraus_1q(rho, kraus, n // 2, n),
        "cfim": lambda k: k.cfim(p, dp, 1e-12),
    }


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'N':>3}{'numpy [us]':>14}{'cython [us]':>14}{'speedup':>10}")
    for n in (3, 5):
        for name, fn in kernel_cases(n, rng).items():
            t_py = timeit.timeit(lambda: fn(_kernels_py), number=args.repeat) / args.repeat
            if _kernels_c is None:
                print(f"{name:<16}{n:>3}{t_py * 1e6:>14.2f}{'n/a':>14}{'':>10}")
                continue
            t_c = timeit.timeit(lambda: fn(_kernels_c), number=args.repeat) / args.repeat
            print(f"{name:<16}{n:>3}{t_py * 1e6:>14.2f}{t_c * 1e6:>14.2f}{t_py / t_c:>9.1f}x")
    print()
    print("pipeline cost evaluation (star, N=3, 2-2, lambda=0.1):")
    code = PIPELINE_SNIPPET.format(repeat=max(args.repeat // 4, 10))
    for pure in ("1", "0"):
        env = dict(os.environ, VQM_PURE_PYTHON=pure)
        out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        backend, secs = out.stdout.split()
        print(f"  {backend:<8} {float(secs) * 1e3:8.3f} ms")


if __name__ == "__main__":
    main()
