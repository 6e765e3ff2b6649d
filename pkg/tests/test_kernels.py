"""Compiled kernels and the numpy fallback against dense embeddings."""
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import embed, random_unitary
from vqm import _kernels_py, kernels
from vqm.matkernel import random_density_matrix

BACKENDS = [pytest.param(_kernels_py, id="python")]
try:
    from vqm import _kernels

    BACKENDS.append(pytest.param(_kernels, id="cython"))
except ImportError:  # pragma: no cover
    pass

case = st.integers(1, 5).flatmap(lambda n: st.tuples(st.just(n), st.integers(0, n - 1), st.integers(0, 2**31 - 1)))


def test_backend_flag():
    assert kernels.BACKEND in ("cython", "python")


@pytest.mark.parametrize("impl", BACKENDS)
@settings(max_examples=40, deadline=None)
@given(case, st.integers(1, 3))
def test_apply_1q(impl, c, k):
    n, q, seed = c
    rng = np.random.default_rng(seed)
    u = random_unitary(rng)
    states = rng.normal(size=(2**n, k)) + 1j * rng.normal(size=(2**n, k))
    ref = embed(u, q, n) @ states
    impl.apply_1q(states, np.ascontiguousarray(u), q, n)
    assert np.max(np.abs(states - ref)) < 1e-12


@pytest.mark.parametrize("impl", BACKENDS)
@settings(max_examples=40, deadline=None)
@given(case)
def test_apply_1q_dm(impl, c):
    n, q, seed = c
    rng = np.random.default_rng(seed)
    u = random_unitary(rng)
    rho = random_density_matrix(n, rng)
    big = embed(u, q, n)
    ref = big @ rho @ big.conj().T
    impl.apply_1q_dm(rho, np.ascontiguousarray(u), q, n)
    assert np.max(np.abs(rho - ref)) < 1e-12


@pytest.mark.parametrize("impl", BACKENDS)
@settings(max_examples=40, deadline=None)
@given(case, st.integers(1, 4))
def test_apply_kraus_1q(impl, c, nk):
    n, q, seed = c
    rng = np.random.default_rng(seed)
    kraus = rng.normal(size=(nk, 2, 2)) + 1j * rng.normal(size=(nk, 2, 2))
    rho = random_density_matrix(n, rng)
    ref = sum(embed(k, q, n) @ rho @ embed(k, q, n).conj().T for k in kraus)
    before = rho.copy()
    out = impl.apply_kraus_1q(rho, kraus, q, n)
    assert np.max(np.abs(out - ref)) < 1e-12
    assert np.array_equal(rho, before)


@pytest.mark.parametrize("impl", BACKENDS)
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 16), st.integers(1, 4))
def test_cfim(impl, seed, m, d):
    rng = np.random.default_rng(seed)
    p = rng.random(m)
    p[rng.random(m) < 0.2] = 0.0
    dp = rng.normal(size=(d, m))
    ref = np.zeros((d, d))
    for j in range(m):
        if p[j] >= 1e-12:
            ref += np.outer(dp[:, j], dp[:, j]) / p[j]
    out = impl.cfim(np.ascontiguousarray(p), np.ascontiguousarray(dp), 1e-12)
    assert np.allclose(out, ref, rtol=1e-12, atol=1e-12)
    assert np.array_equal(out, out.T)


def test_backends_agree_end_to_end():
    """A full bundle evaluation gives the same numbers under either backend."""
    import json
    import os
    import subprocess
    import sys

    code = (
        "import json, numpy as np\n"
        "from vqm import BACKEND\n"
        "from vqm.channel import NoiseModel\n"
        "from vqm.train import make_pipeline\n"
        "p = make_pipeline('squeezing', 3, 1, 1, noise=NoiseModel('dephasing', lam=0.3))\n"
        "b = p.bundle(p.random_point(np.random.default_rng(1)))\n"
        "print(json.dumps([BACKEND, b.F.tolist(), b.Q.tolist()]))\n"
    )
    out = {}
    for flag in ("1", "0"):
        env = dict(os.environ, VQM_PURE_PYTHON=flag)
        res = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
        backend, F, Q = json.loads(res.stdout)
        out[flag] = (np.array(F), np.array(Q))
        if flag == "1":
            assert backend == "python"
    assert np.allclose(out["0"][0], out["1"][0], atol=1e-10)
    assert np.allclose(out["0"][1], out["1"][1], atol=1e-10)
