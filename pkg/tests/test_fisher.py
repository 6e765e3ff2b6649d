import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from helpers import dense_expm, random_hermitian
from vqm import fisher as fi
from vqm.ansatz import povm_from
from vqm.channel import EncodingConfig, NoiseModel
from vqm.errors import DegenerateBound, SingularInfoWarning
from vqm.matkernel import SZ, ghz_state, projector, random_density_matrix, random_state
from vqm.train import make_pipeline

PLUS = np.array([1, 1]) / np.sqrt(2)
MINUS = np.array([1, -1]) / np.sqrt(2)
X_BASIS = np.array([projector(PLUS), projector(MINUS)])


def x_basis_oracle(phi_z, s):
    """|+> probe, phase exp(-i phi_z Z / 2), X measurement: p_+ = cos^2(phi_z / 2)."""
    enc = EncodingConfig(phi=(0.0, 0.0, phi_z), t=0.5, n_qubits=1)
    dp = fi.dprob_dphi(projector(PLUS), X_BASIS, enc, NoiseModel(), s, axes=(2,))
    exact = np.array([[-0.5 * np.sin(phi_z), 0.5 * np.sin(phi_z)]])
    return enc, dp, exact


def collective(op, n):
    out = np.zeros((2**n, 2**n), dtype=complex)
    for k in range(n):
        mats = [np.eye(2)] * n
        mats[k] = op
        term = np.ones((1, 1))
        for m in mats:
            term = np.kron(term, m)
        out += term
    return out


def random_pure_family(rng, n, d=3):
    """psi(phi) = exp(-i sum phi_k H_k) psi0 at phi = 0 with analytic derivatives."""
    psi = random_state(n, rng)
    hs = [random_hermitian(rng, 2**n) for _ in range(d)]
    rho = projector(psi)
    dpsi = np.array([-1j * h @ psi for h in hs])
    drho = [-1j * (h @ rho - rho @ h) for h in hs]
    return psi, rho, dpsi, drho


# -- probabilities and finite differences -----------------------------------


def test_probability_examples():
    a = make_pipeline("star", 3, 1, 1).povm
    e0 = povm_from(a, np.zeros(a.n_params))
    p = fi.probabilities(projector(np.eye(8)[0]), e0)
    assert np.allclose(p, np.eye(8)[0])
    assert np.allclose(fi.probabilities(np.eye(8) / 8, povm_from(a, np.ones(a.n_params))), 1 / 8)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_probabilities_normalised(seed):
    rng = np.random.default_rng(seed)
    a = make_pipeline("ring", 3, 1, 1).povm
    p = fi.probabilities(random_density_matrix(3, rng), povm_from(a, a.random_params(rng)))
    assert abs(p.sum() - 1) < 1e-10 and p.min() >= -1e-12


def test_no_information_at_zero_time():
    enc = EncodingConfig(t=0.0, n_qubits=2)
    rho = random_density_matrix(2, np.random.default_rng(0))
    assert not np.any(fi.drho_dphi(rho, enc, NoiseModel("dephasing", lam=0.3)))


@pytest.mark.parametrize("phi_z", [0.4, 1.1, 2.5])
def test_single_qubit_derivative_oracle(phi_z):
    s = 0.01
    _, dp, exact = x_basis_oracle(phi_z, s)
    assert np.max(np.abs(dp - exact)) < 2 * s**2


def test_second_order_convergence():
    _, dp1, exact = x_basis_oracle(1.1, 1e-2)
    _, dp2, _ = x_basis_oracle(1.1, 5e-3)
    ratio = np.max(np.abs(dp1 - exact)) / np.max(np.abs(dp2 - exact))
    assert 3.6 < ratio < 4.4


@pytest.mark.parametrize("phi_z", [0.4, 1.1, 2.5])
def test_single_qubit_cfim_is_one(phi_z):
    enc, dp, _ = x_basis_oracle(phi_z, 0.01)
    p = fi.probabilities(fi.encoded_family(projector(PLUS), enc, NoiseModel(), 0.01, axes=(2,))[0], X_BASIS)
    assert abs(fi.cfim(p, dp)[0, 0] - 1) < 1e-4


# -- CFIM -------------------------------------------------------------------


def test_cfim_zero_derivatives():
    assert not fi.cfim(np.full(4, 0.25), np.zeros((3, 4))).any()


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_cfim_outcome_refinement(seed):
    rng = np.random.default_rng(seed)
    p = rng.random(8)
    p /= p.sum()
    dp = rng.normal(size=(3, 8))
    dp -= dp.mean(axis=1, keepdims=True)
    split_p = np.repeat(p / 2, 2)
    split_dp = np.repeat(dp / 2, 2, axis=1)
    assert np.allclose(fi.cfim(split_p, split_dp), fi.cfim(p, dp), rtol=1e-12, atol=1e-12)
    f = fi.cfim(p, dp)
    assert np.linalg.eigvalsh(f).min() >= -1e-10


def test_cfim_floor_skips_outcomes():
    p = np.array([0.5, 0.5, 1e-13])
    dp = np.array([[1.0, -1.0, 5.0]])
    assert fi.cfim(p, dp)[0, 0] == pytest.approx(4.0)


# -- QFIM -------------------------------------------------------------------


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_ghz_qfim_heisenberg(n):
    rho = projector(ghz_state(n))
    g = collective(SZ / 2, n)
    drho = -1j * (g @ rho - rho @ g)
    assert abs(fi.qfim(rho, [drho])[0, 0] - n**2) < 1e-6
    assert abs(fi.qfim_from_slds(rho, fi.sld_set(rho, [drho]))[0, 0] - n**2) < 1e-6


def test_qfim_zero_derivative():
    rho = random_density_matrix(2, np.random.default_rng(0))
    assert np.allclose(fi.qfim(rho, [np.zeros((4, 4))] * 3), 0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1), st.integers(1, 3))
def test_qfim_routes_agree_on_pure_states(seed, n):
    psi, rho, dpsi, drho = random_pure_family(np.random.default_rng(seed), n)
    q_vec = fi.qfim(rho, drho)
    q_sld = fi.qfim_from_slds(rho, fi.sld_set(rho, drho))
    q_pure = fi.qfim_pure(psi, dpsi)
    assert np.max(np.abs(q_vec - q_pure)) < 1e-6
    assert np.max(np.abs(q_sld - q_pure)) < 1e-6
    assert np.allclose(q_vec, q_vec.T) and np.linalg.eigvalsh(q_vec).min() > -1e-8


def test_qfim_routes_agree_on_mixed_states():
    rng = np.random.default_rng(5)
    rho = random_density_matrix(2, rng)
    hs = [random_hermitian(rng, 4) for _ in range(3)]
    drho = [-1j * (h @ rho - rho @ h) for h in hs]
    assert np.allclose(fi.qfim(rho, drho), fi.qfim_from_slds(rho, fi.sld_set(rho, drho)), atol=1e-8)


def test_qfim_against_finite_difference_of_evolution():
    rng = np.random.default_rng(6)
    psi0 = random_state(2, rng)
    enc = EncodingConfig(phi=(0.3, 0.5, -0.2), t=0.7, n_qubits=2)

    def state(phi):
        h = sum(c * collective(p, 2) for c, p in zip(phi, fi_paulis()))
        return dense_expm(h, enc.t) @ psi0

    eps = 1e-6
    dpsi = np.array([(state(np.add(enc.phi, eps * e)) - state(np.subtract(enc.phi, eps * e))) / (2 * eps)
                     for e in np.eye(3)])
    q_pure = fi.qfim_pure(state(enc.phi), dpsi)
    rho, plus, minus = fi.encoded_family(projector(psi0), enc, NoiseModel(), 1e-4)
    q_vec = fi.qfim(rho, [(a - b) / 2e-4 for a, b in zip(plus, minus)])
    assert np.allclose(q_vec, q_pure, atol=1e-6)


def fi_paulis():
    from vqm.matkernel import PAULIS

    return PAULIS


def test_sld_residual_and_hermiticity():
    rng = np.random.default_rng(7)
    rho = random_density_matrix(3, rng)
    hs = [random_hermitian(rng, 8) for _ in range(3)]
    drho = [-1j * (h @ rho - rho @ h) for h in hs]
    for d, L in zip(drho, fi.sld_set(rho, drho)):
        assert np.max(np.abs(L - L.conj().T)) < 1e-9
        assert np.max(np.abs(2 * d - (L @ rho + rho @ L))) < 1e-6


def test_weak_commutativity():
    rng = np.random.default_rng(8)
    rho = random_density_matrix(2, rng)
    h = random_hermitian(rng, 4)
    slds = fi.sld_set(rho, [-1j * (h @ rho - rho @ h)])
    assert np.array_equal(fi.weak_commutativity(rho, slds), np.zeros((1, 1)))
    hs = [random_hermitian(rng, 4) for _ in range(3)]
    w = fi.weak_commutativity(rho, fi.sld_set(rho, [-1j * (g @ rho - rho @ g) for g in hs]))
    assert np.allclose(w, -w.T, atol=1e-12)


# -- bounds and costs -------------------------------------------------------


def test_bound_examples():
    eye = np.eye(3)
    assert fi.bound_cf(eye) == pytest.approx(3) and fi.bound_cs(eye) == pytest.approx(3)
    assert fi.tradeoff(eye, eye) == pytest.approx(3)
    assert fi.bound_cf(np.diag([1.0, 2.0, 4.0])) == pytest.approx(1.75)
    assert fi.tradeoff(np.diag([1.0, 2.0]), np.diag([2.0, 2.0])) == pytest.approx(1.5)


def test_singular_bound_warns():
    with pytest.warns(SingularInfoWarning):
        assert fi.bound_cf(np.diag([1.0, 0.0, 2.0])) == pytest.approx(1.5)
    with pytest.warns(SingularInfoWarning):
        fi.bound_cs(np.zeros((2, 2)))


def test_relative_cost():
    f = np.diag([1.0, 2.0, 4.0])
    assert fi.cost_relative(f, f) == pytest.approx(0.0, abs=1e-15)
    assert fi.cost_relative(np.diag([1.0, 1.0]), np.diag([2.0, 2.0])) == pytest.approx(0.5)
    assert fi.cost_relative(np.diag([1.0, 0.0, 1.0]), np.eye(3)) == 1.0
    with pytest.raises(DegenerateBound):
        fi.cost_relative(np.zeros((3, 3)), np.eye(3))


def test_tradeoff_cost():
    q = np.diag([2.0, 2.0, 2.0])
    assert fi.cost_tradeoff(q, q, 3) == pytest.approx(0.0)
    assert fi.cost_tradeoff(np.diag([1.0, 2.0, 0.0]), np.diag([2.0, 2.0, 1.0]), 3) == pytest.approx(0.5)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_tradeoff_zero_cost_means_unit_ratios(seed):
    rng = np.random.default_rng(seed)
    q = np.diag(rng.uniform(0.5, 3.0, 3))
    ratios = rng.uniform(0.1, 1.0, 3)
    f = q * ratios
    cost = fi.cost_tradeoff(f, q, 3)
    assert cost == pytest.approx(1 - ratios.mean())
    assert (cost < 1e-12) == bool(np.all(ratios > 1 - 1e-12))
    assert fi.cost_tradeoff(q, q, 3) == pytest.approx(0.0, abs=1e-14)


def test_norm2_cost():
    f = np.diag([1.0, 2.0, 3.0])
    assert fi.cost_norm2(f, f) == 0.0
    assert fi.cost_norm2(np.diag([3.0, -4.0, 0.0]), np.zeros((3, 3))) == pytest.approx(4.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**31 - 1))
def test_norm2_matches_eig_route(seed):
    rng = np.random.default_rng(seed)
    a = rng.normal(size=(3, 3))
    b = rng.normal(size=(3, 3))
    f, q = a + a.T, b + b.T
    diff = f - q
    ref = np.sqrt(np.linalg.eigvalsh(diff.T @ diff).max())
    assert fi.cost_norm2(f, q) == pytest.approx(ref, rel=1e-12)


def test_cf_cost():
    assert fi.cost_cf_only(np.eye(3)) == pytest.approx(3)
    f = np.diag([1.0, 2.0, 4.0])
    assert fi.cost_cf_only(f) == pytest.approx(1.75)
    assert fi.cost_cf_only(2 * f) == pytest.approx(0.875)


def _random_pd(rng, d=3):
    a = rng.normal(size=(d, d))
    return a @ a.T + 0.5 * np.eye(d)


@pytest.mark.parametrize("kind", fi.COST_KINDS)
def test_cost_matrix_gradient_matches_numeric(kind):
    rng = np.random.default_rng(9)
    F, Q = _random_pd(rng), _random_pd(rng) + 3 * np.eye(3)
    g_f, g_q = fi.cost_matrix_gradient(kind, F, Q)
    dF, dQ = rng.normal(size=(3, 3)), rng.normal(size=(3, 3))
    dF, dQ = dF + dF.T, dQ + dQ.T
    h = 1e-6
    num = (fi.cost_value(kind, F + h * dF, Q + h * dQ) - fi.cost_value(kind, F - h * dF, Q - h * dQ)) / (2 * h)
    assert np.sum(g_f * dF) + np.sum(g_q * dQ) == pytest.approx(num, rel=1e-6, abs=1e-8)


def test_norm2_gradient_finite_at_equality():
    f = np.eye(3)
    g_f, g_q = fi.cost_matrix_gradient("norm2", f, f)
    assert np.all(np.isfinite(g_f)) and np.all(np.isfinite(g_q))


def test_bundle_consistency():
    rng = np.random.default_rng(10)
    F, Q = _random_pd(rng), _random_pd(rng)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        b = fi.bundle_from_matrices(F, Q, "relative")
    assert b.C_F == pytest.approx(np.trace(np.linalg.inv(F)))
    assert b.C_S == pytest.approx(np.trace(np.linalg.inv(Q)))
    assert b.T == pytest.approx(np.trace(F @ np.linalg.inv(Q)))
    assert b.cost == pytest.approx(1 - b.C_S / b.C_F)
    assert not b.singular_F and not b.singular_Q


# -- information inequality --------------------------------------------------


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31 - 1), st.sampled_from([2, 3]), st.floats(0, 0.9))
def test_information_inequality(seed, n, lam):
    pipe = make_pipeline("star", n, 1, 1, noise=NoiseModel("dephasing", lam=lam))
    b = pipe.bundle(pipe.random_point(np.random.default_rng(seed)))
    assert np.allclose(b.F, b.F.T, atol=1e-9) and np.allclose(b.Q, b.Q.T, atol=1e-9)
    assert np.linalg.eigvalsh(b.Q - b.F).min() >= -1e-8
    assert b.C_F >= b.C_S - 1e-8
    assert b.T <= 3 + 1e-8


def test_pipeline_matches_fisher_bundle():
    pipe = make_pipeline("ring", 3, 1, 1, noise=NoiseModel("dephasing", lam=0.2))
    x = pipe.random_point(np.random.default_rng(11))
    theta, mu = pipe.split(x)
    ref = fi.fisher_bundle(projector(pipe.probe(theta)), povm_from(pipe.povm, mu), pipe.enc, pipe.noise)
    b = pipe.bundle(x)
    assert np.allclose(b.F, ref.F, atol=1e-12) and np.allclose(b.Q, ref.Q, atol=1e-12)
    assert b.cost == pytest.approx(ref.cost, abs=1e-12)
