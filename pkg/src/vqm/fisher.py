"""Fisher information, Cramér-Rao bound endpoints and training costs.

``C_F = Tr[W F^-1]`` is the classical bound of a given measurement and
``C_S = Tr[W Q^-1]`` the SLD quantum bound; ``W`` is the identity unless a
weight matrix is passed. Rank-deficient matrices are inverted with
:func:`vqm.matkernel.pinv` and flagged with :class:`SingularInfoWarning`.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels
from .channel import EncodingConfig, NoiseModel, evolve
from .errors import BadShape, DegenerateBound, SingularInfoWarning
from .matkernel import PINV_RTOL, eig_hermitian, pinv, rank, vec

PROB_FLOOR = 1e-12
DEFAULT_SHIFT = 0.01
COST_KINDS = ("relative", "tradeoff", "norm2", "cf")


@dataclass(frozen=True)
class FisherBundle:
    F: np.ndarray
    Q: np.ndarray
    C_F: float
    C_S: float
    T: float
    cost: float
    singular_F: bool = False
    singular_Q: bool = False


# -- probabilities and finite-difference derivatives ------------------------


def probabilities(rho: np.ndarray, povm: np.ndarray) -> np.ndarray:
    """``p_m = Tr[rho E_m]`` for a stacked POVM of shape (M, d, d)."""
    return np.einsum("mij,ji->m", np.asarray(povm), np.asarray(rho)).real


def clip_probabilities(p: np.ndarray) -> np.ndarray:
    return np.clip(p, 0.0, None)


def encoded_family(rho0, enc: EncodingConfig, noise: NoiseModel, s: float = DEFAULT_SHIFT, axes=(0, 1, 2)):
    """Final states at phi and at phi +- s along each axis.

    Returns ``(rho, plus, minus)`` with ``plus``/``minus`` lists aligned to ``axes``.
    """
    if s <= 0:
        raise BadShape(f"finite-difference shift must be > 0, got {s}")
    rho = evolve(rho0, enc, noise)
    plus = [evolve(rho0, enc.shifted(a, s), noise) for a in axes]
    minus = [evolve(rho0, enc.shifted(a, -s), noise) for a in axes]
    return rho, plus, minus


def support_derivatives(rho: np.ndarray, drho, tol: float = PINV_RTOL) -> list[np.ndarray]:
    """Drop the block of each ``d rho`` that lies in the kernel of ``rho``.

    A smooth family has no first-order weight there, so for rank-deficient
    states that block is pure finite-difference error. The QFIM pseudo-inverse
    already ignores it; removing it before the CFIM keeps both matrices built
    from the same derivative, which is what guarantees ``F <= Q``. Eigenvalue
    pairs are cut with the same relative threshold as the QFIM superoperator.
    """
    w, v = eig_hermitian(np.asarray(rho, dtype=complex))
    pair = w[:, None] + w[None, :]
    cut = pair <= tol * np.max(np.abs(pair), initial=0.0)
    if not cut.any():
        return [np.asarray(d, dtype=complex) for d in drho]
    out = []
    for d in drho:
        d_eig = v.conj().T @ d @ v
        d_eig[cut] = 0.0
        out.append(v @ d_eig @ v.conj().T)
    return out


def drho_dphi(rho0, enc: EncodingConfig, noise: NoiseModel, s: float = DEFAULT_SHIFT, axes=(0, 1, 2)):
    _, plus, minus = encoded_family(rho0, enc, noise, s, axes)
    return [(p - m) / (2 * s) for p, m in zip(plus, minus)]


def dprob_dphi(rho0, povm, enc: EncodingConfig, noise: NoiseModel, s: float = DEFAULT_SHIFT, axes=(0, 1, 2)):
    """(d, M) matrix of central differences of the outcome probabilities."""
    _, plus, minus = encoded_family(rho0, enc, noise, s, axes)
    return np.array([(probabilities(p, povm) - probabilities(m, povm)) / (2 * s) for p, m in zip(plus, minus)])


# -- information matrices ---------------------------------------------------


def cfim(p: np.ndarray, dp: np.ndarray, floor: float = PROB_FLOOR) -> np.ndarray:
    """``F_ij = sum_m dp_im dp_jm / p_m``; outcomes with ``p_m < floor`` are skipped."""
    p = np.ascontiguousarray(clip_probabilities(np.asarray(p, dtype=float)))
    dp = np.ascontiguousarray(np.atleast_2d(np.asarray(dp, dtype=float)))
    return kernels.cfim(p, dp, floor)


def qfim(rho: np.ndarray, drho) -> np.ndarray:
    """QFIM from ``2 vec(d_i rho)^dagger [rho* (x) I + I (x) rho]^+ vec(d_j rho)``."""
    rho = np.asarray(rho, dtype=complex)
    dim = rho.shape[0]
    eye = np.eye(dim)
    sup = np.kron(rho.conj(), eye) + np.kron(eye, rho)
    sup_inv = pinv(sup)
    vs = np.array([vec(d) for d in drho])
    q = 2.0 * (vs.conj() @ sup_inv @ vs.T)
    q = 0.5 * (q + q.conj().T)
    return np.ascontiguousarray(q.real)


def sld_set(rho: np.ndarray, drho, tol: float = 1e-12) -> list[np.ndarray]:
    """SLDs solving ``2 d_k rho = L_k rho + rho L_k`` on the support of rho."""
    w, v = eig_hermitian(np.asarray(rho, dtype=complex))
    denom = w[:, None] + w[None, :]
    mask = denom > tol
    scale = np.zeros_like(denom)
    scale[mask] = 2.0 / denom[mask]
    out = []
    for d in drho:
        d_eig = v.conj().T @ d @ v
        out.append(v @ (scale * d_eig) @ v.conj().T)
    return out


def qfim_from_slds(rho: np.ndarray, slds) -> np.ndarray:
    n = len(slds)
    q = np.empty((n, n))
    for i in range(n):
        for j in range(n):
            q[i, j] = np.trace(rho @ slds[i] @ slds[j]).real
    return 0.5 * (q + q.T)


def qfim_pure(psi: np.ndarray, dpsi) -> np.ndarray:
    """``4 Re(<d_i psi|d_j psi> - <d_i psi|psi><psi|d_j psi>)`` for a normalised pure state."""
    dpsi = np.asarray(dpsi)
    overlaps = dpsi.conj() @ psi
    gram = dpsi.conj() @ dpsi.T
    return 4.0 * (gram - np.outer(overlaps, overlaps.conj())).real


def weak_commutativity(rho: np.ndarray, slds) -> np.ndarray:
    """``W_ij = Im Tr[L_j L_i rho]``; zero when the SLD bound is attainable in the Holevo sense.

    W is antisymmetric, so only the upper triangle is computed.
    """
    n = len(slds)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            out[i, j] = np.trace(slds[j] @ slds[i] @ rho).imag
            out[j, i] = -out[i, j]
    return out


# -- bounds -----------------------------------------------------------------


def _inverse(m: np.ndarray) -> tuple[np.ndarray, bool]:
    m = 0.5 * (np.asarray(m, dtype=float) + np.asarray(m, dtype=float).T)
    singular = rank(m) < m.shape[0]
    return pinv(m), singular


def _weighted_trace(inv: np.ndarray, W) -> float:
    if W is None:
        return float(np.trace(inv))
    return float(np.trace(np.asarray(W) @ inv))


def bound_cf(F: np.ndarray, W=None) -> float:
    inv, singular = _inverse(F)
    if singular:
        warnings.warn("classical Fisher matrix is rank-deficient; C_F uses a pseudo-inverse", SingularInfoWarning, stacklevel=2)
    return _weighted_trace(inv, W)


def bound_cs(Q: np.ndarray, W=None) -> float:
    inv, singular = _inverse(Q)
    if singular:
        warnings.warn("quantum Fisher matrix is rank-deficient; C_S uses a pseudo-inverse", SingularInfoWarning, stacklevel=2)
    return _weighted_trace(inv, W)


def tradeoff(F: np.ndarray, Q: np.ndarray) -> float:
    """``T = Tr[F Q^-1]``, at most d when F <= Q."""
    inv, _ = _inverse(Q)
    return float(np.trace(np.asarray(F) @ inv))


# -- costs ------------------------------------------------------------------


def cost_relative(F: np.ndarray, Q: np.ndarray, W=None) -> float:
    """``1 - C_S / C_F``.

    A rank-deficient F is scored 1, the limit of the cost as an eigenvalue of F
    goes to zero; the pseudo-inverse would otherwise reward singular
    measurements.
    """
    inv_f, singular = _inverse(F)
    c_f = _weighted_trace(inv_f, W)
    if c_f <= 1e-14:
        raise DegenerateBound(f"C_F = {c_f:.3g} is not positive")
    if singular:
        return 1.0
    return 1.0 - _weighted_trace(_inverse(Q)[0], W) / c_f


def cost_tradeoff(F: np.ndarray, Q: np.ndarray, d: int | None = None) -> float:
    d = np.shape(F)[0] if d is None else d
    return 1.0 - tradeoff(F, Q) / d


def cost_norm2(F: np.ndarray, Q: np.ndarray) -> float:
    """Spectral norm ``||F - Q||_2``."""
    return float(np.linalg.norm(np.asarray(F) - np.asarray(Q), 2))


def cost_cf_only(F: np.ndarray, W=None) -> float:
    return _weighted_trace(_inverse(F)[0], W)


def cost_value(kind: str, F: np.ndarray, Q: np.ndarray, W=None) -> float:
    if kind == "relative":
        return cost_relative(F, Q, W)
    if kind == "tradeoff":
        return cost_tradeoff(F, Q)
    if kind == "norm2":
        return cost_norm2(F, Q)
    if kind == "cf":
        return cost_cf_only(F, W)
    raise BadShape(f"unknown cost kind {kind!r}; expected one of {COST_KINDS}")


def cost_matrix_gradient(kind: str, F: np.ndarray, Q: np.ndarray, W=None) -> tuple[np.ndarray, np.ndarray]:
    """``(dC/dF, dC/dQ)`` so that ``dC = sum(G_F * dF) + sum(G_Q * dQ)``.

    Uses the same pseudo-inverses as :func:`cost_value`; a singular F under the
    relative cost sits on the flat value 1 and gets a zero gradient.
    """
    d = F.shape[0]
    Wm = np.eye(d) if W is None else np.asarray(W)
    zero = np.zeros((d, d))
    if kind == "norm2":
        w, v = np.linalg.eigh(0.5 * ((F - Q) + (F - Q).T))
        k = int(np.argmax(np.abs(w)))
        if abs(w[k]) == 0.0:
            return zero, zero
        g = np.sign(w[k]) * np.outer(v[:, k], v[:, k])
        return g, -g
    inv_f, singular_f = _inverse(F)
    inv_q, _ = _inverse(Q)
    if kind == "cf":
        return -inv_f @ Wm @ inv_f, zero
    if kind == "tradeoff":
        return -inv_q / d, (inv_q @ F @ inv_q) / d
    if kind == "relative":
        if singular_f:
            return zero, zero
        c_f = float(np.trace(Wm @ inv_f))
        c_s = float(np.trace(Wm @ inv_q))
        g_cf = -inv_f @ Wm @ inv_f
        g_cs = -inv_q @ Wm @ inv_q
        return (c_s / c_f**2) * g_cf, (-1.0 / c_f) * g_cs
    raise BadShape(f"unknown cost kind {kind!r}; expected one of {COST_KINDS}")


def bundle_from_matrices(F: np.ndarray, Q: np.ndarray, cost_kind: str = "relative", W=None) -> FisherBundle:
    inv_f, sing_f = _inverse(F)
    inv_q, sing_q = _inverse(Q)
    return FisherBundle(
        F=F,
        Q=Q,
        C_F=_weighted_trace(inv_f, W),
        C_S=_weighted_trace(inv_q, W),
        T=float(np.trace(F @ inv_q)),
        cost=cost_value(cost_kind, F, Q, W),
        singular_F=sing_f,
        singular_Q=sing_q,
    )


def fisher_bundle(
    rho0: np.ndarray,
    povm: np.ndarray,
    enc: EncodingConfig,
    noise: NoiseModel,
    s: float = DEFAULT_SHIFT,
    cost_kind: str = "relative",
    W=None,
) -> FisherBundle:
    """Evaluate F, Q, both bounds, T and the cost for a probe ``rho0`` and POVM."""
    rho, plus, minus = encoded_family(rho0, enc, noise, s)
    drho = support_derivatives(rho, [(a - b) / (2 * s) for a, b in zip(plus, minus)])
    p = probabilities(rho, povm)
    dp = np.array([probabilities(d, povm) for d in drho])
    return bundle_from_matrices(cfim(p, dp), qfim(rho, drho), cost_kind, W)
