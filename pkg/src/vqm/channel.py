"""Field encoding followed by per-qubit dephasing.

The probe first evolves under ``exp(-i t sum_i phi_i sigma_i)`` on every qubit,
then each qubit passes through the Kraus pair

    K1 = diag(sqrt(1 - q), 1),    K2 = [[sqrt(q), 0], [0, 0]]

with ``q = lambda`` for fixed dephasing or ``q = q(t)`` for the
Ornstein-Uhlenbeck profile.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from . import kernels
from .errors import BadProbability, BadShape, KrausIncomplete
from .matkernel import single_qubit_field_unitary

KRAUS_TOL = 1e-10
DEFAULT_PHI = (np.pi / 6, np.pi / 6, np.pi / 6)


@dataclass(frozen=True)
class NoiseModel:
    kind: str = "dephasing"  # "dephasing" | "ou"
    lam: float = 0.0
    gamma: float = 0.1
    tau_c: float = 20.0
    markovian: bool = True

    def __post_init__(self):
        if self.kind not in ("dephasing", "ou"):
            raise BadShape(f"unknown noise kind {self.kind!r}")
        if self.kind == "dephasing" and not 0.0 <= self.lam <= 1.0:
            raise BadProbability(f"dephasing probability {self.lam} outside [0, 1]")
        if self.kind == "ou" and (self.gamma < 0 or self.tau_c <= 0):
            raise BadShape("OU noise needs gamma >= 0 and tau_c > 0")

    def probability(self, t: float) -> float:
        if self.kind == "dephasing":
            return float(self.lam)
        return ou_q(t, self.gamma, self.tau_c, self.markovian)


@dataclass(frozen=True)
class EncodingConfig:
    phi: tuple[float, float, float] = DEFAULT_PHI
    t: float = 1.0
    n_qubits: int = 3

    def __post_init__(self):
        phi = tuple(float(x) for x in self.phi)
        if len(phi) != 3 or not all(np.isfinite(phi)):
            raise BadShape(f"phi must be three finite numbers, got {self.phi}")
        if not (np.isfinite(self.t) and self.t >= 0):
            raise BadShape(f"sensing time must be >= 0, got {self.t}")
        object.__setattr__(self, "phi", phi)

    def shifted(self, axis: int, delta: float) -> "EncodingConfig":
        phi = list(self.phi)
        phi[axis] += delta
        return replace(self, phi=tuple(phi))


def dephasing_kraus(lam: float) -> tuple[np.ndarray, np.ndarray]:
    if not 0.0 <= lam <= 1.0:
        raise BadProbability(f"dephasing probability {lam} outside [0, 1]")
    k1 = np.array([[np.sqrt(1.0 - lam), 0.0], [0.0, 1.0]], dtype=complex)
    k2 = np.array([[np.sqrt(lam), 0.0], [0.0, 0.0]], dtype=complex)
    return k1, k2


def ou_q(t: float, gamma: float = 0.1, tau_c: float = 20.0, markovian: bool = True, exact: bool = False) -> float:
    """Dephasing probability ``1 - exp(-f(t))`` of the Ornstein-Uhlenbeck model.

    ``f = gamma t`` (Markovian) or ``gamma t^2 / (2 tau_c)`` (non-Markovian
    limit). ``exact=True`` uses ``f = gamma (t + tau_c (exp(-t/tau_c) - 1))``
    regardless of ``markovian``.
    """
    if t < 0:
        raise BadShape(f"time must be >= 0, got {t}")
    if exact:
        f = gamma * (t + tau_c * np.expm1(-t / tau_c))
    elif markovian:
        f = gamma * t
    else:
        f = gamma * t * t / (2.0 * tau_c)
    return float(-np.expm1(-f))


def _kraus_stack(k1, k2) -> np.ndarray:
    return np.ascontiguousarray(np.stack([k1, k2]).astype(complex))


def _apply_all_qubits(rho: np.ndarray, kraus: np.ndarray, n_qubits: int) -> np.ndarray:
    out = rho
    for q in range(n_qubits):
        out = kernels.apply_kraus_1q(out, kraus, q, n_qubits)
    return out


def apply_per_qubit_channel(rho: np.ndarray, k1: np.ndarray, k2: np.ndarray, n_qubits: int) -> np.ndarray:
    kraus = _kraus_stack(k1, k2)
    dev = np.abs(np.einsum("kji,kjl->il", kraus.conj(), kraus) - np.eye(2)).max()
    if dev > KRAUS_TOL:
        raise KrausIncomplete(f"sum K^dagger K deviates from identity by {dev:.3g}")
    out = np.ascontiguousarray(rho, dtype=complex)
    if out.shape != (2**n_qubits, 2**n_qubits):
        raise BadShape(f"rho has shape {out.shape}, expected {(2**n_qubits,) * 2}")
    return _apply_all_qubits(out, kraus, n_qubits)


def encode(rho: np.ndarray, enc: EncodingConfig) -> np.ndarray:
    """Apply the same field unitary to every qubit; returns a new array."""
    u = single_qubit_field_unitary(enc.phi, enc.t)
    out = np.array(rho, dtype=complex, order="C", copy=True)
    for q in range(enc.n_qubits):
        kernels.apply_1q_dm(out, u, q, enc.n_qubits)
    return out


def evolve(rho: np.ndarray, enc: EncodingConfig, noise: NoiseModel) -> np.ndarray:
    dim = 2**enc.n_qubits
    if np.shape(rho) != (dim, dim):
        raise BadShape(f"rho has shape {np.shape(rho)}, expected {(dim, dim)}")
    out = encode(rho, enc)
    q = noise.probability(enc.t)
    if q == 0.0:
        return out
    # dephasing_kraus is complete by construction
    return _apply_all_qubits(out, _kraus_stack(*dephasing_kraus(q)), enc.n_qubits)
