"""Concentratable entanglement of pure probe states.

    xi(psi) = 1 - 2^-N * sum over qubit subsets a of Tr[rho_a^2]

with the empty subset contributing purity 1. :func:`swap_test_ce` obtains the
same number from the all-zero ancilla probability of a controlled-SWAP circuit
on two copies of the state.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .ansatz import Ansatz, prepare_vector
from .errors import BadShape, TooLarge
from .matkernel import reduced_from_pure

MAX_CE_QUBITS = 6
MAX_SWAP_QUBITS = 4


@dataclass(frozen=True)
class CeReport:
    xi: float
    subset_purities: dict


def _as_state(psi, n_qubits: int) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex).ravel()
    if psi.shape[0] != 2**n_qubits:
        raise BadShape(f"state has {psi.shape[0]} amplitudes, expected {2**n_qubits}")
    norm = np.linalg.norm(psi)
    if abs(norm - 1.0) > 1e-12:
        raise BadShape(f"state is not normalised (norm {norm:.15g})")
    return psi


def _subset(mask: int, n_qubits: int) -> tuple[int, ...]:
    return tuple(q + 1 for q in range(n_qubits) if mask >> q & 1)


def concentratable_entanglement(psi, n_qubits: int) -> CeReport:
    if n_qubits > MAX_CE_QUBITS:
        raise TooLarge(f"exact CE enumerates 2^N subsets; N <= {MAX_CE_QUBITS}")
    psi = _as_state(psi, n_qubits)
    purities = {}
    for mask in range(2**n_qubits):
        alpha = _subset(mask, n_qubits)
        if not alpha:
            purities[alpha] = 1.0
            continue
        rho_a = reduced_from_pure(psi, n_qubits, alpha)
        purities[alpha] = float(np.vdot(rho_a, rho_a).real)
    xi = 1.0 - sum(purities.values()) / 2**n_qubits
    return CeReport(xi=xi, subset_purities=purities)


def ce_ghz(n_qubits: int) -> float:
    return 0.5 - 0.5**n_qubits


def ce_ame(n_qubits: int) -> float:
    total = sum(comb(n_qubits, j) / 2 ** min(j, n_qubits - j) for j in range(n_qubits + 1))
    return 1.0 - total / 2**n_qubits


def _hadamard_axis(t: np.ndarray, axis: int) -> np.ndarray:
    a = np.take(t, 0, axis=axis)
    b = np.take(t, 1, axis=axis)
    return np.stack([(a + b), (a - b)], axis=axis) / np.sqrt(2)


def swap_test_ce(psi, n_qubits: int) -> float:
    """``1 - p(ancillas all 0)`` for N ancilla-controlled SWAPs between two copies."""
    if n_qubits > MAX_SWAP_QUBITS:
        raise TooLarge(f"the SWAP test simulates 3N qubits; N <= {MAX_SWAP_QUBITS}")
    psi = _as_state(psi, n_qubits)
    n = n_qubits
    anc = np.zeros(2**n, dtype=complex)
    anc[0] = 1.0
    # axis order: ancillas 0..n-1, copy A n..2n-1, copy B 2n..3n-1
    t = np.kron(np.kron(anc, psi), psi).reshape((2,) * (3 * n))
    for k in range(n):
        t = _hadamard_axis(t, k)
    for k in range(n):
        idx = [slice(None)] * (3 * n)
        idx[k] = 1
        idx = tuple(idx)
        # ancilla axis k is removed from the slice, shifting later axes down by one
        t[idx] = np.swapaxes(t[idx], n + k - 1, 2 * n + k - 1)
    for k in range(n):
        t = _hadamard_axis(t, k)
    p0 = float(np.sum(np.abs(t[(0,) * n]) ** 2))
    return 1.0 - p0


def ce_of_trained_probe(ansatz: Ansatz, theta) -> float:
    """CE of the noiseless probe ``U(theta)|0...0>``."""
    return concentratable_entanglement(prepare_vector(ansatz, theta), ansatz.n_qubits).xi
