"""Dense complex linear algebra for registers of a few qubits.

Conventions: qubit 1 is the leftmost Kronecker factor (most significant bit of
a basis index), and :func:`vec` stacks columns so that
``vec(A @ X @ B) == kron(B.T, A) @ vec(X)``.
"""
from __future__ import annotations

from typing import Iterable

import numpy as np

from .errors import BadIndex, BadShape, NotHermitian

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SX, SY, SZ)

HERMITIAN_TOL = 1e-10
PINV_RTOL = 1e-10


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.kron(np.asarray(a), np.asarray(b))


def kron_all(mats: Iterable[np.ndarray]) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def is_hermitian(h: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(h - h.conj().T), initial=0.0) <= tol)


def eig_hermitian(h: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and unitary eigenvectors of a Hermitian matrix.

    Raises :class:`NotHermitian` when ``max|h - h^dagger| > 1e-10``.
    """
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise BadShape(f"expected a square matrix, got shape {h.shape}")
    if not is_hermitian(h):
        raise NotHermitian("matrix deviates from its adjoint by more than 1e-10")
    return np.linalg.eigh(0.5 * (h + h.conj().T))


def single_qubit_field_unitary(phi, t: float) -> np.ndarray:
    """``exp(-i t (phi_x X + phi_y Y + phi_z Z))`` in closed Pauli form."""
    phi = np.asarray(phi, dtype=float)
    norm = float(np.linalg.norm(phi))
    if norm == 0.0:
        return I2.copy()
    n = phi / norm
    gen = n[0] * SX + n[1] * SY + n[2] * SZ
    return np.cos(norm * t) * I2 - 1j * np.sin(norm * t) * gen


def expm_hermitian_generator(h: np.ndarray, t: float) -> np.ndarray:
    """``exp(-i t h)`` through the eigendecomposition of ``h``."""
    w, v = eig_hermitian(h)
    return (v * np.exp(-1j * t * w)) @ v.conj().T


def field_hamiltonian(phi) -> np.ndarray:
    return sum(float(c) * p for c, p in zip(phi, PAULIS))


def _check_keep(keep, n_qubits: int) -> list[int]:
    keep = sorted(set(int(k) for k in keep))
    bad = [k for k in keep if k < 1 or k > n_qubits]
    if bad:
        raise BadIndex(f"qubit indices {bad} outside 1..{n_qubits}")
    return keep


def partial_trace(rho: np.ndarray, n_qubits: int, keep) -> np.ndarray:
    """Reduced density matrix on the 1-based qubit indices in ``keep``."""
    rho = np.asarray(rho)
    dim = 2**n_qubits
    if rho.shape != (dim, dim):
        raise BadShape(f"rho has shape {rho.shape}, expected {(dim, dim)}")
    keep = _check_keep(keep, n_qubits)
    if len(keep) == n_qubits:
        return rho.copy()
    axes = [k - 1 for k in keep]
    drop = [q for q in range(n_qubits) if q not in axes]
    t = rho.reshape((2,) * (2 * n_qubits))
    perm = axes + drop + [n_qubits + q for q in axes] + [n_qubits + q for q in drop]
    t = t.transpose(perm)
    dk, dd = 2 ** len(axes), 2 ** len(drop)
    return np.einsum("ajbj->ab", t.reshape(dk, dd, dk, dd))


def reduced_from_pure(psi: np.ndarray, n_qubits: int, keep) -> np.ndarray:
    """Reduced state of the pure state ``psi`` without forming ``|psi><psi|``."""
    keep = _check_keep(keep, n_qubits)
    axes = [k - 1 for k in keep]
    drop = [q for q in range(n_qubits) if q not in axes]
    a = np.asarray(psi).reshape((2,) * n_qubits).transpose(axes + drop)
    a = a.reshape(2 ** len(axes), 2 ** len(drop))
    return a @ a.conj().T


def vec(a: np.ndarray) -> np.ndarray:
    return np.asarray(a).reshape(-1, order="F")


def unvec(v: np.ndarray, rows: int, cols: int | None = None) -> np.ndarray:
    return np.asarray(v).reshape((rows, rows if cols is None else cols), order="F")


def pinv(a: np.ndarray, tol: float = PINV_RTOL) -> np.ndarray:
    """Pseudo-inverse of a Hermitian PSD matrix.

    Eigenvalues above ``tol * lambda_max`` are inverted, the rest dropped.
    """
    w, v = eig_hermitian(a)
    top = np.max(np.abs(w), initial=0.0)
    if top == 0.0:
        return np.zeros_like(a, dtype=np.result_type(a, float))
    keep = np.abs(w) > tol * top
    inv = np.zeros_like(w)
    inv[keep] = 1.0 / w[keep]
    out = (v * inv) @ v.conj().T
    if np.isrealobj(a):
        out = out.real
    return out


def rank(a: np.ndarray, tol: float = PINV_RTOL) -> int:
    w = np.linalg.eigvalsh(0.5 * (a + a.conj().T))
    top = np.max(np.abs(w), initial=0.0)
    if top == 0.0:
        return 0
    return int(np.sum(np.abs(w) > tol * top))


def basis_state(n_qubits: int, index: int = 0) -> np.ndarray:
    psi = np.zeros(2**n_qubits, dtype=complex)
    psi[index] = 1.0
    return psi


def ghz_state(n_qubits: int) -> np.ndarray:
    psi = np.zeros(2**n_qubits, dtype=complex)
    psi[0] = psi[-1] = 1 / np.sqrt(2)
    return psi


def projector(psi: np.ndarray) -> np.ndarray:
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def random_state(n_qubits: int, rng: np.random.Generator) -> np.ndarray:
    z = rng.normal(size=2**n_qubits) + 1j * rng.normal(size=2**n_qubits)
    return z / np.linalg.norm(z)


def random_density_matrix(n_qubits: int, rng: np.random.Generator, rank_: int | None = None) -> np.ndarray:
    """Ginibre-distributed density matrix of the given rank (full rank by default)."""
    dim = 2**n_qubits
    k = dim if rank_ is None else rank_
    g = rng.normal(size=(dim, k)) + 1j * rng.normal(size=(dim, k))
    rho = g @ g.conj().T
    return rho / np.trace(rho).real
