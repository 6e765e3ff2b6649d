"""Dense reference constructions used as independent oracles."""
import numpy as np
from scipy.linalg import expm

I2 = np.eye(2, dtype=complex)


def embed(u, qubit, n):
    """``u`` on 0-based ``qubit`` of ``n`` as a dense 2^n matrix."""
    mats = [I2] * n
    mats[qubit] = u
    out = np.ones((1, 1), dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def random_unitary(rng, dim=2):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def random_hermitian(rng, dim):
    z = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    return 0.5 * (z + z.conj().T)


def dense_expm(h, t):
    return expm(-1j * t * h)
