"""Pure numpy implementations of the compiled kernels in ``_kernels.pyx``.

Signatures and in-place semantics match the extension exactly, so either can
be bound by :mod:`vqm.kernels`.
"""
import numpy as np


def _split(dim, qubit, n):
    left = 1 << qubit
    right = dim // (2 * left)
    return left, right


def apply_1q(states, u, qubit, n):
    dim, k = states.shape
    left, right = _split(dim, qubit, n)
    view = states.reshape(left, 2, right, k)
    view[...] = np.einsum("ab,xbyk->xayk", u, view)


def apply_1q_dm(rho, u, qubit, n):
    dim = rho.shape[0]
    left, right = _split(dim, qubit, n)
    view = rho.reshape(left, 2, right, left, 2, right)
    view[...] = np.einsum("ab,xbyuvw,cv->xayucw", u, view, u.conj())


def apply_kraus_1q(rho, kraus, qubit, n):
    dim = rho.shape[0]
    left, right = _split(dim, qubit, n)
    view = rho.reshape(left, 2, right, left, 2, right)
    out = np.einsum("mab,xbyuvw,mcv->xayucw", kraus, view, kraus.conj())
    return np.ascontiguousarray(out.reshape(dim, dim))


def cfim(p, dp, floor):
    keep = p >= floor
    g = dp[:, keep]
    f = (g / p[keep]) @ g.T
    return 0.5 * (f + f.T)
