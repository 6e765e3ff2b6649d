"""Star, ring and squeezing variational circuits.

An :class:`Ansatz` is an immutable gate list whose parameter slots index one
flat parameter vector. The same circuit family serves as the probe preparation
``U(theta)`` and as the measurement rotation ``U(mu)``.

Gate conventions::

    RotY(a) = exp(-i a Y / 2)       RotX(a) = exp(-i a X / 2)
    CZ      = diag(1, 1, 1, -1)
    MSxx(chi) = exp(-i sum_{j<k} chi_jk X_j X_k / 2)   (MSzz likewise with Z)

Qubits are numbered from 1 in the public API; qubit 1 is the star centre.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations

import numpy as np

from . import kernels
from .errors import BadShape
from .matkernel import kron_all

KINDS = ("star", "ring", "squeezing")
GATE_KINDS = ("RotY", "RotX", "CZ", "MSxx", "MSzz")


@dataclass(frozen=True)
class GateOp:
    kind: str
    targets: tuple[int, ...]
    param_slots: tuple[int, ...] = ()

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise BadShape(f"unknown gate kind {self.kind!r}")


@dataclass(frozen=True)
class Ansatz:
    kind: str
    n_qubits: int
    n_layers: int
    gates: tuple[GateOp, ...]
    n_params: int

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    def random_params(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(0.0, 2 * np.pi, size=self.n_params)


def n_params_per_layer(kind: str, n_qubits: int) -> int:
    if kind == "star":
        return 2 * n_qubits - 2
    if kind == "ring":
        return 2 * n_qubits
    if kind == "squeezing":
        return n_qubits * (n_qubits + 1)
    raise BadShape(f"unknown ansatz kind {kind!r}; expected one of {KINDS}")


def _check(n_qubits, n_layers, min_qubits, kind):
    if int(n_qubits) < min_qubits:
        raise BadShape(f"{kind} ansatz needs at least {min_qubits} qubits, got {n_qubits}")
    if int(n_layers) < 1:
        raise BadShape(f"n_layers must be >= 1, got {n_layers}")


def build_star(n_qubits: int, n_layers: int) -> Ansatz:
    """Centre qubit 1 rotated and entangled with each leaf in turn."""
    _check(n_qubits, n_layers, 2, "star")
    gates, slot = [], 0
    for _ in range(n_layers):
        for leaf in range(2, n_qubits + 1):
            gates.append(GateOp("RotY", (1,), (slot,)))
            gates.append(GateOp("RotY", (leaf,), (slot + 1,)))
            gates.append(GateOp("CZ", (1, leaf)))
            slot += 2
    return Ansatz("star", n_qubits, n_layers, tuple(gates), slot)


def build_ring(n_qubits: int, n_layers: int) -> Ansatz:
    _check(n_qubits, n_layers, 3, "ring")
    gates, slot = [], 0
    for _ in range(n_layers):
        for k in range(1, n_qubits + 1):
            nxt = k % n_qubits + 1
            gates.append(GateOp("RotY", (k,), (slot,)))
            gates.append(GateOp("RotY", (nxt,), (slot + 1,)))
            gates.append(GateOp("CZ", (k, nxt)))
            slot += 2
    return Ansatz("ring", n_qubits, n_layers, tuple(gates), slot)


def build_squeezing(n_qubits: int, n_layers: int) -> Ansatz:
    _check(n_qubits, n_layers, 2, "squeezing")
    n_pairs = n_qubits * (n_qubits - 1) // 2
    gates, slot = [], 0
    for _ in range(n_layers):
        for q in range(1, n_qubits + 1):
            gates.append(GateOp("RotX", (q,), (slot,)))
            slot += 1
        gates.append(GateOp("MSxx", tuple(range(1, n_qubits + 1)), tuple(range(slot, slot + n_pairs))))
        slot += n_pairs
        for q in range(1, n_qubits + 1):
            gates.append(GateOp("RotY", (q,), (slot,)))
            slot += 1
        gates.append(GateOp("MSzz", tuple(range(1, n_qubits + 1)), tuple(range(slot, slot + n_pairs))))
        slot += n_pairs
    return Ansatz("squeezing", n_qubits, n_layers, tuple(gates), slot)


_BUILDERS = {"star": build_star, "ring": build_ring, "squeezing": build_squeezing}


def build_ansatz(kind: str, n_qubits: int, n_layers: int) -> Ansatz:
    try:
        builder = _BUILDERS[kind]
    except KeyError:
        raise BadShape(f"unknown ansatz kind {kind!r}; expected one of {KINDS}") from None
    return builder(int(n_qubits), int(n_layers))


def rot_y(a: float) -> np.ndarray:
    c, s = np.cos(a / 2), np.sin(a / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def rot_x(a: float) -> np.ndarray:
    c, s = np.cos(a / 2), np.sin(a / 2)
    return np.array([[c, -1j * s], [-1j * s, c]], dtype=complex)


@lru_cache(maxsize=None)
def _zz_products(n_qubits: int) -> np.ndarray:
    """(2**n, n_pairs) table of z_j z_k = +-1 for pairs j < k in lexicographic order."""
    idx = np.arange(2**n_qubits)
    z = 1 - 2 * ((idx[:, None] >> (n_qubits - 1 - np.arange(n_qubits))) & 1)
    pairs = list(combinations(range(n_qubits), 2))
    out = np.empty((2**n_qubits, len(pairs)))
    for c, (j, k) in enumerate(pairs):
        out[:, c] = z[:, j] * z[:, k]
    out.flags.writeable = False
    return out


@lru_cache(maxsize=None)
def _hadamard_all(n_qubits: int) -> np.ndarray:
    h = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
    out = kron_all([h] * n_qubits)
    out.flags.writeable = False
    return out


@lru_cache(maxsize=None)
def _cz_rows(n_qubits: int, a: int, b: int) -> np.ndarray:
    idx = np.arange(2**n_qubits)
    ba, bb = n_qubits - a, n_qubits - b
    rows = np.nonzero(((idx >> ba) & 1) & ((idx >> bb) & 1))[0]
    rows.flags.writeable = False
    return rows


def ms_phases(n_qubits: int, chi: np.ndarray) -> np.ndarray:
    """Diagonal of ``exp(-i sum chi_jk Z_j Z_k / 2)``."""
    return np.exp(-0.5j * (_zz_products(n_qubits) @ np.asarray(chi, dtype=float)))


def _check_params(ansatz: Ansatz, params) -> np.ndarray:
    params = np.asarray(params, dtype=float).ravel()
    if params.shape[0] != ansatz.n_params:
        raise BadShape(f"{ansatz.kind} ansatz takes {ansatz.n_params} parameters, got {params.shape[0]}")
    return params


def apply_circuit(ansatz: Ansatz, params, states: np.ndarray) -> np.ndarray:
    """Apply ``U(params)`` in place to a C-contiguous (2**n, k) complex block."""
    params = _check_params(ansatz, params)
    n = ansatz.n_qubits
    for g in ansatz.gates:
        if g.kind == "RotY":
            kernels.apply_1q(states, rot_y(params[g.param_slots[0]]), g.targets[0] - 1, n)
        elif g.kind == "RotX":
            kernels.apply_1q(states, rot_x(params[g.param_slots[0]]), g.targets[0] - 1, n)
        elif g.kind == "CZ":
            states[_cz_rows(n, *g.targets)] *= -1
        elif g.kind == "MSzz":
            states *= ms_phases(n, params[list(g.param_slots)])[:, None]
        else:  # MSxx = H^n MSzz H^n
            h = _hadamard_all(n)
            states[...] = h @ (ms_phases(n, params[list(g.param_slots)])[:, None] * (h @ states))
    return states


def unitary_of(ansatz: Ansatz, params) -> np.ndarray:
    return apply_circuit(ansatz, params, np.eye(ansatz.dim, dtype=complex))


def prepare_vector(ansatz: Ansatz, theta) -> np.ndarray:
    """``U(theta)|0...0>`` as a 1-D state vector."""
    psi = np.zeros((ansatz.dim, 1), dtype=complex)
    psi[0, 0] = 1.0
    return apply_circuit(ansatz, theta, psi)[:, 0]


def prepare_state(ansatz: Ansatz, theta) -> np.ndarray:
    psi = prepare_vector(ansatz, theta)
    return np.outer(psi, psi.conj())


def povm_from(ansatz: Ansatz, mu) -> np.ndarray:
    """Stack ``E_m = U(mu)^dagger |m><m| U(mu)`` for every basis label m, shape (2**n, d, d)."""
    v = unitary_of(ansatz, mu)
    return np.einsum("mi,mj->mij", v.conj(), v)
