"""Probe preparation, noisy encoding and variational measurement as one map.

A :class:`Pipeline` turns the concatenated training vector ``x = theta ++ mu``
into a :class:`~vqm.fisher.FisherBundle`. Everything that depends only on
``theta`` (the encoded states and Q) is cached, so gradient coordinates along
``mu`` cost a single measurement-basis rotation each.
"""
from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .ansatz import Ansatz, prepare_vector, unitary_of
from .channel import EncodingConfig, NoiseModel
from .fisher import (
    DEFAULT_SHIFT,
    FisherBundle,
    bundle_from_matrices,
    cfim,
    cost_value,
    encoded_family,
    qfim,
    support_derivatives,
)


@dataclass
class _ThetaData:
    states: np.ndarray  # (1 + d, D, D): rho, then d rho / d phi_k restricted to supp(rho)
    Q: np.ndarray


@dataclass
class Pipeline:
    prep: Ansatz
    povm: Ansatz
    enc: EncodingConfig
    noise: NoiseModel
    shift: float = DEFAULT_SHIFT
    cost_kind: str = "relative"
    cache_size: int = 8
    _cache: OrderedDict = field(default_factory=OrderedDict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.prep.n_qubits != self.enc.n_qubits or self.povm.n_qubits != self.enc.n_qubits:
            raise ValueError("ansatz and encoding qubit counts differ")

    @property
    def n_theta(self) -> int:
        return self.prep.n_params

    @property
    def n_params(self) -> int:
        return self.prep.n_params + self.povm.n_params

    @property
    def d(self) -> int:
        return 3

    def split(self, x) -> tuple[np.ndarray, np.ndarray]:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.n_params,):
            raise ValueError(f"expected {self.n_params} training variables, got shape {x.shape}")
        return x[: self.n_theta], x[self.n_theta :]

    def random_point(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(0.0, 2 * np.pi, size=self.n_params)

    def probe(self, theta) -> np.ndarray:
        return prepare_vector(self.prep, theta)

    def theta_data(self, theta) -> _ThetaData:
        theta = np.asarray(theta, dtype=float)
        key = theta.tobytes()
        hit = self._cache.get(key)
        if hit is not None:
            self._cache.move_to_end(key)
            return hit
        psi = self.probe(theta)
        rho0 = np.outer(psi, psi.conj())
        rho, plus, minus = encoded_family(rho0, self.enc, self.noise, self.shift)
        drho = support_derivatives(rho, [(a - b) / (2 * self.shift) for a, b in zip(plus, minus)])
        data = _ThetaData(states=np.stack([rho, *drho]), Q=qfim(rho, drho))
        self._cache[key] = data
        if len(self._cache) > self.cache_size:
            self._cache.popitem(last=False)
        return data

    def state_probabilities(self, states: np.ndarray, mu) -> np.ndarray:
        """Outcome distributions for a stack of states; shape (n_states, 2**N)."""
        v = unitary_of(self.povm, mu)
        return np.einsum("ij,sjk,ik->si", v, states, v.conj()).real

    def fisher_from_probabilities(self, probs: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Split a stacked table into ``(p, dp)``; outcome maps are linear in the state."""
        return probs[0], probs[1:]

    def bundle(self, x) -> FisherBundle:
        theta, mu = self.split(x)
        data = self.theta_data(theta)
        p, dp = self.fisher_from_probabilities(self.state_probabilities(data.states, mu))
        return bundle_from_matrices(cfim(p, dp), data.Q, self.cost_kind)

    def matrices(self, x) -> tuple[np.ndarray, np.ndarray]:
        theta, mu = self.split(x)
        data = self.theta_data(theta)
        p, dp = self.fisher_from_probabilities(self.state_probabilities(data.states, mu))
        return cfim(p, dp), data.Q

    def cost(self, x) -> float:
        F, Q = self.matrices(x)
        return cost_value(self.cost_kind, F, Q)

    def probability_table(self, x) -> np.ndarray:
        """Outcome table of ``rho`` and its derivatives at ``x``; the layer the shift rule differentiates."""
        theta, mu = self.split(x)
        return self.state_probabilities(self.theta_data(theta).states, mu)

