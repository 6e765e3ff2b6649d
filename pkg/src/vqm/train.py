"""ADAM training of probe and measurement circuits.

``theta`` and ``mu`` are optimised jointly as one vector. Gradients are either
central differences of the scalar cost (default) or the parameter-shift rule on
the outcome probabilities, chained through the CFIM analytically; in the latter
mode the theta-dependence of Q still comes from central differences.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np

from .ansatz import build_ansatz
from .channel import DEFAULT_PHI, EncodingConfig, NoiseModel
from .errors import ShapeMismatch
from .fisher import PROB_FLOOR, FisherBundle, cost_matrix_gradient
from .pipeline import Pipeline

# Each rotation / Mølmer-Sørensen parameter multiplies a generator with
# eigenvalues +-1/2, so two shifts of pi/2 give the exact derivative.
SHIFT_RULE = np.pi / 2

# (prep layers, povm layers) with the lowest noiseless cost per ansatz at N = 3.
OPTIMAL_LAYERS = {"star": (2, 2), "ring": (3, 2), "squeezing": (2, 2)}


@dataclass(frozen=True)
class TrainConfig:
    alpha: float = 0.2
    beta1: float = 0.8
    beta2: float = 0.999
    epsilon: float = 1e-8
    max_iters: int = 300
    patience: int = 20
    min_delta: float = 1e-4
    grad_mode: str = "central_diff"  # or "param_shift"
    grad_shift: float = 1e-3
    seed: int = 0
    cost_kind: str = "relative"

    def __post_init__(self):
        if self.grad_mode not in ("central_diff", "param_shift"):
            raise ValueError(f"unknown grad_mode {self.grad_mode!r}")
        if self.max_iters < 0 or self.patience < 1:
            raise ValueError("max_iters must be >= 0 and patience >= 1")
        if self.grad_shift <= 0:
            raise ValueError("grad_shift must be > 0")


@dataclass
class TrainRecord:
    cost: list[float] = field(default_factory=list)
    C_F: list[float] = field(default_factory=list)
    C_S: list[float] = field(default_factory=list)
    T: list[float] = field(default_factory=list)
    theta: list[np.ndarray] = field(default_factory=list)
    mu: list[np.ndarray] = field(default_factory=list)
    stop_reason: str = "max_iters"
    seed: int = 0

    def append(self, bundle: FisherBundle, theta, mu) -> None:
        self.cost.append(float(bundle.cost))
        self.C_F.append(float(bundle.C_F))
        self.C_S.append(float(bundle.C_S))
        self.T.append(float(bundle.T))
        self.theta.append(np.array(theta, copy=True))
        self.mu.append(np.array(mu, copy=True))

    @property
    def n_iters(self) -> int:
        return len(self.cost) - 1

    @property
    def best_index(self) -> int:
        return int(np.argmin(self.cost))

    @property
    def best_cost(self) -> float:
        return self.cost[self.best_index]

    def best(self) -> dict:
        i = self.best_index
        return {
            "iter": i,
            "cost": self.cost[i],
            "C_F": self.C_F[i],
            "C_S": self.C_S[i],
            "T": self.T[i],
            "theta": self.theta[i],
            "mu": self.mu[i],
        }


def adam_step(vars_, grads, m, v, k: int, config: TrainConfig = TrainConfig()):
    """One bias-corrected ADAM update at step ``k >= 1``; returns new ``(vars, m, v)``."""
    vars_, grads, m, v = (np.asarray(a, dtype=float) for a in (vars_, grads, m, v))
    if not (vars_.shape == grads.shape == m.shape == v.shape):
        raise ShapeMismatch(f"shapes differ: {vars_.shape}, {grads.shape}, {m.shape}, {v.shape}")
    if k < 1:
        raise ValueError("ADAM step counter starts at 1")
    m = config.beta1 * m + (1.0 - config.beta1) * grads
    v = config.beta2 * v + (1.0 - config.beta2) * grads * grads
    m_hat = m / (1.0 - config.beta1**k)
    v_hat = v / (1.0 - config.beta2**k)
    return vars_ - config.alpha * m_hat / (np.sqrt(v_hat) + config.epsilon), m, v


def central_diff_gradient(fn: Callable[[np.ndarray], float], x: np.ndarray, h: float, coords=None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    coords = range(x.size) if coords is None else coords
    grad = np.zeros(x.size)
    for k in coords:
        xp, xm = x.copy(), x.copy()
        xp[k] += h
        xm[k] -= h
        grad[k] = (fn(xp) - fn(xm)) / (2 * h)
    return grad


def probability_shift_derivative(pipeline: Pipeline, x: np.ndarray, k: int) -> np.ndarray:
    """Shift-rule derivative of the probability table along ``x[k]``.

    Exact along ``mu`` always, and along ``theta`` when ``rho`` has full rank.
    For rank-deficient ``rho`` the support projection of the derivative
    depends on ``theta`` nonlinearly, leaving an O(shift^2) residual.
    """
    xp, xm = x.copy(), x.copy()
    xp[k] += SHIFT_RULE
    xm[k] -= SHIFT_RULE
    return 0.5 * (pipeline.probability_table(xp) - pipeline.probability_table(xm))


def probability_fd_derivative(pipeline: Pipeline, x: np.ndarray, k: int, h: float) -> np.ndarray:
    xp, xm = x.copy(), x.copy()
    xp[k] += h
    xm[k] -= h
    return (pipeline.probability_table(xp) - pipeline.probability_table(xm)) / (2 * h)


def _cfim_derivative(p, dp, d_p, d_dp, floor=PROB_FLOOR):
    keep = p >= floor
    p, dp, d_p, d_dp = p[keep], dp[:, keep], d_p[keep], d_dp[:, keep]
    cross = (d_dp / p) @ dp.T
    return cross + cross.T - (dp * (d_p / p**2)) @ dp.T


def cost_gradient(x, pipeline: Pipeline, config: TrainConfig = TrainConfig(), coords=None) -> np.ndarray:
    """Gradient of the pipeline cost with respect to ``theta ++ mu``."""
    x = np.asarray(x, dtype=float)
    if config.grad_mode == "central_diff":
        return central_diff_gradient(pipeline.cost, x, config.grad_shift, coords)

    F, Q = pipeline.matrices(x)
    g_f, g_q = cost_matrix_gradient(pipeline.cost_kind, F, Q)
    table = pipeline.probability_table(x)
    p, dp = pipeline.fisher_from_probabilities(table)
    p = np.clip(p, 0.0, None)
    h = config.grad_shift
    grad = np.zeros(x.size)
    for k in range(x.size) if coords is None else coords:
        dtable = probability_shift_derivative(pipeline, x, k)
        d_p, d_dp = pipeline.fisher_from_probabilities(dtable)
        d_f = _cfim_derivative(p, dp, d_p, d_dp)
        val = float(np.sum(g_f * d_f))
        if k < pipeline.n_theta and np.any(g_q):
            theta, _ = pipeline.split(x)
            tp, tm = theta.copy(), theta.copy()
            tp[k] += h
            tm[k] -= h
            d_q = (pipeline.theta_data(tp).Q - pipeline.theta_data(tm).Q) / (2 * h)
            val += float(np.sum(g_q * d_q))
        grad[k] = val
    return grad


def train(pipeline: Pipeline, config: TrainConfig = TrainConfig(), x0=None) -> TrainRecord:
    """Run ADAM from ``x0`` (uniform in [0, 2 pi) from ``config.seed`` if omitted).

    Stops after ``patience`` consecutive iterations without a cost decrease of
    more than ``min_delta`` below the best value, at a zero gradient, or after
    ``max_iters`` updates.
    """
    if x0 is None:
        x = pipeline.random_point(np.random.default_rng(config.seed))
    else:
        x = np.array(x0, dtype=float)
    record = TrainRecord(seed=config.seed)
    bundle = pipeline.bundle(x)
    record.append(bundle, *pipeline.split(x))
    if config.max_iters == 0:
        return record

    m = np.zeros_like(x)
    v = np.zeros_like(x)
    best, wait = bundle.cost, 0
    for k in range(1, config.max_iters + 1):
        grad = cost_gradient(x, pipeline, config)
        if not np.all(np.isfinite(grad)):
            record.stop_reason = "nonfinite"
            break
        if not np.any(grad):
            record.stop_reason = "converged"
            break
        x, m, v = adam_step(x, grad, m, v, k, config)
        bundle = pipeline.bundle(x)
        record.append(bundle, *pipeline.split(x))
        if bundle.cost < best - config.min_delta:
            best, wait = bundle.cost, 0
        else:
            wait += 1
            if wait >= config.patience:
                record.stop_reason = "patience"
                break
    return record


def make_pipeline(
    kind: str = "star",
    n_qubits: int = 3,
    prep_layers: int | None = None,
    povm_layers: int | None = None,
    noise: NoiseModel = NoiseModel(),
    phi=None,
    t: float = 1.0,
    shift: float = 0.01,
    cost_kind: str = "relative",
    povm_kind: str | None = None,
) -> Pipeline:
    """Pipeline with the same ansatz family for probe and POVM unless ``povm_kind`` is given."""
    lp, lm = OPTIMAL_LAYERS.get(kind, (2, 2))
    prep = build_ansatz(kind, n_qubits, lp if prep_layers is None else prep_layers)
    povm = build_ansatz(povm_kind or kind, n_qubits, lm if povm_layers is None else povm_layers)
    enc = EncodingConfig(phi=DEFAULT_PHI if phi is None else tuple(phi), t=t, n_qubits=n_qubits)
    return Pipeline(prep, povm, enc, noise, shift=shift, cost_kind=cost_kind)


def run_seed(seed: int, restart: int) -> int:
    """Independent child seed for ``restart`` of a run seeded with ``seed``."""
    return int(np.random.SeedSequence([seed, restart]).generate_state(1)[0])


def layer_scan(kind: str, n_qubits: int, prep_layers_range, povm_layers_range, config: TrainConfig = TrainConfig(),
               noise: NoiseModel = NoiseModel(), t: float = 1.0, restarts: int = 1, phi=None):
    """Train every (prep, povm) layer pair; returns ``(rows, best_row)``.

    Each row is ``(L_prep, L_povm, best_cost)`` where best_cost is the minimum
    over ``restarts`` seeded runs.
    """
    rows = []
    for lp in prep_layers_range:
        for lm in povm_layers_range:
            pipe = make_pipeline(kind, n_qubits, lp, lm, noise=noise, t=t, cost_kind=config.cost_kind, phi=phi)
            costs = []
            for r in range(restarts):
                cfg = _with_seed(config, run_seed(config.seed, r) if restarts > 1 else config.seed)
                costs.append(train(pipe, cfg).best_cost)
            rows.append((int(lp), int(lm), float(min(costs))))
    best = min(rows, key=lambda r: r[2])
    return rows, best


def _with_seed(config: TrainConfig, seed: int) -> TrainConfig:
    return replace(config, seed=seed)


@dataclass
class BarrenPlateauResult:
    lambdas: np.ndarray
    mean_abs_grad: np.ndarray
    var_grad: np.ndarray
    n_runs: int
    slope: float | None = None
    intercept: float | None = None
    r2: float | None = None


def linear_fit(x, y) -> tuple[float, float, float]:
    """Least-squares line ``y = slope x + intercept`` and its R^2."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), r2


def gradient_samples(kind: str, n_qubits: int, lam: float, n_runs: int, config: TrainConfig = TrainConfig(),
                     t: float = 1.0, layers=None, phi=None) -> np.ndarray:
    """``d C / d theta_1`` at ``n_runs`` uniformly random points.

    Run ``r`` draws its point from ``(config.seed, r)``, so every noise level
    sees the same circuit parameters.
    """
    lp, lm = layers or OPTIMAL_LAYERS[kind]
    pipe = make_pipeline(kind, n_qubits, lp, lm, noise=NoiseModel("dephasing", lam=lam), t=t,
                         cost_kind=config.cost_kind, phi=phi)
    out = np.empty(n_runs)
    for r in range(n_runs):
        x = pipe.random_point(np.random.default_rng([config.seed, r]))
        out[r] = cost_gradient(x, pipe, config, coords=[0])[0]
    return out


def barren_plateau_study(kind: str, n_qubits: int, lambda_grid, n_runs: int = 50, config: TrainConfig = TrainConfig(),
                         t: float = 1.0, layers=None, phi=None) -> BarrenPlateauResult:
    if n_runs < 2:
        raise ValueError("barren plateau statistics need n_runs >= 2")
    lambdas = np.asarray(list(lambda_grid), dtype=float)
    means, variances = [], []
    for lam in lambdas:
        g = gradient_samples(kind, n_qubits, float(lam), n_runs, config, t=t, layers=layers, phi=phi)
        means.append(float(np.mean(np.abs(g))))
        variances.append(float(np.var(g, ddof=1)))
    res = BarrenPlateauResult(lambdas, np.array(means), np.array(variances), n_runs)
    if lambdas.size >= 2 and np.all(res.var_grad > 0):
        res.slope, res.intercept, res.r2 = linear_fit(lambdas, np.log10(res.var_grad))
    return res
